#include "rrglab/steinlab.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "rrglab/error.hpp"
#include "rrglab/parallel.hpp"
#include "rrglab/rng.hpp"
#include "rrglab/spectral.hpp"

namespace rrg {

namespace {

struct Moments {
  double variance, kappa3, kappa4;
};

Moments moments(const std::vector<double>& x) {
  const double m = static_cast<double>(x.size());
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / m;
  double m2 = 0, m3 = 0, m4 = 0;
  for (double v : x) {
    const double c = v - mean;
    const double c2 = c * c;
    m2 += c2;
    m3 += c2 * c;
    m4 += c2 * c2;
  }
  m2 /= m;
  m3 /= m;
  m4 /= m;
  if (!(m2 > 0)) return {0.0, 0.0, 0.0};
  return {m2, m3 / std::pow(m2, 1.5), m4 / (m2 * m2) - 3.0};
}

Interval percentile_interval(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const auto at = [&](double p) {
    const double pos = p * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
  };
  return {at(0.025), at(0.975)};
}

std::vector<double> resample(const std::vector<double>& x, Rng& rng) {
  std::uniform_int_distribution<std::size_t> pick(0, x.size() - 1);
  std::vector<double> out(x.size());
  for (auto& v : out) v = x[pick(rng)];
  return out;
}

}  // namespace

ScalingFit scaling_fit(const std::vector<std::pair<double, double>>& points) {
  if (points.size() < 3) fail(ErrorKind::DegenerateFit, "scaling fit needs at least 3 points");
  std::vector<double> lx, ly;
  for (auto [x, y] : points) {
    if (!(x > 0) || !(y > 0)) fail(ErrorKind::DegenerateFit, "scaling fit needs positive coordinates");
    lx.push_back(std::log(x));
    ly.push_back(std::log(y));
  }
  const double k = static_cast<double>(lx.size());
  const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / k;
  const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / k;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  if (sxx <= 1e-300) fail(ErrorKind::DegenerateFit, "scaling fit needs distinct x values");
  ScalingFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ssr = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    const double r = ly[i] - fit.intercept - fit.slope * lx[i];
    ssr += r * r;
  }
  fit.stderr_slope = std::sqrt(ssr / (k - 2) / sxx);
  return fit;
}

double ks_statistic(std::vector<double> samples) {
  if (samples.empty()) fail(ErrorKind::EmptySample, "KS statistic of an empty sample");
  std::sort(samples.begin(), samples.end());
  const double m = static_cast<double>(samples.size());
  double sup = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double phi = normal_cdf(samples[i]);
    sup = std::max({sup, std::abs(static_cast<double>(i + 1) / m - phi), std::abs(static_cast<double>(i) / m - phi)});
  }
  return sup;
}

CumulantStats cumulants(const std::vector<double>& samples, std::uint64_t seed, int resamples) {
  if (samples.size() < 100) fail(ErrorKind::InvalidArgument, "cumulants need at least 100 samples");
  if (resamples < 1) fail(ErrorKind::InvalidArgument, "bootstrap needs at least one resample");
  const Moments m = moments(samples);
  if (!(m.variance > 0)) fail(ErrorKind::DegenerateSample, "sample variance is zero");

  CumulantStats out;
  out.variance = m.variance;
  out.kappa2 = m.variance - 1.0;
  out.kappa3 = m.kappa3;
  out.kappa4 = m.kappa4;
  out.resamples = resamples;

  Rng rng = make_rng(seed);
  std::vector<double> var, k3, k4;
  for (int b = 0; b < resamples; ++b) {
    const Moments r = moments(resample(samples, rng));
    var.push_back(r.variance);
    k3.push_back(r.kappa3);
    k4.push_back(r.kappa4);
  }
  out.ci_variance = percentile_interval(var);
  out.ci_kappa2 = {out.ci_variance.lo - 1.0, out.ci_variance.hi - 1.0};
  out.ci_kappa3 = percentile_interval(k3);
  out.ci_kappa4 = percentile_interval(k4);
  return out;
}

const std::vector<TestFunction>& builtin_test_functions() {
  // E min(Z^2, 9) by high-precision quadrature
  static const std::vector<TestFunction> family = {
      {"cos", [](double x) { return std::cos(x); }, std::exp(-0.5)},
      {"clip", [](double x) { return std::clamp(x, -3.0, 3.0); }, 0.0},
      {"sqclip", [](double x) { return std::min(x * x, 9.0); }, 0.995007278034453469372814920105},
  };
  return family;
}

std::map<std::string, double> stein_discrepancy(const std::vector<double>& samples,
                                                const std::vector<std::string>& family) {
  if (samples.empty()) fail(ErrorKind::EmptySample, "Stein discrepancy of an empty sample");
  if (family.empty()) fail(ErrorKind::InvalidArgument, "empty test-function family");
  std::map<std::string, double> out;
  for (const auto& name : family) {
    const auto& all = builtin_test_functions();
    const auto it = std::find_if(all.begin(), all.end(), [&](const auto& f) { return f.name == name; });
    if (it == all.end()) fail(ErrorKind::UnknownTestFunction, "unknown test function '" + name + "'");
    // positive and negative parts summed separately in sorted order, so a
    // sample symmetric about 0 cancels exactly for odd h
    std::vector<double> pos, neg;
    for (double x : samples) {
      const double v = it->h(x);
      (v >= 0 ? pos : neg).push_back(std::abs(v));
    }
    std::sort(pos.begin(), pos.end());
    std::sort(neg.begin(), neg.end());
    const double sum = std::accumulate(pos.begin(), pos.end(), 0.0) - std::accumulate(neg.begin(), neg.end(), 0.0);
    out[name] = std::abs(sum / static_cast<double>(samples.size()) - it->gaussian_mean);
  }
  return out;
}

Overlap overlap(const RegularGraph& g, const Direction& q, std::uint64_t seed) {
  if (q.n != g.n()) fail(ErrorKind::InvalidArgument, "direction dimension does not match the graph");
  const auto pair = second_eigenpair(g, seed);
  return {std::sqrt(static_cast<double>(g.n())) * q.coords.dot(pair.u2), pair.degenerate};
}

SampleHook normal_stream_hook() {
  return [](std::size_t, std::uint64_t seed) {
    Rng rng = make_rng(derive_seed(seed, stream::inject));
    return std::normal_distribution<double>()(rng);
  };
}

EnsembleResult run_ensemble(const EnsembleConfig& config) {
  if (config.M < 100) fail(ErrorKind::InvalidArgument, "ensemble needs M >= 100");
  const bool inject = static_cast<bool>(config.hook);
  if (!inject) {
    if (config.d < 1 || config.d >= config.n || static_cast<long>(config.n) * config.d % 2 != 0)
      fail(ErrorKind::InfeasibleDegree,
           "infeasible (n, d) = (" + std::to_string(config.n) + ", " + std::to_string(config.d) + ")");
  }

  EnsembleResult out;
  out.n = config.n;
  out.d = config.d;
  out.M = config.M;
  out.base_seed = config.base_seed;

  std::optional<Direction> q;
  if (!inject) {
    q = build_direction(config.direction.kind, config.n, config.direction.params,
                        derive_seed(config.base_seed, stream::direction));
    out.direction = q->id();
  } else {
    out.direction = "injected";
  }

  std::vector<Overlap> raw(static_cast<std::size_t>(config.M));
  parallel_for(raw.size(), config.workers, [&](std::size_t i) {
    const std::uint64_t seed = derive_seed(config.base_seed, i);
    if (inject) {
      raw[i] = {config.hook(i, seed), false};
      return;
    }
    const auto g = sample_configuration_model(config.n, config.d, derive_seed(seed, stream::graph));
    raw[i] = overlap(g, *q, seed);
  });

  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (raw[i].degenerate) {
      ++out.excluded;
    } else {
      out.samples.push_back(raw[i].x);
      out.sample_index.push_back(i);
    }
  }
  if (out.excluded * 10 > config.M)
    fail(ErrorKind::ExcessDegeneracy, std::to_string(out.excluded) + " of " + std::to_string(config.M) +
                                          " samples have a degenerate second eigenvalue");

  const std::uint64_t boot = derive_seed(config.base_seed, stream::bootstrap);
  out.ks = ks_statistic(out.samples);
  out.stats = cumulants(out.samples, boot);
  Rng rng = make_rng(derive_seed(boot, 1));
  std::vector<double> ks_boot;
  for (int b = 0; b < out.stats.resamples; ++b) ks_boot.push_back(ks_statistic(resample(out.samples, rng)));
  out.ci_ks = percentile_interval(ks_boot);
  std::vector<std::string> names;
  for (const auto& f : builtin_test_functions()) names.push_back(f.name);
  out.stein = stein_discrepancy(out.samples, names);
  return out;
}

BerryEsseenReport berry_esseen_experiment(const BerryEsseenPlan& plan) {
  if (plan.ns.empty() || plan.ds.empty()) fail(ErrorKind::InvalidArgument, "plan needs N and d lists");
  if (plan.M < 500) fail(ErrorKind::InvalidArgument, "Berry-Esseen plan needs M >= 500");

  BerryEsseenReport report;
  std::uint64_t cell = 0;
  for (int n : plan.ns) {
    for (int d : plan.ds) {
      EnsembleConfig config{n, d, plan.M, plan.direction, derive_seed(plan.base_seed, cell++), plan.workers,
                            plan.hook};
      report.cells.push_back(run_ensemble(config));
    }
  }

  // slope fits with a bootstrap over within-cell resamples
  auto fit_axis = [&](const std::string& axis, int fixed, const std::vector<const EnsembleResult*>& cells,
                      std::uint64_t tag) {
    std::vector<std::pair<double, double>> pts;
    for (const auto* c : cells) pts.emplace_back(axis == "N" ? c->n : c->d, c->ks);
    SlopeFit sf;
    sf.axis = axis;
    sf.fixed = fixed;
    sf.fit = scaling_fit(pts);
    Rng rng = make_rng(derive_seed(derive_seed(plan.base_seed, stream::bootstrap), tag));
    std::vector<double> slopes;
    for (int b = 0; b < plan.bootstrap; ++b) {
      for (std::size_t i = 0; i < cells.size(); ++i) pts[i].second = ks_statistic(resample(cells[i]->samples, rng));
      slopes.push_back(scaling_fit(pts).slope);
    }
    sf.ci_slope = slopes.empty() ? Interval{sf.fit.slope, sf.fit.slope} : percentile_interval(slopes);
    report.fits.push_back(sf);
  };

  std::uint64_t tag = 0;
  if (plan.ns.size() >= 3) {
    for (std::size_t j = 0; j < plan.ds.size(); ++j) {
      std::vector<const EnsembleResult*> cells;
      for (std::size_t i = 0; i < plan.ns.size(); ++i) cells.push_back(&report.cells[i * plan.ds.size() + j]);
      fit_axis("N", plan.ds[j], cells, tag++);
    }
  }
  if (plan.ds.size() >= 3) {
    for (std::size_t i = 0; i < plan.ns.size(); ++i) {
      std::vector<const EnsembleResult*> cells;
      for (std::size_t j = 0; j < plan.ds.size(); ++j) cells.push_back(&report.cells[i * plan.ds.size() + j]);
      fit_axis("d", plan.ns[i], cells, 1000 + tag++);
    }
  }

  if (plan.kappa4_table) {
    for (std::size_t i = 0; i < plan.ns.size(); ++i) {
      for (std::size_t j = 0; j < plan.ds.size(); ++j) {
        const int n = plan.ns[i];
        const int d = plan.ds[j];
        const EnsembleResult* src = &report.cells[i * plan.ds.size() + j];
        EnsembleResult extra;
        if (plan.direction.kind != DirectionKind::d_supported || plan.direction.params.support != d) {
          DirectionSpec spec{DirectionKind::d_supported, {d, true}};
          EnsembleConfig config{n, d, plan.M, spec, derive_seed(derive_seed(plan.base_seed, 7777), i * plan.ds.size() + j),
                                plan.workers, plan.hook};
          extra = run_ensemble(config);
          src = &extra;
        }
        const double shrink = 1.0 - static_cast<double>(d) / n;
        report.kappa4.push_back(
            {n, d, src->stats.kappa4, src->stats.ci_kappa4, src->stats.variance, src->stats.variance * shrink});
      }
    }
  }
  return report;
}

}  // namespace rrg
