#include "rrglab/harness.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

#include "rrglab/error.hpp"
#include "rrglab/interpolate.hpp"
#include "rrglab/locallaw.hpp"
#include "rrglab/malliavin.hpp"
#include "rrglab/parallel.hpp"
#include "rrglab/rng.hpp"
#include "rrglab/spectral.hpp"

namespace rrg {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

constexpr std::string_view kKinds[] = {"sample", "spectrum", "clt", "locallaw", "interpolate", "malliavin", "scaling"};

std::string num(double x) {
  std::ostringstream out;
  out << std::setprecision(17) << x;
  return out.str();
}

// fixed two decimals for SVG coordinates
std::string px(double x) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(2) << x;
  return out.str();
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = s.find(',', start);
    out.emplace_back(trim(s.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

template <class T>
bool parse_number(std::string_view s, T& out) {
  s = trim(s);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size() && !s.empty();
}

std::string join(const std::vector<int>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
  return out;
}

std::string join(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + num(v[i]);
  return out;
}

struct RawValue {
  std::string value;
  int line = 0;  // 0 for command-line overrides
};

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys{
      "experiment", "N",      "d",          "M",           "seed",      "workers",    "output",
      "direction",  "support", "project",   "inject",      "E",         "eta",        "t",
      "coupling_t", "s_points", "s_grid",   "profiles",    "check_edges", "variance_M", "bootstrap",
      "kappa4_table"};
  return keys;
}

[[noreturn]] void bad_value(const std::string& key, const RawValue& raw, const std::string& why) {
  const std::string where = raw.line > 0 ? "line " + std::to_string(raw.line) : "override";
  fail(ErrorKind::ParseError, where + ": " + key + " = '" + raw.value + "': " + why);
}

int default_samples(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::sample: return 10;
    case ExperimentKind::spectrum: return 100;
    case ExperimentKind::clt: return 2000;
    case ExperimentKind::locallaw: return 30;
    case ExperimentKind::interpolate: return 100;
    case ExperimentKind::malliavin: return 50;
    case ExperimentKind::scaling: return 2000;
  }
  return 0;
}

}  // namespace

std::string_view to_string(ExperimentKind kind) { return kKinds[static_cast<int>(kind)]; }

ExperimentKind parse_experiment_kind(std::string_view name) {
  for (int i = 0; i < 7; ++i)
    if (kKinds[i] == name) return static_cast<ExperimentKind>(i);
  fail(ErrorKind::ValidationError, "unknown experiment '" + std::string(name) + "'");
}

std::map<std::string, std::string> ExperimentSpec::echo() const {
  return {{"experiment", std::string(to_string(experiment))},
          {"N", join(ns)},
          {"d", join(ds)},
          {"M", std::to_string(M)},
          {"seed", std::to_string(base_seed)},
          {"workers", std::to_string(workers)},
          {"output", output_dir},
          {"direction", std::string(to_string(direction.kind))},
          {"support", std::to_string(direction.params.support)},
          {"project", direction.params.project ? "true" : "false"},
          {"inject", inject},
          {"E", join(energies)},
          {"eta", join(etas)},
          {"t", join(ts)},
          {"coupling_t", num(coupling_t)},
          {"s_points", std::to_string(s_points)},
          {"s_grid", s_grid},
          {"profiles", std::to_string(profiles)},
          {"check_edges", std::to_string(check_edges)},
          {"variance_M", std::to_string(variance_M)},
          {"bootstrap", std::to_string(bootstrap)},
          {"kappa4_table", kappa4_table ? "true" : "false"}};
}

ExperimentSpec parse_spec(std::string_view text, const std::map<std::string, std::string>& overrides) {
  std::map<std::string, RawValue> raw;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto end = std::min(text.find('\n', pos), text.size());
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = "line " + std::to_string(line_no) + ": ";
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3) fail(ErrorKind::ParseError, where + "malformed section header");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) fail(ErrorKind::ParseError, where + "expected key = value");
    const std::string key(trim(line.substr(0, eq)));
    const std::string value(trim(line.substr(eq + 1)));
    if (!known_keys().count(key)) fail(ErrorKind::ParseError, where + "unknown key '" + key + "'");
    if (raw.count(key)) fail(ErrorKind::ParseError, where + "duplicate key '" + key + "'");
    if (value.empty()) fail(ErrorKind::ParseError, where + "empty value for '" + key + "'");
    raw[key] = {value, line_no};
  }
  for (const auto& [key, value] : overrides) {
    if (!known_keys().count(key)) fail(ErrorKind::ParseError, "override: unknown key '" + key + "'");
    if (key == "experiment" && raw.count(key) && raw[key].value != value)
      fail(ErrorKind::ValidationError, "config is for experiment '" + raw[key].value + "', not '" + value + "'");
    raw[key] = {value, 0};
  }

  auto get_int = [&](const std::string& key, int& out) {
    if (!raw.count(key)) return;
    if (!parse_number(raw[key].value, out)) bad_value(key, raw[key], "not an integer");
  };
  auto get_double = [&](const std::string& key, double& out) {
    if (!raw.count(key)) return;
    if (!parse_number(raw[key].value, out)) bad_value(key, raw[key], "not a number");
  };
  auto get_bool = [&](const std::string& key, bool& out) {
    if (!raw.count(key)) return;
    if (raw[key].value == "true") out = true;
    else if (raw[key].value == "false") out = false;
    else bad_value(key, raw[key], "expected true or false");
  };
  auto get_ints = [&](const std::string& key, std::vector<int>& out) {
    if (!raw.count(key)) return;
    out.clear();
    for (const auto& item : split_list(raw[key].value)) {
      int v = 0;
      if (!parse_number(item, v)) bad_value(key, raw[key], "not an integer list");
      out.push_back(v);
    }
  };
  auto get_doubles = [&](const std::string& key, std::vector<double>& out, bool allow_auto) {
    if (!raw.count(key)) return;
    out.clear();
    for (const auto& item : split_list(raw[key].value)) {
      double v = 0;
      if (allow_auto && item == "auto") v = 0.0;
      else if (!parse_number(item, v)) bad_value(key, raw[key], "not a number list");
      out.push_back(v);
    }
  };

  ExperimentSpec spec;
  if (!raw.count("experiment")) fail(ErrorKind::ValidationError, "missing experiment");
  spec.experiment = parse_experiment_kind(raw["experiment"].value);
  if (!raw.count("seed")) fail(ErrorKind::ValidationError, "missing seed (no wall-clock default)");
  if (!parse_number(raw["seed"].value, spec.base_seed)) bad_value("seed", raw["seed"], "not an unsigned 64-bit integer");

  spec.M = default_samples(spec.experiment);
  get_ints("N", spec.ns);
  get_ints("d", spec.ds);
  get_int("M", spec.M);
  get_int("workers", spec.workers);
  if (raw.count("output")) spec.output_dir = raw["output"].value;
  if (raw.count("direction")) {
    try {
      spec.direction.kind = parse_direction_kind(raw["direction"].value);
    } catch (const Error&) {
      bad_value("direction", raw["direction"], "unknown direction kind");
    }
  }
  get_int("support", spec.direction.params.support);
  get_bool("project", spec.direction.params.project);
  if (raw.count("inject")) {
    spec.inject = raw["inject"].value;
    if (spec.inject != "none" && spec.inject != "normal") bad_value("inject", raw["inject"], "expected none or normal");
  }
  get_doubles("E", spec.energies, false);
  get_doubles("eta", spec.etas, true);
  get_doubles("t", spec.ts, false);
  if (raw.count("coupling_t") && raw["coupling_t"].value == "auto") spec.coupling_t = 0.0;
  else get_double("coupling_t", spec.coupling_t);
  get_int("s_points", spec.s_points);
  if (raw.count("s_grid")) {
    spec.s_grid = raw["s_grid"].value;
    if (spec.s_grid != "uniform" && spec.s_grid != "log") bad_value("s_grid", raw["s_grid"], "expected uniform or log");
  }
  get_int("profiles", spec.profiles);
  get_int("check_edges", spec.check_edges);
  get_int("variance_M", spec.variance_M);
  get_int("bootstrap", spec.bootstrap);
  get_bool("kappa4_table", spec.kappa4_table);

  // invariants
  if (spec.ns.empty() || spec.ds.empty()) fail(ErrorKind::ValidationError, "N and d lists are required");
  for (int n : spec.ns)
    for (int d : spec.ds) {
      const std::string cell = "(N=" + std::to_string(n) + ", d=" + std::to_string(d) + ")";
      if (n < 2 || d < 1) fail(ErrorKind::ValidationError, cell + ": need N >= 2 and d >= 1");
      if (d >= n) fail(ErrorKind::ValidationError, cell + ": d must be < N");
      if ((static_cast<long>(n) * d) % 2 != 0) fail(ErrorKind::ValidationError, cell + ": N*d must be even");
    }
  if (spec.M < 1) fail(ErrorKind::ValidationError, "M must be positive");
  if (spec.workers < 1) fail(ErrorKind::ValidationError, "workers must be positive");
  for (double eta : spec.etas)
    if (eta < 0) fail(ErrorKind::ValidationError, "eta must be positive (or auto)");
  if (spec.energies.empty() || spec.etas.empty()) fail(ErrorKind::ValidationError, "empty E or eta list");
  if (spec.s_points < 2) fail(ErrorKind::ValidationError, "s_points must be >= 2");
  if (spec.profiles < 0 || spec.check_edges < 0 || spec.variance_M < 0)
    fail(ErrorKind::ValidationError, "profiles, check_edges and variance_M must be non-negative");
  if (spec.bootstrap < 1) fail(ErrorKind::ValidationError, "bootstrap must be positive");
  return spec;
}

// ---------------------------------------------------------------- tables / SVG

int Table::column(std::string_view name) const {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i] == name) return static_cast<int>(i);
  return -1;
}

std::string Table::to_csv() const {
  std::string out;
  for (std::size_t i = 0; i < columns.size(); ++i) out += (i ? "," : "") + columns[i];
  out += '\n';
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + num(row[i]);
    out += '\n';
  }
  return out;
}

Table histogram_table(const std::vector<double>& samples, int bins, double lo, double hi) {
  if (bins < 1 || !(hi > lo)) fail(ErrorKind::InvalidArgument, "histogram needs bins >= 1 and hi > lo");
  std::vector<double> counts(bins, 0.0);
  const double width = (hi - lo) / bins;
  for (double x : samples) {
    const int b = std::clamp(static_cast<int>(std::floor((x - lo) / width)), 0, bins - 1);
    counts[b] += 1;
  }
  Table t{{"bin_lo", "bin_hi", "count", "normal_expected"}, {}};
  const double m = static_cast<double>(samples.size());
  for (int b = 0; b < bins; ++b) {
    const double a = lo + b * width, c = b + 1 == bins ? hi : lo + (b + 1) * width;
    t.rows.push_back({a, c, counts[b], m * (normal_cdf(c) - normal_cdf(a))});
  }
  return t;
}

namespace {

constexpr double kW = 640, kH = 420, kMargin = 56;

struct Frame {
  double x0, x1, y0, y1;
  double sx(double x) const { return kMargin + (x - x0) / (x1 - x0) * (kW - 2 * kMargin); }
  double sy(double y) const { return kH - kMargin - (y - y0) / (y1 - y0) * (kH - 2 * kMargin); }
};

Frame padded(double x0, double x1, double y0, double y1) {
  if (!(x1 > x0)) x0 -= 0.5, x1 += 0.5;
  if (!(y1 > y0)) y0 -= 0.5, y1 += 0.5;
  return {x0, x1, y0, y1};
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else if (c == '&') out += "&amp;";
    else out += c;
  }
  return out;
}

std::string header(const std::string& title, const std::string& meta) {
  std::string out = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + px(kW) + "\" height=\"" + px(kH) + "\">\n";
  if (!meta.empty()) out += "<!-- " + meta + " -->\n";
  out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!title.empty())
    out += "<text x=\"" + px(kW / 2) + "\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">" + escape(title) + "</text>\n";
  return out;
}

std::string axes(const Frame& f, const std::string& xlabel, const std::string& ylabel) {
  std::string out;
  out += "<line x1=\"" + px(kMargin) + "\" y1=\"" + px(kH - kMargin) + "\" x2=\"" + px(kW - kMargin) + "\" y2=\"" +
         px(kH - kMargin) + "\" stroke=\"black\"/>\n";
  out += "<line x1=\"" + px(kMargin) + "\" y1=\"" + px(kMargin) + "\" x2=\"" + px(kMargin) + "\" y2=\"" +
         px(kH - kMargin) + "\" stroke=\"black\"/>\n";
  auto label = [&](double x, double y, const std::string& text, const char* anchor) {
    out += "<text x=\"" + px(x) + "\" y=\"" + px(y) + "\" text-anchor=\"" + anchor + "\" font-size=\"11\">" + escape(text) +
           "</text>\n";
  };
  label(kMargin, kH - kMargin + 16, num(f.x0), "start");
  label(kW - kMargin, kH - kMargin + 16, num(f.x1), "end");
  label(kMargin - 4, kH - kMargin, num(f.y0), "end");
  label(kMargin - 4, kMargin + 4, num(f.y1), "end");
  label(kW / 2, kH - 16, xlabel, "middle");
  label(16, kH / 2, ylabel, "start");
  return out;
}

std::string polyline(const std::vector<std::pair<double, double>>& pts, const char* color, const char* cls) {
  std::string out = std::string("<polyline class=\"") + cls + "\" fill=\"none\" stroke=\"" + color + "\" points=\"";
  for (std::size_t i = 0; i < pts.size(); ++i) out += (i ? " " : "") + px(pts[i].first) + "," + px(pts[i].second);
  return out + "\"/>\n";
}

void require_columns(const Table& t, std::initializer_list<const char*> names) {
  for (const char* name : names)
    if (t.column(name) < 0) fail(ErrorKind::BadColumns, std::string("missing column '") + name + "'");
  if (t.rows.empty()) fail(ErrorKind::BadColumns, "empty table");
  for (const auto& row : t.rows)
    if (row.size() != t.columns.size()) fail(ErrorKind::BadColumns, "row width does not match the header");
}

}  // namespace

std::string render_plot(const Table& data, PlotKind kind, const std::string& title) {
  switch (kind) {
    case PlotKind::loglog_scatter_with_fit: {
      require_columns(data, {"x", "y"});
      const int cx = data.column("x"), cy = data.column("y");
      std::vector<double> lx, ly;
      for (const auto& row : data.rows) {
        if (!(row[cx] > 0 && row[cy] > 0)) fail(ErrorKind::BadColumns, "log-log plot needs positive x and y");
        lx.push_back(std::log10(row[cx]));
        ly.push_back(std::log10(row[cy]));
      }
      // least squares in log-log coordinates (base 10; the slope is base free)
      const double m = static_cast<double>(lx.size());
      const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / m;
      const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / m;
      double sxx = 0, sxy = 0;
      for (std::size_t i = 0; i < lx.size(); ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
      }
      const bool fitted = sxx > 0;
      const double slope = fitted ? sxy / sxx : 0.0;
      const double intercept = my - slope * mx;
      const std::string meta = fitted ? "fit slope=" + num(slope) + " intercept_log10=" + num(intercept) +
                                            " points=" + std::to_string(lx.size())
                                      : "fit none (single distinct x)";
      const Frame f = padded(*std::min_element(lx.begin(), lx.end()), *std::max_element(lx.begin(), lx.end()),
                             *std::min_element(ly.begin(), ly.end()), *std::max_element(ly.begin(), ly.end()));
      std::string out = header(title, meta) + axes(f, "log10 x", "log10 y");
      for (std::size_t i = 0; i < lx.size(); ++i)
        out += "<circle cx=\"" + px(f.sx(lx[i])) + "\" cy=\"" + px(f.sy(ly[i])) + "\" r=\"3\" fill=\"steelblue\"/>\n";
      if (fitted)
        out += polyline({{f.sx(f.x0), f.sy(intercept + slope * f.x0)}, {f.sx(f.x1), f.sy(intercept + slope * f.x1)}},
                        "firebrick", "fit");
      return out + "</svg>\n";
    }
    case PlotKind::histogram_vs_normal: {
      require_columns(data, {"bin_lo", "bin_hi", "count"});
      const int clo = data.column("bin_lo"), chi = data.column("bin_hi"), cc = data.column("count");
      double total = 0;
      for (const auto& row : data.rows) total += row[cc];
      if (!(total > 0)) fail(ErrorKind::BadColumns, "histogram has no counts");
      double ymax = 0;
      std::vector<double> density, curve;
      for (const auto& row : data.rows) {
        const double width = row[chi] - row[clo];
        if (!(width > 0)) fail(ErrorKind::BadColumns, "histogram bins need bin_hi > bin_lo");
        density.push_back(row[cc] / (total * width));
        curve.push_back((normal_cdf(row[chi]) - normal_cdf(row[clo])) / width);
        ymax = std::max({ymax, density.back(), curve.back()});
      }
      const Frame f = padded(data.rows.front()[clo], data.rows.back()[chi], 0.0, ymax * 1.05);
      std::string out = header(title, "histogram bins=" + std::to_string(data.rows.size()) + " total=" + num(total)) +
                        axes(f, "x", "density");
      std::vector<std::pair<double, double>> pts;
      for (std::size_t i = 0; i < data.rows.size(); ++i) {
        const auto& row = data.rows[i];
        out += "<rect class=\"bin\" data-lo=\"" + num(row[clo]) + "\" data-hi=\"" + num(row[chi]) + "\" data-count=\"" +
               num(row[cc]) + "\" x=\"" + px(f.sx(row[clo])) + "\" y=\"" + px(f.sy(density[i])) + "\" width=\"" +
               px(f.sx(row[chi]) - f.sx(row[clo])) + "\" height=\"" + px(f.sy(0) - f.sy(density[i])) +
               "\" fill=\"lightsteelblue\" stroke=\"white\"/>\n";
        pts.emplace_back(f.sx(0.5 * (row[clo] + row[chi])), f.sy(curve[i]));
      }
      return out + polyline(pts, "firebrick", "normal") + "</svg>\n";
    }
    case PlotKind::error_vs_s: {
      require_columns(data, {"s", "err"});
      const int cs = data.column("s"), ce = data.column("err");
      auto rows = data.rows;
      std::stable_sort(rows.begin(), rows.end(), [&](const auto& a, const auto& b) { return a[cs] < b[cs]; });
      double emax = 0;
      for (const auto& row : rows) emax = std::max(emax, row[ce]);
      const Frame f = padded(rows.front()[cs], rows.back()[cs], 0.0, emax * 1.05);
      std::vector<std::pair<double, double>> pts;
      std::string out = header(title, "points=" + std::to_string(rows.size())) + axes(f, "s", "err");
      for (const auto& row : rows) {
        pts.emplace_back(f.sx(row[cs]), f.sy(row[ce]));
        out += "<circle cx=\"" + px(pts.back().first) + "\" cy=\"" + px(pts.back().second) +
               "\" r=\"2.5\" fill=\"steelblue\"/>\n";
      }
      return out + polyline(pts, "steelblue", "err") + "</svg>\n";
    }
  }
  fail(ErrorKind::BadColumns, "unknown plot kind");
}

void emit_plot(const Table& data, PlotKind kind, const std::string& path, const std::string& title) {
  const std::string svg = render_plot(data, kind, title);
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << svg)) fail(ErrorKind::IoError, "cannot write " + path);
}

// ---------------------------------------------------------------- run

namespace {

class ArtifactWriter {
 public:
  explicit ArtifactWriter(fs::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec || !fs::is_directory(dir_)) fail(ErrorKind::IoError, "cannot create output directory " + dir_.string());
  }

  void write(const std::string& name, const std::string& content) {
    const fs::path partial = dir_ / (name + ".partial");
    std::ofstream out(partial, std::ios::binary);
    if (!out || !(out << content) || !(out.flush())) fail(ErrorKind::IoError, "cannot write " + partial.string());
    names_.push_back(name);
  }

  std::vector<std::string> commit() {
    for (const auto& name : names_) {
      std::error_code ec;
      fs::rename(dir_ / (name + ".partial"), dir_ / name, ec);
      if (ec) fail(ErrorKind::IoError, "cannot rename " + name + ".partial: " + ec.message());
    }
    return names_;
  }

  const fs::path& dir() const { return dir_; }

 private:
  fs::path dir_;
  std::vector<std::string> names_;
};

std::string tag(int n, int d) { return "n" + std::to_string(n) + "_d" + std::to_string(d); }

json interval(const Interval& i) { return json::array({i.lo, i.hi}); }

json cumulant_json(const CumulantStats& s) {
  return {{"variance", s.variance}, {"ci_variance", interval(s.ci_variance)}, {"kappa2", s.kappa2},
          {"ci_kappa2", interval(s.ci_kappa2)}, {"kappa3", s.kappa3}, {"ci_kappa3", interval(s.ci_kappa3)},
          {"kappa4", s.kappa4}, {"ci_kappa4", interval(s.ci_kappa4)}, {"resamples", s.resamples}};
}

struct Context {
  const ExperimentSpec& spec;
  const RunOptions& options;
  ArtifactWriter& out;
  std::vector<CellSummary>& cells;
  json summary = json::object();

  void before(std::size_t cell) const {
    if (options.before_cell) options.before_cell(cell);
  }

  std::vector<std::pair<int, int>> grid() const {
    std::vector<std::pair<int, int>> g;
    for (int n : spec.ns)
      for (int d : spec.ds) g.emplace_back(n, d);
    return g;
  }

  DirectionSpec direction_for(int d) const {
    DirectionSpec q = spec.direction;
    if (q.kind == DirectionKind::d_supported && q.params.support == 0) q.params.support = d;
    return q;
  }

  SampleHook hook() const { return spec.inject == "normal" ? normal_stream_hook() : SampleHook{}; }
};

void run_sample(Context& ctx) {
  json cells = json::array();
  const auto grid = ctx.grid();
  for (std::size_t c = 0; c < grid.size(); ++c) {
    ctx.before(c);
    const auto [n, d] = grid[c];
    const std::uint64_t cell_seed = derive_seed(ctx.spec.base_seed, c);
    std::vector<RegularGraph> graphs(ctx.spec.M);
    parallel_for(graphs.size(), ctx.spec.workers,
                 [&](std::size_t i) { graphs[i] = sample_configuration_model(n, d, derive_seed(cell_seed, i)); });
    std::string csv = "n,d,sample,seed,u,v\n";
    for (std::size_t i = 0; i < graphs.size(); ++i)
      for (const Edge e : graphs[i].edges())
        csv += std::to_string(n) + ',' + std::to_string(d) + ',' + std::to_string(i) + ',' +
               std::to_string(derive_seed(cell_seed, i)) + ',' + std::to_string(e.u) + ',' + std::to_string(e.v) + '\n';
    ctx.out.write("graphs_" + tag(n, d) + ".csv", csv);
    SamplerOptions defaults;
    const auto mode = resolve_sampler_mode(d, defaults);
    cells.push_back({{"n", n}, {"d", d}, {"samples", ctx.spec.M},
                     {"sampler", mode == SamplerMode::exact_rejection ? "exact-rejection" : "pairing+switching"}});
    ctx.cells.push_back({n, d, ctx.spec.M, 0});
  }
  ctx.summary["cells"] = cells;
}

void run_spectrum(Context& ctx) {
  json cells = json::array();
  const auto grid = ctx.grid();
  for (std::size_t c = 0; c < grid.size(); ++c) {
    ctx.before(c);
    const auto [n, d] = grid[c];
    const std::uint64_t cell_seed = derive_seed(ctx.spec.base_seed, c);
    std::vector<SecondEigenpair> pairs(ctx.spec.M);
    parallel_for(pairs.size(), ctx.spec.workers, [&](std::size_t i) {
      const std::uint64_t seed = derive_seed(cell_seed, i);
      SecondEigenpairOptions options;
      options.randomize_sign = false;
      pairs[i] = second_eigenpair(sample_configuration_model(n, d, derive_seed(seed, stream::graph)),
                                  derive_seed(seed, stream::solver), options);
    });
    std::string csv = "n,d,sample,seed,lambda1,lambda2,lambda3,degenerate,matvecs\n";
    double mean2 = 0;
    int degenerate = 0;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      csv += std::to_string(n) + ',' + std::to_string(d) + ',' + std::to_string(i) + ',' +
             std::to_string(derive_seed(cell_seed, i)) + ',' + num(std::sqrt(static_cast<double>(d))) + ',' +
             num(pairs[i].lambda2) + ',' + num(pairs[i].lambda3) + ',' + (pairs[i].degenerate ? "1" : "0") + ',' +
             std::to_string(pairs[i].matvecs) + '\n';
      mean2 += pairs[i].lambda2;
      degenerate += pairs[i].degenerate;
    }
    ctx.out.write("spectrum_" + tag(n, d) + ".csv", csv);
    cells.push_back({{"n", n}, {"d", d}, {"samples", ctx.spec.M}, {"mean_lambda2", mean2 / ctx.spec.M},
                     {"ramanujan_bound", 2 * std::sqrt(d - 1.0) / std::sqrt(static_cast<double>(d))},
                     {"degenerate", degenerate}});
    ctx.cells.push_back({n, d, ctx.spec.M, 0});
  }
  ctx.summary["cells"] = cells;
}

json ensemble_json(const EnsembleResult& r) {
  json stein = json::object();
  for (const auto& [name, value] : r.stein) stein[name] = value;
  return {{"n", r.n}, {"d", r.d}, {"M", r.M}, {"direction", r.direction}, {"seed", r.base_seed},
          {"samples", r.samples.size()}, {"excluded", r.excluded}, {"ks", r.ks}, {"ci_ks", interval(r.ci_ks)},
          {"cumulants", cumulant_json(r.stats)}, {"stein", stein}};
}

void write_ensemble_files(Context& ctx, const EnsembleResult& r) {
  std::string csv = "n,d,sample_index,x\n";
  for (std::size_t i = 0; i < r.samples.size(); ++i)
    csv += std::to_string(r.n) + ',' + std::to_string(r.d) + ',' + std::to_string(r.sample_index[i]) + ',' +
           num(r.samples[i]) + '\n';
  ctx.out.write("samples_" + tag(r.n, r.d) + ".csv", csv);
  const Table hist = histogram_table(r.samples);
  ctx.out.write("histogram_" + tag(r.n, r.d) + ".csv", hist.to_csv());
  ctx.out.write("histogram_" + tag(r.n, r.d) + ".svg",
                render_plot(hist, PlotKind::histogram_vs_normal, "overlap N=" + std::to_string(r.n) + " d=" + std::to_string(r.d)));
}

void run_clt(Context& ctx) {
  json cells = json::array();
  const auto grid = ctx.grid();
  for (std::size_t c = 0; c < grid.size(); ++c) {
    ctx.before(c);
    const auto [n, d] = grid[c];
    EnsembleConfig config{n, d, ctx.spec.M, ctx.direction_for(d), derive_seed(ctx.spec.base_seed, c), ctx.spec.workers,
                          ctx.hook()};
    const EnsembleResult r = run_ensemble(config);
    write_ensemble_files(ctx, r);
    cells.push_back(ensemble_json(r));
    ctx.cells.push_back({n, d, static_cast<int>(r.samples.size()), r.excluded});
  }
  ctx.summary["cells"] = cells;
}

void run_locallaw(Context& ctx) {
  std::vector<ScanCell> grid;
  for (int n : ctx.spec.ns)
    for (int d : ctx.spec.ds)
      for (double e : ctx.spec.energies)
        for (double eta : ctx.spec.etas) grid.push_back({n, d, {e, eta > 0 ? eta : std::pow(n, -0.5)}});
  ctx.before(0);
  const VarianceScan scan = ensemble_variance_scan(grid, ctx.spec.M, ctx.spec.base_seed, ctx.spec.workers);
  ctx.out.write("locallaw.csv", scan_csv(scan));

  Table cells_table{{"n", "d", "E", "eta", "samples", "var_re", "var_im", "mean_err", "median_err"}, {}};
  for (const auto& s : scan.cells) {
    cells_table.rows.push_back({static_cast<double>(s.cell.n), static_cast<double>(s.cell.d), s.cell.z.E, s.cell.z.eta,
                                static_cast<double>(s.samples), s.var_re, s.var_im, s.mean_err, s.median_err});
    ctx.cells.push_back({s.cell.n, s.cell.d, s.samples, 0});
  }
  ctx.out.write("locallaw_cells.csv", cells_table.to_csv());

  json fits = json::array();
  for (const auto& f : scan.fits)
    fits.push_back({{"d", f.d}, {"component", f.component}, {"slope", f.slope}, {"intercept", f.intercept},
                    {"stderr_slope", f.stderr_slope}});
  ctx.summary["fits"] = fits;

  if (std::set<int>(ctx.spec.ns.begin(), ctx.spec.ns.end()).size() >= 2) {
    Table plot{{"x", "y"}, {}};
    for (const auto& s : scan.cells)
      if (s.cell.d == ctx.spec.ds.front() && s.cell.z.E == grid.front().z.E && s.var_re > 0)
        plot.rows.push_back({static_cast<double>(s.cell.n), s.var_re});
    if (plot.rows.size() >= 2)
      ctx.out.write("variance_vs_n.svg", render_plot(plot, PlotKind::loglog_scatter_with_fit,
                                                     "Var Re<q,Gq> vs N, d=" + std::to_string(ctx.spec.ds.front())));
  }
}

void run_interpolate(Context& ctx) {
  json cells = json::array();
  const auto grid = ctx.grid();
  for (std::size_t c = 0; c < grid.size(); ++c) {
    ctx.before(c);
    const auto [n, d] = grid[c];
    const std::uint64_t cell_seed = derive_seed(ctx.spec.base_seed, c);
    json cell{{"n", n}, {"d", d}};

    if (!ctx.spec.ts.empty()) {
      const auto stats = delta_norm_stats(n, d, ctx.spec.ts, ctx.spec.M, derive_seed(cell_seed, 0), ctx.spec.workers);
      Table t{{"n", "d", "t", "samples", "mean_sq", "ci_lo", "ci_hi", "predictor"}, {}};
      for (const auto& row : stats.rows)
        t.rows.push_back({static_cast<double>(n), static_cast<double>(d), row.t, static_cast<double>(row.samples),
                          row.mean_sq, row.ci.lo, row.ci.hi, row.predictor});
      ctx.out.write("delta_norm_" + tag(n, d) + ".csv", t.to_csv());
      cell["delta_norm"] = {{"fit_coefficient", stats.fit_coefficient}, {"fit_stderr", stats.fit_stderr},
                            {"oracle_deviation", stats.oracle_deviation}};
    }

    if (ctx.spec.profiles > 0) {
      const double t = ctx.spec.coupling_t > 0 ? ctx.spec.coupling_t : std::pow(n, -1.0 / 3.0);
      const double eta = ctx.spec.etas.front() > 0 ? ctx.spec.etas.front() : std::pow(n, -0.5);
      const ComplexEnergy z{ctx.spec.energies.front(), eta};
      std::vector<double> s_grid;
      if (ctx.spec.s_grid == "log") {
        s_grid = log_s_grid(ctx.spec.s_points);
      } else {
        for (int i = 0; i < ctx.spec.s_points; ++i) s_grid.push_back(static_cast<double>(i) / (ctx.spec.s_points - 1));
      }
      const auto ensemble = coupling_profile_ensemble(n, d, t, z, s_grid, ctx.spec.profiles, derive_seed(cell_seed, 1),
                                                      ctx.spec.workers);
      ctx.out.write("profiles_" + tag(n, d) + ".csv", profile_csv(ensemble.profiles));
      Table curve{{"s", "err"}, {}};
      for (std::size_t k = 0; k < s_grid.size(); ++k) {
        std::vector<double> errs;
        for (const auto& p : ensemble.profiles) errs.push_back(p.points[k].err);
        std::nth_element(errs.begin(), errs.begin() + errs.size() / 2, errs.end());
        curve.rows.push_back({s_grid[k], errs[errs.size() / 2]});
      }
      ctx.out.write("error_vs_s_" + tag(n, d) + ".svg",
                    render_plot(curve, PlotKind::error_vs_s, "median err(s), N=" + std::to_string(n) + " d=" + std::to_string(d)));
      cell["coupling"] = {{"t", t}, {"E", z.E}, {"eta", z.eta}, {"profiles", ctx.spec.profiles},
                          {"median_argmin_s", ensemble.median_argmin_s}, {"optimal_s", ensemble.optimal},
                          {"discontinuous", ensemble.discontinuous}};
    }
    cells.push_back(cell);
    ctx.cells.push_back({n, d, ctx.spec.M, 0});
  }
  ctx.summary["cells"] = cells;
}

void run_malliavin(Context& ctx) {
  json cells = json::array();
  const auto grid = ctx.grid();
  std::map<int, std::vector<std::pair<double, double>>> energy_by_d;
  for (std::size_t c = 0; c < grid.size(); ++c) {
    ctx.before(c);
    const auto [n, d] = grid[c];
    const std::uint64_t cell_seed = derive_seed(ctx.spec.base_seed, c);
    const DirectionSpec qspec = ctx.direction_for(d);
    const Direction q = build_direction(qspec.kind, n, qspec.params, derive_seed(cell_seed, stream::direction));

    struct Row {
      bool degenerate = false;
      DerivativeEnergy energy;
    };
    std::vector<Row> rows(ctx.spec.M);
    parallel_for(rows.size(), ctx.spec.workers, [&](std::size_t i) {
      const std::uint64_t seed = derive_seed(cell_seed, i);
      try {
        rows[i].energy = overlap_derivative_energy(sample_configuration_model(n, d, derive_seed(seed, stream::graph)), q,
                                                   ctx.spec.check_edges, derive_seed(seed, stream::solver));
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::DegenerateEigenvalue) throw;
        rows[i].degenerate = true;
      }
    });

    std::string csv = "n,d,sample,seed,energy,checked_edges,max_relative_deviation\n";
    std::vector<double> energies;
    int excluded = 0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].degenerate) {
        ++excluded;
        continue;
      }
      const auto& e = rows[i].energy;
      csv += std::to_string(n) + ',' + std::to_string(d) + ',' + std::to_string(i) + ',' +
             std::to_string(derive_seed(cell_seed, i)) + ',' + num(e.energy) + ',' + std::to_string(e.checks.size()) +
             ',' + num(e.max_relative_deviation) + '\n';
      energies.push_back(e.energy);
    }
    ctx.out.write("energy_" + tag(n, d) + ".csv", csv);
    for (std::size_t i = 0; i < rows.size(); ++i)
      if (!rows[i].degenerate) {
        ctx.out.write("derivatives_" + tag(n, d) + ".csv", derivative_csv(n, d, rows[i].energy.per_edge, "perturbative"));
        break;
      }

    json cell{{"n", n}, {"d", d}, {"direction", q.id()}, {"samples", energies.size()}, {"excluded", excluded}};
    if (!energies.empty()) {
      const double m = static_cast<double>(energies.size());
      const double mean = std::accumulate(energies.begin(), energies.end(), 0.0) / m;
      double ss = 0;
      for (double e : energies) ss += (e - mean) * (e - mean);
      const double se = energies.size() > 1 ? std::sqrt(ss / (m - 1) / m) : 0.0;
      cell["mean_energy"] = mean;
      cell["ci_mean_energy"] = json::array({mean - 1.96 * se, mean + 1.96 * se});
      if (mean > 0) energy_by_d[d].emplace_back(n, mean);
    }
    if (ctx.spec.variance_M > 0) {
      const auto v = variance_decomposition_check(n, d, ctx.spec.variance_M, qspec, derive_seed(cell_seed, 2),
                                                  ctx.spec.workers, ctx.hook());
      cell["variance_decomposition"] = {{"M", v.M}, {"variance", v.variance}, {"reconstructed", v.reconstructed},
                                        {"abs_deviation", v.abs_deviation}, {"ci_abs_deviation", interval(v.ci_abs_deviation)},
                                        {"bound", v.bound}, {"within_bound", v.within_bound},
                                        {"normalized_kappa2", v.normalized_kappa2}, {"ci_kappa2", interval(v.ci_kappa2)},
                                        {"excluded", v.excluded}};
    }
    cells.push_back(cell);
    ctx.cells.push_back({n, d, static_cast<int>(energies.size()), excluded});
  }
  ctx.summary["cells"] = cells;

  json fits = json::array();
  for (const auto& [d, points] : energy_by_d) {
    if (points.size() < 2) continue;
    Table plot{{"x", "y"}, {}};
    for (const auto& [n, e] : points) plot.rows.push_back({n, e});
    const std::string svg = render_plot(plot, PlotKind::loglog_scatter_with_fit, "derivative energy vs N, d=" + std::to_string(d));
    ctx.out.write("energy_vs_n_d" + std::to_string(d) + ".svg", svg);
    if (points.size() >= 3) {
      const auto f = scaling_fit(points);
      fits.push_back({{"d", d}, {"slope", f.slope}, {"intercept", f.intercept}, {"stderr_slope", f.stderr_slope}});
    }
  }
  ctx.summary["energy_fits"] = fits;
}

void run_scaling(Context& ctx) {
  BerryEsseenPlan plan;
  plan.ns = ctx.spec.ns;
  plan.ds = ctx.spec.ds;
  plan.M = ctx.spec.M;
  plan.direction = ctx.spec.direction;
  plan.base_seed = ctx.spec.base_seed;
  plan.workers = ctx.spec.workers;
  plan.kappa4_table = ctx.spec.kappa4_table;
  plan.bootstrap = ctx.spec.bootstrap;
  plan.hook = ctx.hook();
  ctx.before(0);
  const BerryEsseenReport report = berry_esseen_experiment(plan);

  Table ks{{"n", "d", "samples", "excluded", "ks", "ci_lo", "ci_hi", "variance", "kappa4"}, {}};
  json cells = json::array();
  for (const auto& r : report.cells) {
    ks.rows.push_back({static_cast<double>(r.n), static_cast<double>(r.d), static_cast<double>(r.samples.size()),
                       static_cast<double>(r.excluded), r.ks, r.ci_ks.lo, r.ci_ks.hi, r.stats.variance, r.stats.kappa4});
    cells.push_back(ensemble_json(r));
    ctx.cells.push_back({r.n, r.d, static_cast<int>(r.samples.size()), r.excluded});
  }
  ctx.out.write("ks.csv", ks.to_csv());

  json fits = json::array();
  for (const auto& f : report.fits)
    fits.push_back({{"axis", f.axis}, {"fixed", f.fixed}, {"slope", f.fit.slope}, {"intercept", f.fit.intercept},
                    {"stderr_slope", f.fit.stderr_slope}, {"ci_slope", interval(f.ci_slope)}});
  json kappa4 = json::array();
  for (const auto& k : report.kappa4)
    kappa4.push_back({{"n", k.n}, {"d", k.d}, {"kappa4", k.kappa4}, {"ci", interval(k.ci)}, {"variance", k.variance},
                      {"variance_unprojected", k.variance_unprojected}});
  ctx.summary["cells"] = cells;
  ctx.summary["fits"] = fits;
  ctx.summary["kappa4"] = kappa4;

  for (int d : ctx.spec.ds) {
    Table plot{{"x", "y"}, {}};
    for (const auto& r : report.cells)
      if (r.d == d && r.ks > 0) plot.rows.push_back({static_cast<double>(r.n), r.ks});
    if (plot.rows.size() >= 2)
      ctx.out.write("ks_vs_n_d" + std::to_string(d) + ".svg",
                    render_plot(plot, PlotKind::loglog_scatter_with_fit, "KS vs N, d=" + std::to_string(d)));
  }
}

}  // namespace

RunManifest run(const ExperimentSpec& spec, const RunOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  ArtifactWriter out(spec.output_dir);
  const fs::path manifest_path = out.dir() / "manifest.json";
  std::error_code ec;
  fs::remove(manifest_path, ec);  // a stale manifest must not survive a failed rerun

  std::vector<CellSummary> cells;
  Context ctx{spec, options, out, cells};
  switch (spec.experiment) {
    case ExperimentKind::sample: run_sample(ctx); break;
    case ExperimentKind::spectrum: run_spectrum(ctx); break;
    case ExperimentKind::clt: run_clt(ctx); break;
    case ExperimentKind::locallaw: run_locallaw(ctx); break;
    case ExperimentKind::interpolate: run_interpolate(ctx); break;
    case ExperimentKind::malliavin: run_malliavin(ctx); break;
    case ExperimentKind::scaling: run_scaling(ctx); break;
  }

  json summary{{"schema_version", kSchemaVersion}, {"experiment", to_string(spec.experiment)}, {"seed", spec.base_seed}};
  for (auto& [key, value] : ctx.summary.items()) summary[key] = value;
  out.write("summary.json", summary.dump(2) + "\n");

  RunManifest manifest;
  manifest.spec = spec.echo();
  manifest.version = std::string(kToolVersion);
  manifest.files = out.commit();
  manifest.cells = cells;
  manifest.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  manifest.path = manifest_path.string();

  json m{{"schema_version", kSchemaVersion}, {"tool", "rrglab"}, {"version", manifest.version}};
  json echo = json::object();
  for (const auto& [k, v] : manifest.spec) echo[k] = v;
  m["spec"] = echo;
  m["files"] = manifest.files;
  json cell_json = json::array();
  for (const auto& c : cells)
    cell_json.push_back({{"n", c.n}, {"d", c.d}, {"samples", c.samples}, {"excluded", c.excluded}});
  m["cells"] = cell_json;
  m["wall_seconds"] = manifest.wall_seconds;

  const fs::path partial = out.dir() / "manifest.json.partial";
  {
    std::ofstream f(partial, std::ios::binary);
    if (!f || !(f << m.dump(2) << '\n')) fail(ErrorKind::IoError, "cannot write " + partial.string());
  }
  fs::rename(partial, manifest_path, ec);
  if (ec) fail(ErrorKind::IoError, "cannot rename manifest: " + ec.message());
  return manifest;
}

}  // namespace rrg
