#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "rrglab/error.hpp"
#include "rrglab/harness.hpp"

namespace {

// One line on stderr: machine-parsable key=value pairs.
int report(rrg::ErrorKind kind, const std::string& message) {
  const int code = rrg::exit_code(kind);
  std::string flat = message;
  for (auto& c : flat)
    if (c == '\n') c = ' ';
  std::cerr << "error kind=" << rrg::to_string(kind) << " exit=" << code << " reason=\"" << flat << "\"\n";
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rrglab: random regular graph eigenvector experiments"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(rrg::kToolVersion));

  std::string config;
  int workers = 0;
  std::string output;
  std::string seed;
  for (const char* name : {"sample", "spectrum", "clt", "locallaw", "interpolate", "malliavin", "scaling"}) {
    auto* sub = app.add_subcommand(name, std::string("run the ") + name + " experiment");
    sub->add_option("--config", config, "key = value experiment file")->required();
    sub->add_option("--workers", workers, "worker threads (overrides the config)");
    sub->add_option("--output", output, "output directory (overrides the config)");
    sub->add_option("--seed", seed, "base seed (overrides the config)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return report(rrg::ErrorKind::ValidationError, e.what());
  }

  const std::string experiment = app.get_subcommands().front()->get_name();
  std::map<std::string, std::string> overrides{{"experiment", experiment}};
  if (workers > 0) overrides["workers"] = std::to_string(workers);
  if (!output.empty()) overrides["output"] = output;
  if (!seed.empty()) overrides["seed"] = seed;

  try {
    std::ifstream in(config, std::ios::binary);
    if (!in) rrg::fail(rrg::ErrorKind::IoError, "cannot read config " + config);
    std::ostringstream text;
    text << in.rdbuf();
    const auto spec = rrg::parse_spec(text.str(), overrides);
    const auto manifest = rrg::run(spec);
    std::cout << "ok experiment=" << experiment << " files=" << manifest.files.size() << " manifest=" << manifest.path
              << "\n";
    return 0;
  } catch (const rrg::Error& e) {
    return report(e.kind(), e.what());
  } catch (const std::exception& e) {
    return report(rrg::ErrorKind::IoError, e.what());
  }
}
