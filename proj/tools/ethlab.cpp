#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "ethlab/config.hpp"
#include "ethlab/errors.hpp"
#include "ethlab/io.hpp"
#include "ethlab/pipeline.hpp"

namespace {

struct Flags {
  std::string config;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  std::size_t workers = 1;
  std::optional<double> slack;
  bool print_config = false;
};

ethlab::RunConfig resolve(const Flags& f, bool allow_demo) {
  ethlab::RunConfig c;
  if (!f.config.empty()) {
    c = ethlab::load_config(f.config);
  } else if (allow_demo) {
    c = ethlab::demo_config();
  } else {
    throw ethlab::ValidationError("--config is required");
  }
  if (f.out) c.output_dir = *f.out;
  if (f.seed) c.seed = *f.seed;
  if (f.slack) c.slack = *f.slack;
  c.validate();
  return c;
}

void report(const ethlab::StageRecord& r) {
  std::cout << ethlab::to_string(r.stage) << ": " << r.files.size() << " file(s) in " << r.wall_seconds << " s\n";
  for (const auto& f : r.files) std::cout << "  " << f.path << "  " << f.sha256 << "\n";
}

int finish(const ethlab::RunManifest& m) {
  for (const auto& s : m.stages) report(s);
  if (m.lambda_source) std::cout << "lambda source: " << *m.lambda_source << "\n";
  if (m.status == ethlab::RunStatus::error) std::cerr << "error: " << m.error << "\n";
  if (m.status == ethlab::RunStatus::violation) std::cout << "bound violation beyond slack\n";
  return static_cast<int>(m.status);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ethlab: eigenstate thermalization, code error and chaos bounds"};
  app.require_subcommand(1);
  app.fallthrough();
  Flags f;
  app.add_option("--config", f.config, "Run configuration (JSON)");
  app.add_option("--out", f.out, "Output directory (overrides output_dir)");
  app.add_option("--seed", f.seed, "RNG seed (overrides seed)");
  app.add_option("--workers", f.workers, "Concurrent sweep points")->check(CLI::PositiveNumber);
  app.add_option("--slack", f.slack, "Slack factor for bound checks (>= 1)");
  app.add_flag("--print-config", f.print_config, "Print the resolved canonical config and exit");

  struct Sub {
    const char* name;
    const char* help;
  };
  const Sub subs[] = {{"generate", "Build the model, diagonalize, write spectrum and operator"},
                      {"extract", "Diagonal profile, envelope and Gaussianity statistics"},
                      {"code-error", "Select an eigenstate code and compute Knill-Laflamme residuals"},
                      {"dynamics", "Thermal correlators, OTOC, spectral densities and fits"},
                      {"bounds", "Evaluate the bound checks against the slack policy"},
                      {"run", "All stages in order"},
                      {"sweep", "Cartesian parameter sweep"},
                      {"demo", "All stages on the bundled demo config"}};
  for (const auto& s : subs) app.add_subcommand(s.name, s.help);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  const std::string cmd = app.get_subcommands().front()->get_name();
  try {
    const ethlab::RunConfig config = resolve(f, cmd == "demo");
    if (f.print_config) {
      std::cout << ethlab::io::encode_json(ethlab::to_json(config));
      return 0;
    }
    const std::string dir = config.output_dir;
    if (cmd == "run" || cmd == "demo") return finish(ethlab::run(config, dir));
    if (cmd == "sweep") {
      const ethlab::SweepResult r = ethlab::sweep(config, dir, f.workers);
      for (std::size_t i = 0; i < r.points.size(); ++i) {
        const auto& m = r.manifests[i];
        std::cout << r.points[i].key() << "  status " << static_cast<int>(m.status);
        if (!m.error.empty()) std::cout << "  " << m.error;
        std::cout << "\n";
      }
      std::cout << "aggregate: " << dir << "/aggregate.csv\n";
      return static_cast<int>(r.status);
    }
    ethlab::Stage stage = ethlab::Stage::generate;
    for (const ethlab::Stage s : ethlab::all_stages()) {
      if (ethlab::to_string(s) == cmd) stage = s;
    }
    const ethlab::StageRecord rec = ethlab::run_stage(stage, config, dir);
    report(rec);
    if (rec.violation) {
      std::cout << "bound violation beyond slack\n";
      return 2;
    }
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
