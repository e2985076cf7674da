#include <cstdlib>
#include <filesystem>
#include <string>

#include <sys/wait.h>

#include <doctest.h>

#include "ethlab/config.hpp"
#include "ethlab/io.hpp"
#include "ethlab/pipeline.hpp"

using namespace ethlab;
namespace fs = std::filesystem;

namespace {

int cli(const std::string& args) {
  const std::string cmd = std::string(ETHLAB_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("ethlab_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

RunConfig synth(double decay, double beta = 0.5) {
  RunConfig c;
  c.model.kind = "synth";
  c.model.synth.dim = 256;
  c.model.synth.decay_rate = decay;
  c.observable.kind = "synthetic";
  c.thermal.betas = {beta};
  c.extract.min_count = 10;
  c.extract.omega_bins = 20;
  c.code.window_half_width = 1.0;
  c.dynamics.time = {0.0, 4.0, 9};
  c.dynamics.omega = {-3.0, 3.0, 61};
  c.dynamics.sigma_omega = 0.2;
  return c;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("exit codes follow the slack policy") {
  const fs::path d = scratch("codes");
  io::write_json(d / "ok.json", to_json(synth(0.25)));
  // A very slow envelope decay puts the implied lambda far above the chaos bound.
  io::write_json(d / "slow.json", to_json(synth(0.02, 2.0)));
  io::write_file(d / "bad.json", "{\"seed\": \"x\"}");
  const std::string out = " --out " + (d / "run").string();
  CHECK(cli("run --config " + (d / "ok.json").string() + out) == 0);
  CHECK(cli("run --config " + (d / "slow.json").string() + out) == 2);
  CHECK(cli("bounds --config " + (d / "slow.json").string() + out) == 2);
  CHECK(cli("run --config " + (d / "bad.json").string() + out) == 1);
  CHECK(cli("run --config " + (d / "missing.json").string() + out) == 1);
  CHECK(cli("generate" + out) == 1);
  CHECK(cli("frobnicate") == 1);
  CHECK(cli("run --config " + (d / "ok.json").string() + out + " --slack 0.5") == 1);
  fs::remove_all(d);
}

TEST_CASE("single stages and flag overrides") {
  const fs::path d = scratch("stages");
  io::write_json(d / "c.json", to_json(synth(0.25)));
  const std::string base = " --config " + (d / "c.json").string() + " --out " + (d / "o").string();
  CHECK(cli("generate" + base + " --seed 11") == 0);
  CHECK(fs::exists(d / "o" / "spectrum.csv"));
  CHECK(cli("extract" + base + " --seed 11") == 0);
  CHECK(fs::exists(d / "o" / "extract.json"));
  CHECK(cli("bounds" + base) == 1);

  const std::string printed = (d / "p.json").string();
  REQUIRE(std::system((std::string(ETHLAB_CLI_PATH) + " demo --print-config --seed 5 > " + printed).c_str()) == 0);
  RunConfig expected = demo_config();
  expected.seed = 5;
  CHECK(io::read_file(printed) == io::encode_json(to_json(expected)));
  fs::remove_all(d);
}

}
