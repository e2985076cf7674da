#include <filesystem>
#include <string>

#include <doctest.h>

#include "ethlab/config.hpp"
#include "ethlab/errors.hpp"
#include "ethlab/io.hpp"
#include "ethlab/pipeline.hpp"

using namespace ethlab;
namespace fs = std::filesystem;

namespace {

RunConfig small_synth() {
  RunConfig c;
  c.seed = 3;
  c.model.kind = "synth";
  c.model.synth.dim = 256;
  c.model.synth.bandwidth = 20.0;
  c.model.synth.decay_rate = 0.25;
  c.observable.kind = "synthetic";
  c.thermal.betas = {0.5};
  c.extract.min_count = 10;
  c.extract.omega_bins = 20;
  c.code.window_half_width = 1.0;
  c.dynamics.time = {0.0, 4.0, 9};
  c.dynamics.omega = {-3.0, 3.0, 61};
  c.dynamics.sigma_omega = 0.2;
  return c;
}

fs::path fresh(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("ethlab_pipeline_" + name);
  fs::remove_all(p);
  return p;
}

void same_files(const fs::path& a, const fs::path& b) {
  std::size_t n = 0;
  for (const auto& e : fs::recursive_directory_iterator(a)) {
    if (!e.is_regular_file() || e.path().filename() == "manifest.json") continue;
    const fs::path rel = fs::relative(e.path(), a);
    CAPTURE(rel.string());
    REQUIRE(fs::exists(b / rel));
    CHECK(io::read_file(e.path()) == io::read_file(b / rel));
    ++n;
  }
  CHECK(n > 5);
}

}  // namespace

TEST_SUITE("pipeline") {

TEST_CASE("runs are reproducible") {
  const RunConfig c = small_synth();
  const fs::path a = fresh("a"), b = fresh("b");
  const RunManifest ma = run(c, a);
  const RunManifest mb = run(c, b);
  INFO(ma.error);
  REQUIRE(ma.status != RunStatus::error);
  CHECK(ma.status == mb.status);
  CHECK(ma.stages.size() == all_stages().size());
  same_files(a, b);
  for (const StageRecord& r : ma.stages) {
    for (const StageFile& f : r.files) CHECK(io::sha256_hex(io::read_file(a / f.path)) == f.sha256);
  }
  const auto manifest = io::read_json(a / "manifest.json");
  CHECK(manifest.at("config_hash") == config_hash(c));
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("stages run one at a time reproduce the full run") {
  const RunConfig c = small_synth();
  const fs::path full = fresh("full"), staged = fresh("staged");
  REQUIRE(run(c, full).status != RunStatus::error);
  fs::create_directories(staged);
  io::write_file(staged / "config.json", io::encode_json(to_json(c)));
  for (const Stage s : all_stages()) run_stage(s, c, staged);
  same_files(full, staged);
  fs::remove_all(full);
  fs::remove_all(staged);
}

TEST_CASE("a stage without its inputs fails cleanly") {
  const fs::path d = fresh("missing");
  fs::create_directories(d);
  CHECK_THROWS_AS(run_stage(Stage::bounds, small_synth(), d), Error);
  fs::remove_all(d);
}

TEST_CASE("sweeps are independent of the worker count") {
  RunConfig c = small_synth();
  c.sweep = {{"seed", {1, 2}}, {"model.synth.decay_rate", {0.25, -1.0}}};
  const fs::path one = fresh("sweep1"), two = fresh("sweep2");
  const SweepResult r1 = sweep(c, one, 1);
  const SweepResult r2 = sweep(c, two, 2);
  REQUIRE(r1.points.size() == 4);
  CHECK(r1.status == RunStatus::error);
  CHECK(r1.manifests[2].status == RunStatus::error);
  CHECK(r1.manifests[0].status != RunStatus::error);
  CHECK(io::read_file(one / "aggregate.csv") == io::read_file(two / "aggregate.csv"));
  const io::CsvTable agg = io::read_csv(one / "aggregate.csv");
  CHECK(agg.rows.size() == 4);
  CHECK(agg.header.at(1) == "model.synth.decay_rate");
  same_files(one / "point_0000", two / "point_0000");
  fs::remove_all(one);
  fs::remove_all(two);
}

TEST_CASE("stage names") {
  CHECK(to_string(Stage::code_error) == "code-error");
  CHECK(all_stages().front() == Stage::generate);
  CHECK(all_stages().back() == Stage::bounds);
  CHECK_FALSE(artifact_version().empty());
}

}
