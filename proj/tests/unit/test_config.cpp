#include <string>

#include <doctest.h>
#include <nlohmann/json.hpp>

#include "ethlab/config.hpp"
#include "ethlab/errors.hpp"
#include "ethlab/io.hpp"
#include "ethlab/pipeline.hpp"

using namespace ethlab;
using nlohmann::json;

TEST_SUITE("config") {

TEST_CASE("canonical json round trip") {
  RunConfig c = demo_config();
  c.seed = 42;
  c.extract.fit_omega_min = 0.3;
  c.sweep = {{"seed", {1, 2}}};
  const json j = to_json(c);
  const RunConfig back = parse_config(j);
  CHECK(to_json(back) == j);
  CHECK(config_hash(back) == config_hash(c));
  CHECK(config_hash(c).size() == 64);
  c.seed = 43;
  CHECK(config_hash(back) != config_hash(c));
}

TEST_CASE("missing keys take defaults") {
  const RunConfig c = parse_config(json::object());
  CHECK(to_json(c) == to_json(RunConfig{}));
  const RunConfig s = parse_config({{"seed", 9}, {"model", {{"ising", {{"sites", 6}}}}}});
  CHECK(s.seed == 9);
  CHECK(s.model.ising.sites == 6);
}

TEST_CASE("strict parsing") {
  CHECK_THROWS_AS(parse_config({{"sed", 1}}), ValidationError);
  CHECK_THROWS_AS(parse_config({{"model", {{"ising", {{"site", 6}}}}}}), ValidationError);
  CHECK_THROWS_AS(parse_config({{"seed", "one"}}), ValidationError);
  CHECK_THROWS_AS(parse_config({{"seed", -1}}), ValidationError);
  CHECK_THROWS_AS(parse_config({{"slack", 0.5}}), ValidationError);
  CHECK_THROWS_AS(parse_config({{"dynamics", {{"otoc", 1}}}}), ValidationError);
  CHECK_THROWS_AS(parse_config({{"model", {{"kind", "potts"}}}}), ValidationError);
  CHECK_THROWS_AS(parse_config({{"observable", {{"kind", "synthetic"}}}}), ValidationError);
  CHECK_THROWS_AS(parse_config(json::array()), ValidationError);
  CHECK_THROWS_AS(parse_config({{"sweep", {{"seed", json::array()}}}}), ValidationError);
}

TEST_CASE("bundled demo config matches the built-in one") {
  const RunConfig c = load_config(std::string(ETHLAB_SOURCE_DIR) + "/configs/demo.json");
  CHECK(canonical_dump(c) == canonical_dump(demo_config()));
  CHECK(io::read_file(std::string(ETHLAB_SOURCE_DIR) + "/configs/demo.json") == io::encode_json(to_json(c)));
}

TEST_CASE("sweep expansion") {
  RunConfig c;
  c.model.kind = "synth";
  c.observable.kind = "synthetic";
  c.sweep = {{"model.synth.decay_rate", {0.1, -1.0}}, {"seed", {1, 2, 3}}};
  const std::vector<SweepPoint> pts = expand_sweep(c);
  REQUIRE(pts.size() == 6);
  // Keys sort by path and the last axis varies fastest.
  CHECK(pts[0].key() == "model.synth.decay_rate=0.1;seed=1");
  CHECK(pts[2].key() == "model.synth.decay_rate=0.1;seed=3");
  CHECK(pts[3].key() == "model.synth.decay_rate=-1.0;seed=1");
  for (std::size_t i = 0; i < 6; ++i) {
    CHECK(pts[i].index == i);
    CAPTURE(i);
    if (i < 3) {
      REQUIRE(pts[i].config);
      CHECK(pts[i].config->seed == i + 1);
      CHECK(pts[i].config->sweep.empty());
    } else {
      CHECK_FALSE(pts[i].config);
      CHECK(pts[i].error.find("decay_rate") != std::string::npos);
    }
  }
  c.sweep = json::object();
  CHECK_THROWS_AS(expand_sweep(c), ValidationError);
  c.sweep = {{"model.synth.nope", {1}}};
  CHECK_THROWS_AS(expand_sweep(c), ValidationError);
}

TEST_CASE("dotted path assignment") {
  json j = {{"a", {{"b", 1}}}};
  set_path(j, "a.b", 2);
  CHECK(j["a"]["b"] == 2);
  CHECK_THROWS_AS(set_path(j, "a.c", 1), ValidationError);
  CHECK_THROWS_AS(set_path(j, "a..b", 1), ValidationError);
  CHECK_THROWS_AS(set_path(j, "a.b.c", 1), ValidationError);
}

TEST_CASE("grid points") {
  CHECK(GridSpec{0.0, 1.0, 3}.points() == std::vector<double>{0.0, 0.5, 1.0});
  CHECK(GridSpec{2.0, 5.0, 1}.points() == std::vector<double>{2.0});
}

}
