#include <catch2/catch_amalgamated.hpp>

#include "tlsynth/environment.hpp"

using namespace tlsynth;

namespace {

LabelledMap small_map() {
  std::vector<MapRegion> regions;
  MapRegion target;
  target.shape = MapRegion::Shape::circle;
  target.circle = {30.0, 30.0, 5.0};
  target.label = {"t1"};
  regions.push_back(target);
  MapRegion hazard;
  hazard.shape = MapRegion::Shape::rect;
  hazard.rect = {0.0, 80.0, 100.0, 100.0};
  hazard.label = {"u"};
  regions.push_back(hazard);
  MapRegion spur;
  spur.shape = MapRegion::Shape::polygon;
  spur.polygon.vertices = {{60, 10}, {80, 10}, {80, 30}, {60, 30}};
  spur.label = {"u"};
  regions.push_back(spur);
  return LabelledMap(100.0, 100.0, std::move(regions), {});
}

}  // namespace

TEST_CASE("label_at returns the first containing region", "[environment]") {
  const LabelledMap map = small_map();
  REQUIRE(map.label_at({30.0, 30.0}) == Label{"t1"});
  REQUIRE(map.label_at({5.0, 5.0}) == Label{});
  REQUIRE(map.label_at({70.0, 20.0}) == Label{"u"});
  // regions are closed: a point at distance exactly radius is inside
  REQUIRE(map.label_at({35.0, 30.0}) == Label{"t1"});
  // polygon boundary points are inside
  REQUIRE(map.label_at({60.0, 20.0}) == Label{"u"});
  REQUIRE_THROWS_AS(map.label_at({120.0, 20.0}), std::out_of_range);
}

TEST_CASE("overlapping regions resolve in declaration order", "[environment]") {
  std::vector<MapRegion> regions;
  MapRegion a;
  a.shape = MapRegion::Shape::rect;
  a.rect = {0, 0, 50, 50};
  a.label = {"t1"};
  MapRegion b;
  b.shape = MapRegion::Shape::rect;
  b.rect = {0, 0, 80, 80};
  b.label = {"u"};
  regions.push_back(a);
  regions.push_back(b);
  const LabelledMap map(100, 100, std::move(regions), {});
  REQUIRE(map.label_at({10, 10}) == Label{"t1"});
  REQUIRE(map.label_at({60, 60}) == Label{"u"});
}

TEST_CASE("map json round trip", "[environment]") {
  const char* doc = R"({
    "width": 100.0, "height": 100.0,
    "default_label": [],
    "regions": [
      {"shape": "circle", "center": [30.0, 30.0], "diameter": 10.0, "label": ["t1"]},
      {"shape": "rect", "min": [0.0, 80.0], "max": [100.0, 100.0], "label": ["u"]},
      {"shape": "polygon", "vertices": [[60,10],[80,10],[80,30],[60,30]], "label": ["u"]}
    ]
  })";
  const LabelledMap map = LabelledMap::from_json(nlohmann::json::parse(doc));
  REQUIRE(map.label_at({30.0, 30.0}) == Label{"t1"});
  REQUIRE(map.label_at({1.0, 99.0}) == Label{"u"});
  REQUIRE(map.regions().size() == 3);

  // regions must stay inside the bounding box
  const char* outside = R"({
    "width": 100.0, "height": 100.0,
    "regions": [
      {"shape": "circle", "center": [99.0, 50.0], "diameter": 10.0, "label": ["t1"]}
    ]
  })";
  REQUIRE_THROWS_AS(LabelledMap::from_json(nlohmann::json::parse(outside)),
                    std::invalid_argument);
}

TEST_CASE("rover dynamics validate d << D", "[environment]") {
  REQUIRE_NOTHROW(RoverDynamics(2.0, 0.02));
  REQUIRE_THROWS_AS(RoverDynamics(2.0, 0.5), std::invalid_argument);
  REQUIRE_THROWS_AS(RoverDynamics(0.0, 0.02), std::invalid_argument);
}

TEST_CASE("directional steps move along one axis within (0, D]",
          "[environment]") {
  const LabelledMap map = small_map();
  const RoverDynamics dyn(2.0, 0.02);
  Rng rng(42);
  for (int i = 0; i < 2000; ++i) {
    const State s{50.0, 50.0};
    const State right = env_step(dyn, map, s, 1, rng);
    REQUIRE(right[1] == 50.0);
    REQUIRE(right[0] > 50.0);
    REQUIRE(right[0] <= 52.0);
    const State up = env_step(dyn, map, s, 2, rng);
    REQUIRE(up[0] == 50.0);
    REQUIRE(up[1] > 50.0);
    REQUIRE(up[1] <= 52.0);
  }
  REQUIRE_THROWS_AS(env_step(dyn, map, {50.0, 50.0}, 7, rng),
                    std::invalid_argument);
}

TEST_CASE("steps clamp to the bounding box", "[environment]") {
  const LabelledMap map = small_map();
  const RoverDynamics dyn(2.0, 0.02);
  Rng rng(7);
  // drive into the right wall: coordinates never exceed the box
  State s{99.5, 50.0};
  for (int i = 0; i < 100; ++i) {
    s = env_step(dyn, map, s, 1, rng);
    REQUIRE(s[0] <= 100.0);
  }
  REQUIRE(s[0] == 100.0);
}

TEST_CASE("boundary clamping fuzz", "[environment]") {
  const LabelledMap map = small_map();
  const RoverDynamics dyn(2.0, 0.02);
  Rng rng(123);
  State s{50.0, 50.0};
  bool all_inside = true;
  for (int i = 0; i < 100000; ++i) {
    s = env_step(dyn, map, s, static_cast<int>(rng.index(5)), rng);
    all_inside = all_inside && map.bounds().contains(s);
  }
  REQUIRE(all_inside);
}

TEST_CASE("stay jitters within the disc of radius d", "[environment]") {
  const LabelledMap map = small_map();
  const RoverDynamics dyn(2.0, 0.02);
  Rng rng(99);
  const State s{50.0, 50.0};
  bool all_close = true;
  for (int i = 0; i < 20000; ++i) {
    const State next = env_step(dyn, map, s, 4, rng);
    all_close = all_close && distance(s, next) <= dyn.stay_radius + 1e-12;
  }
  REQUIRE(all_close);
}

TEST_CASE("trajectories replay bit-exactly under a fixed seed",
          "[environment]") {
  const LabelledMap map = small_map();
  const RoverDynamics dyn(2.0, 0.02);
  State finals[2];
  for (int run = 0; run < 2; ++run) {
    Rng rng(2024);
    State s{50.0, 50.0};
    for (int i = 0; i < 5000; ++i)
      s = env_step(dyn, map, s, static_cast<int>(rng.index(5)), rng);
    finals[run] = s;
  }
  REQUIRE(finals[0] == finals[1]);
}

TEST_CASE("sample_initial modes", "[environment]") {
  const LabelledMap map = small_map();
  RoverEnv env(map, RoverDynamics(2.0, 0.02));
  Rng rng(5);

  const State fixed = sample_initial(env, InitialState::fixed({59.0, 42.5}), rng);
  REQUIRE(fixed == State{59.0, 42.5});

  for (int i = 0; i < 200; ++i) {
    const State s = sample_initial(env, InitialState::uniform(), rng);
    REQUIRE(env.label(s).empty());
  }

  // all-unsafe map: rejection sampling gives up
  std::vector<MapRegion> all;
  MapRegion everything;
  everything.shape = MapRegion::Shape::rect;
  everything.rect = {0, 0, 10, 10};
  everything.label = {"u"};
  all.push_back(everything);
  RoverEnv hopeless(LabelledMap(10, 10, std::move(all), {}),
                    RoverDynamics(2.0, 0.02));
  REQUIRE_THROWS_AS(sample_initial(hopeless, InitialState::uniform(), rng),
                    std::runtime_error);
}
