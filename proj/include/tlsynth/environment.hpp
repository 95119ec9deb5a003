/* environment.hpp -- continuous-state environments.
 *
 * LabelledMap is a planar world of labelled regions loaded from a JSON
 * document (bounding box in km, ordered region list, default label).
 * RoverEnv combines a map with the rover step dynamics: directional
 * actions translate by a magnitude drawn from (0, D], `stay` jitters
 * uniformly inside a disc of radius d, and every result is clamped to
 * the bounding box.
 */
#pragma once

#include <fstream>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "tlsynth/automata.hpp"
#include "tlsynth/geometry.hpp"
#include "tlsynth/rng.hpp"

namespace tlsynth {

struct ActionSet {
  std::vector<std::string> names;

  std::size_t size() const { return names.size(); }

  int index_of(const std::string& n) const {
    for (std::size_t i = 0; i < names.size(); ++i)
      if (names[i] == n) return static_cast<int>(i);
    return -1;
  }
};

inline ActionSet rover_actions() {
  return ActionSet{{"left", "right", "up", "down", "stay"}};
}

struct MapRegion {
  enum class Shape { circle, rect, polygon };
  Shape shape = Shape::circle;
  Circle circle;
  Rect rect;
  Polygon polygon;
  Label label;

  bool contains(double x, double y) const {
    switch (shape) {
      case Shape::circle: return circle.contains(x, y);
      case Shape::rect: return rect.contains(x, y);
      case Shape::polygon: return polygon.contains(x, y);
    }
    return false;
  }
};

class LabelledMap {
 public:
  LabelledMap(double width, double height, std::vector<MapRegion> regions,
              Label default_label)
      : width_(width),
        height_(height),
        regions_(std::move(regions)),
        default_(std::move(default_label)),
        box_{{0.0, 0.0}, {width, height}} {
    if (width <= 0.0 || height <= 0.0)
      throw std::invalid_argument("map dimensions must be positive");
    for (const auto& r : regions_) check_inside(r);
  }

  double width() const { return width_; }
  double height() const { return height_; }
  const Box& bounds() const { return box_; }
  const std::vector<MapRegion>& regions() const { return regions_; }
  const Label& default_label() const { return default_; }

  // label of the first region containing the point, else the default;
  // regions are closed sets, so boundary points belong to them
  Label label_at(const State& s) const {
    if (!box_.contains(s, 1e-9))
      throw std::out_of_range("label_at: state outside the map bounding box");
    for (const auto& r : regions_)
      if (r.contains(s[0], s[1])) return r.label;
    return default_;
  }

  static LabelledMap from_json(const nlohmann::json& j) {
    std::vector<MapRegion> regions;
    for (const auto& jr : j.value("regions", nlohmann::json::array())) {
      MapRegion r;
      const std::string shape = jr.at("shape").get<std::string>();
      if (shape == "circle") {
        r.shape = MapRegion::Shape::circle;
        r.circle.cx = jr.at("center").at(0).get<double>();
        r.circle.cy = jr.at("center").at(1).get<double>();
        r.circle.radius = jr.at("diameter").get<double>() / 2.0;
      } else if (shape == "rect") {
        r.shape = MapRegion::Shape::rect;
        r.rect = {jr.at("min").at(0).get<double>(), jr.at("min").at(1).get<double>(),
                  jr.at("max").at(0).get<double>(), jr.at("max").at(1).get<double>()};
      } else if (shape == "polygon") {
        r.shape = MapRegion::Shape::polygon;
        for (const auto& v : jr.at("vertices"))
          r.polygon.vertices.emplace_back(v.at(0).get<double>(),
                                          v.at(1).get<double>());
      } else {
        throw std::invalid_argument("unknown region shape: " + shape);
      }
      for (const auto& ap : jr.at("label")) {
        const std::string name = ap.get<std::string>();
        if (name.empty())
          throw std::invalid_argument("region label contains an empty name");
        r.label.insert(name);
      }
      regions.push_back(std::move(r));
    }
    Label def;
    for (const auto& ap : j.value("default_label", nlohmann::json::array()))
      def.insert(ap.get<std::string>());
    return LabelledMap(j.at("width").get<double>(), j.at("height").get<double>(),
                       std::move(regions), std::move(def));
  }

  static LabelledMap load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open map file: " + path);
    nlohmann::json j;
    in >> j;
    return from_json(j);
  }

 private:
  void check_inside(const MapRegion& r) const {
    const auto inside = [&](double x, double y) {
      return x >= 0.0 && x <= width_ && y >= 0.0 && y <= height_;
    };
    bool ok = true;
    switch (r.shape) {
      case MapRegion::Shape::circle:
        ok = inside(r.circle.cx - r.circle.radius, r.circle.cy - r.circle.radius) &&
             inside(r.circle.cx + r.circle.radius, r.circle.cy + r.circle.radius);
        break;
      case MapRegion::Shape::rect:
        ok = inside(r.rect.x0, r.rect.y0) && inside(r.rect.x1, r.rect.y1);
        break;
      case MapRegion::Shape::polygon:
        for (const auto& [x, y] : r.polygon.vertices) ok = ok && inside(x, y);
        break;
    }
    if (!ok)
      throw std::invalid_argument("map region extends outside the bounding box");
  }

  double width_;
  double height_;
  std::vector<MapRegion> regions_;
  Label default_;
  Box box_;
};

struct RoverDynamics {
  double max_step;     // D: largest directional move per step
  double stay_radius;  // d: jitter radius of the stay action

  RoverDynamics(double max_step_, double stay_radius_)
      : max_step(max_step_), stay_radius(stay_radius_) {
    if (max_step <= 0.0)
      throw std::invalid_argument("max_step must be positive");
    if (stay_radius <= 0.0 || stay_radius >= max_step / 10.0)
      throw std::invalid_argument("stay_radius must satisfy 0 < d < D/10");
  }
};

// One transition of the rover.  Directional actions move along their axis
// only; the magnitude is D*(1-u) with u ~ U[0,1), which realises (0, D]
// exactly.  `stay` lands area-uniformly in the closed disc of radius d.
inline State env_step(const RoverDynamics& dyn, const LabelledMap& map,
                      const State& s, int action, Rng& rng) {
  State out = s;
  switch (action) {
    case 0: out[0] -= rng.half_open_magnitude(dyn.max_step); break;  // left
    case 1: out[0] += rng.half_open_magnitude(dyn.max_step); break;  // right
    case 2: out[1] += rng.half_open_magnitude(dyn.max_step); break;  // up
    case 3: out[1] -= rng.half_open_magnitude(dyn.max_step); break;  // down
    case 4: {                                                        // stay
      const double angle = rng.uniform(0.0, 6.283185307179586476925286766559);
      const double radius = dyn.stay_radius * std::sqrt(rng.uniform01());
      out[0] += radius * std::cos(angle);
      out[1] += radius * std::sin(angle);
      break;
    }
    default:
      throw std::invalid_argument("env_step: unknown action index " +
                                  std::to_string(action));
  }
  return map.bounds().clamped(std::move(out));
}

struct InitialState {
  enum class Mode { fixed, uniform_neutral };
  Mode mode = Mode::fixed;
  State coords;

  static InitialState fixed(State s) {
    return InitialState{Mode::fixed, std::move(s)};
  }
  static InitialState uniform() {
    return InitialState{Mode::uniform_neutral, {}};
  }
};

// Abstract environment as seen by the product construction and the three
// trainers: a bounded continuous state space, a finite action set, a
// labelling function and a stochastic transition step.
class Environment {
 public:
  virtual ~Environment() = default;
  virtual std::size_t dimension() const = 0;
  virtual const ActionSet& actions() const = 0;
  virtual const Box& bounds() const = 0;
  virtual Label label(const State& s) const = 0;
  virtual State step(const State& s, int action, Rng& rng) const = 0;
};

class RoverEnv final : public Environment {
 public:
  RoverEnv(LabelledMap map, RoverDynamics dyn)
      : map_(std::move(map)), dyn_(dyn), actions_(rover_actions()) {}

  std::size_t dimension() const override { return 2; }
  const ActionSet& actions() const override { return actions_; }
  const Box& bounds() const override { return map_.bounds(); }
  Label label(const State& s) const override { return map_.label_at(s); }
  State step(const State& s, int action, Rng& rng) const override {
    return env_step(dyn_, map_, s, action, rng);
  }

  const LabelledMap& map() const { return map_; }
  const RoverDynamics& dynamics() const { return dyn_; }

 private:
  LabelledMap map_;
  RoverDynamics dyn_;
  ActionSet actions_;
};

// Fixed mode returns the configured point verbatim; uniform mode rejection
// samples the bounding box until the label is neutral (empty).
inline State sample_initial(const Environment& env, const InitialState& init,
                            Rng& rng) {
  if (init.mode == InitialState::Mode::fixed) {
    if (init.coords.size() != env.dimension())
      throw std::invalid_argument("initial state has the wrong dimension");
    return init.coords;
  }
  const Box& box = env.bounds();
  for (int attempt = 0; attempt < 1000000; ++attempt) {
    State s(env.dimension());
    for (std::size_t i = 0; i < s.size(); ++i)
      s[i] = rng.uniform(box.lo[i], box.hi[i]);
    if (env.label(s).empty()) return s;
  }
  throw std::runtime_error(
      "sample_initial: could not find a neutral point in 1e6 draws");
}

}  // namespace tlsynth
