#pragma once

// Analytic signed-distance environment and the epsilon-buffered hinge cost.

#include <cmath>
#include <filesystem>
#include <limits>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "hp/json_io.hpp"
#include "hp/types.hpp"

namespace hp {

struct Sphere {
  Vec3 center;
  double radius;
};

/// Axis-aligned box.
struct Box {
  Vec3 min;
  Vec3 max;
};

struct Capsule {
  Vec3 p0;
  Vec3 p1;
  double radius;
};

using Primitive = std::variant<Sphere, Box, Capsule>;

struct DistanceSample {
  double distance;
  Vec3 gradient;
};

namespace sdf {

inline Vec3 any_unit_normal_to(const Vec3& axis) {
  const Vec3 trial = std::abs(axis.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  return axis.cross(trial).cross(axis).normalized();
}

inline DistanceSample eval(const Sphere& s, const Vec3& p) {
  const Vec3 r = p - s.center;
  const double n = r.norm();
  return {n - s.radius, n > 0.0 ? Vec3(r / n) : Vec3(Vec3::UnitX())};
}

inline DistanceSample eval(const Box& b, const Vec3& p) {
  const Vec3 center = 0.5 * (b.min + b.max);
  const Vec3 half = 0.5 * (b.max - b.min);
  const Vec3 rel = p - center;
  const Vec3 q = rel.cwiseAbs() - half;
  const Vec3 outside = q.cwiseMax(0.0);
  const double outside_norm = outside.norm();
  if (outside_norm > 0.0) {
    Vec3 grad;
    for (int k = 0; k < 3; ++k) grad(k) = (rel(k) < 0.0 ? -1.0 : 1.0) * outside(k) / outside_norm;
    return {outside_norm, grad};
  }
  // inside or on the surface: nearest face, lowest axis on ties
  Index axis = 0;
  for (Index k = 1; k < 3; ++k) {
    if (q(k) > q(axis)) axis = k;
  }
  Vec3 grad = Vec3::Zero();
  grad(axis) = rel(axis) < 0.0 ? -1.0 : 1.0;
  return {q(axis), grad};
}

inline DistanceSample eval(const Capsule& c, const Vec3& p) {
  const Vec3 seg = c.p1 - c.p0;
  const double len2 = seg.squaredNorm();
  const double s = len2 > 0.0 ? std::clamp((p - c.p0).dot(seg) / len2, 0.0, 1.0) : 0.0;
  const Vec3 r = p - (c.p0 + s * seg);
  const double n = r.norm();
  if (n > 0.0) return {n - c.radius, r / n};
  return {-c.radius, len2 > 0.0 ? any_unit_normal_to(seg / std::sqrt(len2)) : Vec3(Vec3::UnitX())};
}

inline void validate(const Sphere& s) {
  if (!s.center.allFinite() || !(s.radius > 0.0) || !std::isfinite(s.radius)) {
    throw std::domain_error("sphere: finite center and positive radius required");
  }
}
inline void validate(const Box& b) {
  if (!b.min.allFinite() || !b.max.allFinite() || !(b.min.array() < b.max.array()).all()) {
    throw std::domain_error("box: finite corners with min < max required");
  }
}
inline void validate(const Capsule& c) {
  if (!c.p0.allFinite() || !c.p1.allFinite() || !(c.radius > 0.0) || !std::isfinite(c.radius)) {
    throw std::domain_error("capsule: finite endpoints and positive radius required");
  }
}

}  // namespace sdf

struct SceneDistance {
  double distance;  // to the ball surface; +inf for an empty scene
  Vec3 gradient;    // of the closest primitive's SDF
  int primitive;    // -1 for an empty scene
};

class Scene {
 public:
  Scene() = default;
  explicit Scene(std::vector<Primitive> obstacles) : obstacles_(std::move(obstacles)) {
    for (const auto& o : obstacles_) std::visit([](const auto& p) { sdf::validate(p); }, o);
  }

  const std::vector<Primitive>& obstacles() const { return obstacles_; }
  bool empty() const { return obstacles_.empty(); }

  /// Minimum primitive SDF minus the ball radius; ties go to the lowest index.
  SceneDistance signed_distance(const Vec3& point, double ball_radius = 0.0) const {
    SceneDistance best{std::numeric_limits<double>::infinity(), Vec3::Zero(), -1};
    for (std::size_t i = 0; i < obstacles_.size(); ++i) {
      const DistanceSample s = std::visit([&](const auto& p) { return sdf::eval(p, point); }, obstacles_[i]);
      if (s.distance < best.distance) best = {s.distance, s.gradient, static_cast<int>(i)};
    }
    if (best.primitive >= 0) best.distance -= ball_radius;
    return best;
  }

  static Scene from_json(const Json& doc) {
    json_io::check_keys(doc, "scene", {"version", "obstacles"});
    json_io::check_version(doc, "scene", 1);
    std::vector<Primitive> obstacles;
    for (const auto& o : doc.at("obstacles")) {
      if (!o.is_object() || !o.contains("type") || !o.at("type").is_string()) {
        throw IoError("scene.obstacles[]: missing type");
      }
      const auto type = o.at("type").get<std::string>();
      if (type == "sphere") {
        json_io::check_keys(o, "sphere", {"type", "center", "radius"});
        obstacles.emplace_back(Sphere{json_io::vec3(o.at("center"), "sphere center"),
                                      json_io::number(o.at("radius"), "sphere radius")});
      } else if (type == "box") {
        json_io::check_keys(o, "box", {"type", "min", "max"});
        obstacles.emplace_back(Box{json_io::vec3(o.at("min"), "box min"), json_io::vec3(o.at("max"), "box max")});
      } else if (type == "capsule") {
        json_io::check_keys(o, "capsule", {"type", "p0", "p1", "radius"});
        obstacles.emplace_back(Capsule{json_io::vec3(o.at("p0"), "capsule p0"),
                                       json_io::vec3(o.at("p1"), "capsule p1"),
                                       json_io::number(o.at("radius"), "capsule radius")});
      } else {
        throw IoError("scene.obstacles[]: unknown type '" + type + "'");
      }
    }
    try {
      return Scene(std::move(obstacles));
    } catch (const std::domain_error& e) {
      throw IoError(e.what());
    }
  }

  static Scene load(const std::filesystem::path& path) {
    try {
      return from_json(json_io::read_file(path));
    } catch (const IoError& e) {
      throw IoError(path.string() + ": " + e.what());
    } catch (const Json::exception& e) {
      throw IoError(path.string() + ": " + e.what());
    }
  }

 private:
  std::vector<Primitive> obstacles_;
};

struct CostParams {
  double epsilon = 0.05;
};

struct CostSample {
  double cost;
  double slope;  // dc/dd
};

/// Hinge cost: 0 beyond the buffer, epsilon - d inside it (d == epsilon included).
inline CostSample collision_cost(double d, const CostParams& params) {
  if (d > params.epsilon) return {0.0, 0.0};
  return {params.epsilon - d, -1.0};
}

}  // namespace hp
