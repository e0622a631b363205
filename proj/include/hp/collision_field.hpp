#pragma once

// Per-ball collision cost source used by the potential energy: either the
// hinge on the analytic SDF or the learned SVM field.

#include <string>
#include <string_view>
#include <stdexcept>

#include "hp/scene.hpp"
#include "hp/svm_field.hpp"
#include "hp/types.hpp"

namespace hp {

enum class FieldSource { raw_sdf, learned_svm };

inline std::string_view to_string(FieldSource source) {
  return source == FieldSource::raw_sdf ? "raw" : "svm";
}

inline FieldSource parse_field_source(std::string_view name) {
  if (name == "raw") return FieldSource::raw_sdf;
  if (name == "svm") return FieldSource::learned_svm;
  throw std::invalid_argument("unknown field source '" + std::string(name) + "' (expected raw|svm)");
}

class CollisionField {
 public:
  virtual ~CollisionField() = default;
  /// Cost c >= 0 for a ball of the given radius centered at `center`.
  virtual double cost(const Vec3& center, double radius) const = 0;
  /// dc / d center.
  virtual Vec3 cost_gradient(const Vec3& center, double radius) const = 0;
};

/// epsilon-buffered hinge on the scene signed distance.
class SdfCollisionField final : public CollisionField {
 public:
  SdfCollisionField(const Scene& scene, CostParams params) : scene_(scene), params_(params) {}

  double cost(const Vec3& center, double radius) const override {
    return collision_cost(scene_.signed_distance(center, radius).distance, params_).cost;
  }

  Vec3 cost_gradient(const Vec3& center, double radius) const override {
    const SceneDistance d = scene_.signed_distance(center, radius);
    return collision_cost(d.distance, params_).slope * d.gradient;
  }

 private:
  const Scene& scene_;
  CostParams params_;
};

/// Learned field; the model was trained on ball centers, so the radius is unused.
class LearnedCollisionField final : public CollisionField {
 public:
  explicit LearnedCollisionField(const CollisionFieldModel& model) : model_(model) {}

  double cost(const Vec3& center, double) const override { return model_.value(center); }
  Vec3 cost_gradient(const Vec3& center, double) const override { return model_.gradient(center); }

 private:
  const CollisionFieldModel& model_;
};

}  // namespace hp
