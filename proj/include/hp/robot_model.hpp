#pragma once

// Revolute serial chain with collision-check balls (CCBs).
//
// Joint j sits at `offset` (expressed in the frame of joint j-1, meters) and
// rotates about `axis` (unit vector in the same frame). A ball is rigidly
// attached to the link driven by its parent joint.

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Geometry>

#include "hp/json_io.hpp"
#include "hp/types.hpp"

namespace hp {

struct Joint {
  Vec3 axis;
  Vec3 offset;
};

struct CollisionBall {
  int parent;
  Vec3 offset;
  double radius;
};

struct JointLimits {
  Vec min;
  Vec max;
};

class RobotModel {
 public:
  RobotModel(std::vector<Joint> joints, JointLimits limits, std::vector<CollisionBall> balls)
      : joints_(std::move(joints)), limits_(std::move(limits)), balls_(std::move(balls)) {
    const auto dof = static_cast<Index>(joints_.size());
    if (dof < 1) throw std::domain_error("RobotModel: no joints");
    for (auto& joint : joints_) {
      const double norm = joint.axis.norm();
      if (!(norm > 0.0) || !joint.axis.allFinite() || !joint.offset.allFinite()) {
        throw std::domain_error("RobotModel: joint axis must be finite and non-zero");
      }
      joint.axis /= norm;
    }
    if (limits_.min.size() != dof || limits_.max.size() != dof) {
      throw std::domain_error("RobotModel: limit vectors must have one entry per joint");
    }
    if (!(limits_.min.array() < limits_.max.array()).all()) {
      throw std::domain_error("RobotModel: limits require min < max for every joint");
    }
    for (const auto& ball : balls_) {
      if (ball.parent < 0 || ball.parent >= dof) {
        throw std::domain_error("RobotModel: ball parent index out of range");
      }
      if (!(ball.radius > 0.0) || !ball.offset.allFinite()) {
        throw std::domain_error("RobotModel: ball radius must be positive");
      }
    }
  }

  Index dof() const { return static_cast<Index>(joints_.size()); }
  const std::vector<Joint>& joints() const { return joints_; }
  const JointLimits& limits() const { return limits_; }
  const std::vector<CollisionBall>& balls() const { return balls_; }

  static RobotModel from_json(const Json& doc) {
    json_io::check_keys(doc, "robot", {"version", "joints", "limits", "ccbs"});
    json_io::check_version(doc, "robot", 1);
    std::vector<Joint> joints;
    for (const auto& j : doc.at("joints")) {
      json_io::check_keys(j, "robot.joints[]", {"axis", "offset"});
      joints.push_back({json_io::vec3(j.at("axis"), "joint axis"),
                        json_io::vec3(j.at("offset"), "joint offset")});
    }
    const auto dof = static_cast<Index>(joints.size());
    const Json& lim = doc.at("limits");
    json_io::check_keys(lim, "robot.limits", {"min", "max"});
    JointLimits limits{json_io::vector(lim.at("min"), "limits.min", dof),
                       json_io::vector(lim.at("max"), "limits.max", dof)};
    std::vector<CollisionBall> balls;
    for (const auto& b : doc.at("ccbs")) {
      json_io::check_keys(b, "robot.ccbs[]", {"parent", "offset", "radius"});
      if (!b.at("parent").is_number_integer()) throw IoError("ccb parent must be an integer");
      balls.push_back({b.at("parent").get<int>(), json_io::vec3(b.at("offset"), "ccb offset"),
                       json_io::number(b.at("radius"), "ccb radius")});
    }
    try {
      return RobotModel(std::move(joints), std::move(limits), std::move(balls));
    } catch (const std::domain_error& e) {
      throw IoError(e.what());
    }
  }

  static RobotModel load(const std::filesystem::path& path) {
    try {
      return from_json(json_io::read_file(path));
    } catch (const IoError& e) {
      throw IoError(path.string() + ": " + e.what());
    } catch (const Json::exception& e) {
      throw IoError(path.string() + ": " + e.what());
    }
  }

 private:
  std::vector<Joint> joints_;
  JointLimits limits_;
  std::vector<CollisionBall> balls_;
};

/// World-frame pose of every joint for one configuration.
struct ChainFrames {
  std::vector<Vec3> origins;  // joint positions
  std::vector<Vec3> axes;     // world rotation axes
  std::vector<Mat3> rotations;  // link orientation after each joint
};

struct BallState {
  Vec3 center;
  double radius;
  /// 3 x M, d center / d theta. Columns past the parent joint are zero.
  Mat jacobian;
};

inline ChainFrames chain_frames(const RobotModel& robot, const Vec& theta) {
  if (theta.size() != robot.dof()) throw std::domain_error("chain_frames: wrong configuration size");
  ChainFrames frames;
  const auto dof = static_cast<std::size_t>(robot.dof());
  frames.origins.reserve(dof);
  frames.axes.reserve(dof);
  frames.rotations.reserve(dof);
  Vec3 position = Vec3::Zero();
  Mat3 rotation = Mat3::Identity();
  for (std::size_t j = 0; j < dof; ++j) {
    const Joint& joint = robot.joints()[j];
    position += rotation * joint.offset;
    const Vec3 axis = rotation * joint.axis;
    rotation = rotation * Eigen::AngleAxisd(theta(static_cast<Index>(j)), joint.axis).toRotationMatrix();
    frames.origins.push_back(position);
    frames.axes.push_back(axis);
    frames.rotations.push_back(rotation);
  }
  return frames;
}

inline BallState ball_state(const RobotModel& robot, const ChainFrames& frames, std::size_t ball) {
  const CollisionBall& b = robot.balls()[ball];
  const auto parent = static_cast<std::size_t>(b.parent);
  BallState state{frames.origins[parent] + frames.rotations[parent] * b.offset, b.radius,
                  Mat::Zero(3, robot.dof())};
  for (std::size_t j = 0; j <= parent; ++j) {
    state.jacobian.col(static_cast<Index>(j)) = frames.axes[j].cross(state.center - frames.origins[j]);
  }
  return state;
}

/// Centers, radii and Jacobians of every collision ball. Limits are not enforced.
inline std::vector<BallState> forward_kinematics(const RobotModel& robot, const Vec& theta) {
  const ChainFrames frames = chain_frames(robot, theta);
  std::vector<BallState> states;
  states.reserve(robot.balls().size());
  for (std::size_t i = 0; i < robot.balls().size(); ++i) states.push_back(ball_state(robot, frames, i));
  return states;
}

/// d (J(theta) v) / d theta for one ball: the 3 x M matrix whose column k is
/// sum_j v_j dJ_j/dtheta_k. With v = joint velocity this is the rate term of
/// the ball acceleration.
inline Mat jacobian_rate(const RobotModel& robot, const ChainFrames& frames, const BallState& state,
                         std::size_t ball, const Vec& v) {
  const auto parent = static_cast<Index>(robot.balls()[ball].parent);
  Mat out = Mat::Zero(3, robot.dof());
  for (Index k = 0; k <= parent; ++k) {
    Vec3 column = Vec3::Zero();
    for (Index j = 0; j <= parent; ++j) {
      const Vec3 jac_j = state.jacobian.col(j);
      const Vec3 jac_k = state.jacobian.col(k);
      // rotating about an upstream (or the same) axis rotates column j rigidly;
      // a downstream joint only moves the ball center.
      column += v(j) * (k <= j ? frames.axes[static_cast<std::size_t>(k)].cross(jac_j)
                               : frames.axes[static_cast<std::size_t>(j)].cross(jac_k));
    }
    out.col(k) = column;
  }
  return out;
}

inline bool within_limits(const RobotModel& robot, const Vec& theta, double slack = 0.0) {
  return theta.size() == robot.dof() &&
         (theta.array() >= robot.limits().min.array() - slack).all() &&
         (theta.array() <= robot.limits().max.array() + slack).all();
}

}  // namespace hp
