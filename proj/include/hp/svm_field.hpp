#pragma once

// Gaussian-kernel SVM collision field learned from SDF-labeled workspace
// points.
//
// Each sampled configuration contributes one point per collision ball:
// label +1 (collided) when the ball's signed distance is <= epsilon, else -1.
// The trained decision function g(x) = sum_n alpha_n y_n k(x, x_n) + b is
// shifted by one and clamped, c(x) = max(g(x) + 1, 0), so the safe-side
// margin g = -1 is the zero level set.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <list>
#include <numeric>
#include <random>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "hp/json_io.hpp"
#include "hp/robot_model.hpp"
#include "hp/scene.hpp"
#include "hp/types.hpp"

namespace hp {

struct LabeledPoint {
  Vec3 x;
  int y;  // -1 safe, +1 collided
};

struct DatasetParams {
  std::size_t n_samples = 2000;  // uniformly drawn configurations
  double epsilon = 0.05;
  std::uint64_t seed = 1;
  /// Top up with configurations near collided ones while fewer than this
  /// fraction of points are collided.
  double min_collided_fraction = 0.10;
  /// Extra configurations allowed for the top-up, as a multiple of n_samples.
  double balance_budget = 4.0;
};

namespace detail {

inline void label_configuration(const RobotModel& robot, const Scene& scene, const Vec& theta,
                                double epsilon, std::vector<LabeledPoint>& out, bool& any_collided) {
  any_collided = false;
  for (const BallState& ball : forward_kinematics(robot, theta)) {
    const double d = scene.signed_distance(ball.center, ball.radius).distance;
    const int y = d <= epsilon ? +1 : -1;
    any_collided = any_collided || y > 0;
    out.push_back({ball.center, y});
  }
}

inline double collided_fraction(const std::vector<LabeledPoint>& points) {
  if (points.empty()) return 0.0;
  const auto collided = std::count_if(points.begin(), points.end(), [](const auto& p) { return p.y > 0; });
  return static_cast<double>(collided) / static_cast<double>(points.size());
}

}  // namespace detail

/// Labels the ball centers of uniformly sampled configurations. Deterministic
/// for a given seed.
inline std::vector<LabeledPoint> generate_dataset(const RobotModel& robot, const Scene& scene,
                                                  const DatasetParams& params) {
  if (params.n_samples < 1) throw std::domain_error("generate_dataset: n_samples must be >= 1");
  std::mt19937_64 rng(params.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const Vec& lo = robot.limits().min;
  const Vec& hi = robot.limits().max;

  std::vector<LabeledPoint> points;
  points.reserve(params.n_samples * robot.balls().size());
  std::vector<Vec> collided_configs;
  Vec theta(robot.dof());
  for (std::size_t s = 0; s < params.n_samples; ++s) {
    for (Index j = 0; j < robot.dof(); ++j) theta(j) = lo(j) + (hi(j) - lo(j)) * unit(rng);
    bool hit = false;
    detail::label_configuration(robot, scene, theta, params.epsilon, points, hit);
    if (hit) collided_configs.push_back(theta);
  }

  // near-obstacle top-up for heavily imbalanced scenes
  const auto budget = static_cast<std::size_t>(params.balance_budget * static_cast<double>(params.n_samples));
  std::normal_distribution<double> noise(0.0, 1.0);
  std::size_t extra = 0;
  while (!collided_configs.empty() && extra < budget &&
         detail::collided_fraction(points) < params.min_collided_fraction) {
    const Vec& seed_config = collided_configs[static_cast<std::size_t>(unit(rng) * static_cast<double>(collided_configs.size())) %
                                              collided_configs.size()];
    for (Index j = 0; j < robot.dof(); ++j) {
      theta(j) = std::clamp(seed_config(j) + 0.05 * (hi(j) - lo(j)) * noise(rng), lo(j), hi(j));
    }
    bool hit = false;
    detail::label_configuration(robot, scene, theta, params.epsilon, points, hit);
    ++extra;
  }
  return points;
}

struct SupportVector {
  Vec3 x;
  double alpha;
  int y;
};

/// Trained field. Immutable once built.
class CollisionFieldModel {
 public:
  static constexpr int kVersion = 1;

  CollisionFieldModel(double sigma, double bias, std::vector<SupportVector> svs)
      : sigma_(sigma), bias_(bias), svs_(std::move(svs)) {
    if (!(sigma_ > 0.0) || !std::isfinite(sigma_)) throw std::domain_error("model: sigma must be positive");
    if (!std::isfinite(bias_)) throw std::domain_error("model: non-finite bias");
    if (svs_.empty()) throw std::domain_error("model: no support vectors");
    centers_.resize(3, static_cast<Index>(svs_.size()));
    weights_.resize(static_cast<Index>(svs_.size()));
    for (std::size_t n = 0; n < svs_.size(); ++n) {
      const auto& sv = svs_[n];
      if (!(sv.alpha >= 0.0) || !std::isfinite(sv.alpha) || (sv.y != 1 && sv.y != -1) || !sv.x.allFinite()) {
        throw std::domain_error("model: invalid support vector");
      }
      centers_.col(static_cast<Index>(n)) = sv.x;
      weights_(static_cast<Index>(n)) = sv.alpha * sv.y;
    }
    inv_two_sigma2_ = 1.0 / (2.0 * sigma_ * sigma_);
  }

  double sigma() const { return sigma_; }
  double bias() const { return bias_; }
  const std::vector<SupportVector>& support_vectors() const { return svs_; }

  double kernel(const Vec3& a, const Vec3& b) const {
    return std::exp(-(a - b).squaredNorm() * inv_two_sigma2_);
  }

  /// sum_n alpha_n y_n k(x, x_n) + b
  double decision(const Vec3& x) const {
    double sum = 0.0;
    for (Index n = 0; n < centers_.cols(); ++n) {
      sum += weights_(n) * std::exp(-(x - centers_.col(n)).squaredNorm() * inv_two_sigma2_);
    }
    return sum + bias_;
  }

  /// Learned cost max(decision + 1, 0).
  double value(const Vec3& x) const { return std::max(decision(x) + 1.0, 0.0); }

  /// Gradient of `value`; zero wherever the clamp is active.
  Vec3 gradient(const Vec3& x) const {
    Vec3 grad = Vec3::Zero();
    double sum = 0.0;
    const double inv_sigma2 = 2.0 * inv_two_sigma2_;
    for (Index n = 0; n < centers_.cols(); ++n) {
      const Vec3 r = x - centers_.col(n);
      const double k = weights_(n) * std::exp(-r.squaredNorm() * inv_two_sigma2_);
      sum += k;
      grad -= inv_sigma2 * k * r;
    }
    return sum + bias_ + 1.0 > 0.0 ? grad : Vec3::Zero();
  }

  Json to_json() const {
    Json svs = Json::array();
    for (const auto& sv : svs_) {
      svs.push_back({{"x", {sv.x.x(), sv.x.y(), sv.x.z()}}, {"alpha", sv.alpha}, {"y", sv.y}});
    }
    return {{"version", kVersion}, {"sigma", sigma_}, {"bias", bias_}, {"svs", svs}};
  }

  static CollisionFieldModel from_json(const Json& doc) {
    json_io::check_keys(doc, "model", {"version", "sigma", "bias", "svs"});
    json_io::check_version(doc, "model", kVersion);
    if (!doc.at("svs").is_array()) throw IoError("model: svs must be an array");
    std::vector<SupportVector> svs;
    for (const auto& sv : doc.at("svs")) {
      json_io::check_keys(sv, "model.svs[]", {"x", "alpha", "y"});
      if (!sv.at("y").is_number_integer()) throw IoError("model.svs[]: y must be an integer");
      svs.push_back({json_io::vec3(sv.at("x"), "sv x"), json_io::number(sv.at("alpha"), "sv alpha"),
                     sv.at("y").get<int>()});
    }
    try {
      return CollisionFieldModel(json_io::number(doc.at("sigma"), "sigma"),
                                 json_io::number(doc.at("bias"), "bias"), std::move(svs));
    } catch (const std::domain_error& e) {
      throw IoError(e.what());
    }
  }

  void save(const std::filesystem::path& path) const { json_io::write_file(path, to_json()); }

  static CollisionFieldModel load(const std::filesystem::path& path) {
    try {
      return from_json(json_io::read_file(path));
    } catch (const IoError& e) {
      throw IoError(path.string() + ": " + e.what());
    } catch (const Json::exception& e) {
      throw IoError(path.string() + ": " + e.what());
    }
  }

 private:
  double sigma_;
  double bias_;
  std::vector<SupportVector> svs_;
  Eigen::Matrix<double, 3, Eigen::Dynamic> centers_;
  Vec weights_;
  double inv_two_sigma2_ = 0.0;
};

/// Twice the mean nearest-neighbor distance among distinct collided points.
inline double default_sigma(const std::vector<LabeledPoint>& data) {
  std::vector<Vec3> collided;
  for (const auto& p : data) {
    if (p.y > 0) collided.push_back(p.x);
  }
  double sum = 0.0;
  std::size_t counted = 0;
  for (std::size_t i = 0; i < collided.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < collided.size(); ++j) {
      const double d2 = (collided[i] - collided[j]).squaredNorm();
      if (j != i && d2 > 0.0) best = std::min(best, d2);
    }
    if (std::isfinite(best)) {
      sum += std::sqrt(best);
      ++counted;
    }
  }
  if (counted == 0) throw std::domain_error("default_sigma: need at least two distinct collided points");
  return 2.0 * sum / static_cast<double>(counted);
}

struct SvmHyper {
  double sigma = 0.0;  // <= 0 selects default_sigma
  double c_box = 10.0;
  double tol = 1e-3;
  int max_passes = 100;  // iteration budget = max_passes * dataset size
  std::uint64_t seed = 1;
  std::size_t cache_mb = 256;
};

struct TrainResult {
  CollisionFieldModel model;
  Vec alphas;  // one multiplier per training point, in dataset order
  bool converged;
  long iterations;
  double gap;  // final maximal KKT violation pair m - M
  double c_box;
};

namespace detail {

/// LRU cache of kernel columns.
class KernelCache {
 public:
  KernelCache(const std::vector<Vec3>& x, double sigma, std::size_t bytes)
      : x_(x), inv_two_sigma2_(1.0 / (2.0 * sigma * sigma)),
        capacity_(std::max<std::size_t>(2, bytes / (sizeof(double) * std::max<std::size_t>(1, x.size())))) {}

  const std::vector<double>& column(std::size_t i) {
    if (auto it = index_.find(i); it != index_.end()) {
      order_.splice(order_.begin(), order_, it->second);
      return it->second->second;
    }
    if (order_.size() >= capacity_) {
      index_.erase(order_.back().first);
      order_.pop_back();
    }
    std::vector<double> col(x_.size());
    for (std::size_t k = 0; k < x_.size(); ++k) col[k] = std::exp(-(x_[i] - x_[k]).squaredNorm() * inv_two_sigma2_);
    order_.emplace_front(i, std::move(col));
    index_[i] = order_.begin();
    return order_.front().second;
  }

 private:
  const std::vector<Vec3>& x_;
  double inv_two_sigma2_;
  std::size_t capacity_;
  std::list<std::pair<std::size_t, std::vector<double>>> order_;
  std::unordered_map<std::size_t, std::list<std::pair<std::size_t, std::vector<double>>>::iterator> index_;
};

}  // namespace detail

/// Soft-margin kernel SVM by sequential minimal optimization with
/// second-order working-set selection. Stops when the maximal violating pair
/// gap drops below `tol`, which bounds every KKT violation by `tol`.
inline TrainResult train_smo(const std::vector<LabeledPoint>& dataset, const SvmHyper& hyper) {
  const std::size_t n = dataset.size();
  const bool has_pos = std::any_of(dataset.begin(), dataset.end(), [](const auto& p) { return p.y > 0; });
  const bool has_neg = std::any_of(dataset.begin(), dataset.end(), [](const auto& p) { return p.y < 0; });
  if (!has_pos || !has_neg) throw std::domain_error("train_smo: dataset must contain both labels");
  if (!(hyper.c_box > 0.0) || !(hyper.tol > 0.0)) throw std::domain_error("train_smo: invalid hyperparameters");
  const double sigma = hyper.sigma > 0.0 ? hyper.sigma : default_sigma(dataset);

  // seeded visiting order; results are mapped back to dataset order
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(hyper.seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<Vec3> x(n);
  std::vector<double> y(n);
  for (std::size_t k = 0; k < n; ++k) {
    x[k] = dataset[order[k]].x;
    y[k] = dataset[order[k]].y > 0 ? 1.0 : -1.0;
  }

  const double C = hyper.c_box;
  constexpr double kTau = 1e-12;
  std::vector<double> alpha(n, 0.0);
  std::vector<double> grad(n, -1.0);  // gradient of 1/2 a'Qa - e'a
  detail::KernelCache cache(x, sigma, hyper.cache_mb << 20);
  const auto upper = [&](std::size_t t) { return alpha[t] >= C; };
  const auto lower = [&](std::size_t t) { return alpha[t] <= 0.0; };

  const long max_iter = static_cast<long>(hyper.max_passes) * static_cast<long>(std::max<std::size_t>(n, 1));
  long iter = 0;
  bool converged = false;
  double gap = std::numeric_limits<double>::infinity();
  for (; iter < max_iter; ++iter) {
    double gmax = -std::numeric_limits<double>::infinity();
    std::size_t i = n;
    for (std::size_t t = 0; t < n; ++t) {
      const double v = -y[t] * grad[t];
      const bool in_up = y[t] > 0 ? !upper(t) : !lower(t);
      if (in_up && v > gmax) {
        gmax = v;
        i = t;
      }
    }
    if (i == n) {
      converged = true;
      gap = 0.0;
      break;
    }
    const std::vector<double>& ki = cache.column(i);
    double gmin = std::numeric_limits<double>::infinity();
    double best_obj = std::numeric_limits<double>::infinity();
    std::size_t j = n;
    for (std::size_t t = 0; t < n; ++t) {
      const bool in_low = y[t] > 0 ? !lower(t) : !upper(t);
      if (!in_low) continue;
      const double v = -y[t] * grad[t];
      gmin = std::min(gmin, v);
      const double diff = gmax - v;
      if (diff > 0.0) {
        double quad = 2.0 - 2.0 * ki[t];  // k(x,x) = 1 for the Gaussian kernel
        if (quad <= 0.0) quad = kTau;
        const double obj = -(diff * diff) / quad;
        if (obj < best_obj) {
          best_obj = obj;
          j = t;
        }
      }
    }
    gap = gmax - gmin;
    if (gap < hyper.tol || j == n) {
      converged = true;
      break;
    }

    // i is the most recent entry and the cache holds at least two columns,
    // so fetching j cannot evict it
    const std::vector<double>& kj = cache.column(j);
    const double kij = ki[j];
    const double old_ai = alpha[i];
    const double old_aj = alpha[j];
    if (y[i] != y[j]) {
      double quad = 2.0 - 2.0 * kij;
      if (quad <= 0.0) quad = kTau;
      const double delta = (-grad[i] - grad[j]) / quad;
      const double diff = alpha[i] - alpha[j];
      alpha[i] += delta;
      alpha[j] += delta;
      if (diff > 0.0) {
        if (alpha[j] < 0.0) { alpha[j] = 0.0; alpha[i] = diff; }
      } else {
        if (alpha[i] < 0.0) { alpha[i] = 0.0; alpha[j] = -diff; }
      }
      if (diff > 0.0) {
        if (alpha[i] > C) { alpha[i] = C; alpha[j] = C - diff; }
      } else {
        if (alpha[j] > C) { alpha[j] = C; alpha[i] = C + diff; }
      }
    } else {
      double quad = 2.0 - 2.0 * kij;
      if (quad <= 0.0) quad = kTau;
      const double delta = (grad[i] - grad[j]) / quad;
      const double sum = alpha[i] + alpha[j];
      alpha[i] -= delta;
      alpha[j] += delta;
      if (sum > C) {
        if (alpha[i] > C) { alpha[i] = C; alpha[j] = sum - C; }
      } else {
        if (alpha[j] < 0.0) { alpha[j] = 0.0; alpha[i] = sum; }
      }
      if (sum > C) {
        if (alpha[j] > C) { alpha[j] = C; alpha[i] = sum - C; }
      } else {
        if (alpha[i] < 0.0) { alpha[i] = 0.0; alpha[j] = sum; }
      }
    }
    const double dai = alpha[i] - old_ai;
    const double daj = alpha[j] - old_aj;
    for (std::size_t t = 0; t < n; ++t) {
      grad[t] += y[t] * (y[i] * ki[t] * dai + y[j] * kj[t] * daj);
    }
  }

  // bias: mean over free (on-margin) vectors, else the midpoint of the feasible interval
  double ub = std::numeric_limits<double>::infinity();
  double lb = -std::numeric_limits<double>::infinity();
  double free_sum = 0.0;
  std::size_t free_count = 0;
  for (std::size_t t = 0; t < n; ++t) {
    const double v = -y[t] * grad[t];
    if (upper(t)) {
      if (y[t] < 0) lb = std::max(lb, v); else ub = std::min(ub, v);
    } else if (lower(t)) {
      if (y[t] > 0) lb = std::max(lb, v); else ub = std::min(ub, v);
    } else {
      free_sum += v;
      ++free_count;
    }
  }
  const double bias = free_count > 0 ? free_sum / static_cast<double>(free_count) : 0.5 * (ub + lb);

  Vec alphas(static_cast<Index>(n));
  std::vector<SupportVector> svs;
  for (std::size_t k = 0; k < n; ++k) alphas(static_cast<Index>(order[k])) = alpha[k];
  for (std::size_t k = 0; k < n; ++k) {
    const double a = alphas(static_cast<Index>(k));
    if (a > 1e-8) svs.push_back({dataset[k].x, a, dataset[k].y});
  }
  return {CollisionFieldModel(sigma, bias, std::move(svs)), std::move(alphas), converged, iter, gap, C};
}

/// Dual objective 1/2 a'Qa - sum(a) for the Gaussian kernel of width sigma.
inline double dual_objective(const std::vector<LabeledPoint>& data, const Vec& alphas, double sigma) {
  const double inv = 1.0 / (2.0 * sigma * sigma);
  double quad = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double ai = alphas(static_cast<Index>(i));
    if (ai == 0.0) continue;
    for (std::size_t j = 0; j < data.size(); ++j) {
      const double aj = alphas(static_cast<Index>(j));
      if (aj == 0.0) continue;
      quad += ai * aj * data[i].y * data[j].y * std::exp(-(data[i].x - data[j].x).squaredNorm() * inv);
    }
  }
  return 0.5 * quad - alphas.sum();
}

/// Largest violation of the soft-margin KKT conditions over the training set,
/// using the trained decision function:
///   alpha = 0      => y f >= 1
///   0 < alpha < C  => y f == 1
///   alpha = C      => y f <= 1
inline double max_kkt_violation(const std::vector<LabeledPoint>& data, const Vec& alphas,
                                const CollisionFieldModel& model, double c_box) {
  double worst = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double a = alphas(static_cast<Index>(i));
    const double margin = data[i].y * model.decision(data[i].x);
    double v = 0.0;
    if (a <= 1e-8) {
      v = std::max(0.0, 1.0 - margin);
    } else if (a >= c_box - 1e-8) {
      v = std::max(0.0, margin - 1.0);
    } else {
      v = std::abs(margin - 1.0);
    }
    worst = std::max(worst, v);
  }
  return worst;
}

struct ClassificationReport {
  double accuracy;
  double collided_recall;
};

/// Sign agreement of decision(x) with the labels; recall is over y = +1.
inline ClassificationReport classify(const CollisionFieldModel& model, const std::vector<LabeledPoint>& data) {
  std::size_t correct = 0;
  std::size_t positives = 0;
  std::size_t caught = 0;
  for (const auto& p : data) {
    const int predicted = model.decision(p.x) > 0.0 ? 1 : -1;
    correct += predicted == p.y ? 1 : 0;
    if (p.y > 0) {
      ++positives;
      caught += predicted > 0 ? 1 : 0;
    }
  }
  return {data.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(data.size()),
          positives == 0 ? 1.0 : static_cast<double>(caught) / static_cast<double>(positives)};
}

/// Fraction of random segments inside the box [lo, hi] on which the learned
/// cost is midpoint-convex. A diagnostic only; the field is not convex in general.
inline double midpoint_convex_fraction(const CollisionFieldModel& model, const Vec3& lo, const Vec3& hi,
                                       std::size_t segments, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto draw = [&] {
    Vec3 p;
    for (int k = 0; k < 3; ++k) p(k) = lo(k) + (hi(k) - lo(k)) * unit(rng);
    return p;
  };
  std::size_t convex = 0;
  for (std::size_t s = 0; s < segments; ++s) {
    const Vec3 a = draw();
    const Vec3 b = draw();
    if (model.value(0.5 * (a + b)) <= 0.5 * (model.value(a) + model.value(b)) + 1e-12) ++convex;
  }
  return segments == 0 ? 1.0 : static_cast<double>(convex) / static_cast<double>(segments);
}

}  // namespace hp
