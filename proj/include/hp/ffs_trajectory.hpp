#pragma once

// Cosine-series (motion harmonic) trajectory representation.
//
// A joint trajectory is theta_m(t) = sum_n a(m, n) * cos(2 pi n t / T) for
// t in [0, T/2]. Restricting the series to cosines makes the trajectory the
// half period of an even, T-periodic wave, so start (t = 0) and goal
// (t = T/2) are both rest points and there is no wrap-around jump.

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "hp/types.hpp"

namespace hp {

/// Uniform sample grid t = 0, 1, ..., T/2 over the half period.
class SampleGrid {
 public:
  explicit SampleGrid(int period) : period_(period) {
    if (period < 2 || period % 2 != 0) {
      throw std::domain_error("SampleGrid: period must be an even integer >= 2, got " +
                              std::to_string(period));
    }
  }

  int period() const { return period_; }
  int half() const { return period_ / 2; }
  /// Number of samples, T/2 + 1.
  int size() const { return period_ / 2 + 1; }

  friend bool operator==(const SampleGrid&, const SampleGrid&) = default;

 private:
  int period_;
};

/// M x (N+1) cosine amplitudes. Column 0 is the DC term.
///
/// The flat view is joint-major: [a(0,0) .. a(0,N), a(1,0) .. a(1,N), ...].
class AmplitudeMatrix {
 public:
  AmplitudeMatrix(Index joints, Index harmonics) : data_(Mat::Zero(joints, harmonics + 1)) {}

  explicit AmplitudeMatrix(Mat data) : data_(std::move(data)) {
    if (data_.rows() < 1 || data_.cols() < 1) {
      throw std::domain_error("AmplitudeMatrix: empty matrix");
    }
    if (!data_.allFinite()) {
      throw std::domain_error("AmplitudeMatrix: non-finite amplitude");
    }
  }

  static AmplitudeMatrix from_flat(const Vec& flat, Index joints, Index harmonics) {
    if (flat.size() != joints * (harmonics + 1)) {
      throw std::domain_error("AmplitudeMatrix::from_flat: expected " +
                              std::to_string(joints * (harmonics + 1)) + " entries, got " +
                              std::to_string(flat.size()));
    }
    using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    return AmplitudeMatrix(Mat(Eigen::Map<const RowMajor>(flat.data(), joints, harmonics + 1)));
  }

  Vec flat() const {
    using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    RowMajor rm = data_;
    return Eigen::Map<const Vec>(rm.data(), rm.size());
  }

  Index joints() const { return data_.rows(); }
  /// Highest harmonic order N.
  Index harmonics() const { return data_.cols() - 1; }
  Index flat_size() const { return data_.size(); }

  double operator()(Index m, Index n) const { return data_(m, n); }
  const Mat& matrix() const { return data_; }

 private:
  Mat data_;
};

/// (1, cos(w t), ..., cos(N w t)) with w = 2 pi / period.
inline RowVec cosine_row(double t, double period, Index harmonics) {
  RowVec row(harmonics + 1);
  const double w = 2.0 * std::numbers::pi / period;
  for (Index n = 0; n <= harmonics; ++n) row(n) = std::cos(w * static_cast<double>(n) * t);
  return row;
}

/// k-th time derivative of cosine_row (k = 0, 1, 2).
inline RowVec cosine_row_derivative(double t, double period, Index harmonics, int order) {
  RowVec row(harmonics + 1);
  const double w = 2.0 * std::numbers::pi / period;
  for (Index n = 0; n <= harmonics; ++n) {
    const double wn = w * static_cast<double>(n);
    switch (order) {
      case 0: row(n) = std::cos(wn * t); break;
      case 1: row(n) = -wn * std::sin(wn * t); break;
      case 2: row(n) = -wn * wn * std::cos(wn * t); break;
      default: throw std::domain_error("cosine_row_derivative: order must be 0, 1 or 2");
    }
  }
  return row;
}

/// Derivative rows with respect to the normalized phase tau = 2 pi t / T, i.e. the
/// time scale in which the half period lasts pi.
inline RowVec phase_row_derivative(double t, const SampleGrid& grid, Index harmonics, int order) {
  const double tau = 2.0 * std::numbers::pi * t / grid.period();
  return cosine_row_derivative(tau, 2.0 * std::numbers::pi, harmonics, order);
}

/// C_t^T v for C_t = I_M (x) row: the flat vector v (x) row^T.
inline Vec lift(const Vec& joint_vector, const RowVec& row) {
  const Index width = row.size();
  Vec out(joint_vector.size() * width);
  for (Index m = 0; m < joint_vector.size(); ++m) {
    out.segment(m * width, width) = joint_vector(m) * row.transpose();
  }
  return out;
}

/// Block-diagonal M x M(N+1) block C_t = I_M (x) cosine_row(t).
inline Mat basis_row(int t, const SampleGrid& grid, Index joints, Index harmonics) {
  if (t < 0 || t > grid.half()) {
    throw std::domain_error("basis_row: sample index " + std::to_string(t) + " outside [0, " +
                            std::to_string(grid.half()) + "]");
  }
  const RowVec row = cosine_row(t, grid.period(), harmonics);
  Mat block = Mat::Zero(joints, joints * (harmonics + 1));
  for (Index m = 0; m < joints; ++m) block.block(m, m * (harmonics + 1), 1, harmonics + 1) = row;
  return block;
}

/// All C_t stacked for t = 0..T/2; shape M(T/2+1) x M(N+1).
inline Mat basis_stack(const SampleGrid& grid, Index joints, Index harmonics) {
  Mat stack(joints * grid.size(), joints * (harmonics + 1));
  for (int t = 0; t <= grid.half(); ++t) {
    stack.middleRows(t * joints, joints) = basis_row(t, grid, joints, harmonics);
  }
  return stack;
}

inline Vec evaluate(const AmplitudeMatrix& a, double t, double period) {
  return a.matrix() * cosine_row(t, period, a.harmonics()).transpose();
}

inline Vec evaluate(const AmplitudeMatrix& a, double t, const SampleGrid& grid) {
  return evaluate(a, t, grid.period());
}

/// Joint velocities. Exactly zero at t = 0 and t = T/2.
inline Vec velocity(const AmplitudeMatrix& a, double t, double period) {
  return a.matrix() * cosine_row_derivative(t, period, a.harmonics(), 1).transpose();
}

inline Vec velocity(const AmplitudeMatrix& a, double t, const SampleGrid& grid) {
  return velocity(a, t, grid.period());
}

inline Vec acceleration(const AmplitudeMatrix& a, double t, double period) {
  return a.matrix() * cosine_row_derivative(t, period, a.harmonics(), 2).transpose();
}

/// Waypoint stack, one row per sample t = 0..T/2.
inline Mat discretize(const AmplitudeMatrix& a, const SampleGrid& grid) {
  Mat table(grid.size(), a.harmonics() + 1);
  for (int t = 0; t <= grid.half(); ++t) table.row(t) = cosine_row(t, grid.period(), a.harmonics());
  return table * a.matrix().transpose();
}

/// Half-period kinetic energy (pi/4) sum_m sum_{n>=1} n^2 a(m,n)^2.
inline double kinetic_energy(const AmplitudeMatrix& a) {
  double sum = 0.0;
  for (Index n = 1; n <= a.harmonics(); ++n) {
    sum += static_cast<double>(n * n) * a.matrix().col(n).squaredNorm();
  }
  return std::numbers::pi / 4.0 * sum;
}

/// Diagonal K with kinetic_energy(a) == a^T K a over the flat ordering.
/// Positive semidefinite: the DC entries are zero.
inline Mat kinetic_hessian(Index joints, Index harmonics) {
  Vec diag(joints * (harmonics + 1));
  for (Index m = 0; m < joints; ++m) {
    for (Index n = 0; n <= harmonics; ++n) {
      diag(m * (harmonics + 1) + n) = std::numbers::pi / 4.0 * static_cast<double>(n * n);
    }
  }
  return diag.asDiagonal();
}

/// Stacked start/goal equality rows [C_0; C_{T/2}].
inline Mat endpoint_rows(const SampleGrid& grid, Index joints, Index harmonics) {
  Mat rows(2 * joints, joints * (harmonics + 1));
  rows.topRows(joints) = basis_row(0, grid, joints, harmonics);
  rows.bottomRows(joints) = basis_row(grid.half(), grid, joints, harmonics);
  return rows;
}

/// Minimum-kinetic-energy amplitudes through the given start and goal.
///
/// Solves min a^T K a s.t. C_0 a = start, C_{T/2} a = goal through its KKT
/// system, with 1e-10 added on the DC diagonal where K vanishes.
inline AmplitudeMatrix init_min_kinetic(const Vec& start, const Vec& goal, Index harmonics,
                                        const SampleGrid& grid) {
  if (start.size() != goal.size() || start.size() < 1) {
    throw std::domain_error("init_min_kinetic: start/goal size mismatch");
  }
  if (harmonics < 1) throw std::domain_error("init_min_kinetic: need at least one harmonic");
  const Index joints = start.size();
  const Index n = joints * (harmonics + 1);
  const Index p = 2 * joints;

  Mat hessian = 2.0 * kinetic_hessian(joints, harmonics);
  for (Index m = 0; m < joints; ++m) hessian(m * (harmonics + 1), m * (harmonics + 1)) += 1e-10;

  const Mat rows = endpoint_rows(grid, joints, harmonics);
  Mat kkt = Mat::Zero(n + p, n + p);
  kkt.topLeftCorner(n, n) = hessian;
  kkt.topRightCorner(n, p) = rows.transpose();
  kkt.bottomLeftCorner(p, n) = rows;
  Vec rhs = Vec::Zero(n + p);
  rhs.tail(p) << start, goal;

  Eigen::FullPivLU<Mat> lu(kkt);
  if (!lu.isInvertible()) throw std::runtime_error("init_min_kinetic: singular KKT system");
  const Vec solution = lu.solve(rhs);
  return AmplitudeMatrix::from_flat(solution.head(n), joints, harmonics);
}

/// Least-squares amplitudes for a sampled waypoint table (rows t = 0..T/2).
/// When `pin_endpoints` is set the first and last rows are matched exactly.
inline AmplitudeMatrix fit_waypoints(const Mat& waypoints, const SampleGrid& grid, Index harmonics,
                                     bool pin_endpoints) {
  if (waypoints.rows() != grid.size()) {
    throw std::domain_error("fit_waypoints: expected " + std::to_string(grid.size()) +
                            " rows, got " + std::to_string(waypoints.rows()));
  }
  const Index joints = waypoints.cols();
  const Index width = harmonics + 1;
  Mat table(grid.size(), width);
  for (int t = 0; t <= grid.half(); ++t) table.row(t) = cosine_row(t, grid.period(), harmonics);

  Mat amplitudes(joints, width);
  if (!pin_endpoints) {
    const Eigen::ColPivHouseholderQR<Mat> qr(table);
    for (Index m = 0; m < joints; ++m) amplitudes.row(m) = qr.solve(waypoints.col(m)).transpose();
    return AmplitudeMatrix(amplitudes);
  }

  Mat kkt = Mat::Zero(width + 2, width + 2);
  kkt.topLeftCorner(width, width) = 2.0 * table.transpose() * table;
  kkt.block(0, width, width, 1) = table.row(0).transpose();
  kkt.block(0, width + 1, width, 1) = table.row(grid.half()).transpose();
  kkt.block(width, 0, 1, width) = table.row(0);
  kkt.block(width + 1, 0, 1, width) = table.row(grid.half());
  const Eigen::FullPivLU<Mat> lu(kkt);
  for (Index m = 0; m < joints; ++m) {
    Vec rhs(width + 2);
    rhs.head(width) = 2.0 * table.transpose() * waypoints.col(m);
    rhs(width) = waypoints(0, m);
    rhs(width + 1) = waypoints(grid.half(), m);
    amplitudes.row(m) = lu.solve(rhs).head(width).transpose();
  }
  return AmplitudeMatrix(amplitudes);
}

}  // namespace hp
