#pragma once

// Cosine-series versus periodic full-Fourier fit of a start-goal motion
// sampled on t = 0..T/2. The full series has period T/2, so its fit must
// join the last sample back to the first; the cosine series mirrors the
// motion and has no such seam.

#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

#include "hp/ffs_trajectory.hpp"

namespace hp {

struct FitComparison {
  std::vector<double> times;  // oversampled, t in [0, T/2]
  std::vector<double> reference;
  std::vector<double> cosine_fit;
  std::vector<double> fourier_fit;
  double cosine_endpoint_error = 0.0;  // max deviation at t = 0 and t = T/2
  double fourier_endpoint_error = 0.0;
};

inline RowVec full_fourier_row(double t, double period, Index harmonics) {
  RowVec row(2 * harmonics + 1);
  row(0) = 1.0;
  for (Index n = 1; n <= harmonics; ++n) {
    const double w = 2.0 * std::numbers::pi * static_cast<double>(n) * t / period;
    row(2 * n - 1) = std::cos(w);
    row(2 * n) = std::sin(w);
  }
  return row;
}

inline FitComparison compare_fits(const std::function<double(double)>& reference, const SampleGrid& grid,
                                  Index harmonics, int oversample = 10) {
  if (harmonics < 1) throw std::domain_error("compare_fits: need at least one harmonic");
  if (oversample < 1) throw std::domain_error("compare_fits: oversample must be >= 1");
  const int half = grid.half();
  Mat waypoints(grid.size(), 1);
  Mat table(grid.size(), 2 * harmonics + 1);
  for (int t = 0; t <= half; ++t) {
    waypoints(t, 0) = reference(t);
    table.row(t) = full_fourier_row(t, half, harmonics);
  }
  const AmplitudeMatrix cosine = fit_waypoints(waypoints, grid, harmonics, false);
  const Vec fourier = table.completeOrthogonalDecomposition().solve(waypoints.col(0));

  FitComparison out;
  for (int k = 0; k <= oversample * half; ++k) {
    const double t = static_cast<double>(k) / oversample;
    out.times.push_back(t);
    out.reference.push_back(reference(t));
    out.cosine_fit.push_back(evaluate(cosine, t, grid)(0));
    out.fourier_fit.push_back(full_fourier_row(t, half, harmonics).dot(fourier));
  }
  for (std::size_t k : {std::size_t{0}, out.times.size() - 1}) {
    out.cosine_endpoint_error = std::max(out.cosine_endpoint_error, std::abs(out.cosine_fit[k] - out.reference[k]));
    out.fourier_endpoint_error = std::max(out.fourier_endpoint_error, std::abs(out.fourier_fit[k] - out.reference[k]));
  }
  return out;
}

}  // namespace hp
