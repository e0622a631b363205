#pragma once

// Dense convex QP by primal-dual interior point (Mehrotra predictor-corrector).
//
//   minimize    1/2 x'Qx + c'x
//   subject to  Aeq x  = beq
//               Ain x <= bin
//
// Stationarity convention: Qx + c + Aeq' nu + Ain' lambda = 0, lambda >= 0.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "hp/types.hpp"

namespace hp {

struct QpProblem {
  Mat Q;
  Vec c;
  Mat Aeq;
  Vec beq;
  Mat Ain;
  Vec bin;

  Index n() const { return Q.rows(); }
  double objective(const Vec& x) const { return 0.5 * x.dot(Q * x) + c.dot(x); }
};

enum class QpStatus { optimal, max_iter, infeasible };

inline const char* to_string(QpStatus s) {
  switch (s) {
    case QpStatus::optimal: return "optimal";
    case QpStatus::max_iter: return "max-iter";
    case QpStatus::infeasible: return "infeasible";
  }
  return "?";
}

struct KktResiduals {
  double stationarity = 0.0;
  double primal_eq = 0.0;
  double primal_ineq = 0.0;
  double complementarity = 0.0;

  double max() const { return std::max({stationarity, primal_eq, primal_ineq, complementarity}); }
};

struct QpSolution {
  Vec x;
  Vec eq_duals;
  Vec ineq_duals;
  QpStatus status = QpStatus::max_iter;
  KktResiduals kkt_residuals;
  int iterations = 0;
  std::vector<double> merit;  // per accepted iterate
};

struct QpOptions {
  double tol = 1e-8;
  int max_iter = 100;
};

/// KKT residuals of (x, nu, lambda) in infinity norm.
inline KktResiduals kkt_residuals(const QpProblem& p, const Vec& x, const Vec& nu, const Vec& lambda) {
  KktResiduals r;
  Vec stat = p.Q * x + p.c;
  if (p.Aeq.rows() > 0) stat += p.Aeq.transpose() * nu;
  if (p.Ain.rows() > 0) stat += p.Ain.transpose() * lambda;
  r.stationarity = stat.lpNorm<Eigen::Infinity>();
  if (p.Aeq.rows() > 0) r.primal_eq = (p.Aeq * x - p.beq).lpNorm<Eigen::Infinity>();
  if (p.Ain.rows() > 0) {
    const Vec g = p.Ain * x - p.bin;
    r.primal_ineq = g.cwiseMax(0.0).lpNorm<Eigen::Infinity>();
    r.complementarity = lambda.cwiseProduct(g).cwiseAbs().maxCoeff();
    r.complementarity = std::max(r.complementarity, (-lambda).cwiseMax(0.0).maxCoeff());
  }
  return r;
}

namespace detail {

inline void check_dimensions(const QpProblem& p) {
  const Index n = p.Q.rows();
  const auto fail = [](const char* what) { throw std::domain_error(std::string("solve_qp: ") + what); };
  if (p.Q.cols() != n || p.c.size() != n) fail("Q must be n x n and c length n");
  if (p.Aeq.rows() > 0 && p.Aeq.cols() != n) fail("Aeq column count");
  if (p.Aeq.rows() != p.beq.size()) fail("beq length");
  if (p.Ain.rows() > 0 && p.Ain.cols() != n) fail("Ain column count");
  if (p.Ain.rows() != p.bin.size()) fail("bin length");
  if ((p.Q - p.Q.transpose()).lpNorm<Eigen::Infinity>() > 1e-10 * std::max(1.0, p.Q.lpNorm<Eigen::Infinity>())) {
    fail("Q is not symmetric");
  }
}

/// Largest step in (0, 1] keeping v + step * dv >= 0.
inline double max_step(const Vec& v, const Vec& dv) {
  double step = 1.0;
  for (Index i = 0; i < v.size(); ++i) {
    if (dv(i) < 0.0) step = std::min(step, -v(i) / dv(i));
  }
  return step;
}

}  // namespace detail

inline QpSolution solve_qp(const QpProblem& input, const QpOptions& opts = {}) {
  detail::check_dimensions(input);
  const Index n = input.n();
  QpSolution sol;

  // drop redundant equality rows; an inconsistent system is infeasible
  QpProblem p = input;
  if (p.Aeq.rows() > 0) {
    const Eigen::ColPivHouseholderQR<Mat> qr_rows(p.Aeq.transpose());
    const Index rank = qr_rows.rank();
    if (rank < p.Aeq.rows()) {
      const Vec ls = p.Aeq.completeOrthogonalDecomposition().solve(p.beq);
      const double residual = (p.Aeq * ls - p.beq).lpNorm<Eigen::Infinity>();
      if (residual > opts.tol * (1.0 + p.beq.lpNorm<Eigen::Infinity>())) {
        sol.status = QpStatus::infeasible;
        sol.x = ls;
        sol.eq_duals = Vec::Zero(input.Aeq.rows());
        sol.ineq_duals = Vec::Zero(input.Ain.rows());
        sol.kkt_residuals = kkt_residuals(input, sol.x, sol.eq_duals, sol.ineq_duals);
        return sol;
      }
      const auto perm = qr_rows.colsPermutation().indices();
      Mat a(rank, n);
      Vec b(rank);
      for (Index k = 0; k < rank; ++k) {
        a.row(k) = p.Aeq.row(perm(k));
        b(k) = p.beq(perm(k));
      }
      p.Aeq = a;
      p.beq = b;
    }
  }
  const Index m_eq = p.Aeq.rows();
  const Index m_in = p.Ain.rows();

  // start: least squares on the equalities, slacks shifted to be >= 1
  Vec x = m_eq > 0 ? Vec(p.Aeq.completeOrthogonalDecomposition().solve(p.beq)) : Vec(Vec::Zero(n));
  Vec nu = Vec::Zero(m_eq);
  Vec s = m_in > 0 ? Vec((p.bin - p.Ain * x).cwiseMax(1.0)) : Vec();
  Vec z = Vec::Ones(m_in);

  const auto merit_of = [&](const Vec& rd, const Vec& rp, const Vec& rg, double mu) {
    double r = rd.squaredNorm() + rp.squaredNorm() + rg.squaredNorm();
    return std::sqrt(r) + mu;
  };
  const auto residuals = [&](const Vec& xv, const Vec& nuv, const Vec& sv, const Vec& zv, Vec& rd, Vec& rp,
                             Vec& rg) {
    rd = p.Q * xv + p.c;
    if (m_eq > 0) rd += p.Aeq.transpose() * nuv;
    if (m_in > 0) rd += p.Ain.transpose() * zv;
    rp = m_eq > 0 ? Vec(p.Aeq * xv - p.beq) : Vec();
    rg = m_in > 0 ? Vec(p.Ain * xv + sv - p.bin) : Vec();
  };

  Vec rd, rp, rg;
  // iterate past the reporting tolerance so the minimizer is pinned well below it
  const auto converged = [&]() {
    const KktResiduals r = kkt_residuals(p, x, nu, z);
    return r.max() <= 1e-3 * opts.tol;
  };

  int iter = 0;
  for (; iter < opts.max_iter; ++iter) {
    residuals(x, nu, s, z, rd, rp, rg);
    const double mu = m_in > 0 ? s.dot(z) / static_cast<double>(m_in) : 0.0;
    if (iter == 0) sol.merit.push_back(merit_of(rd, rp, rg, mu));
    if (converged()) break;

    // reduced KKT matrix [Q + Ain' W Ain, Aeq'; Aeq, 0], W = Z S^-1
    Mat kkt = Mat::Zero(n + m_eq, n + m_eq);
    Vec w;
    if (m_in > 0) w = z.cwiseQuotient(s);
    kkt.topLeftCorner(n, n) = p.Q;
    if (m_in > 0) kkt.topLeftCorner(n, n) += p.Ain.transpose() * w.asDiagonal() * p.Ain;
    kkt.topLeftCorner(n, n).diagonal().array() += 1e-10;
    if (m_eq > 0) {
      kkt.topRightCorner(n, m_eq) = p.Aeq.transpose();
      kkt.bottomLeftCorner(m_eq, n) = p.Aeq;
    }
    const Eigen::PartialPivLU<Mat> lu(kkt);

    // solves for (dx, dnu, ds, dz) given the complementarity residual r_sz
    const auto newton = [&](const Vec& rsz, Vec& dx, Vec& dnu, Vec& ds, Vec& dz) {
      Vec rhs(n + m_eq);
      rhs.head(n) = -rd;
      if (m_in > 0) rhs.head(n) += p.Ain.transpose() * ((rsz - z.cwiseProduct(rg)).cwiseQuotient(s));
      if (m_eq > 0) rhs.tail(m_eq) = -rp;
      const Vec sol_vec = lu.solve(rhs);
      dx = sol_vec.head(n);
      dnu = sol_vec.tail(m_eq);
      if (m_in > 0) {
        ds = -rg - p.Ain * dx;
        dz = (-rsz - z.cwiseProduct(ds)).cwiseQuotient(s);
      }
    };

    Vec dx, dnu, ds, dz;
    if (m_in > 0) {
      // predictor
      newton(s.cwiseProduct(z), dx, dnu, ds, dz);
      const double a_aff = std::min(detail::max_step(s, ds), detail::max_step(z, dz));
      const double mu_aff = (s + a_aff * ds).dot(z + a_aff * dz) / static_cast<double>(m_in);
      const double sigma = std::pow(mu_aff / mu, 3.0);
      // corrector
      const Vec rsz = s.cwiseProduct(z) + ds.cwiseProduct(dz) - Vec::Constant(m_in, sigma * mu);
      newton(rsz, dx, dnu, ds, dz);
    } else {
      newton(Vec(), dx, dnu, ds, dz);
    }

    double step = m_in > 0 ? std::min(1.0, 0.995 * std::min(detail::max_step(s, ds), detail::max_step(z, dz))) : 1.0;
    const double current = sol.merit.back();
    Vec xn, nun, sn, zn, rdn, rpn, rgn;
    bool accepted = false;
    for (int backtrack = 0; backtrack < 8; ++backtrack) {
      xn = x + step * dx;
      nun = nu + step * dnu;
      if (m_in > 0) {
        sn = s + step * ds;
        zn = z + step * dz;
      }
      residuals(xn, nun, sn, zn, rdn, rpn, rgn);
      const double mun = m_in > 0 ? sn.dot(zn) / static_cast<double>(m_in) : 0.0;
      const double candidate = merit_of(rdn, rpn, rgn, mun);
      if (candidate <= current) {
        sol.merit.push_back(candidate);
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    // stalled: keep the best iterate and let the residual check decide the status
    if (!accepted) break;
    x = xn;
    nu = nun;
    if (m_in > 0) {
      s = sn;
      z = zn;
    }
    if (!x.allFinite() || (m_in > 0 && (!s.allFinite() || !z.allFinite()))) break;
  }

  sol.iterations = iter;
  sol.x = x;
  sol.ineq_duals = z;
  // report duals against the caller's equality rows
  sol.eq_duals = Vec::Zero(input.Aeq.rows());
  if (m_eq > 0) {
    if (m_eq == input.Aeq.rows()) {
      sol.eq_duals = nu;
    } else {
      Vec rhs = -(input.Q * x + input.c);
      if (m_in > 0) rhs -= input.Ain.transpose() * z;
      sol.eq_duals = input.Aeq.transpose().completeOrthogonalDecomposition().solve(rhs);
    }
  }
  sol.kkt_residuals = kkt_residuals(input, sol.x, sol.eq_duals, sol.ineq_duals);
  sol.status = sol.kkt_residuals.max() <= opts.tol ? QpStatus::optimal : QpStatus::max_iter;
  return sol;
}

}  // namespace hp
