/*
 * Copyright 2026 the adamkl authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

// Reference implementations the tests trust instead of the library code.
// Everything here favors obviousness over speed: explicit matrices, double
// loops, dense eigensolves, grid scans.

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <limits>
#include <vector>

#include "adamkl/kernels.hpp"
#include "adamkl/mkl_da.hpp"

namespace reference {

// Projection of v onto {0 <= a <= C, y'a = 0} by bisection on the
// multiplier of the equality constraint.  y'clip(v - mu y) is continuous
// and non-increasing in mu.
inline Eigen::VectorXd project_box_hyperplane(const Eigen::VectorXd& v,
                                              const Eigen::VectorXd& y,
                                              double C) {
  auto clipped = [&](double mu) {
    Eigen::VectorXd a = v - mu * y;
    for (Eigen::Index i = 0; i < a.size(); ++i) {
      a(i) = std::min(std::max(a(i), 0.0), C);
    }
    return a;
  };
  double lo = -(v.cwiseAbs().maxCoeff() + C + 1.0);
  double hi = -lo;
  for (int iter = 0; iter < 200; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (y.dot(clipped(mid)) > 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return clipped(0.5 * (lo + hi));
}

struct QpResult {
  Eigen::VectorXd alpha;
  double objective = 0.0;  // dual value e'a - 1/2 (a o y)' K (a o y)
};

// Projected gradient on the dual with the fixed step 1/lambda_max(Q).
// Slow and simple; run far past the accuracy the tests need.
inline QpResult pg_solve_dual(const Eigen::MatrixXd& K,
                              const Eigen::VectorXd& y, double C,
                              long max_iterations = 200000) {
  const Eigen::Index n = y.size();
  Eigen::MatrixXd Q(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      Q(i, j) = y(i) * y(j) * K(i, j);
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eigen(Q);
  const double step = 1.0 / (std::max(eigen.eigenvalues().maxCoeff(), 1e-12) + 1e-9);

  Eigen::VectorXd alpha = Eigen::VectorXd::Zero(n);
  double f = 0.0;  // 1/2 a'Qa - e'a
  for (long iter = 0; iter < max_iterations; ++iter) {
    const Eigen::VectorXd grad = Q * alpha - Eigen::VectorXd::Ones(n);
    alpha = project_box_hyperplane(alpha - step * grad, y, C);
    const double f_new = 0.5 * alpha.dot(Q * alpha) - alpha.sum();
    if (iter > 0 && f - f_new < 1e-14 * (1.0 + std::abs(f_new))) {
      f = f_new;
      break;
    }
    f = f_new;
  }
  return {alpha, -f};
}

// Discrepancy terms through the explicit coefficient matrix
//
//   L_ij = 1/N_S^2, 1/N_T^2 or -1/(N_S N_T)
//
// depending on the domains of i and j, then k_m = sum_ij K_ij L_ij.
inline Eigen::VectorXd mmd_explicit_l(
    const std::vector<adamkl::KernelMatrix>& kernels,
    const adamkl::DomainSplit& split) {
  const Eigen::Index n = kernels[0].values.rows();
  std::vector<bool> is_source(static_cast<std::size_t>(n), false);
  for (int pos : adamkl::positions_of(kernels[0], split.source)) {
    is_source[static_cast<std::size_t>(pos)] = true;
  }
  const double ns = static_cast<double>(split.source.size());
  const double nt = static_cast<double>(split.target.size());
  Eigen::MatrixXd L(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const bool si = is_source[static_cast<std::size_t>(i)];
      const bool sj = is_source[static_cast<std::size_t>(j)];
      if (si && sj) {
        L(i, j) = 1.0 / (ns * ns);
      } else if (!si && !sj) {
        L(i, j) = 1.0 / (nt * nt);
      } else {
        L(i, j) = -1.0 / (ns * nt);
      }
    }
  }
  Eigen::VectorXd k(static_cast<Eigen::Index>(kernels.size()));
  for (std::size_t m = 0; m < kernels.size(); ++m) {
    k(static_cast<Eigen::Index>(m)) =
        kernels[m].values.cwiseProduct(L).sum();
  }
  return k;
}

// The same quantity from the mean-embedding expansion: mean of the
// within-source block, plus mean of the within-target block, minus twice
// the cross block, via plain double loops.
inline Eigen::VectorXd mmd_double_loop(
    const std::vector<adamkl::KernelMatrix>& kernels,
    const adamkl::DomainSplit& split) {
  const std::vector<int> spos = adamkl::positions_of(kernels[0], split.source);
  const std::vector<int> tpos = adamkl::positions_of(kernels[0], split.target);
  Eigen::VectorXd k(static_cast<Eigen::Index>(kernels.size()));
  for (std::size_t m = 0; m < kernels.size(); ++m) {
    const Eigen::MatrixXd& K = kernels[m].values;
    double ss = 0.0, tt = 0.0, st = 0.0;
    for (int a : spos) {
      for (int b : spos) ss += K(a, b);
    }
    for (int a : tpos) {
      for (int b : tpos) tt += K(a, b);
    }
    for (int a : spos) {
      for (int b : tpos) st += K(a, b);
    }
    const double ns = static_cast<double>(spos.size());
    const double nt = static_cast<double>(tpos.size());
    k(static_cast<Eigen::Index>(m)) =
        ss / (ns * ns) + tt / (nt * nt) - 2.0 * st / (ns * nt);
  }
  return k;
}

// Exhaustive scan of the two-kernel weight subproblem at the given
// resolution; returns the best objective value found.
inline double d_step_grid_best_m2(const Eigen::VectorXd& k,
                                  const Eigen::VectorXd& p, double lambda,
                                  double resolution) {
  double best = std::numeric_limits<double>::infinity();
  const long steps = static_cast<long>(std::llround(1.0 / resolution));
  for (long i = 0; i <= steps; ++i) {
    const double d0 = static_cast<double>(i) / static_cast<double>(steps);
    Eigen::Vector2d d(d0, 1.0 - d0);
    const double q = k.dot(d);
    best = std::min(best, q * q - lambda * p.dot(d));
  }
  return best;
}

// Closest simplex point to v on a dense grid (3 kernels), for checking the
// Euclidean projection.
inline Eigen::Vector3d simplex_grid_nearest_m3(const Eigen::Vector3d& v,
                                               long steps) {
  Eigen::Vector3d best = Eigen::Vector3d::Zero();
  double best_dist = std::numeric_limits<double>::infinity();
  for (long i = 0; i <= steps; ++i) {
    for (long j = 0; i + j <= steps; ++j) {
      Eigen::Vector3d d(static_cast<double>(i) / steps,
                        static_cast<double>(j) / steps,
                        static_cast<double>(steps - i - j) / steps);
      const double dist = (d - v).squaredNorm();
      if (dist < best_dist) {
        best_dist = dist;
        best = d;
      }
    }
  }
  return best;
}

inline double min_eigenvalue(const Eigen::MatrixXd& K) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eigen(K);
  return eigen.eigenvalues().minCoeff();
}

}  // namespace reference
