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

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <cassert>
#include <cmath>
#include <cstdint>
#include <limits>
#include <utility>
#include <vector>

#include "adamkl/errors.hpp"
#include "adamkl/kernels.hpp"

namespace adamkl {

// Solution of the C-SVM dual
//
//   max_a  e'a - 1/2 (a o y)' K (a o y)   s.t.  y'a = 0,  0 <= a_i <= C.
//
// objective is the dual value at alpha.  support_indices are positions
// within the training set with alpha above the support threshold.
struct DualSolution {
  Eigen::VectorXd alpha;
  double b = 0.0;
  std::vector<int> support_indices;
  double objective = 0.0;
};

// One one-versus-all binary classifier.  labels are +1 for class_tag and -1
// otherwise, aligned with alpha.  weights are the kernel combination weights
// this classifier was trained with (a single 1 for plain SVMs).
struct BinaryModel {
  DualSolution dual;
  Eigen::VectorXd labels;
  Eigen::VectorXd weights;
  int class_tag = -1;
};

struct SmoOptions {
  double tol = 1e-3;
  // < 0 means the default budget of 10 * N * 1000 working-set steps.
  long long max_iterations = -1;
};

class SolverFailureError : public Error {
 public:
  SolverFailureError(const std::string& message, DualSolution best_iterate)
      : Error(message), best(std::move(best_iterate)) {}

  DualSolution best;
};

namespace detail {

constexpr double kCurvatureFloor = 1e-12;
constexpr double kSupportScale = 1e-8;

inline void check_dual_inputs(const Eigen::MatrixXd& K,
                              const Eigen::VectorXd& y, double C,
                              double tol) {
  const Eigen::Index n = y.size();
  if (n == 0) throw InvalidArgumentError("solve_svm_dual: empty problem");
  if (K.rows() != n || K.cols() != n) {
    throw DimensionError("solve_svm_dual: kernel size does not match labels");
  }
  if (!(C > 0.0) || !std::isfinite(C)) {
    throw InvalidArgumentError("solve_svm_dual: C must be positive");
  }
  if (!(tol > 0.0)) throw InvalidArgumentError("solve_svm_dual: tol must be positive");
  bool pos = false, neg = false;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (y(i) == 1.0) pos = true;
    else if (y(i) == -1.0) neg = true;
    else throw InvalidArgumentError("solve_svm_dual: labels must be +1 or -1");
  }
  if (!pos || !neg) {
    throw DegenerateClassError("solve_svm_dual: both label signs required");
  }
}

// Offset from the bound-constraint interval when no free vector exists,
// otherwise the mean over free vectors.
inline double intercept_from_gradient(const Eigen::VectorXd& alpha,
                                      const Eigen::VectorXd& y,
                                      const Eigen::VectorXd& g, double C) {
  const Eigen::Index n = alpha.size();
  const double lo = kSupportScale * C;
  const double hi = C * (1.0 - kSupportScale);
  double sum = 0.0;
  int free_count = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (alpha(i) > lo && alpha(i) < hi) {
      sum += -y(i) * g(i);
      ++free_count;
    }
  }
  if (free_count > 0) return sum / free_count;
  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < n; ++i) {
    const double v = -y(i) * g(i);
    const bool at_zero = alpha(i) <= lo;
    if ((at_zero && y(i) > 0.0) || (!at_zero && y(i) < 0.0)) {
      lower = std::max(lower, v);
    } else {
      upper = std::min(upper, v);
    }
  }
  if (!std::isfinite(lower)) return upper;
  if (!std::isfinite(upper)) return lower;
  return 0.5 * (lower + upper);
}

inline DualSolution package_solution(const Eigen::MatrixXd& K,
                                     const Eigen::VectorXd& y,
                                     Eigen::VectorXd alpha,
                                     const Eigen::VectorXd& g, double C) {
  DualSolution sol;
  sol.b = intercept_from_gradient(alpha, y, g, C);
  const Eigen::VectorXd w = alpha.cwiseProduct(y);
  sol.objective = alpha.sum() - 0.5 * w.dot(K * w);
  for (Eigen::Index i = 0; i < alpha.size(); ++i) {
    if (alpha(i) > kSupportScale * C) sol.support_indices.push_back(static_cast<int>(i));
  }
  sol.alpha = std::move(alpha);
  return sol;
}

}  // namespace detail

// Sequential minimal optimization with the second-order working-set rule of
// Fan, Chen and Lin, "Working Set Selection Using Second Order Information
// for Training Support Vector Machines", JMLR 6 (2005).  Cold start at
// alpha = 0; stops when the maximal KKT violation m(a) - M(a) drops to tol.
// Exhausting the iteration budget throws SolverFailureError carrying the
// best iterate found.
inline DualSolution solve_svm_dual(const Eigen::MatrixXd& K,
                                   const Eigen::VectorXd& y, double C,
                                   const SmoOptions& options) {
  detail::check_dual_inputs(K, y, C, options.tol);
  const Eigen::Index n = y.size();
  const long long max_iter =
      options.max_iterations >= 0 ? options.max_iterations
                                  : 10000LL * static_cast<long long>(n);

  Eigen::VectorXd alpha = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd g = Eigen::VectorXd::Constant(n, -1.0);  // grad of 1/2 a'Qa - e'a
#ifndef NDEBUG
  double f_value = 0.0;
#endif

  auto in_up = [&](Eigen::Index t) {
    return (y(t) > 0.0 && alpha(t) < C) || (y(t) < 0.0 && alpha(t) > 0.0);
  };
  auto in_low = [&](Eigen::Index t) {
    return (y(t) > 0.0 && alpha(t) > 0.0) || (y(t) < 0.0 && alpha(t) < C);
  };

  bool converged = false;
  for (long long iter = 0; iter < max_iter; ++iter) {
    Eigen::Index i = -1;
    double m_up = -std::numeric_limits<double>::infinity();
    for (Eigen::Index t = 0; t < n; ++t) {
      if (!in_up(t)) continue;
      const double v = -y(t) * g(t);
      if (v > m_up) {
        m_up = v;
        i = t;
      }
    }
    Eigen::Index j = -1;
    double m_low = std::numeric_limits<double>::infinity();
    double best_gain = 0.0;
    if (i >= 0) {
      for (Eigen::Index t = 0; t < n; ++t) {
        if (!in_low(t)) continue;
        const double v = -y(t) * g(t);
        m_low = std::min(m_low, v);
        if (v < m_up) {
          const double b_it = m_up - v;
          double a_it = K(i, i) + K(t, t) - 2.0 * K(i, t);
          if (a_it <= 0.0) a_it = detail::kCurvatureFloor;
          const double gain = -(b_it * b_it) / a_it;
          if (gain < best_gain) {
            best_gain = gain;
            j = t;
          }
        }
      }
    }
    if (i < 0 || j < 0 || m_up - m_low <= options.tol) {
      converged = true;
      break;
    }

    const double old_ai = alpha(i), old_aj = alpha(j);
    double quad = K(i, i) + K(j, j) - 2.0 * K(i, j);
    if (quad <= 0.0) quad = detail::kCurvatureFloor;
    if (y(i) != y(j)) {
      const double delta = (-g(i) - g(j)) / quad;
      const double diff = alpha(i) - alpha(j);
      alpha(i) += delta;
      alpha(j) += delta;
      if (diff > 0.0) {
        if (alpha(j) < 0.0) { alpha(j) = 0.0; alpha(i) = diff; }
      } else {
        if (alpha(i) < 0.0) { alpha(i) = 0.0; alpha(j) = -diff; }
      }
      if (diff > 0.0) {
        if (alpha(i) > C) { alpha(i) = C; alpha(j) = C - diff; }
      } else {
        if (alpha(j) > C) { alpha(j) = C; alpha(i) = C + diff; }
      }
    } else {
      const double delta = (g(i) - g(j)) / quad;
      const double sum = alpha(i) + alpha(j);
      alpha(i) -= delta;
      alpha(j) += delta;
      if (sum > C) {
        if (alpha(i) > C) { alpha(i) = C; alpha(j) = sum - C; }
      } else {
        if (alpha(j) < 0.0) { alpha(j) = 0.0; alpha(i) = sum; }
      }
      if (sum > C) {
        if (alpha(j) > C) { alpha(j) = C; alpha(i) = sum - C; }
      } else {
        if (alpha(i) < 0.0) { alpha(i) = 0.0; alpha(j) = sum; }
      }
    }

    const double dai = alpha(i) - old_ai;
    const double daj = alpha(j) - old_aj;
#ifndef NDEBUG
    {
      // The selected step never increases the working-set objective.
      const double q_ij = y(i) * y(j) * K(i, j);
      const double delta_f = g(i) * dai + g(j) * daj +
                             0.5 * (K(i, i) * dai * dai +
                                    2.0 * q_ij * dai * daj +
                                    K(j, j) * daj * daj);
      assert(delta_f <= 1e-7 * (1.0 + std::abs(f_value)));
      f_value += delta_f;
    }
#endif
    g += (y(i) * dai) * K.col(i).cwiseProduct(y);
    g += (y(j) * daj) * K.col(j).cwiseProduct(y);
  }

  if (!converged) {
    throw SolverFailureError(
        "solve_svm_dual: iteration budget exhausted before reaching tol",
        detail::package_solution(K, y, alpha, g, C));
  }
  return detail::package_solution(K, y, std::move(alpha), g, C);
}

inline DualSolution solve_svm_dual(const Eigen::MatrixXd& K,
                                   const Eigen::VectorXd& y, double C,
                                   double tol = 1e-3) {
  SmoOptions options;
  options.tol = tol;
  return solve_svm_dual(K, y, C, options);
}

// Probes K with a Cholesky factorization; on failure adds 1e-10 * trace / n
// to the diagonal once and throws if the result is still indefinite.  Meant
// for the non-PSD "as printed" kernel variants.
inline void ensure_psd(Eigen::MatrixXd& K) {
  if (K.rows() != K.cols() || K.rows() == 0) {
    throw DimensionError("ensure_psd: square matrix required");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(K);
  if (llt.info() == Eigen::Success) return;
  const double jitter = 1e-10 * K.trace() / static_cast<double>(K.rows());
  K.diagonal().array() += jitter;
  llt.compute(K);
  if (llt.info() != Eigen::Success) {
    throw KernelError("ensure_psd: kernel indefinite after diagonal jitter");
  }
}

// Decision value sum_j a_j y_j sum_m d_m k_m(x_j, x) + b for one candidate.
// kernel_rows holds one row per base kernel: kernel_rows(m, j) = k_m(x_j, x)
// over the labeled samples j the model was trained on.
inline double decision_value(const BinaryModel& model, const Eigen::VectorXd& d,
                             const Eigen::MatrixXd& kernel_rows) {
  const Eigen::Index n = model.dual.alpha.size();
  if (n == 0) throw InvalidArgumentError("decision_value: untrained model");
  if (model.labels.size() != n) {
    throw DimensionError("decision_value: label count does not match alpha");
  }
  if (kernel_rows.cols() != n || kernel_rows.rows() != d.size()) {
    throw DimensionError("decision_value: kernel row shape mismatch");
  }
  const Eigen::VectorXd w = model.dual.alpha.cwiseProduct(model.labels);
  return d.dot(kernel_rows * w) + model.dual.b;
}

inline double decision_value(const BinaryModel& model,
                             const Eigen::MatrixXd& kernel_rows) {
  return decision_value(model, model.weights, kernel_rows);
}

// One-versus-all vote: the class whose classifier reports the largest
// decision value, ties to the lowest class tag.  Each model is evaluated
// with its own kernel weights.
inline int predict_multiclass(const std::vector<BinaryModel>& models,
                              const Eigen::MatrixXd& kernel_rows) {
  if (models.size() < 2) {
    throw InvalidArgumentError("predict_multiclass: need models for >= 2 classes");
  }
  int best_tag = 0;
  double best_value = 0.0;
  bool first = true;
  for (const BinaryModel& model : models) {
    const double v = decision_value(model, model.weights, kernel_rows);
    if (first || v > best_value ||
        (v == best_value && model.class_tag < best_tag)) {
      best_value = v;
      best_tag = model.class_tag;
      first = false;
    }
  }
  return best_tag;
}

// Same vote with one shared weight vector for every classifier.
inline int predict_multiclass(const std::vector<BinaryModel>& models,
                              const Eigen::VectorXd& d,
                              const Eigen::MatrixXd& kernel_rows) {
  if (models.size() < 2) {
    throw InvalidArgumentError("predict_multiclass: need models for >= 2 classes");
  }
  int best_tag = 0;
  double best_value = 0.0;
  bool first = true;
  for (const BinaryModel& model : models) {
    const double v = decision_value(model, d, kernel_rows);
    if (first || v > best_value ||
        (v == best_value && model.class_tag < best_tag)) {
      best_value = v;
      best_tag = model.class_tag;
      first = false;
    }
  }
  return best_tag;
}

}  // namespace adamkl
