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

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>
#include <utility>
#include <vector>

#include "adamkl/errors.hpp"
#include "adamkl/kernels.hpp"
#include "adamkl/svm.hpp"

namespace adamkl {

// Identifier sets of the two domains.  Disjoint and both nonempty.
struct DomainSplit {
  std::vector<int> source;
  std::vector<int> target;
};

inline void validate(const DomainSplit& split) {
  if (split.source.empty() || split.target.empty()) {
    throw InvalidArgumentError("domain split: both domains must be nonempty");
  }
  std::unordered_set<int> seen(split.source.begin(), split.source.end());
  if (seen.size() != split.source.size()) {
    throw InvalidArgumentError("domain split: duplicate source identifier");
  }
  for (int id : split.target) {
    if (!seen.insert(id).second) {
      throw InvalidArgumentError("domain split: identifier in both domains");
    }
  }
}

// Per-kernel maximum mean discrepancy terms.  k(m) is the squared distance
// between the source and target kernel mean embeddings under kernel m, so
// the weighted discrepancy for weights d is simply d'k.
struct MmdContext {
  Eigen::VectorXd k;
};

// Computes k(m) from the block sums of each Gram matrix:
//
//   k_m = sum(K_m^SS)/N_S^2 + sum(K_m^TT)/N_T^2 - 2 sum(K_m^ST)/(N_S N_T)
//
// which equals tr(K_m L) for the usual domain indicator matrix L.
inline MmdContext mmd_vector(const std::vector<KernelMatrix>& kernels,
                             const DomainSplit& split) {
  if (kernels.empty()) throw InvalidArgumentError("mmd_vector: empty kernel list");
  validate(split);
  const Eigen::Index n = kernels[0].values.rows();
  if (split.source.size() + split.target.size() !=
      kernels[0].index_map.size()) {
    throw InvalidArgumentError(
        "mmd_vector: kernels must cover exactly source plus target");
  }
  const std::vector<int> spos = positions_of(kernels[0], split.source);
  const std::vector<int> tpos = positions_of(kernels[0], split.target);
  Eigen::VectorXd s = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd t = Eigen::VectorXd::Zero(n);
  for (int p : spos) s(p) = 1.0;
  for (int p : tpos) t(p) = 1.0;
  const double ns = static_cast<double>(split.source.size());
  const double nt = static_cast<double>(split.target.size());

  MmdContext ctx;
  ctx.k.resize(static_cast<Eigen::Index>(kernels.size()));
  for (std::size_t m = 0; m < kernels.size(); ++m) {
    const KernelMatrix& km = kernels[m];
    if (km.values.rows() != n || km.values.cols() != n ||
        km.index_map != kernels[0].index_map) {
      throw DimensionError("mmd_vector: kernels disagree on samples");
    }
    const Eigen::VectorXd ks = km.values * s;
    const double ss = s.dot(ks);
    const double st = t.dot(ks);
    const double tt = t.dot(km.values * t);
    ctx.k(static_cast<Eigen::Index>(m)) =
        ss / (ns * ns) + tt / (nt * nt) - 2.0 * st / (ns * nt);
  }
  return ctx;
}

inline double mmd_value(const Eigen::VectorXd& d, const MmdContext& ctx) {
  if (d.size() != ctx.k.size()) {
    throw DimensionError("mmd_value: weight count does not match context");
  }
  return d.dot(ctx.k);
}

// p(m) = (a o y)' K_m (a o y) over the labeled blocks; the classifier-side
// linear coefficients of the weight subproblem.
inline Eigen::VectorXd compute_p(const Eigen::VectorXd& alpha,
                                 const Eigen::VectorXd& y,
                                 const std::vector<Eigen::MatrixXd>& labeled_blocks) {
  if (labeled_blocks.empty()) {
    throw InvalidArgumentError("compute_p: empty kernel list");
  }
  if (alpha.size() != y.size()) {
    throw DimensionError("compute_p: alpha and labels differ in length");
  }
  const Eigen::VectorXd w = alpha.cwiseProduct(y);
  Eigen::VectorXd p(static_cast<Eigen::Index>(labeled_blocks.size()));
  for (std::size_t m = 0; m < labeled_blocks.size(); ++m) {
    const Eigen::MatrixXd& K = labeled_blocks[m];
    if (K.rows() != w.size() || K.cols() != w.size()) {
      throw DimensionError("compute_p: kernel block shape mismatch");
    }
    p(static_cast<Eigen::Index>(m)) = w.dot(K * w);
  }
  return p;
}

// Euclidean projection onto the probability simplex (sort based).
inline Eigen::VectorXd project_simplex(const Eigen::VectorXd& v) {
  const Eigen::Index m = v.size();
  if (m == 0) throw InvalidArgumentError("project_simplex: empty vector");
  if (!v.allFinite()) throw InvalidArgumentError("project_simplex: non-finite input");
  std::vector<double> u(v.data(), v.data() + m);
  std::sort(u.begin(), u.end(), std::greater<double>());
  double cumulative = 0.0;
  double tau = 0.0;
  for (Eigen::Index j = 0; j < m; ++j) {
    cumulative += u[static_cast<std::size_t>(j)];
    const double candidate = (cumulative - 1.0) / static_cast<double>(j + 1);
    if (u[static_cast<std::size_t>(j)] - candidate > 0.0) tau = candidate;
  }
  Eigen::VectorXd out(m);
  for (Eigen::Index i = 0; i < m; ++i) out(i) = std::max(v(i) - tau, 0.0);
  return out;
}

// Minimizes the weight subproblem
//
//   F(d) = (k'd)^2 - lambda p'd   over the simplex
//
// by projected gradient with Armijo backtracking (initial step 1, halving,
// c = 1e-4), stopping when the objective change falls below 1e-8 or after
// 500 iterations.  objective_trace, when given, receives F at the start and
// after every accepted step.
inline Eigen::VectorXd solve_d_step(const Eigen::VectorXd& k,
                                    const Eigen::VectorXd& p, double lambda,
                                    const Eigen::VectorXd* warm_start = nullptr,
                                    std::vector<double>* objective_trace = nullptr) {
  const Eigen::Index m = k.size();
  if (m == 0) throw InvalidArgumentError("solve_d_step: empty kernel set");
  if (p.size() != m) throw DimensionError("solve_d_step: k and p differ in length");
  if (!k.allFinite() || !p.allFinite() || !std::isfinite(lambda)) {
    throw InvalidArgumentError("solve_d_step: non-finite input");
  }
  if (lambda < 0.0) throw InvalidArgumentError("solve_d_step: lambda must be >= 0");

  Eigen::VectorXd d;
  if (warm_start != nullptr) {
    if (warm_start->size() != m) {
      throw DimensionError("solve_d_step: warm start length mismatch");
    }
    d = project_simplex(*warm_start);
  } else {
    d = Eigen::VectorXd::Constant(m, 1.0 / static_cast<double>(m));
  }
  auto objective = [&](const Eigen::VectorXd& x) {
    const double q = k.dot(x);
    return q * q - lambda * p.dot(x);
  };
  double f = objective(d);
  if (objective_trace != nullptr) objective_trace->push_back(f);
  if (m == 1) return d;

  for (int iter = 0; iter < 500; ++iter) {
    const Eigen::VectorXd grad = 2.0 * k.dot(d) * k - lambda * p;
    double step = 1.0;
    Eigen::VectorXd candidate;
    double f_candidate = f;
    bool accepted = false;
    for (int backtrack = 0; backtrack < 60; ++backtrack) {
      candidate = project_simplex(d - step * grad);
      f_candidate = objective(candidate);
      if (f_candidate <= f + 1e-4 * grad.dot(candidate - d)) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
    const double change = f - f_candidate;
    d = std::move(candidate);
    f = f_candidate;
    if (objective_trace != nullptr) objective_trace->push_back(f);
    if (change < 1e-8) break;
  }
  return d;
}

struct TrainOptions {
  int max_outer = 10;
  double d_tol = 1e-4;
  double svm_tol = 1e-3;
  bool shared_d = false;    // one weight vector for all classes
  bool optimize_d = true;   // false keeps the uniform weights (plain MKL SVM)
  bool check_psd = false;   // probe combined kernels before solving
};

// Multi-kernel domain adaptation model.  per_class holds one one-versus-all
// classifier per class tag, each carrying its own kernel weights.  d is the
// shared weight vector in shared mode and the across-class mean otherwise
// (reporting only; prediction always uses the per-classifier weights).
// history is the combined objective
//
//   J(d) = 1/2 (d'k)^2 + lambda * sum_c G_c(d)
//
// recorded before the first weight update and after every accepted one.
struct MklModel {
  Eigen::VectorXd d;
  std::vector<BinaryModel> per_class;
  std::vector<int> labeled_indices;
  double lambda = 0.0;
  std::vector<double> history;
};

namespace detail {

struct ClassProblem {
  int class_tag = 0;
  Eigen::VectorXd y;
};

inline DualSolution solve_on_combined(const std::vector<Eigen::MatrixXd>& blocks,
                                      const Eigen::VectorXd& d,
                                      const Eigen::VectorXd& y, double C,
                                      const TrainOptions& opts) {
  Eigen::MatrixXd K = combined_block(d, blocks);
  if (opts.check_psd) ensure_psd(K);
  SmoOptions smo;
  smo.tol = opts.svm_tol;
  return solve_svm_dual(K, y, C, smo);
}

}  // namespace detail

// Trains the adapted multi-kernel classifier by alternating the SVM dual
// solve (fixed d) with the simplex weight subproblem (fixed alpha).  The
// weight candidate from solve_d_step is accepted only if it does not
// increase J; otherwise it is halved toward the previous weights, and the
// class counts as converged once no decreasing candidate remains.  That
// safeguard makes the recorded history non-increasing by construction.
// With shared_d each class contributes its p to one joint weight vector;
// otherwise every class optimizes its own.
inline MklModel train_mkl_da(const std::vector<KernelMatrix>& base_kernels,
                             const std::vector<int>& labeled_ids,
                             const std::vector<int>& labels,
                             const MmdContext& ctx, double C, double lambda,
                             const TrainOptions& opts = {}) {
  if (base_kernels.empty()) {
    throw InvalidArgumentError("train_mkl_da: empty kernel bank");
  }
  const Eigen::Index M = static_cast<Eigen::Index>(base_kernels.size());
  if (ctx.k.size() != M) {
    throw DimensionError("train_mkl_da: context does not match kernel bank");
  }
  if (labeled_ids.size() != labels.size()) {
    throw DimensionError("train_mkl_da: ids and labels differ in length");
  }
  if (labeled_ids.empty()) throw InvalidArgumentError("train_mkl_da: empty labeled set");
  if (!(C > 0.0)) throw InvalidArgumentError("train_mkl_da: C must be positive");
  if (lambda < 0.0 || !std::isfinite(lambda)) {
    throw InvalidArgumentError("train_mkl_da: lambda must be >= 0 and finite");
  }

  const std::vector<int> pos = positions_of(base_kernels[0], labeled_ids);
  std::vector<Eigen::MatrixXd> blocks;
  blocks.reserve(base_kernels.size());
  for (const KernelMatrix& km : base_kernels) {
    if (km.index_map != base_kernels[0].index_map) {
      throw DimensionError("train_mkl_da: kernels disagree on samples");
    }
    blocks.push_back(gather_block(km.values, pos, pos));
  }

  std::vector<int> class_tags(labels);
  std::sort(class_tags.begin(), class_tags.end());
  class_tags.erase(std::unique(class_tags.begin(), class_tags.end()),
                   class_tags.end());
  if (class_tags.size() < 2) {
    throw DegenerateClassError("train_mkl_da: need at least two classes");
  }
  const Eigen::Index nl = static_cast<Eigen::Index>(labeled_ids.size());
  std::vector<detail::ClassProblem> problems;
  problems.reserve(class_tags.size());
  for (int tag : class_tags) {
    detail::ClassProblem cp;
    cp.class_tag = tag;
    cp.y.resize(nl);
    for (Eigen::Index i = 0; i < nl; ++i) {
      cp.y(i) = labels[static_cast<std::size_t>(i)] == tag ? 1.0 : -1.0;
    }
    problems.push_back(std::move(cp));
  }
  const std::size_t num_classes = problems.size();

  const Eigen::VectorXd uniform =
      Eigen::VectorXd::Constant(M, 1.0 / static_cast<double>(M));
  auto half_sq = [](double v) { return 0.5 * v * v; };

  MklModel model;
  model.labeled_indices = labeled_ids;
  model.lambda = lambda;

  std::vector<Eigen::VectorXd> d_c(num_classes, uniform);
  std::vector<DualSolution> sol_c(num_classes);
  std::vector<double> j_c(num_classes, 0.0);
  std::vector<bool> done(num_classes, false);
  double obj_sum = 0.0;
  for (std::size_t c = 0; c < num_classes; ++c) {
    sol_c[c] = detail::solve_on_combined(blocks, d_c[c], problems[c].y, C, opts);
    j_c[c] = half_sq(ctx.k.dot(d_c[c])) + lambda * sol_c[c].objective;
    obj_sum += sol_c[c].objective;
  }
  // Shared weights optimize one objective with a single discrepancy term;
  // per-class weights sum the independent per-classifier objectives.
  if (opts.shared_d) {
    model.history.push_back(half_sq(ctx.k.dot(uniform)) + lambda * obj_sum);
  } else {
    model.history.push_back(std::accumulate(j_c.begin(), j_c.end(), 0.0));
  }

  const bool fixed_weights = !opts.optimize_d || M == 1;
  if (!fixed_weights && !opts.shared_d) {
    for (int outer = 0; outer < opts.max_outer; ++outer) {
      if (std::all_of(done.begin(), done.end(), [](bool b) { return b; })) break;
      for (std::size_t c = 0; c < num_classes; ++c) {
        if (done[c]) continue;
        const Eigen::VectorXd p = compute_p(sol_c[c].alpha, problems[c].y, blocks);
        Eigen::VectorXd trial = solve_d_step(ctx.k, p, lambda, &d_c[c]);
        bool accepted = false;
        DualSolution trial_sol;
        double trial_j = 0.0;
        for (int halving = 0; halving < 30; ++halving) {
          trial_sol = detail::solve_on_combined(blocks, trial, problems[c].y, C, opts);
          trial_j = half_sq(ctx.k.dot(trial)) + lambda * trial_sol.objective;
          if (trial_j <= j_c[c] + 1e-12 * (1.0 + std::abs(j_c[c]))) {
            accepted = true;
            break;
          }
          trial = 0.5 * (trial + d_c[c]);
        }
        if (!accepted) {
          done[c] = true;
          continue;
        }
        const double delta = (trial - d_c[c]).lpNorm<Eigen::Infinity>();
        d_c[c] = std::move(trial);
        sol_c[c] = std::move(trial_sol);
        j_c[c] = trial_j;
        if (delta < opts.d_tol) done[c] = true;
      }
      model.history.push_back(std::accumulate(j_c.begin(), j_c.end(), 0.0));
    }
  } else if (!fixed_weights) {
    Eigen::VectorXd d = uniform;
    double j_total = model.history.back();
    for (int outer = 0; outer < opts.max_outer; ++outer) {
      Eigen::VectorXd p = Eigen::VectorXd::Zero(M);
      for (std::size_t c = 0; c < num_classes; ++c) {
        p += compute_p(sol_c[c].alpha, problems[c].y, blocks);
      }
      Eigen::VectorXd trial = solve_d_step(ctx.k, p, lambda, &d);
      bool accepted = false;
      std::vector<DualSolution> trial_sols(num_classes);
      double trial_j = 0.0;
      for (int halving = 0; halving < 30; ++halving) {
        trial_j = half_sq(ctx.k.dot(trial));
        for (std::size_t c = 0; c < num_classes; ++c) {
          trial_sols[c] =
              detail::solve_on_combined(blocks, trial, problems[c].y, C, opts);
          trial_j += lambda * trial_sols[c].objective;
        }
        if (trial_j <= j_total + 1e-12 * (1.0 + std::abs(j_total))) {
          accepted = true;
          break;
        }
        trial = 0.5 * (trial + d);
      }
      if (!accepted) break;
      const double delta = (trial - d).lpNorm<Eigen::Infinity>();
      d = std::move(trial);
      sol_c = std::move(trial_sols);
      j_total = trial_j;
      model.history.push_back(j_total);
      if (delta < opts.d_tol) break;
    }
    for (std::size_t c = 0; c < num_classes; ++c) d_c[c] = d;
  }

  model.per_class.reserve(num_classes);
  Eigen::VectorXd d_mean = Eigen::VectorXd::Zero(M);
  for (std::size_t c = 0; c < num_classes; ++c) {
    BinaryModel bm;
    bm.dual = std::move(sol_c[c]);
    bm.labels = problems[c].y;
    bm.weights = d_c[c];
    bm.class_tag = problems[c].class_tag;
    d_mean += d_c[c];
    model.per_class.push_back(std::move(bm));
  }
  model.d = opts.shared_d ? d_c[0] : Eigen::VectorXd(d_mean / static_cast<double>(num_classes));
  return model;
}

}  // namespace adamkl
