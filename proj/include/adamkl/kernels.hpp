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
#include <cmath>
#include <string>
#include <unordered_map>
#include <vector>

#include "adamkl/errors.hpp"

namespace adamkl {

// The kernel bank.  All four kinds are functions of the Euclidean distance
// d between two samples, with a shared width parameter gamma:
//
//   gaussian                 exp(-gamma * d^2)
//   laplacian                exp(-sqrt(gamma) * d)
//   inverse_square_distance  1 / (gamma * d^2 + 1)
//   inverse_distance         1 / (sqrt(gamma) * d + 1)
//
// The two inverse kinds also exist in an "as printed" variant that wraps the
// rational expression in exp(.), i.e. exp(1/(gamma*d^2+1)) and
// exp(1/(sqrt(gamma)*d+1)).  Those variants are not positive semidefinite in
// general; the rational forms are the default.  The variant flag is ignored
// for gaussian and laplacian.
enum class KernelKind {
  gaussian,
  laplacian,
  inverse_square_distance,
  inverse_distance,
};

enum class FormVariant { rational, as_printed };

struct KernelSpec {
  KernelKind kind = KernelKind::gaussian;
  double gamma = 1.0;
  FormVariant variant = FormVariant::rational;
};

inline const char* kernel_kind_name(KernelKind kind) {
  switch (kind) {
    case KernelKind::gaussian: return "gaussian";
    case KernelKind::laplacian: return "laplacian";
    case KernelKind::inverse_square_distance: return "inverse_square_distance";
    case KernelKind::inverse_distance: return "inverse_distance";
  }
  return "unknown";
}

inline void validate(const KernelSpec& spec) {
  if (!(spec.gamma > 0.0) || !std::isfinite(spec.gamma)) {
    throw InvalidArgumentError(std::string("kernel spec '") +
                               kernel_kind_name(spec.kind) +
                               "': gamma must be positive and finite");
  }
}

// A Gram matrix together with the dataset row each matrix row refers to.
struct KernelMatrix {
  Eigen::MatrixXd values;
  std::vector<int> index_map;
};

// Width heuristic: gamma = 1 / mean squared distance over the n*(n-1)/2
// unordered distinct sample pairs.
inline double gamma_heuristic(const Eigen::MatrixXd& samples) {
  const Eigen::Index n = samples.rows();
  if (n < 2) {
    throw DegenerateInputError(
        "gamma_heuristic: need at least two samples");
  }
  double sum = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      sum += (samples.row(i) - samples.row(j)).squaredNorm();
    }
  }
  const double mean = sum / (static_cast<double>(n) * (n - 1) / 2.0);
  if (!(mean > 0.0)) {
    throw DegenerateInputError(
        "gamma_heuristic: all samples identical, distance scale undefined");
  }
  return 1.0 / mean;
}

// Kernel value as a function of the squared distance.  Shared by the
// pairwise and matrix paths so both produce identical bits.
inline double kernel_from_sqdist(const KernelSpec& spec, double d2) {
  switch (spec.kind) {
    case KernelKind::gaussian:
      return std::exp(-spec.gamma * d2);
    case KernelKind::laplacian:
      return std::exp(-std::sqrt(spec.gamma) * std::sqrt(d2));
    case KernelKind::inverse_square_distance: {
      const double r = 1.0 / (spec.gamma * d2 + 1.0);
      return spec.variant == FormVariant::as_printed ? std::exp(r) : r;
    }
    case KernelKind::inverse_distance: {
      const double r = 1.0 / (std::sqrt(spec.gamma) * std::sqrt(d2) + 1.0);
      return spec.variant == FormVariant::as_printed ? std::exp(r) : r;
    }
  }
  throw InvalidArgumentError("kernel_from_sqdist: unknown kernel kind");
}

inline double kernel_eval(const KernelSpec& spec, const Eigen::VectorXd& x,
                          const Eigen::VectorXd& y) {
  validate(spec);
  if (x.size() != y.size()) {
    throw DimensionError("kernel_eval: sample dimensions differ");
  }
  return kernel_from_sqdist(spec, (x - y).squaredNorm());
}

// Exactly symmetric with an exactly zero diagonal; the upper triangle is
// computed once and mirrored.
inline Eigen::MatrixXd squared_distance_matrix(const Eigen::MatrixXd& samples) {
  const Eigen::Index n = samples.rows();
  Eigen::MatrixXd d2 = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double v = (samples.row(i) - samples.row(j)).squaredNorm();
      d2(i, j) = v;
      d2(j, i) = v;
    }
  }
  return d2;
}

// One Gram matrix per spec over the same samples.  The pairwise distances
// are computed once.  index_map defaults to row positions 0..n-1.
inline std::vector<KernelMatrix> compute_base_kernels(
    const Eigen::MatrixXd& samples, const std::vector<KernelSpec>& specs,
    const std::vector<int>* index_map = nullptr) {
  if (specs.empty()) {
    throw InvalidArgumentError("compute_base_kernels: empty kernel bank");
  }
  const Eigen::Index n = samples.rows();
  if (n == 0) throw InvalidArgumentError("compute_base_kernels: no samples");
  std::vector<int> ids;
  if (index_map != nullptr) {
    if (static_cast<Eigen::Index>(index_map->size()) != n) {
      throw DimensionError("compute_base_kernels: index map size mismatch");
    }
    ids = *index_map;
  } else {
    ids.resize(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) ids[static_cast<std::size_t>(i)] = static_cast<int>(i);
  }
  const Eigen::MatrixXd d2 = squared_distance_matrix(samples);
  std::vector<KernelMatrix> out;
  out.reserve(specs.size());
  for (const KernelSpec& spec : specs) {
    validate(spec);
    KernelMatrix km;
    km.values.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) {
        km.values(i, j) = kernel_from_sqdist(spec, d2(i, j));
      }
    }
    km.index_map = ids;
    out.push_back(std::move(km));
  }
  return out;
}

// Positions of the given identifiers inside the kernel's index map.
inline std::vector<int> positions_of(const KernelMatrix& kernel,
                                     const std::vector<int>& ids) {
  std::unordered_map<int, int> lookup;
  lookup.reserve(kernel.index_map.size());
  for (std::size_t p = 0; p < kernel.index_map.size(); ++p) {
    lookup.emplace(kernel.index_map[p], static_cast<int>(p));
  }
  std::vector<int> pos;
  pos.reserve(ids.size());
  for (int id : ids) {
    auto it = lookup.find(id);
    if (it == lookup.end()) {
      throw InvalidArgumentError("positions_of: identifier " +
                                 std::to_string(id) + " not covered");
    }
    pos.push_back(it->second);
  }
  return pos;
}

inline Eigen::MatrixXd gather_block(const Eigen::MatrixXd& values,
                                    const std::vector<int>& row_positions,
                                    const std::vector<int>& col_positions) {
  return values(row_positions, col_positions);
}

constexpr double kSimplexTolerance = 1e-9;

inline void check_simplex(const Eigen::VectorXd& d) {
  if (d.size() == 0) throw InvalidArgumentError("kernel weights are empty");
  if (!d.allFinite() || d.minCoeff() < -kSimplexTolerance ||
      std::abs(d.sum() - 1.0) > kSimplexTolerance) {
    throw InvalidArgumentError("kernel weights are off the simplex");
  }
}

// Convex combination sum_m d_m K_m.  All banks must share the index map.
inline KernelMatrix combined_kernel(const Eigen::VectorXd& d,
                                    const std::vector<KernelMatrix>& kernels) {
  if (kernels.empty()) {
    throw InvalidArgumentError("combined_kernel: empty kernel list");
  }
  if (d.size() != static_cast<Eigen::Index>(kernels.size())) {
    throw DimensionError("combined_kernel: weight count != kernel count");
  }
  check_simplex(d);
  for (const KernelMatrix& km : kernels) {
    if (km.values.rows() != kernels[0].values.rows() ||
        km.values.cols() != kernels[0].values.cols() ||
        km.index_map != kernels[0].index_map) {
      throw DimensionError("combined_kernel: kernels disagree on samples");
    }
  }
  KernelMatrix out;
  out.values = d(0) * kernels[0].values;
  for (std::size_t m = 1; m < kernels.size(); ++m) {
    out.values += d(static_cast<Eigen::Index>(m)) * kernels[m].values;
  }
  out.index_map = kernels[0].index_map;
  return out;
}

// Same combination for pre-gathered plain blocks.
inline Eigen::MatrixXd combined_block(const Eigen::VectorXd& d,
                                      const std::vector<Eigen::MatrixXd>& blocks) {
  if (blocks.empty()) throw InvalidArgumentError("combined_block: empty list");
  if (d.size() != static_cast<Eigen::Index>(blocks.size())) {
    throw DimensionError("combined_block: weight count != block count");
  }
  Eigen::MatrixXd out = d(0) * blocks[0];
  for (std::size_t m = 1; m < blocks.size(); ++m) {
    if (blocks[m].rows() != out.rows() || blocks[m].cols() != out.cols()) {
      throw DimensionError("combined_block: block shapes differ");
    }
    out += d(static_cast<Eigen::Index>(m)) * blocks[m];
  }
  return out;
}

}  // namespace adamkl
