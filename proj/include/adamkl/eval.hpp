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
#include <cstdint>
#include <vector>

#include "adamkl/errors.hpp"

namespace adamkl {

// Rows are ground truth, columns are predictions.
struct ConfusionMatrix {
  Eigen::MatrixXi counts;

  long long total() const { return counts.cast<long long>().sum(); }
};

inline ConfusionMatrix confusion_matrix(const std::vector<int>& truth,
                                        const std::vector<int>& predicted,
                                        int num_classes) {
  if (truth.empty()) throw EvalError("confusion_matrix: empty input");
  if (truth.size() != predicted.size()) {
    throw DimensionError("confusion_matrix: truth and predictions differ in length");
  }
  if (num_classes < 1) throw InvalidArgumentError("confusion_matrix: num_classes must be >= 1");
  ConfusionMatrix cm;
  cm.counts = Eigen::MatrixXi::Zero(num_classes, num_classes);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const int t = truth[i];
    const int p = predicted[i];
    if (t < 0 || t >= num_classes || p < 0 || p >= num_classes) {
      throw InvalidArgumentError("confusion_matrix: class out of range");
    }
    ++cm.counts(t, p);
  }
  return cm;
}

// Fraction of exact matches.
inline double overall_accuracy(const std::vector<int>& truth,
                               const std::vector<int>& predicted) {
  if (truth.empty()) throw EvalError("overall_accuracy: empty input");
  if (truth.size() != predicted.size()) {
    throw DimensionError("overall_accuracy: truth and predictions differ in length");
  }
  long long matches = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] == predicted[i]) ++matches;
  }
  return static_cast<double>(matches) / static_cast<double>(truth.size());
}

inline double overall_accuracy(const ConfusionMatrix& cm) {
  const long long n = cm.total();
  if (n == 0) throw EvalError("overall_accuracy: empty confusion matrix");
  return static_cast<double>(cm.counts.cast<long long>().trace()) /
         static_cast<double>(n);
}

// Cohen's kappa, (p_o - p_e) / (1 - p_e), evaluated in integer marginals as
// (N tr - S) / (N^2 - S) with S = sum_c row_c * col_c so the single division
// is exact where the arithmetic allows.
inline double kappa(const ConfusionMatrix& cm) {
  const long long n = cm.total();
  if (n == 0) throw EvalError("kappa: empty confusion matrix");
  const Eigen::Index c = cm.counts.rows();
  long long trace = 0;
  long long chance = 0;
  for (Eigen::Index k = 0; k < c; ++k) {
    trace += cm.counts(k, k);
    const long long row = cm.counts.row(k).cast<long long>().sum();
    const long long col = cm.counts.col(k).cast<long long>().sum();
    chance += row * col;
  }
  const long long denominator = n * n - chance;
  if (denominator == 0) {
    throw EvalError("kappa: undefined, chance agreement equals 1");
  }
  return static_cast<double>(n * trace - chance) /
         static_cast<double>(denominator);
}

struct CurvePoint {
  double oa = 0.0;
  double kappa = 0.0;
};

// Per-iteration mean and sample standard deviation across runs.
struct CurveStats {
  std::vector<double> oa_mean;
  std::vector<double> oa_sd;
  std::vector<double> kappa_mean;
  std::vector<double> kappa_sd;

  std::size_t size() const { return oa_mean.size(); }
};

inline CurveStats aggregate_curves(
    const std::vector<std::vector<CurvePoint>>& runs) {
  if (runs.empty()) throw EvalError("aggregate_curves: no runs");
  const std::size_t iterations = runs[0].size();
  if (iterations == 0) throw EvalError("aggregate_curves: empty run");
  for (const auto& run : runs) {
    if (run.size() != iterations) {
      throw EvalError("aggregate_curves: runs have mismatched iteration grids");
    }
  }
  const double count = static_cast<double>(runs.size());
  CurveStats stats;
  stats.oa_mean.resize(iterations);
  stats.oa_sd.resize(iterations);
  stats.kappa_mean.resize(iterations);
  stats.kappa_sd.resize(iterations);
  for (std::size_t t = 0; t < iterations; ++t) {
    double oa_sum = 0.0, kappa_sum = 0.0;
    for (const auto& run : runs) {
      oa_sum += run[t].oa;
      kappa_sum += run[t].kappa;
    }
    const double oa_mean = oa_sum / count;
    const double kappa_mean = kappa_sum / count;
    double oa_var = 0.0, kappa_var = 0.0;
    if (runs.size() > 1) {
      for (const auto& run : runs) {
        oa_var += (run[t].oa - oa_mean) * (run[t].oa - oa_mean);
        kappa_var += (run[t].kappa - kappa_mean) * (run[t].kappa - kappa_mean);
      }
      oa_var /= count - 1.0;
      kappa_var /= count - 1.0;
    }
    stats.oa_mean[t] = oa_mean;
    stats.oa_sd[t] = std::sqrt(oa_var);
    stats.kappa_mean[t] = kappa_mean;
    stats.kappa_sd[t] = std::sqrt(kappa_var);
  }
  return stats;
}

}  // namespace adamkl
