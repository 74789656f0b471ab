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
#include <charconv>
#include <cstdint>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "adamkl/data.hpp"
#include "adamkl/errors.hpp"
#include "adamkl/eval.hpp"
#include "adamkl/kernels.hpp"
#include "adamkl/mkl_da.hpp"
#include "adamkl/rng.hpp"
#include "adamkl/svm.hpp"

namespace adamkl {

enum class Strategy { margin, random };

// Working state of the acquisition loop.  labeled holds the growing
// training set (initial samples first, then acquisitions in order), pool
// the not-yet-acquired target identifiers, acquired the annotated ones.
struct ActiveState {
  std::vector<int> labeled_ids;
  std::vector<int> labeled_labels;
  std::vector<int> acquired;
  std::vector<int> pool;
  int iteration = 0;
  std::uint64_t rng_seed = 0;

  void apply_acquisition(const std::vector<int>& selected,
                         const std::vector<int>& labels) {
    if (selected.size() != labels.size()) {
      throw DimensionError("apply_acquisition: ids and labels differ in length");
    }
    std::unordered_set<int> pool_set(pool.begin(), pool.end());
    std::unordered_set<int> batch;
    for (int id : selected) {
      if (pool_set.find(id) == pool_set.end()) {
        throw InvalidArgumentError("apply_acquisition: identifier " +
                                   std::to_string(id) + " not in pool");
      }
      if (!batch.insert(id).second) {
        throw InvalidArgumentError("apply_acquisition: duplicate identifier " +
                                   std::to_string(id));
      }
    }
    pool.erase(std::remove_if(pool.begin(), pool.end(),
                              [&](int id) { return batch.count(id) > 0; }),
               pool.end());
    for (std::size_t i = 0; i < selected.size(); ++i) {
      acquired.push_back(selected[i]);
      labeled_ids.push_back(selected[i]);
      labeled_labels.push_back(labels[i]);
    }
    ++iteration;
  }
};

// One loop iteration: what was picked, its margins under the model that
// picked it, the annotations, and the post-retrain evaluation.  Iteration 0
// records the initial model before any acquisition.
struct QueryRecord {
  int iteration = 0;
  std::vector<int> selected;
  std::vector<double> scores;
  std::vector<int> labels;
  double oa = 0.0;
  double kappa = 0.0;
};

inline std::vector<CurvePoint> to_curve_points(
    const std::vector<QueryRecord>& records) {
  std::vector<CurvePoint> points;
  points.reserve(records.size());
  for (const QueryRecord& r : records) points.push_back({r.oa, r.kappa});
  return points;
}

inline CurveStats aggregate_curves(
    const std::vector<std::vector<QueryRecord>>& runs) {
  std::vector<std::vector<CurvePoint>> points;
  points.reserve(runs.size());
  for (const auto& run : runs) points.push_back(to_curve_points(run));
  return aggregate_curves(points);
}

// Margin of the one-versus-all ensemble, h(x) = min_c |f_c(x) + b_c|.
// Small values mean the committee is undecided about x.
inline double margin_score(const MklModel& model,
                           const Eigen::MatrixXd& kernel_rows) {
  if (model.per_class.empty()) {
    throw InvalidArgumentError("margin_score: untrained model");
  }
  double best = std::numeric_limits<double>::infinity();
  for (const BinaryModel& bm : model.per_class) {
    best = std::min(best, std::abs(decision_value(bm, bm.weights, kernel_rows)));
  }
  return best;
}

// Margin strategy returns the q candidates with the smallest scores, ties
// broken by ascending identifier.  Random strategy draws q uniformly
// without replacement.  A pool smaller than q is returned whole.
inline std::vector<int> select_queries(Strategy strategy,
                                       const std::vector<int>& pool,
                                       const std::vector<double>& scores,
                                       int q, rng::Generator& gen) {
  if (pool.empty()) throw InvalidArgumentError("select_queries: empty pool");
  if (q < 1) throw InvalidArgumentError("select_queries: q must be >= 1");
  if (strategy == Strategy::random) {
    return gen.sample_without_replacement(pool, static_cast<std::size_t>(q));
  }
  if (scores.size() != pool.size()) {
    throw DimensionError("select_queries: scores do not match pool");
  }
  std::vector<std::size_t> order(pool.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] < scores[b];
    return pool[a] < pool[b];
  });
  const std::size_t take = std::min(static_cast<std::size_t>(q), pool.size());
  std::vector<int> out;
  out.reserve(take);
  for (std::size_t i = 0; i < take; ++i) out.push_back(pool[order[i]]);
  return out;
}

// Annotation source.  label_of returns the class for a sample identifier,
// or nullopt to abort the whole run.
class Oracle {
 public:
  virtual ~Oracle() = default;
  virtual std::optional<int> label_of(int id) = 0;
};

class GroundTruthOracle final : public Oracle {
 public:
  explicit GroundTruthOracle(const Dataset& ds) : ds_(ds) {}

  std::optional<int> label_of(int id) override {
    if (id < 0 || id >= ds_.size()) {
      throw InvalidArgumentError("oracle: unknown identifier " + std::to_string(id));
    }
    const int label = ds_.labels(id);
    if (label == kUnlabeledSentinel) {
      throw InvalidArgumentError("oracle: sample " + std::to_string(id) +
                                 " has no ground-truth label");
    }
    return label;
  }

 private:
  const Dataset& ds_;
};

// Prompts on out, reads one label per line from in.  A blank line (or end
// of stream) aborts; anything unparsable re-prompts and counts as a retry.
class InteractiveOracle final : public Oracle {
 public:
  InteractiveOracle(const Dataset& ds, std::istream& in, std::ostream& out)
      : ds_(ds), in_(in), out_(out) {}

  std::optional<int> label_of(int id) override {
    if (id < 0 || id >= ds_.size()) {
      throw InvalidArgumentError("oracle: unknown identifier " + std::to_string(id));
    }
    while (true) {
      out_ << "label for sample " << id << " in [0, " << ds_.num_classes
           << "): " << std::flush;
      std::string line;
      if (!std::getline(in_, line)) return std::nullopt;
      std::size_t begin = line.find_first_not_of(" \t\r");
      if (begin == std::string::npos) return std::nullopt;
      std::size_t end = line.find_last_not_of(" \t\r");
      const std::string token = line.substr(begin, end - begin + 1);
      int value = 0;
      auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
      if (ec == std::errc() && ptr == token.data() + token.size() &&
          value >= 0 && value < ds_.num_classes) {
        return value;
      }
      ++retries_;
      out_ << "invalid label '" << token << "', expected an integer in [0, "
           << ds_.num_classes << ")\n";
    }
  }

  int retries() const { return retries_; }

 private:
  const Dataset& ds_;
  std::istream& in_;
  std::ostream& out_;
  int retries_ = 0;
};

struct ActiveLoopConfig {
  Strategy strategy = Strategy::margin;
  int q = 20;
  int budget = 15;            // acquisition iterations after the initial fit
  double C = 1.0;
  double lambda = 0.25;
  bool use_mkl = true;        // false trains the plain SVM on the given bank
  TrainOptions train{};
  bool eval_on_full_target = false;
  std::uint64_t seed = 1;
};

namespace detail {

inline Eigen::MatrixXd candidate_rows(const std::vector<Eigen::MatrixXd>& blocks,
                                      Eigen::Index candidate) {
  Eigen::MatrixXd rows(static_cast<Eigen::Index>(blocks.size()), blocks[0].rows());
  for (std::size_t m = 0; m < blocks.size(); ++m) {
    rows.row(static_cast<Eigen::Index>(m)) = blocks[m].col(candidate).transpose();
  }
  return rows;
}

}  // namespace detail

// The acquisition loop: fit, score the pool, query, annotate, refit.  The
// model is retrained from scratch after every batch; evaluation covers the
// labeled target samples outside the acquired set (or all labeled target
// samples when eval_on_full_target is set).  Aborting through the oracle
// returns the records of the completed iterations.
inline std::vector<QueryRecord> run_active_loop(
    const ActiveLoopConfig& cfg, const Dataset& ds,
    const std::vector<KernelMatrix>& kernels, const DomainSplit& split,
    const std::vector<int>& initial_labeled, Oracle& oracle) {
  if (cfg.q < 1) throw InvalidArgumentError("run_active_loop: q must be >= 1");
  if (cfg.budget < 0) throw InvalidArgumentError("run_active_loop: budget must be >= 0");
  if (kernels.empty()) throw InvalidArgumentError("run_active_loop: empty kernel bank");
  if (initial_labeled.empty()) {
    throw InvalidArgumentError("run_active_loop: empty initial labeled set");
  }
  validate(split);

  ActiveState state;
  state.labeled_ids = initial_labeled;
  state.pool = split.target;
  state.rng_seed = cfg.seed;
  for (int id : initial_labeled) {
    if (id < 0 || id >= ds.size() || ds.labels(id) == kUnlabeledSentinel) {
      throw InvalidArgumentError(
          "run_active_loop: initial labeled sample " + std::to_string(id) +
          " is unknown or unlabeled");
    }
    state.labeled_labels.push_back(ds.labels(id));
  }

  const MmdContext ctx = mmd_vector(kernels, split);
  TrainOptions topts = cfg.train;
  const double lambda = cfg.use_mkl ? cfg.lambda : 0.0;
  // lambda = 0 means no adaptation pressure; keep the uniform combination
  // instead of minimizing the discrepancy term alone.
  if (!cfg.use_mkl || lambda == 0.0) topts.optimize_d = false;

  rng::Generator gen(cfg.seed);

  auto retrain = [&]() {
    return train_mkl_da(kernels, state.labeled_ids, state.labeled_labels, ctx,
                        cfg.C, lambda, topts);
  };

  auto evaluate = [&](const MklModel& model) -> CurvePoint {
    std::unordered_set<int> acquired(state.acquired.begin(), state.acquired.end());
    std::vector<int> eval_ids;
    for (int id : split.target) {
      if (ds.labels(id) == kUnlabeledSentinel) continue;
      if (!cfg.eval_on_full_target && acquired.count(id) > 0) continue;
      eval_ids.push_back(id);
    }
    if (eval_ids.empty()) {
      throw EvalError("run_active_loop: evaluation set is empty");
    }
    const std::vector<int> labeled_pos = positions_of(kernels[0], model.labeled_indices);
    const std::vector<int> eval_pos = positions_of(kernels[0], eval_ids);
    std::vector<Eigen::MatrixXd> blocks;
    blocks.reserve(kernels.size());
    for (const KernelMatrix& km : kernels) {
      blocks.push_back(gather_block(km.values, labeled_pos, eval_pos));
    }
    std::vector<int> truth, predicted;
    truth.reserve(eval_ids.size());
    predicted.reserve(eval_ids.size());
    for (std::size_t i = 0; i < eval_ids.size(); ++i) {
      const Eigen::MatrixXd rows =
          detail::candidate_rows(blocks, static_cast<Eigen::Index>(i));
      predicted.push_back(predict_multiclass(model.per_class, rows));
      truth.push_back(ds.labels(eval_ids[i]));
    }
    const ConfusionMatrix cm = confusion_matrix(truth, predicted, ds.num_classes);
    return {overall_accuracy(cm), kappa(cm)};
  };

  std::vector<QueryRecord> records;
  MklModel model = retrain();
  {
    QueryRecord r;
    r.iteration = 0;
    const CurvePoint point = evaluate(model);
    r.oa = point.oa;
    r.kappa = point.kappa;
    records.push_back(std::move(r));
  }

  for (int iter = 1; iter <= cfg.budget; ++iter) {
    if (state.pool.empty()) break;

    const std::vector<int> labeled_pos = positions_of(kernels[0], state.labeled_ids);
    const std::vector<int> pool_pos = positions_of(kernels[0], state.pool);
    std::vector<Eigen::MatrixXd> blocks;
    blocks.reserve(kernels.size());
    for (const KernelMatrix& km : kernels) {
      blocks.push_back(gather_block(km.values, labeled_pos, pool_pos));
    }
    std::vector<double> scores(state.pool.size());
    for (std::size_t i = 0; i < state.pool.size(); ++i) {
      scores[i] = margin_score(
          model, detail::candidate_rows(blocks, static_cast<Eigen::Index>(i)));
    }
    std::unordered_map<int, double> score_of;
    score_of.reserve(state.pool.size());
    for (std::size_t i = 0; i < state.pool.size(); ++i) {
      score_of.emplace(state.pool[i], scores[i]);
    }

    const std::vector<int> selected =
        select_queries(cfg.strategy, state.pool, scores, cfg.q, gen);
    std::vector<int> labels;
    labels.reserve(selected.size());
    bool aborted = false;
    for (int id : selected) {
      const std::optional<int> label = oracle.label_of(id);
      if (!label.has_value()) {
        aborted = true;
        break;
      }
      labels.push_back(*label);
    }
    if (aborted) return records;

    state.apply_acquisition(selected, labels);
    model = retrain();

    QueryRecord r;
    r.iteration = iter;
    r.selected = selected;
    for (int id : selected) r.scores.push_back(score_of.at(id));
    r.labels = labels;
    const CurvePoint point = evaluate(model);
    r.oa = point.oa;
    r.kappa = point.kappa;
    records.push_back(std::move(r));
  }
  return records;
}

}  // namespace adamkl
