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

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "adamkl/active.hpp"
#include "adamkl/config.hpp"
#include "adamkl/data.hpp"
#include "adamkl/errors.hpp"
#include "adamkl/eval.hpp"
#include "adamkl/kernels.hpp"
#include "adamkl/mkl_da.hpp"
#include "adamkl/rng.hpp"
#include "adamkl/svm.hpp"

namespace adamkl {

struct SeedOutcome {
  std::uint64_t seed = 0;
  double chosen_c = 0.0;
  double chosen_lambda = 0.0;
  std::vector<QueryRecord> records;
};

struct ExperimentResult {
  ExperimentConfig config;
  std::vector<SeedOutcome> per_seed;
  CurveStats stats;                 // over the common iteration grid
  std::vector<int> added_samples;   // cumulative acquisitions per iteration
  int initial_labeled_count = 0;
};

namespace detail {

// Seed streams, so sampling, loop draws and fold shuffles never collide.
constexpr std::uint64_t kStreamInitialSample = 1;
constexpr std::uint64_t kStreamLoop = 2;
constexpr std::uint64_t kStreamFolds = 3;

inline std::string format_csv_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

inline void write_atomic(const std::filesystem::path& path,
                         const std::string& content) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write '" + tmp.string() + "'");
    out << content;
    if (!out) throw Error("write failed for '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path);
}

// Stratified fold assignment: per class, seeded shuffle, then round robin.
inline std::vector<std::vector<int>> stratified_folds(
    const std::vector<int>& ids, const std::vector<int>& labels, int folds,
    std::uint64_t seed) {
  std::unordered_map<int, std::vector<int>> by_class;
  for (std::size_t i = 0; i < ids.size(); ++i) by_class[labels[i]].push_back(ids[i]);
  std::vector<int> tags;
  tags.reserve(by_class.size());
  for (const auto& [tag, members] : by_class) tags.push_back(tag);
  std::sort(tags.begin(), tags.end());
  rng::Generator gen(seed);
  std::vector<std::vector<int>> out(static_cast<std::size_t>(folds));
  for (int tag : tags) {
    std::vector<int>& members = by_class[tag];
    std::sort(members.begin(), members.end());
    gen.shuffle(members);
    for (std::size_t i = 0; i < members.size(); ++i) {
      out[i % static_cast<std::size_t>(folds)].push_back(members[i]);
    }
  }
  return out;
}

struct ResolvedMethod {
  bool active = false;
  bool uses_lambda = false;
  Strategy strategy = Strategy::margin;
};

inline ResolvedMethod resolve_method(Method m) {
  ResolvedMethod r;
  r.active = is_active_method(m);
  r.uses_lambda = method_uses_lambda(m);
  r.strategy = (m == Method::rs || m == Method::mkl_rs) ? Strategy::random
                                                        : Strategy::margin;
  return r;
}

}  // namespace detail

inline Dataset materialize_dataset(const ExperimentConfig& cfg) {
  Dataset ds = cfg.use_synth ? synth_shifted(cfg.synth)
                             : load_dataset(cfg.dataset_path);
  validate(ds);
  if (cfg.standardize) ds = standardize(ds, source_statistics(ds));
  return ds;
}

namespace detail {

struct RunContext {
  const ExperimentConfig& cfg;
  const Dataset& ds;
  DomainSplit split;
  ResolvedMethod method;
};

// The per-seed pipeline: draw the initial labeled set, freeze the kernel
// widths, build the Gram bank, pick (C, lambda) by stratified k-fold OA on
// the initial labeled samples, then run the loop (or the single fit for the
// non-loop methods).
inline SeedOutcome run_single_seed(const RunContext& run, std::uint64_t seed) {
  const ExperimentConfig& cfg = run.cfg;
  SeedOutcome outcome;
  outcome.seed = seed;

  std::vector<int> initial;
  if (run.method.active) {
    initial = stratified_initial_sample(
        run.ds, cfg.per_class_initial,
        rng::derive_seed(seed, kStreamInitialSample));
  } else {
    initial = run.split.source;
  }

  double gamma = cfg.gamma_override;
  if (gamma == 0.0) {
    const std::vector<int>& basis =
        cfg.gamma_from == GammaFrom::all_source ? run.split.source : initial;
    gamma = gamma_heuristic(run.ds.features(basis, Eigen::all));
  }

  std::vector<KernelSpec> specs;
  bool any_as_printed = false;
  if (method_uses_bank(cfg.method)) {
    for (const KernelConfig& kc : cfg.kernel_bank) {
      KernelSpec spec;
      spec.kind = kc.kind;
      spec.variant = kc.variant;
      spec.gamma = kc.gamma > 0.0 ? kc.gamma : gamma;
      if ((spec.kind == KernelKind::inverse_square_distance ||
           spec.kind == KernelKind::inverse_distance) &&
          spec.variant == FormVariant::as_printed) {
        any_as_printed = true;
      }
      specs.push_back(spec);
    }
  } else {
    specs.push_back({KernelKind::gaussian, gamma, FormVariant::rational});
  }

  const std::vector<KernelMatrix> kernels =
      compute_base_kernels(run.ds.features, specs);
  const MmdContext ctx = mmd_vector(kernels, run.split);

  TrainOptions topts;
  topts.max_outer = cfg.max_outer;
  topts.d_tol = cfg.d_tol;
  topts.svm_tol = cfg.svm_tol;
  topts.shared_d = cfg.shared_d;
  topts.check_psd = any_as_printed;

  std::vector<int> initial_labels;
  initial_labels.reserve(initial.size());
  for (int id : initial) initial_labels.push_back(run.ds.labels(id));

  // Grid selection by mean fold OA, ties to the smaller C then the smaller
  // lambda; folds are frozen per seed.
  std::vector<double> c_grid = cfg.c_grid;
  std::sort(c_grid.begin(), c_grid.end());
  std::vector<double> lambda_grid;
  if (run.method.uses_lambda) {
    lambda_grid = cfg.lambda_grid;
    std::sort(lambda_grid.begin(), lambda_grid.end());
  } else {
    lambda_grid = {0.0};
  }

  double best_c = c_grid.front();
  double best_lambda = lambda_grid.front();
  if (c_grid.size() * lambda_grid.size() > 1) {
    const std::vector<std::vector<int>> folds = detail::stratified_folds(
        initial, initial_labels, cfg.cv_folds,
        rng::derive_seed(seed, kStreamFolds));
    double best_oa = -1.0;
    for (double c_value : c_grid) {
      for (double lambda_value : lambda_grid) {
        TrainOptions cv_opts = topts;
        cv_opts.optimize_d = run.method.uses_lambda && lambda_value > 0.0;
        double oa_sum = 0.0;
        int counted = 0;
        for (const std::vector<int>& held_out : folds) {
          if (held_out.empty()) continue;
          std::unordered_set<int> held(held_out.begin(), held_out.end());
          std::vector<int> train_ids, train_labels;
          for (std::size_t i = 0; i < initial.size(); ++i) {
            if (held.count(initial[i]) > 0) continue;
            train_ids.push_back(initial[i]);
            train_labels.push_back(initial_labels[i]);
          }
          MklModel model;
          try {
            model = train_mkl_da(kernels, train_ids, train_labels, ctx, c_value,
                                 lambda_value, cv_opts);
          } catch (const DegenerateClassError&) {
            continue;  // fold lost a class; skip it
          }
          const std::vector<int> train_pos = positions_of(kernels[0], train_ids);
          const std::vector<int> held_pos = positions_of(kernels[0], held_out);
          std::vector<Eigen::MatrixXd> blocks;
          for (const KernelMatrix& km : kernels) {
            blocks.push_back(gather_block(km.values, train_pos, held_pos));
          }
          std::vector<int> truth, predicted;
          for (std::size_t i = 0; i < held_out.size(); ++i) {
            predicted.push_back(predict_multiclass(
                model.per_class,
                detail::candidate_rows(blocks, static_cast<Eigen::Index>(i))));
            truth.push_back(run.ds.labels(held_out[i]));
          }
          oa_sum += overall_accuracy(truth, predicted);
          ++counted;
        }
        if (counted == 0) {
          throw DegenerateInputError(
              "cross-validation failed on every fold; initial labeled set too small");
        }
        const double mean_oa = oa_sum / counted;
        if (mean_oa > best_oa) {
          best_oa = mean_oa;
          best_c = c_value;
          best_lambda = lambda_value;
        }
      }
    }
  }
  outcome.chosen_c = best_c;
  outcome.chosen_lambda = best_lambda;

  if (run.method.active) {
    ActiveLoopConfig loop;
    loop.strategy = run.method.strategy;
    loop.q = cfg.q;
    loop.budget = cfg.budget;
    loop.C = best_c;
    loop.lambda = best_lambda;
    loop.use_mkl = run.method.uses_lambda;
    loop.train = topts;
    loop.eval_on_full_target = cfg.eval_on_full_target;
    loop.seed = rng::derive_seed(seed, kStreamLoop);
    if (cfg.oracle == OracleKind::interactive) {
      InteractiveOracle oracle(run.ds, std::cin, std::cout);
      outcome.records = run_active_loop(loop, run.ds, kernels, run.split,
                                        initial, oracle);
    } else {
      GroundTruthOracle oracle(run.ds);
      outcome.records = run_active_loop(loop, run.ds, kernels, run.split,
                                        initial, oracle);
    }
  } else {
    TrainOptions fit_opts = topts;
    fit_opts.optimize_d = run.method.uses_lambda && best_lambda > 0.0;
    const MklModel model = train_mkl_da(kernels, initial, initial_labels, ctx,
                                        best_c, best_lambda, fit_opts);
    std::vector<int> eval_ids;
    for (int id : run.split.target) {
      if (run.ds.labels(id) != kUnlabeledSentinel) eval_ids.push_back(id);
    }
    if (eval_ids.empty()) throw EvalError("no labeled target samples to evaluate");
    const std::vector<int> labeled_pos = positions_of(kernels[0], initial);
    const std::vector<int> eval_pos = positions_of(kernels[0], eval_ids);
    std::vector<Eigen::MatrixXd> blocks;
    for (const KernelMatrix& km : kernels) {
      blocks.push_back(gather_block(km.values, labeled_pos, eval_pos));
    }
    std::vector<int> truth, predicted;
    for (std::size_t i = 0; i < eval_ids.size(); ++i) {
      predicted.push_back(predict_multiclass(
          model.per_class,
          detail::candidate_rows(blocks, static_cast<Eigen::Index>(i))));
      truth.push_back(run.ds.labels(eval_ids[i]));
    }
    const ConfusionMatrix cm = confusion_matrix(truth, predicted, run.ds.num_classes);
    QueryRecord record;
    record.iteration = 0;
    record.oa = overall_accuracy(cm);
    record.kappa = kappa(cm);
    outcome.records.push_back(std::move(record));
  }
  return outcome;
}

}  // namespace detail

// Runs every configured seed (optionally across jobs threads) and
// aggregates the learning curves.  Results are independent of the job
// count; outcomes are merged in seed order.
inline ExperimentResult run_experiment_collect(const ExperimentConfig& cfg,
                                               int jobs = 1,
                                               std::ostream* log = nullptr) {
  if (jobs < 1) throw InvalidArgumentError("run_experiment_collect: jobs must be >= 1");
  ExperimentResult result;
  result.config = cfg;

  const Dataset ds = materialize_dataset(cfg);
  detail::RunContext run{cfg, ds,
                         DomainSplit{ds.source_indices(), ds.target_indices()},
                         detail::resolve_method(cfg.method)};
  validate(run.split);

  result.per_seed.resize(cfg.seeds.size());
  const int workers = static_cast<int>(
      std::min<std::size_t>(static_cast<std::size_t>(jobs), cfg.seeds.size()));
  if (workers <= 1) {
    for (std::size_t i = 0; i < cfg.seeds.size(); ++i) {
      result.per_seed[i] = detail::run_single_seed(run, cfg.seeds[i]);
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> threads;
    threads.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
      threads.emplace_back([&]() {
        while (true) {
          const std::size_t i = next.fetch_add(1);
          if (i >= cfg.seeds.size()) break;
          try {
            result.per_seed[i] = detail::run_single_seed(run, cfg.seeds[i]);
          } catch (...) {
            std::lock_guard<std::mutex> lock(failure_mutex);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    }
    for (std::thread& t : threads) t.join();
    if (failure) std::rethrow_exception(failure);
  }

  // Aborted interactive runs may leave shorter histories; aggregate over
  // the common prefix.
  std::size_t common = result.per_seed[0].records.size();
  for (const SeedOutcome& outcome : result.per_seed) {
    common = std::min(common, outcome.records.size());
  }
  if (common == 0) throw EvalError("run produced no iterations");
  std::vector<std::vector<CurvePoint>> curves;
  curves.reserve(result.per_seed.size());
  for (const SeedOutcome& outcome : result.per_seed) {
    if (outcome.records.size() != result.per_seed[0].records.size() && log) {
      *log << "note: seed " << outcome.seed << " stopped after "
           << outcome.records.size() - 1 << " iterations\n";
    }
    std::vector<CurvePoint> points;
    for (std::size_t t = 0; t < common; ++t) {
      points.push_back({outcome.records[t].oa, outcome.records[t].kappa});
    }
    curves.push_back(std::move(points));
  }
  result.stats = aggregate_curves(curves);

  result.added_samples.resize(common, 0);
  int cumulative = 0;
  for (std::size_t t = 0; t < common; ++t) {
    cumulative += static_cast<int>(result.per_seed[0].records[t].selected.size());
    result.added_samples[t] = cumulative;
  }
  result.initial_labeled_count =
      run.method.active
          ? cfg.per_class_initial * ds.num_classes
          : static_cast<int>(run.split.source.size());

  if (log) {
    for (const SeedOutcome& outcome : result.per_seed) {
      *log << "seed " << outcome.seed << ": C = " << outcome.chosen_c;
      if (run.method.uses_lambda) *log << ", lambda = " << outcome.chosen_lambda;
      *log << ", final OA = "
           << detail::format_csv_double(outcome.records[common - 1].oa) << "\n";
    }
  }
  return result;
}

inline std::string render_curve_csv(const ExperimentResult& result) {
  std::string out = "iteration,added_samples";
  for (const SeedOutcome& outcome : result.per_seed) {
    out += ",oa_seed_" + std::to_string(outcome.seed);
  }
  for (const SeedOutcome& outcome : result.per_seed) {
    out += ",kappa_seed_" + std::to_string(outcome.seed);
  }
  out += ",oa_mean,oa_sd,kappa_mean,kappa_sd\n";
  for (std::size_t t = 0; t < result.stats.size(); ++t) {
    out += std::to_string(t) + "," + std::to_string(result.added_samples[t]);
    for (const SeedOutcome& outcome : result.per_seed) {
      out += "," + detail::format_csv_double(outcome.records[t].oa);
    }
    for (const SeedOutcome& outcome : result.per_seed) {
      out += "," + detail::format_csv_double(outcome.records[t].kappa);
    }
    out += "," + detail::format_csv_double(result.stats.oa_mean[t]);
    out += "," + detail::format_csv_double(result.stats.oa_sd[t]);
    out += "," + detail::format_csv_double(result.stats.kappa_mean[t]);
    out += "," + detail::format_csv_double(result.stats.kappa_sd[t]);
    out += "\n";
  }
  return out;
}

inline std::string render_summary_csv(const ExperimentResult& result) {
  const std::size_t last = result.stats.size() - 1;
  std::string out =
      "method,source_samples,target_samples,oa_mean,oa_sd,kappa_mean,kappa_sd\n";
  out += method_name(result.config.method);
  out += "," + std::to_string(result.initial_labeled_count);
  out += "," + std::to_string(result.added_samples[last]);
  out += "," + detail::format_csv_double(result.stats.oa_mean[last]);
  out += "," + detail::format_csv_double(result.stats.oa_sd[last]);
  out += "," + detail::format_csv_double(result.stats.kappa_mean[last]);
  out += "," + detail::format_csv_double(result.stats.kappa_sd[last]);
  out += "\n";
  return out;
}

// Full experiment entry point: writes config.echo up front, then curve.csv
// and summary.csv once the runs finish, each atomically via a temp file.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg,
                                       const std::filesystem::path& output_dir,
                                       int jobs = 1,
                                       std::ostream* log = nullptr) {
  std::filesystem::create_directories(output_dir);
  detail::write_atomic(output_dir / "config.echo", echo_config(cfg));
  ExperimentResult result = run_experiment_collect(cfg, jobs, log);
  detail::write_atomic(output_dir / "curve.csv", render_curve_csv(result));
  detail::write_atomic(output_dir / "summary.csv", render_summary_csv(result));
  return result;
}

}  // namespace adamkl
