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

#include <Eigen/Dense>
#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <vector>

#include "adamkl/data.hpp"
#include "adamkl/kernels.hpp"
#include "adamkl/mkl_da.hpp"
#include "adamkl/rng.hpp"
#include "adamkl/svm.hpp"
#include "oracles.hpp"

using namespace adamkl;

namespace {

std::vector<KernelSpec> rational_bank(double gamma) {
  return {
      {KernelKind::gaussian, gamma, FormVariant::rational},
      {KernelKind::laplacian, gamma, FormVariant::rational},
      {KernelKind::inverse_square_distance, gamma, FormVariant::rational},
      {KernelKind::inverse_distance, gamma, FormVariant::rational},
  };
}

struct MmdInstance {
  std::vector<KernelMatrix> kernels;
  DomainSplit split;
};

MmdInstance random_mmd_instance(std::uint64_t seed) {
  rng::Generator gen(seed);
  const int ns = 2 + static_cast<int>(gen.below(40));
  const int nt = 2 + static_cast<int>(gen.below(40));
  const int dim = 1 + static_cast<int>(gen.below(5));
  Eigen::MatrixXd X(ns + nt, dim);
  const double shift = gen.uniform(0.0, 3.0);
  for (int i = 0; i < ns + nt; ++i) {
    for (int j = 0; j < dim; ++j) {
      X(i, j) = gen.normal() + (i >= ns ? shift : 0.0);
    }
  }
  MmdInstance inst;
  inst.kernels = compute_base_kernels(X, rational_bank(gamma_heuristic(X)));
  for (int i = 0; i < ns; ++i) inst.split.source.push_back(i);
  for (int i = ns; i < ns + nt; ++i) inst.split.target.push_back(i);
  return inst;
}

// Two single-feature gaussian kernels over the same samples: kernel 0 sees
// only column 0, kernel 1 only column 1.  Shared identity index map.
std::vector<KernelMatrix> per_feature_bank(const Eigen::MatrixXd& X,
                                           double gamma) {
  const KernelSpec spec{KernelKind::gaussian, gamma, FormVariant::rational};
  std::vector<KernelMatrix> bank;
  bank.push_back(compute_base_kernels(X.col(0), {spec})[0]);
  bank.push_back(compute_base_kernels(X.col(1), {spec})[0]);
  return bank;
}

// Column 0 separates the classes strongly but is shifted between domains;
// column 1 separates weakly and is shift-free.
struct ShiftProblem {
  Eigen::MatrixXd X;
  std::vector<int> labeled_ids;
  std::vector<int> labels;
  DomainSplit split;
};

ShiftProblem make_shift_problem() {
  rng::Generator gen(2024);
  const int per = 10;
  ShiftProblem prob;
  prob.X.resize(4 * per, 2);
  int row = 0;
  for (int domain = 0; domain < 2; ++domain) {
    for (int cls = 0; cls < 2; ++cls) {
      for (int i = 0; i < per; ++i, ++row) {
        const double sign = cls == 0 ? -1.0 : 1.0;
        prob.X(row, 0) = sign * 1.5 + 0.2 * gen.normal() + (domain == 1 ? 6.0 : 0.0);
        prob.X(row, 1) = sign * 0.3 + 0.2 * gen.normal();
        if (domain == 0) {
          prob.labeled_ids.push_back(row);
          prob.labels.push_back(cls);
          prob.split.source.push_back(row);
        } else {
          prob.split.target.push_back(row);
        }
      }
    }
  }
  return prob;
}

}  // namespace

TEST_CASE("domain split validation") {
  REQUIRE_NOTHROW(validate(DomainSplit{{0, 1}, {2, 3}}));
  REQUIRE_THROWS_AS(validate(DomainSplit{{}, {1}}), InvalidArgumentError);
  REQUIRE_THROWS_AS(validate(DomainSplit{{0}, {}}), InvalidArgumentError);
  REQUIRE_THROWS_AS(validate(DomainSplit{{0, 1}, {1, 2}}), InvalidArgumentError);
  REQUIRE_THROWS_AS(validate(DomainSplit{{0, 0}, {1}}), InvalidArgumentError);
}

TEST_CASE("discrepancy of two coincident pairs, hand value") {
  Eigen::MatrixXd X(4, 1);
  X << 0.0, 0.0, 2.0, 2.0;
  const auto kernels = compute_base_kernels(
      X, {{KernelKind::gaussian, 1.0, FormVariant::rational}});
  const MmdContext ctx = mmd_vector(kernels, DomainSplit{{0, 1}, {2, 3}});
  // within-source and within-target means are 1; cross mean is exp(-4)
  REQUIRE(ctx.k(0) ==
          Catch::Approx(2.0 - 2.0 * std::exp(-4.0)).epsilon(1e-12));
}

TEST_CASE("discrepancy vanishes when domains coincide") {
  Eigen::MatrixXd X(6, 2);
  X << 0.1, 0.7, -1.0, 0.4, 2.0, -0.3, 0.1, 0.7, -1.0, 0.4, 2.0, -0.3;
  const auto kernels = compute_base_kernels(X, rational_bank(0.8));
  const MmdContext ctx = mmd_vector(kernels, DomainSplit{{0, 1, 2}, {3, 4, 5}});
  for (Eigen::Index m = 0; m < ctx.k.size(); ++m) {
    REQUIRE(std::abs(ctx.k(m)) <= 1e-12);
  }
}

TEST_CASE("discrepancy matches the explicit coefficient-matrix oracle") {
  for (std::uint64_t seed = 1; seed <= 12; ++seed) {
    const MmdInstance inst = random_mmd_instance(seed);
    const MmdContext ctx = mmd_vector(inst.kernels, inst.split);
    const Eigen::VectorXd via_l = reference::mmd_explicit_l(inst.kernels, inst.split);
    const Eigen::VectorXd via_loops =
        reference::mmd_double_loop(inst.kernels, inst.split);
    for (Eigen::Index m = 0; m < ctx.k.size(); ++m) {
      const double scale = std::max(1.0, std::abs(via_l(m)));
      INFO("seed " << seed << " kernel " << m);
      REQUIRE(std::abs(ctx.k(m) - via_l(m)) <= 1e-10 * scale);
      REQUIRE(std::abs(ctx.k(m) - via_loops(m)) <= 1e-10 * scale);
    }
  }
}

TEST_CASE("discrepancy respects nontrivial identifier maps") {
  rng::Generator gen(77);
  Eigen::MatrixXd X(8, 2);
  for (int i = 0; i < 8; ++i) {
    for (int j = 0; j < 2; ++j) X(i, j) = gen.normal();
  }
  const std::vector<int> ids{10, 4, 7, 22, 3, 15, 9, 8};
  const auto kernels = compute_base_kernels(X, rational_bank(0.5), &ids);
  const DomainSplit split{{4, 22, 9, 10}, {7, 3, 15, 8}};
  const MmdContext ctx = mmd_vector(kernels, split);
  const Eigen::VectorXd oracle = reference::mmd_double_loop(kernels, split);
  for (Eigen::Index m = 0; m < ctx.k.size(); ++m) {
    REQUIRE(ctx.k(m) == Catch::Approx(oracle(m)).margin(1e-12));
  }
}

TEST_CASE("discrepancy input checks") {
  Eigen::MatrixXd X(4, 1);
  X << 0.0, 1.0, 2.0, 3.0;
  const auto kernels = compute_base_kernels(X, rational_bank(1.0));
  REQUIRE_THROWS_AS(mmd_vector(kernels, DomainSplit{{0, 1}, {2}}),
                    InvalidArgumentError);  // sample 3 not covered
  REQUIRE_THROWS_AS(mmd_vector({}, DomainSplit{{0}, {1}}), InvalidArgumentError);
}

TEST_CASE("weighted discrepancy is the inner product") {
  MmdContext ctx;
  ctx.k.resize(2);
  ctx.k << 0.3, 0.9;
  Eigen::VectorXd d(2);
  d << 1.0, 0.0;
  REQUIRE(mmd_value(d, ctx) == 0.3);
  ctx.k.setZero();
  d << 0.25, 0.75;
  REQUIRE(mmd_value(d, ctx) == 0.0);
  Eigen::VectorXd wrong(3);
  wrong.setZero();
  REQUIRE_THROWS_AS(mmd_value(wrong, ctx), DimensionError);
}

TEST_CASE("weighted discrepancy equals the combined-kernel mean embedding") {
  const MmdInstance inst = random_mmd_instance(31);
  const MmdContext ctx = mmd_vector(inst.kernels, inst.split);
  rng::Generator gen(5);
  Eigen::VectorXd raw(4);
  for (int m = 0; m < 4; ++m) raw(m) = gen.uniform01();
  const Eigen::VectorXd d = project_simplex(raw);
  const KernelMatrix combined = combined_kernel(d, inst.kernels);
  const Eigen::VectorXd direct =
      reference::mmd_double_loop({combined}, inst.split);
  REQUIRE(mmd_value(d, ctx) == Catch::Approx(direct(0)).margin(1e-10));
}

TEST_CASE("weighted discrepancy is nonnegative for PSD kernels") {
  rng::Generator gen(9);
  for (std::uint64_t seed : {101ull, 102ull, 103ull}) {
    const MmdInstance inst = random_mmd_instance(seed);
    const MmdContext ctx = mmd_vector(inst.kernels, inst.split);
    for (int trial = 0; trial < 10; ++trial) {
      Eigen::VectorXd raw(4);
      for (int m = 0; m < 4; ++m) raw(m) = gen.uniform(-1.0, 2.0);
      REQUIRE(mmd_value(project_simplex(raw), ctx) >= -1e-10);
    }
  }
}

TEST_CASE("classifier-side coefficients p") {
  Eigen::MatrixXd X(5, 2);
  rng::Generator gen(13);
  for (int i = 0; i < 5; ++i) {
    for (int j = 0; j < 2; ++j) X(i, j) = gen.normal();
  }
  const auto kernels = compute_base_kernels(X, rational_bank(0.6));
  std::vector<Eigen::MatrixXd> blocks;
  for (const KernelMatrix& km : kernels) blocks.push_back(km.values);

  SECTION("zero alpha gives the zero vector") {
    const Eigen::VectorXd p = compute_p(Eigen::VectorXd::Zero(5),
                                        Eigen::VectorXd::Ones(5), blocks);
    REQUIRE(p == Eigen::VectorXd::Zero(4));
  }

  SECTION("single sample quadratic form") {
    std::vector<Eigen::MatrixXd> one{Eigen::MatrixXd::Ones(1, 1)};
    Eigen::VectorXd alpha(1), y(1);
    alpha << 2.0;
    y << 1.0;
    const Eigen::VectorXd p = compute_p(alpha, y, one);
    REQUIRE(p(0) == 4.0);
  }

  SECTION("matches recomputation and stays nonnegative") {
    Eigen::VectorXd alpha(5), y(5);
    for (int i = 0; i < 5; ++i) {
      alpha(i) = gen.uniform01();
      y(i) = gen.uniform01() < 0.5 ? -1.0 : 1.0;
    }
    const Eigen::VectorXd p = compute_p(alpha, y, blocks);
    for (std::size_t m = 0; m < blocks.size(); ++m) {
      double direct = 0.0;
      for (int i = 0; i < 5; ++i) {
        for (int j = 0; j < 5; ++j) {
          direct += alpha(i) * y(i) * blocks[m](i, j) * alpha(j) * y(j);
        }
      }
      REQUIRE(p(static_cast<Eigen::Index>(m)) ==
              Catch::Approx(direct).margin(1e-10));
      REQUIRE(p(static_cast<Eigen::Index>(m)) >= -1e-12);
    }
  }

  SECTION("rejects misaligned inputs") {
    REQUIRE_THROWS_AS(
        compute_p(Eigen::VectorXd::Zero(4), Eigen::VectorXd::Ones(5), blocks),
        DimensionError);
    REQUIRE_THROWS_AS(compute_p(Eigen::VectorXd::Zero(5),
                                Eigen::VectorXd::Ones(5), {}),
                      InvalidArgumentError);
  }
}

TEST_CASE("simplex projection fixed points and vertices") {
  Eigen::VectorXd on(3);
  on << 0.2, 0.5, 0.3;
  REQUIRE(project_simplex(on) == on);

  Eigen::Vector2d outside(2.0, 0.0);
  const Eigen::VectorXd v = project_simplex(outside);
  REQUIRE(v(0) == 1.0);
  REQUIRE(v(1) == 0.0);

  Eigen::VectorXd nan(2);
  nan << std::numeric_limits<double>::quiet_NaN(), 0.0;
  REQUIRE_THROWS_AS(project_simplex(nan), InvalidArgumentError);
  REQUIRE_THROWS_AS(project_simplex(Eigen::VectorXd()), InvalidArgumentError);
}

TEST_CASE("simplex projection satisfies the optimality conditions") {
  rng::Generator gen(55);
  for (int trial = 0; trial < 40; ++trial) {
    const int m = 2 + static_cast<int>(gen.below(5));
    Eigen::VectorXd v(m);
    for (int i = 0; i < m; ++i) v(i) = gen.uniform(-2.0, 2.0);
    const Eigen::VectorXd d = project_simplex(v);

    REQUIRE(d.sum() == Catch::Approx(1.0).margin(1e-12));
    REQUIRE(d.minCoeff() >= 0.0);
    // Active entries share one multiplier; inactive entries lie below it.
    double tau = 0.0;
    bool have_tau = false;
    for (int i = 0; i < m; ++i) {
      if (d(i) > 0.0) {
        const double t = v(i) - d(i);
        if (!have_tau) {
          tau = t;
          have_tau = true;
        } else {
          REQUIRE(t == Catch::Approx(tau).margin(1e-12));
        }
      }
    }
    REQUIRE(have_tau);
    for (int i = 0; i < m; ++i) {
      if (d(i) == 0.0) REQUIRE(v(i) <= tau + 1e-12);
    }
  }
}

TEST_CASE("simplex projection beats every grid point") {
  rng::Generator gen(56);
  for (int trial = 0; trial < 10; ++trial) {
    Eigen::Vector3d v(gen.uniform(-2.0, 2.0), gen.uniform(-2.0, 2.0),
                      gen.uniform(-2.0, 2.0));
    const Eigen::VectorXd d = project_simplex(v);
    const Eigen::Vector3d grid = reference::simplex_grid_nearest_m3(v, 200);
    REQUIRE((d - v).squaredNorm() <= (grid - v).squaredNorm() + 1e-12);
    REQUIRE((grid - v).squaredNorm() - (d - v).squaredNorm() <= 0.1);
  }
}

TEST_CASE("weight subproblem trivial cases") {
  Eigen::VectorXd k1(1), p1(1);
  k1 << 0.4;
  p1 << 2.0;
  const Eigen::VectorXd single = solve_d_step(k1, p1, 1.0);
  REQUIRE(single.size() == 1);
  REQUIRE(single(0) == 1.0);

  Eigen::VectorXd k2(2), p2(2);
  k2 << 0.0, 0.0;
  p2 << 1.0, 3.0;
  const Eigen::VectorXd vertex = solve_d_step(k2, p2, 1.0);
  REQUIRE(vertex(0) == Catch::Approx(0.0).margin(1e-9));
  REQUIRE(vertex(1) == Catch::Approx(1.0).margin(1e-9));
}

TEST_CASE("weight subproblem input checks") {
  Eigen::VectorXd k(2), p(3);
  k.setZero();
  p.setZero();
  REQUIRE_THROWS_AS(solve_d_step(k, p, 1.0), DimensionError);
  Eigen::VectorXd p2(2);
  p2.setZero();
  REQUIRE_THROWS_AS(solve_d_step(k, p2, -1.0), InvalidArgumentError);
  Eigen::VectorXd inf(2);
  inf << std::numeric_limits<double>::infinity(), 0.0;
  REQUIRE_THROWS_AS(solve_d_step(inf, p2, 1.0), InvalidArgumentError);
  REQUIRE_THROWS_AS(solve_d_step(Eigen::VectorXd(), Eigen::VectorXd(), 1.0),
                    InvalidArgumentError);
  Eigen::VectorXd warm(3);
  warm.setZero();
  REQUIRE_THROWS_AS(solve_d_step(k, p2, 1.0, &warm), DimensionError);
}

TEST_CASE("weight subproblem matches the grid oracle on two kernels") {
  rng::Generator gen(21);
  for (int trial = 0; trial < 30; ++trial) {
    Eigen::VectorXd k(2), p(2);
    k << gen.uniform(0.0, 2.0), gen.uniform(0.0, 2.0);
    p << gen.uniform(0.0, 5.0), gen.uniform(0.0, 5.0);
    const double lambda = gen.uniform(0.0, 2.0);
    std::vector<double> trace;
    const Eigen::VectorXd d = solve_d_step(k, p, lambda, nullptr, &trace);

    REQUIRE(d.sum() == Catch::Approx(1.0).margin(1e-9));
    REQUIRE(d.minCoeff() >= -1e-12);
    for (std::size_t i = 1; i < trace.size(); ++i) {
      REQUIRE(trace[i] <= trace[i - 1] + 1e-12);
    }

    const double q = k.dot(d);
    const double objective = q * q - lambda * p.dot(d);
    const double grid = reference::d_step_grid_best_m2(k, p, lambda, 1e-4);
    INFO("trial " << trial);
    REQUIRE(std::abs(objective - grid) <= 1e-3);
  }
}

TEST_CASE("weight subproblem honors warm starts") {
  Eigen::VectorXd k(3), p(3);
  k << 0.5, 0.1, 0.9;
  p << 1.0, 2.0, 0.5;
  Eigen::VectorXd warm(3);
  warm << 5.0, -1.0, 0.0;  // off the simplex on purpose
  std::vector<double> trace;
  const Eigen::VectorXd d = solve_d_step(k, p, 0.7, &warm, &trace);
  const Eigen::VectorXd start = project_simplex(warm);
  const double q0 = k.dot(start);
  REQUIRE(trace.front() ==
          Catch::Approx(q0 * q0 - 0.7 * p.dot(start)).margin(1e-12));
  const Eigen::VectorXd cold = solve_d_step(k, p, 0.7);
  const double f_warm = k.dot(d) * k.dot(d) - 0.7 * p.dot(d);
  const double f_cold = k.dot(cold) * k.dot(cold) - 0.7 * p.dot(cold);
  REQUIRE(f_warm == Catch::Approx(f_cold).margin(1e-6));
}

namespace {

MmdContext context_for(const std::vector<KernelMatrix>& kernels,
                       const DomainSplit& split) {
  return mmd_vector(kernels, split);
}

}  // namespace

TEST_CASE("single-kernel training reduces exactly to the plain SVM") {
  rng::Generator gen(42);
  Eigen::MatrixXd X(20, 3);
  for (int i = 0; i < 20; ++i) {
    for (int j = 0; j < 3; ++j) X(i, j) = gen.normal();
  }
  const auto kernels = compute_base_kernels(
      X, {{KernelKind::gaussian, 0.7, FormVariant::rational}});
  DomainSplit split;
  for (int i = 0; i < 12; ++i) split.source.push_back(i);
  for (int i = 12; i < 20; ++i) split.target.push_back(i);
  std::vector<int> ids, labels;
  for (int i = 0; i < 12; ++i) {
    ids.push_back(i);
    labels.push_back(i % 3);
  }

  const MklModel model = train_mkl_da(kernels, ids, labels,
                                      context_for(kernels, split), 2.0, 0.5);
  REQUIRE(model.d.size() == 1);
  REQUIRE(model.d(0) == 1.0);
  REQUIRE(model.history.size() == 1);
  REQUIRE(model.per_class.size() == 3);

  const Eigen::MatrixXd block =
      gather_block(kernels[0].values, positions_of(kernels[0], ids),
                   positions_of(kernels[0], ids));
  for (const BinaryModel& bm : model.per_class) {
    Eigen::VectorXd y(12);
    for (int i = 0; i < 12; ++i) y(i) = labels[i] == bm.class_tag ? 1.0 : -1.0;
    const DualSolution direct = solve_svm_dual(block, y, 2.0, 1e-3);
    REQUIRE(bm.dual.alpha == direct.alpha);
    REQUIRE(bm.dual.b == direct.b);
    REQUIRE(bm.weights.size() == 1);
    REQUIRE(bm.weights(0) == 1.0);
  }
}

TEST_CASE("zero discrepancy with identical kernels keeps uniform weights") {
  rng::Generator gen(43);
  Eigen::MatrixXd X(16, 2);
  for (int i = 0; i < 16; ++i) {
    for (int j = 0; j < 2; ++j) X(i, j) = gen.normal();
  }
  const KernelSpec spec{KernelKind::gaussian, 0.5, FormVariant::rational};
  auto one = compute_base_kernels(X, {spec});
  std::vector<KernelMatrix> twins{one[0], one[0]};

  DomainSplit split;
  for (int i = 0; i < 10; ++i) split.source.push_back(i);
  for (int i = 10; i < 16; ++i) split.target.push_back(i);
  std::vector<int> ids, labels;
  for (int i = 0; i < 10; ++i) {
    ids.push_back(i);
    labels.push_back(i % 2);
  }
  const MmdContext ctx = context_for(twins, split);

  const MklModel model = train_mkl_da(twins, ids, labels, ctx, 1.0, 0.25);
  for (const BinaryModel& bm : model.per_class) {
    REQUIRE(bm.weights(0) == Catch::Approx(0.5).margin(1e-9));
    REQUIRE(bm.weights(1) == Catch::Approx(0.5).margin(1e-9));
  }

  // Identical kernels leave the combined matrix equal to either one, so the
  // decision function must match the plain single-kernel SVM.
  const Eigen::MatrixXd block =
      gather_block(one[0].values, positions_of(one[0], ids),
                   positions_of(one[0], ids));
  for (const BinaryModel& bm : model.per_class) {
    Eigen::VectorXd y(10);
    for (int i = 0; i < 10; ++i) y(i) = labels[i] == bm.class_tag ? 1.0 : -1.0;
    const DualSolution direct = solve_svm_dual(block, y, 1.0, 1e-3);
    REQUIRE(bm.dual.alpha.isApprox(direct.alpha, 1e-9));
    REQUIRE(bm.dual.b == Catch::Approx(direct.b).margin(1e-9));
  }
}

TEST_CASE("adaptation moves weight onto the shift-free kernel") {
  const ShiftProblem prob = make_shift_problem();
  const std::vector<KernelMatrix> bank = per_feature_bank(prob.X, 0.5);
  const MmdContext ctx = context_for(bank, prob.split);
  // Kernel 0 watches the shifted feature, kernel 1 the stable one.
  REQUIRE(ctx.k(0) > 10.0 * std::abs(ctx.k(1)));

  const double C = 1.0;
  const double lambda = 0.5;
  const MklModel model =
      train_mkl_da(bank, prob.labeled_ids, prob.labels, ctx, C, lambda);

  std::vector<Eigen::MatrixXd> blocks;
  const std::vector<int> pos = positions_of(bank[0], prob.labeled_ids);
  for (const KernelMatrix& km : bank) {
    blocks.push_back(gather_block(km.values, pos, pos));
  }
  Eigen::VectorXd y(static_cast<Eigen::Index>(prob.labels.size()));
  for (std::size_t i = 0; i < prob.labels.size(); ++i) {
    y(static_cast<Eigen::Index>(i)) = prob.labels[i] == 0 ? 1.0 : -1.0;
  }

  // Exhaustive retraining over the weight grid gives the reference optima.
  double best_j = std::numeric_limits<double>::infinity();
  double best_j_d1 = 0.0;
  double best_g = std::numeric_limits<double>::infinity();
  double best_g_d1 = 0.0;
  for (int i = 0; i <= 100; ++i) {
    Eigen::VectorXd d(2);
    d << 1.0 - i / 100.0, i / 100.0;
    const Eigen::MatrixXd K = combined_block(d, blocks);
    const DualSolution sol = solve_svm_dual(K, y, C, 1e-5);
    const double q = ctx.k.dot(d);
    const double j = 0.5 * q * q + lambda * sol.objective;
    if (j < best_j) {
      best_j = j;
      best_j_d1 = d(1);
    }
    if (sol.objective < best_g) {
      best_g = sol.objective;
      best_g_d1 = d(1);
    }
  }

  // The margin-only reference prefers the strong shifted feature...
  REQUIRE(best_g_d1 < 0.5);
  // ...while the adapted weights move strictly toward the stable one and
  // land close to the exhaustive optimum.
  const double learned_d1 = model.per_class[0].weights(1);
  REQUIRE(learned_d1 > best_g_d1 + 0.05);
  REQUIRE(learned_d1 == Catch::Approx(best_j_d1).margin(0.1));

  // And the alternating scheme lands near the exhaustive optimum.
  const Eigen::MatrixXd K_learned =
      combined_block(model.per_class[0].weights, blocks);
  const DualSolution at_learned = solve_svm_dual(K_learned, y, C, 1e-5);
  const double q_learned = ctx.k.dot(model.per_class[0].weights);
  const double j_learned = 0.5 * q_learned * q_learned + lambda * at_learned.objective;
  REQUIRE(j_learned <= best_j + 1e-3 * (1.0 + std::abs(best_j)));
}

TEST_CASE("training history never increases") {
  for (std::uint64_t seed : {1ull, 2ull, 3ull, 4ull, 5ull, 6ull}) {
    SynthConfig cfg;
    cfg.num_classes = 3;
    cfg.dimension = 3;
    cfg.per_class_per_domain = 12;
    cfg.separation = 3.0;
    cfg.shift_magnitude = 4.0;
    cfg.seed = seed;
    const Dataset ds = synth_shifted(cfg);
    const auto kernels =
        compute_base_kernels(ds.features, rational_bank(gamma_heuristic(ds.features)));
    const DomainSplit split{ds.source_indices(), ds.target_indices()};
    const MmdContext ctx = context_for(kernels, split);
    std::vector<int> ids = split.source;
    std::vector<int> labels;
    for (int id : ids) labels.push_back(ds.labels(id));

    TrainOptions opts;
    opts.max_outer = 8;
    const MklModel model =
        train_mkl_da(kernels, ids, labels, ctx, 1.0, 0.25, opts);
    REQUIRE(model.history.size() >= 1);
    for (std::size_t t = 1; t < model.history.size(); ++t) {
      INFO("seed " << seed << " step " << t);
      REQUIRE(model.history[t] <= model.history[t - 1] +
                                      1e-8 * (1.0 + std::abs(model.history[t - 1])));
    }
    REQUIRE(model.d.sum() == Catch::Approx(1.0).margin(1e-9));
    REQUIRE(model.d.minCoeff() >= -1e-12);
    for (const BinaryModel& bm : model.per_class) {
      REQUIRE(bm.weights.sum() == Catch::Approx(1.0).margin(1e-9));
      REQUIRE(bm.weights.minCoeff() >= -1e-12);
    }
  }
}

TEST_CASE("shared weights stay identical across classes") {
  SynthConfig cfg;
  cfg.num_classes = 3;
  cfg.dimension = 3;
  cfg.per_class_per_domain = 10;
  cfg.shift_magnitude = 5.0;
  cfg.seed = 11;
  const Dataset ds = synth_shifted(cfg);
  const auto kernels =
      compute_base_kernels(ds.features, rational_bank(gamma_heuristic(ds.features)));
  const DomainSplit split{ds.source_indices(), ds.target_indices()};
  std::vector<int> ids = split.source;
  std::vector<int> labels;
  for (int id : ids) labels.push_back(ds.labels(id));

  TrainOptions opts;
  opts.shared_d = true;
  const MklModel model = train_mkl_da(kernels, ids, labels,
                                      context_for(kernels, split), 1.0, 0.25, opts);
  for (const BinaryModel& bm : model.per_class) {
    REQUIRE(bm.weights == model.d);
  }
  for (std::size_t t = 1; t < model.history.size(); ++t) {
    REQUIRE(model.history[t] <= model.history[t - 1] +
                                    1e-8 * (1.0 + std::abs(model.history[t - 1])));
  }
}

TEST_CASE("zero lambda drives the weights to the smallest discrepancy") {
  const ShiftProblem prob = make_shift_problem();
  std::vector<KernelMatrix> bank = per_feature_bank(prob.X, 0.5);
  const MmdContext ctx = context_for(bank, prob.split);
  REQUIRE(ctx.k(0) > ctx.k(1));

  const MklModel model =
      train_mkl_da(bank, prob.labeled_ids, prob.labels, ctx, 1.0, 0.0);
  // With no classifier term the objective is the squared discrepancy alone,
  // minimized at the vertex of the calmer kernel.
  for (const BinaryModel& bm : model.per_class) {
    REQUIRE(bm.weights(1) >= 0.99);
  }
}

TEST_CASE("disabled weight optimization keeps the uniform combination") {
  const ShiftProblem prob = make_shift_problem();
  std::vector<KernelMatrix> bank = per_feature_bank(prob.X, 0.5);
  TrainOptions opts;
  opts.optimize_d = false;
  const MklModel model = train_mkl_da(bank, prob.labeled_ids, prob.labels,
                                      context_for(bank, prob.split), 1.0, 0.5, opts);
  REQUIRE(model.history.size() == 1);
  for (const BinaryModel& bm : model.per_class) {
    REQUIRE(bm.weights(0) == 0.5);
    REQUIRE(bm.weights(1) == 0.5);
  }
}

TEST_CASE("training is deterministic") {
  const ShiftProblem prob = make_shift_problem();
  std::vector<KernelMatrix> bank = per_feature_bank(prob.X, 0.5);
  const MmdContext ctx = context_for(bank, prob.split);
  const MklModel a = train_mkl_da(bank, prob.labeled_ids, prob.labels, ctx, 1.0, 0.5);
  const MklModel b = train_mkl_da(bank, prob.labeled_ids, prob.labels, ctx, 1.0, 0.5);
  REQUIRE(a.d == b.d);
  REQUIRE(a.history == b.history);
  for (std::size_t c = 0; c < a.per_class.size(); ++c) {
    REQUIRE(a.per_class[c].dual.alpha == b.per_class[c].dual.alpha);
    REQUIRE(a.per_class[c].dual.b == b.per_class[c].dual.b);
    REQUIRE(a.per_class[c].weights == b.per_class[c].weights);
  }
}

TEST_CASE("training input checks") {
  const ShiftProblem prob = make_shift_problem();
  std::vector<KernelMatrix> bank = per_feature_bank(prob.X, 0.5);
  const MmdContext ctx = context_for(bank, prob.split);

  std::vector<int> one_class_labels(prob.labeled_ids.size(), 0);
  REQUIRE_THROWS_AS(train_mkl_da(bank, prob.labeled_ids, one_class_labels, ctx,
                                 1.0, 0.5),
                    DegenerateClassError);
  REQUIRE_THROWS_AS(train_mkl_da(bank, {}, {}, ctx, 1.0, 0.5),
                    InvalidArgumentError);
  REQUIRE_THROWS_AS(train_mkl_da(bank, prob.labeled_ids, {0, 1}, ctx, 1.0, 0.5),
                    DimensionError);
  REQUIRE_THROWS_AS(train_mkl_da(bank, prob.labeled_ids, prob.labels, ctx, 0.0,
                                 0.5),
                    InvalidArgumentError);
  REQUIRE_THROWS_AS(train_mkl_da(bank, prob.labeled_ids, prob.labels, ctx, 1.0,
                                 -0.1),
                    InvalidArgumentError);
  MmdContext wrong;
  wrong.k = Eigen::VectorXd::Zero(3);
  REQUIRE_THROWS_AS(train_mkl_da(bank, prob.labeled_ids, prob.labels, wrong,
                                 1.0, 0.5),
                    DimensionError);
}
