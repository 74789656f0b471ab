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

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "adamkl/data.hpp"
#include "adamkl/errors.hpp"
#include "adamkl/kernels.hpp"

namespace adamkl {

enum class Method {
  rs,                        // single-kernel SVM, random sampling
  ms,                        // single-kernel SVM, margin sampling
  mkl_rs,                    // adapted multi-kernel, random sampling
  mkl_ms,                    // adapted multi-kernel, margin sampling
  svm,                       // single-kernel SVM on the full source, no loop
  skv_like_single_kernel_da, // the adaptation trainer with a one-kernel bank
  mkl_da_no_al,              // adapted multi-kernel on the full source, no loop
};

enum class GammaFrom { initial_labeled, all_source };
enum class OracleKind { ground_truth, interactive };

// Bank entry as configured; gamma = 0 inherits the per-run width.
struct KernelConfig {
  KernelKind kind = KernelKind::gaussian;
  FormVariant variant = FormVariant::rational;
  double gamma = 0.0;
};

struct ExperimentConfig {
  Method method = Method::mkl_ms;
  std::string dataset_path;  // empty when a synthetic dataset is configured
  bool use_synth = false;
  SynthConfig synth{};
  int q = 20;
  int budget = 15;
  int per_class_initial = 20;
  std::vector<double> c_grid{0.5, 1.0, 2.0, 4.0};
  std::vector<double> lambda_grid{0.0625, 0.125, 0.25, 0.5};
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  std::vector<KernelConfig> kernel_bank;  // resolved to the 4-kernel default
  std::string output_dir;
  bool standardize = true;
  bool shared_d = false;
  bool eval_on_full_target = false;
  double gamma_override = 0.0;  // 0 = use the heuristic
  GammaFrom gamma_from = GammaFrom::initial_labeled;
  double d_tol = 1e-4;
  int max_outer = 10;
  double svm_tol = 1e-3;
  int cv_folds = 10;
  OracleKind oracle = OracleKind::ground_truth;
};

inline const char* method_name(Method m) {
  switch (m) {
    case Method::rs: return "rs";
    case Method::ms: return "ms";
    case Method::mkl_rs: return "mkl-rs";
    case Method::mkl_ms: return "mkl-ms";
    case Method::svm: return "svm";
    case Method::skv_like_single_kernel_da: return "skv-like-single-kernel-da";
    case Method::mkl_da_no_al: return "mkl-da-no-al";
  }
  return "unknown";
}

inline bool is_active_method(Method m) {
  return m == Method::rs || m == Method::ms || m == Method::mkl_rs ||
         m == Method::mkl_ms;
}

inline bool method_uses_bank(Method m) {
  return m == Method::mkl_rs || m == Method::mkl_ms || m == Method::mkl_da_no_al;
}

inline bool method_uses_lambda(Method m) { return method_uses_bank(m); }

namespace detail {

inline std::string_view trim(std::string_view s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_tokens(std::string_view s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    std::size_t start = i;
    while (i < s.size() && s[i] != ' ' && s[i] != '\t') ++i;
    if (i > start) out.emplace_back(s.substr(start, i - start));
  }
  return out;
}

inline double config_double(const std::string& key, std::string_view value) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw ConfigError(key, "expected a number, got '" + std::string(value) + "'");
  }
  return v;
}

inline long long config_int(const std::string& key, std::string_view value) {
  long long v = 0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw ConfigError(key, "expected an integer, got '" + std::string(value) + "'");
  }
  return v;
}

inline std::uint64_t config_u64(const std::string& key, std::string_view value) {
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw ConfigError(key, "expected an unsigned integer, got '" +
                               std::string(value) + "'");
  }
  return v;
}

inline bool config_bool(const std::string& key, std::string_view value) {
  if (value == "true") return true;
  if (value == "false") return false;
  throw ConfigError(key, "expected true or false, got '" + std::string(value) + "'");
}

inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline KernelConfig parse_kernel_line(std::string_view value) {
  const std::vector<std::string> tokens = split_tokens(value);
  if (tokens.empty()) throw ConfigError("kernel", "missing kernel kind");
  KernelConfig kc;
  if (tokens[0] == "gaussian") kc.kind = KernelKind::gaussian;
  else if (tokens[0] == "laplacian") kc.kind = KernelKind::laplacian;
  else if (tokens[0] == "inverse_square_distance") kc.kind = KernelKind::inverse_square_distance;
  else if (tokens[0] == "inverse_distance") kc.kind = KernelKind::inverse_distance;
  else throw ConfigError("kernel", "unknown kernel kind '" + tokens[0] + "'");
  for (std::size_t i = 1; i < tokens.size(); ++i) {
    const std::string& token = tokens[i];
    if (token == "rational") kc.variant = FormVariant::rational;
    else if (token == "as_printed") kc.variant = FormVariant::as_printed;
    else if (token.rfind("gamma=", 0) == 0) {
      kc.gamma = config_double("kernel", std::string_view(token).substr(6));
      if (!(kc.gamma > 0.0)) throw ConfigError("kernel", "gamma must be positive");
    } else {
      throw ConfigError("kernel", "unknown kernel option '" + token + "'");
    }
  }
  return kc;
}

}  // namespace detail

inline std::vector<KernelConfig> default_kernel_bank() {
  return {
      {KernelKind::gaussian, FormVariant::rational, 0.0},
      {KernelKind::laplacian, FormVariant::rational, 0.0},
      {KernelKind::inverse_square_distance, FormVariant::rational, 0.0},
      {KernelKind::inverse_distance, FormVariant::rational, 0.0},
  };
}

// Parses and validates the flat key = value configuration text.  '#' starts
// a comment, the kernel key may repeat to build the bank, every other key
// appears at most once.  All errors name the offending key.
inline ExperimentConfig validate_config(std::string_view text) {
  ExperimentConfig cfg;
  std::set<std::string> seen;
  bool seeds_given = false;

  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    const std::size_t hash = line.find('#');
    if (hash != std::string_view::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (!line.empty()) {
      const std::size_t eq = line.find('=');
      if (eq == std::string_view::npos) {
        throw ConfigError(std::string(line), "expected 'key = value'");
      }
      const std::string key{detail::trim(line.substr(0, eq))};
      const std::string_view value = detail::trim(line.substr(eq + 1));
      if (key.empty()) throw ConfigError("", "missing key before '='");
      if (key != "kernel" && !seen.insert(key).second) {
        throw ConfigError(key, "duplicate key");
      }
      if (value.empty() && key != "output") {
        throw ConfigError(key, "missing value");
      }

      if (key == "method") {
        bool found = false;
        for (Method m : {Method::rs, Method::ms, Method::mkl_rs, Method::mkl_ms,
                         Method::svm, Method::skv_like_single_kernel_da,
                         Method::mkl_da_no_al}) {
          if (value == method_name(m)) {
            cfg.method = m;
            found = true;
            break;
          }
        }
        if (!found) throw ConfigError(key, "unknown method '" + std::string(value) + "'");
      } else if (key == "dataset") {
        cfg.dataset_path = std::string(value);
      } else if (key == "q") {
        cfg.q = static_cast<int>(detail::config_int(key, value));
      } else if (key == "budget") {
        cfg.budget = static_cast<int>(detail::config_int(key, value));
      } else if (key == "per_class_initial") {
        cfg.per_class_initial = static_cast<int>(detail::config_int(key, value));
      } else if (key == "c_grid") {
        cfg.c_grid.clear();
        for (const std::string& token : detail::split_tokens(value)) {
          cfg.c_grid.push_back(detail::config_double(key, token));
        }
      } else if (key == "lambda_grid") {
        cfg.lambda_grid.clear();
        for (const std::string& token : detail::split_tokens(value)) {
          cfg.lambda_grid.push_back(detail::config_double(key, token));
        }
      } else if (key == "seeds") {
        cfg.seeds.clear();
        for (const std::string& token : detail::split_tokens(value)) {
          cfg.seeds.push_back(detail::config_u64(key, token));
        }
        seeds_given = true;
      } else if (key == "kernel") {
        cfg.kernel_bank.push_back(detail::parse_kernel_line(value));
      } else if (key == "output") {
        cfg.output_dir = std::string(value);
      } else if (key == "standardize") {
        cfg.standardize = detail::config_bool(key, value);
      } else if (key == "shared_d") {
        cfg.shared_d = detail::config_bool(key, value);
      } else if (key == "eval_on_full_target") {
        cfg.eval_on_full_target = detail::config_bool(key, value);
      } else if (key == "gamma") {
        cfg.gamma_override = detail::config_double(key, value);
      } else if (key == "gamma_from") {
        if (value == "initial_labeled") cfg.gamma_from = GammaFrom::initial_labeled;
        else if (value == "all_source") cfg.gamma_from = GammaFrom::all_source;
        else throw ConfigError(key, "expected initial_labeled or all_source");
      } else if (key == "d_tol") {
        cfg.d_tol = detail::config_double(key, value);
      } else if (key == "max_outer") {
        cfg.max_outer = static_cast<int>(detail::config_int(key, value));
      } else if (key == "svm_tol") {
        cfg.svm_tol = detail::config_double(key, value);
      } else if (key == "cv_folds") {
        cfg.cv_folds = static_cast<int>(detail::config_int(key, value));
      } else if (key == "oracle") {
        if (value == "ground_truth") cfg.oracle = OracleKind::ground_truth;
        else if (value == "interactive") cfg.oracle = OracleKind::interactive;
        else throw ConfigError(key, "expected ground_truth or interactive");
      } else if (key == "synth.num_classes") {
        cfg.synth.num_classes = static_cast<int>(detail::config_int(key, value));
        cfg.use_synth = true;
      } else if (key == "synth.dimension") {
        cfg.synth.dimension = static_cast<int>(detail::config_int(key, value));
        cfg.use_synth = true;
      } else if (key == "synth.per_class_per_domain") {
        cfg.synth.per_class_per_domain = static_cast<int>(detail::config_int(key, value));
        cfg.use_synth = true;
      } else if (key == "synth.separation") {
        cfg.synth.separation = detail::config_double(key, value);
        cfg.use_synth = true;
      } else if (key == "synth.covariance_scale") {
        cfg.synth.covariance_scale = detail::config_double(key, value);
        cfg.use_synth = true;
      } else if (key == "synth.shift_magnitude") {
        cfg.synth.shift_magnitude = detail::config_double(key, value);
        cfg.use_synth = true;
      } else if (key == "synth.rotation_angle") {
        cfg.synth.rotation_angle = detail::config_double(key, value);
        cfg.use_synth = true;
      } else if (key == "synth.seed") {
        cfg.synth.seed = detail::config_u64(key, value);
        cfg.use_synth = true;
      } else {
        throw ConfigError(key, "unknown key");
      }
    }
    if (eol == text.size()) break;
    pos = eol + 1;
  }

  if (cfg.kernel_bank.empty()) cfg.kernel_bank = default_kernel_bank();

  // Cross-field validation, each failure pinned to a key.
  if (cfg.dataset_path.empty() && !cfg.use_synth) {
    throw ConfigError("dataset", "either dataset or a synth.* stanza is required");
  }
  if (!cfg.dataset_path.empty() && cfg.use_synth) {
    throw ConfigError("dataset", "dataset and synth.* are mutually exclusive");
  }
  if (cfg.q < 1) throw ConfigError("q", "must be >= 1");
  if (cfg.budget < 0) throw ConfigError("budget", "must be >= 0");
  if (cfg.per_class_initial < 1) throw ConfigError("per_class_initial", "must be >= 1");
  if (cfg.c_grid.empty()) throw ConfigError("c_grid", "must not be empty");
  for (double c : cfg.c_grid) {
    if (!(c > 0.0) || !std::isfinite(c)) throw ConfigError("c_grid", "entries must be positive");
  }
  if (cfg.lambda_grid.empty()) throw ConfigError("lambda_grid", "must not be empty");
  for (double l : cfg.lambda_grid) {
    if (!(l >= 0.0) || !std::isfinite(l)) {
      throw ConfigError("lambda_grid", "entries must be >= 0");
    }
  }
  if (cfg.seeds.empty()) {
    throw ConfigError("seeds", seeds_given ? "must not be empty" : "internal");
  }
  {
    std::set<std::uint64_t> unique_seeds(cfg.seeds.begin(), cfg.seeds.end());
    if (unique_seeds.size() != cfg.seeds.size()) {
      throw ConfigError("seeds", "duplicate seed");
    }
  }
  if (!(cfg.gamma_override >= 0.0) || !std::isfinite(cfg.gamma_override)) {
    throw ConfigError("gamma", "must be positive (or omitted)");
  }
  if (!(cfg.d_tol > 0.0)) throw ConfigError("d_tol", "must be positive");
  if (cfg.max_outer < 0) throw ConfigError("max_outer", "must be >= 0");
  if (!(cfg.svm_tol > 0.0)) throw ConfigError("svm_tol", "must be positive");
  if (cfg.cv_folds < 2) throw ConfigError("cv_folds", "must be >= 2");
  if (cfg.use_synth) {
    try {
      validate(cfg.synth);
    } catch (const Error& e) {
      throw ConfigError("synth", e.what());
    }
  }
  return cfg;
}

// Canonical text form; feeding it back through validate_config reproduces
// the same configuration.
inline std::string echo_config(const ExperimentConfig& cfg) {
  std::string out;
  auto line = [&out](const std::string& key, const std::string& value) {
    out += key;
    out += " = ";
    out += value;
    out += '\n';
  };
  line("method", method_name(cfg.method));
  if (cfg.use_synth) {
    line("synth.num_classes", std::to_string(cfg.synth.num_classes));
    line("synth.dimension", std::to_string(cfg.synth.dimension));
    line("synth.per_class_per_domain", std::to_string(cfg.synth.per_class_per_domain));
    line("synth.separation", detail::format_double(cfg.synth.separation));
    line("synth.covariance_scale", detail::format_double(cfg.synth.covariance_scale));
    line("synth.shift_magnitude", detail::format_double(cfg.synth.shift_magnitude));
    line("synth.rotation_angle", detail::format_double(cfg.synth.rotation_angle));
    line("synth.seed", std::to_string(cfg.synth.seed));
  } else {
    line("dataset", cfg.dataset_path);
  }
  line("q", std::to_string(cfg.q));
  line("budget", std::to_string(cfg.budget));
  line("per_class_initial", std::to_string(cfg.per_class_initial));
  {
    std::string value;
    for (std::size_t i = 0; i < cfg.c_grid.size(); ++i) {
      if (i > 0) value += ' ';
      value += detail::format_double(cfg.c_grid[i]);
    }
    line("c_grid", value);
  }
  {
    std::string value;
    for (std::size_t i = 0; i < cfg.lambda_grid.size(); ++i) {
      if (i > 0) value += ' ';
      value += detail::format_double(cfg.lambda_grid[i]);
    }
    line("lambda_grid", value);
  }
  {
    std::string value;
    for (std::size_t i = 0; i < cfg.seeds.size(); ++i) {
      if (i > 0) value += ' ';
      value += std::to_string(cfg.seeds[i]);
    }
    line("seeds", value);
  }
  for (const KernelConfig& kc : cfg.kernel_bank) {
    std::string value = kernel_kind_name(kc.kind);
    if (kc.kind == KernelKind::inverse_square_distance ||
        kc.kind == KernelKind::inverse_distance) {
      value += kc.variant == FormVariant::as_printed ? " as_printed" : " rational";
    }
    if (kc.gamma > 0.0) value += " gamma=" + detail::format_double(kc.gamma);
    line("kernel", value);
  }
  line("standardize", cfg.standardize ? "true" : "false");
  line("shared_d", cfg.shared_d ? "true" : "false");
  line("eval_on_full_target", cfg.eval_on_full_target ? "true" : "false");
  if (cfg.gamma_override > 0.0) {
    line("gamma", detail::format_double(cfg.gamma_override));
  }
  line("gamma_from", cfg.gamma_from == GammaFrom::all_source ? "all_source"
                                                             : "initial_labeled");
  line("d_tol", detail::format_double(cfg.d_tol));
  line("max_outer", std::to_string(cfg.max_outer));
  line("svm_tol", detail::format_double(cfg.svm_tol));
  line("cv_folds", std::to_string(cfg.cv_folds));
  line("oracle", cfg.oracle == OracleKind::interactive ? "interactive"
                                                       : "ground_truth");
  if (!cfg.output_dir.empty()) line("output", cfg.output_dir);
  return out;
}

}  // namespace adamkl
