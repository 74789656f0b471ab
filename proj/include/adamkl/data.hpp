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
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "adamkl/errors.hpp"
#include "adamkl/rng.hpp"

namespace adamkl {

enum class Domain : char { source = 'S', target = 'T' };

// Sentinel for samples without a ground-truth label.  Only target samples
// may carry it; source samples are always labeled.
constexpr int kUnlabeledSentinel = -1;

struct Dataset {
  Eigen::MatrixXd features;     // one sample per row
  Eigen::VectorXi labels;       // class in [0, num_classes) or the sentinel
  std::vector<Domain> domains;  // per sample
  int num_classes = 0;

  Eigen::Index size() const { return features.rows(); }
  Eigen::Index dimension() const { return features.cols(); }

  std::vector<int> source_indices() const {
    std::vector<int> out;
    for (Eigen::Index i = 0; i < size(); ++i) {
      if (domains[static_cast<std::size_t>(i)] == Domain::source) {
        out.push_back(static_cast<int>(i));
      }
    }
    return out;
  }

  std::vector<int> target_indices() const {
    std::vector<int> out;
    for (Eigen::Index i = 0; i < size(); ++i) {
      if (domains[static_cast<std::size_t>(i)] == Domain::target) {
        out.push_back(static_cast<int>(i));
      }
    }
    return out;
  }
};

inline void validate(const Dataset& ds) {
  const Eigen::Index n = ds.size();
  if (n == 0) throw InvalidArgumentError("dataset: no samples");
  if (ds.num_classes < 1) throw InvalidArgumentError("dataset: num_classes must be >= 1");
  if (ds.labels.size() != n || static_cast<Eigen::Index>(ds.domains.size()) != n) {
    throw DimensionError("dataset: labels/domains do not match sample count");
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    const int label = ds.labels(i);
    if (label < kUnlabeledSentinel || label >= ds.num_classes) {
      throw InvalidArgumentError("dataset: label out of range at sample " +
                                 std::to_string(i));
    }
    if (label == kUnlabeledSentinel &&
        ds.domains[static_cast<std::size_t>(i)] == Domain::source) {
      throw InvalidArgumentError("dataset: unlabeled source sample " +
                                 std::to_string(i));
    }
  }
}

namespace detail {

// Whitespace-separated tokens of one line, with absolute byte offsets.
struct Token {
  std::string_view text;
  std::size_t offset;
};

inline std::vector<Token> tokenize_line(std::string_view line,
                                        std::size_t line_offset) {
  std::vector<Token> tokens;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    if (i >= line.size()) break;
    std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    tokens.push_back({line.substr(start, i - start), line_offset + start});
  }
  return tokens;
}

inline double parse_double_token(const Token& token, const char* what) {
  double value = 0.0;
  const char* first = token.text.data();
  const char* last = first + token.text.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) {
    throw ParseError(std::string("invalid ") + what + " '" +
                         std::string(token.text) + "'",
                     token.offset);
  }
  return value;
}

inline long parse_int_token(const Token& token, const char* what) {
  long value = 0;
  const char* first = token.text.data();
  const char* last = first + token.text.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) {
    throw ParseError(std::string("invalid ") + what + " '" +
                         std::string(token.text) + "'",
                     token.offset);
  }
  return value;
}

// Round-trippable float token, printf %.17g.
inline void append_double(std::string& out, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  out += buf;
}

}  // namespace detail

// Text format, one record per line:
//
//   ADAMKL v1 N=<samples> D=<bands> C=<classes>
//   <D floats>             (N feature lines)
//   <N labels>             (-1 marks an unlabeled sample)
//   <N domain tags>        (S or T)
//
// Parse failures report the byte offset of the offending token.
inline Dataset parse_dataset(std::string_view text) {
  struct Line {
    std::string_view body;
    std::size_t offset;
  };
  std::vector<Line> lines;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    lines.push_back({text.substr(pos, eol - pos), pos});
    if (eol == text.size()) break;
    pos = eol + 1;
  }
  std::size_t line_index = 0;
  auto next_line = [&]() -> Line {
    while (line_index < lines.size()) {
      Line line = lines[line_index++];
      if (!detail::tokenize_line(line.body, line.offset).empty()) return line;
    }
    throw ParseError("unexpected end of input", text.size());
  };

  const Line header = next_line();
  const auto head = detail::tokenize_line(header.body, header.offset);
  if (head.size() != 5 || head[0].text != "ADAMKL" || head[1].text != "v1") {
    throw ParseError("malformed header, expected 'ADAMKL v1 N=.. D=.. C=..'",
                     header.offset);
  }
  auto keyed_int = [&](const detail::Token& token, std::string_view key) -> long {
    if (token.text.size() < key.size() + 1 ||
        token.text.substr(0, key.size()) != key ||
        token.text[key.size()] != '=') {
      throw ParseError("malformed header field, expected " + std::string(key) +
                           "=<int>",
                       token.offset);
    }
    detail::Token value{token.text.substr(key.size() + 1),
                        token.offset + key.size() + 1};
    return detail::parse_int_token(value, "header count");
  };
  const long n = keyed_int(head[2], "N");
  const long d = keyed_int(head[3], "D");
  const long c = keyed_int(head[4], "C");
  if (n < 1) throw ParseError("header: N must be >= 1", head[2].offset);
  if (d < 1) throw ParseError("header: D must be >= 1", head[3].offset);
  if (c < 1) throw ParseError("header: C must be >= 1", head[4].offset);

  Dataset ds;
  ds.num_classes = static_cast<int>(c);
  ds.features.resize(n, d);
  ds.labels.resize(n);
  ds.domains.resize(static_cast<std::size_t>(n));

  for (long row = 0; row < n; ++row) {
    const Line line = next_line();
    const auto tokens = detail::tokenize_line(line.body, line.offset);
    if (tokens.size() != static_cast<std::size_t>(d)) {
      throw ParseError("feature row " + std::to_string(row) + " has " +
                           std::to_string(tokens.size()) + " values, expected " +
                           std::to_string(d),
                       line.offset);
    }
    for (long col = 0; col < d; ++col) {
      ds.features(row, col) = detail::parse_double_token(
          tokens[static_cast<std::size_t>(col)], "feature value");
    }
  }

  {
    const Line line = next_line();
    const auto tokens = detail::tokenize_line(line.body, line.offset);
    if (tokens.size() != static_cast<std::size_t>(n)) {
      throw ParseError("label line has " + std::to_string(tokens.size()) +
                           " entries, expected " + std::to_string(n),
                       line.offset);
    }
    for (long i = 0; i < n; ++i) {
      const auto& token = tokens[static_cast<std::size_t>(i)];
      const long label = detail::parse_int_token(token, "label");
      if (label < kUnlabeledSentinel || label >= c) {
        throw ParseError("label " + std::to_string(label) +
                             " out of range [-1, " + std::to_string(c) + ")",
                         token.offset);
      }
      ds.labels(i) = static_cast<int>(label);
    }
  }

  {
    const Line line = next_line();
    const auto tokens = detail::tokenize_line(line.body, line.offset);
    if (tokens.size() != static_cast<std::size_t>(n)) {
      throw ParseError("domain line has " + std::to_string(tokens.size()) +
                           " entries, expected " + std::to_string(n),
                       line.offset);
    }
    for (long i = 0; i < n; ++i) {
      const auto& token = tokens[static_cast<std::size_t>(i)];
      if (token.text == "S") {
        ds.domains[static_cast<std::size_t>(i)] = Domain::source;
      } else if (token.text == "T") {
        ds.domains[static_cast<std::size_t>(i)] = Domain::target;
      } else {
        throw ParseError("domain tag must be S or T, got '" +
                             std::string(token.text) + "'",
                         token.offset);
      }
      if (ds.domains[static_cast<std::size_t>(i)] == Domain::source &&
          ds.labels(i) == kUnlabeledSentinel) {
        throw ParseError("source sample " + std::to_string(i) + " is unlabeled",
                         token.offset);
      }
    }
  }

  while (line_index < lines.size()) {
    const Line line = lines[line_index++];
    const auto tokens = detail::tokenize_line(line.body, line.offset);
    if (!tokens.empty()) {
      throw ParseError("unexpected trailing content", tokens[0].offset);
    }
  }
  validate(ds);
  return ds;
}

inline std::string format_dataset(const Dataset& ds) {
  validate(ds);
  std::string out;
  out.reserve(static_cast<std::size_t>(ds.size() * (ds.dimension() + 2)) * 12);
  out += "ADAMKL v1 N=" + std::to_string(ds.size()) +
         " D=" + std::to_string(ds.dimension()) +
         " C=" + std::to_string(ds.num_classes) + "\n";
  for (Eigen::Index i = 0; i < ds.size(); ++i) {
    for (Eigen::Index j = 0; j < ds.dimension(); ++j) {
      if (j > 0) out += ' ';
      detail::append_double(out, ds.features(i, j));
    }
    out += '\n';
  }
  for (Eigen::Index i = 0; i < ds.size(); ++i) {
    if (i > 0) out += ' ';
    out += std::to_string(ds.labels(i));
  }
  out += '\n';
  for (Eigen::Index i = 0; i < ds.size(); ++i) {
    if (i > 0) out += ' ';
    out += ds.domains[static_cast<std::size_t>(i)] == Domain::source ? 'S' : 'T';
  }
  out += '\n';
  return out;
}

inline Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open dataset file '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_dataset(buffer.str());
}

inline void save_dataset(const Dataset& ds, const std::filesystem::path& path) {
  const std::string text = format_dataset(ds);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write dataset file '" + path.string() + "'");
  out << text;
  if (!out) throw Error("write failed for '" + path.string() + "'");
}

// Per-band mean and standard deviation over the source domain.
struct SourceStats {
  Eigen::VectorXd mean;
  Eigen::VectorXd stddev;
};

inline SourceStats source_statistics(const Dataset& ds) {
  const std::vector<int> src = ds.source_indices();
  if (src.empty()) throw InvalidArgumentError("source_statistics: no source samples");
  const Eigen::Index d = ds.dimension();
  SourceStats stats;
  stats.mean = Eigen::VectorXd::Zero(d);
  for (int id : src) stats.mean += ds.features.row(id).transpose();
  stats.mean /= static_cast<double>(src.size());
  stats.stddev = Eigen::VectorXd::Zero(d);
  for (int id : src) {
    const Eigen::VectorXd diff = ds.features.row(id).transpose() - stats.mean;
    stats.stddev += diff.cwiseProduct(diff);
  }
  stats.stddev = (stats.stddev / static_cast<double>(src.size())).cwiseSqrt();
  return stats;
}

// Z-scores every band using the source statistics; both domains are
// transformed with the same affine map.  Near-constant bands pass through
// unchanged (threshold relative to the band mean magnitude).
inline Dataset standardize(const Dataset& ds, const SourceStats& stats) {
  if (stats.mean.size() != ds.dimension() || stats.stddev.size() != ds.dimension()) {
    throw DimensionError("standardize: statistics do not match dimension");
  }
  Dataset out = ds;
  for (Eigen::Index j = 0; j < ds.dimension(); ++j) {
    const double sd = stats.stddev(j);
    if (sd <= 1e-12 * (1.0 + std::abs(stats.mean(j)))) continue;
    out.features.col(j) = (ds.features.col(j).array() - stats.mean(j)) / sd;
  }
  return out;
}

// per_class source samples from every class, seeded and reproducible.
// Returned identifiers are grouped by class, ascending within each class.
inline std::vector<int> stratified_initial_sample(const Dataset& ds,
                                                  int per_class,
                                                  std::uint64_t seed) {
  if (per_class < 1) {
    throw InvalidArgumentError("stratified_initial_sample: per_class must be >= 1");
  }
  std::vector<std::vector<int>> by_class(static_cast<std::size_t>(ds.num_classes));
  for (Eigen::Index i = 0; i < ds.size(); ++i) {
    if (ds.domains[static_cast<std::size_t>(i)] != Domain::source) continue;
    by_class[static_cast<std::size_t>(ds.labels(i))].push_back(static_cast<int>(i));
  }
  rng::Generator gen(seed);
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(per_class) * by_class.size());
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    if (by_class[c].size() < static_cast<std::size_t>(per_class)) {
      throw DegenerateInputError(
          "stratified_initial_sample: class " + std::to_string(c) + " has " +
          std::to_string(by_class[c].size()) + " source samples, need " +
          std::to_string(per_class));
    }
    std::vector<int> picked = gen.sample_without_replacement(
        by_class[c], static_cast<std::size_t>(per_class));
    std::sort(picked.begin(), picked.end());
    out.insert(out.end(), picked.begin(), picked.end());
  }
  return out;
}

// Synthetic two-domain classification problem.  Class means sit on a sphere
// of radius separation; the target domain is the source distribution moved
// by shift_magnitude along a random unit direction, with the sample noise
// rotated by rotation_angle inside a random 2-D plane.  Source samples come
// first, then target, both in class-major order, all labeled.
struct SynthConfig {
  int num_classes = 5;
  int dimension = 8;
  int per_class_per_domain = 100;
  double separation = 6.0;
  double covariance_scale = 1.0;
  double shift_magnitude = 30.0;
  double rotation_angle = 0.4;
  std::uint64_t seed = 7;
};

inline void validate(const SynthConfig& cfg) {
  if (cfg.num_classes < 1) throw InvalidArgumentError("synth: num_classes must be >= 1");
  if (cfg.dimension < 1) throw InvalidArgumentError("synth: dimension must be >= 1");
  if (cfg.per_class_per_domain < 1) {
    throw InvalidArgumentError("synth: per_class_per_domain must be >= 1");
  }
  if (!(cfg.separation >= 0.0) || !(cfg.covariance_scale >= 0.0) ||
      !(cfg.shift_magnitude >= 0.0) || !std::isfinite(cfg.rotation_angle)) {
    throw InvalidArgumentError("synth: scales must be finite and nonnegative");
  }
}

namespace detail {

inline Eigen::VectorXd random_unit_vector(rng::Generator& gen, Eigen::Index d) {
  Eigen::VectorXd v(d);
  double norm = 0.0;
  do {
    for (Eigen::Index i = 0; i < d; ++i) v(i) = gen.normal();
    norm = v.norm();
  } while (norm < 1e-12);
  return v / norm;
}

}  // namespace detail

inline Dataset synth_shifted(const SynthConfig& cfg) {
  validate(cfg);
  rng::Generator gen(cfg.seed);
  const Eigen::Index d = cfg.dimension;
  const int per = cfg.per_class_per_domain;
  const int classes = cfg.num_classes;
  const Eigen::Index half = static_cast<Eigen::Index>(per) * classes;

  std::vector<Eigen::VectorXd> means;
  means.reserve(static_cast<std::size_t>(classes));
  for (int c = 0; c < classes; ++c) {
    means.push_back(cfg.separation * detail::random_unit_vector(gen, d));
  }
  const Eigen::VectorXd shift_dir = detail::random_unit_vector(gen, d);

  // Orthonormal pair spanning the rotation plane; undefined in 1-D, where
  // the rotation degenerates to the identity.
  Eigen::VectorXd u = Eigen::VectorXd::Zero(d);
  Eigen::VectorXd v = Eigen::VectorXd::Zero(d);
  bool rotate = d >= 2 && cfg.rotation_angle != 0.0;
  if (d >= 2) {
    u = detail::random_unit_vector(gen, d);
    Eigen::VectorXd w = Eigen::VectorXd::Zero(d);
    double norm = 0.0;
    do {
      w = detail::random_unit_vector(gen, d);
      w -= w.dot(u) * u;
      norm = w.norm();
    } while (norm < 1e-8);
    v = w / norm;
  }
  const double cos_a = std::cos(cfg.rotation_angle);
  const double sin_a = std::sin(cfg.rotation_angle);
  auto rotated = [&](const Eigen::VectorXd& x) -> Eigen::VectorXd {
    if (!rotate) return x;
    const double cu = x.dot(u);
    const double cv = x.dot(v);
    return x + (cos_a - 1.0) * (cu * u + cv * v) + sin_a * (cu * v - cv * u);
  };

  Dataset ds;
  ds.num_classes = classes;
  ds.features.resize(2 * half, d);
  ds.labels.resize(2 * half);
  ds.domains.assign(static_cast<std::size_t>(2 * half), Domain::source);

  Eigen::Index row = 0;
  Eigen::VectorXd noise(d);
  for (int c = 0; c < classes; ++c) {
    for (int i = 0; i < per; ++i, ++row) {
      for (Eigen::Index j = 0; j < d; ++j) noise(j) = gen.normal();
      ds.features.row(row) = (means[static_cast<std::size_t>(c)] +
                              cfg.covariance_scale * noise).transpose();
      ds.labels(row) = c;
    }
  }
  for (int c = 0; c < classes; ++c) {
    for (int i = 0; i < per; ++i, ++row) {
      for (Eigen::Index j = 0; j < d; ++j) noise(j) = gen.normal();
      ds.features.row(row) = (means[static_cast<std::size_t>(c)] +
                              cfg.shift_magnitude * shift_dir +
                              cfg.covariance_scale * rotated(noise)).transpose();
      ds.labels(row) = c;
      ds.domains[static_cast<std::size_t>(row)] = Domain::target;
    }
  }
  return ds;
}

}  // namespace adamkl
