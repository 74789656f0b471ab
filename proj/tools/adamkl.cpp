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

#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "adamkl/adamkl.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw adamkl::ConfigError("config", "cannot open '" + path.string() + "'");
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t comma = text.find(',', pos);
    if (comma == std::string::npos) comma = text.size();
    const std::string token = text.substr(pos, comma - pos);
    if (!token.empty()) {
      std::uint64_t v = 0;
      auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
      if (ec != std::errc() || ptr != token.data() + token.size()) {
        throw adamkl::ConfigError("--seed-override",
                                  "invalid seed '" + token + "'");
      }
      seeds.push_back(v);
    }
    if (comma == text.size()) break;
    pos = comma + 1;
  }
  if (seeds.empty()) {
    throw adamkl::ConfigError("--seed-override", "no seeds given");
  }
  return seeds;
}

// Flag beats config beats environment beats the working directory.
std::filesystem::path resolve_output_dir(const std::string& flag_value,
                                         const std::string& config_value) {
  if (!flag_value.empty()) return flag_value;
  if (!config_value.empty()) return config_value;
  if (const char* env = std::getenv("ADAMKL_OUTPUT_DIR"); env != nullptr && *env != '\0') {
    return env;
  }
  return ".";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"adamkl: active multi-kernel domain adaptation for classification"};
  app.require_subcommand(1);

  std::string config_path;
  std::string seed_override;
  std::string output_flag;
  int jobs = 1;

  CLI::App* run_cmd = app.add_subcommand("run", "run an experiment from a config file");
  run_cmd->add_option("config", config_path, "config file")->required();
  run_cmd->add_option("--seed-override", seed_override,
                      "comma-separated seed list replacing the configured seeds");
  run_cmd->add_option("--jobs", jobs, "number of parallel seed jobs")
      ->check(CLI::PositiveNumber);
  run_cmd->add_option("--output", output_flag, "output directory");

  CLI::App* synth_cmd =
      app.add_subcommand("synth", "generate the configured synthetic dataset");
  synth_cmd->add_option("config", config_path, "config file")->required();
  synth_cmd->add_option("--output", output_flag, "output directory");

  CLI::App* validate_cmd =
      app.add_subcommand("validate", "validate a config file and echo it");
  validate_cmd->add_option("config", config_path, "config file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    const adamkl::ExperimentConfig parsed =
        adamkl::validate_config(read_text_file(config_path));

    if (validate_cmd->parsed()) {
      std::cout << adamkl::echo_config(parsed);
      return kExitOk;
    }

    if (synth_cmd->parsed()) {
      if (!parsed.use_synth) {
        throw adamkl::ConfigError("synth", "config has no synth.* stanza");
      }
      const std::filesystem::path out_dir =
          resolve_output_dir(output_flag, parsed.output_dir);
      try {
        std::filesystem::create_directories(out_dir);
        const std::filesystem::path path = out_dir / "synthetic.adamkl";
        adamkl::save_dataset(adamkl::synth_shifted(parsed.synth), path);
        std::cout << path.string() << "\n";
      } catch (const adamkl::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
      }
      return kExitOk;
    }

    adamkl::ExperimentConfig cfg = parsed;
    if (!seed_override.empty()) cfg.seeds = parse_seed_list(seed_override);
    const std::filesystem::path out_dir =
        resolve_output_dir(output_flag, cfg.output_dir);
    cfg.output_dir = out_dir.string();
    try {
      adamkl::run_experiment(cfg, out_dir, jobs, &std::cout);
    } catch (const std::exception& e) {
      // config.echo is flushed before the runs start; whatever completed
      // stays on disk.
      std::cerr << "error: " << e.what() << "\n";
      return kExitRuntime;
    }
    for (const char* name : {"config.echo", "curve.csv", "summary.csv"}) {
      std::cout << "wrote " << (out_dir / name).string() << "\n";
    }
    return kExitOk;
  } catch (const adamkl::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const adamkl::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}
