/*
 * Copyright 2026 The attrcam Authors
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

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "attrcam/config.hpp"

namespace attrcam {

/// Subcommands of the `attrcam` tool. Each writes into `out_dir` and leaves
/// a `config.resolved.json` there.
void cmd_generate(const ExperimentConfig& config, const std::filesystem::path& out_dir, std::ostream& log);
void cmd_train(const ExperimentConfig& config, const std::filesystem::path& out_dir, std::ostream& log);
void cmd_cam(const ExperimentConfig& config, const std::filesystem::path& checkpoint,
             const std::filesystem::path& out_dir, std::ostream& log);
void cmd_report(const ExperimentConfig& config, const std::filesystem::path& checkpoint,
                const std::optional<std::filesystem::path>& compare, const std::filesystem::path& out_dir,
                std::ostream& log);
void cmd_compare_targets(const ExperimentConfig& config, const std::filesystem::path& checkpoint,
                         const std::filesystem::path& out_dir, std::ostream& log);

/// Exit code for an exception: 2 configuration/usage, 3 data/IO,
/// 4 numeric, 1 anything else.
int exit_code_for(const std::exception& e);

/// Parses `args` (without the program name) and runs one subcommand.
/// Errors are reported on `err` as a single `attrcam: error kind=... ` line.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace attrcam
