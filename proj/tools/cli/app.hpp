/* Copyright 2026 The camrefine Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef CAMREFINE_TOOLS_CLI_APP_HPP_
#define CAMREFINE_TOOLS_CLI_APP_HPP_

#include <ostream>
#include <string>
#include <vector>

#include "run_config.hpp"

namespace camrefine::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitHardError = 1;
inline constexpr int kExitPartialFailure = 2;

// Parses `args` (without the program name) and runs one subcommand.
int Run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Subcommands on an already merged config. Hard errors are thrown as
// camrefine::Error; per-entry failures land in <out>/failures.json and turn
// the exit status into kExitPartialFailure.
int CmdCam(const RunConfig& config, std::ostream& out);
int CmdInfer(const RunConfig& config, std::ostream& out);
int CmdEval(const RunConfig& config, std::ostream& out);
int CmdPseudo(const RunConfig& config, std::ostream& out);
int CmdLossCheck(const RunConfig& config, std::ostream& out);
int CmdOverlay(const RunConfig& config, std::ostream& out);

}  // namespace camrefine::cli

#endif  // CAMREFINE_TOOLS_CLI_APP_HPP_
