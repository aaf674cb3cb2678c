//
// Copyright 2026 The heatchain Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#ifndef HEATCHAIN_TOOLS_CLI_HPP_
#define HEATCHAIN_TOOLS_CLI_HPP_

#include <ostream>
#include <string>
#include <vector>

namespace heatchain::cli {

// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitVerificationFailed = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitRuntime = 3;

// Name of the environment variable holding the default output directory.
inline constexpr const char* kOutEnv = "HEATCHAIN_OUT";
inline constexpr const char* kManifestName = "manifest.cfg";

std::vector<std::string> SubcommandNames();

// args excludes the program name.
int RunCli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace heatchain::cli

#endif  // HEATCHAIN_TOOLS_CLI_HPP_
