/* Copyright 2026 The mvsemi Authors

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

        https://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
        limitations under the License.
==============================================================================*/

#ifndef MVSEMI_CLI_COMMANDS_HPP_
#define MVSEMI_CLI_COMMANDS_HPP_

#include <iosfwd>
#include <string>
#include <vector>

namespace mvsemi::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitConfig = 2;

/// Parses arguments (argv[0] is the program name) and runs one command.
int run(const std::vector<std::string> &args, std::ostream &out, std::ostream &err);

} // namespace mvsemi::cli

#endif // MVSEMI_CLI_COMMANDS_HPP_
