// Copyright 2026 The nspiggy Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef NSPIGGY_CLI_HPP
#define NSPIGGY_CLI_HPP

#include <map>
#include <string>
#include <vector>

namespace nspiggy {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumerical = 3;

/// Parses `key = value` lines; `#` starts a comment. Throws Error(Io) on an
/// unreadable file and Error(InvalidArgument) on a malformed line.
std::map<std::string, std::string> read_config_file(const std::string& path);

/// Entry point of the command-line tool; returns the process exit code.
int run_cli(const std::vector<std::string>& args);

}  // namespace nspiggy

#endif  // NSPIGGY_CLI_HPP
