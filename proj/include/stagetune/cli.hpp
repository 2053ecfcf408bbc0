/*
 Copyright 2026 The stagetune Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/

#pragma once

#include <filesystem>
#include <iosfwd>

#include "stagetune/control.hpp"

namespace stagetune {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitRuntime = 3;

/// Reads a gain file with one "name value" pair per line ("yaw.kp 1.5").
/// Blank lines and '#' comments are ignored; all 18 names must appear once.
/// Throws ConfigError as "file:line: message".
ParamVector read_params_file(const std::filesystem::path& path);

/// Entry point behind the stagetune executable. Returns the process exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace stagetune
