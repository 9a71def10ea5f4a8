// Copyright 2026 The cohdet Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <filesystem>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

#include "cohdet/trainer.hpp"

namespace cohdet {

class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::size_t line, const std::string& message)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + message : message),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Flat `key = value` text. Blank lines and `#` comments are ignored; keys not
/// listed in the config reference are rejected, as are duplicates. Missing keys
/// keep their defaults. The result is validated.
TrainConfig parse_config(std::istream& in);
TrainConfig load_config(const std::filesystem::path& path);

/// Writes every key, in the canonical order.
void write_config(std::ostream& out, const TrainConfig& config);

}  // namespace cohdet
