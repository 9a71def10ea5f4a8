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

#include "cohdet/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <set>
#include <string_view>
#include <vector>

namespace cohdet {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double to_real(std::string_view key, std::string_view text, std::size_t line) {
  const std::string s(text);
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size() || !std::isfinite(v)) {
    throw ConfigError(line, std::string(key) + ": expected a real number, got '" + s + "'");
  }
  return v;
}

std::uint64_t to_count(std::string_view key, std::string_view text, std::size_t line) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) {
    throw ConfigError(line, std::string(key) + ": expected a non-negative integer, got '" +
                                std::string(text) + "'");
  }
  return v;
}

struct Field {
  std::string_view key;
  bool integral;
  std::function<void(TrainConfig&, double, std::uint64_t)> set;
  std::function<std::string(const TrainConfig&)> get;
};

std::string real_text(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      {"alpha", false, [](TrainConfig& c, double v, std::uint64_t) { c.alpha = v; },
       [](const TrainConfig& c) { return real_text(c.alpha); }},
      {"tau", false, [](TrainConfig& c, double v, std::uint64_t) { c.tau = v; },
       [](const TrainConfig& c) { return real_text(c.tau); }},
      {"momentum", false, [](TrainConfig& c, double v, std::uint64_t) { c.momentum = v; },
       [](const TrainConfig& c) { return real_text(c.momentum); }},
      {"reweight_beta", false, [](TrainConfig& c, double v, std::uint64_t) { c.reweight_beta = v; },
       [](const TrainConfig& c) { return real_text(c.reweight_beta); }},
      {"bank_size", true, [](TrainConfig& c, double, std::uint64_t n) { c.bank_size = n; },
       [](const TrainConfig& c) { return std::to_string(c.bank_size); }},
      {"batch_size", true, [](TrainConfig& c, double, std::uint64_t n) { c.batch_size = n; },
       [](const TrainConfig& c) { return std::to_string(c.batch_size); }},
      {"lr", false, [](TrainConfig& c, double v, std::uint64_t) { c.lr = v; },
       [](const TrainConfig& c) { return real_text(c.lr); }},
      {"weight_decay", false, [](TrainConfig& c, double v, std::uint64_t) { c.weight_decay = v; },
       [](const TrainConfig& c) { return real_text(c.weight_decay); }},
      {"max_epochs", true, [](TrainConfig& c, double, std::uint64_t n) { c.max_epochs = n; },
       [](const TrainConfig& c) { return std::to_string(c.max_epochs); }},
      {"patience", true, [](TrainConfig& c, double, std::uint64_t n) { c.patience = n; },
       [](const TrainConfig& c) { return std::to_string(c.patience); }},
      {"seed", true, [](TrainConfig& c, double, std::uint64_t n) { c.seed = n; },
       [](const TrainConfig& c) { return std::to_string(c.seed); }},
      {"embed_dim", true, [](TrainConfig& c, double, std::uint64_t n) { c.encoder.embed_dim = n; },
       [](const TrainConfig& c) { return std::to_string(c.encoder.embed_dim); }},
      {"hidden_dim", true,
       [](TrainConfig& c, double, std::uint64_t n) { c.encoder.hidden_dim = n; },
       [](const TrainConfig& c) { return std::to_string(c.encoder.hidden_dim); }},
      {"gamma", false, [](TrainConfig& c, double v, std::uint64_t) { c.encoder.gamma = v; },
       [](const TrainConfig& c) { return real_text(c.encoder.gamma); }},
      {"max_nodes", true,
       [](TrainConfig& c, double, std::uint64_t n) { c.encoder.limits.max_nodes = n; },
       [](const TrainConfig& c) { return std::to_string(c.encoder.limits.max_nodes); }},
      {"max_sentences", true,
       [](TrainConfig& c, double, std::uint64_t n) { c.encoder.limits.max_sentences = n; },
       [](const TrainConfig& c) { return std::to_string(c.encoder.limits.max_sentences); }},
  };
  return table;
}

}  // namespace

TrainConfig parse_config(std::istream& in) {
  TrainConfig config;
  std::set<std::string, std::less<>> seen;
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    std::string_view text = raw;
    if (const auto hash = text.find('#'); hash != std::string_view::npos) {
      text = text.substr(0, hash);
    }
    text = trim(text);
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string_view::npos) throw ConfigError(line, "expected key = value");
    const auto key = trim(text.substr(0, eq));
    const auto value = trim(text.substr(eq + 1));
    const Field* field = nullptr;
    for (const auto& f : fields()) {
      if (f.key == key) field = &f;
    }
    if (field == nullptr) throw ConfigError(line, "unknown key '" + std::string(key) + "'");
    if (!seen.insert(std::string(key)).second) {
      throw ConfigError(line, "duplicate key '" + std::string(key) + "'");
    }
    if (field->integral) {
      field->set(config, 0.0, to_count(key, value, line));
    } else {
      field->set(config, to_real(key, value, line), 0);
    }
  }
  try {
    config.validate();
  } catch (const TrainError& e) {
    throw ConfigError(0, e.what());
  }
  return config;
}

TrainConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(0, "cannot open config " + path.string());
  try {
    return parse_config(in);
  } catch (const ConfigError& e) {
    throw ConfigError(0, path.string() + ": " + e.what());
  }
}

void write_config(std::ostream& out, const TrainConfig& config) {
  for (const auto& f : fields()) out << f.key << " = " << f.get(config) << '\n';
}

}  // namespace cohdet
