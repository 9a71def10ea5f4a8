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

#include <string>
#include <vector>

#include "cohdet/corpus.hpp"
#include "cohdet/synthetic.hpp"

#ifndef COHDET_FIXTURE_DIR
#define COHDET_FIXTURE_DIR "tests/fixtures"
#endif

namespace testing {

inline std::string fixture(const std::string& name) {
  return std::string(COHDET_FIXTURE_DIR) + "/" + name;
}

/// Sentences of whitespace-separated tokens; every token starting with an
/// uppercase letter becomes a one-token mention.
inline cohdet::Document make_doc(const std::string& id, const std::vector<std::string>& sentences,
                                 cohdet::Label label = cohdet::Label::HWT) {
  std::vector<cohdet::SentenceDraft> drafts;
  for (const auto& s : sentences) {
    cohdet::SentenceDraft d;
    std::size_t pos = 0;
    while (pos < s.size()) {
      const auto end = s.find(' ', pos);
      const std::string tok = s.substr(pos, end == std::string::npos ? std::string::npos : end - pos);
      if (!tok.empty()) {
        if (tok[0] >= 'A' && tok[0] <= 'Z') {
          d.mentions.push_back({static_cast<int>(d.tokens.size()), 1});
        }
        d.tokens.push_back(tok);
      }
      if (end == std::string::npos) break;
      pos = end + 1;
    }
    drafts.push_back(std::move(d));
  }
  return cohdet::assemble_document(id, label, drafts);
}

}  // namespace testing
