// Copyright 2026 The Shaper Authors.
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

#include "shaper/vocab.h"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <sstream>

#include "shaper/errors.h"
#include "shaper/io.h"

namespace shaper {

namespace {

const char* const kSpecials[kNumSpecialTokens] = {"[PAD]", "[UNK]", "[CLS]",
                                                  "[SEP]", "[MASK]"};

bool IsPunct(unsigned char c) { return std::ispunct(c) != 0; }

}  // namespace

std::vector<std::string> Tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) out.push_back(std::move(cur));
    cur.clear();
  };
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isspace(c)) {
      flush();
    } else if (IsPunct(c)) {
      flush();
      out.emplace_back(1, ch);
    } else {
      cur.push_back(static_cast<char>(std::tolower(c)));
    }
  }
  flush();
  return out;
}

Vocab::Vocab() : Vocab(std::vector<std::string>(kSpecials, kSpecials + kNumSpecialTokens)) {}

Vocab::Vocab(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  if (tokens_.size() < static_cast<std::size_t>(kNumSpecialTokens)) {
    throw FormatError("vocab has fewer entries than the special tokens");
  }
  for (int i = 0; i < kNumSpecialTokens; ++i) {
    if (tokens_[i] != kSpecials[i]) {
      throw FormatError("vocab line " + std::to_string(i + 1) + " must be " +
                        kSpecials[i] + ", got '" + tokens_[i] + "'");
    }
  }
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (!index_.emplace(tokens_[i], static_cast<int>(i)).second) {
      throw FormatError("duplicate vocab token '" + tokens_[i] + "'");
    }
  }
}

int Vocab::Id(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? kUnkId : it->second;
}

std::vector<int> Vocab::Encode(std::string_view text) const {
  std::vector<int> ids;
  for (const std::string& t : Tokenize(text)) ids.push_back(Id(t));
  return ids;
}

std::string Vocab::Serialize() const {
  std::string out;
  for (const std::string& t : tokens_) {
    out += t;
    out += '\n';
  }
  return out;
}

Vocab Vocab::Parse(const std::string& text) {
  std::vector<std::string> tokens;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    tokens.push_back(line);
  }
  return Vocab(std::move(tokens));
}

void Vocab::Save(const std::string& path) const {
  WriteFileAtomic(path, Serialize());
}

Vocab Vocab::Load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open vocab '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return Parse(ss.str());
}

Vocab BuildVocab(const std::vector<std::string>& lines, std::size_t vocab_size) {
  if (vocab_size <= static_cast<std::size_t>(kNumSpecialTokens)) {
    throw ConfigError("vocab_size " + std::to_string(vocab_size) +
                      " leaves no room beyond the " +
                      std::to_string(kNumSpecialTokens) + " special tokens");
  }
  std::map<std::string, std::size_t> counts;
  for (const std::string& line : lines) {
    for (std::string& t : Tokenize(line)) ++counts[std::move(t)];
  }
  for (const char* s : kSpecials) counts.erase(s);
  if (counts.empty()) throw DataError("corpus contains no tokens");
  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    return a.second > b.second;  // map order already breaks ties
  });
  std::vector<std::string> tokens(kSpecials, kSpecials + kNumSpecialTokens);
  const std::size_t room = vocab_size - kNumSpecialTokens;
  for (std::size_t i = 0; i < ranked.size() && i < room; ++i) {
    tokens.push_back(ranked[i].first);
  }
  return Vocab(std::move(tokens));
}

std::vector<std::string> ReadLines(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    lines.push_back(line);
  }
  return lines;
}

void WriteLines(const std::vector<std::string>& lines, const std::string& path) {
  std::string text;
  for (const std::string& l : lines) text += l + '\n';
  WriteFileAtomic(path, text);
}

std::vector<int> EncodeCorpus(const std::vector<std::string>& lines,
                              const Vocab& vocab) {
  std::vector<int> ids;
  for (const std::string& line : lines) {
    const std::vector<int> doc = vocab.Encode(line);
    if (doc.empty()) continue;
    ids.insert(ids.end(), doc.begin(), doc.end());
    ids.push_back(kSepId);
  }
  return ids;
}

}  // namespace shaper
