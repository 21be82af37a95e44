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

#ifndef SHAPER_VOCAB_H_
#define SHAPER_VOCAB_H_

#include <cstddef>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace shaper {

// Fixed special tokens; ids are the line numbers in a vocab file.
inline constexpr int kPadId = 0;
inline constexpr int kUnkId = 1;
inline constexpr int kClsId = 2;
inline constexpr int kSepId = 3;
inline constexpr int kMaskId = 4;
inline constexpr int kNumSpecialTokens = 5;

// Lower-cases ASCII letters, splits on whitespace and emits punctuation as
// separate tokens.
std::vector<std::string> Tokenize(std::string_view text);

class Vocab {
 public:
  Vocab();  // specials only
  explicit Vocab(std::vector<std::string> tokens);

  std::size_t size() const { return tokens_.size(); }
  const std::string& token(int id) const { return tokens_[id]; }
  int Id(const std::string& token) const;  // kUnkId if absent
  std::vector<int> Encode(std::string_view text) const;
  const std::vector<std::string>& tokens() const { return tokens_; }

  // One token per line, '\n' terminated.
  std::string Serialize() const;
  static Vocab Parse(const std::string& text);
  void Save(const std::string& path) const;
  static Vocab Load(const std::string& path);

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

// Specials followed by the (vocab_size - 5) most frequent tokens, ties broken
// lexicographically. Throws a configuration error when vocab_size < 6 and a
// data error when the corpus has no tokens.
Vocab BuildVocab(const std::vector<std::string>& lines, std::size_t vocab_size);

// UTF-8 text, one document per line. Blank lines are skipped.
std::vector<std::string> ReadLines(const std::string& path);
void WriteLines(const std::vector<std::string>& lines, const std::string& path);

// Concatenation of encoded documents, each followed by [SEP].
std::vector<int> EncodeCorpus(const std::vector<std::string>& lines,
                              const Vocab& vocab);

}  // namespace shaper

#endif  // SHAPER_VOCAB_H_
