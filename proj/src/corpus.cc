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

#include "shaper/corpus.h"

#include <cmath>
#include <set>

#include "shaper/errors.h"
#include "shaper/random.h"

namespace shaper {

namespace {

constexpr std::uint64_t kLexiconSeed = 0x5eed1e81c0ULL;
constexpr std::size_t kNounsPerTopic = 40;
constexpr std::size_t kVerbsPerTopic = 20;
constexpr std::size_t kAdjsPerTopic = 16;
constexpr std::size_t kSharedNouns = 20;
constexpr std::size_t kSharedVerbs = 10;
constexpr std::size_t kSharedAdjs = 10;

const char* const kOnsets[] = {"b", "d", "f", "g", "k", "l", "m", "n", "p", "r",
                               "s", "t", "v", "z", "br", "dr", "gl", "kr", "pl",
                               "st", "tr", "sh", "ch"};
const char* const kVowels[] = {"a", "e", "i", "o", "u", "ai", "ou", "ee"};
const char* const kCodas[] = {"", "", "", "n", "l", "r", "m", "t", "k"};

const char* const kSingularDets[] = {"a", "every", "this", "one", "the"};
const char* const kPluralDets[] = {"some", "these", "many", "two", "the"};
const char* const kPreps[] = {"in", "on", "with", "near", "under", "for", "from",
                              "about"};
const char* const kFunctionWords[] = {"a", "every", "this", "one", "the", "some",
                                      "these", "many", "two", "in", "on", "with",
                                      "near", "under", "for", "from", "about",
                                      "and", "but", "then", "it", "they"};

struct Lexicon {
  struct Topic {
    std::vector<std::string> nouns, verbs, adjs;
  };
  std::vector<Topic> topics;
  Topic shared;
};

class WordMaker {
 public:
  WordMaker() : rng_(kLexiconSeed) {
    for (const char* w : kFunctionWords) used_.insert(w);
  }

  // Base form whose plural/agreeing "+s" form is also unused.
  std::string Make() {
    for (;;) {
      const std::size_t syllables = 2 + rng_.UniformInt(2);
      std::string w;
      for (std::size_t i = 0; i < syllables; ++i) {
        w += kOnsets[rng_.UniformInt(std::size(kOnsets))];
        w += kVowels[rng_.UniformInt(std::size(kVowels))];
        if (i + 1 == syllables) w += kCodas[rng_.UniformInt(std::size(kCodas))];
      }
      if (w.back() == 's' || used_.count(w) || used_.count(w + "s")) continue;
      used_.insert(w);
      used_.insert(w + "s");
      return w;
    }
  }

 private:
  Rng rng_;
  std::set<std::string> used_;
};

Lexicon BuildLexicon(std::size_t topics) {
  WordMaker maker;
  Lexicon lex;
  auto fill = [&maker](Lexicon::Topic& t, std::size_t n, std::size_t v,
                       std::size_t a) {
    for (std::size_t i = 0; i < n; ++i) t.nouns.push_back(maker.Make());
    for (std::size_t i = 0; i < v; ++i) t.verbs.push_back(maker.Make());
    for (std::size_t i = 0; i < a; ++i) t.adjs.push_back(maker.Make());
  };
  fill(lex.shared, kSharedNouns, kSharedVerbs, kSharedAdjs);
  lex.topics.resize(topics);
  for (Lexicon::Topic& t : lex.topics) fill(t, kNounsPerTopic, kVerbsPerTopic, kAdjsPerTopic);
  return lex;
}

// Zipf(1) rank sampler over n items.
std::size_t Zipf(Rng& rng, std::size_t n) {
  double norm = 0.0;
  for (std::size_t i = 0; i < n; ++i) norm += 1.0 / static_cast<double>(i + 1);
  double u = rng.Uniform() * norm;
  for (std::size_t i = 0; i < n; ++i) {
    u -= 1.0 / static_cast<double>(i + 1);
    if (u < 0.0) return i;
  }
  return n - 1;
}

class DocumentWriter {
 public:
  DocumentWriter(const Lexicon& lex, Rng& rng) : lex_(lex), rng_(rng) {}

  std::string Document() {
    topic_ = &lex_.topics[rng_.UniformInt(lex_.topics.size())];
    protagonist_ = Zipf(rng_, topic_->nouns.size());
    const std::size_t sentences = 3 + rng_.UniformInt(6);
    std::string doc;
    for (std::size_t i = 0; i < sentences; ++i) {
      if (i) doc += ' ';
      doc += Sentence();
    }
    return doc;
  }

 private:
  const Lexicon::Topic& Source() {
    return rng_.Bernoulli(0.1) ? lex_.shared : *topic_;
  }

  std::string NounPhrase(bool plural, bool allow_protagonist) {
    std::string np = plural ? kPluralDets[rng_.UniformInt(std::size(kPluralDets))]
                            : kSingularDets[rng_.UniformInt(std::size(kSingularDets))];
    const Lexicon::Topic& src = Source();
    if (rng_.Bernoulli(0.4)) np += " " + src.adjs[Zipf(rng_, src.adjs.size())];
    std::string noun;
    if (allow_protagonist && rng_.Bernoulli(0.35)) {
      noun = topic_->nouns[protagonist_];
    } else {
      noun = src.nouns[Zipf(rng_, src.nouns.size())];
    }
    return np + " " + noun + (plural ? "s" : "");
  }

  std::string Clause() {
    const bool plural = rng_.Bernoulli(0.4);
    std::string c = NounPhrase(plural, true);
    const Lexicon::Topic& src = Source();
    c += " " + src.verbs[Zipf(rng_, src.verbs.size())] + (plural ? "" : "s");
    if (rng_.Bernoulli(0.7)) c += " " + NounPhrase(rng_.Bernoulli(0.4), false);
    if (rng_.Bernoulli(0.4)) {
      c += std::string(" ") + kPreps[rng_.UniformInt(std::size(kPreps))] + " " +
           NounPhrase(rng_.Bernoulli(0.4), false);
    }
    return c;
  }

  std::string Sentence() {
    std::string s = Clause();
    if (rng_.Bernoulli(0.25)) s += std::string(rng_.Bernoulli(0.5) ? " and " : " , but ") + Clause();
    return s + " .";
  }

  const Lexicon& lex_;
  Rng& rng_;
  const Lexicon::Topic* topic_ = nullptr;
  std::size_t protagonist_ = 0;
};

}  // namespace

std::vector<std::string> GenerateSyntheticCorpus(const SyntheticCorpusOptions& options) {
  if (options.topics == 0) throw ConfigError("synthetic corpus needs >= 1 topic");
  const Lexicon lex = BuildLexicon(options.topics);
  Rng rng(options.seed);
  DocumentWriter writer(lex, rng);
  std::vector<std::string> lines;
  std::size_t bytes = 0;
  while (bytes < options.target_bytes) {
    lines.push_back(writer.Document());
    bytes += lines.back().size() + 1;
  }
  return lines;
}

}  // namespace shaper
