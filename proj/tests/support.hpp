// Copyright 2026 The minpair Authors.
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

// Independent oracles shared by the unit and acceptance suites. Nothing here
// calls into the code it is used to check.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <sys/wait.h>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "minpair/cfg.hpp"
#include "minpair/corpus.hpp"

namespace minpair::oracle {

// ---------------------------------------------------------------------------
// Brute-force grammar walker. Walks every condition of the grammar left to
// right with one shared table of nonterminal choices keyed by occurrence
// path, branching the first time a path is reached. Each leaf is one joint
// derivation; its value is the tuple of rendered sentences.

class BruteForce {
 public:
  explicit BruteForce(const GrammarSpec& g) : g_(g) {
    if (g_.conditions.empty())
      conds_.push_back({"default", {}, true});
    else
      conds_ = g_.conditions;
  }

  std::vector<std::vector<std::string>> run() {
    out_.clear();
    std::map<std::string, int> table;
    std::vector<std::string> rendered;
    walk_condition(0, table, rendered);
    return out_;
  }

 private:
  // A pending item: symbol list with its path prefix and next position.
  struct Frame {
    const std::vector<Symbol>* symbols;
    std::string prefix;
    std::size_t pos;
    std::map<std::string, int> seen;  // occurrence counters for this list
  };

  void walk_condition(std::size_t c, std::map<std::string, int>& table, std::vector<std::string>& rendered) {
    if (c == conds_.size()) {
      out_.push_back(rendered);
      return;
    }
    start_sym_ = {Symbol{Symbol::Kind::nonterminal, g_.start, false}};
    std::vector<Frame> stack{{&start_sym_, "", 0, {}}};
    std::vector<std::string> tokens;
    step(c, stack, tokens, table, rendered);
  }

  void step(std::size_t c, std::vector<Frame> stack, std::vector<std::string> tokens,
            std::map<std::string, int>& table, std::vector<std::string>& rendered) {
    while (!stack.empty() && stack.back().pos == stack.back().symbols->size()) stack.pop_back();
    if (stack.empty()) {
      std::string line;
      for (const auto& t : tokens) line += (line.empty() ? "" : " ") + t;
      rendered.push_back(line);
      walk_condition(c + 1, table, rendered);
      rendered.pop_back();
      return;
    }
    Frame& top = stack.back();
    const Symbol sym = (*top.symbols)[top.pos++];
    if (sym.kind == Symbol::Kind::terminal) {
      std::istringstream is(sym.name);
      std::string t;
      while (is >> t) tokens.push_back(t);
      step(c, std::move(stack), std::move(tokens), table, rendered);
      return;
    }
    const std::string label = sym.kind == Symbol::Kind::slot ? "slot:" + sym.name : sym.name;
    const std::string key = top.prefix + "/" + label + "@" + std::to_string(top.seen[label]++);
    if (sym.kind == Symbol::Kind::slot) {
      const std::string variant = std::string(1, conds_[c].signs.at(sym.name)) + sym.name;
      stack.push_back({&g_.rules.at(variant).front().symbols, key, 0, {}});
      step(c, std::move(stack), std::move(tokens), table, rendered);
      return;
    }
    const auto& alts = g_.rules.at(sym.name);
    if (auto it = table.find(key); it != table.end()) {
      stack.push_back({&alts[static_cast<std::size_t>(it->second)].symbols, key, 0, {}});
      step(c, std::move(stack), std::move(tokens), table, rendered);
      return;
    }
    for (std::size_t a = 0; a < alts.size(); ++a) {
      table[key] = static_cast<int>(a);
      auto s = stack;
      s.push_back({&alts[a].symbols, key, 0, {}});
      step(c, std::move(s), tokens, table, rendered);
    }
    table.erase(key);
  }

  const GrammarSpec& g_;
  std::vector<ConditionSpec> conds_;
  std::vector<Symbol> start_sym_;
  std::vector<std::vector<std::string>> out_;
};

// Counts joint derivations without materializing them.
inline std::uint64_t brute_force_count(const GrammarSpec& g) { return BruteForce(g).run().size(); }

inline std::vector<std::string> record_tuple(const MinimalPairRecord& r) {
  std::vector<std::string> out;
  for (const auto& i : r.instances) out.push_back(i.sentence.to_line());
  return out;
}

// ---------------------------------------------------------------------------
// Hand-counted n-gram probability with add-k smoothing over an explicit
// outcome set. Sentences are padded with order-1 "<s>" and one "</s>".

struct HandNgram {
  std::size_t order;
  double k;
  bool boundaries;
  std::set<std::string> outcomes;
  std::map<std::vector<std::string>, std::map<std::string, double>> counts;

  HandNgram(std::size_t n, double k_, bool bounds, const std::vector<std::vector<std::string>>& sentences)
      : order(n), k(k_), boundaries(bounds) {
    // The unknown token is always a possible outcome.
    outcomes.insert("<unk>");
    for (const auto& s : sentences) {
      std::vector<std::string> padded;
      if (boundaries)
        for (std::size_t i = 0; i + 1 < order; ++i) padded.push_back("<s>");
      padded.insert(padded.end(), s.begin(), s.end());
      if (boundaries) padded.push_back("</s>");
      const std::size_t first = boundaries ? order - 1 : 0;
      for (std::size_t i = first; i < padded.size(); ++i) {
        outcomes.insert(padded[i]);
        const std::size_t from = i >= order - 1 ? i - (order - 1) : 0;
        std::vector<std::string> ctx(padded.begin() + static_cast<std::ptrdiff_t>(from),
                                     padded.begin() + static_cast<std::ptrdiff_t>(i));
        counts[ctx][padded[i]] += 1.0;
      }
    }
  }

  double prob(const std::vector<std::string>& ctx, const std::string& w) const {
    const double V = static_cast<double>(outcomes.size());
    auto it = counts.find(ctx);
    double total = 0, c = 0;
    if (it != counts.end()) {
      for (const auto& [_, n] : it->second) total += n;
      if (auto jt = it->second.find(w); jt != it->second.end()) c = jt->second;
    }
    if (total == 0) return 1.0 / V;
    return (c + k) / (total + k * V);
  }
};

// ---------------------------------------------------------------------------
// Engineered bigram corpus: for every (previous token, grammatical target)
// seen in `records` the two-token sentence "prev target" occurs 9 times; for
// every (previous token, ungrammatical target) it occurs once.

struct EngineeredCorpus {
  std::vector<std::vector<std::string>> sentences;
  std::set<std::pair<std::string, std::string>> good, bad;
  bool disjoint = true;  // no (prev, token) is both good and bad
};

inline EngineeredCorpus engineered_corpus(const std::vector<MinimalPairRecord>& records) {
  EngineeredCorpus e;
  for (const auto& r : records) {
    const auto& g = r.grammatical();
    const auto& u = r.ungrammatical();
    const std::size_t c = g.critical.value();
    const std::string prev = c == 0 ? "<s>" : g.sentence.tokens[c - 1];
    e.good.insert({prev, g.sentence.tokens[c]});
    e.bad.insert({prev, u.sentence.tokens[c]});
  }
  for (const auto& p : e.good)
    if (e.bad.contains(p)) e.disjoint = false;
  for (const auto& [prev, tok] : e.good)
    for (int i = 0; i < 9; ++i) e.sentences.push_back({prev, tok});
  for (const auto& [prev, tok] : e.bad) e.sentences.push_back({prev, tok});
  return e;
}

inline Corpus to_corpus(const std::vector<std::vector<std::string>>& sentences, Split split = Split::train) {
  Corpus c{split, {}};
  for (const auto& s : sentences) c.sentences.push_back({s});
  return c;
}

// ---------------------------------------------------------------------------
// Synthetic corpora

inline std::vector<std::string> synthetic_lexicon(std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back("w" + std::to_string(i));
  return out;
}

// Sentences of length 1..max_len over a small lexicon, tagged VERB with
// probability 1/5 otherwise NOUN.
inline std::vector<TaggedSentence> synthetic_tagged(std::size_t target_tokens, std::uint64_t seed,
                                                    std::size_t max_len = 24) {
  std::mt19937_64 rng(seed);
  const auto lex = synthetic_lexicon(500);
  std::vector<TaggedSentence> out;
  std::size_t total = 0;
  while (total < target_tokens) {
    TaggedSentence s;
    const std::size_t len = 1 + rng() % max_len;
    for (std::size_t i = 0; i < len; ++i)
      s.tokens.push_back({lex[rng() % lex.size()], rng() % 5 == 0 ? "VERB" : "NOUN"});
    total += len;
    out.push_back(std::move(s));
  }
  return out;
}

inline Corpus synthetic_corpus(std::size_t sentences, std::uint64_t seed, std::size_t max_len = 24) {
  std::mt19937_64 rng(seed);
  const auto lex = synthetic_lexicon(300);
  Corpus c;
  for (std::size_t i = 0; i < sentences; ++i) {
    Sentence s;
    const std::size_t len = 1 + rng() % max_len;
    for (std::size_t j = 0; j < len; ++j) s.tokens.push_back(lex[rng() % lex.size()]);
    c.sentences.push_back(std::move(s));
  }
  return c;
}

// ---------------------------------------------------------------------------
// Files and processes

class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("minpair-test-" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

inline std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

struct CommandResult {
  int status = -1;
  std::string output;
};

// Runs through /bin/sh, capturing stdout.
inline CommandResult run_command(const std::string& cmd) {
  CommandResult r;
  FILE* p = ::popen(cmd.c_str(), "r");
  if (!p) return r;
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, p)) > 0) r.output.append(buf, n);
  const int st = ::pclose(p);
  r.status = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  return r;
}

inline std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'')
      out += "'\\''";
    else
      out += c;
  }
  return out + "'";
}

}  // namespace minpair::oracle
