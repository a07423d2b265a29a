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

// Line-per-sentence corpora: loading, saving, vocabulary capping, and the
// token<TAB>UPOS tagged format consumed by verb-anchored perturbations.

#include <algorithm>
#include <cstddef>
#include <fstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "minpair/detail/util.hpp"
#include "minpair/error.hpp"

namespace minpair {

inline constexpr std::string_view kUnkToken = "<unk>";

struct Sentence {
  std::vector<std::string> tokens;

  std::size_t size() const noexcept { return tokens.size(); }
  std::string to_line() const { return detail::join(tokens); }
  static Sentence from_line(std::string_view line) { return {detail::split_whitespace(line)}; }

  friend bool operator==(const Sentence&, const Sentence&) = default;
};

struct TaggedToken {
  std::string text;
  std::string upos;

  friend bool operator==(const TaggedToken&, const TaggedToken&) = default;
};

struct TaggedSentence {
  std::vector<TaggedToken> tokens;

  std::size_t size() const noexcept { return tokens.size(); }
  Sentence words() const {
    Sentence s;
    s.tokens.reserve(tokens.size());
    for (const auto& t : tokens) s.tokens.push_back(t.text);
    return s;
  }

  friend bool operator==(const TaggedSentence&, const TaggedSentence&) = default;
};

enum class Split { train, validation, test };

inline std::string_view to_string(Split s) noexcept {
  switch (s) {
    case Split::train: return "train";
    case Split::validation: return "validation";
    case Split::test: return "test";
  }
  return "train";
}

inline Split parse_split(std::string_view s) {
  if (s == "train") return Split::train;
  if (s == "validation" || s == "valid") return Split::validation;
  if (s == "test") return Split::test;
  throw ValidationError("unknown split '" + std::string(s) + "'");
}

struct Corpus {
  Split split = Split::train;
  std::vector<Sentence> sentences;

  std::size_t token_count() const noexcept {
    std::size_t n = 0;
    for (const auto& s : sentences) n += s.size();
    return n;
  }

  friend bool operator==(const Corpus&, const Corpus&) = default;
};

struct LoadStats {
  std::size_t lines_read = 0;
  std::size_t skipped_lines = 0;  // empty or whitespace-only
};

inline Corpus read_corpus(std::istream& in, Split split, LoadStats* stats = nullptr) {
  Corpus corpus{split, {}};
  LoadStats local;
  std::string line;
  while (std::getline(in, line)) {
    ++local.lines_read;
    Sentence s = Sentence::from_line(line);
    if (s.tokens.empty()) {
      ++local.skipped_lines;
      continue;
    }
    corpus.sentences.push_back(std::move(s));
  }
  if (stats) *stats = local;
  return corpus;
}

inline Corpus load_corpus(const std::string& path, Split split, LoadStats* stats = nullptr) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open corpus '" + path + "'");
  Corpus c = read_corpus(in, split, stats);
  if (in.bad()) throw IoError("read failure on '" + path + "'");
  return c;
}

inline void write_corpus(std::ostream& out, const Corpus& corpus) {
  for (const auto& s : corpus.sentences) out << s.to_line() << '\n';
}

inline void save_corpus(const std::string& path, const Corpus& corpus) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write corpus '" + path + "'");
  write_corpus(out, corpus);
  if (!out) throw IoError("write failure on '" + path + "'");
}

// Tagged TSV: one "token<TAB>UPOS" per line, blank line between sentences.
inline std::vector<TaggedSentence> read_tagged(std::istream& in) {
  std::vector<TaggedSentence> out;
  TaggedSentence current;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (detail::trim(line).empty()) {
      if (!current.tokens.empty()) out.push_back(std::move(current));
      current = {};
      continue;
    }
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0)
      throw ValidationError("tagged line " + std::to_string(lineno) + " is not token<TAB>UPOS");
    std::string token = line.substr(0, tab);
    std::string tag(detail::trim(std::string_view(line).substr(tab + 1)));
    if (tag.empty() || token.find_first_of(" \t") != std::string::npos)
      throw ValidationError("tagged line " + std::to_string(lineno) + " is malformed");
    current.tokens.push_back({std::move(token), std::move(tag)});
  }
  if (!current.tokens.empty()) out.push_back(std::move(current));
  return out;
}

inline std::vector<TaggedSentence> load_tagged(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open tagged corpus '" + path + "'");
  return read_tagged(in);
}

inline void write_tagged(std::ostream& out, const std::vector<TaggedSentence>& sentences) {
  for (const auto& s : sentences) {
    for (const auto& t : s.tokens) out << t.text << '\t' << t.upos << '\n';
    out << '\n';
  }
}

// Tokens ranked by descending frequency; ties go to the earlier first
// occurrence. The unknown token is never ranked.
inline std::vector<std::string> rank_tokens(const Corpus& corpus) {
  struct Entry {
    std::size_t count = 0;
    std::size_t first = 0;
  };
  std::unordered_map<std::string_view, Entry> table;
  std::vector<std::string_view> order;
  for (const auto& s : corpus.sentences)
    for (const auto& t : s.tokens) {
      if (t == kUnkToken) continue;
      auto [it, inserted] = table.try_emplace(t, Entry{0, order.size()});
      if (inserted) order.push_back(t);
      ++it->second.count;
    }
  std::stable_sort(order.begin(), order.end(), [&](std::string_view a, std::string_view b) {
    return table[a].count > table[b].count;
  });
  return {order.begin(), order.end()};
}

// The k most frequent tokens of `ranking_source` plus the unknown token.
inline std::unordered_set<std::string> top_k_vocabulary(const Corpus& ranking_source, std::size_t k) {
  if (k == 0) throw ValidationError("vocabulary size must be at least 1");
  auto ranked = rank_tokens(ranking_source);
  if (ranked.size() > k) ranked.resize(k);
  std::unordered_set<std::string> vocab(ranked.begin(), ranked.end());
  vocab.emplace(kUnkToken);
  return vocab;
}

inline Corpus apply_vocabulary(const Corpus& corpus, const std::unordered_set<std::string>& vocab) {
  Corpus out = corpus;
  for (auto& s : out.sentences)
    for (auto& t : s.tokens)
      if (!vocab.contains(t)) t = kUnkToken;
  return out;
}

// Replaces every token outside the k most frequent with <unk>. Ranking is
// taken from `ranking_source` (the train split) and applied to `corpus`.
inline Corpus cap_vocabulary(const Corpus& corpus, std::size_t k, const Corpus& ranking_source) {
  return apply_vocabulary(corpus, top_k_vocabulary(ranking_source, k));
}

inline Corpus cap_vocabulary(const Corpus& corpus, std::size_t k) {
  return cap_vocabulary(corpus, k, corpus);
}

inline std::unordered_set<std::string> vocabulary_of(const Corpus& corpus) {
  std::unordered_set<std::string> v;
  for (const auto& s : corpus.sentences) v.insert(s.tokens.begin(), s.tokens.end());
  return v;
}

}  // namespace minpair
