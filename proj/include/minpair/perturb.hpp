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

// Word-order perturbations and their matched controls.
//
// Every transform is a pure per-sentence function. Marker positions for the
// reversal family come from a stream keyed by (seed, sentence index), so a
// control corpus and its perturbed twin built with the same seed place their
// markers at the same indices, independent of thread count.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "minpair/corpus.hpp"
#include "minpair/detail/util.hpp"
#include "minpair/error.hpp"

namespace minpair {

enum class PerturbationId { partial_reverse, reverse_control, full_reverse, switch_indices, token_hop, no_hop };

inline std::string_view to_string(PerturbationId p) noexcept {
  switch (p) {
    case PerturbationId::partial_reverse: return "partial_reverse";
    case PerturbationId::reverse_control: return "reverse_control";
    case PerturbationId::full_reverse: return "full_reverse";
    case PerturbationId::switch_indices: return "switch_indices";
    case PerturbationId::token_hop: return "token_hop";
    case PerturbationId::no_hop: return "no_hop";
  }
  return "partial_reverse";
}

inline PerturbationId parse_perturbation(std::string_view s) {
  std::string norm(s);
  std::replace(norm.begin(), norm.end(), '-', '_');
  for (auto p : {PerturbationId::partial_reverse, PerturbationId::reverse_control, PerturbationId::full_reverse,
                 PerturbationId::switch_indices, PerturbationId::token_hop, PerturbationId::no_hop})
    if (norm == to_string(p)) return p;
  throw ValidationError("unknown perturbation '" + std::string(s) + "'");
}

inline bool needs_tags(PerturbationId p) noexcept {
  return p == PerturbationId::token_hop || p == PerturbationId::no_hop;
}

inline bool uses_marker_draw(PerturbationId p) noexcept {
  return p == PerturbationId::partial_reverse || p == PerturbationId::reverse_control ||
         p == PerturbationId::full_reverse;
}

inline constexpr std::string_view kReverseMarker = "<rev>";

// Candidates tried, in order, by pick_marker.
inline constexpr std::string_view kMarkerCandidates[] = {"v", "Ч", "ʘ", "§", "¤", "¶", "†", "‡", "◊", "※"};

class MarkerToken {
 public:
  explicit MarkerToken(std::string surface) : surface_(std::move(surface)) {
    if (surface_.empty()) throw ValidationError("marker token is empty");
    for (char c : surface_)
      if (detail::is_space(c)) throw ValidationError("marker token contains whitespace");
  }
  const std::string& surface() const noexcept { return surface_; }
  bool single_character() const noexcept { return detail::utf8_length(surface_) == 1; }

 private:
  std::string surface_;
};

inline void check_marker(const MarkerToken& m, const std::unordered_set<std::string>& vocabulary) {
  if (vocabulary.contains(m.surface()))
    throw ValidationError("marker '" + m.surface() + "' already occurs in the corpus vocabulary");
}

// First single-character candidate absent from the vocabulary.
inline MarkerToken pick_marker(const std::unordered_set<std::string>& vocabulary) {
  for (auto c : kMarkerCandidates)
    if (!vocabulary.contains(std::string(c))) return MarkerToken(std::string(c));
  throw ValidationError("every marker candidate already occurs in the vocabulary");
}

// Uniform over the len + 1 insertion slots of a sentence.
inline std::size_t marker_index(std::uint64_t seed, std::uint64_t sentence_index, std::size_t len) {
  detail::StreamRng rng(seed, sentence_index);
  return static_cast<std::size_t>(rng.below(len + 1));
}

inline Sentence reverse_control(const Sentence& s, const MarkerToken& marker, std::size_t index) {
  if (index > s.size()) throw ValidationError("marker index beyond sentence end");
  Sentence out;
  out.tokens.reserve(s.size() + 1);
  out.tokens.insert(out.tokens.end(), s.tokens.begin(), s.tokens.begin() + static_cast<std::ptrdiff_t>(index));
  out.tokens.push_back(marker.surface());
  out.tokens.insert(out.tokens.end(), s.tokens.begin() + static_cast<std::ptrdiff_t>(index), s.tokens.end());
  return out;
}

// Marker at `index`, everything after it reversed.
inline Sentence partial_reverse(const Sentence& s, const MarkerToken& marker, std::size_t index) {
  Sentence out = reverse_control(s, marker, index);
  std::reverse(out.tokens.begin() + static_cast<std::ptrdiff_t>(index) + 1, out.tokens.end());
  return out;
}

// Marker at `index`, then the whole augmented sentence reversed.
inline Sentence full_reverse(const Sentence& s, const MarkerToken& marker, std::size_t index) {
  Sentence out = reverse_control(s, marker, index);
  std::reverse(out.tokens.begin(), out.tokens.end());
  return out;
}

inline Sentence switch_indices(const Sentence& s) {
  Sentence out = s;
  if (out.size() >= 3) std::swap(out.tokens[0], out.tokens[2]);
  return out;
}

inline constexpr std::string_view kHopTrigger = "VERB";
inline constexpr std::size_t kHopDistance = 3;

namespace detail {

// Inserts one marker per VERB at slot(i) where i is the verb's index in the
// original sentence; slots are positions between original tokens.
template <class SlotFn>
Sentence insert_after_verbs(const TaggedSentence& s, const MarkerToken& marker, SlotFn slot) {
  std::vector<std::size_t> slots;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s.tokens[i].upos.empty()) throw ValidationError("token_hop/no_hop need POS-tagged input");
    if (s.tokens[i].upos == kHopTrigger) slots.push_back(std::min(slot(i), s.size()));
  }
  Sentence out;
  out.tokens.reserve(s.size() + slots.size());
  std::size_t next = 0;
  for (std::size_t pos = 0; pos <= s.size(); ++pos) {
    while (next < slots.size() && slots[next] == pos) {
      out.tokens.push_back(marker.surface());
      ++next;
    }
    if (pos < s.size()) out.tokens.push_back(s.tokens[pos].text);
  }
  return out;
}

}  // namespace detail

// Marker after the third original token following each verb (markers are
// not counted); at sentence end when fewer than three tokens follow.
inline Sentence token_hop(const TaggedSentence& s, const MarkerToken& marker) {
  return detail::insert_after_verbs(s, marker, [](std::size_t i) { return i + kHopDistance + 1; });
}

// Marker immediately after each verb.
inline Sentence no_hop(const TaggedSentence& s, const MarkerToken& marker) {
  return detail::insert_after_verbs(s, marker, [](std::size_t i) { return i + 1; });
}

// Applies a reversal-family or switch perturbation to every sentence;
// sentence i draws its marker index from (seed, i).
inline Corpus perturb_corpus(const Corpus& in, PerturbationId p, const MarkerToken& marker, std::uint64_t seed,
                             unsigned threads = 1) {
  if (needs_tags(p)) throw ValidationError(std::string(to_string(p)) + " needs a POS-tagged corpus");
  Corpus out{in.split, std::vector<Sentence>(in.sentences.size())};
  detail::parallel_for(in.sentences.size(), threads, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      const Sentence& s = in.sentences[i];
      switch (p) {
        case PerturbationId::switch_indices: out.sentences[i] = switch_indices(s); break;
        case PerturbationId::reverse_control: out.sentences[i] = reverse_control(s, marker, marker_index(seed, i, s.size())); break;
        case PerturbationId::partial_reverse: out.sentences[i] = partial_reverse(s, marker, marker_index(seed, i, s.size())); break;
        case PerturbationId::full_reverse: out.sentences[i] = full_reverse(s, marker, marker_index(seed, i, s.size())); break;
        default: break;
      }
    }
  });
  return out;
}

inline Corpus perturb_tagged(const std::vector<TaggedSentence>& in, PerturbationId p, const MarkerToken& marker,
                             Split split = Split::train, unsigned threads = 1) {
  if (!needs_tags(p)) throw ValidationError(std::string(to_string(p)) + " does not take a tagged corpus");
  for (const auto& s : in)
    for (const auto& t : s.tokens)
      if (t.upos.empty()) throw ValidationError("token_hop/no_hop need POS-tagged input");
  Corpus out{split, std::vector<Sentence>(in.size())};
  detail::parallel_for(in.size(), threads, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i)
      out.sentences[i] = p == PerturbationId::token_hop ? token_hop(in[i], marker) : no_hop(in[i], marker);
  });
  return out;
}

struct ParityReport {
  bool ok = true;
  std::size_t sentences_a = 0, sentences_b = 0;
  std::size_t tokens_a = 0, tokens_b = 0;
  std::optional<std::size_t> first_divergence;  // first sentence whose lengths differ
};

// Compared corpora must have equal sentence counts and equal token totals.
inline ParityReport verify_paired_counts(const Corpus& a, const Corpus& b) {
  ParityReport r;
  r.sentences_a = a.sentences.size();
  r.sentences_b = b.sentences.size();
  r.tokens_a = a.token_count();
  r.tokens_b = b.token_count();
  const std::size_t n = std::min(r.sentences_a, r.sentences_b);
  for (std::size_t i = 0; i < n; ++i)
    if (a.sentences[i].size() != b.sentences[i].size()) {
      r.first_divergence = i;
      break;
    }
  if (!r.first_divergence && r.sentences_a != r.sentences_b) r.first_divergence = n;
  r.ok = r.sentences_a == r.sentences_b && r.tokens_a == r.tokens_b;
  return r;
}

}  // namespace minpair
