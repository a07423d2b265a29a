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

#include <gtest/gtest.h>

#include <algorithm>
#include <map>

#include "minpair/perturb.hpp"
#include "support.hpp"

using namespace minpair;

namespace {

const MarkerToken kRev{std::string(kReverseMarker)};
const MarkerToken kV{"v"};

Sentence S(const char* line) { return Sentence::from_line(line); }

TaggedSentence tagged(std::initializer_list<std::pair<const char*, const char*>> words) {
  TaggedSentence s;
  for (auto [w, t] : words) s.tokens.push_back({w, t});
  return s;
}

TaggedSentence sleeping() {
  return tagged({{"They", "PRON"}, {"were", "AUX"}, {"sleeping", "VERB"}, {"next", "ADV"}, {"to", "ADP"},
                 {"the", "DET"}, {"colourless", "ADJ"}, {"green", "ADJ"}, {"ideas.", "NOUN"}});
}

// Original-token counts preceding each marker in `out`.
std::vector<std::size_t> marker_slots(const Sentence& out, const std::string& marker) {
  std::vector<std::size_t> slots;
  std::size_t seen = 0;
  for (const auto& t : out.tokens) {
    if (t == marker)
      slots.push_back(seen);
    else
      ++seen;
  }
  return slots;
}

}  // namespace

TEST(Markers, NamesAndFlags) {
  for (auto p : {PerturbationId::partial_reverse, PerturbationId::reverse_control, PerturbationId::full_reverse,
                 PerturbationId::switch_indices, PerturbationId::token_hop, PerturbationId::no_hop})
    EXPECT_EQ(parse_perturbation(to_string(p)), p);
  EXPECT_EQ(parse_perturbation("token-hop"), PerturbationId::token_hop);
  EXPECT_THROW(parse_perturbation("shuffle"), ValidationError);
  EXPECT_TRUE(needs_tags(PerturbationId::no_hop));
  EXPECT_FALSE(uses_marker_draw(PerturbationId::switch_indices));
}

TEST(Markers, Validation) {
  EXPECT_THROW(MarkerToken(""), ValidationError);
  EXPECT_THROW(MarkerToken("a b"), ValidationError);
  EXPECT_TRUE(MarkerToken("Ч").single_character());
  EXPECT_FALSE(kRev.single_character());
  EXPECT_THROW(check_marker(kV, {"v", "w"}), ValidationError);
  EXPECT_EQ(pick_marker({"v", "w"}).surface(), "Ч");
  EXPECT_EQ(pick_marker({"x"}).surface(), "v");
}

TEST(Markers, IndexDrawIsUniformOverSlots) {
  std::map<std::size_t, int> hist;
  for (std::uint64_t i = 0; i < 6000; ++i) {
    const auto k = marker_index(3, i, 5);
    ASSERT_LE(k, 5u);
    ++hist[k];
  }
  ASSERT_EQ(hist.size(), 6u);
  for (const auto& [_, n] : hist) EXPECT_NEAR(n, 1000, 150);  // sd ~ 29
  EXPECT_EQ(marker_index(3, 17, 5), marker_index(3, 17, 5));
}

TEST(PartialReverse, ExampleSentence) {
  const auto s = S("colourless green ideas sleep furiously.");
  EXPECT_EQ(partial_reverse(s, kRev, 2).to_line(), "colourless green <rev> furiously. sleep ideas");
  EXPECT_EQ(reverse_control(s, kRev, 2).to_line(), "colourless green <rev> ideas sleep furiously.");
}

TEST(PartialReverse, EmptySuffix) {
  const auto s = S("a b c");
  EXPECT_EQ(partial_reverse(s, kRev, 3).to_line(), "a b c <rev>");
  EXPECT_EQ(reverse_control(s, kRev, 3), partial_reverse(s, kRev, 3));
  EXPECT_THROW(partial_reverse(s, kRev, 4), ValidationError);
}

TEST(PartialReverse, SuffixInvolution) {
  const auto corpus = oracle::synthetic_corpus(500, 21);
  for (std::size_t i = 0; i < corpus.sentences.size(); ++i) {
    const auto& s = corpus.sentences[i];
    const auto k = marker_index(5, i, s.size());
    auto out = partial_reverse(s, kRev, k);
    std::reverse(out.tokens.begin() + static_cast<std::ptrdiff_t>(k) + 1, out.tokens.end());
    EXPECT_EQ(out, reverse_control(s, kRev, k));
  }
}

TEST(FullReverse, ExampleSentence) {
  const auto s = S("colourless green ideas sleep furiously.");
  EXPECT_EQ(full_reverse(s, kRev, 2).to_line(), "furiously. sleep ideas <rev> green colourless");
}

TEST(FullReverse, SingleToken) {
  const auto s = S("x");
  EXPECT_EQ(full_reverse(s, kRev, 0).to_line(), "x <rev>");
  EXPECT_EQ(full_reverse(s, kRev, 1).to_line(), "<rev> x");
  EXPECT_EQ(reverse_control(s, kRev, 0).to_line(), "<rev> x");
}

TEST(FullReverse, ReversalRestoresControl) {
  const auto corpus = oracle::synthetic_corpus(500, 22);
  for (std::size_t i = 0; i < corpus.sentences.size(); ++i) {
    const auto& s = corpus.sentences[i];
    const auto k = marker_index(6, i, s.size());
    auto out = full_reverse(s, kRev, k);
    std::reverse(out.tokens.begin(), out.tokens.end());
    EXPECT_EQ(out, reverse_control(s, kRev, k));
  }
}

TEST(SwitchIndices, ExampleAndDegenerate) {
  EXPECT_EQ(switch_indices(S("colourless green ideas sleep furiously.")).to_line(),
            "ideas green colourless sleep furiously.");
  EXPECT_EQ(switch_indices(S("a b")).to_line(), "a b");
  EXPECT_EQ(switch_indices(S("a")).to_line(), "a");
  EXPECT_EQ(switch_indices(S("a b c")).to_line(), "c b a");
}

TEST(Hop, ExampleSentence) {
  EXPECT_EQ(token_hop(sleeping(), kV).to_line(), "They were sleeping next to the v colourless green ideas.");
  EXPECT_EQ(no_hop(sleeping(), kV).to_line(), "They were sleeping v next to the colourless green ideas.");
}

TEST(Hop, VerbNearEnd) {
  auto s = tagged({{"birds", "NOUN"}, {"sing", "VERB"}});
  EXPECT_EQ(token_hop(s, kV).to_line(), "birds sing v");
  EXPECT_EQ(no_hop(s, kV).to_line(), "birds sing v");
  auto t = tagged({{"sing", "VERB"}, {"a", "DET"}, {"song", "NOUN"}, {"now", "ADV"}, {"please", "INTJ"}});
  EXPECT_EQ(token_hop(t, kV).to_line(), "sing a song now v please");
}

TEST(Hop, NoVerbsUnchanged) {
  auto s = tagged({{"the", "DET"}, {"cat", "NOUN"}});
  EXPECT_EQ(token_hop(s, kV), s.words());
  EXPECT_EQ(no_hop(s, kV), s.words());
}

TEST(Hop, OnlyVerbTagTriggers) {
  auto s = tagged({{"they", "PRON"}, {"have", "AUX"}, {"left", "VERB"}});
  EXPECT_EQ(no_hop(s, kV).to_line(), "they have left v");
}

TEST(Hop, UntaggedInputRejected) {
  auto s = tagged({{"they", ""}, {"left", "VERB"}});
  EXPECT_THROW(token_hop(s, kV), ValidationError);
  std::vector<TaggedSentence> corpus = {s};
  EXPECT_THROW(perturb_tagged(corpus, PerturbationId::no_hop, kV), ValidationError);
}

TEST(Hop, MarkerPositionsMatchRule) {
  const auto corpus = oracle::synthetic_tagged(20000, 9);
  for (const auto& s : corpus) {
    std::vector<std::size_t> want_hop, want_no;
    for (std::size_t i = 0; i < s.size(); ++i)
      if (s.tokens[i].upos == "VERB") {
        want_hop.push_back(std::min(i + 4, s.size()));
        want_no.push_back(i + 1);
      }
    const auto hop = token_hop(s, kV);
    const auto no = no_hop(s, kV);
    auto got_hop = marker_slots(hop, "v");
    std::sort(want_hop.begin(), want_hop.end());
    EXPECT_EQ(got_hop, want_hop);
    EXPECT_EQ(marker_slots(no, "v"), want_no);
    auto stripped = hop;
    std::erase(stripped.tokens, "v");
    EXPECT_EQ(stripped, s.words());
  }
}

TEST(Corpus, PerturbCorpusUsesPerSentenceDraws) {
  const auto corpus = oracle::synthetic_corpus(300, 31);
  const auto pr = perturb_corpus(corpus, PerturbationId::partial_reverse, kRev, 77, 3);
  const auto rc = perturb_corpus(corpus, PerturbationId::reverse_control, kRev, 77, 1);
  for (std::size_t i = 0; i < corpus.sentences.size(); ++i) {
    const auto k = marker_index(77, i, corpus.sentences[i].size());
    EXPECT_EQ(pr.sentences[i], partial_reverse(corpus.sentences[i], kRev, k));
    EXPECT_EQ(rc.sentences[i].tokens[k], "<rev>");
    EXPECT_EQ(pr.sentences[i].tokens[k], "<rev>");
  }
  EXPECT_THROW(perturb_corpus(corpus, PerturbationId::token_hop, kV, 1), ValidationError);
}

TEST(Corpus, ThreadCountDoesNotChangeOutput) {
  const auto corpus = oracle::synthetic_corpus(2000, 32);
  EXPECT_EQ(perturb_corpus(corpus, PerturbationId::full_reverse, kRev, 4, 1),
            perturb_corpus(corpus, PerturbationId::full_reverse, kRev, 4, 4));
}

TEST(Parity, HoldsForPairedPerturbations) {
  const auto corpus = oracle::synthetic_corpus(1000, 33);
  const auto rc = perturb_corpus(corpus, PerturbationId::reverse_control, kRev, 1);
  EXPECT_TRUE(verify_paired_counts(rc, perturb_corpus(corpus, PerturbationId::partial_reverse, kRev, 1)).ok);
  EXPECT_TRUE(verify_paired_counts(rc, perturb_corpus(corpus, PerturbationId::full_reverse, kRev, 1)).ok);
  EXPECT_TRUE(verify_paired_counts(corpus, corpus).ok);
  const auto tagged = oracle::synthetic_tagged(5000, 4);
  auto r = verify_paired_counts(perturb_tagged(tagged, PerturbationId::no_hop, kV),
                                perturb_tagged(tagged, PerturbationId::token_hop, kV));
  EXPECT_TRUE(r.ok);
  EXPECT_FALSE(r.first_divergence.has_value());
}

TEST(Parity, ReportsDivergence) {
  Corpus a{Split::train, {S("a b"), S("c d e")}};
  Corpus b{Split::train, {S("a b"), S("c d")}};
  auto r = verify_paired_counts(a, b);
  EXPECT_FALSE(r.ok);
  ASSERT_TRUE(r.first_divergence.has_value());
  EXPECT_EQ(*r.first_divergence, 1u);
  EXPECT_EQ(r.tokens_a, 5u);
  EXPECT_EQ(r.tokens_b, 4u);
  Corpus c{Split::train, {S("a b")}};
  EXPECT_FALSE(verify_paired_counts(a, c).ok);
}
