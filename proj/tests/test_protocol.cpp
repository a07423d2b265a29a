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
#include <cmath>
#include <cstring>
#include <deque>
#include <sstream>

#include "minpair/ngram.hpp"
#include "minpair/paradigms.hpp"
#include "minpair/protocol.hpp"
#include "minpair/scoring.hpp"
#include "support.hpp"

using namespace minpair;
using namespace minpair::protocol;

namespace {

// Replays scripted server lines; records what the client wrote.
class ScriptChannel final : public LineChannel {
 public:
  explicit ScriptChannel(std::deque<std::string> lines) : lines_(std::move(lines)) {}
  void write_line(std::string_view line) override { written.emplace_back(line); }
  bool read_line(std::string& line) override {
    if (lines_.empty()) return false;
    line = lines_.front();
    lines_.pop_front();
    return true;
  }
  std::vector<std::string> written;

 private:
  std::deque<std::string> lines_;
};

// Answers through a Server but releases each window of replies reversed.
template <class S>
class ReversingChannel final : public LineChannel {
 public:
  ReversingChannel(S& scorer, std::string digest) : server_(scorer, std::move(digest)) {
    ready_.push_back(server_.hello_line());
  }
  void write_line(std::string_view line) override { pending_.push_back(server_.handle_line(line, 0)); }
  void flush() override {
    std::reverse(pending_.begin(), pending_.end());
    for (auto& p : pending_) ready_.push_back(std::move(p));
    pending_.clear();
  }
  bool read_line(std::string& line) override {
    if (ready_.empty()) return false;
    line = std::move(ready_.front());
    ready_.pop_front();
    return true;
  }

 private:
  Server<S> server_;
  std::vector<std::string> pending_;
  std::deque<std::string> ready_;
};

std::string hello_line(std::size_t max_batch = 8) {
  return encode(Hello{"fake", {ScoreMode::causal}, "d", max_batch});
}

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

}  // namespace

TEST(Codec, ScoreRoundTrip) {
  Score s{42, {ScoreMode::causal, {}, "loves", {}}};
  for (int i = 0; i < 12; ++i) s.request.left_context.push_back("t" + std::to_string(i));
  const auto line = encode(s);
  EXPECT_EQ(line.find('\n'), std::string::npos);
  EXPECT_EQ(std::get<Score>(decode(line)), s);
  Score m{7, {ScoreMode::masked, {"a"}, "b", {"c", "d"}}};
  EXPECT_EQ(std::get<Score>(decode(encode(m))), m);
}

TEST(Codec, AllMessageKindsRoundTrip) {
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<Message> msgs = {
      Hello{"ngram", {ScoreMode::causal, ScoreMode::masked}, "abc", 64},
      Result{3, ScoreResponse::success(-0.1234567890123456789)},
      Result{4, ScoreResponse::success(-inf)},
      Result{5, ScoreResponse::failure(ScoreErrorCode::oov, "unknown 'x'")},
      CurvePoint{"full_reverse", 200, 123.456},
      ErrorNotice{"bad", 17},
  };
  for (const auto& m : msgs) EXPECT_EQ(decode(encode(m)), m) << encode(m);
  EXPECT_NE(encode(msgs[2]).find("null"), std::string::npos);
}

TEST(Codec, TteQueryWithoutType) {
  auto m = decode(R"({"id":1,"mode":"causal","left":["Who","did","you","say","that"],"target":"loves"})");
  const auto& s = std::get<Score>(m);
  EXPECT_EQ(s.id, 1u);
  EXPECT_EQ(s.request.mode, ScoreMode::causal);
  EXPECT_EQ(s.request.left_context, (std::vector<std::string>{"Who", "did", "you", "say", "that"}));
  EXPECT_EQ(s.request.target, "loves");
  EXPECT_TRUE(s.request.right_context.empty());
}

TEST(Codec, UnknownFieldsIgnored) {
  auto m = decode(R"({"id":9,"target":"a","left":[],"temperature":0.5,"extra":{"x":1}})");
  EXPECT_EQ(std::get<Score>(m).id, 9u);
}

TEST(Codec, MalformedLinesCarryOffsets) {
  try {
    decode(R"({"id":1,"target":"lo)", 100);
    FAIL();
  } catch (const ProtocolError& e) {
    EXPECT_GE(e.byte_offset(), 100u);
  }
  EXPECT_THROW(decode("[1,2]"), ProtocolError);
  EXPECT_THROW(decode(R"({"type":"score","target":"a"})"), ProtocolError);
  EXPECT_THROW(decode(R"({"type":"bogus"})"), ProtocolError);
  EXPECT_THROW(decode(R"({"type":"hello","scorer":"x","modes":[]})"), ProtocolError);
  EXPECT_THROW(decode(R"({"id":1,"target":"a","mode":"sideways"})"), ProtocolError);
}

TEST(Server, TruncatedLineLeavesSessionUsable) {
  UniformScorer u({"a", "b"});
  std::istringstream in("{\"id\":1,\"target\":\"a\"\n{\"id\":2,\"target\":\"b\"}\n");
  std::ostringstream out;
  serve(u, "digest", in, out);
  std::istringstream lines(out.str());
  std::string l;
  std::getline(lines, l);
  EXPECT_TRUE(std::holds_alternative<Hello>(decode(l)));
  std::getline(lines, l);
  auto notice = std::get<ErrorNotice>(decode(l));
  EXPECT_GT(notice.offset, 0u);
  std::getline(lines, l);
  auto r = std::get<Result>(decode(l));
  EXPECT_EQ(r.id, 2u);
  EXPECT_DOUBLE_EQ(r.response.result->log_probability, std::log(0.5));
}

TEST(Server, HelloAdvertisesModes) {
  Corpus c{Split::train, {Sentence::from_line("a b")}};
  auto m = train_ngram(c);
  NGramScorer s(m, "tri");
  auto h = std::get<Hello>(decode(Server<NGramScorer>(s, m.vocabulary().digest()).hello_line()));
  EXPECT_EQ(h.scorer_id, "tri");
  EXPECT_EQ(h.modes, std::vector<ScoreMode>{ScoreMode::causal});
  EXPECT_EQ(h.vocabulary_digest, m.vocabulary().digest());
  EXPECT_EQ(h.max_batch, 4096u);
}

TEST(Client, TwoRequestsMatchedById) {
  UniformScorer u({"a", "b", "c", "d"});
  RemoteScorer r(std::make_unique<LoopbackChannel<UniformScorer>>(u, "x"));
  std::vector<ScoreRequest> reqs = {{ScoreMode::causal, {}, "a", {}}, {ScoreMode::causal, {"a"}, "b", {}}};
  auto out = r.score_batch(reqs);
  ASSERT_EQ(out.size(), 2u);
  for (const auto& o : out) EXPECT_DOUBLE_EQ(o.result->log_probability, std::log(0.25));
}

TEST(Client, OutOfOrderRepliesAreResequenced) {
  Corpus c{Split::train, {Sentence::from_line("a b c d e"), Sentence::from_line("a c e")}};
  auto m = train_ngram(c, NGramOptions{2, 0.5, true});
  NGramScorer local(m);
  RemoteScorer remote(std::make_unique<ReversingChannel<NGramScorer>>(local, "d"), 3);
  std::vector<ScoreRequest> reqs;
  for (const auto* t : {"a", "b", "c", "d", "e", "a", "c"}) reqs.push_back({ScoreMode::causal, {"a"}, t, {}});
  auto got = remote.score_batch(reqs);
  auto want = local.score_batch(reqs);
  for (std::size_t i = 0; i < reqs.size(); ++i)
    EXPECT_TRUE(same_bits(got[i].result->log_probability, want[i].result->log_probability)) << i;
}

TEST(Client, OovIsolatedPerRequest) {
  UniformScorer u({"a", "b"});
  RemoteScorer r(std::make_unique<LoopbackChannel<UniformScorer>>(u, "x"));
  std::vector<ScoreRequest> reqs = {{ScoreMode::causal, {}, "a", {}}, {ScoreMode::causal, {}, "zz", {}},
                                    {ScoreMode::causal, {}, "b", {}}};
  auto out = r.score_batch(reqs);
  EXPECT_TRUE(out[0].ok());
  EXPECT_EQ(out[1].error->code, ScoreErrorCode::oov);
  EXPECT_TRUE(out[2].ok());
}

TEST(Client, HandshakeRequired) {
  EXPECT_THROW(RemoteScorer(std::make_unique<ScriptChannel>(std::deque<std::string>{})), SessionError);
  EXPECT_THROW(RemoteScorer(std::make_unique<ScriptChannel>(std::deque<std::string>{
                   encode(Result{1, ScoreResponse::success(-1)})})),
               ProtocolError);
}

TEST(Client, TransportLossIsSessionError) {
  RemoteScorer r(std::make_unique<ScriptChannel>(std::deque<std::string>{hello_line()}));
  std::vector<ScoreRequest> reqs = {{ScoreMode::causal, {}, "a", {}}};
  EXPECT_THROW(r.score_batch(reqs), SessionError);
}

TEST(Client, UnknownIdIsProtocolError) {
  RemoteScorer r(std::make_unique<ScriptChannel>(
      std::deque<std::string>{hello_line(), encode(Result{99, ScoreResponse::success(-1)})}));
  std::vector<ScoreRequest> reqs = {{ScoreMode::causal, {}, "a", {}}};
  EXPECT_THROW(r.score_batch(reqs), ProtocolError);
}

TEST(Client, RequestsCarryUniqueIds) {
  auto* raw = new ScriptChannel(std::deque<std::string>{hello_line(2), encode(Result{1, ScoreResponse::success(-1)}),
                                                        encode(Result{2, ScoreResponse::success(-2)}),
                                                        encode(Result{3, ScoreResponse::success(-3)})});
  RemoteScorer r{std::unique_ptr<LineChannel>(raw)};
  EXPECT_EQ(r.max_batch(), 2u);
  std::vector<ScoreRequest> reqs(3, ScoreRequest{ScoreMode::causal, {}, "a", {}});
  auto out = r.score_batch(reqs);
  EXPECT_EQ(out[2].result->log_probability, -3.0);
  ASSERT_EQ(raw->written.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(std::get<Score>(decode(raw->written[i])).id, i + 1);
}

TEST(Client, ChildProcessMatchesInProcess) {
  const auto records = generate_dataset(PhenomenonId::tte, 300, 2);
  Corpus train;
  for (const auto& r : records)
    for (const auto& i : r.instances) train.sentences.push_back(i.sentence);
  auto m = train_ngram(train, NGramOptions{3, 0.3, true});
  oracle::TempDir dir;
  m.save(dir.file("m.json"));
  auto remote = RemoteScorer::spawn(std::string("remote:") + oracle::shell_quote(MINPAIR_CLI) + " serve --model " +
                                    oracle::shell_quote(dir.file("m.json")));
  NGramScorer local(m);
  EXPECT_EQ(remote.id(), local.id());
  EXPECT_EQ(remote.hello().vocabulary_digest, m.vocabulary().digest());
  const std::vector<std::uint64_t> seeds = {1, 2};
  auto a = run_evaluation(PhenomenonId::tte, local, seeds, 150);
  auto b = run_evaluation(PhenomenonId::tte, remote, seeds, 150);
  EXPECT_EQ(report_bytes(a.report), report_bytes(b.report));
  for (std::size_t i = 0; i < a.outcomes.size(); ++i) {
    EXPECT_TRUE(same_bits(a.outcomes[i].p_grammatical, b.outcomes[i].p_grammatical));
    EXPECT_TRUE(same_bits(a.outcomes[i].p_ungrammatical, b.outcomes[i].p_ungrammatical));
  }
}

TEST(Client, DeadChildIsSessionError) {
  EXPECT_THROW(RemoteScorer::spawn("exit 3"), SessionError);
}
