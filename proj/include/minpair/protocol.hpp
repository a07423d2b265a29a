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

// Newline-delimited JSON protocol for external probability scorers.
//
// The server writes a hello line first, then answers one result line per
// score line. Log-probabilities are natural logs; -inf travels as null.
//
//   hello   {"type":"hello","scorer":ID,"modes":["causal"|"masked",...],
//            "vocab_digest":HEX,"max_batch":N}
//   score   {"type":"score","id":N,"mode":"causal"|"masked","left":[...],
//            "target":TOKEN,"right":[...]}
//   result  {"type":"result","id":N,"logprob":X|null}
//           {"type":"result","id":N,"error":{"code":"oov"|"unsupported_mode"|"internal","message":TEXT}}
//   curve   {"type":"curve","label":TEXT,"batch":N,"perplexity":X}
//   error   {"type":"error","message":TEXT,"offset":N}
//
// "type" may be omitted when it is implied by the fields present. Unknown
// fields are ignored.

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <deque>
#include <istream>
#include <limits>
#include <memory>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include <json.hpp>

#include "minpair/error.hpp"
#include "minpair/scorer.hpp"

namespace minpair::protocol {

struct Hello {
  std::string scorer_id;
  std::vector<ScoreMode> modes;
  std::string vocabulary_digest;
  std::size_t max_batch = 1;
  friend bool operator==(const Hello&, const Hello&) = default;
};

struct Score {
  std::uint64_t id = 0;
  ScoreRequest request;
  friend bool operator==(const Score&, const Score&) = default;
};

struct Result {
  std::uint64_t id = 0;
  ScoreResponse response;
  friend bool operator==(const Result& a, const Result& b) {
    if (a.id != b.id || a.response.ok() != b.response.ok()) return false;
    if (a.response.ok()) {
      const double x = a.response.result->log_probability, y = b.response.result->log_probability;
      return x == y || (std::isnan(x) && std::isnan(y));
    }
    return a.response.error->code == b.response.error->code && a.response.error->message == b.response.error->message;
  }
};

struct CurvePoint {
  std::string label;
  std::uint64_t batch_index = 0;
  double perplexity = 0.0;
  friend bool operator==(const CurvePoint&, const CurvePoint&) = default;
};

struct ErrorNotice {
  std::string message;
  std::size_t offset = 0;
  friend bool operator==(const ErrorNotice&, const ErrorNotice&) = default;
};

using Message = std::variant<Hello, Score, Result, CurvePoint, ErrorNotice>;

namespace detail {

inline nlohmann::json logprob_json(double lp) {
  if (std::isinf(lp) && lp < 0) return nullptr;
  return lp;
}

struct Encoder {
  nlohmann::json operator()(const Hello& h) const {
    nlohmann::json modes = nlohmann::json::array();
    for (auto m : h.modes) modes.push_back(std::string(to_string(m)));
    return {{"type", "hello"}, {"scorer", h.scorer_id}, {"modes", modes}, {"vocab_digest", h.vocabulary_digest},
            {"max_batch", h.max_batch}};
  }
  nlohmann::json operator()(const Score& s) const {
    return {{"type", "score"},         {"id", s.id},
            {"mode", std::string(to_string(s.request.mode))},
            {"left", s.request.left_context}, {"target", s.request.target},
            {"right", s.request.right_context}};
  }
  nlohmann::json operator()(const Result& r) const {
    nlohmann::json j = {{"type", "result"}, {"id", r.id}};
    if (r.response.ok())
      j["logprob"] = logprob_json(r.response.result->log_probability);
    else
      j["error"] = {{"code", std::string(to_string(r.response.error->code))}, {"message", r.response.error->message}};
    return j;
  }
  nlohmann::json operator()(const CurvePoint& c) const {
    return {{"type", "curve"}, {"label", c.label}, {"batch", c.batch_index}, {"perplexity", c.perplexity}};
  }
  nlohmann::json operator()(const ErrorNotice& e) const {
    return {{"type", "error"}, {"message", e.message}, {"offset", e.offset}};
  }
};

}  // namespace detail

// One JSON object, no trailing newline.
inline std::string encode(const Message& m) { return std::visit(detail::Encoder{}, m).dump(); }

// `offset` is the byte position of the line within its stream; reported
// error offsets are absolute.
inline Message decode(std::string_view line, std::size_t offset = 0) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line.begin(), line.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw ProtocolError(std::string("malformed message: ") + e.what(), offset + (e.byte > 0 ? e.byte - 1 : 0));
  }
  if (!j.is_object()) throw ProtocolError("message is not a JSON object", offset);
  try {
    std::string type = j.value("type", std::string{});
    if (type.empty()) {
      if (j.contains("target")) type = "score";
      else if (j.contains("modes")) type = "hello";
      else if (j.contains("id") && (j.contains("logprob") || j.contains("error"))) type = "result";
      else if (j.contains("perplexity")) type = "curve";
      else throw ProtocolError("cannot infer message type", offset);
    }
    if (type == "hello") {
      Hello h;
      h.scorer_id = j.at("scorer").get<std::string>();
      for (const auto& m : j.at("modes")) h.modes.push_back(parse_mode(m.get<std::string>()));
      if (h.modes.empty()) throw ProtocolError("hello advertises no scoring mode", offset);
      h.vocabulary_digest = j.value("vocab_digest", std::string{});
      h.max_batch = j.value("max_batch", std::size_t{1});
      if (h.max_batch == 0) throw ProtocolError("max_batch must be positive", offset);
      return h;
    }
    if (type == "score") {
      Score s;
      s.id = j.at("id").get<std::uint64_t>();
      s.request.mode = parse_mode(j.value("mode", std::string("causal")));
      s.request.left_context = j.value("left", std::vector<std::string>{});
      s.request.target = j.at("target").get<std::string>();
      s.request.right_context = j.value("right", std::vector<std::string>{});
      return s;
    }
    if (type == "result") {
      Result r;
      r.id = j.at("id").get<std::uint64_t>();
      if (j.contains("error") && !j["error"].is_null()) {
        const auto& e = j["error"];
        r.response = ScoreResponse::failure(parse_error_code(e.value("code", std::string("internal"))),
                                            e.value("message", std::string{}));
      } else {
        const auto& lp = j.at("logprob");
        r.response = ScoreResponse::success(lp.is_null() ? -std::numeric_limits<double>::infinity() : lp.get<double>());
      }
      return r;
    }
    if (type == "curve") {
      return CurvePoint{j.at("label").get<std::string>(), j.at("batch").get<std::uint64_t>(),
                        j.at("perplexity").get<double>()};
    }
    if (type == "error") return ErrorNotice{j.value("message", std::string{}), j.value("offset", std::size_t{0})};
    throw ProtocolError("unknown message type '" + type + "'", offset);
  } catch (const nlohmann::json::exception& e) {
    throw ProtocolError(std::string("invalid message: ") + e.what(), offset);
  } catch (const ValidationError& e) {
    throw ProtocolError(e.what(), offset);
  }
}

// ---------------------------------------------------------------------------
// Server

template <ProbabilityScorer S>
class Server {
 public:
  Server(S& scorer, std::string vocabulary_digest) : scorer_(&scorer), digest_(std::move(vocabulary_digest)) {}

  std::string hello_line() const {
    Hello h{scorer_->id(), {}, digest_, scorer_->max_batch()};
    for (auto m : {ScoreMode::causal, ScoreMode::masked})
      if (scorer_->supports(m)) h.modes.push_back(m);
    return encode(h);
  }

  // Reply to one input line; malformed input yields an error notice and
  // leaves the session usable.
  std::string handle_line(std::string_view line, std::size_t offset) {
    Message m;
    try {
      m = decode(line, offset);
    } catch (const ProtocolError& e) {
      return encode(ErrorNotice{e.what(), e.byte_offset()});
    }
    if (auto* s = std::get_if<Score>(&m)) {
      ScoreResponse resp;
      try {
        auto out = scorer_->score_batch(std::span<const ScoreRequest>(&s->request, 1));
        resp = out.at(0);
      } catch (const std::exception& e) {
        resp = ScoreResponse::failure(ScoreErrorCode::internal, e.what());
      }
      return encode(Result{s->id, std::move(resp)});
    }
    return encode(ErrorNotice{"server only accepts score messages", offset});
  }

 private:
  S* scorer_;
  std::string digest_;
};

// Serves until `in` reaches end of file. Output is flushed whenever no
// further input is immediately available.
template <ProbabilityScorer S>
void serve(S& scorer, std::string vocabulary_digest, std::istream& in, std::ostream& out) {
  Server<S> server(scorer, std::move(vocabulary_digest));
  out << server.hello_line() << '\n' << std::flush;
  std::string line;
  std::size_t offset = 0;
  while (std::getline(in, line)) {
    const std::size_t line_offset = offset;
    offset += line.size() + 1;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    out << server.handle_line(line, line_offset) << '\n';
    if (in.rdbuf()->in_avail() <= 0) out.flush();
  }
  out.flush();
}

// ---------------------------------------------------------------------------
// Client side

class LineChannel {
 public:
  virtual ~LineChannel() = default;
  virtual void write_line(std::string_view line) = 0;
  virtual void flush() {}
  // False on end of stream.
  virtual bool read_line(std::string& line) = 0;
};

// Child process spoken to over its stdin/stdout. The child's stdin is closed
// on destruction, which ends a well-behaved server.
class ChildProcessChannel final : public LineChannel {
 public:
  explicit ChildProcessChannel(const std::string& command) {
    ::signal(SIGPIPE, SIG_IGN);
    int to_child[2], from_child[2];
    if (::pipe(to_child) != 0) throw SessionError("pipe failed: " + std::string(std::strerror(errno)));
    if (::pipe(from_child) != 0) {
      ::close(to_child[0]);
      ::close(to_child[1]);
      throw SessionError("pipe failed: " + std::string(std::strerror(errno)));
    }
    pid_ = ::fork();
    if (pid_ < 0) throw SessionError("fork failed: " + std::string(std::strerror(errno)));
    if (pid_ == 0) {
      ::dup2(to_child[0], STDIN_FILENO);
      ::dup2(from_child[1], STDOUT_FILENO);
      ::close(to_child[0]);
      ::close(to_child[1]);
      ::close(from_child[0]);
      ::close(from_child[1]);
      ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
      ::_exit(127);
    }
    ::close(to_child[0]);
    ::close(from_child[1]);
    write_fd_ = to_child[1];
    read_fd_ = from_child[0];
    ::fcntl(write_fd_, F_SETFD, FD_CLOEXEC);
    ::fcntl(read_fd_, F_SETFD, FD_CLOEXEC);
  }

  ChildProcessChannel(const ChildProcessChannel&) = delete;
  ChildProcessChannel& operator=(const ChildProcessChannel&) = delete;

  ~ChildProcessChannel() override {
    if (write_fd_ >= 0) ::close(write_fd_);
    if (read_fd_ >= 0) ::close(read_fd_);
    if (pid_ > 0) {
      int status = 0;
      ::waitpid(pid_, &status, 0);
    }
  }

  void write_line(std::string_view line) override {
    pending_.append(line);
    pending_.push_back('\n');
    if (pending_.size() >= 1 << 16) flush();
  }

  void flush() override {
    std::size_t done = 0;
    while (done < pending_.size()) {
      const ssize_t n = ::write(write_fd_, pending_.data() + done, pending_.size() - done);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw SessionError("scorer process closed its input: " + std::string(std::strerror(errno)));
      }
      done += static_cast<std::size_t>(n);
    }
    pending_.clear();
  }

  bool read_line(std::string& line) override {
    for (;;) {
      const auto nl = buffer_.find('\n', start_);
      if (nl != std::string::npos) {
        line.assign(buffer_, start_, nl - start_);
        start_ = nl + 1;
        if (start_ > (1 << 16)) {
          buffer_.erase(0, start_);
          start_ = 0;
        }
        return true;
      }
      char chunk[1 << 14];
      const ssize_t n = ::read(read_fd_, chunk, sizeof chunk);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw SessionError("read from scorer failed: " + std::string(std::strerror(errno)));
      }
      if (n == 0) return false;
      buffer_.append(chunk, static_cast<std::size_t>(n));
    }
  }

 private:
  pid_t pid_ = -1;
  int write_fd_ = -1;
  int read_fd_ = -1;
  std::string pending_;
  std::string buffer_;
  std::size_t start_ = 0;
};

// In-process channel that answers through a Server; useful for tests and
// for checking transport independence without spawning a process.
template <ProbabilityScorer S>
class LoopbackChannel final : public LineChannel {
 public:
  LoopbackChannel(S& scorer, std::string digest) : server_(scorer, std::move(digest)) {
    replies_.push_back(server_.hello_line());
  }
  void write_line(std::string_view line) override {
    replies_.push_back(server_.handle_line(line, offset_));
    offset_ += line.size() + 1;
  }
  bool read_line(std::string& line) override {
    if (replies_.empty()) return false;
    line = std::move(replies_.front());
    replies_.pop_front();
    return true;
  }

 private:
  Server<S> server_;
  std::deque<std::string> replies_;
  std::size_t offset_ = 0;
};

// ProbabilityScorer backed by a protocol session.
class RemoteScorer {
 public:
  explicit RemoteScorer(std::unique_ptr<LineChannel> channel, std::size_t pipeline_limit = 256)
      : channel_(std::move(channel)), pipeline_limit_(pipeline_limit) {
    std::string line;
    if (!channel_->read_line(line)) throw SessionError("scorer exited before its hello message");
    auto m = decode(line, 0);
    auto* h = std::get_if<Hello>(&m);
    if (!h) throw ProtocolError("first message from scorer is not a hello", 0);
    hello_ = *h;
    offset_ = line.size() + 1;
  }

  // "remote:" prefix optional; the rest is a shell command.
  static RemoteScorer spawn(std::string_view endpoint) {
    if (endpoint.starts_with("remote:")) endpoint.remove_prefix(7);
    return RemoteScorer(std::make_unique<ChildProcessChannel>(std::string(endpoint)));
  }

  std::string id() const { return hello_.scorer_id; }
  bool supports(ScoreMode m) const {
    return std::find(hello_.modes.begin(), hello_.modes.end(), m) != hello_.modes.end();
  }
  std::size_t max_batch() const { return hello_.max_batch; }
  const Hello& hello() const noexcept { return hello_; }

  // Pipelines at most min(max_batch, pipeline_limit) requests at a time and
  // re-sequences the replies by id.
  std::vector<ScoreResponse> score_batch(std::span<const ScoreRequest> requests) {
    std::vector<ScoreResponse> out(requests.size());
    const std::size_t window = std::max<std::size_t>(1, std::min(hello_.max_batch, pipeline_limit_));
    for (std::size_t begin = 0; begin < requests.size(); begin += window) {
      const std::size_t len = std::min(window, requests.size() - begin);
      std::unordered_map<std::uint64_t, std::size_t> slot;
      for (std::size_t i = 0; i < len; ++i) {
        const std::uint64_t id = next_id_++;
        slot.emplace(id, begin + i);
        channel_->write_line(encode(Score{id, requests[begin + i]}));
      }
      channel_->flush();
      std::size_t received = 0;
      std::string line;
      while (received < len) {
        if (!channel_->read_line(line)) throw SessionError("scorer session ended with requests outstanding");
        const std::size_t at = offset_;
        offset_ += line.size() + 1;
        auto m = decode(line, at);
        if (auto* notice = std::get_if<ErrorNotice>(&m)) throw ProtocolError("scorer rejected a message: " + notice->message, at);
        auto* r = std::get_if<Result>(&m);
        if (!r) throw ProtocolError("expected a result message", at);
        auto it = slot.find(r->id);
        if (it == slot.end()) throw ProtocolError("result for unknown request id " + std::to_string(r->id), at);
        out[it->second] = std::move(r->response);
        slot.erase(it);
        ++received;
      }
    }
    return out;
  }

 private:
  std::unique_ptr<LineChannel> channel_;
  std::size_t pipeline_limit_;
  Hello hello_;
  std::uint64_t next_id_ = 1;
  std::size_t offset_ = 0;
};

}  // namespace minpair::protocol
