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

// The probability-scorer contract shared by the in-process n-gram model,
// remote protocol scorers, and test doubles.

#include <cmath>
#include <concepts>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "minpair/error.hpp"

namespace minpair {

enum class ScoreMode { causal, masked };

inline std::string_view to_string(ScoreMode m) noexcept { return m == ScoreMode::causal ? "causal" : "masked"; }

inline ScoreMode parse_mode(std::string_view s) {
  if (s == "causal") return ScoreMode::causal;
  if (s == "masked") return ScoreMode::masked;
  throw ValidationError("unknown scoring mode '" + std::string(s) + "'");
}

// In causal mode only the left context is consulted. In masked mode the
// scorer sees the whole sentence with the target position masked.
struct ScoreRequest {
  ScoreMode mode = ScoreMode::causal;
  std::vector<std::string> left_context;
  std::string target;
  std::vector<std::string> right_context;

  friend bool operator==(const ScoreRequest&, const ScoreRequest&) = default;
};

// Natural-log probability; -inf when the scorer assigns zero probability.
struct ScoreResult {
  double log_probability = 0.0;
};

enum class ScoreErrorCode { oov, unsupported_mode, internal };

inline std::string_view to_string(ScoreErrorCode c) noexcept {
  switch (c) {
    case ScoreErrorCode::oov: return "oov";
    case ScoreErrorCode::unsupported_mode: return "unsupported_mode";
    case ScoreErrorCode::internal: return "internal";
  }
  return "internal";
}

inline ScoreErrorCode parse_error_code(std::string_view s) noexcept {
  if (s == "oov") return ScoreErrorCode::oov;
  if (s == "unsupported_mode") return ScoreErrorCode::unsupported_mode;
  return ScoreErrorCode::internal;
}

struct ScoreError {
  ScoreErrorCode code = ScoreErrorCode::internal;
  std::string message;
};

// Per-request outcome of a batch; one failed request never voids the rest.
struct ScoreResponse {
  std::optional<ScoreResult> result;
  std::optional<ScoreError> error;

  bool ok() const noexcept { return result.has_value(); }
  static ScoreResponse success(double lp) { return {ScoreResult{lp}, std::nullopt}; }
  static ScoreResponse failure(ScoreErrorCode code, std::string message) {
    return {std::nullopt, ScoreError{code, std::move(message)}};
  }
};

template <class S>
concept ProbabilityScorer = requires(S& s, const S& cs, std::span<const ScoreRequest> requests) {
  { cs.id() } -> std::convertible_to<std::string>;
  { cs.supports(ScoreMode::causal) } -> std::same_as<bool>;
  { cs.max_batch() } -> std::convertible_to<std::size_t>;
  { s.score_batch(requests) } -> std::same_as<std::vector<ScoreResponse>>;
};

// Single-request convenience; throws OovError for an out-of-vocabulary target.
template <ProbabilityScorer S>
ScoreResult score_one(S& scorer, const ScoreRequest& request) {
  auto responses = scorer.score_batch(std::span<const ScoreRequest>(&request, 1));
  auto& r = responses.at(0);
  if (r.ok()) return *r.result;
  if (r.error->code == ScoreErrorCode::oov) throw OovError(request.target, r.error->message);
  throw Error("scorer " + std::string(scorer.id()) + ": " + r.error->message);
}

// Assigns 1/|V| to every in-vocabulary target regardless of context.
class UniformScorer {
 public:
  explicit UniformScorer(std::unordered_set<std::string> vocabulary, std::string id = "uniform")
      : vocabulary_(std::move(vocabulary)), id_(std::move(id)) {
    if (vocabulary_.empty()) throw ValidationError("uniform scorer needs a non-empty vocabulary");
  }

  std::string id() const { return id_; }
  bool supports(ScoreMode) const { return true; }
  std::size_t max_batch() const { return 1024; }
  const std::unordered_set<std::string>& vocabulary() const noexcept { return vocabulary_; }

  std::vector<ScoreResponse> score_batch(std::span<const ScoreRequest> requests) const {
    std::vector<ScoreResponse> out;
    out.reserve(requests.size());
    const double lp = -std::log(static_cast<double>(vocabulary_.size()));
    for (const auto& r : requests) {
      if (!vocabulary_.contains(r.target))
        out.push_back(ScoreResponse::failure(ScoreErrorCode::oov, "target '" + r.target + "' not in vocabulary"));
      else
        out.push_back(ScoreResponse::success(lp));
    }
    return out;
  }

 private:
  std::unordered_set<std::string> vocabulary_;
  std::string id_;
};

}  // namespace minpair
