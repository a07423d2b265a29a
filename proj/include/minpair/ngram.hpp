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

// Add-k smoothed n-gram language model with uniform backoff for unseen
// contexts, incremental training, and validation-perplexity learning curves.
//
// Each sentence is padded with (order - 1) start symbols and closed by one
// end symbol; the end symbol counts as a predicted token in perplexity.
// Tokens outside the model vocabulary are mapped to <unk> when training and
// when computing perplexity, but a scoring request for an unknown target is
// an OOV error.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstring>
#include <cstdint>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "minpair/corpus.hpp"
#include "minpair/detail/util.hpp"
#include "minpair/error.hpp"
#include "minpair/scorer.hpp"

namespace minpair {

inline constexpr std::string_view kBosToken = "<s>";
inline constexpr std::string_view kEosToken = "</s>";

struct NGramOptions {
  std::size_t order = 3;
  double k = 1.0;
  bool boundaries = true;
};

class Vocabulary {
 public:
  using Id = std::uint32_t;

  Id add(std::string_view token) {
    if (auto it = ids_.find(std::string(token)); it != ids_.end()) return it->second;
    const Id id = static_cast<Id>(tokens_.size());
    tokens_.emplace_back(token);
    ids_.emplace(tokens_.back(), id);
    return id;
  }
  std::optional<Id> find(std::string_view token) const {
    auto it = ids_.find(std::string(token));
    if (it == ids_.end()) return std::nullopt;
    return it->second;
  }
  bool contains(std::string_view token) const { return find(token).has_value(); }
  const std::string& token(Id id) const { return tokens_.at(id); }
  std::size_t size() const noexcept { return tokens_.size(); }
  const std::vector<std::string>& tokens() const noexcept { return tokens_; }

  // Order-independent digest of the token set.
  std::string digest() const {
    std::vector<std::string> sorted = tokens_;
    std::sort(sorted.begin(), sorted.end());
    detail::Fnv1a h;
    for (const auto& t : sorted) {
      h.update(t);
      h.update(std::string_view("\n", 1));
    }
    return h.hex();
  }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, Id> ids_;
};

class NGramModel {
 public:
  using Id = Vocabulary::Id;

  // `vocabulary` lists the word types; <unk> and the boundary symbols are
  // added here.
  NGramModel(NGramOptions options, const std::vector<std::string>& vocabulary) : options_(options) {
    if (options_.order < 1) throw ValidationError("n-gram order must be at least 1");
    if (!(options_.k >= 0) || std::isinf(options_.k)) throw ValidationError("smoothing constant k must be finite and >= 0");
    for (const auto& t : vocabulary) vocab_.add(t);
    unk_ = vocab_.add(kUnkToken);
    if (options_.boundaries) {
      eos_ = vocab_.add(kEosToken);
      bos_ = vocab_.add(kBosToken);
    }
  }

  const NGramOptions& options() const noexcept { return options_; }
  const Vocabulary& vocabulary() const noexcept { return vocab_; }

  // Size of the predicted vocabulary (the start symbol is never predicted).
  std::size_t prediction_size() const noexcept { return vocab_.size() - (bos_ ? 1 : 0); }

  bool predicts(std::string_view token) const {
    auto id = vocab_.find(token);
    return id && id != bos_;
  }

  void add_sentence(const Sentence& s) {
    auto ids = encode(s.tokens);
    std::vector<Id> history = initial_history();
    auto observe = [&](Id next) {
      auto& cc = counts_[context_key(history)];
      ++cc.total;
      ++cc.next[next];
      history.push_back(next);
    };
    for (Id id : ids) observe(id);
    if (eos_) observe(*eos_);
    ++sentences_;
  }

  void add_corpus(const Corpus& c) {
    for (const auto& s : c.sentences) add_sentence(s);
  }

  std::size_t sentences_seen() const noexcept { return sentences_; }

  // log P(target | last order-1 tokens of left_context); throws OovError.
  double log_prob(std::span<const std::string> left_context, std::string_view target) const {
    auto id = vocab_.find(target);
    if (!id || id == bos_) throw OovError(std::string(target), "n-gram vocabulary");
    std::vector<Id> history = initial_history();
    for (const auto& t : left_context) history.push_back(encode_one(t));
    return log_prob_ids(history, *id);
  }

  // Full conditional distribution over the predicted vocabulary, indexed by
  // vocabulary id (start symbol entry is 0).
  std::vector<double> distribution(std::span<const std::string> left_context) const {
    std::vector<Id> history = initial_history();
    for (const auto& t : left_context) history.push_back(encode_one(t));
    std::vector<double> p(vocab_.size(), 0.0);
    for (Id id = 0; id < vocab_.size(); ++id)
      if (id != bos_) p[id] = std::exp(log_prob_ids(history, id));
    return p;
  }

  // Sum of -log P over the sentence's tokens (and end symbol); unknown
  // tokens are scored as <unk>.
  double sentence_nll(const Sentence& s, std::size_t& predicted) const {
    return static_cast<double>(sentence_nll_ext(s, predicted));
  }

  // exp(mean negative log-probability per predicted token). Sentences are
  // scored in parallel and summed in corpus order. Accumulation runs in
  // extended precision so a uniform model reports exactly |V|.
  double perplexity(const Corpus& c, unsigned threads = 1) const {
    if (c.sentences.empty()) throw ValidationError("perplexity of an empty corpus");
    std::vector<long double> nll(c.sentences.size());
    std::vector<std::size_t> counts(c.sentences.size());
    detail::parallel_for(c.sentences.size(), threads, [&](std::size_t b, std::size_t e) {
      for (std::size_t i = b; i < e; ++i) nll[i] = sentence_nll_ext(c.sentences[i], counts[i]);
    });
    detail::CompensatedSum<long double> total;
    std::size_t n = 0;
    for (std::size_t i = 0; i < nll.size(); ++i) {
      total.add(nll[i]);
      n += counts[i];
    }
    if (n == 0) throw ValidationError("perplexity over zero predicted tokens");
    return static_cast<double>(std::exp(total.value() / static_cast<long double>(n)));
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["format"] = "minpair-ngram";
    j["version"] = 1;
    j["order"] = options_.order;
    j["k"] = options_.k;
    j["boundaries"] = options_.boundaries;
    j["sentences"] = sentences_;
    j["vocabulary"] = vocab_.tokens();
    std::map<std::string, const ContextCounts*> sorted;
    for (const auto& [key, cc] : counts_) sorted.emplace(key, &cc);
    auto& contexts = j["contexts"] = nlohmann::json::array();
    for (const auto& [key, cc] : sorted) {
      std::map<Id, std::uint64_t> next(cc->next.begin(), cc->next.end());
      nlohmann::json pairs = nlohmann::json::array();
      for (const auto& [id, n] : next) pairs.push_back({id, n});
      contexts.push_back({{"context", decode_key(key)}, {"next", std::move(pairs)}});
    }
    return j;
  }

  static NGramModel from_json(const nlohmann::json& j) {
    try {
      if (j.at("format") != "minpair-ngram" || j.at("version") != 1)
        throw ValidationError("not a minpair n-gram model (format/version mismatch)");
      NGramOptions o{j.at("order").get<std::size_t>(), j.at("k").get<double>(), j.at("boundaries").get<bool>()};
      const auto vocab = j.at("vocabulary").get<std::vector<std::string>>();
      NGramModel m(o, vocab);
      if (m.vocab_.size() != vocab.size()) throw ValidationError("model vocabulary is inconsistent");
      m.sentences_ = j.value("sentences", std::size_t{0});
      for (const auto& c : j.at("contexts")) {
        const auto ctx = c.at("context").get<std::vector<Id>>();
        if (ctx.size() > o.order - 1) throw ValidationError("model context longer than order - 1");
        for (Id id : ctx)
          if (id >= m.vocab_.size()) throw ValidationError("model context references unknown token id");
        auto& cc = m.counts_[m.context_key(ctx)];
        for (const auto& pair : c.at("next")) {
          const Id id = pair.at(0).get<Id>();
          const auto n = pair.at(1).get<std::uint64_t>();
          if (id >= m.vocab_.size()) throw ValidationError("model count references unknown token id");
          cc.next[id] += n;
          cc.total += n;
        }
      }
      return m;
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(std::string("malformed n-gram model: ") + e.what());
    }
  }

  void save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write model '" + path + "'");
    out << to_json().dump() << '\n';
  }

  static NGramModel load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open model '" + path + "'");
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::parse_error& e) {
      throw ValidationError("model '" + path + "': " + e.what());
    }
    return from_json(j);
  }

 private:
  struct ContextCounts {
    std::uint64_t total = 0;
    std::unordered_map<Id, std::uint64_t> next;
  };

  std::vector<Id> initial_history() const {
    std::vector<Id> h;
    if (bos_) h.assign(options_.order - 1, *bos_);
    return h;
  }

  Id encode_one(std::string_view t) const {
    auto id = vocab_.find(t);
    return id && id != eos_ && id != bos_ ? *id : unk_;
  }

  std::vector<Id> encode(const std::vector<std::string>& tokens) const {
    std::vector<Id> ids;
    ids.reserve(tokens.size());
    for (const auto& t : tokens) ids.push_back(encode_one(t));
    return ids;
  }

  // Last (order - 1) ids of the history, packed as bytes.
  std::string context_key(std::span<const Id> history) const {
    const std::size_t n = std::min(history.size(), options_.order - 1);
    std::string key(n * sizeof(Id), '\0');
    std::memcpy(key.data(), history.data() + (history.size() - n), key.size());
    return key;
  }

  static std::vector<Id> decode_key(const std::string& key) {
    std::vector<Id> ids(key.size() / sizeof(Id));
    std::memcpy(ids.data(), key.data(), ids.size() * sizeof(Id));
    return ids;
  }

  long double sentence_nll_ext(const Sentence& s, std::size_t& predicted) const {
    auto ids = encode(s.tokens);
    if (eos_) ids.push_back(*eos_);
    std::vector<Id> history = initial_history();
    detail::CompensatedSum<long double> nll;
    for (Id id : ids) {
      nll.add(-log_prob_ids<long double>(history, id));
      history.push_back(id);
    }
    predicted = ids.size();
    return nll.value();
  }

  template <std::floating_point T = double>
  T log_prob_ids(std::span<const Id> history, Id target) const {
    const T v = static_cast<T>(prediction_size());
    auto it = counts_.find(context_key(history));
    if (it == counts_.end() || it->second.total == 0) return -std::log(v);
    const auto& cc = it->second;
    auto hit = cc.next.find(target);
    const T c = hit == cc.next.end() ? T(0) : static_cast<T>(hit->second);
    const T num = c + static_cast<T>(options_.k);
    if (num == 0) return -std::numeric_limits<T>::infinity();
    return std::log(num) - std::log(static_cast<T>(cc.total) + static_cast<T>(options_.k) * v);
  }

  NGramOptions options_;
  Vocabulary vocab_;
  Id unk_ = 0;
  std::optional<Id> eos_;
  std::optional<Id> bos_;
  std::unordered_map<std::string, ContextCounts> counts_;
  std::size_t sentences_ = 0;
};

// Word types of the corpus in first-occurrence order.
inline std::vector<std::string> corpus_types(const Corpus& c) {
  std::vector<std::string> types;
  std::unordered_set<std::string_view> seen;
  for (const auto& s : c.sentences)
    for (const auto& t : s.tokens)
      if (seen.insert(t).second) types.push_back(t);
  return types;
}

inline NGramModel train_ngram(const Corpus& corpus, NGramOptions options = {}) {
  if (corpus.sentences.empty()) throw ValidationError("cannot train on an empty corpus");
  NGramModel m(options, corpus_types(corpus));
  m.add_corpus(corpus);
  return m;
}

// Causal scorer backed by an n-gram model.
class NGramScorer {
 public:
  explicit NGramScorer(const NGramModel& model, std::string id = "ngram") : model_(&model), id_(std::move(id)) {}

  std::string id() const { return id_; }
  bool supports(ScoreMode m) const { return m == ScoreMode::causal; }
  std::size_t max_batch() const { return 4096; }
  const NGramModel& model() const noexcept { return *model_; }

  std::vector<ScoreResponse> score_batch(std::span<const ScoreRequest> requests) const {
    std::vector<ScoreResponse> out;
    out.reserve(requests.size());
    for (const auto& r : requests) {
      if (r.mode != ScoreMode::causal) {
        out.push_back(ScoreResponse::failure(ScoreErrorCode::unsupported_mode, "n-gram scorer is causal only"));
      } else if (!model_->predicts(r.target)) {
        out.push_back(ScoreResponse::failure(ScoreErrorCode::oov, "target '" + r.target + "' not in vocabulary"));
      } else {
        out.push_back(ScoreResponse::success(model_->log_prob(r.left_context, r.target)));
      }
    }
    return out;
  }

 private:
  const NGramModel* model_;
  std::string id_;
};

// ---------------------------------------------------------------------------
// Learning curves

struct PerplexityPoint {
  std::uint64_t batch_index = 0;
  double perplexity = 0.0;
  friend bool operator==(const PerplexityPoint&, const PerplexityPoint&) = default;
};

struct LearningCurve {
  std::string label;
  std::vector<PerplexityPoint> points;
  friend bool operator==(const LearningCurve&, const LearningCurve&) = default;
};

struct CurveOptions {
  NGramOptions model;
  std::size_t chunk = 10;        // sentences per batch
  std::size_t eval_every = 200;  // batches between evaluations
  unsigned threads = 1;
};

// Trains incrementally, `chunk` sentences per batch (a short final batch
// still counts), and records validation perplexity after every
// `eval_every`-th batch. The vocabulary is fixed to the training types up
// front so every point is measured over the same outcome space.
inline LearningCurve learning_curve(const Corpus& train, const Corpus& valid, const CurveOptions& opt,
                                    std::string label) {
  if (opt.chunk < 1 || opt.eval_every < 1) throw ValidationError("chunk and eval_every must be at least 1");
  if (valid.sentences.empty()) throw ValidationError("validation split is empty");
  if (train.sentences.empty()) throw ValidationError("training split is empty");
  NGramModel model(opt.model, corpus_types(train));
  LearningCurve curve{std::move(label), {}};
  std::uint64_t batch = 0;
  for (std::size_t begin = 0; begin < train.sentences.size(); begin += opt.chunk) {
    const std::size_t end = std::min(train.sentences.size(), begin + opt.chunk);
    for (std::size_t i = begin; i < end; ++i) model.add_sentence(train.sentences[i]);
    ++batch;
    if (batch % opt.eval_every == 0) curve.points.push_back({batch, model.perplexity(valid, opt.threads)});
  }
  return curve;
}

// Truncates every curve to the smallest final batch index among them.
inline std::vector<LearningCurve> align_curves(std::vector<LearningCurve> curves) {
  if (curves.empty()) throw ValidationError("align_curves needs at least one curve");
  std::uint64_t limit = std::numeric_limits<std::uint64_t>::max();
  for (const auto& c : curves) limit = std::min(limit, c.points.empty() ? 0 : c.points.back().batch_index);
  for (auto& c : curves)
    std::erase_if(c.points, [&](const PerplexityPoint& p) { return p.batch_index > limit; });
  return curves;
}

inline void write_curves_csv(std::ostream& out, const std::vector<LearningCurve>& curves) {
  out << "batch_index,perplexity,label\n";
  for (const auto& c : curves)
    for (const auto& p : c.points) out << p.batch_index << ',' << detail::format_double(p.perplexity) << ',' << c.label << '\n';
}

inline std::vector<LearningCurve> read_curves_csv(std::istream& in) {
  std::vector<LearningCurve> curves;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (lineno == 1) {
      if (line != "batch_index,perplexity,label") throw ValidationError("unexpected curve CSV header '" + line + "'");
      continue;
    }
    if (line.empty()) continue;
    const auto first = line.find(',');
    const auto second = first == std::string::npos ? first : line.find(',', first + 1);
    if (second == std::string::npos) throw ValidationError("curve CSV line " + std::to_string(lineno) + " is malformed");
    PerplexityPoint p;
    try {
      p.batch_index = std::stoull(line.substr(0, first));
      p.perplexity = detail::parse_double(std::string_view(line).substr(first + 1, second - first - 1));
    } catch (const std::exception&) {
      throw ValidationError("curve CSV line " + std::to_string(lineno) + " has a bad number");
    }
    const std::string label = line.substr(second + 1);
    auto it = std::find_if(curves.begin(), curves.end(), [&](const LearningCurve& c) { return c.label == label; });
    if (it == curves.end()) {
      curves.push_back({label, {}});
      it = std::prev(curves.end());
    }
    if (!it->points.empty() && it->points.back().batch_index >= p.batch_index)
      throw ValidationError("curve '" + label + "' batch indices are not increasing");
    it->points.push_back(p);
  }
  return curves;
}

}  // namespace minpair
