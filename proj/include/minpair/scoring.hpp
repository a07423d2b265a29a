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

// Minimal-pair criterion evaluation. Probabilities are read off the single
// critical token: causal scorers see the left context only, masked scorers
// the whole sentence (spillover included) with the target masked. A pair
// succeeds iff log P(grammatical) > log P(ungrammatical); ties fail.

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "minpair/cfg.hpp"
#include "minpair/detail/util.hpp"
#include "minpair/error.hpp"
#include "minpair/paradigms.hpp"
#include "minpair/scorer.hpp"

namespace minpair {

struct CriterionOutcome {
  std::string pair_id;
  std::uint64_t seed = 0;
  double p_grammatical = 0.0;
  double p_ungrammatical = 0.0;
  bool success = false;
};

inline bool criterion_success(double p_grammatical, double p_ungrammatical) noexcept {
  return p_grammatical > p_ungrammatical;
}

struct AccuracyReport {
  std::string phenomenon;
  std::string scorer_id;
  std::vector<std::uint64_t> seeds;
  std::vector<double> per_seed;  // successes / pairs, aligned with seeds
  double mean = 0.0;
};

struct EvaluationResult {
  AccuracyReport report;
  std::vector<CriterionOutcome> outcomes;
};

inline ScoreRequest critical_request(const ParadigmInstance& inst, ScoreMode mode) {
  if (!inst.critical) throw ValidationError("condition '" + inst.condition + "' has no critical token");
  const auto c = static_cast<std::ptrdiff_t>(*inst.critical);
  const auto& toks = inst.sentence.tokens;
  ScoreRequest r;
  r.mode = mode;
  r.left_context.assign(toks.begin(), toks.begin() + c);
  r.target = toks.at(static_cast<std::size_t>(c));
  if (mode == ScoreMode::masked) r.right_context.assign(toks.begin() + c + 1, toks.end());
  return r;
}

template <ProbabilityScorer S>
ScoreMode preferred_mode(const S& scorer) {
  if (scorer.supports(ScoreMode::causal)) return ScoreMode::causal;
  if (scorer.supports(ScoreMode::masked)) return ScoreMode::masked;
  throw ValidationError("scorer " + std::string(scorer.id()) + " supports no scoring mode");
}

// The compared members must agree on every token before the critical one.
inline void check_left_context(const MinimalPairRecord& rec) {
  if (!rec.criterion) throw ValidationError("record " + rec.pair_id() + " has no criterion");
  const auto& a = rec.grammatical();
  const auto& b = rec.ungrammatical();
  if (!a.critical || !b.critical || *a.critical != *b.critical ||
      !std::equal(a.sentence.tokens.begin(), a.sentence.tokens.begin() + static_cast<std::ptrdiff_t>(*a.critical),
                  b.sentence.tokens.begin()))
    throw IntegrityError("record " + rec.pair_id() + ": compared conditions do not share a left context");
}

template <ProbabilityScorer S>
ScoreResult score_critical_region(const MinimalPairRecord& rec, std::string_view condition, S& scorer) {
  return score_one(scorer, critical_request(rec.instance(condition), preferred_mode(scorer)));
}

template <ProbabilityScorer S>
CriterionOutcome evaluate_pair(const MinimalPairRecord& rec, S& scorer) {
  check_left_context(rec);
  const ScoreMode mode = preferred_mode(scorer);
  CriterionOutcome o;
  o.pair_id = rec.pair_id();
  o.seed = rec.seed;
  try {
    o.p_grammatical = score_one(scorer, critical_request(rec.grammatical(), mode)).log_probability;
    o.p_ungrammatical = score_one(scorer, critical_request(rec.ungrammatical(), mode)).log_probability;
  } catch (const OovError& e) {
    throw OovError(e.token(), "pair " + o.pair_id);
  }
  o.success = criterion_success(o.p_grammatical, o.p_ungrammatical);
  return o;
}

// Batched form of evaluate_pair over many records; results keep record order.
template <ProbabilityScorer S>
std::vector<CriterionOutcome> evaluate_records(std::span<const MinimalPairRecord> records, S& scorer) {
  const ScoreMode mode = preferred_mode(scorer);
  std::vector<ScoreRequest> requests;
  requests.reserve(records.size() * 2);
  for (const auto& rec : records) {
    check_left_context(rec);
    requests.push_back(critical_request(rec.grammatical(), mode));
    requests.push_back(critical_request(rec.ungrammatical(), mode));
  }
  const std::size_t batch = std::max<std::size_t>(1, scorer.max_batch());
  std::vector<double> lp(requests.size());
  for (std::size_t begin = 0; begin < requests.size(); begin += batch) {
    const std::size_t len = std::min(batch, requests.size() - begin);
    auto responses = scorer.score_batch(std::span<const ScoreRequest>(requests).subspan(begin, len));
    if (responses.size() != len) throw Error("scorer " + std::string(scorer.id()) + " returned a short batch");
    for (std::size_t i = 0; i < len; ++i) {
      const auto& r = responses[i];
      if (r.ok()) {
        lp[begin + i] = r.result->log_probability;
        continue;
      }
      const auto& rec = records[(begin + i) / 2];
      if (r.error->code == ScoreErrorCode::oov) throw OovError(requests[begin + i].target, "pair " + rec.pair_id());
      throw Error("pair " + rec.pair_id() + ": " + r.error->message);
    }
  }
  std::vector<CriterionOutcome> out;
  out.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    const double g = lp[2 * i], u = lp[2 * i + 1];
    out.push_back({records[i].pair_id(), records[i].seed, g, u, criterion_success(g, u)});
  }
  return out;
}

inline double accuracy_of(std::span<const CriterionOutcome> outcomes) {
  if (outcomes.empty()) return 0.0;
  const auto ok = std::count_if(outcomes.begin(), outcomes.end(), [](const auto& o) { return o.success; });
  return static_cast<double>(ok) / static_cast<double>(outcomes.size());
}

inline double mean_of(const std::vector<double>& xs) {
  if (xs.empty()) return 0.0;
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

// Evaluates records already grouped by seed (e.g. read back from JSONL).
template <ProbabilityScorer S>
EvaluationResult evaluate_by_seed(std::span<const MinimalPairRecord> records, S& scorer,
                                  std::span<const std::uint64_t> seeds = {}) {
  std::map<std::uint64_t, std::vector<MinimalPairRecord>> groups;
  for (const auto& r : records)
    if (seeds.empty() || std::find(seeds.begin(), seeds.end(), r.seed) != seeds.end()) groups[r.seed].push_back(r);
  if (groups.empty()) throw ValidationError("no records to evaluate for the requested seeds");
  EvaluationResult res;
  res.report.phenomenon = groups.begin()->second.front().phenomenon;
  res.report.scorer_id = scorer.id();
  std::vector<std::uint64_t> order;
  if (seeds.empty())
    for (const auto& [seed, _] : groups) order.push_back(seed);
  else
    order.assign(seeds.begin(), seeds.end());
  for (std::uint64_t seed : order) {
    auto it = groups.find(seed);
    if (it == groups.end()) throw ValidationError("dataset has no records for seed " + std::to_string(seed));
    auto outcomes = evaluate_records(std::span<const MinimalPairRecord>(it->second), scorer);
    res.report.seeds.push_back(seed);
    res.report.per_seed.push_back(accuracy_of(outcomes));
    res.outcomes.insert(res.outcomes.end(), outcomes.begin(), outcomes.end());
  }
  res.report.mean = mean_of(res.report.per_seed);
  return res;
}

// Regenerates an n-pair dataset per seed and evaluates it.
template <ProbabilityScorer S>
EvaluationResult run_evaluation(const GrammarSpec& g, S& scorer, std::span<const std::uint64_t> seeds, std::size_t n) {
  if (seeds.empty()) throw ValidationError("run_evaluation needs at least one seed");
  EvaluationResult res;
  res.report.phenomenon = g.phenomenon;
  res.report.scorer_id = scorer.id();
  for (std::uint64_t seed : seeds) {
    const auto records = generate_dataset(g, n, seed);
    auto outcomes = evaluate_records(std::span<const MinimalPairRecord>(records), scorer);
    res.report.seeds.push_back(seed);
    res.report.per_seed.push_back(accuracy_of(outcomes));
    res.outcomes.insert(res.outcomes.end(), outcomes.begin(), outcomes.end());
  }
  res.report.mean = mean_of(res.report.per_seed);
  return res;
}

template <ProbabilityScorer S>
EvaluationResult run_evaluation(PhenomenonId id, S& scorer, std::span<const std::uint64_t> seeds, std::size_t n) {
  return run_evaluation(builtin_grammar(id), scorer, seeds, n);
}

// ---------------------------------------------------------------------------
// CSV

inline void write_outcomes_csv(std::ostream& out, std::span<const CriterionOutcome> outcomes) {
  out << "pair_id,seed,p_gram,p_ungram,success\n";
  for (const auto& o : outcomes)
    out << o.pair_id << ',' << o.seed << ',' << detail::format_double(o.p_grammatical) << ','
        << detail::format_double(o.p_ungrammatical) << ',' << (o.success ? 1 : 0) << '\n';
}

inline void write_accuracy_csv(std::ostream& out, std::span<const AccuracyReport> reports) {
  out << "phenomenon,scorer,seed,accuracy\n";
  for (const auto& r : reports)
    for (std::size_t i = 0; i < r.seeds.size(); ++i)
      out << r.phenomenon << ',' << r.scorer_id << ',' << r.seeds[i] << ',' << detail::format_double(r.per_seed[i])
          << '\n';
}

// Groups rows by (phenomenon, scorer) in first-appearance order.
inline std::vector<AccuracyReport> read_accuracy_csv(std::istream& in) {
  std::vector<AccuracyReport> reports;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (lineno == 1) {
      if (line != "phenomenon,scorer,seed,accuracy") throw ValidationError("unexpected accuracy CSV header '" + line + "'");
      continue;
    }
    if (line.empty()) continue;
    auto f = detail::split(line, ',');
    if (f.size() != 4) throw ValidationError("accuracy CSV line " + std::to_string(lineno) + " needs 4 fields");
    auto it = std::find_if(reports.begin(), reports.end(),
                           [&](const AccuracyReport& r) { return r.phenomenon == f[0] && r.scorer_id == f[1]; });
    if (it == reports.end()) {
      reports.push_back({f[0], f[1], {}, {}, 0.0});
      it = std::prev(reports.end());
    }
    try {
      it->seeds.push_back(std::stoull(f[2]));
      it->per_seed.push_back(detail::parse_double(f[3]));
    } catch (const std::exception&) {
      throw ValidationError("accuracy CSV line " + std::to_string(lineno) + " has a bad number");
    }
  }
  for (auto& r : reports) r.mean = mean_of(r.per_seed);
  return reports;
}

inline std::string report_bytes(const AccuracyReport& r) {
  std::ostringstream os;
  write_accuracy_csv(os, std::span<const AccuracyReport>(&r, 1));
  os << "mean," << detail::format_double(r.mean) << '\n';
  return os.str();
}

}  // namespace minpair
