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

#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "minpair/builtin_grammars.hpp"
#include "minpair/cfg.hpp"
#include "minpair/error.hpp"

namespace minpair {

enum class PhenomenonId { atb, pg, tte };

inline std::string_view to_string(PhenomenonId id) noexcept {
  switch (id) {
    case PhenomenonId::atb: return "ATB";
    case PhenomenonId::pg: return "PG";
    case PhenomenonId::tte: return "TTE";
  }
  return "ATB";
}

inline PhenomenonId parse_phenomenon(std::string_view s) {
  std::string lower;
  for (char c : s) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (lower == "atb") return PhenomenonId::atb;
  if (lower == "pg") return PhenomenonId::pg;
  if (lower == "tte") return PhenomenonId::tte;
  throw ValidationError("unknown phenomenon '" + std::string(s) + "' (expected atb, pg or tte)");
}

inline std::string_view builtin_grammar_source(PhenomenonId id) noexcept {
  switch (id) {
    case PhenomenonId::atb: return grammars::kAcrossTheBoard;
    case PhenomenonId::pg: return grammars::kParasiticGap;
    case PhenomenonId::tte: return grammars::kThatTrace;
  }
  return grammars::kAcrossTheBoard;
}

// Parsed once per process; the returned reference is immutable.
inline const GrammarSpec& builtin_grammar(PhenomenonId id) {
  static const GrammarSpec atb = parse_grammar(grammars::kAcrossTheBoard);
  static const GrammarSpec pg = parse_grammar(grammars::kParasiticGap);
  static const GrammarSpec tte = parse_grammar(grammars::kThatTrace);
  switch (id) {
    case PhenomenonId::atb: return atb;
    case PhenomenonId::pg: return pg;
    case PhenomenonId::tte: return tte;
  }
  return atb;
}

// Draws n records with pairwise-distinct token sequences. Small requests
// use rejection over sample_paradigm(seed, 0), (seed, 1), ...; requests
// covering more than half the space (or rejection that stalls) draw
// derivation ordinals from a seeded permutation instead.
inline std::vector<MinimalPairRecord> generate_dataset(const GrammarSpec& g, std::size_t n, std::uint64_t seed) {
  const std::uint64_t space = g.space_size();
  if (n > space)
    throw ValidationError("requested " + std::to_string(n) + " pairs but the " + g.phenomenon +
                          " grammar only has " + std::to_string(space) + " distinct tuples");
  std::vector<MinimalPairRecord> out;
  out.reserve(n);
  std::unordered_set<std::string> seen;
  auto accept = [&](MinimalPairRecord rec) {
    if (!seen.insert(rec.surface_key()).second) return;
    rec.seed = seed;
    rec.index = out.size();
    out.push_back(std::move(rec));
  };

  if (2 * static_cast<std::uint64_t>(n) <= space) {
    const std::uint64_t budget = 64 * static_cast<std::uint64_t>(n) + 1024;
    for (std::uint64_t draw = 0; out.size() < n && draw < budget; ++draw) accept(sample_paradigm(g, seed, draw));
  }
  if (out.size() < n) {
    detail::StreamRng rng(seed, ~std::uint64_t{0});
    std::unordered_map<std::uint64_t, std::uint64_t> swapped;
    auto at = [&](std::uint64_t i) {
      auto it = swapped.find(i);
      return it == swapped.end() ? i : it->second;
    };
    for (std::uint64_t i = 0; out.size() < n && i < space; ++i) {
      const std::uint64_t j = i + rng.below(space - i);
      const std::uint64_t vi = at(i), vj = at(j);
      swapped[i] = vj;
      swapped[j] = vi;
      accept(paradigm_at(g, vj, seed));
    }
  }
  if (out.size() < n)
    throw ValidationError("grammar " + g.phenomenon + " renders fewer than " + std::to_string(n) +
                          " distinct tuples");
  return out;
}

inline std::vector<MinimalPairRecord> generate_dataset(PhenomenonId id, std::size_t n, std::uint64_t seed) {
  return generate_dataset(builtin_grammar(id), n, seed);
}

// Drops single-terminal alternatives of critical nonterminals whose token is
// not in `vocabulary`, so every target can be scored by that model.
inline GrammarSpec filter_targets(const GrammarSpec& g, const std::unordered_set<std::string>& vocabulary) {
  std::unordered_set<std::string> critical;
  for (const auto& [name, alts] : g.rules)
    for (const auto& alt : alts)
      for (const auto& sym : alt.symbols)
        if (sym.critical && sym.kind == Symbol::Kind::nonterminal) critical.insert(sym.name);
  GrammarSpec out = g;
  for (const auto& nt : critical) {
    auto& alts = out.rules.at(nt);
    std::erase_if(alts, [&](const Alternative& alt) {
      return alt.symbols.size() == 1 && alt.symbols[0].kind == Symbol::Kind::terminal &&
             !vocabulary.contains(std::string(detail::trim(alt.symbols[0].name)));
    });
    if (alts.empty()) throw ValidationError("no target of '" + nt + "' is in the scorer vocabulary");
  }
  out.validate();
  return out;
}

// ---------------------------------------------------------------------------
// JSON Lines

inline nlohmann::json to_json(const MinimalPairRecord& r) {
  nlohmann::json j;
  j["pair_id"] = r.pair_id();
  j["phenomenon"] = r.phenomenon;
  j["seed"] = r.seed;
  j["index"] = r.index;
  if (r.criterion)
    j["criterion"] = {{"grammatical", r.criterion->grammatical}, {"ungrammatical", r.criterion->ungrammatical}};
  auto& conds = j["conditions"] = nlohmann::json::array();
  for (const auto& inst : r.instances) {
    nlohmann::json c;
    c["condition"] = inst.condition;
    c["grammatical"] = inst.grammatical;
    c["text"] = inst.text();
    c["tokens"] = inst.sentence.tokens;
    c["critical"] = inst.critical ? nlohmann::json(*inst.critical) : nlohmann::json(nullptr);
    c["spillover"] = inst.spillover_start ? nlohmann::json(*inst.spillover_start) : nlohmann::json(nullptr);
    auto& spans = c["slot_spans"] = nlohmann::json::array();
    for (const auto& sp : inst.condition_spans) spans.push_back({sp.begin, sp.end});
    conds.push_back(std::move(c));
  }
  j["choices"] = r.shared_choices;
  return j;
}

inline MinimalPairRecord record_from_json(const nlohmann::json& j) {
  try {
    MinimalPairRecord r;
    r.phenomenon = j.at("phenomenon").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.index = j.at("index").get<std::uint64_t>();
    if (j.contains("criterion"))
      r.criterion = CriterionSpec{j["criterion"].at("grammatical").get<std::string>(),
                                  j["criterion"].at("ungrammatical").get<std::string>()};
    for (const auto& c : j.at("conditions")) {
      ParadigmInstance inst;
      inst.condition = c.at("condition").get<std::string>();
      inst.grammatical = c.at("grammatical").get<bool>();
      inst.sentence.tokens = c.at("tokens").get<std::vector<std::string>>();
      if (c.contains("critical") && !c["critical"].is_null()) inst.critical = c["critical"].get<std::size_t>();
      if (c.contains("spillover") && !c["spillover"].is_null())
        inst.spillover_start = c["spillover"].get<std::size_t>();
      if (c.contains("slot_spans"))
        for (const auto& sp : c["slot_spans"]) {
          TokenSpan span{sp.at(0).get<std::size_t>(), sp.at(1).get<std::size_t>()};
          if (span.begin > span.end || span.end > inst.sentence.size())
            throw ValidationError("slot span out of range in " + r.pair_id());
          inst.condition_spans.push_back(span);
        }
      if (inst.critical && *inst.critical >= inst.sentence.size())
        throw ValidationError("critical index out of range in " + r.pair_id());
      r.instances.push_back(std::move(inst));
    }
    if (j.contains("choices")) r.shared_choices = j["choices"].get<std::map<std::string, int>>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed dataset record: ") + e.what());
  }
}

inline void write_jsonl(std::ostream& out, const std::vector<MinimalPairRecord>& records) {
  for (const auto& r : records) out << to_json(r).dump() << '\n';
}

inline std::vector<MinimalPairRecord> read_jsonl(std::istream& in) {
  std::vector<MinimalPairRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ValidationError("dataset line " + std::to_string(lineno) + ": " + e.what());
    }
    out.push_back(record_from_json(j));
  }
  return out;
}

inline void save_jsonl(const std::string& path, const std::vector<MinimalPairRecord>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write dataset '" + path + "'");
  write_jsonl(out, records);
}

inline std::vector<MinimalPairRecord> load_jsonl(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open dataset '" + path + "'");
  return read_jsonl(in);
}

}  // namespace minpair
