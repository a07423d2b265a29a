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

// Condition-paired generation from finite context-free grammars.
//
// Grammar file syntax (one rule per line, '#' starts a comment line):
//
//   %phenomenon ATB
//   %start S
//   %spillover SPILLOVER
//   %condition +filler+gap G=+ grammatical
//   %condition +filler-gap G=- ungrammatical
//   %criterion +filler+gap > +filler-gap
//   S    -> <PREAMBLE> <±G> <SPILLOVER>
//   <+G> -> <VP> !<ADV>
//   <-G> -> <VP> !<OBJ> <ADV>
//   <ADV> -> 'soon' | 'today' {2.0}
//       | 'now'
//
// Nonterminals are written <NAME> or bare NAME. Terminals are quoted and may
// hold several whitespace-separated tokens; '' is the empty string. <±X>
// (or <+-X>) is a condition slot that expands to <+X> or <-X> depending on
// the condition's sign for dimension X. A '!' prefix marks the critical
// symbol, which must yield exactly one token. A trailing {w} sets a sampling
// weight. Several rules may share a line when separated by ';', and a line
// starting with '|' continues the previous rule.
//
// Nonterminal occurrences are identified by their path from the start
// symbol, and occurrences with the same path in the +X and -X variants of a
// slot are the same choice point. A single assignment of choice points
// therefore renders every condition with identical shared material.

#include <algorithm>
#include <cctype>
#include <concepts>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <type_traits>
#include <unordered_map>
#include <utility>
#include <vector>

#include "minpair/corpus.hpp"
#include "minpair/detail/util.hpp"
#include "minpair/error.hpp"

namespace minpair {

struct Symbol {
  enum class Kind { nonterminal, terminal, slot };
  Kind kind = Kind::terminal;
  std::string name;  // nonterminal name, terminal text, or slot dimension
  bool critical = false;

  friend bool operator==(const Symbol&, const Symbol&) = default;
};

struct Alternative {
  std::vector<Symbol> symbols;
  double weight = 1.0;
};

struct ConditionSpec {
  std::string label;
  std::map<std::string, char> signs;  // slot dimension -> '+' or '-'
  bool grammatical = true;
};

// The criterion compares the critical-region probability of `grammatical`
// against that of `ungrammatical`.
struct CriterionSpec {
  std::string grammatical;
  std::string ungrammatical;
};

inline std::string variant_name(char sign, std::string_view dimension) {
  return std::string(1, sign) + std::string(dimension);
}

namespace detail {

struct ChoiceNode {
  std::string key;
  std::string nonterminal;
  std::vector<std::vector<std::size_t>> children;  // per alternative
  std::vector<std::uint64_t> alternative_counts;
  std::vector<double> weights;
  bool uniform = true;
  std::uint64_t count = 0;
};

struct ChoicePlan {
  std::vector<ChoiceNode> nodes;
  std::unordered_map<std::string, std::size_t> by_key;
  std::size_t root = 0;
};

inline std::uint64_t checked_mul(std::uint64_t a, std::uint64_t b) {
  if (a != 0 && b > (std::uint64_t{1} << 62) / a)
    throw ValidationError("grammar derivation space exceeds 2^62");
  return a * b;
}

inline std::uint64_t checked_add(std::uint64_t a, std::uint64_t b) {
  if (a > (std::uint64_t{1} << 62) - b) throw ValidationError("grammar derivation space exceeds 2^62");
  return a + b;
}

}  // namespace detail

// Per-node alternative index; -1 for nodes the derivation does not reach.
using ChoiceAssignment = std::vector<int>;

class GrammarSpec {
 public:
  std::string phenomenon = "custom";
  std::string start;
  std::map<std::string, std::vector<Alternative>> rules;
  std::vector<ConditionSpec> conditions;
  std::optional<CriterionSpec> criterion;
  std::optional<std::string> spillover;

  // Checks every structural constraint and builds the choice plan. Must be
  // called again after any edit to the public fields.
  void validate();

  bool validated() const noexcept { return plan_ != nullptr; }
  const detail::ChoicePlan& plan() const {
    if (!plan_) throw ValidationError("grammar has not been validated");
    return *plan_;
  }

  const ConditionSpec& condition(std::string_view label) const {
    for (const auto& c : conditions)
      if (c.label == label) return c;
    throw ValidationError("unknown condition '" + std::string(label) + "'");
  }

  std::set<std::string> dimensions() const {
    std::set<std::string> dims;
    for (const auto& [name, alts] : rules)
      for (const auto& alt : alts)
        for (const auto& sym : alt.symbols)
          if (sym.kind == Symbol::Kind::slot) dims.insert(sym.name);
    return dims;
  }

  // Number of distinct choice assignments (sum over alternatives of the
  // product of child spaces). For grammars without nested alternatives this
  // is the product of alternative counts over the free nonterminals.
  std::uint64_t space_size() const { return plan().nodes[plan().root].count; }

 private:
  std::set<char> signs_used(const std::string& dimension) const {
    std::set<char> out;
    for (const auto& c : conditions) out.insert(c.signs.at(dimension));
    return out;
  }
  void check_references() const;
  void check_acyclic() const;
  void check_conditions() const;
  void check_critical() const;
  std::size_t build_node(detail::ChoicePlan& plan, const std::string& key, const std::string& nt) const;
  void collect_children(const std::vector<Symbol>& symbols, const std::string& prefix,
                        std::vector<std::pair<std::string, std::string>>& out) const;

  std::shared_ptr<const detail::ChoicePlan> plan_;
};

// ---------------------------------------------------------------------------
// Parsing

namespace detail {

inline bool is_name_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

class RuleLexer {
 public:
  RuleLexer(std::string_view text, std::size_t line) : text_(text), line_(line) {}

  // Parses `alt ('|' alt)*` until end of input.
  std::vector<Alternative> alternatives() {
    std::vector<Alternative> alts;
    alts.push_back(alternative());
    while (skip_space(), pos_ < text_.size()) {
      if (text_[pos_] != '|') fail("expected '|'");
      ++pos_;
      alts.push_back(alternative());
    }
    return alts;
  }

  static std::string parse_lhs(std::string_view lhs, std::size_t line) {
    lhs = trim(lhs);
    if (lhs.size() >= 2 && lhs.front() == '<' && lhs.back() == '>') lhs = lhs.substr(1, lhs.size() - 2);
    std::string name;
    if (!lhs.empty() && (lhs.front() == '+' || lhs.front() == '-')) {
      name.push_back(lhs.front());
      lhs.remove_prefix(1);
    }
    if (lhs.empty()) throw GrammarSyntaxError(line, "empty left-hand side");
    for (char c : lhs)
      if (!is_name_char(c)) throw GrammarSyntaxError(line, "invalid nonterminal name '" + std::string(lhs) + "'");
    return name + std::string(lhs);
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw GrammarSyntaxError(line_, msg + " at column " + std::to_string(pos_ + 1));
  }

  void skip_space() {
    while (pos_ < text_.size() && is_space(text_[pos_])) ++pos_;
  }

  Alternative alternative() {
    Alternative alt;
    bool saw_weight = false;
    for (;;) {
      skip_space();
      if (pos_ >= text_.size() || text_[pos_] == '|') break;
      if (saw_weight) fail("weight must be the last item of an alternative");
      if (text_[pos_] == '{') {
        const auto close = text_.find('}', pos_);
        if (close == std::string_view::npos) fail("unterminated weight");
        try {
          alt.weight = parse_double(trim(text_.substr(pos_ + 1, close - pos_ - 1)));
        } catch (const std::invalid_argument&) {
          fail("invalid weight");
        }
        if (!(alt.weight > 0)) fail("weight must be positive");
        pos_ = close + 1;
        saw_weight = true;
        continue;
      }
      alt.symbols.push_back(symbol());
    }
    if (alt.symbols.empty()) fail("empty alternative (use '' for the empty string)");
    return alt;
  }

  Symbol symbol() {
    Symbol sym;
    if (text_[pos_] == '!') {
      sym.critical = true;
      ++pos_;
      if (pos_ >= text_.size()) fail("dangling '!'");
    }
    const char c = text_[pos_];
    if (c == '\'' || c == '"') {
      const auto close = text_.find(c, pos_ + 1);
      if (close == std::string_view::npos) fail("unterminated terminal");
      sym.kind = Symbol::Kind::terminal;
      sym.name = std::string(text_.substr(pos_ + 1, close - pos_ - 1));
      pos_ = close + 1;
      return sym;
    }
    if (c == '<') {
      const auto close = text_.find('>', pos_ + 1);
      if (close == std::string_view::npos) fail("unterminated '<'");
      std::string_view inner = text_.substr(pos_ + 1, close - pos_ - 1);
      pos_ = close + 1;
      for (std::string_view prefix : {"±", "+-", "+/-"}) {
        if (inner.starts_with(prefix)) {
          sym.kind = Symbol::Kind::slot;
          inner.remove_prefix(prefix.size());
          break;
        }
      }
      if (sym.kind != Symbol::Kind::slot) {
        sym.kind = Symbol::Kind::nonterminal;
        if (!inner.empty() && (inner.front() == '+' || inner.front() == '-')) {
          sym.name.push_back(inner.front());
          inner.remove_prefix(1);
        }
      }
      if (inner.empty()) fail("empty symbol name");
      for (char ch : inner)
        if (!is_name_char(ch)) fail("invalid symbol name '" + std::string(inner) + "'");
      sym.name += std::string(inner);
      return sym;
    }
    if (is_name_char(c)) {
      const auto begin = pos_;
      while (pos_ < text_.size() && is_name_char(text_[pos_])) ++pos_;
      sym.kind = Symbol::Kind::nonterminal;
      sym.name = std::string(text_.substr(begin, pos_ - begin));
      return sym;
    }
    fail(std::string("unexpected character '") + c + "'");
  }

  std::string_view text_;
  std::size_t line_;
  std::size_t pos_ = 0;
};

// Splits on ';' outside quotes.
inline std::vector<std::string_view> split_statements(std::string_view line) {
  std::vector<std::string_view> out;
  char quote = 0;
  std::size_t start = 0;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quote) {
      if (c == quote) quote = 0;
    } else if (c == '\'' || c == '"') {
      quote = c;
    } else if (c == ';') {
      out.push_back(line.substr(start, i - start));
      start = i + 1;
    }
  }
  out.push_back(line.substr(start));
  return out;
}

}  // namespace detail

inline GrammarSpec parse_grammar(std::string_view text) {
  GrammarSpec g;
  std::string last_lhs;
  std::size_t lineno = 0;
  std::size_t begin = 0;
  while (begin <= text.size()) {
    auto end = text.find('\n', begin);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = detail::trim(text.substr(begin, end - begin));
    begin = end + 1;
    ++lineno;
    if (line.empty() || line.front() == '#') {
      if (end == text.size()) break;
      continue;
    }
    if (line.front() == '%') {
      auto words = detail::split_whitespace(line.substr(1));
      if (words.empty()) throw GrammarSyntaxError(lineno, "empty directive");
      const std::string& d = words[0];
      auto need = [&](std::size_t n) {
        if (words.size() != n) throw GrammarSyntaxError(lineno, "%" + d + " expects " + std::to_string(n - 1) + " argument(s)");
      };
      if (d == "phenomenon") {
        need(2);
        g.phenomenon = words[1];
      } else if (d == "start") {
        need(2);
        g.start = detail::RuleLexer::parse_lhs(words[1], lineno);
      } else if (d == "spillover") {
        need(2);
        g.spillover = detail::RuleLexer::parse_lhs(words[1], lineno);
      } else if (d == "criterion") {
        need(4);
        if (words[2] != ">") throw GrammarSyntaxError(lineno, "%criterion expects GRAMMATICAL > UNGRAMMATICAL");
        g.criterion = CriterionSpec{words[1], words[3]};
      } else if (d == "condition") {
        if (words.size() < 3) throw GrammarSyntaxError(lineno, "%condition expects LABEL DIM=SIGN... STATUS");
        ConditionSpec c;
        c.label = words[1];
        const std::string& status = words.back();
        if (status == "grammatical") c.grammatical = true;
        else if (status == "ungrammatical") c.grammatical = false;
        else throw GrammarSyntaxError(lineno, "condition status must be grammatical or ungrammatical");
        for (std::size_t i = 2; i + 1 < words.size(); ++i) {
          const auto& w = words[i];
          const auto eq = w.find('=');
          if (eq == std::string::npos || eq == 0 || eq + 2 != w.size() || (w.back() != '+' && w.back() != '-'))
            throw GrammarSyntaxError(lineno, "condition sign must look like DIM=+ or DIM=-");
          c.signs[w.substr(0, eq)] = w.back();
        }
        g.conditions.push_back(std::move(c));
      } else {
        throw GrammarSyntaxError(lineno, "unknown directive %" + d);
      }
    } else if (line.front() == '|') {
      if (last_lhs.empty()) throw GrammarSyntaxError(lineno, "continuation line without a rule");
      auto more = detail::RuleLexer(line.substr(1), lineno).alternatives();
      auto& alts = g.rules[last_lhs];
      alts.insert(alts.end(), more.begin(), more.end());
    } else {
      for (std::string_view stmt : detail::split_statements(line)) {
        stmt = detail::trim(stmt);
        if (stmt.empty()) continue;
        const auto arrow = stmt.find("->");
        if (arrow == std::string_view::npos) throw GrammarSyntaxError(lineno, "expected '->'");
        const std::string lhs = detail::RuleLexer::parse_lhs(stmt.substr(0, arrow), lineno);
        auto alts = detail::RuleLexer(stmt.substr(arrow + 2), lineno).alternatives();
        auto& slot = g.rules[lhs];
        slot.insert(slot.end(), alts.begin(), alts.end());
        if (g.start.empty()) g.start = lhs;
        last_lhs = lhs;
      }
    }
    if (end == text.size()) break;
  }
  if (g.rules.empty()) throw GrammarSyntaxError(lineno, "grammar has no rules");
  g.validate();
  return g;
}

// ---------------------------------------------------------------------------
// Validation and choice-plan construction

inline void GrammarSpec::check_references() const {
  if (!rules.contains(start)) throw ValidationError("start symbol '" + start + "' has no rule");
  for (const auto& [name, alts] : rules) {
    if (alts.empty()) throw ValidationError("nonterminal '" + name + "' has no alternatives");
    for (const auto& alt : alts)
      for (const auto& sym : alt.symbols) {
        if (sym.kind == Symbol::Kind::nonterminal && !rules.contains(sym.name))
          throw ValidationError("unknown nonterminal '" + sym.name + "' referenced by '" + name + "'");
        if (sym.kind == Symbol::Kind::slot)
          for (char sign : {'+', '-'})
            if (!rules.contains(variant_name(sign, sym.name)) && !conditions.empty()) {
              // Variants only need to exist for signs some condition selects.
              bool used = false;
              for (const auto& c : conditions) {
                auto it = c.signs.find(sym.name);
                used |= it != c.signs.end() && it->second == sign;
              }
              if (used)
                throw ValidationError("condition slot '" + sym.name + "' has no variant <" +
                                      variant_name(sign, sym.name) + ">");
            }
      }
  }
  if (spillover && !rules.contains(*spillover))
    throw ValidationError("spillover nonterminal '" + *spillover + "' has no rule");
  for (const auto& d : dimensions())
    for (char sign : signs_used(d))
      if (rules.at(variant_name(sign, d)).size() != 1)
        throw ValidationError("condition variant <" + variant_name(sign, d) + "> must have exactly one alternative");
}

inline void GrammarSpec::check_acyclic() const {
  enum class Mark { none, active, done };
  std::map<std::string, Mark> marks;
  std::function<void(const std::string&)> visit = [&](const std::string& nt) {
    auto& m = marks[nt];
    if (m == Mark::done) return;
    if (m == Mark::active) throw ValidationError("grammar is recursive through '" + nt + "'");
    m = Mark::active;
    for (const auto& alt : rules.at(nt))
      for (const auto& sym : alt.symbols) {
        if (sym.kind == Symbol::Kind::nonterminal) visit(sym.name);
        if (sym.kind == Symbol::Kind::slot)
          for (char sign : {'+', '-'})
            if (rules.contains(variant_name(sign, sym.name))) visit(variant_name(sign, sym.name));
      }
    marks[nt] = Mark::done;
  };
  for (const auto& [name, alts] : rules) visit(name);
}

inline void GrammarSpec::check_conditions() const {
  const auto dims = dimensions();
  if (conditions.empty() && !dims.empty())
    throw ValidationError("grammar uses condition slots but declares no %condition");
  std::set<std::string> labels;
  for (const auto& c : conditions) {
    if (!labels.insert(c.label).second) throw ValidationError("duplicate condition '" + c.label + "'");
    for (const auto& d : dims)
      if (!c.signs.contains(d))
        throw ValidationError("condition '" + c.label + "' does not assign dimension '" + d + "'");
    for (const auto& [d, sign] : c.signs)
      if (!dims.contains(d)) throw ValidationError("condition '" + c.label + "' assigns unknown dimension '" + d + "'");
  }
  if (criterion) {
    const auto& gram = condition(criterion->grammatical);
    const auto& ungram = condition(criterion->ungrammatical);
    if (!gram.grammatical || ungram.grammatical)
      throw ValidationError("criterion must compare a grammatical condition against an ungrammatical one");
  }
}

inline void GrammarSpec::check_critical() const {
  bool any_critical = false;
  for (const auto& [name, alts] : rules)
    for (const auto& alt : alts)
      for (const auto& sym : alt.symbols) any_critical |= sym.critical;
  if (!any_critical) {
    if (criterion) throw ValidationError("a grammar with a %criterion must mark its critical symbol with '!'");
    return;
  }

  struct Stats {
    std::size_t min_len, max_len, min_crit, max_crit;
  };
  const ConditionSpec none{};
  std::vector<const ConditionSpec*> conds;
  for (const auto& c : conditions) conds.push_back(&c);
  if (conds.empty()) conds.push_back(&none);

  for (const ConditionSpec* cond : conds) {
    std::map<std::string, Stats> memo;
    std::function<Stats(const std::string&)> of_nt;
    auto of_symbol = [&](const Symbol& sym) -> Stats {
      Stats s{};
      if (sym.kind == Symbol::Kind::terminal) {
        const auto n = detail::split_whitespace(sym.name).size();
        s = {n, n, 0, 0};
      } else if (sym.kind == Symbol::Kind::nonterminal) {
        s = of_nt(sym.name);
      } else {
        s = of_nt(variant_name(cond->signs.at(sym.name), sym.name));
      }
      if (sym.critical) {
        if (s.min_len != 1 || s.max_len != 1)
          throw ValidationError("critical symbol '" + sym.name + "' must always yield exactly one token");
        if (s.max_crit != 0) throw ValidationError("critical symbol '" + sym.name + "' contains another critical symbol");
        s.min_crit = s.max_crit = 1;
      }
      return s;
    };
    of_nt = [&](const std::string& nt) -> Stats {
      if (auto it = memo.find(nt); it != memo.end()) return it->second;
      Stats acc{SIZE_MAX, 0, SIZE_MAX, 0};
      for (const auto& alt : rules.at(nt)) {
        Stats sum{0, 0, 0, 0};
        for (const auto& sym : alt.symbols) {
          const Stats s = of_symbol(sym);
          sum.min_len += s.min_len;
          sum.max_len += s.max_len;
          sum.min_crit += s.min_crit;
          sum.max_crit += s.max_crit;
        }
        acc.min_len = std::min(acc.min_len, sum.min_len);
        acc.max_len = std::max(acc.max_len, sum.max_len);
        acc.min_crit = std::min(acc.min_crit, sum.min_crit);
        acc.max_crit = std::max(acc.max_crit, sum.max_crit);
      }
      memo[nt] = acc;
      return acc;
    };
    const Stats root = of_nt(start);
    if (root.min_crit != 1 || root.max_crit != 1)
      throw ValidationError("every derivation of condition '" + cond->label +
                            "' must contain exactly one critical symbol");
    if (root.min_len == 0) throw ValidationError("condition '" + cond->label + "' can derive an empty sentence");
  }
}

inline void GrammarSpec::collect_children(const std::vector<Symbol>& symbols, const std::string& prefix,
                                          std::vector<std::pair<std::string, std::string>>& out) const {
  std::map<std::string, std::size_t> occurrences;
  for (const auto& sym : symbols) {
    if (sym.kind == Symbol::Kind::terminal) continue;
    const std::string tag = sym.kind == Symbol::Kind::slot ? "±" + sym.name : sym.name;
    const std::string key = prefix + "/" + tag + "#" + std::to_string(occurrences[tag]++);
    if (sym.kind == Symbol::Kind::nonterminal) {
      bool seen = false;
      for (const auto& [k, nt] : out) seen |= k == key;
      if (!seen) out.emplace_back(key, sym.name);
    } else {
      for (char sign : signs_used(sym.name))
        collect_children(rules.at(variant_name(sign, sym.name)).front().symbols, key, out);
    }
  }
}

inline std::size_t GrammarSpec::build_node(detail::ChoicePlan& plan, const std::string& key,
                                           const std::string& nt) const {
  if (auto it = plan.by_key.find(key); it != plan.by_key.end()) return it->second;
  const std::size_t id = plan.nodes.size();
  plan.nodes.push_back({key, nt, {}, {}, {}, true, 0});
  plan.by_key.emplace(key, id);
  const auto& alts = rules.at(nt);
  std::vector<std::vector<std::size_t>> children;
  std::vector<std::uint64_t> counts;
  std::vector<double> weights;
  std::uint64_t total = 0;
  for (const auto& alt : alts) {
    std::vector<std::pair<std::string, std::string>> keyed;
    collect_children(alt.symbols, key, keyed);
    std::vector<std::size_t> ids;
    std::uint64_t product = 1;
    for (const auto& [child_key, child_nt] : keyed) {
      const std::size_t child = build_node(plan, child_key, child_nt);
      ids.push_back(child);
      product = detail::checked_mul(product, plan.nodes[child].count);
    }
    children.push_back(std::move(ids));
    counts.push_back(product);
    weights.push_back(alt.weight);
    total = detail::checked_add(total, product);
  }
  auto& node = plan.nodes[id];
  node.children = std::move(children);
  node.alternative_counts = std::move(counts);
  node.uniform = std::all_of(weights.begin(), weights.end(), [&](double w) { return w == weights.front(); });
  node.weights = std::move(weights);
  node.count = total;
  return id;
}

inline void GrammarSpec::validate() {
  plan_.reset();
  if (start.empty() && !rules.empty()) start = rules.begin()->first;
  if (conditions.empty() && criterion) throw ValidationError("%criterion requires declared conditions");
  check_conditions();
  check_references();
  check_acyclic();
  check_critical();
  auto plan = std::make_shared<detail::ChoicePlan>();
  plan->root = build_node(*plan, start, start);
  plan_ = std::move(plan);
}

// ---------------------------------------------------------------------------
// Records

struct TokenSpan {
  std::size_t begin = 0;
  std::size_t end = 0;
  friend bool operator==(const TokenSpan&, const TokenSpan&) = default;
};

struct ParadigmInstance {
  std::string condition;
  Sentence sentence;
  std::optional<std::size_t> critical;         // single critical token index
  std::optional<std::size_t> spillover_start;  // spillover runs to sentence end
  bool grammatical = true;
  std::vector<TokenSpan> condition_spans;  // material produced inside condition slots

  const std::string& critical_token() const { return sentence.tokens.at(critical.value()); }

  // Display form: first letter capitalized, tokens untouched.
  std::string text() const {
    std::string out = sentence.to_line();
    if (!out.empty()) out[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(out[0])));
    return out;
  }

  friend bool operator==(const ParadigmInstance&, const ParadigmInstance&) = default;
};

struct MinimalPairRecord {
  std::string phenomenon;
  std::uint64_t seed = 0;
  std::uint64_t index = 0;
  std::vector<ParadigmInstance> instances;           // one per declared condition
  std::map<std::string, int> shared_choices;         // choice-point key -> alternative
  std::optional<CriterionSpec> criterion;

  std::string pair_id() const {
    return phenomenon + "-" + std::to_string(seed) + "-" + std::to_string(index);
  }

  const ParadigmInstance& instance(std::string_view condition) const {
    for (const auto& i : instances)
      if (i.condition == condition) return i;
    throw ValidationError("record " + pair_id() + " has no condition '" + std::string(condition) + "'");
  }
  const ParadigmInstance& grammatical() const { return instance(criterion.value().grammatical); }
  const ParadigmInstance& ungrammatical() const { return instance(criterion.value().ungrammatical); }

  // Concatenated token sequences of every instance; identifies the record.
  std::string surface_key() const {
    std::string key;
    for (const auto& i : instances) {
      key += i.sentence.to_line();
      key += '\n';
    }
    return key;
  }

  friend bool operator==(const MinimalPairRecord& a, const MinimalPairRecord& b) {
    return a.phenomenon == b.phenomenon && a.seed == b.seed && a.index == b.index &&
           a.instances == b.instances && a.shared_choices == b.shared_choices;
  }
};

namespace detail {

class Renderer {
 public:
  Renderer(const GrammarSpec& g, const ChoiceAssignment& assign, const ConditionSpec& cond)
      : g_(g), plan_(g.plan()), assign_(assign), cond_(cond) {}

  ParadigmInstance render() {
    render_node(plan_.root);
    ParadigmInstance inst;
    inst.condition = cond_.label;
    inst.grammatical = cond_.grammatical;
    inst.sentence.tokens = std::move(tokens_);
    inst.critical = critical_;
    inst.spillover_start = spillover_;
    inst.condition_spans = std::move(spans_);
    return inst;
  }

 private:
  void render_node(std::size_t id) {
    const auto& node = plan_.nodes[id];
    const int alt = assign_[id];
    if (alt < 0) throw ValidationError("choice point '" + node.key + "' was not assigned");
    if (g_.spillover && node.nonterminal == *g_.spillover && !spillover_) spillover_ = tokens_.size();
    render_symbols(g_.rules.at(node.nonterminal)[static_cast<std::size_t>(alt)].symbols, node.key);
  }

  void render_symbols(const std::vector<Symbol>& symbols, const std::string& prefix) {
    std::map<std::string, std::size_t> occurrences;
    for (const auto& sym : symbols) {
      const std::size_t begin = tokens_.size();
      if (sym.kind == Symbol::Kind::terminal) {
        for (auto& t : split_whitespace(sym.name)) tokens_.push_back(std::move(t));
      } else {
        const std::string tag = sym.kind == Symbol::Kind::slot ? "±" + sym.name : sym.name;
        const std::string key = prefix + "/" + tag + "#" + std::to_string(occurrences[tag]++);
        if (sym.kind == Symbol::Kind::nonterminal) {
          render_node(plan_.by_key.at(key));
        } else {
          const auto variant = variant_name(cond_.signs.at(sym.name), sym.name);
          render_symbols(g_.rules.at(variant).front().symbols, key);
          if (tokens_.size() > begin) spans_.push_back({begin, tokens_.size()});
        }
      }
      if (sym.critical) {
        if (tokens_.size() != begin + 1) throw ValidationError("critical symbol yielded more than one token");
        critical_ = begin;
      }
    }
  }

  const GrammarSpec& g_;
  const ChoicePlan& plan_;
  const ChoiceAssignment& assign_;
  const ConditionSpec& cond_;
  std::vector<std::string> tokens_;
  std::optional<std::size_t> critical_;
  std::optional<std::size_t> spillover_;
  std::vector<TokenSpan> spans_;
};

inline void decode(const ChoicePlan& plan, std::size_t id, std::uint64_t ordinal, ChoiceAssignment& out) {
  const auto& node = plan.nodes[id];
  for (std::size_t a = 0; a < node.children.size(); ++a) {
    if (ordinal >= node.alternative_counts[a]) {
      ordinal -= node.alternative_counts[a];
      continue;
    }
    out[id] = static_cast<int>(a);
    // First child is the most significant digit.
    const auto& kids = node.children[a];
    std::vector<std::uint64_t> radix(kids.size() + 1, 1);
    for (std::size_t i = kids.size(); i-- > 0;) radix[i] = radix[i + 1] * plan.nodes[kids[i]].count;
    for (std::size_t i = 0; i < kids.size(); ++i) {
      decode(plan, kids[i], ordinal / radix[i + 1], out);
      ordinal %= radix[i + 1];
    }
    return;
  }
  throw ValidationError("derivation ordinal out of range");
}

inline void sample(const ChoicePlan& plan, std::size_t id, StreamRng& rng, ChoiceAssignment& out) {
  const auto& node = plan.nodes[id];
  std::size_t a = 0;
  if (node.uniform) {
    a = static_cast<std::size_t>(rng.below(node.children.size()));
  } else {
    double total = 0;
    for (double w : node.weights) total += w;
    double r = rng.unit() * total;
    for (a = 0; a + 1 < node.weights.size(); ++a) {
      if (r < node.weights[a]) break;
      r -= node.weights[a];
    }
  }
  out[id] = static_cast<int>(a);
  for (std::size_t child : node.children[a]) sample(plan, child, rng, out);
}

}  // namespace detail

// Renders one assignment into a record holding every declared condition.
// When the grammar has a criterion, the compared members must share their
// left context and differ at the critical token.
inline MinimalPairRecord make_record(const GrammarSpec& g, const ChoiceAssignment& assign, std::uint64_t seed,
                                     std::uint64_t index) {
  const auto& plan = g.plan();
  MinimalPairRecord rec;
  rec.phenomenon = g.phenomenon;
  rec.seed = seed;
  rec.index = index;
  rec.criterion = g.criterion;
  for (std::size_t i = 0; i < plan.nodes.size(); ++i)
    if (assign[i] >= 0) rec.shared_choices.emplace(plan.nodes[i].key, assign[i]);
  if (g.conditions.empty()) {
    ConditionSpec only{"default", {}, true};
    rec.instances.push_back(detail::Renderer(g, assign, only).render());
  } else {
    for (const auto& c : g.conditions) rec.instances.push_back(detail::Renderer(g, assign, c).render());
  }
  if (rec.criterion) {
    const auto& a = rec.grammatical();
    const auto& b = rec.ungrammatical();
    const std::size_t ca = *a.critical, cb = *b.critical;
    if (ca != cb || !std::equal(a.sentence.tokens.begin(), a.sentence.tokens.begin() + static_cast<std::ptrdiff_t>(ca),
                                b.sentence.tokens.begin()))
      throw IntegrityError("record " + rec.pair_id() + ": compared conditions differ before the critical token");
    if (a.critical_token() == b.critical_token())
      throw IntegrityError("record " + rec.pair_id() + ": compared conditions share the critical token '" +
                           a.critical_token() + "'");
  }
  for (const auto& inst : rec.instances)
    if (inst.critical && inst.spillover_start && *inst.spillover_start <= *inst.critical)
      throw IntegrityError("record " + rec.pair_id() + ": spillover does not follow the critical token");
  return rec;
}

// The derivation with the given ordinal in lexicographic choice order.
inline MinimalPairRecord paradigm_at(const GrammarSpec& g, std::uint64_t ordinal, std::uint64_t seed = 0) {
  const auto& plan = g.plan();
  if (ordinal >= plan.nodes[plan.root].count) throw ValidationError("derivation ordinal out of range");
  ChoiceAssignment assign(plan.nodes.size(), -1);
  detail::decode(plan, plan.root, ordinal, assign);
  return make_record(g, assign, seed, ordinal);
}

// Visits every distinct assignment of shared choices once, in
// lexicographic choice order. Stops early when fn returns false.
template <class Fn>
  requires std::invocable<Fn&, const MinimalPairRecord&>
void for_each_paradigm(const GrammarSpec& g, Fn&& fn) {
  const std::uint64_t n = g.space_size();
  for (std::uint64_t i = 0; i < n; ++i) {
    if constexpr (std::is_convertible_v<std::invoke_result_t<Fn&, const MinimalPairRecord&>, bool>) {
      if (!fn(paradigm_at(g, i))) return;
    } else {
      fn(paradigm_at(g, i));
    }
  }
}

inline std::vector<MinimalPairRecord> enumerate_paradigms(const GrammarSpec& g) {
  std::vector<MinimalPairRecord> out;
  out.reserve(static_cast<std::size_t>(g.space_size()));
  for_each_paradigm(g, [&](const MinimalPairRecord& r) { out.push_back(r); });
  return out;
}

// Pure function of (grammar, seed, index): each reached choice point picks
// an alternative (uniformly unless weighted) from a stream keyed by
// (seed, index).
inline MinimalPairRecord sample_paradigm(const GrammarSpec& g, std::uint64_t seed, std::uint64_t index) {
  const auto& plan = g.plan();
  ChoiceAssignment assign(plan.nodes.size(), -1);
  detail::StreamRng rng(seed, index);
  detail::sample(plan, plan.root, rng, assign);
  return make_record(g, assign, seed, index);
}

}  // namespace minpair
