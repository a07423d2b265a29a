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

// minpair command-line interface.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "minpair/cfg.hpp"
#include "minpair/corpus.hpp"
#include "minpair/ngram.hpp"
#include "minpair/paradigms.hpp"
#include "minpair/perturb.hpp"
#include "minpair/protocol.hpp"
#include "minpair/report.hpp"
#include "minpair/scorer.hpp"
#include "minpair/scoring.hpp"

namespace {

using namespace minpair;

// "-" or empty means stdout.
class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty() && path != "-") {
      file_.open(path, std::ios::binary);
      if (!file_) throw IoError("cannot write '" + path + "'");
    }
  }
  std::ostream& stream() { return file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout; }
  void close() {
    stream().flush();
    if (file_.is_open()) {
      file_.close();
      if (!file_) throw IoError("write failed");
    }
  }

 private:
  std::ofstream file_;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  for (const auto& part : detail::split(text, ',')) {
    const auto t = detail::trim(part);
    if (t.empty()) continue;
    try {
      seeds.push_back(std::stoull(std::string(t)));
    } catch (const std::exception&) {
      throw ValidationError("bad seed '" + std::string(t) + "'");
    }
  }
  if (seeds.empty()) throw ValidationError("no seeds given");
  return seeds;
}

GrammarSpec grammar_from(const std::string& phenomenon, const std::string& grammar_path) {
  if (!grammar_path.empty()) return parse_grammar(read_file(grammar_path));
  if (phenomenon.empty()) throw ValidationError("need --phenomenon or --grammar");
  return builtin_grammar(parse_phenomenon(phenomenon));
}

// Uniform vocabulary file: whitespace-separated tokens.
std::unordered_set<std::string> load_token_set(const std::string& path) {
  std::unordered_set<std::string> out;
  for (auto& t : detail::split_whitespace(read_file(path))) out.insert(std::move(t));
  return out;
}

std::string token_set_digest(const std::unordered_set<std::string>& tokens) {
  Vocabulary v;
  for (const auto& t : tokens) v.add(t);
  return v.digest();
}

// Builds the scorer named by `spec` and hands it to `fn`.
template <class Fn>
void with_scorer(const std::string& spec, const std::string& id_override, Fn&& fn) {
  const auto colon = spec.find(':');
  const std::string kind = spec.substr(0, colon);
  const std::string arg = colon == std::string::npos ? std::string{} : spec.substr(colon + 1);
  if (arg.empty()) throw ValidationError("scorer spec needs KIND:ARG, got '" + spec + "'");
  if (kind == "ngram") {
    const auto model = NGramModel::load(arg);
    NGramScorer scorer(model, id_override.empty() ? "ngram" : id_override);
    fn(scorer);
  } else if (kind == "uniform") {
    UniformScorer scorer(load_token_set(arg), id_override.empty() ? "uniform" : id_override);
    fn(scorer);
  } else if (kind == "remote") {
    auto scorer = protocol::RemoteScorer::spawn(arg);
    fn(scorer);
  } else {
    throw ValidationError("unknown scorer kind '" + kind + "' (ngram, uniform, remote)");
  }
}

MarkerToken marker_from(const std::string& choice, PerturbationId p, const std::unordered_set<std::string>& vocab) {
  MarkerToken m = choice == "auto"  ? (needs_tags(p) ? pick_marker(vocab) : MarkerToken(std::string(kReverseMarker)))
                  : choice == "rev" ? MarkerToken(std::string(kReverseMarker))
                                    : MarkerToken(choice);
  check_marker(m, vocab);
  return m;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"minpair: minimal-pair syntactic evaluation toolkit"};
  app.require_subcommand(1);
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());

  // generate
  auto* gen = app.add_subcommand("generate", "Generate minimal-pair records as JSONL");
  std::string g_phen, g_grammar, g_out;
  std::size_t g_n = 1000;
  std::uint64_t g_seed = 1;
  bool g_count = false, g_all = false;
  gen->add_option("--phenomenon", g_phen, "ATB, PG or TTE");
  gen->add_option("--grammar", g_grammar, "Grammar file instead of a built-in phenomenon");
  gen->add_option("--n", g_n, "Number of distinct pairs");
  gen->add_option("--seed", g_seed, "Sampling seed");
  gen->add_option("--out", g_out, "Output JSONL (default stdout)");
  gen->add_flag("--count", g_count, "Print the number of distinct paradigms and exit");
  gen->add_flag("--enumerate", g_all, "Emit every paradigm in enumeration order");

  // score
  auto* score = app.add_subcommand("score", "Evaluate a scorer on minimal pairs");
  std::string s_dataset, s_phen, s_grammar, s_scorer, s_seeds = "1,2,3,4,5", s_out, s_summary, s_id;
  std::size_t s_n = 1000;
  score->add_option("--dataset", s_dataset, "JSONL records (grouped by their seed field)");
  score->add_option("--phenomenon", s_phen, "Regenerate a built-in phenomenon per seed");
  score->add_option("--grammar", s_grammar, "Regenerate from a grammar file per seed");
  score->add_option("--n", s_n, "Pairs per seed when regenerating");
  score->add_option("--scorer", s_scorer, "ngram:MODEL | uniform:VOCAB | remote:COMMAND")->required();
  score->add_option("--scorer-id", s_id, "Override the scorer id used in reports");
  score->add_option("--seeds", s_seeds, "Comma-separated seeds");
  score->add_option("--out", s_out, "Per-pair CSV (default stdout)");
  score->add_option("--summary", s_summary, "Per-seed accuracy CSV");

  // perturb
  auto* pert = app.add_subcommand("perturb", "Apply a word-order perturbation to a corpus");
  std::string p_in, p_kind, p_marker = "auto", p_out;
  std::uint64_t p_seed = 0;
  bool p_tags = false;
  unsigned p_threads = hw;
  pert->add_option("--in", p_in, "Input corpus (one sentence per line, or token<TAB>UPOS blocks with --tags)")->required();
  pert->add_flag("--tags", p_tags, "Input is POS-tagged");
  pert->add_option("--perturbation", p_kind,
                   "partial_reverse, reverse_control, full_reverse, switch_indices, token_hop, no_hop")
      ->required();
  pert->add_option("--marker", p_marker, "Marker token, 'rev' for <rev>, or auto");
  pert->add_option("--seed", p_seed, "Seed for marker positions");
  pert->add_option("--threads", p_threads, "Worker threads");
  pert->add_option("--out", p_out, "Output corpus (default stdout)");

  // cap-vocab
  auto* cap = app.add_subcommand("cap-vocab", "Replace tokens outside the top-k training types with <unk>");
  std::string c_train, c_in, c_out;
  std::size_t c_k = 50000;
  cap->add_option("--train", c_train, "Corpus used for frequency ranking")->required();
  cap->add_option("--in", c_in, "Corpus to rewrite (default: the training corpus)");
  cap->add_option("--k", c_k, "Vocabulary size excluding <unk>");
  cap->add_option("--out", c_out, "Output corpus (default stdout)");

  // train-ngram
  auto* train = app.add_subcommand("train-ngram", "Train an add-k n-gram model");
  std::string t_train, t_out;
  NGramOptions t_opt;
  bool t_no_bounds = false;
  train->add_option("--train", t_train, "Training corpus")->required();
  train->add_option("--order", t_opt.order, "n");
  train->add_option("--k", t_opt.k, "Add-k smoothing constant");
  train->add_flag("--no-boundaries", t_no_bounds, "Do not pad sentences with <s> and </s>");
  train->add_option("--out", t_out, "Model JSON")->required();

  // perplexity-curve
  auto* curve = app.add_subcommand("perplexity-curve", "Validation perplexity while training incrementally");
  std::string pc_train, pc_valid, pc_label = "run", pc_out;
  CurveOptions pc_opt;
  pc_opt.threads = hw;
  bool pc_no_bounds = false;
  curve->add_option("--train", pc_train, "Training corpus")->required();
  curve->add_option("--valid", pc_valid, "Validation corpus")->required();
  curve->add_option("--order", pc_opt.model.order, "n");
  curve->add_option("--k", pc_opt.model.k, "Add-k smoothing constant");
  curve->add_flag("--no-boundaries", pc_no_bounds, "Do not pad sentences");
  curve->add_option("--chunk", pc_opt.chunk, "Sentences per batch");
  curve->add_option("--eval-every", pc_opt.eval_every, "Batches between evaluations");
  curve->add_option("--threads", pc_opt.threads, "Worker threads for evaluation");
  curve->add_option("--label", pc_label, "Curve label");
  curve->add_option("--out", pc_out, "CSV (default stdout)");

  // align-curves
  auto* align = app.add_subcommand("align-curves", "Truncate curves to the smallest final batch index");
  std::vector<std::string> a_in;
  std::string a_out;
  align->add_option("--in", a_in, "Curve CSV files")->required();
  align->add_option("--out", a_out, "CSV (default stdout)");

  // verify-parity
  auto* parity = app.add_subcommand("verify-parity", "Check that two perturbed corpora have matching counts");
  std::string v_a, v_b;
  parity->add_option("--a", v_a, "First corpus")->required();
  parity->add_option("--b", v_b, "Second corpus")->required();

  // serve
  auto* serve = app.add_subcommand("serve", "Serve a scorer over the line protocol on stdin/stdout");
  std::string sv_model, sv_uniform, sv_id;
  serve->add_option("--model", sv_model, "n-gram model JSON");
  serve->add_option("--uniform", sv_uniform, "Vocabulary file for a uniform scorer");
  serve->add_option("--id", sv_id, "Scorer id announced in the hello message");

  // report
  auto* rep = app.add_subcommand("report", "Accuracy table ordered by training size");
  std::vector<std::string> r_acc;
  std::string r_ledger, r_out, r_svg;
  bool r_builtin = false;
  rep->add_option("--accuracy", r_acc, "Accuracy CSV files")->required();
  rep->add_option("--ledger", r_ledger, "Ledger CSV (model,training_tokens)");
  rep->add_flag("--builtin-ledger", r_builtin, "Use the eight reference models");
  rep->add_option("--out", r_out, "Report CSV (default stdout)");
  rep->add_option("--svg", r_svg, "Also write an SVG chart");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      const auto g = grammar_from(g_phen, g_grammar);
      if (g_count) {
        std::cout << g.space_size() << '\n';
        return 0;
      }
      Output out(g_out);
      if (g_all) {
        for_each_paradigm(g, [&](const MinimalPairRecord& r) { out.stream() << to_json(r).dump() << '\n'; });
      } else {
        write_jsonl(out.stream(), generate_dataset(g, g_n, g_seed));
      }
      out.close();
    } else if (score->parsed()) {
      const auto seeds = parse_seeds(s_seeds);
      EvaluationResult result;
      with_scorer(s_scorer, s_id, [&](auto& scorer) {
        if (!s_dataset.empty()) {
          const auto records = load_jsonl(s_dataset);
          result = evaluate_by_seed(std::span<const MinimalPairRecord>(records), scorer,
                                    score->count("--seeds") ? std::span<const std::uint64_t>(seeds)
                                                            : std::span<const std::uint64_t>{});
        } else {
          result = run_evaluation(grammar_from(s_phen, s_grammar), scorer, seeds, s_n);
        }
      });
      Output out(s_out);
      write_outcomes_csv(out.stream(), result.outcomes);
      out.close();
      if (!s_summary.empty()) {
        Output sum(s_summary);
        write_accuracy_csv(sum.stream(), std::span<const AccuracyReport>(&result.report, 1));
        sum.close();
      }
      std::cerr << result.report.phenomenon << ' ' << result.report.scorer_id << " mean accuracy "
                << detail::format_double(result.report.mean) << '\n';
    } else if (pert->parsed()) {
      const auto p = parse_perturbation(p_kind);
      Corpus result;
      if (needs_tags(p)) {
        if (!p_tags) throw ValidationError(std::string(to_string(p)) + " needs --tags input");
        const auto tagged = load_tagged(p_in);
        std::unordered_set<std::string> vocab;
        for (const auto& s : tagged)
          for (const auto& t : s.tokens) vocab.insert(t.text);
        result = perturb_tagged(tagged, p, marker_from(p_marker, p, vocab), Split::train, p_threads);
      } else {
        Corpus in;
        if (p_tags) {
          for (const auto& s : load_tagged(p_in)) in.sentences.push_back({s.words()});
        } else {
          in = load_corpus(p_in, Split::train);
        }
        result = perturb_corpus(in, p, marker_from(p_marker, p, vocabulary_of(in)), p_seed, p_threads);
      }
      Output out(p_out);
      write_corpus(out.stream(), result);
      out.close();
    } else if (cap->parsed()) {
      const auto train_c = load_corpus(c_train, Split::train);
      const auto target = c_in.empty() ? train_c : load_corpus(c_in, Split::validation);
      Output out(c_out);
      write_corpus(out.stream(), cap_vocabulary(target, c_k, train_c));
      out.close();
    } else if (train->parsed()) {
      t_opt.boundaries = !t_no_bounds;
      train_ngram(load_corpus(t_train, Split::train), t_opt).save(t_out);
    } else if (curve->parsed()) {
      pc_opt.model.boundaries = !pc_no_bounds;
      const auto c = learning_curve(load_corpus(pc_train, Split::train), load_corpus(pc_valid, Split::validation),
                                    pc_opt, pc_label);
      Output out(pc_out);
      write_curves_csv(out.stream(), {c});
      out.close();
    } else if (align->parsed()) {
      std::vector<LearningCurve> curves;
      for (const auto& path : a_in) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw IoError("cannot open '" + path + "'");
        for (auto& c : read_curves_csv(in)) curves.push_back(std::move(c));
      }
      Output out(a_out);
      write_curves_csv(out.stream(), align_curves(std::move(curves)));
      out.close();
    } else if (parity->parsed()) {
      const auto r = verify_paired_counts(load_corpus(v_a, Split::train), load_corpus(v_b, Split::train));
      std::cout << "sentences " << r.sentences_a << ' ' << r.sentences_b << "\ntokens " << r.tokens_a << ' '
                << r.tokens_b << '\n';
      if (r.first_divergence) std::cout << "first_divergence " << *r.first_divergence << '\n';
      std::cout << (r.ok ? "parity ok" : "parity FAILED") << '\n';
      return r.ok ? 0 : 1;
    } else if (serve->parsed()) {
      std::ios::sync_with_stdio(false);
      if (sv_model.empty() == sv_uniform.empty()) throw ValidationError("serve needs exactly one of --model, --uniform");
      if (!sv_model.empty()) {
        const auto model = NGramModel::load(sv_model);
        NGramScorer scorer(model, sv_id.empty() ? "ngram" : sv_id);
        protocol::serve(scorer, model.vocabulary().digest(), std::cin, std::cout);
      } else {
        auto tokens = load_token_set(sv_uniform);
        const auto digest = token_set_digest(tokens);
        UniformScorer scorer(std::move(tokens), sv_id.empty() ? "uniform" : sv_id);
        protocol::serve(scorer, digest, std::cin, std::cout);
      }
    } else if (rep->parsed()) {
      if (r_builtin == !r_ledger.empty()) throw ValidationError("report needs exactly one of --ledger, --builtin-ledger");
      const auto ledger = r_builtin ? builtin_ledger() : load_ledger_csv(r_ledger);
      std::vector<AccuracyReport> reports;
      for (const auto& path : r_acc) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw IoError("cannot open '" + path + "'");
        for (auto& r : read_accuracy_csv(in)) reports.push_back(std::move(r));
      }
      const auto rows = emit_report(reports, ledger);
      Output out(r_out);
      write_report_csv(out.stream(), rows);
      out.close();
      if (!r_svg.empty()) {
        Output svg(r_svg);
        write_report_svg(svg.stream(), rows);
        svg.close();
      }
    }
  } catch (const minpair::Error& e) {
    std::cerr << "minpair: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
