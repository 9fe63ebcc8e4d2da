// ragaudit command-line tool.
#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "ragaudit/campaign.hpp"
#include "ragaudit/config.hpp"
#include "ragaudit/errors.hpp"
#include "ragaudit/evidence.hpp"
#include "ragaudit/exam.hpp"
#include "ragaudit/metrics.hpp"
#include "ragaudit/rng.hpp"

namespace fs = std::filesystem;
using namespace ragaudit;

namespace {

struct Overrides {
  std::string config;
  std::uint64_t seed = 0;
  std::string corpus;
  std::string corpus_format = "jsonl";
  std::string target = "sim";
  std::size_t top_k = 3;
  std::size_t n_items = 28;
  double tau = kDefaultTau;
  std::string weights = "0.312,0.214,0.300,0.174";
  std::string attack = "emia";
  bool emit_traces = false;
  bool batch_items = false;
  std::string out = "audit-out";
  std::size_t eval_per_class = 100;

  CLI::Option* o_seed = nullptr;
  CLI::Option* o_corpus = nullptr;
  CLI::Option* o_format = nullptr;
  CLI::Option* o_target = nullptr;
  CLI::Option* o_top_k = nullptr;
  CLI::Option* o_n_items = nullptr;
  CLI::Option* o_tau = nullptr;
  CLI::Option* o_weights = nullptr;
  CLI::Option* o_attack = nullptr;
  CLI::Option* o_out = nullptr;
  CLI::Option* o_eval = nullptr;
};

void add_common(CLI::App* app, Overrides& o, bool campaign_flags) {
  app->add_option("--config", o.config, "TOML campaign config")->check(CLI::ExistingFile);
  o.o_seed = app->add_option("--seed", o.seed, "master seed")->capture_default_str();
  o.o_corpus = app->add_option("--corpus", o.corpus, "corpus path (JSONL file or directory of .txt)");
  o.o_format = app->add_option("--corpus-format", o.corpus_format, "jsonl | plain-dir")->capture_default_str();
  o.o_n_items = app->add_option("--n-items", o.n_items, "exam size N (multiple of 4)")->capture_default_str();
  o.o_out = app->add_option("--out", o.out, "output path")->capture_default_str();
  if (!campaign_flags) return;
  o.o_target = app->add_option("--target", o.target, "target system")
                   ->check(CLI::IsMember({"sim", "remote"}))
                   ->capture_default_str();
  o.o_top_k = app->add_option("--top-k", o.top_k, "retrieved chunks per query")->capture_default_str();
  o.o_tau = app->add_option("--tau", o.tau, "decision threshold")->capture_default_str();
  o.o_weights = app->add_option("--weights", o.weights, "FB,SC,MC,TF weights")->capture_default_str();
  o.o_attack = app->add_option("--attack", o.attack, "attack")
                   ->check(CLI::IsMember({"emia", "s2mia", "mba", "ia"}))
                   ->capture_default_str();
  o.o_eval = app->add_option("--eval-per-class", o.eval_per_class, "eval targets per class")->capture_default_str();
  app->add_flag("--emit-traces", o.emit_traces, "write retrieval traces (analysis only)");
  app->add_flag("--batch-items", o.batch_items, "send all exam items in one query");
}

WeightVector parse_weights(const std::string& s) {
  std::array<double, 4> w{};
  std::stringstream ss(s);
  std::string part;
  std::size_t i = 0;
  while (std::getline(ss, part, ',')) {
    if (i >= 4) throw ConfigInvalid("--weights takes four numbers");
    try {
      w[i++] = std::stod(part);
    } catch (const std::exception&) {
      throw ConfigInvalid("--weights: not a number: " + part);
    }
  }
  if (i != 4) throw ConfigInvalid("--weights takes four numbers");
  return WeightVector::from_array(w);
}

/// Config file first, then any flag given on the command line.
CampaignConfig effective(const Overrides& o) {
  CampaignConfig c = o.config.empty() ? CampaignConfig{} : load_config(o.config);
  auto given = [](CLI::Option* opt) { return opt && opt->count() > 0; };
  if (given(o.o_seed)) c.seed = o.seed;
  if (given(o.o_corpus)) c.corpus_path = o.corpus;
  if (given(o.o_format)) c.corpus_format = corpus_format_from_string(o.corpus_format);
  if (given(o.o_n_items)) c.n_items = o.n_items;
  if (given(o.o_out)) c.output_dir = o.out;
  else if (o.config.empty()) c.output_dir = o.out;
  if (given(o.o_target)) c.target.kind = o.target == "remote" ? TargetKind::RemoteHTTP : TargetKind::SimulatedRAG;
  if (given(o.o_top_k)) c.target.top_k = o.top_k;
  if (given(o.o_tau)) c.tau = o.tau;
  if (given(o.o_weights)) c.weights = parse_weights(o.weights);
  if (given(o.o_attack)) c.attack = attack_kind_from_string(o.attack);
  if (given(o.o_eval)) c.eval_per_class = o.eval_per_class;
  if (o.emit_traces) c.emit_traces = true;
  if (o.batch_items) c.batch_items = true;
  return c;
}

std::vector<Document> load_docs(const CampaignConfig& c) {
  if (c.corpus_path.empty()) throw ConfigInvalid("--corpus (or corpus.path in the config) is required");
  return ingest_corpus(c.corpus_path, c.corpus_format);
}

void write_or_print(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw UserError("cannot write " + path);
  out << text;
}

std::string table_text(const MetricsReport& m) {
  char buf[1024];
  std::snprintf(buf, sizeof buf,
                "%-8s %7s %8s %7s %10s %10s %11s\n"
                "%-8s %7.3f %8.3f %7.3f %10.3f %10.3f %11.3f\n"
                "threshold %.1f  acc@best %.3f  delta %.3f  KL %.3f  members %zu  nonmembers %zu  incomplete %zu\n",
                "attack", "Acc", "AUC-ROC", "AUC-PR", "TPR@5%FPR", "TPR@1%FPR", "TPR@0.5%FPR", m.attack.c_str(),
                m.accuracy, m.auc_roc, m.auc_pr, m.tpr_at_fpr[0], m.tpr_at_fpr[1], m.tpr_at_fpr[2], m.threshold,
                m.acc_at_best, m.delta, m.kl_mem_non, m.n_members, m.n_nonmembers, m.n_incomplete);
  return buf;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ragaudit: exam-style membership inference audits of retrieval-augmented generation systems"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "ragaudit 0.3.0");

  Overrides ing, ext, gen, att, cal;
  std::string doc_id;

  auto* c_ingest = app.add_subcommand("ingest", "clean a corpus and write it as JSONL");
  add_common(c_ingest, ing, false);

  auto* c_extract = app.add_subcommand("extract", "extract evidence units (JSONL, one unit per line)");
  add_common(c_extract, ext, false);
  c_extract->add_option("--doc-id", doc_id, "only this document");

  auto* c_gen = app.add_subcommand("gen-exam", "assemble the exam for one document");
  add_common(c_gen, gen, false);
  std::string gen_format = "json";
  c_gen->add_option("--doc-id", doc_id, "document id")->required();
  c_gen->add_option("--format", gen_format, "json | text")->check(CLI::IsMember({"json", "text"}))->capture_default_str();

  auto* c_attack = app.add_subcommand("attack", "run an audit campaign");
  add_common(c_attack, att, true);
  bool resume = false;
  std::size_t stop_after = 0;
  c_attack->add_flag("--resume", resume, "continue the run recorded in --out");
  c_attack->add_option("--stop-after", stop_after, "stop after this many targets (0 = all)")->capture_default_str();

  auto* c_cal = app.add_subcommand("calibrate", "derive weights and threshold on a held-out dev set");
  add_common(c_cal, cal, true);
  std::size_t trials = 1;
  c_cal->add_option("--trials", trials, "independent calibration trials (medoid is reported)")->capture_default_str();

  auto* c_report = app.add_subcommand("report", "render metrics.json as a table, CSV or JSON");
  std::string report_in = "audit-out";
  std::string report_format = "text";
  c_report->add_option("--out", report_in, "campaign output directory or metrics.json")->capture_default_str();
  c_report->add_option("--format", report_format, "text | csv | json")
      ->check(CLI::IsMember({"text", "csv", "json"}))
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << app.help();
    return 1;
  }

  try {
    if (c_ingest->parsed()) {
      auto c = effective(ing);
      auto docs = load_docs(c);
      std::string out = ing.o_out->count() ? ing.out : "-";
      write_or_print(out, corpus_to_jsonl(docs));
      std::cerr << docs.size() << " documents\n";
    } else if (c_extract->parsed()) {
      auto c = effective(ext);
      auto docs = load_docs(c);
      auto extractor = make_extractor(c);
      std::string text;
      std::size_t n = 0;
      for (const auto& d : docs) {
        if (!doc_id.empty() && d.doc_id != doc_id) continue;
        ++n;
        try {
          for (const auto& u : extract_evidence(d, *extractor, c.max_units)) text += nlohmann::json(u).dump() + "\n";
        } catch (const NoEvidenceFound& e) {
          std::cerr << "warning: " << e.what() << "\n";
        }
      }
      if (!doc_id.empty() && n == 0) throw UserError("no document with id " + doc_id);
      write_or_print(ext.o_out->count() ? ext.out : "-", text);
    } else if (c_gen->parsed()) {
      auto c = effective(gen);
      if (c.n_items == 0 || c.n_items % 4 != 0) throw ConfigInvalid("--n-items must be a positive multiple of 4");
      auto docs = load_docs(c);
      auto it = std::find_if(docs.begin(), docs.end(), [&](const Document& d) { return d.doc_id == doc_id; });
      if (it == docs.end()) throw UserError("no document with id " + doc_id);
      Document blind = *it;
      blind.label.reset();
      auto units = extract_evidence(blind, *make_extractor(c), c.max_units);
      ExamSpec spec;
      spec.item = c.item_spec;
      auto exam = assemble_exam(units, c.n_items, derive_seed(derive_seed(c.seed, "attack"), "exam", blind.doc_id), spec);
      for (const auto& issue : validate_exam(exam))
        std::cerr << "warning: " << issue.item_id << ": " << to_string(issue.kind) << " " << issue.detail << "\n";
      write_or_print(gen.o_out->count() ? gen.out : "-",
                     gen_format == "text" ? render_exam_text(exam) : nlohmann::json(exam).dump(2) + "\n");
    } else if (c_attack->parsed()) {
      CampaignOptions opts;
      if (stop_after > 0) opts.stop_after = stop_after;
      CampaignOutcome out;
      if (resume) {
        std::optional<CampaignConfig> c;
        if (!att.config.empty()) c = effective(att);
        out = resume_campaign(att.o_out->count() || !c ? fs::path(att.out) : c->output_dir, c, opts);
      } else {
        auto c = effective(att);
        validate(c);
        out = run_campaign(c, opts);
      }
      if (out.interrupted) {
        std::cerr << "stopped after " << out.results.size() << " targets; rerun with --resume to continue\n";
      } else {
        std::cout << table_text(out.metrics);
        if (out.guardrail_pass_rate) std::printf("guardrail pass rate %.3f\n", *out.guardrail_pass_rate);
        std::printf("queries %zu\n", out.ledger_queries);
      }
    } else if (c_cal->parsed()) {
      auto c = effective(cal);
      validate(c);
      if (trials == 0) throw ConfigInvalid("--trials must be >= 1");
      auto world = prepare_world(c);
      auto rep = calibrate_on_dev(c, world);
      std::vector<TrialOutcome> all;
      if (trials > 1) {
        all = run_calibration_trials(c, trials);
      } else {
        TrialOutcome t{"trial-000", rep.weights.weights, rep.tau, rep.dev_metrics};
        all.push_back(t);
      }
      auto chosen = medoid_params(all);
      write_calibration(c.output_dir, rep, all, chosen);
      if (rep.weights.degenerate) std::cerr << "warning: all per-type KL values are zero; using uniform weights\n";
      std::printf("weights FB %.3f SC %.3f MC %.3f TF %.3f  tau %.1f  (medoid of %zu trials: %s)\n",
                  chosen.weights.w_fb, chosen.weights.w_sc, chosen.weights.w_mc, chosen.weights.w_tf, chosen.tau,
                  all.size(), chosen.provenance.front().c_str());
    } else if (c_report->parsed()) {
      fs::path p = report_in;
      if (fs::is_directory(p)) p /= "metrics.json";
      std::ifstream in(p);
      if (!in) throw UserError("cannot read " + p.string());
      auto j = nlohmann::json::parse(in, nullptr, false);
      if (j.is_discarded()) throw UserError(p.string() + " is not valid JSON");
      MetricsReport m = j.get<MetricsReport>();
      if (report_format == "csv") std::cout << metrics_csv_header() << metrics_csv_row(m);
      else if (report_format == "json") std::cout << nlohmann::json(m).dump(2) << "\n";
      else std::cout << table_text(m);
    }
  } catch (const ConfigDrift& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const UserError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
