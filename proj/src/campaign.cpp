#include "ragaudit/campaign.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "ragaudit/errors.hpp"
#include "ragaudit/evidence_llm.hpp"
#include "ragaudit/rng.hpp"

namespace ragaudit {

namespace fs = std::filesystem;

Document CampaignWorld::blind(const std::string& doc_id) const {
  auto it = by_id.find(doc_id);
  if (it == by_id.end()) throw CorpusError("unknown document " + doc_id);
  Document d = docs[it->second];
  d.label.reset();
  return d;
}

CampaignWorld prepare_world(const CampaignConfig& cfg) {
  return prepare_world(cfg, ingest_corpus(cfg.corpus_path, cfg.corpus_format));
}

CampaignWorld prepare_world(const CampaignConfig& cfg, std::vector<Document> docs) {
  CampaignWorld w;
  w.docs = std::move(docs);
  for (std::size_t i = 0; i < w.docs.size(); ++i) w.by_id.emplace(w.docs[i].doc_id, i);
  w.split = split_corpus(w.docs, cfg.member_fraction, derive_seed(cfg.seed, "split"));
  w.eval = build_eval_set(w.split, cfg.eval_per_class, derive_seed(cfg.seed, "eval"));
  std::size_t eval_mem = 0;
  for (const auto& t : w.eval.targets) eval_mem += t.label == Label::Member;
  std::size_t eval_non = w.eval.targets.size() - eval_mem;
  std::size_t avail = std::min(w.split.member_ids.size() - eval_mem, w.split.nonmember_ids.size() - eval_non);
  std::size_t n_dev = std::min(cfg.dev_per_class, avail);
  if (n_dev > 0) w.dev = build_dev_set(w.split, w.eval, n_dev, derive_seed(cfg.seed, "dev"));

  auto kb = knowledge_base(w.docs, w.split);
  if (cfg.target.kind == TargetKind::SimulatedRAG) {
    if (cfg.target.retriever == RetrieverKind::BM25Lexical) {
      w.index = std::make_shared<Bm25Index>(kb, cfg.target.chunk_tokens, cfg.target.chunk_overlap);
    } else {
      HttpEndpoint ep{cfg.remote.base_url, cfg.remote.embedding_model, api_key_from_env(kTargetKeyEnv),
                      0.0, cfg.remote.timeout_s, cfg.remote.retries, 250, cfg.remote.max_in_flight};
      w.index = std::make_shared<RemoteEmbeddingIndex>(kb, ep, cfg.target.chunk_tokens, cfg.target.chunk_overlap);
    }
  }
  return w;
}

std::shared_ptr<const EvidenceExtractor> make_extractor(const CampaignConfig& cfg) {
  if (cfg.extractor == "llm") {
    HttpEndpoint ep{cfg.generator.base_url, cfg.generator.model, api_key_from_env(kGeneratorKeyEnv),
                    cfg.generator.temperature, cfg.generator.timeout_s, cfg.generator.retries, 250,
                    cfg.generator.max_in_flight};
    return std::make_shared<LlmExtractor>(std::make_shared<HttpChatClient>(ep));
  }
  return std::make_shared<RuleBasedExtractor>();
}

std::unique_ptr<Attack> make_attack(const CampaignConfig& cfg) {
  switch (cfg.attack) {
    case AttackKind::EMIA: {
      EmiaParams p;
      p.n_items = cfg.n_items;
      p.max_units = cfg.max_units;
      p.spec.item = cfg.item_spec;
      p.weights = cfg.weights;
      p.batch_items = cfg.batch_items;
      return std::make_unique<EmiaAttack>(make_extractor(cfg), p);
    }
    case AttackKind::S2MIA: return std::make_unique<S2miaAttack>();
    case AttackKind::MBA: return std::make_unique<MbaAttack>(cfg.n_masks);
    case AttackKind::IA: return std::make_unique<IaAttack>(make_extractor(cfg), cfg.n_questions);
  }
  throw ConfigInvalid("unknown attack");
}

std::shared_ptr<Target> make_target(const CampaignConfig& cfg, const CampaignWorld& world, TraceSink* traces) {
  if (cfg.target.kind == TargetKind::RemoteHTTP) {
    HttpEndpoint ep{cfg.remote.base_url, cfg.remote.model, api_key_from_env(kTargetKeyEnv),
                    cfg.remote.temperature, cfg.remote.timeout_s, cfg.remote.retries, 250,
                    cfg.remote.max_in_flight};
    return std::make_shared<RemoteHttpTarget>(std::make_shared<HttpChatClient>(ep), cfg.remote.system_prompt);
  }
  TargetConfig tc = cfg.target;
  tc.seed = derive_seed(cfg.seed, "target");
  return std::make_shared<SimulatedRag>(world.index, tc, cfg.oracle, traces);
}

namespace {

/// Counts calls so the budget ledger sees exactly what reached the target.
class CountingTarget final : public Target {
 public:
  explicit CountingTarget(const Target& inner) : inner_(inner) {}
  RawResponse answer(const Query& q) const override {
    ++served_;
    return inner_.answer(q);
  }
  std::string name() const override { return inner_.name(); }

 private:
  const Target& inner_;
};

std::string generic_transcript(const AttackPlan& plan, std::span<const RawResponse> responses) {
  std::string out;
  for (std::size_t i = 0; i < plan.queries.size(); ++i) {
    nlohmann::ordered_json j;
    j["query_id"] = plan.queries[i].query_id;
    j["prompt"] = plan.queries[i].text;
    j["response_text"] = i < responses.size() ? responses[i].text : "";
    j["latency_ms"] = i < responses.size() ? responses[i].latency_ms : 0;
    j["refused"] = i < responses.size() && responses[i].refused;
    out += j.dump() + "\n";
  }
  return out;
}

void write_text(const fs::path& p, const std::string& s) {
  fs::path tmp = p;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw UserError("cannot write " + p.string());
    out << s;
  }
  fs::rename(tmp, p);
}

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TargetRun audit_target(const Attack& attack, const Document& blind_doc, Label label, const Target& target,
                       const CampaignConfig& cfg) {
  TargetRun run;
  run.result.doc_id = blind_doc.doc_id;
  run.result.attack = attack.name();
  run.result.threshold = cfg.tau;
  run.result.label = label;
  const std::uint64_t seed = derive_seed(cfg.seed, "attack");
  AttackPlan plan;
  try {
    plan = attack.prepare(blind_doc, seed);
  } catch (const UserError&) {
    throw;
  } catch (const Error& e) {
    // document unusable for this attack (no evidence, too short)
    run.result.complete = false;
    run.error = e.what();
    return run;
  }
  std::vector<RawResponse> responses;
  for (const auto& q : plan.queries) {
    try {
      ++run.result.queries;
      auto r = target.answer(q);
      r.item_id = q.query_id;
      responses.push_back(std::move(r));
    } catch (const TargetUnavailable& e) {
      run.result.complete = false;
      run.error = e.what();
      break;
    }
  }
  if (!run.result.complete) return run;
  auto outcome = attack.score(plan, responses);
  run.result.score = std::clamp(outcome.score, 0.0, 100.0);
  run.result.decision = decide(run.result.score, cfg.tau);
  if (plan.exam) {
    run.exam = plan.exam;
    std::sort(run.exam->items.begin(), run.exam->items.end(),
              [](const ExamItem& a, const ExamItem& b) { return a.item_id < b.item_id; });
  }
  if (outcome.graded && run.exam) {
    run.graded = outcome.graded;
    run.transcript = transcript_jsonl(*run.exam, outcome.item_responses, *outcome.graded);
  } else {
    run.transcript = generic_transcript(plan, responses);
  }
  return run;
}

namespace {

struct Manifest {
  std::string config_hash;
  nlohmann::json config;
  std::vector<std::string> order;
  std::map<std::string, std::string> status;  // doc_id -> pending | complete | incomplete
  std::size_t queries_total = 0;

  nlohmann::json to_json() const {
    nlohmann::json t = nlohmann::json::array();
    for (const auto& id : order) t.push_back({{"doc_id", id}, {"status", status.at(id)}});
    return {{"version", 1}, {"config_hash", config_hash}, {"config", config}, {"targets", t},
            {"queries_total", queries_total}};
  }

  static Manifest from_file(const fs::path& p) {
    if (!fs::exists(p)) throw ManifestCorrupt("no manifest in " + p.parent_path().string());
    auto j = nlohmann::json::parse(read_text(p), nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw ManifestCorrupt("manifest is not valid JSON: " + p.string());
    try {
      Manifest m;
      m.config_hash = j.at("config_hash").get<std::string>();
      m.config = j.at("config");
      for (const auto& t : j.at("targets")) {
        auto id = t.at("doc_id").get<std::string>();
        m.order.push_back(id);
        m.status[id] = t.at("status").get<std::string>();
      }
      m.queries_total = j.value("queries_total", std::size_t{0});
      return m;
    } catch (const nlohmann::json::exception& e) {
      throw ManifestCorrupt(std::string("manifest is missing fields: ") + e.what());
    }
  }
};

/// Serializes every output write; flushes results strictly in eval order.
class Writer {
 public:
  Writer(const CampaignConfig& cfg, const EvalSet& targets, Manifest manifest, std::optional<std::size_t> stop_after)
      : dir_(cfg.output_dir), manifest_(std::move(manifest)), stop_after_(stop_after) {
    slots_.resize(targets.targets.size());
    for (std::size_t i = 0; i < targets.targets.size(); ++i) index_[targets.targets[i].doc_id] = i;
  }

  bool files() const { return !dir_.empty(); }

  void preload(const AttackResult& r) {
    auto it = index_.find(r.doc_id);
    if (it != index_.end()) slots_[it->second] = r;
  }

  /// Truncates results.jsonl to the already-complete prefix and starts there.
  void start() {
    std::lock_guard lk(mu_);
    std::string text;
    while (next_ < slots_.size() && slots_[next_]) {
      manifest_.queries_total += slots_[next_]->queries;
      text += to_jsonl_line(*slots_[next_++]);
    }
    if (files()) {
      fs::create_directories(dir_ / "exams");
      fs::create_directories(dir_ / "transcripts");
      write_text(dir_ / "results.jsonl", text);
      write_text(dir_ / "manifest.json", manifest_.to_json().dump(2) + "\n");
    }
  }

  bool pending(std::size_t i) const {
    std::lock_guard lk(mu_);
    return !slots_[i].has_value();
  }

  void submit(std::size_t i, TargetRun run) {
    std::lock_guard lk(mu_);
    if (stop_) return;
    if (files()) {
      auto stem = safe_file_stem(run.result.doc_id);
      if (run.exam) write_text(dir_ / "exams" / (stem + ".json"), nlohmann::json(*run.exam).dump(2) + "\n");
      if (!run.transcript.empty()) write_text(dir_ / "transcripts" / (stem + ".jsonl"), run.transcript);
    }
    slots_[i] = run.result;
    runs_.emplace(i, std::move(run));
    flush();
  }

  bool stopped() const { return stop_.load(); }

  std::vector<AttackResult> results() const {
    std::vector<AttackResult> out;
    for (const auto& s : slots_)
      if (s) out.push_back(*s);
    return out;
  }
  std::map<std::size_t, TargetRun>& runs() { return runs_; }
  Manifest& manifest() { return manifest_; }

 private:
  void flush() {
    std::string text;
    while (next_ < slots_.size() && slots_[next_] && !stop_) {
      const auto& r = *slots_[next_];
      text += to_jsonl_line(r);
      manifest_.status[r.doc_id] = r.complete ? "complete" : "incomplete";
      manifest_.queries_total += r.queries;
      ++next_;
      ++written_;
      if (stop_after_ && written_ >= *stop_after_) stop_ = true;
    }
    if (stop_) {
      // results past the prefix are discarded, exactly as if the process died here
      for (std::size_t k = next_; k < slots_.size(); ++k)
        if (manifest_.status[manifest_.order[k]] == "pending") slots_[k].reset();
    }
    if (files() && !text.empty()) {
      std::ofstream out(dir_ / "results.jsonl", std::ios::binary | std::ios::app);
      out << text;
      out.close();
      write_text(dir_ / "manifest.json", manifest_.to_json().dump(2) + "\n");
    }
  }

  fs::path dir_;
  Manifest manifest_;
  std::optional<std::size_t> stop_after_;
  std::vector<std::optional<AttackResult>> slots_;
  std::map<std::string, std::size_t> index_;
  std::map<std::size_t, TargetRun> runs_;
  std::size_t next_ = 0;
  std::size_t written_ = 0;
  std::atomic<bool> stop_{false};
  mutable std::mutex mu_;
};

CampaignOutcome execute(const CampaignConfig& cfg, const CampaignWorld& world, const EvalSet& targets,
                        Writer& writer, const CampaignOptions& opts) {
  TraceSink traces;
  auto target = make_target(cfg, world, cfg.emit_traces ? &traces : nullptr);
  CountingTarget counted(*target);
  auto attack = make_attack(cfg);

  writer.start();
  std::atomic<std::size_t> cursor{0};
  std::mutex err_mu;
  std::exception_ptr fatal;
  auto worker = [&] {
    for (;;) {
      std::size_t i = cursor.fetch_add(1);
      if (i >= targets.targets.size() || writer.stopped()) return;
      if (!writer.pending(i)) continue;
      const auto& t = targets.targets[i];
      try {
        auto run = audit_target(*attack, world.blind(t.doc_id), t.label, counted, cfg);
        writer.submit(i, std::move(run));
      } catch (...) {
        std::lock_guard lk(err_mu);
        if (!fatal) fatal = std::current_exception();
        return;
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    std::size_t n = std::min<std::size_t>(cfg.max_concurrent_targets, std::max<std::size_t>(1, targets.targets.size()));
    for (std::size_t k = 0; k < n; ++k) pool.emplace_back(worker);
  }
  if (fatal) std::rethrow_exception(fatal);

  CampaignOutcome out;
  out.results = writer.results();
  out.interrupted = writer.stopped();
  out.served_queries = counted.queries_served();
  for (const auto& r : out.results) out.ledger_queries += r.queries;
  out.metrics = compute_metrics(out.results, cfg.tau);
  out.metrics.attack = std::string(to_string(cfg.attack));
  if (auto sim = std::dynamic_pointer_cast<SimulatedRag>(target); sim && cfg.target.defenses.guardrail)
    out.guardrail_pass_rate = sim->guardrail_stats().pass_rate();
  if (opts.keep_runs)
    for (auto& [i, run] : writer.runs()) out.runs.push_back(std::move(run));

  bool any_complete = std::any_of(out.results.begin(), out.results.end(), [](const auto& r) { return r.complete; });
  if (!out.interrupted && !out.results.empty() && !any_complete && target->name() == "remote")
    throw TargetUnavailable("every target failed; see transcripts and manifest.json");

  if (writer.files() && !out.interrupted) {
    const fs::path& dir = cfg.output_dir;
    std::string all;
    for (const auto& r : out.results) all += to_jsonl_line(r);
    write_text(dir / "results.jsonl", all);
    write_text(dir / "metrics.json", nlohmann::json(out.metrics).dump(2) + "\n");
    write_text(dir / "metrics.csv", metrics_csv_header() + metrics_csv_row(out.metrics));
    write_text(dir / "histogram.csv", score_histogram_csv(out.results));
    nlohmann::json budget = {{"total", out.ledger_queries}, {"served_this_session", out.served_queries}};
    nlohmann::json per = nlohmann::json::object();
    for (const auto& r : out.results) per[r.doc_id] = r.queries;
    budget["per_target"] = per;
    budget["incomplete"] = out.metrics.n_incomplete;
    write_text(dir / "budget.json", budget.dump(2) + "\n");
    if (cfg.emit_traces) write_text(dir / "traces.jsonl", traces.to_jsonl());
  }
  return out;
}

Manifest fresh_manifest(const CampaignConfig& cfg, const EvalSet& targets) {
  Manifest m;
  m.config_hash = config_hash(cfg);
  m.config = effective_config_json(cfg);
  for (const auto& t : targets.targets) {
    m.order.push_back(t.doc_id);
    m.status[t.doc_id] = "pending";
  }
  return m;
}

}  // namespace

std::string safe_file_stem(const std::string& doc_id) {
  std::string s;
  for (char c : doc_id) s += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.') ? c : '_';
  if (s.empty() || s == "." || s == "..") s = "_" + s;
  return s;
}

CampaignOutcome run_campaign(const CampaignConfig& cfg, const CampaignOptions& opts) {
  validate(cfg);
  auto world = prepare_world(cfg);
  return run_campaign(cfg, world, opts);
}

CampaignOutcome run_campaign(const CampaignConfig& cfg, const CampaignWorld& world, const CampaignOptions& opts) {
  if (!cfg.output_dir.empty()) {
    fs::create_directories(cfg.output_dir);
    fs::remove(cfg.output_dir / "results.jsonl");
  }
  Writer w(cfg, world.eval, fresh_manifest(cfg, world.eval), opts.stop_after);
  return execute(cfg, world, world.eval, w, opts);
}

CampaignOutcome run_targets(const CampaignConfig& cfg, const CampaignWorld& world, const EvalSet& targets,
                            const CampaignOptions& opts) {
  CampaignConfig c = cfg;
  c.output_dir.clear();
  c.emit_traces = false;
  Writer w(c, targets, fresh_manifest(c, targets), opts.stop_after);
  return execute(c, world, targets, w, opts);
}

CampaignConfig config_from_json(const nlohmann::json& j) {
  toml::Table t;
  auto put = [&](const std::string& key, const nlohmann::json& v) {
    toml::Value x;
    if (v.is_boolean()) {
      x.kind = toml::Value::Kind::Bool;
      x.boolean = v.get<bool>();
    } else if (v.is_number_integer() || v.is_number_unsigned()) {
      x.kind = toml::Value::Kind::Integer;
      x.num = v.get<double>();
    } else if (v.is_number()) {
      x.kind = toml::Value::Kind::Float;
      x.num = v.get<double>();
    } else if (v.is_string()) {
      x.str = v.get<std::string>();
    } else if (v.is_array()) {
      x.kind = toml::Value::Kind::Array;
      for (const auto& e : v) {
        toml::Value y;
        y.kind = toml::Value::Kind::Float;
        y.num = e.get<double>();
        x.items.push_back(y);
      }
    } else {
      throw ManifestCorrupt("unexpected config value for " + key);
    }
    t[key] = x;
  };
  try {
    CampaignConfig cfg;
    // seeds can exceed double precision; set directly
    cfg.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& [sec, body] : j.items()) {
      if (!body.is_object()) continue;
      for (const auto& [k, v] : body.items()) {
        std::string key = sec + "." + k;
        if (key == "target.guardrail") {
          put(key, nlohmann::json(!v.get<std::string>().empty()));
        } else {
          put(key, v);
        }
      }
    }
    apply_toml(cfg, t);
    return cfg;
  } catch (const nlohmann::json::exception& e) {
    throw ManifestCorrupt(std::string("manifest config unreadable: ") + e.what());
  } catch (const ConfigInvalid& e) {
    throw ManifestCorrupt(std::string("manifest config unreadable: ") + e.what());
  }
}

CampaignOutcome resume_campaign(const fs::path& output_dir, const std::optional<CampaignConfig>& given,
                                const CampaignOptions& opts) {
  auto manifest = Manifest::from_file(output_dir / "manifest.json");
  CampaignConfig cfg = given ? *given : config_from_json(manifest.config);
  cfg.output_dir = output_dir;
  if (config_hash(cfg) != manifest.config_hash)
    throw ConfigDrift("configuration changed since the run in " + output_dir.string() +
                      " started (hash " + config_hash(cfg) + " vs " + manifest.config_hash + ")");
  validate(cfg);

  std::vector<AttackResult> previous;
  if (fs::exists(output_dir / "results.jsonl")) {
    try {
      previous = read_results_jsonl(read_text(output_dir / "results.jsonl"));
    } catch (const std::exception& e) {
      throw ManifestCorrupt(std::string("results.jsonl unreadable: ") + e.what());
    }
  }
  auto world = prepare_world(cfg);
  if (world.eval.targets.size() != manifest.order.size())
    throw ManifestCorrupt("manifest target list does not match the eval set");
  for (std::size_t i = 0; i < manifest.order.size(); ++i)
    if (world.eval.targets[i].doc_id != manifest.order[i])
      throw ManifestCorrupt("manifest target list does not match the eval set");

  Manifest m = fresh_manifest(cfg, world.eval);
  Writer w(cfg, world.eval, m, opts.stop_after);
  for (const auto& r : previous)
    if (r.complete && manifest.status.count(r.doc_id) && manifest.status[r.doc_id] == "complete") {
      w.preload(r);
      w.manifest().status[r.doc_id] = "complete";
    }
  return execute(cfg, world, world.eval, w, opts);
}

CalibrationReport calibrate_on_dev(const CampaignConfig& cfg, const CampaignWorld& world) {
  if (world.dev.targets.empty()) throw ConfigInvalid("calibration needs a dev set (dev_per_class > 0)");
  CampaignConfig c = cfg;
  c.attack = AttackKind::EMIA;
  CampaignOptions o;
  o.keep_runs = true;
  auto out = run_targets(c, world, world.dev, o);
  std::vector<LabeledExam> dev;
  for (const auto& run : out.runs)
    if (run.result.complete && run.graded) dev.push_back({*run.graded, *run.result.label});
  CalibrationReport rep;
  rep.n_dev = dev.size();
  rep.weights = calibrate_weights(dev);
  std::vector<LabeledScore> scores;
  for (const auto& e : dev) scores.push_back({aggregate(e.graded, rep.weights.weights), e.label});
  rep.curve = threshold_curve(scores);
  rep.tau = calibrate_threshold(scores);
  // dev metrics under the calibrated parameters, from the exams already graded
  std::vector<AttackResult> rescored;
  for (const auto& run : out.runs) {
    AttackResult r = run.result;
    if (r.complete && run.graded) {
      r.score = aggregate(*run.graded, rep.weights.weights);
      r.threshold = rep.tau;
      r.decision = decide(r.score, rep.tau);
    }
    rescored.push_back(r);
  }
  rep.dev_metrics = compute_metrics(rescored, rep.tau);
  return rep;
}

std::vector<TrialOutcome> run_calibration_trials(const CampaignConfig& cfg, std::size_t n_trials) {
  std::vector<TrialOutcome> trials;
  auto docs = ingest_corpus(cfg.corpus_path, cfg.corpus_format);
  for (std::size_t t = 0; t < n_trials; ++t) {
    CampaignConfig c = cfg;
    c.seed = derive_seed(cfg.seed, "trial", std::to_string(t));
    auto world = prepare_world(c, docs);
    auto rep = calibrate_on_dev(c, world);
    TrialOutcome o;
    char id[32];
    std::snprintf(id, sizeof id, "trial-%03zu", t);
    o.trial_id = id;
    o.weights = rep.weights.weights;
    o.tau = rep.tau;
    o.dev_metrics = rep.dev_metrics;
    trials.push_back(std::move(o));
  }
  return trials;
}

void write_calibration(const fs::path& dir, const CalibrationReport& report, const std::vector<TrialOutcome>& trials,
                       const CalibratedParams& chosen) {
  fs::create_directories(dir);
  nlohmann::json j;
  j["kl"] = {{"FB", report.weights.kl[0]}, {"SC", report.weights.kl[1]}, {"MC", report.weights.kl[2]},
             {"TF", report.weights.kl[3]}};
  j["degenerate"] = report.weights.degenerate;
  j["n_dev"] = report.n_dev;
  j["dev_tau"] = report.tau;
  j["trials"] = trials;
  j["chosen"] = chosen;
  write_text(dir / "calibration.json", j.dump(2) + "\n");
  write_text(dir / "threshold_curve.csv", threshold_curve_csv(report.curve));
}

}  // namespace ragaudit
