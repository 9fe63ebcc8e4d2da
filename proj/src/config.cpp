#include "ragaudit/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ragaudit/errors.hpp"
#include "ragaudit/rng.hpp"

namespace ragaudit {

namespace {

using toml::Value;

std::string expect_string(const std::string& key, const Value& v) {
  if (v.kind != Value::Kind::String) throw ConfigInvalid(key + " must be a string");
  return v.str;
}

double expect_number(const std::string& key, const Value& v) {
  if (!v.is_number()) throw ConfigInvalid(key + " must be a number");
  return v.num;
}

std::size_t expect_count(const std::string& key, const Value& v) {
  double d = expect_number(key, v);
  if (d < 0 || d != std::floor(d)) throw ConfigInvalid(key + " must be a non-negative integer");
  return static_cast<std::size_t>(d);
}

int expect_int(const std::string& key, const Value& v) { return static_cast<int>(expect_count(key, v)); }

bool expect_bool(const std::string& key, const Value& v) {
  if (v.kind != Value::Kind::Bool) throw ConfigInvalid(key + " must be true or false");
  return v.boolean;
}

std::uint64_t expect_seed(const std::string& key, const Value& v) {
  if (v.kind != Value::Kind::Integer || v.num < 0) throw ConfigInvalid(key + " must be a non-negative integer");
  return static_cast<std::uint64_t>(v.num);
}

using Setter = std::function<void(CampaignConfig&, const std::string&, const Value&)>;

void remote_keys(std::map<std::string, Setter>& m, const std::string& sec, RemoteSettings CampaignConfig::*field) {
  m[sec + ".base_url"] = [field](auto& c, auto& k, auto& v) { (c.*field).base_url = expect_string(k, v); };
  m[sec + ".model"] = [field](auto& c, auto& k, auto& v) { (c.*field).model = expect_string(k, v); };
  m[sec + ".temperature"] = [field](auto& c, auto& k, auto& v) { (c.*field).temperature = expect_number(k, v); };
  m[sec + ".timeout_s"] = [field](auto& c, auto& k, auto& v) { (c.*field).timeout_s = expect_int(k, v); };
  m[sec + ".retries"] = [field](auto& c, auto& k, auto& v) { (c.*field).retries = expect_int(k, v); };
  m[sec + ".max_in_flight"] = [field](auto& c, auto& k, auto& v) { (c.*field).max_in_flight = expect_int(k, v); };
  m[sec + ".system_prompt"] = [field](auto& c, auto& k, auto& v) { (c.*field).system_prompt = expect_string(k, v); };
  m[sec + ".embedding_model"] = [field](auto& c, auto& k, auto& v) {
    (c.*field).embedding_model = expect_string(k, v);
  };
}

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> m = [] {
    std::map<std::string, Setter> s;
    s["seed"] = [](auto& c, auto& k, auto& v) { c.seed = expect_seed(k, v); };
    s["corpus.path"] = [](auto& c, auto& k, auto& v) { c.corpus_path = expect_string(k, v); };
    s["corpus.format"] = [](auto& c, auto& k, auto& v) { c.corpus_format = corpus_format_from_string(expect_string(k, v)); };
    s["corpus.member_fraction"] = [](auto& c, auto& k, auto& v) { c.member_fraction = expect_number(k, v); };
    s["corpus.eval_per_class"] = [](auto& c, auto& k, auto& v) { c.eval_per_class = expect_count(k, v); };
    s["corpus.dev_per_class"] = [](auto& c, auto& k, auto& v) { c.dev_per_class = expect_count(k, v); };

    s["attack.kind"] = [](auto& c, auto& k, auto& v) { c.attack = attack_kind_from_string(expect_string(k, v)); };
    s["attack.n_items"] = [](auto& c, auto& k, auto& v) { c.n_items = expect_count(k, v); };
    s["attack.max_units"] = [](auto& c, auto& k, auto& v) { c.max_units = expect_count(k, v); };
    s["attack.batch_items"] = [](auto& c, auto& k, auto& v) { c.batch_items = expect_bool(k, v); };
    s["attack.n_masks"] = [](auto& c, auto& k, auto& v) { c.n_masks = expect_count(k, v); };
    s["attack.n_questions"] = [](auto& c, auto& k, auto& v) { c.n_questions = expect_count(k, v); };
    s["attack.extractor"] = [](auto& c, auto& k, auto& v) { c.extractor = expect_string(k, v); };

    s["exam.sc_options"] = [](auto& c, auto& k, auto& v) { c.item_spec.sc_options = expect_int(k, v); };
    s["exam.sc_similar"] = [](auto& c, auto& k, auto& v) { c.item_spec.sc_similar = expect_int(k, v); };
    s["exam.fb_blanks"] = [](auto& c, auto& k, auto& v) { c.item_spec.fb_blanks = expect_int(k, v); };
    s["exam.mc_options"] = [](auto& c, auto& k, auto& v) { c.item_spec.mc_options = expect_int(k, v); };
    s["exam.mc_correct"] = [](auto& c, auto& k, auto& v) { c.item_spec.mc_correct = expect_int(k, v); };

    s["scoring.weights"] = [](auto& c, auto& k, auto& v) {
      if (v.kind != Value::Kind::Array || v.items.size() != 4)
        throw ConfigInvalid(k + " must be an array of four numbers (FB, SC, MC, TF)");
      std::array<double, 4> w{};
      for (std::size_t i = 0; i < 4; ++i) w[i] = expect_number(k, v.items[i]);
      c.weights = WeightVector::from_array(w);
    };
    s["scoring.tau"] = [](auto& c, auto& k, auto& v) { c.tau = expect_number(k, v); };

    s["target.kind"] = [](auto& c, auto& k, auto& v) {
      auto x = expect_string(k, v);
      if (x == "sim") c.target.kind = TargetKind::SimulatedRAG;
      else if (x == "remote") c.target.kind = TargetKind::RemoteHTTP;
      else throw ConfigInvalid(k + " must be \"sim\" or \"remote\"");
    };
    s["target.top_k"] = [](auto& c, auto& k, auto& v) { c.target.top_k = expect_count(k, v); };
    s["target.retriever"] = [](auto& c, auto& k, auto& v) {
      auto x = expect_string(k, v);
      if (x == "bm25") c.target.retriever = RetrieverKind::BM25Lexical;
      else if (x == "embedding") c.target.retriever = RetrieverKind::RemoteEmbedding;
      else throw ConfigInvalid(k + " must be \"bm25\" or \"embedding\"");
    };
    s["target.chunk_tokens"] = [](auto& c, auto& k, auto& v) { c.target.chunk_tokens = expect_count(k, v); };
    s["target.chunk_overlap"] = [](auto& c, auto& k, auto& v) { c.target.chunk_overlap = expect_count(k, v); };
    s["target.query_rewrite"] = [](auto& c, auto& k, auto& v) { c.target.defenses.query_rewrite = expect_bool(k, v); };
    s["target.response_rewrite"] = [](auto& c, auto& k, auto& v) {
      c.target.defenses.response_rewrite = expect_bool(k, v);
    };
    s["target.guardrail"] = [](auto& c, auto& k, auto& v) {
      if (expect_bool(k, v)) c.target.defenses.guardrail = GuardrailPolicy::bundled();
      else c.target.defenses.guardrail.reset();
    };

    s["oracle.p_hit"] = [](auto& c, auto& k, auto& v) { c.oracle.p_hit = expect_number(k, v); };
    s["oracle.guess_fb"] = [](auto& c, auto& k, auto& v) { c.oracle.guess_fb = expect_number(k, v); };
    s["oracle.guess_tf"] = [](auto& c, auto& k, auto& v) { c.oracle.guess_tf = expect_number(k, v); };
    s["oracle.choice_guessing"] = [](auto& c, auto& k, auto& v) { c.oracle.choice_guessing = expect_bool(k, v); };
    s["oracle.familiarity_max"] = [](auto& c, auto& k, auto& v) { c.oracle.familiarity_max = expect_number(k, v); };
    s["oracle.paraphrase_rate"] = [](auto& c, auto& k, auto& v) { c.oracle.paraphrase_rate = expect_number(k, v); };
    s["oracle.guess_mask"] = [](auto& c, auto& k, auto& v) { c.oracle.guess_mask = expect_number(k, v); };

    remote_keys(s, "remote", &CampaignConfig::remote);
    remote_keys(s, "generator", &CampaignConfig::generator);

    s["output.dir"] = [](auto& c, auto& k, auto& v) { c.output_dir = expect_string(k, v); };
    s["output.emit_traces"] = [](auto& c, auto& k, auto& v) { c.emit_traces = expect_bool(k, v); };
    s["run.max_concurrent_targets"] = [](auto& c, auto& k, auto& v) { c.max_concurrent_targets = expect_count(k, v); };
    return s;
  }();
  return m;
}

bool names_secret(const std::string& key) {
  auto last = key.substr(key.rfind('.') == std::string::npos ? 0 : key.rfind('.') + 1);
  for (auto& ch : last) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return last.find("api_key") != std::string::npos || last.find("apikey") != std::string::npos ||
         last == "token" || last == "secret";
}

nlohmann::json remote_json(const RemoteSettings& r) {
  return {{"base_url", r.base_url},           {"model", r.model},   {"temperature", r.temperature},
          {"timeout_s", r.timeout_s},         {"retries", r.retries}, {"system_prompt", r.system_prompt},
          {"embedding_model", r.embedding_model}};
}

}  // namespace

void apply_toml(CampaignConfig& cfg, const toml::Table& table) {
  for (const auto& [key, value] : table) {
    if (names_secret(key))
      throw ConfigInvalid("line " + std::to_string(value.line) + ": '" + key +
                          "' looks like a credential; API keys are read from " + kTargetKeyEnv + " / " +
                          kGeneratorKeyEnv + " only");
    auto it = setters().find(key);
    if (it == setters().end())
      throw ConfigInvalid("line " + std::to_string(value.line) + ": unknown key '" + key + "'");
    it->second(cfg, key, value);
  }
}

CampaignConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigInvalid("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  CampaignConfig cfg;
  apply_toml(cfg, toml::parse(ss.str()));
  // relative corpus paths resolve against the config file's directory
  if (!cfg.corpus_path.empty() && cfg.corpus_path.is_relative())
    cfg.corpus_path = path.parent_path() / cfg.corpus_path;
  return cfg;
}

void validate(const CampaignConfig& cfg) {
  if (cfg.corpus_path.empty()) throw ConfigInvalid("corpus path is required");
  if (!(cfg.member_fraction > 0.0 && cfg.member_fraction < 1.0))
    throw ConfigInvalid("member_fraction must lie in (0,1)");
  if (cfg.eval_per_class == 0) throw ConfigInvalid("eval_per_class must be >= 1");
  if (cfg.attack == AttackKind::EMIA && (cfg.n_items == 0 || cfg.n_items % 4 != 0))
    throw ConfigInvalid("n_items must be a positive multiple of 4");
  check_item_spec(cfg.item_spec);
  if (!cfg.weights.valid()) throw ConfigInvalid("weights must lie in [0,1] and sum to 1");
  if (!(cfg.tau >= 0.0 && cfg.tau <= 100.0)) throw ConfigInvalid("tau must lie in [0,100]");
  if (cfg.target.top_k == 0) throw ConfigInvalid("top_k must be >= 1");
  if (cfg.target.chunk_tokens == 0 || cfg.target.chunk_overlap >= cfg.target.chunk_tokens)
    throw ConfigInvalid("chunk_overlap must be smaller than chunk_tokens");
  if (cfg.max_concurrent_targets == 0) throw ConfigInvalid("max_concurrent_targets must be >= 1");
  if (cfg.n_masks == 0) throw ConfigInvalid("n_masks must be >= 1");
  if (cfg.n_questions == 0) throw ConfigInvalid("n_questions must be >= 1");
  if (cfg.extractor != "rules" && cfg.extractor != "llm") throw ConfigInvalid("extractor must be rules or llm");
  if (cfg.target.kind == TargetKind::RemoteHTTP && cfg.remote.base_url.empty())
    throw ConfigInvalid("remote.base_url is required for target = remote");
  if (cfg.extractor == "llm" && cfg.generator.base_url.empty())
    throw ConfigInvalid("generator.base_url is required for extractor = llm");
  cfg.oracle.validate();
}

nlohmann::json effective_config_json(const CampaignConfig& c) {
  nlohmann::json j;
  j["seed"] = c.seed;
  j["corpus"] = {{"path", c.corpus_path.generic_string()},
                 {"format", c.corpus_format == CorpusFormat::BeirJsonl ? "jsonl" : "plain-dir"},
                 {"member_fraction", c.member_fraction},
                 {"eval_per_class", c.eval_per_class},
                 {"dev_per_class", c.dev_per_class}};
  j["attack"] = {{"kind", to_string(c.attack)}, {"n_items", c.n_items},     {"max_units", c.max_units},
                 {"batch_items", c.batch_items}, {"n_masks", c.n_masks},    {"n_questions", c.n_questions},
                 {"extractor", c.extractor}};
  j["exam"] = {{"sc_options", c.item_spec.sc_options}, {"sc_similar", c.item_spec.sc_similar},
               {"fb_blanks", c.item_spec.fb_blanks},   {"mc_options", c.item_spec.mc_options},
               {"mc_correct", c.item_spec.mc_correct}};
  j["scoring"] = {{"weights", c.weights.as_array()}, {"tau", c.tau}};
  j["target"] = {{"kind", to_string(c.target.kind)},
                 {"top_k", c.target.top_k},
                 {"retriever", to_string(c.target.retriever)},
                 {"chunk_tokens", c.target.chunk_tokens},
                 {"chunk_overlap", c.target.chunk_overlap},
                 {"query_rewrite", c.target.defenses.query_rewrite},
                 {"response_rewrite", c.target.defenses.response_rewrite},
                 {"guardrail", c.target.defenses.guardrail ? c.target.defenses.guardrail->version : ""}};
  j["oracle"] = {{"p_hit", c.oracle.p_hit},
                 {"guess_fb", c.oracle.guess_fb},
                 {"guess_tf", c.oracle.guess_tf},
                 {"choice_guessing", c.oracle.choice_guessing},
                 {"familiarity_max", c.oracle.familiarity_max},
                 {"paraphrase_rate", c.oracle.paraphrase_rate},
                 {"guess_mask", c.oracle.guess_mask}};
  j["remote"] = remote_json(c.remote);
  j["generator"] = remote_json(c.generator);
  return j;
}

std::string config_hash(const CampaignConfig& cfg) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a(effective_config_json(cfg).dump())));
  return buf;
}

}  // namespace ragaudit
