#include "ragaudit/target.hpp"

#include <algorithm>
#include <chrono>

#include <nlohmann/json.hpp>

#include "ragaudit/errors.hpp"
#include "ragaudit/rng.hpp"
#include "ragaudit/text.hpp"

namespace ragaudit {

std::string_view to_string(TargetKind k) { return k == TargetKind::SimulatedRAG ? "sim" : "remote"; }
std::string_view to_string(RetrieverKind k) { return k == RetrieverKind::BM25Lexical ? "bm25" : "embedding"; }

OracleGeneratorConfig OracleGeneratorConfig::oracle() {
  OracleGeneratorConfig c;
  c.p_hit = 1.0;
  c.guess_fb = 0.0;
  c.guess_tf = 0.0;
  c.choice_guessing = false;
  c.familiarity_max = 0.0;
  c.paraphrase_rate = 0.0;
  c.guess_mask = 0.0;
  return c;
}

void OracleGeneratorConfig::validate() const {
  for (double p : {p_hit, guess_fb, guess_tf, familiarity_max, paraphrase_rate, guess_mask})
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigInvalid("oracle probabilities must lie in [0,1]");
}

void TraceSink::add(RetrievalTrace t) {
  std::lock_guard<std::mutex> lock(mu_);
  traces_.push_back(std::move(t));
}

std::vector<RetrievalTrace> TraceSink::snapshot() const {
  std::lock_guard<std::mutex> lock(mu_);
  return traces_;
}

std::string TraceSink::to_jsonl() const {
  auto ts = snapshot();
  std::stable_sort(ts.begin(), ts.end(),
                   [](const RetrievalTrace& a, const RetrievalTrace& b) { return a.query_id < b.query_id; });
  std::string out;
  for (const auto& t : ts) {
    nlohmann::ordered_json j;
    j["query_id"] = t.query_id;
    j["retrieved_doc_ids"] = t.retrieved_doc_ids;
    if (t.contains_target) j["contains_target"] = *t.contains_target;
    out += j.dump() + "\n";
  }
  return out;
}

SimulatedRag::SimulatedRag(std::shared_ptr<const Retriever> index, TargetConfig config,
                           OracleGeneratorConfig oracle, TraceSink* traces)
    : index_(std::move(index)), cfg_(std::move(config)), gen_(oracle), traces_(traces) {
  if (cfg_.top_k < 1) throw ConfigInvalid("top_k must be >= 1");
  gen_.validate();
}

double SimulatedRag::familiarity(const std::string& doc_id) const {
  std::uint64_t h = mix64(derive_seed(cfg_.seed, "familiarity", doc_id));
  double u = static_cast<double>(h >> 11) * 0x1.0p-53;
  return gen_.familiarity_max * u;
}

bool SimulatedRag::anchor_hit(std::string_view anchor, const std::vector<std::size_t>& retrieved) const {
  auto needle = text::word_tokens(anchor);
  if (needle.empty()) return false;
  for (auto c : retrieved)
    if (text::contains_token_run(index_->chunks()[c].terms, needle)) return true;
  return false;
}

namespace {

const std::vector<std::string>& filler_words() {
  static const std::vector<std::string> w = {
      "the",     "results", "were",   "consistent", "with",     "previous", "reports", "and",
      "further", "work",    "is",     "needed",     "to",       "clarify",  "these",   "effects",
      "overall", "data",    "suggest", "a",         "possible", "role",     "in",      "patients"};
  return w;
}

template <typename T>
const T& pick(const std::vector<T>& v, Rng& rng) {
  return v[rng.below(v.size())];
}

std::string letters_text(const LetterSet& s, Rng& rng) {
  std::vector<char> l(s.begin(), s.end());
  if (l.size() == 1) {
    static const std::vector<std::string> styles = {"{}", "The answer is ({}).", "Option {} is correct.",
                                                    "I would choose {}."};
    std::string st = pick(styles, rng);
    return text::replace_all(st, "{}", std::string(1, l[0]));
  }
  std::string a(1, l[0]), b(1, l[1]);
  switch (rng.below(4)) {
    case 0: return a + " and " + b;
    case 1: return "The correct options are " + a + " and " + b + ".";
    case 2: return "(" + a + ") and (" + b + ")";
    default: return "I choose " + a + " and " + b + ".";
  }
}

std::string truth_text(bool t, Rng& rng) {
  static const std::vector<std::string> yes = {"True", "True.", "That statement is true."};
  static const std::vector<std::string> no = {"False", "False.", "That statement is false."};
  return pick(t ? yes : no, rng);
}

std::string fill_text(const std::string& answer, Rng& rng) {
  switch (rng.below(4)) {
    case 0: return answer;
    case 1: return "The missing text is " + answer + ".";
    case 2: return "It is " + answer + ".";
    default: return "Based on the passage, " + answer + ".";
  }
}

std::string wrong_fill(const ExamItem& item, Rng& rng) {
  for (int attempt = 0; attempt < 4; ++attempt) {
    std::string cand;
    if (!item.decoys.empty()) {
      cand = pick(item.decoys, rng);
    } else {
      static const std::vector<std::string> generic = {"not specified", "a control group", "unclear",
                                                       "several weeks", "the baseline value"};
      cand = pick(generic, rng);
    }
    bool hits_gold = false;
    auto toks = text::answer_tokens(normalize(cand, item.normalization));
    for (const auto& g : item.gold.blanks) {
      auto n = text::answer_tokens(normalize(g, item.normalization));
      if (text::contains_token_run(toks, n)) hits_gold = true;
    }
    if (!hits_gold) return cand;
  }
  return "not specified";
}

}  // namespace

std::string SimulatedRag::generate(const Query& q, std::size_t hint_index,
                                   const std::vector<std::size_t>& retrieved) const {
  const QueryHint& h = q.hints[hint_index];
  Rng rng(derive_seed(cfg_.seed, q.query_id, std::to_string(hint_index)));
  const double fam = familiarity(h.doc_id);
  const bool hit = !h.anchors.empty() && anchor_hit(h.anchors.front(), retrieved);
  const bool know = hit && rng.bernoulli(gen_.p_hit);

  switch (h.kind) {
    case QueryHint::Kind::ExamItem: {
      if (!h.item) return "I am not sure.";
      const ExamItem& item = *h.item;
      switch (item.qtype) {
        case QuestionType::FB: {
          bool ok = know || rng.bernoulli(gen_.guess_fb);
          return fill_text(ok ? text::join(item.gold.blanks, "; ") : wrong_fill(item, rng), rng);
        }
        case QuestionType::SC:
        case QuestionType::MC: {
          std::vector<LetterSet> choices;
          const auto& opts = item.options;
          if (item.qtype == QuestionType::SC) {
            for (const auto& o : opts) choices.push_back({o.letter});
          } else {
            for (std::size_t i = 0; i < opts.size(); ++i)
              for (std::size_t j = i + 1; j < opts.size(); ++j) choices.push_back({opts[i].letter, opts[j].letter});
          }
          if (know) return letters_text(item.gold.letters, rng);
          if (!gen_.choice_guessing)
            choices.erase(std::remove(choices.begin(), choices.end(), item.gold.letters), choices.end());
          if (choices.empty()) return "I am not sure.";
          return letters_text(pick(choices, rng), rng);
        }
        case QuestionType::TF: {
          if (know) return truth_text(item.gold.truth, rng);
          if (rng.bernoulli(fam)) return truth_text(true, rng);
          bool ok = rng.bernoulli(gen_.guess_tf);
          return truth_text(ok ? item.gold.truth : !item.gold.truth, rng);
        }
      }
      return "I am not sure.";
    }
    case QueryHint::Kind::YesNo: {
      bool yes = know || rng.bernoulli(fam + (1.0 - fam) * gen_.guess_tf);
      static const std::vector<std::string> y = {"Yes", "Yes, that is accurate.", "Yes."};
      static const std::vector<std::string> n = {"No", "No, that does not match.", "No."};
      return pick(yes ? y : n, rng);
    }
    case QueryHint::Kind::Continuation: {
      double keep = know ? 1.0 - gen_.paraphrase_rate : fam;
      std::vector<std::string> out;
      for (auto tok : text::split_ws(h.reference))
        out.push_back(rng.bernoulli(keep) ? std::string(tok) : pick(filler_words(), rng));
      return text::join(out, " ");
    }
    case QueryHint::Kind::MaskFill: {
      std::string out;
      const double miss_rate = gen_.guess_mask + (1.0 - gen_.guess_mask) * fam;
      for (std::size_t j = 0; j < h.answers.size(); ++j) {
        bool hit_j = j < h.anchors.size() && anchor_hit(h.anchors[j], retrieved);
        bool ok = (hit_j && rng.bernoulli(gen_.p_hit)) || rng.bernoulli(miss_rate);
        std::string word = ok ? h.answers[j] : pick(filler_words(), rng);
        if (!ok && normalize(word, GradingRule::ExactNormalized) ==
                       normalize(h.answers[j], GradingRule::ExactNormalized))
          word = "unknown";
        out += "[MASK_" + std::to_string(j + 1) + "]: " + word + "\n";
      }
      return out;
    }
  }
  return {};
}

RawResponse SimulatedRag::answer(const Query& query) const {
  ++served_;
  RawResponse r;
  r.item_id = query.query_id;
  if (cfg_.defenses.guardrail) {
    if (guardrail_check(query.text, *cfg_.defenses.guardrail) == GuardrailVerdict::Block) {
      ++stats_.blocked;
      r.refused = true;
      r.text = cfg_.defenses.guardrail->refusal_message;
      return r;
    }
    ++stats_.passed;
  }
  const std::uint64_t qseed = derive_seed(cfg_.seed, "query", query.query_id);
  std::string search_text = cfg_.defenses.query_rewrite ? rewrite_query(query.text, qseed) : query.text;
  std::vector<std::size_t> retrieved;
  for (const auto& sc : index_->search(search_text, cfg_.top_k)) retrieved.push_back(sc.chunk);

  if (traces_) {
    RetrievalTrace t;
    t.query_id = query.query_id;
    for (auto c : retrieved) t.retrieved_doc_ids.push_back(index_->chunks()[c].doc_id);
    if (!query.hints.empty()) {
      const auto& d = query.hints.front().doc_id;
      t.contains_target = std::find(t.retrieved_doc_ids.begin(), t.retrieved_doc_ids.end(), d) !=
                          t.retrieved_doc_ids.end();
    }
    traces_->add(std::move(t));
  }

  if (query.hints.size() == 1) {
    r.text = generate(query, 0, retrieved);
  } else {
    for (std::size_t i = 0; i < query.hints.size(); ++i) {
      if (i) r.text += "\n";
      r.text += std::to_string(i + 1) + ". " + generate(query, i, retrieved);
    }
  }
  if (cfg_.defenses.response_rewrite) r.text = rewrite_response(r.text, qseed);
  return r;
}

RemoteHttpTarget::RemoteHttpTarget(std::shared_ptr<const ChatClient> client, std::string system_prompt)
    : client_(std::move(client)), system_prompt_(std::move(system_prompt)) {}

RawResponse RemoteHttpTarget::answer(const Query& query) const {
  ++served_;
  std::vector<ChatMessage> msgs;
  if (!system_prompt_.empty()) msgs.push_back({"system", system_prompt_});
  msgs.push_back({"user", query.text});
  auto t0 = std::chrono::steady_clock::now();
  RawResponse r;
  r.item_id = query.query_id;
  r.text = client_->complete(msgs);
  r.latency_ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - t0).count();
  r.refused = text::trim(r.text).empty();
  return r;
}

}  // namespace ragaudit
