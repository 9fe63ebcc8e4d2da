// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.

#include <chrono>
#include <cstdio>
#include <functional>
#include <string>

#include <nlohmann/json.hpp>

#include "ragaudit/calibration.hpp"
#include "ragaudit/campaign.hpp"
#include "ragaudit/defense.hpp"
#include "ragaudit/grader.hpp"
#include "ragaudit/metrics.hpp"
#include "ragaudit/normalize.hpp"
#include "ragaudit/scoring.hpp"
#include "support.hpp"

using namespace ragaudit;
using testsupport::ScratchDir;
using testsupport::slurp;

namespace {

// pinned tolerances
constexpr double kOracleSeconds = 10.0;
constexpr double kNoisySeconds = 120.0;
constexpr double kMinAuc = 0.95;
constexpr double kMinTpr5 = 0.90;
constexpr double kMaxAucSpread = 0.03;
constexpr double kMaxDefenseDelta = 0.02;
constexpr double kMinEmiaPass = 1.0;
constexpr double kMaxMbaPass = 0.60;
constexpr double kExact = 1e-9;

int failures = 0;

void report(int id, const char* name, bool ok, const std::string& detail) {
  std::printf("%s %2d %-22s %s\n", ok ? "PASS" : "FAIL", id, name, detail.c_str());
  std::fflush(stdout);
  failures += !ok;
}

void check(int id, const char* name, const std::function<std::pair<bool, std::string>()>& body) {
  try {
    auto [ok, detail] = body();
    report(id, name, ok, detail);
  } catch (const std::exception& e) {
    report(id, name, false, std::string("exception: ") + e.what());
  }
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

double kl_of(const CampaignOutcome& o) { return o.metrics.kl_mem_non; }

}  // namespace

int main() {
  const auto noisy = testsupport::demo_config();
  const auto noisy_world = prepare_world(noisy);

  check(1, "oracle-separation", [] {
    auto t0 = std::chrono::steady_clock::now();
    auto out = run_campaign(testsupport::oracle_config());
    double secs = seconds_since(t0);
    bool exact = out.results.size() == 20;
    for (const auto& r : out.results)
      exact = exact && r.label && r.score == (*r.label == Label::Member ? 100.0 : 0.0);
    bool ok = exact && out.metrics.auc_roc == 1.0 && secs < kOracleSeconds;
    return std::pair{ok, std::string(exact ? "members 100.0, non-members 0.0" : "scores NOT exact") +
                             fmt(", auc %.4f, %.2fs (< 10s)", out.metrics.auc_roc, secs)};
  });

  CampaignOutcome base;
  check(2, "noisy-separation", [&] {
    auto t0 = std::chrono::steady_clock::now();
    auto cfg = noisy;
    ScratchDir dir("acc-golden");
    cfg.output_dir = dir.path();
    base = run_campaign(cfg);
    double secs = seconds_since(t0);
    bool golden = slurp(dir / "results.jsonl") == slurp(testsupport::fixture("golden/results.jsonl"));
    bool ok = golden && base.metrics.auc_roc >= kMinAuc && base.metrics.tpr_at_fpr[0] >= kMinTpr5 &&
              base.results.size() == 200 && secs < kNoisySeconds;
    return std::pair{ok, fmt("auc %.4f (>= 0.95), tpr@5%% %.4f (>= 0.90), %.1fs, golden ", base.metrics.auc_roc,
                             base.metrics.tpr_at_fpr[0], secs) +
                             (golden ? "match" : "DIFF")};
  });

  check(3, "baseline-kl-ordering", [&] {
    double emia = kl_of(base.results.empty() ? run_campaign(noisy, noisy_world) : base);
    std::string detail = fmt("emia %.3f", emia);
    bool ok = true;
    for (auto k : {AttackKind::S2MIA, AttackKind::MBA, AttackKind::IA}) {
      auto cfg = noisy;
      cfg.attack = k;
      double kl = kl_of(run_campaign(cfg, noisy_world));
      ok = ok && emia > kl;
      detail += " " + std::string(to_string(k)) + fmt(" %.3f", kl);
    }
    return std::pair{ok, detail};
  });

  check(4, "top-k-stability", [&] {
    double lo = 1.0, hi = 0.0;
    std::string detail;
    for (std::size_t k : {1, 3, 5, 10, 20}) {
      auto cfg = noisy;
      cfg.target.top_k = k;
      double auc = run_campaign(cfg, noisy_world).metrics.auc_roc;
      lo = std::min(lo, auc);
      hi = std::max(hi, auc);
      detail += fmt("k=%.0f:%.4f ", static_cast<double>(k), auc);
    }
    return std::pair{hi - lo <= kMaxAucSpread, detail + fmt("spread %.4f (<= 0.03)", hi - lo)};
  });

  check(5, "rewrite-defenses", [&] {
    auto cfg = noisy;
    cfg.target.defenses.query_rewrite = true;
    cfg.target.defenses.response_rewrite = true;
    double with = run_campaign(cfg, noisy_world).metrics.accuracy;
    double without = base.metrics.accuracy;
    double d = std::abs(with - without);
    return std::pair{d <= kMaxDefenseDelta, fmt("acc %.4f -> %.4f, |delta| %.4f (<= 0.02)", without, with, d)};
  });

  check(6, "guardrail-pass-rate", [&] {
    auto cfg = noisy;
    cfg.target.defenses.guardrail = GuardrailPolicy::bundled();
    double emia = run_campaign(cfg, noisy_world).guardrail_pass_rate.value_or(-1);
    cfg.attack = AttackKind::MBA;
    double mba = run_campaign(cfg, noisy_world).guardrail_pass_rate.value_or(-1);
    return std::pair{emia >= kMinEmiaPass && mba >= 0 && mba <= kMaxMbaPass,
                     fmt("emia %.3f (= 1.000), mba %.3f (<= 0.60)", emia, mba)};
  });

  check(7, "scoring-exactness", [] {
    bool ok = display_score(aggregate({1, 0, 0, 0}, WeightVector::published())) == "31.2";
    ok = ok && std::abs(aggregate({1, 0, 0, 0}, WeightVector::published()) - 31.2) < kExact;
    Rng rng(7);
    for (int i = 0; i < 1000; ++i) {
      std::array<double, 4> w{};
      double s = 0;
      for (auto& x : w) s += (x = rng.uniform());
      for (auto& x : w) x /= s;
      w[3] = 1.0 - w[0] - w[1] - w[2];
      ok = ok && std::abs(aggregate({1, 1, 1, 1}, WeightVector::from_array(w)) - 100.0) < kExact;
    }
    ok = ok && decide(62.2, 62.2) == Label::Member && decide(62.19, 62.2) == Label::NonMember;
    return std::pair{ok, std::string("31.2 / 100.0 over 1000 weight vectors / decide(62.2, 62.2) = member")};
  });

  check(8, "metric-oracles", [] {
    Rng rng(2025);
    int auc_bad = 0, tpr_bad = 0, medoid_bad = 0;
    for (int i = 0; i < 100; ++i) {
      auto s = testsupport::random_scores(rng);
      auc_bad += std::abs(compute_auc_roc(s) - testsupport::brute_auc(s)) > 1e-12;
      double prev = 0;
      for (double b : {0.005, 0.01, 0.05, 0.1, 0.2, 0.5, 0.9}) {
        double t = compute_tpr_at_fpr(s, b);
        tpr_bad += t < prev || std::abs(t - testsupport::brute_tpr_at_fpr(s, b)) > 1e-12;
        prev = t;
      }
    }
    for (int i = 0; i < 20; ++i) {
      auto trials = testsupport::random_trials(rng, 25);
      std::vector<std::array<double, 5>> pv;
      for (const auto& t : trials) pv.push_back(param_vector(t));
      medoid_bad += medoid_params(trials).provenance.front() != trials[testsupport::brute_medoid(pv)].trial_id;
    }
    bool ok = auc_bad == 0 && tpr_bad == 0 && medoid_bad == 0;
    return std::pair{ok, fmt("auc diffs %.0f/100, tpr violations %.0f, medoid diffs %.0f/20", auc_bad, tpr_bad,
                             medoid_bad)};
  });

  check(9, "grader-conformance", [] {
    std::ifstream in(testsupport::fixture("grader_golden.jsonl"));
    std::string line;
    int n = 0, diffs = 0;
    while (std::getline(in, line)) {
      auto rec = nlohmann::json::parse(line);
      ++n;
      auto item = rec["item"].get<ExamItem>();
      RawResponse r{item.item_id, rec["response"]["text"].get<std::string>(), 0,
                    rec["response"]["refused"].get<bool>()};
      auto g = grade_item(item, r);
      const auto& e = rec["expected"];
      std::optional<FailureKind> kind;
      if (!e["failure_kind"].is_null()) kind = failure_kind_from_string(e["failure_kind"].get<std::string>());
      bool ok = g.correct == e["correct"].get<bool>() && g.failure_kind == kind;
      if (e.contains("extracted")) ok = ok && g.extracted && *g.extracted == e["extracted"].get<AnswerKey>();
      diffs += !ok;
    }
    Rng rng(20240611);
    int unstable = 0;
    for (int i = 0; i < 1000; ++i) {
      auto s = testsupport::fuzz_string(rng);
      for (auto rule : {GradingRule::ExactNormalized, GradingRule::NumericCanonical, GradingRule::DateCanonical,
                        GradingRule::OptionSet}) {
        auto once = normalize(s, rule);
        unstable += normalize(once, rule) != once;
      }
    }
    return std::pair{n == 50 && diffs == 0 && unstable == 0,
                     fmt("%.0f transcripts, %.0f diffs; normalize unstable on %.0f of 4000", n, diffs, unstable)};
  });

  check(10, "determinism-resume", [&] {
    ScratchDir a("acc-a"), b("acc-b"), c("acc-c");
    auto cfg = noisy;
    cfg.eval_per_class = 30;
    cfg.output_dir = a.path();
    run_campaign(cfg);
    cfg.output_dir = b.path();
    cfg.max_concurrent_targets = 1;
    run_campaign(cfg);
    cfg.output_dir = c.path();
    cfg.max_concurrent_targets = 4;
    CampaignOptions stop;
    stop.stop_after = 17;
    run_campaign(cfg, stop);
    resume_campaign(c.path());
    auto ra = slurp(a / "results.jsonl");
    bool same = !ra.empty() && ra == slurp(b / "results.jsonl");
    bool resumed = ra == slurp(c / "results.jsonl");
    return std::pair{same && resumed, std::string("repeat run ") + (same ? "identical" : "DIFFERS") +
                                          ", stop@17 + resume " + (resumed ? "identical" : "DIFFERS")};
  });

  check(11, "calibration-sanity", [] {
    auto cfg = testsupport::demo_config();
    cfg.eval_per_class = 20;
    cfg.dev_per_class = 50;
    cfg.oracle.p_hit = 1.0;
    cfg.oracle.familiarity_max = 0.0;
    cfg.oracle.paraphrase_rate = 0.0;
    auto world = prepare_world(cfg);
    auto rep = calibrate_on_dev(cfg, world);
    const auto& w = rep.weights.weights;
    std::vector<LabeledScore> sep;
    Rng rng(4);
    for (int i = 0; i < 40; ++i) sep.push_back({70 + rng.uniform() * 30, Label::Member});
    for (int i = 0; i < 40; ++i) sep.push_back({rng.uniform() * 55, Label::NonMember});
    double tau = calibrate_threshold(sep);
    double ba = balanced_accuracy(sep, tau);
    return std::pair{w.w_fb > w.w_tf && ba == 1.0,
                     fmt("w_fb %.3f > w_tf %.3f; separated fixture tau %.2f balanced acc %.3f", w.w_fb, w.w_tf, tau,
                         ba)};
  });

  std::printf("%s: %d of 11 criteria failed\n", failures ? "FAIL" : "PASS", failures);
  return failures ? 1 : 0;
}
