#include "ragaudit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "ragaudit/errors.hpp"

namespace ragaudit {

namespace {

std::pair<std::size_t, std::size_t> class_counts(std::span<const LabeledScore> s) {
  std::size_t p = 0, n = 0;
  for (const auto& x : s) (x.label == Label::Member ? p : n)++;
  return {p, n};
}

void require_both(std::span<const LabeledScore> s) {
  auto [p, n] = class_counts(s);
  if (p == 0 || n == 0) throw SingleClass();
}

std::vector<LabeledScore> sorted_desc(std::span<const LabeledScore> s) {
  std::vector<LabeledScore> v(s.begin(), s.end());
  std::stable_sort(v.begin(), v.end(), [](const auto& a, const auto& b) { return a.score > b.score; });
  return v;
}

std::vector<LabeledScore> labeled(std::span<const AttackResult> results) {
  std::vector<LabeledScore> out;
  for (const auto& r : results)
    if (r.complete && r.label) out.push_back({r.score, *r.label});
  return out;
}

}  // namespace

double compute_auc_roc(std::span<const LabeledScore> scores) {
  require_both(scores);
  // midranks over ascending scores
  std::vector<LabeledScore> v(scores.begin(), scores.end());
  std::sort(v.begin(), v.end(), [](const auto& a, const auto& b) { return a.score < b.score; });
  double rank_sum = 0.0;
  std::size_t i = 0;
  while (i < v.size()) {
    std::size_t j = i;
    while (j < v.size() && v[j].score == v[i].score) ++j;
    double mid = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k)
      if (v[k].label == Label::Member) rank_sum += mid;
    i = j;
  }
  auto [p, n] = class_counts(scores);
  double P = static_cast<double>(p), N = static_cast<double>(n);
  return (rank_sum - P * (P + 1) / 2.0) / (P * N);
}

double compute_auc_pr(std::span<const LabeledScore> scores) {
  require_both(scores);
  auto v = sorted_desc(scores);
  auto [p, n] = class_counts(scores);
  (void)n;
  double ap = 0.0, prev_recall = 0.0;
  std::size_t tp = 0, seen = 0, i = 0;
  while (i < v.size()) {
    std::size_t j = i;
    while (j < v.size() && v[j].score == v[i].score) {
      if (v[j].label == Label::Member) ++tp;
      ++j;
    }
    seen = j;
    double recall = static_cast<double>(tp) / static_cast<double>(p);
    double precision = static_cast<double>(tp) / static_cast<double>(seen);
    ap += (recall - prev_recall) * precision;
    prev_recall = recall;
    i = j;
  }
  return ap;
}

double compute_tpr_at_fpr(std::span<const LabeledScore> scores, double fpr_budget) {
  require_both(scores);
  if (!(fpr_budget > 0.0 && fpr_budget < 1.0)) throw std::invalid_argument("fpr_budget must lie in (0,1)");
  auto v = sorted_desc(scores);
  auto [p, n] = class_counts(scores);
  double best = 0.0;  // threshold above every score: TPR = FPR = 0
  std::size_t tp = 0, fp = 0, i = 0;
  while (i < v.size()) {
    std::size_t j = i;
    while (j < v.size() && v[j].score == v[i].score) {
      (v[j].label == Label::Member ? tp : fp)++;
      ++j;
    }
    double fpr = static_cast<double>(fp) / static_cast<double>(n);
    if (fpr <= fpr_budget) best = std::max(best, static_cast<double>(tp) / static_cast<double>(p));
    i = j;
  }
  return best;
}

double accuracy_at(std::span<const LabeledScore> scores, double threshold) {
  if (scores.empty()) return 0.0;
  std::size_t ok = 0;
  for (const auto& s : scores)
    if (decide(s.score, threshold) == s.label) ++ok;
  return static_cast<double>(ok) / static_cast<double>(scores.size());
}

std::pair<double, double> best_accuracy(std::span<const LabeledScore> scores) {
  std::vector<double> cands;
  for (const auto& s : scores) cands.push_back(s.score);
  std::sort(cands.begin(), cands.end());
  cands.erase(std::unique(cands.begin(), cands.end()), cands.end());
  cands.push_back(std::numeric_limits<double>::infinity());
  double best = -1.0, at = 0.0;
  for (double t : cands) {
    double a = accuracy_at(scores, t);
    if (a > best) {
      best = a;
      at = t;
    }
  }
  return {best, at};
}

double kl_divergence(std::span<const double> a, std::span<const double> b, std::size_t bins, double epsilon) {
  if (a.empty() || b.empty()) throw std::invalid_argument("kl_divergence needs non-empty inputs");
  if (bins < 2) throw std::invalid_argument("kl_divergence needs at least 2 bins");
  auto hist = [&](std::span<const double> xs) {
    std::vector<double> h(bins, 0.0);
    for (double x : xs) {
      double c = std::clamp(x, 0.0, 100.0);
      auto k = static_cast<std::size_t>(c / 100.0 * static_cast<double>(bins));
      h[std::min(k, bins - 1)] += 1.0;
    }
    double total = 0.0;
    for (auto& m : h) {
      m = m / static_cast<double>(xs.size()) + epsilon;
      total += m;
    }
    for (auto& m : h) m /= total;
    return h;
  };
  auto p = hist(a), q = hist(b);
  double kl = 0.0;
  for (std::size_t i = 0; i < bins; ++i) kl += p[i] * std::log(p[i] / q[i]);
  return std::max(0.0, kl);
}

MetricsReport compute_metrics(std::span<const AttackResult> results, double threshold) {
  MetricsReport m;
  m.threshold = threshold;
  if (!results.empty()) m.attack = results.front().attack;
  for (const auto& r : results)
    if (!r.complete) ++m.n_incomplete;
  auto s = labeled(results);
  auto [p, n] = class_counts(s);
  m.n_members = p;
  m.n_nonmembers = n;
  if (s.empty()) return m;
  m.accuracy = accuracy_at(s, threshold);
  std::tie(m.acc_at_best, m.best_threshold) = best_accuracy(s);
  if (p == 0 || n == 0) return m;
  m.auc_roc = compute_auc_roc(s);
  m.auc_pr = compute_auc_pr(s);
  for (std::size_t i = 0; i < kFprBudgets.size(); ++i) m.tpr_at_fpr[i] = compute_tpr_at_fpr(s, kFprBudgets[i]);
  std::size_t tp = 0, fp = 0;
  std::vector<double> mem, non;
  for (const auto& x : s) {
    bool yes = decide(x.score, threshold) == Label::Member;
    if (x.label == Label::Member) {
      mem.push_back(x.score);
      tp += yes;
    } else {
      non.push_back(x.score);
      fp += yes;
    }
  }
  m.delta = static_cast<double>(tp) / static_cast<double>(p) - static_cast<double>(fp) / static_cast<double>(n);
  m.kl_mem_non = kl_divergence(mem, non);
  return m;
}

void to_json(nlohmann::json& j, const MetricsReport& m) {
  j = nlohmann::json{{"attack", m.attack},
                     {"threshold", m.threshold},
                     {"accuracy", m.accuracy},
                     {"acc_at_tau", m.accuracy},
                     {"acc_at_best", m.acc_at_best},
                     {"best_threshold", std::isfinite(m.best_threshold) ? nlohmann::json(m.best_threshold)
                                                                        : nlohmann::json("inf")},
                     {"auc_roc", m.auc_roc},
                     {"auc_pr", m.auc_pr},
                     {"tpr_at_fpr", {{"0.05", m.tpr_at_fpr[0]}, {"0.01", m.tpr_at_fpr[1]}, {"0.005", m.tpr_at_fpr[2]}}},
                     {"delta", m.delta},
                     {"kl_mem_non", m.kl_mem_non},
                     {"n_members", m.n_members},
                     {"n_nonmembers", m.n_nonmembers},
                     {"n_incomplete", m.n_incomplete}};
}

void from_json(const nlohmann::json& j, MetricsReport& m) {
  m.attack = j.value("attack", std::string("emia"));
  m.threshold = j.value("threshold", kDefaultTau);
  m.accuracy = j.value("accuracy", 0.0);
  m.acc_at_best = j.value("acc_at_best", 0.0);
  const auto& bt = j.value("best_threshold", nlohmann::json(0.0));
  m.best_threshold = bt.is_number() ? bt.get<double>() : std::numeric_limits<double>::infinity();
  m.auc_roc = j.value("auc_roc", 0.5);
  m.auc_pr = j.value("auc_pr", 0.0);
  if (j.contains("tpr_at_fpr")) {
    const auto& t = j["tpr_at_fpr"];
    m.tpr_at_fpr = {t.value("0.05", 0.0), t.value("0.01", 0.0), t.value("0.005", 0.0)};
  }
  m.delta = j.value("delta", 0.0);
  m.kl_mem_non = j.value("kl_mem_non", 0.0);
  m.n_members = j.value("n_members", std::size_t{0});
  m.n_nonmembers = j.value("n_nonmembers", std::size_t{0});
  m.n_incomplete = j.value("n_incomplete", std::size_t{0});
}

std::string metrics_csv_header() {
  return "attack,acc,auc_roc,auc_pr,tpr_at_fpr_0.05,tpr_at_fpr_0.01,tpr_at_fpr_0.005,acc_at_best,delta,kl_mem_non,"
         "threshold,n_members,n_nonmembers,n_incomplete\n";
}

std::string metrics_csv_row(const MetricsReport& m) {
  char buf[512];
  std::snprintf(buf, sizeof buf, "%s,%.3f,%.3f,%.3f,%.3f,%.3f,%.3f,%.3f,%.3f,%.4f,%.1f,%zu,%zu,%zu\n",
                m.attack.c_str(), m.accuracy, m.auc_roc, m.auc_pr, m.tpr_at_fpr[0], m.tpr_at_fpr[1],
                m.tpr_at_fpr[2], m.acc_at_best, m.delta, m.kl_mem_non, m.threshold, m.n_members, m.n_nonmembers,
                m.n_incomplete);
  return buf;
}

std::string score_histogram_csv(std::span<const AttackResult> results, std::size_t bins) {
  if (bins < 1) throw std::invalid_argument("bins must be >= 1");
  std::vector<std::size_t> mem(bins, 0), non(bins, 0);
  for (const auto& r : results) {
    if (!r.complete || !r.label) continue;
    auto k = static_cast<std::size_t>(std::clamp(r.score, 0.0, 100.0) / 100.0 * static_cast<double>(bins));
    k = std::min(k, bins - 1);
    (*r.label == Label::Member ? mem : non)[k]++;
  }
  std::string out = "bin_lo,bin_hi,members,nonmembers\n";
  const double w = 100.0 / static_cast<double>(bins);
  for (std::size_t i = 0; i < bins; ++i) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "%g,%g,%zu,%zu\n", w * static_cast<double>(i), w * static_cast<double>(i + 1),
                  mem[i], non[i]);
    out += buf;
  }
  return out;
}

}  // namespace ragaudit
