#include "ragaudit/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "ragaudit/errors.hpp"

namespace ragaudit {

WeightVector weights_from_kl(const std::array<double, 4>& kl) {
  double total = 0.0;
  for (double k : kl) {
    if (k < 0.0 || !std::isfinite(k)) throw ConfigInvalid("KL values must be finite and non-negative");
    total += k;
  }
  if (total <= 0.0) throw DegenerateDistribution();
  std::array<double, 4> w{};
  for (std::size_t i = 0; i < 4; ++i) w[i] = kl[i] / total;
  // exact unit sum despite rounding
  w[3] = 1.0 - w[0] - w[1] - w[2];
  if (w[3] < 0.0) w[3] = 0.0;
  return WeightVector::from_array(w);
}

WeightCalibration calibrate_weights(std::span<const LabeledExam> dev) {
  std::array<std::vector<double>, 4> mem, non;
  for (const auto& e : dev) {
    for (auto q : kAllQuestionTypes) {
      if (!e.graded.has(q))
        throw ConfigInvalid("calibration exam " + e.graded.doc_id + " has no " + std::string(to_string(q)) +
                            " items");
      (e.label == Label::Member ? mem : non)[index_of(q)].push_back(100.0 * e.graded.accuracy(q));
    }
  }
  if (mem[0].empty() || non[0].empty()) throw SingleClass();
  WeightCalibration out;
  // non-member accuracies as P: a type whose guesses pile up at 0 separates best
  for (std::size_t i = 0; i < 4; ++i) out.kl[i] = kl_divergence(non[i], mem[i]);
  try {
    out.weights = weights_from_kl(out.kl);
  } catch (const DegenerateDistribution&) {
    out.weights = WeightVector::uniform();
    out.degenerate = true;
  }
  return out;
}

double balanced_accuracy(std::span<const LabeledScore> scores, double threshold) {
  std::size_t p = 0, n = 0, tp = 0, tn = 0;
  for (const auto& s : scores) {
    bool yes = s.score >= threshold;
    if (s.label == Label::Member) {
      ++p;
      tp += yes;
    } else {
      ++n;
      tn += !yes;
    }
  }
  if (p == 0 || n == 0) throw SingleClass();
  return 0.5 * (static_cast<double>(tp) / static_cast<double>(p) + static_cast<double>(tn) / static_cast<double>(n));
}

std::vector<ThresholdPoint> threshold_curve(std::span<const LabeledScore> dev) {
  std::vector<double> v;
  for (const auto& s : dev) v.push_back(s.score);
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  std::vector<double> cands;
  if (!v.empty()) cands.push_back(v.front());
  for (std::size_t i = 1; i < v.size(); ++i) cands.push_back(0.5 * (v[i - 1] + v[i]));
  if (!v.empty()) cands.push_back(v.back() + 1.0);
  std::vector<ThresholdPoint> out;
  for (double t : cands) out.push_back({t, balanced_accuracy(dev, t)});
  return out;
}

double calibrate_threshold(std::span<const LabeledScore> dev) {
  auto curve = threshold_curve(dev);
  if (curve.empty()) throw SingleClass();
  const ThresholdPoint* best = &curve.front();
  for (const auto& pt : curve)
    if (pt.balanced_accuracy > best->balanced_accuracy) best = &pt;  // ascending, so first max is smallest
  return std::clamp(best->threshold, 0.0, 100.0);
}

std::array<double, 5> param_vector(const TrialOutcome& t) {
  return {t.weights.w_fb, t.weights.w_sc, t.weights.w_mc, t.weights.w_tf, t.tau / 100.0};
}

CalibratedParams medoid_params(std::span<const TrialOutcome> trials) {
  if (trials.empty()) throw std::invalid_argument("medoid_params needs at least one trial");
  std::vector<std::array<double, 5>> pv;
  for (const auto& t : trials) pv.push_back(param_vector(t));
  std::size_t best = 0;
  double best_sum = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < trials.size(); ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < trials.size(); ++j) {
      double d2 = 0.0;
      for (std::size_t k = 0; k < 5; ++k) d2 += (pv[i][k] - pv[j][k]) * (pv[i][k] - pv[j][k]);
      sum += std::sqrt(d2);
    }
    if (sum < best_sum || (sum == best_sum && trials[i].trial_id < trials[best].trial_id)) {
      best = i;
      best_sum = sum;
    }
  }
  CalibratedParams out{trials[best].weights, trials[best].tau, {}};
  out.provenance.push_back(trials[best].trial_id);
  for (const auto& t : trials)
    if (t.trial_id != trials[best].trial_id) out.provenance.push_back(t.trial_id);
  return out;
}

namespace {
nlohmann::json weights_json(const WeightVector& w) {
  return {{"FB", w.w_fb}, {"SC", w.w_sc}, {"MC", w.w_mc}, {"TF", w.w_tf}};
}
}  // namespace

void to_json(nlohmann::json& j, const TrialOutcome& t) {
  j = nlohmann::json{{"trial_id", t.trial_id}, {"weights", weights_json(t.weights)}, {"tau", t.tau}};
  j["dev_metrics"] = t.dev_metrics;
}

void to_json(nlohmann::json& j, const CalibratedParams& p) {
  j = nlohmann::json{{"weights", weights_json(p.weights)}, {"tau", p.tau}, {"provenance", p.provenance}};
}

void from_json(const nlohmann::json& j, CalibratedParams& p) {
  const auto& w = j.at("weights");
  p.weights = {w.at("FB").get<double>(), w.at("SC").get<double>(), w.at("MC").get<double>(),
               w.at("TF").get<double>()};
  if (!p.weights.valid()) throw ConfigInvalid("calibrated weights are invalid");
  p.tau = j.at("tau").get<double>();
  p.provenance = j.value("provenance", std::vector<std::string>{});
}

std::string threshold_curve_csv(std::span<const ThresholdPoint> curve) {
  std::string out = "threshold,balanced_accuracy\n";
  for (const auto& pt : curve) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4f,%.6f\n", pt.threshold, pt.balanced_accuracy);
    out += buf;
  }
  return out;
}

}  // namespace ragaudit
