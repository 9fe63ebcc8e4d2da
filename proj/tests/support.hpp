#pragma once

// Shared helpers for the unit tests and the acceptance binary: fixture paths,
// scratch directories and brute-force reference implementations.

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "ragaudit/calibration.hpp"
#include "ragaudit/config.hpp"
#include "ragaudit/metrics.hpp"
#include "ragaudit/rng.hpp"

namespace testsupport {

namespace fs = std::filesystem;

inline fs::path fixture(const std::string& name) { return fs::path(RAGAUDIT_FIXTURES) / name; }

inline std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Fresh directory under the system temp dir, removed on destruction.
class ScratchDir {
 public:
  explicit ScratchDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path_ = fs::temp_directory_path() /
            ("ragaudit-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~ScratchDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  ScratchDir(const ScratchDir&) = delete;
  ScratchDir& operator=(const ScratchDir&) = delete;
  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& s) const { return path_ / s; }

 private:
  fs::path path_;
};

/// 20-document corpus, noiseless generator, 10 members + 10 non-members.
inline ragaudit::CampaignConfig oracle_config() {
  auto cfg = ragaudit::load_config(fixture("oracle.toml"));
  cfg.output_dir.clear();
  return cfg;
}

/// 100 + 100 targets from the 420-document corpus with default noise.
inline ragaudit::CampaignConfig demo_config() {
  auto cfg = ragaudit::load_config(fixture("demo.toml"));
  cfg.output_dir.clear();
  return cfg;
}

// ---- brute-force references ----

/// Pairwise Mann-Whitney count over every (member, non-member) pair.
inline double brute_auc(const std::vector<ragaudit::LabeledScore>& s) {
  double wins = 0.0;
  double pairs = 0.0;
  for (const auto& m : s) {
    if (m.label != ragaudit::Label::Member) continue;
    for (const auto& n : s) {
      if (n.label != ragaudit::Label::NonMember) continue;
      pairs += 1.0;
      if (m.score > n.score) wins += 1.0;
      else if (m.score == n.score) wins += 0.5;
    }
  }
  return wins / pairs;
}

/// Threshold sweep over every observed score (plus one above the max).
inline double brute_tpr_at_fpr(const std::vector<ragaudit::LabeledScore>& s, double budget) {
  std::vector<double> cands;
  for (const auto& x : s) cands.push_back(x.score);
  cands.push_back(std::numeric_limits<double>::infinity());
  double P = 0, N = 0;
  for (const auto& x : s) (x.label == ragaudit::Label::Member ? P : N) += 1;
  double best = 0.0;
  for (double t : cands) {
    double tp = 0, fp = 0;
    for (const auto& x : s)
      if (x.score >= t) (x.label == ragaudit::Label::Member ? tp : fp) += 1;
    if (fp / N <= budget) best = std::max(best, tp / P);
  }
  return best;
}

inline double brute_balanced_accuracy(const std::vector<ragaudit::LabeledScore>& s, double t) {
  double tp = 0, tn = 0, P = 0, N = 0;
  for (const auto& x : s) {
    if (x.label == ragaudit::Label::Member) {
      P += 1;
      if (x.score >= t) tp += 1;
    } else {
      N += 1;
      if (x.score < t) tn += 1;
    }
  }
  return 0.5 * (tp / P + tn / N);
}

/// O(n^2) medoid: index with the smallest summed Euclidean distance, first on ties.
inline std::size_t brute_medoid(const std::vector<std::array<double, 5>>& v) {
  std::size_t best = 0;
  double best_sum = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < v.size(); ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < v.size(); ++j) {
      double d = 0.0;
      for (std::size_t k = 0; k < 5; ++k) d += (v[i][k] - v[j][k]) * (v[i][k] - v[j][k]);
      sum += std::sqrt(d);
    }
    if (sum < best_sum) {
      best_sum = sum;
      best = i;
    }
  }
  return best;
}

/// Random labelled scores with both classes present; coarse values so ties occur.
inline std::vector<ragaudit::LabeledScore> random_scores(ragaudit::Rng& rng, std::size_t max_n = 200) {
  std::size_t n = 2 + rng.below(max_n - 1);
  std::vector<ragaudit::LabeledScore> out(n);
  double shift = rng.uniform() * 40.0;
  int grain = 1 + static_cast<int>(rng.below(20));
  for (std::size_t i = 0; i < n; ++i) {
    bool member = i == 0 ? true : i == 1 ? false : rng.bernoulli(0.5);
    double raw = rng.uniform() * 60.0 + (member ? shift : 0.0);
    out[i].score = std::round(raw / grain) * grain;
    out[i].label = member ? ragaudit::Label::Member : ragaudit::Label::NonMember;
  }
  return out;
}

/// Random trials with distinct ids "t00".."tNN" in shuffled order.
inline std::vector<ragaudit::TrialOutcome> random_trials(ragaudit::Rng& rng, std::size_t n = 25) {
  std::vector<ragaudit::TrialOutcome> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::array<double, 4> w{};
    double sum = 0.0;
    for (auto& x : w) sum += (x = 0.05 + rng.uniform());
    for (auto& x : w) x /= sum;
    char id[8];
    std::snprintf(id, sizeof id, "t%02zu", i);
    out[i].trial_id = id;
    out[i].weights = ragaudit::WeightVector::from_array(w);
    out[i].tau = 40.0 + rng.uniform() * 40.0;
  }
  rng.shuffle(std::span(out));
  return out;
}

/// Short strings of unicode, digits, markup and punctuation for normalizer fuzzing.
inline std::string fuzz_string(ragaudit::Rng& rng) {
  static const std::vector<std::string> pieces = {
      "a", "B", "z", "0", "1", "9", ",", ".", "%", " ", "  ", "\t", "\n", "*", "**", "_", "__", "mg", "kg",
      "March", "may", "5,", "1988", "1,000", "0.50", "\u00e9", "e\u0301", "ß", "İ", "Ω", "\u00a0", "-", "/", "(", ")",
      "'", "\"", "!", "?", "ＡＢ", "ﬁ", "ĳ", "12mg", "5 %", "Sept", "3rd", "  .", "..", "—", "ET-1"};
  std::string s;
  std::size_t n = rng.below(16);
  for (std::size_t i = 0; i < n; ++i) s += pieces[rng.below(pieces.size())];
  return s;
}

}  // namespace testsupport
