#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "ragaudit/corpus.hpp"
#include "ragaudit/scoring.hpp"

namespace ragaudit {

struct LabeledScore {
  double score = 0.0;
  Label label = Label::NonMember;
};

inline constexpr std::array<double, 3> kFprBudgets = {0.05, 0.01, 0.005};
inline constexpr std::size_t kDefaultKlBins = 20;
inline constexpr double kDefaultKlEpsilon = 1e-6;

struct MetricsReport {
  std::string attack = "emia";
  double threshold = kDefaultTau;
  double accuracy = 0.0;     // at `threshold`
  double acc_at_best = 0.0;  // best swept threshold
  double best_threshold = 0.0;
  double auc_roc = 0.5;
  double auc_pr = 0.0;
  std::array<double, 3> tpr_at_fpr{};  // kFprBudgets order
  double delta = 0.0;                  // TPR - FPR at `threshold`
  double kl_mem_non = 0.0;
  std::size_t n_members = 0;
  std::size_t n_nonmembers = 0;
  std::size_t n_incomplete = 0;  // excluded from every statistic above

  double acc_at_tau() const { return accuracy; }
};

/// Mann-Whitney: P(member > nonmember) + 0.5 P(tie). Throws SingleClass.
double compute_auc_roc(std::span<const LabeledScore> scores);
/// Average precision with members as positives; tied scores enter together.
double compute_auc_pr(std::span<const LabeledScore> scores);
/// Max TPR over observed-score thresholds (score >= t) with FPR <= budget.
double compute_tpr_at_fpr(std::span<const LabeledScore> scores, double fpr_budget);
/// Share of correct decisions when member iff score >= threshold.
double accuracy_at(std::span<const LabeledScore> scores, double threshold);
/// (accuracy, threshold) maximizing accuracy over observed scores plus +inf.
std::pair<double, double> best_accuracy(std::span<const LabeledScore> scores);

/// KL(P_a || P_b) over equal-width bins on [0,100], epsilon added to every
/// bin mass before renormalizing.
double kl_divergence(std::span<const double> a, std::span<const double> b, std::size_t bins = kDefaultKlBins,
                     double epsilon = kDefaultKlEpsilon);

/// Joins results to labels; unlabeled or incomplete results are counted but not scored.
MetricsReport compute_metrics(std::span<const AttackResult> results, double threshold);

void to_json(nlohmann::json& j, const MetricsReport& m);
void from_json(const nlohmann::json& j, MetricsReport& m);

/// Acc, AUC-ROC, AUC-PR, TPR@5%, TPR@1%, TPR@0.5% (plus bookkeeping columns).
std::string metrics_csv_header();
std::string metrics_csv_row(const MetricsReport& m);
/// Per-class histogram rows: bin_lo,bin_hi,members,nonmembers.
std::string score_histogram_csv(std::span<const AttackResult> results, std::size_t bins = kDefaultKlBins);

}  // namespace ragaudit
