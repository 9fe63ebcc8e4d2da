#pragma once

#include <array>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "ragaudit/grader.hpp"
#include "ragaudit/metrics.hpp"
#include "ragaudit/scoring.hpp"

namespace ragaudit {

struct LabeledExam {
  GradedExam graded;
  Label label = Label::NonMember;
};

struct WeightCalibration {
  WeightVector weights;
  std::array<double, 4> kl{};  // FB, SC, MC, TF
  bool degenerate = false;     // all KL zero: uniform weights returned
};

/// w_i = KL_i / sum_j KL_j with KL_i = KL(non-member || member) over per-type
/// accuracies (scaled to [0,100] before binning). Throws SingleClass, or ConfigInvalid
/// when an exam lacks a question type. All-zero KL falls back to uniform.
WeightCalibration calibrate_weights(std::span<const LabeledExam> dev);
/// Same rule from precomputed KL values; throws DegenerateDistribution on all zeros.
WeightVector weights_from_kl(const std::array<double, 4>& kl);

struct ThresholdPoint {
  double threshold = 0.0;
  double balanced_accuracy = 0.0;
};

/// Candidates: min score, midpoints of adjacent distinct scores, max score + 1.
std::vector<ThresholdPoint> threshold_curve(std::span<const LabeledScore> dev);
/// Argmax of (TPR + TNR) / 2 over threshold_curve, ties to the smaller
/// threshold, clamped to [0,100]. Throws SingleClass.
double calibrate_threshold(std::span<const LabeledScore> dev);
double balanced_accuracy(std::span<const LabeledScore> scores, double threshold);

struct TrialOutcome {
  std::string trial_id;
  WeightVector weights;
  double tau = kDefaultTau;
  MetricsReport dev_metrics;
};

struct CalibratedParams {
  WeightVector weights;
  double tau = kDefaultTau;
  std::vector<std::string> provenance;  // trial ids
};

/// (w_fb, w_sc, w_mc, w_tf, tau / 100)
std::array<double, 5> param_vector(const TrialOutcome& t);
/// Trial minimizing the summed Euclidean distance to the others; ties go to
/// the smallest trial_id. Throws std::invalid_argument on an empty list.
CalibratedParams medoid_params(std::span<const TrialOutcome> trials);

void to_json(nlohmann::json& j, const TrialOutcome& t);
void to_json(nlohmann::json& j, const CalibratedParams& p);
void from_json(const nlohmann::json& j, CalibratedParams& p);
std::string threshold_curve_csv(std::span<const ThresholdPoint> curve);

}  // namespace ragaudit
