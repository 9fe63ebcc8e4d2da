#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <nlohmann/json.hpp>

#include "ragaudit/calibration.hpp"
#include "ragaudit/campaign.hpp"
#include "ragaudit/config.hpp"
#include "ragaudit/errors.hpp"
#include "ragaudit/grader.hpp"
#include "ragaudit/metrics.hpp"
#include "ragaudit/normalize.hpp"
#include "ragaudit/scoring.hpp"
#include "ragaudit/toml_lite.hpp"

namespace py = pybind11;
using namespace ragaudit;

namespace {

std::vector<LabeledScore> zip_scores(const std::vector<double>& scores, const std::vector<bool>& members) {
  if (scores.size() != members.size()) throw py::value_error("scores and labels differ in length");
  std::vector<LabeledScore> out(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) out[i] = {scores[i], members[i] ? Label::Member : Label::NonMember};
  return out;
}

WeightVector weights_of(const std::array<double, 4>& w) { return WeightVector::from_array(w); }

CampaignConfig config_with(const std::string& path, const std::string& overrides) {
  auto cfg = load_config(path);
  if (!overrides.empty()) apply_toml(cfg, toml::parse(overrides));
  return cfg;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "ragaudit native core";
  m.attr("__version__") = RAGAUDIT_VERSION;
  m.attr("DEFAULT_TAU") = kDefaultTau;
  m.attr("PUBLISHED_WEIGHTS") = WeightVector::published().as_array();

  // translators run newest first, so the subclass goes last
  py::register_exception<Error>(m, "AuditError", PyExc_RuntimeError);
  py::register_exception<UserError>(m, "UserError", PyExc_ValueError);

  m.def("normalize", [](const std::string& s, const std::string& rule) {
    return normalize(s, grading_rule_from_string(rule));
  }, py::arg("text"), py::arg("rule") = "exact");

  m.def("aggregate", [](const std::array<double, 4>& acc, const std::array<double, 4>& w) {
    return aggregate(acc, weights_of(w));
  }, py::arg("acc"), py::arg("weights") = WeightVector::published().as_array());
  m.def("decide", [](double score, double tau) { return std::string(to_string(decide(score, tau))); },
        py::arg("score"), py::arg("threshold") = kDefaultTau);
  m.def("display_score", &display_score);

  m.def("auc_roc", [](const std::vector<double>& s, const std::vector<bool>& y) {
    return compute_auc_roc(zip_scores(s, y));
  });
  m.def("auc_pr", [](const std::vector<double>& s, const std::vector<bool>& y) {
    return compute_auc_pr(zip_scores(s, y));
  });
  m.def("tpr_at_fpr", [](const std::vector<double>& s, const std::vector<bool>& y, double budget) {
    return compute_tpr_at_fpr(zip_scores(s, y), budget);
  });
  m.def("kl_divergence", [](const std::vector<double>& a, const std::vector<double>& b, std::size_t bins,
                            double eps) { return kl_divergence(a, b, bins, eps); },
        py::arg("a"), py::arg("b"), py::arg("bins") = kDefaultKlBins, py::arg("epsilon") = kDefaultKlEpsilon);
  m.def("calibrate_threshold", [](const std::vector<double>& s, const std::vector<bool>& y) {
    return calibrate_threshold(zip_scores(s, y));
  });

  m.def("_grade_item", [](const std::string& item_json, const std::string& text, bool refused) {
    auto item = nlohmann::json::parse(item_json).get<ExamItem>();
    return nlohmann::json(grade_item(item, {item.item_id, text, 0, refused})).dump();
  });

  m.def("config_hash", [](const std::string& path, const std::string& overrides) {
    return config_hash(config_with(path, overrides));
  }, py::arg("config"), py::arg("overrides") = "");

  m.def("_run_campaign", [](const std::string& path, const std::string& overrides, const std::string& out_dir) {
    auto cfg = config_with(path, overrides);
    cfg.output_dir = out_dir;
    validate(cfg);
    CampaignOutcome o;
    {
      py::gil_scoped_release nogil;
      o = run_campaign(cfg);
    }
    nlohmann::json j;
    j["metrics"] = o.metrics;
    j["results"] = o.results;
    j["queries"] = o.ledger_queries;
    if (o.guardrail_pass_rate) j["guardrail_pass_rate"] = *o.guardrail_pass_rate;
    return j.dump();
  }, py::arg("config"), py::arg("overrides") = "", py::arg("output_dir") = "");
}
