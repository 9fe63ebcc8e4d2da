#include <gtest/gtest.h>

#include <array>
#include <cstdio>
#include <memory>

#include <nlohmann/json.hpp>

#include "ragaudit/campaign.hpp"
#include "ragaudit/errors.hpp"
#include "support.hpp"

using namespace ragaudit;
using testsupport::ScratchDir;
using testsupport::slurp;
namespace fs = std::filesystem;

namespace {

std::vector<double> scores_of(const CampaignOutcome& o) {
  std::vector<double> s;
  for (const auto& r : o.results) s.push_back(r.score);
  return s;
}

struct Proc {
  int status = -1;
  std::string out;
};

/// Runs a shell command, capturing stdout+stderr.
Proc sh(const std::string& cmd) {
  Proc p;
  std::unique_ptr<FILE, int (*)(FILE*)> f(popen((cmd + " 2>&1").c_str(), "r"), pclose);
  std::array<char, 4096> buf{};
  std::size_t n;
  while ((n = fread(buf.data(), 1, buf.size(), f.get())) > 0) p.out.append(buf.data(), n);
  int raw = pclose(f.release());
  p.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return p;
}

}  // namespace

TEST(Campaign, OracleSeparatesPerfectly) {
  auto out = run_campaign(testsupport::oracle_config());
  ASSERT_EQ(out.results.size(), 20u);
  for (const auto& r : out.results) {
    ASSERT_TRUE(r.label.has_value());
    EXPECT_TRUE(r.complete);
    EXPECT_DOUBLE_EQ(r.score, *r.label == Label::Member ? 100.0 : 0.0) << r.doc_id;
    EXPECT_EQ(r.queries, 28u);
  }
  EXPECT_DOUBLE_EQ(out.metrics.auc_roc, 1.0);
  EXPECT_DOUBLE_EQ(out.metrics.accuracy, 1.0);
  EXPECT_EQ(out.ledger_queries, out.served_queries);
  EXPECT_EQ(out.ledger_queries, 20u * 28u);
}

TEST(Campaign, SameSeedSameResults) {
  auto cfg = testsupport::oracle_config();
  cfg.oracle = OracleGeneratorConfig{};
  auto a = run_campaign(cfg);
  cfg.max_concurrent_targets = 1;
  auto b = run_campaign(cfg);
  EXPECT_EQ(a.results, b.results);
  cfg.seed = 8;
  auto c = run_campaign(cfg);
  EXPECT_NE(scores_of(a), scores_of(c));
}

TEST(Campaign, LabelsNeverReachTheAttack) {
  auto cfg = testsupport::oracle_config();
  cfg.oracle = OracleGeneratorConfig{};
  auto world = prepare_world(cfg);
  for (const auto& t : world.eval.targets) EXPECT_FALSE(world.blind(t.doc_id).label.has_value());
  // flipping the labels we hand in only changes the bookkeeping, never a score
  auto flipped = world.eval;
  for (auto& t : flipped.targets) t.label = t.label == Label::Member ? Label::NonMember : Label::Member;
  auto a = run_targets(cfg, world, world.eval);
  auto b = run_targets(cfg, world, flipped);
  EXPECT_EQ(scores_of(a), scores_of(b));
  EXPECT_NEAR(a.metrics.auc_roc, 1.0 - b.metrics.auc_roc, 1e-12);
}

TEST(Campaign, StopAndResumeReproducesUninterruptedRun) {
  ScratchDir full("full"), part("part");
  auto cfg = testsupport::oracle_config();
  cfg.oracle = OracleGeneratorConfig{};
  cfg.output_dir = full.path();
  auto whole = run_campaign(cfg);
  cfg.output_dir = part.path();
  CampaignOptions stop;
  stop.stop_after = 10;
  auto first = run_campaign(cfg, stop);
  EXPECT_TRUE(first.interrupted);
  auto rest = resume_campaign(part.path());
  EXPECT_FALSE(rest.interrupted);
  EXPECT_EQ(slurp(part / "results.jsonl"), slurp(full / "results.jsonl"));
  EXPECT_EQ(slurp(part / "metrics.json"), slurp(full / "metrics.json"));
  // targets still in flight at the stop are discarded and asked again
  EXPECT_EQ(first.ledger_queries, 10u * 28u);
  EXPECT_EQ(rest.served_queries, whole.ledger_queries - first.ledger_queries);
  EXPECT_EQ(rest.ledger_queries, whole.ledger_queries);
  auto budget = nlohmann::json::parse(slurp(full / "budget.json"));
  EXPECT_EQ(budget["total"].get<std::size_t>(), whole.ledger_queries);
  EXPECT_EQ(budget["served_this_session"].get<std::size_t>(), whole.served_queries);
  for (const char* f : {"manifest.json", "metrics.csv", "histogram.csv"}) EXPECT_TRUE(fs::exists(full / f)) << f;

  // completed run: nothing left to ask
  auto again = resume_campaign(part.path(), cfg);
  EXPECT_EQ(again.served_queries, 0u);
  EXPECT_EQ(slurp(part / "results.jsonl"), slurp(full / "results.jsonl"));
}

TEST(Campaign, ResumeRefusesChangedConfigAndBrokenManifest) {
  ScratchDir dir("drift");
  auto cfg = testsupport::oracle_config();
  cfg.output_dir = dir.path();
  CampaignOptions stop;
  stop.stop_after = 4;
  run_campaign(cfg, stop);
  auto changed = cfg;
  changed.tau = 50.0;
  EXPECT_THROW(resume_campaign(dir.path(), changed), ConfigDrift);
  std::ofstream(dir / "manifest.json") << "{broken";
  EXPECT_THROW(resume_campaign(dir.path()), ManifestCorrupt);
  ScratchDir empty("empty");
  EXPECT_THROW(resume_campaign(empty.path()), ManifestCorrupt);
}

TEST(Campaign, GoldenDemoRunIsByteIdentical) {
  ScratchDir dir("golden");
  auto cfg = testsupport::demo_config();
  cfg.output_dir = dir.path();
  auto out = run_campaign(cfg);
  EXPECT_EQ(slurp(dir / "results.jsonl"), slurp(testsupport::fixture("golden/results.jsonl")));
  EXPECT_GE(out.metrics.auc_roc, 0.95);
  EXPECT_GE(out.metrics.tpr_at_fpr[0], 0.90);
  EXPECT_EQ(out.ledger_queries, out.served_queries);
}

TEST(Calibration, DevRunOrdersWeightsBySeparability) {
  auto cfg = testsupport::demo_config();
  cfg.eval_per_class = 20;
  cfg.dev_per_class = 50;
  cfg.oracle.p_hit = 1.0;
  cfg.oracle.familiarity_max = 0.0;
  cfg.oracle.paraphrase_rate = 0.0;
  auto world = prepare_world(cfg);
  auto rep = calibrate_on_dev(cfg, world);
  const auto& w = rep.weights.weights;
  EXPECT_TRUE(w.valid());
  for (double x : {w.w_sc, w.w_mc, w.w_tf}) EXPECT_GT(w.w_fb, x);
  for (double x : {w.w_sc, w.w_mc}) EXPECT_GT(x, w.w_tf);
  EXPECT_EQ(rep.n_dev, 100u);
  // dev and eval never share a document
  for (const auto& d : world.dev.targets)
    for (const auto& e : world.eval.targets) ASSERT_NE(d.doc_id, e.doc_id);
}

TEST(Calibration, TrialsAndMedoid) {
  auto cfg = testsupport::demo_config();
  cfg.eval_per_class = 10;
  cfg.dev_per_class = 20;
  auto trials = run_calibration_trials(cfg, 3);
  ASSERT_EQ(trials.size(), 3u);
  auto chosen = medoid_params(trials);
  bool observed = false;
  for (const auto& t : trials) observed = observed || (t.weights == chosen.weights && t.tau == chosen.tau);
  EXPECT_TRUE(observed);
}

#ifdef RAGAUDIT_CLI

namespace {
const std::string kCli = RAGAUDIT_CLI;
const std::string kDemo = testsupport::fixture("demo.toml").string();
}  // namespace

TEST(Cli, UnknownFlagPrintsUsageAndExitsOne) {
  auto p = sh(kCli + " attack --frobnicate");
  EXPECT_EQ(p.status, 1);
  EXPECT_NE(p.out.find("Usage"), std::string::npos) << p.out;
}

TEST(Cli, HelpListsDefaults) {
  auto p = sh(kCli + " attack --help");
  EXPECT_EQ(p.status, 0);
  EXPECT_NE(p.out.find("--n-items"), std::string::npos);
  EXPECT_NE(p.out.find("28"), std::string::npos);
  EXPECT_NE(p.out.find("62.2"), std::string::npos);
  EXPECT_NE(p.out.find("--top-k"), std::string::npos);
}

TEST(Cli, AttackTwiceIsIdentical) {
  ScratchDir a("cli-a"), b("cli-b");
  auto pa = sh(kCli + " attack --config " + kDemo + " --seed 7 --eval-per-class 20 --out " + a.path().string());
  auto pb = sh(kCli + " attack --config " + kDemo + " --seed 7 --eval-per-class 20 --out " + b.path().string());
  ASSERT_EQ(pa.status, 0) << pa.out;
  ASSERT_EQ(pb.status, 0) << pb.out;
  EXPECT_EQ(pa.out, pb.out);
  EXPECT_EQ(slurp(a / "results.jsonl"), slurp(b / "results.jsonl"));
  EXPECT_NE(pa.out.find("queries 1120"), std::string::npos) << pa.out;
}

TEST(Cli, ReportCsvOnGoldenRun) {
  ScratchDir dir("cli-report");
  fs::copy_file(testsupport::fixture("golden/metrics.json"), dir / "metrics.json");
  auto p = sh(kCli + " report --format csv --out " + dir.path().string());
  ASSERT_EQ(p.status, 0) << p.out;
  EXPECT_EQ(p.out, slurp(testsupport::fixture("golden/metrics.csv")));
  std::istringstream lines(p.out);
  std::string header, row;
  std::getline(lines, header);
  std::getline(lines, row);
  EXPECT_EQ(header.substr(0, 19), "attack,acc,auc_roc,");
  std::vector<std::string> cells;
  std::istringstream rs(row);
  for (std::string c; std::getline(rs, c, ',');) cells.push_back(c);
  ASSERT_GE(cells.size(), 3u);
  EXPECT_GE(std::stod(cells[2]), 0.95);
}

TEST(Cli, ResumeAndErrors) {
  ScratchDir dir("cli-resume");
  const std::string oracle = testsupport::fixture("oracle.toml").string();
  auto p = sh(kCli + " attack --config " + oracle + " --out " + dir.path().string() + " --stop-after 5");
  ASSERT_EQ(p.status, 0) << p.out;
  EXPECT_NE(p.out.find("--resume"), std::string::npos);
  p = sh(kCli + " attack --resume --out " + dir.path().string());
  ASSERT_EQ(p.status, 0) << p.out;
  EXPECT_NE(p.out.find("queries 560"), std::string::npos) << p.out;
  p = sh(kCli + " attack --resume --config " + oracle + " --tau 40 --out " + dir.path().string());
  EXPECT_EQ(p.status, 1);
  EXPECT_NE(p.out.find("configuration changed"), std::string::npos) << p.out;
  p = sh(kCli + " report --out /nonexistent/dir");
  EXPECT_EQ(p.status, 1);
}

TEST(Cli, GenExamPrintsTwentyEightItems) {
  auto p = sh(kCli + " gen-exam --config " + kDemo + " --doc-id doc0001 --format json");
  ASSERT_EQ(p.status, 0) << p.out;
  auto j = nlohmann::json::parse(p.out.substr(p.out.find('{')));
  EXPECT_EQ(j["items"].size(), 28u);
}

#endif
