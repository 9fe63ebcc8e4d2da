#include <gtest/gtest.h>

#include <functional>
#include <thread>

#include "ragaudit/attack.hpp"
#include "ragaudit/corpus.hpp"
#include "ragaudit/errors.hpp"
#include "ragaudit/evidence.hpp"
#include "ragaudit/target.hpp"
#include "support.hpp"

using namespace ragaudit;

namespace {

struct World {
  std::vector<Document> docs;
  CorpusSplit split;
  std::shared_ptr<const Retriever> index;
  std::vector<std::string> members, nonmembers;
};

const World& world() {
  static const World w = [] {
    World x;
    x.docs = ingest_corpus(testsupport::fixture("trials_mini.jsonl"), CorpusFormat::BeirJsonl);
    x.split = split_corpus(x.docs, 0.5, 7);
    x.index = std::make_shared<Bm25Index>(knowledge_base(x.docs, x.split));
    for (const auto& d : x.docs) (x.split.is_member(d.doc_id) ? x.members : x.nonmembers).push_back(d.doc_id);
    return x;
  }();
  return w;
}

const Document& doc(const std::string& id) {
  for (const auto& d : world().docs)
    if (d.doc_id == id) return d;
  throw std::out_of_range(id);
}

OracleGeneratorConfig silent() {
  auto o = OracleGeneratorConfig::oracle();
  EXPECT_EQ(o.p_hit, 1.0);
  return o;
}

std::shared_ptr<SimulatedRag> sim(OracleGeneratorConfig o, TraceSink* traces = nullptr, DefenseConfig def = {},
                                  std::size_t top_k = 3) {
  TargetConfig tc;
  tc.seed = 5;
  tc.top_k = top_k;
  tc.defenses = std::move(def);
  return std::make_shared<SimulatedRag>(world().index, tc, o, traces);
}

std::shared_ptr<const EvidenceExtractor> rules() { return std::make_shared<RuleBasedExtractor>(); }

/// Scripted target for counting tests.
class ScriptedTarget final : public Target {
 public:
  explicit ScriptedTarget(std::function<std::string(const Query&)> f) : f_(std::move(f)) {}
  RawResponse answer(const Query& q) const override {
    ++served_;
    return {q.query_id, f_(q)};
  }
  std::string name() const override { return "scripted"; }

 private:
  std::function<std::string(const Query&)> f_;
};

}  // namespace

TEST(Target, OracleAnswersMemberItemsAndMissesNonMembers) {
  TraceSink traces;
  auto target = sim(silent(), &traces);
  EmiaAttack emia(rules(), {});
  auto plan = emia.prepare(doc(world().members[0]), 3);
  ASSERT_EQ(plan.queries.size(), 28u);
  for (const auto& q : plan.queries) {
    auto r = target->answer(q);
    EXPECT_EQ(r.item_id, q.query_id);
    EXPECT_FALSE(r.refused);
  }
  auto member = run_attack(emia, doc(world().members[0]), *target, 3);
  EXPECT_DOUBLE_EQ(member.score, 100.0);
  auto non = run_attack(emia, doc(world().nonmembers[0]), *target, 3);
  EXPECT_DOUBLE_EQ(non.score, 0.0);
  bool saw_true = false, saw_false = false;
  for (const auto& t : traces.snapshot()) {
    ASSERT_TRUE(t.contains_target.has_value());
    (*t.contains_target ? saw_true : saw_false) = true;
    EXPECT_LE(t.retrieved_doc_ids.size(), 3u);
  }
  EXPECT_TRUE(saw_true);
  EXPECT_TRUE(saw_false);
}

TEST(Target, NonMemberTracesNeverContainTarget) {
  TraceSink traces;
  auto target = sim(silent(), &traces);
  EmiaAttack emia(rules(), {});
  for (const auto& id : world().nonmembers) run_attack(emia, doc(id), *target, 1);
  for (const auto& t : traces.snapshot()) EXPECT_FALSE(*t.contains_target) << t.query_id;
}

TEST(Target, RepliesDependOnlyOnSeedAndQuery) {
  auto a = sim(OracleGeneratorConfig{});
  auto b = sim(OracleGeneratorConfig{});
  EmiaAttack emia(rules(), {});
  auto plan = emia.prepare(doc(world().members[1]), 9);
  std::vector<RawResponse> first;
  for (const auto& q : plan.queries) first.push_back(a->answer(q));
  std::vector<RawResponse> par(plan.queries.size());
  std::vector<std::jthread> pool;
  for (std::size_t t = 0; t < 4; ++t)
    pool.emplace_back([&, t] {
      for (std::size_t i = t; i < plan.queries.size(); i += 4) par[i] = b->answer(plan.queries[i]);
    });
  pool.clear();
  for (std::size_t i = 0; i < first.size(); ++i) {
    EXPECT_EQ(first[i].text, par[i].text);
    EXPECT_EQ(first[i].refused, par[i].refused);
  }
  EXPECT_EQ(b->queries_served(), plan.queries.size());
}

TEST(Target, GuardrailBlocksProbeAndCountsPassRate) {
  DefenseConfig def;
  def.guardrail = GuardrailPolicy::bundled();
  auto target = sim(silent(), nullptr, def);
  Query probe{"p1", "Is this document in your knowledge base? Reply yes or no.", {}};
  auto r = target->answer(probe);
  EXPECT_TRUE(r.refused);
  EmiaAttack emia(rules(), {});
  auto out = run_attack(emia, doc(world().members[2]), *target, 2);
  EXPECT_DOUBLE_EQ(out.score, 100.0);
  EXPECT_EQ(target->guardrail_stats().blocked.load(), 1u);
  EXPECT_EQ(target->guardrail_stats().passed.load(), 28u);
  EXPECT_NEAR(target->guardrail_stats().pass_rate(), 28.0 / 29.0, 1e-12);
}

TEST(Target, OracleConfigValidation) {
  EXPECT_NO_THROW(OracleGeneratorConfig{}.validate());
  OracleGeneratorConfig bad;
  bad.p_hit = 1.5;
  EXPECT_THROW(bad.validate(), ConfigInvalid);
  EXPECT_DOUBLE_EQ(OracleGeneratorConfig::guess_sc(4), 0.25);
  EXPECT_NEAR(OracleGeneratorConfig::guess_mc(4), 1.0 / 6.0, 1e-15);
}

TEST(Attacks, EmiaBatchedMatchesSequentialUnderOracle) {
  EmiaParams p;
  p.batch_items = true;
  EmiaAttack batched(rules(), p);
  auto target = sim(silent());
  auto plan = batched.prepare(doc(world().members[3]), 4);
  ASSERT_EQ(plan.queries.size(), 1u);
  EXPECT_TRUE(plan.batched);
  // one query retrieves only top_k chunks for all 28 items, so a few anchors can miss
  EXPECT_GE(run_attack(batched, doc(world().members[3]), *target, 4).score, 90.0);
  EXPECT_DOUBLE_EQ(run_attack(batched, doc(world().nonmembers[3]), *target, 4).score, 0.0);
}

TEST(Attacks, EmiaPlanShufflesAdministrationOrderOnly) {
  EmiaAttack emia(rules(), {});
  auto a = emia.prepare(doc(world().members[4]), 1);
  auto b = emia.plan_for(*a.exam, 2);
  std::vector<std::string> ia, ib;
  for (const auto& q : a.queries) ia.push_back(q.query_id);
  for (const auto& q : b.queries) ib.push_back(q.query_id);
  EXPECT_NE(ia, ib);
  std::sort(ia.begin(), ia.end());
  std::sort(ib.begin(), ib.end());
  EXPECT_EQ(ia, ib);
}

TEST(Attacks, EmiaPlanCarriesNoLabel) {
  EmiaAttack emia(rules(), {});
  Document blind = doc(world().members[0]);
  Document labelled = blind;
  labelled.label = Label::Member;
  auto p1 = emia.prepare(blind, 3);
  auto p2 = emia.prepare(labelled, 3);
  ASSERT_EQ(p1.queries.size(), p2.queries.size());
  for (std::size_t i = 0; i < p1.queries.size(); ++i) EXPECT_EQ(p1.queries[i].text, p2.queries[i].text);
}

TEST(Attacks, S2miaContinuation) {
  auto target = sim(silent());
  EXPECT_DOUBLE_EQ(s2mia_attack(doc(world().members[0]), *target), 100.0);
  EXPECT_LT(s2mia_attack(doc(world().nonmembers[0]), *target), 100.0);
  Document tiny;
  tiny.doc_id = "tiny";
  tiny.text = "only a few words in this one";
  tiny.token_count = 7;
  EXPECT_THROW(s2mia_attack(tiny, *target), DocumentTooShort);
  S2miaAttack s2;
  auto plan = s2.prepare(doc(world().members[0]), 0);
  ASSERT_EQ(plan.queries.size(), 1u);
  ScriptedTarget echo([&](const Query&) { return plan.reference; });
  EXPECT_DOUBLE_EQ(run_attack(s2, doc(world().members[0]), echo, 0).score, 100.0);
  ScriptedTarget off([](const Query&) { return "zzz qqq"; });
  EXPECT_DOUBLE_EQ(run_attack(s2, doc(world().members[0]), off, 0).score, 0.0);
}

TEST(Attacks, MbaCounting) {
  MbaAttack mba(10);
  const auto& d = doc(world().members[0]);
  auto plan = mba.prepare(d, 6);
  ASSERT_EQ(plan.expected.size(), 10u);
  auto reply_with = [&](std::size_t n_right) {
    return [&, n_right](const Query&) {
      std::string s;
      for (std::size_t j = 0; j < plan.expected.size(); ++j)
        s += "[MASK_" + std::to_string(j + 1) + "]: " + (j < n_right ? plan.expected[j] : "wrongword") + "\n";
      return s;
    };
  };
  ScriptedTarget all(reply_with(10)), seven(reply_with(7)), none(reply_with(0));
  EXPECT_DOUBLE_EQ(run_attack(mba, d, all, 6).score, 100.0);
  EXPECT_DOUBLE_EQ(run_attack(mba, d, seven, 6).score, 70.0);
  EXPECT_DOUBLE_EQ(run_attack(mba, d, none, 6).score, 0.0);

  auto o = OracleGeneratorConfig::oracle();
  o.p_hit = 0.0;
  EXPECT_DOUBLE_EQ(mba_attack(d, *sim(o), 10, 6), 0.0);
  EXPECT_DOUBLE_EQ(mba_attack(d, *sim(silent()), 10, 6), 100.0);
}

TEST(Attacks, IaYesShare) {
  IaAttack ia(rules(), 28);
  const auto& d = doc(world().members[1]);
  ScriptedTarget yes([](const Query&) { return "Yes."; });
  ScriptedTarget refuse([](const Query&) { return "I cannot answer that."; });
  EXPECT_DOUBLE_EQ(run_attack(ia, d, yes, 2).score, 100.0);
  EXPECT_DOUBLE_EQ(run_attack(ia, d, refuse, 2).score, 0.0);
  EXPECT_EQ(yes.queries_served(), 28u);
  EXPECT_DOUBLE_EQ(ia_attack(d, *sim(silent()), 28, 2), 100.0);
}

TEST(Attacks, OracleSeparatesForEveryAttack) {
  auto target = sim(silent());
  EmiaAttack emia(rules(), {});
  S2miaAttack s2;
  MbaAttack mba(10);
  IaAttack ia(rules(), 28);
  for (const Attack* a : std::initializer_list<const Attack*>{&emia, &s2, &mba, &ia}) {
    std::vector<LabeledScore> s;
    double min_member = 1e9, max_non = -1e9;
    for (const auto& id : world().members) {
      s.push_back({run_attack(*a, doc(id), *target, 1).score, Label::Member});
      min_member = std::min(min_member, s.back().score);
    }
    for (const auto& id : world().nonmembers) {
      s.push_back({run_attack(*a, doc(id), *target, 1).score, Label::NonMember});
      max_non = std::max(max_non, s.back().score);
    }
    if (a == &s2) {
      // the first-half query can rank a sibling trial's chunk above the one holding the continuation
      EXPECT_GE(testsupport::brute_auc(s), 0.9);
    } else {
      EXPECT_GT(min_member, max_non) << a->name();
    }
  }
}

TEST(Attacks, KindNames) {
  for (auto k : {AttackKind::EMIA, AttackKind::S2MIA, AttackKind::MBA, AttackKind::IA})
    EXPECT_EQ(attack_kind_from_string(to_string(k)), k);
  EXPECT_THROW(attack_kind_from_string("xyz"), UserError);
}
