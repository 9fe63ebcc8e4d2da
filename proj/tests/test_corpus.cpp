#include <gtest/gtest.h>

#include <cmath>

#include <nlohmann/json.hpp>

#include "ragaudit/corpus.hpp"
#include "ragaudit/errors.hpp"
#include "support.hpp"

using namespace ragaudit;
using testsupport::fixture;

namespace {

std::string words(std::size_t n, const std::string& stem = "w") {
  std::string s;
  for (std::size_t i = 0; i < n; ++i) s += (i ? " " : "") + stem + std::to_string(i);
  return s;
}

std::string record(const std::string& id, const std::string& text) {
  return nlohmann::json{{"_id", id}, {"title", "t"}, {"text", text}}.dump() + "\n";
}

std::vector<Document> synthetic(std::size_t n) {
  std::string jsonl;
  for (std::size_t i = 0; i < n; ++i) jsonl += record("d" + std::to_string(i), words(60, "x" + std::to_string(i) + "_"));
  return ingest_jsonl(jsonl);
}

}  // namespace

TEST(Corpus, DropsShortAndDuplicateDocuments) {
  std::string jsonl = record("a", words(60)) + record("short", words(49)) + record("b", words(50, "v")) +
                      record("dup", "  " + words(60) + "\n");
  auto docs = ingest_jsonl(jsonl);
  ASSERT_EQ(docs.size(), 2u);
  EXPECT_EQ(docs[0].doc_id, "a");
  EXPECT_EQ(docs[0].token_count, 60u);
  EXPECT_EQ(docs[1].doc_id, "b");
  EXPECT_EQ(docs[1].token_count, 50u);
}

TEST(Corpus, NfcEquivalentTextsAreDuplicates) {
  std::string base = words(55);
  auto docs = ingest_jsonl(record("a", base + " café") + record("b", base + " café"));
  EXPECT_EQ(docs.size(), 1u);
}

TEST(Corpus, MalformedLineNamesLineNumber) {
  std::string jsonl = record("a", words(60)) + "{not json\n";
  try {
    ingest_jsonl(jsonl);
    FAIL() << "expected MalformedRecord";
  } catch (const MalformedRecord& e) {
    EXPECT_EQ(e.line_no(), 2u);
  }
  EXPECT_THROW(ingest_jsonl(R"({"title":"x"})" "\n"), MalformedRecord);
}

TEST(Corpus, EmptyAndMissing) {
  EXPECT_THROW(ingest_jsonl(record("s", "too short")), EmptyCorpus);
  EXPECT_THROW(ingest_corpus("/nonexistent/corpus.jsonl", CorpusFormat::BeirJsonl), CorpusError);
}

TEST(Corpus, FixtureCorpusFiltersNoise) {
  auto docs = ingest_corpus(fixture("trials_main.jsonl"), CorpusFormat::BeirJsonl);
  EXPECT_EQ(docs.size(), 420u);
  std::set<std::string> ids;
  for (const auto& d : docs) {
    // the shuffled file can list a whitespace-padded copy before its original
    EXPECT_TRUE(d.doc_id.rfind("doc", 0) == 0 || d.doc_id.rfind("dup", 0) == 0) << d.doc_id;
    EXPECT_NE(d.doc_id.rfind("short", 0), 0u);
    EXPECT_GE(d.token_count, kMinDocumentTokens);
    ids.insert(d.doc_id);
  }
  EXPECT_EQ(ids.size(), 420u);
  EXPECT_EQ(ingest_corpus(fixture("trials_mini.jsonl"), CorpusFormat::BeirJsonl).size(), 20u);
}

TEST(Corpus, PlainDirectory) {
  testsupport::ScratchDir dir("plain");
  std::ofstream(dir / "b.txt") << words(60, "b");
  std::ofstream(dir / "a.txt") << words(60, "a");
  std::ofstream(dir / "c.md") << words(60, "c");
  auto docs = ingest_corpus(dir.path(), CorpusFormat::PlainDir);
  ASSERT_EQ(docs.size(), 2u);
  EXPECT_EQ(docs[0].doc_id, "a");
  EXPECT_EQ(docs[1].doc_id, "b");
}

TEST(Corpus, RoundTripKeepsLabels) {
  auto docs = synthetic(4);
  docs[1].label = Label::Member;
  auto back = ingest_jsonl(corpus_to_jsonl(docs));
  EXPECT_EQ(back, docs);
}

TEST(Corpus, SplitSizesAndDisjointness) {
  auto docs = synthetic(37);
  for (double f : {0.1, 0.3, 0.5, 0.6, 0.9}) {
    auto split = split_corpus(docs, f, 11);
    EXPECT_EQ(split.member_ids.size(), static_cast<std::size_t>(std::llround(f * 37))) << f;
    EXPECT_EQ(split.member_ids.size() + split.nonmember_ids.size(), 37u);
    for (const auto& id : split.member_ids) EXPECT_EQ(split.nonmember_ids.count(id), 0u);
  }
  EXPECT_THROW(split_corpus(docs, 0.0, 11), ConfigInvalid);
  EXPECT_THROW(split_corpus(docs, 1.0, 11), ConfigInvalid);
  EXPECT_EQ(split_corpus(docs, 0.5, 11).member_ids, split_corpus(docs, 0.5, 11).member_ids);
  EXPECT_NE(split_corpus(docs, 0.5, 11).member_ids, split_corpus(docs, 0.5, 12).member_ids);
}

TEST(Corpus, EvalSetBalancedAndDevDisjoint) {
  auto docs = synthetic(40);
  auto split = split_corpus(docs, 0.5, 3);
  auto eval = build_eval_set(split, 8, 4);
  std::size_t m = 0;
  std::set<std::string> ids;
  for (const auto& t : eval.targets) {
    ids.insert(t.doc_id);
    EXPECT_EQ(split.is_member(t.doc_id), t.label == Label::Member);
    m += t.label == Label::Member;
  }
  EXPECT_EQ(m, 8u);
  EXPECT_EQ(ids.size(), 16u);
  auto dev = build_dev_set(split, eval, 12, 5);
  EXPECT_EQ(dev.targets.size(), 24u);
  for (const auto& t : dev.targets) EXPECT_EQ(ids.count(t.doc_id), 0u);
  EXPECT_THROW(build_dev_set(split, eval, 13, 5), InsufficientPool);
  try {
    build_eval_set(split, 21, 4);
    FAIL();
  } catch (const InsufficientPool& e) {
    EXPECT_EQ(e.available(), 20u);
    EXPECT_EQ(e.requested(), 21u);
  }
}

TEST(Corpus, ApplySplitLabels) {
  auto docs = synthetic(10);
  auto split = split_corpus(docs, 0.4, 1);
  for (const auto& d : apply_split(docs, split))
    EXPECT_EQ(*d.label, split.is_member(d.doc_id) ? Label::Member : Label::NonMember);
}
