#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <regex>
#include <set>

#include "ragaudit/bleu.hpp"
#include "ragaudit/corpus.hpp"
#include "ragaudit/defense.hpp"
#include "ragaudit/errors.hpp"
#include "ragaudit/evidence.hpp"
#include "ragaudit/exam.hpp"
#include "ragaudit/retrieval.hpp"
#include "ragaudit/scoring.hpp"
#include "ragaudit/text.hpp"
#include "support.hpp"

using namespace ragaudit;

namespace {

Document doc_of(const std::string& id, const std::string& body) {
  Document d;
  d.doc_id = id;
  d.text = body;
  d.token_count = text::count_ws_tokens(body);
  return d;
}

std::string numbered(std::size_t n) {
  std::string s;
  for (std::size_t i = 0; i < n; ++i) s += (i ? " " : "") + std::string("t") + std::to_string(i);
  return s;
}

GradedExam graded_with(const std::array<double, 4>& acc) {
  GradedExam g;
  g.acc = acc;
  g.counts = {7, 7, 7, 7};
  return g;
}

const std::vector<Document>& mini() {
  static const auto docs = ingest_corpus(testsupport::fixture("trials_mini.jsonl"), CorpusFormat::BeirJsonl);
  return docs;
}

}  // namespace

TEST(Scoring, PublishedDefaults) {
  auto w = WeightVector::published();
  EXPECT_TRUE(w.valid());
  EXPECT_EQ(display_score(aggregate(graded_with({1, 0, 0, 0}), w)), "31.2");
  EXPECT_DOUBLE_EQ(aggregate(graded_with({1, 1, 1, 1}), w), 100.0);
  EXPECT_DOUBLE_EQ(aggregate(graded_with({0.5, 0.5, 0.5, 0.5}), w), 50.0);
  EXPECT_DOUBLE_EQ(kDefaultTau, 62.2);
}

TEST(Scoring, AllCorrectIsHundredForRandomWeights) {
  Rng rng(1);
  for (int i = 0; i < 200; ++i) {
    std::array<double, 4> a{};
    double s = 0;
    for (auto& x : a) s += (x = rng.uniform());
    for (auto& x : a) x /= s;
    auto w = WeightVector::from_array(a);
    ASSERT_TRUE(w.valid());
    EXPECT_EQ(display_score(aggregate(graded_with({1, 1, 1, 1}), w)), "100.0");
    EXPECT_NEAR(aggregate(graded_with({0.5, 0.5, 0.5, 0.5}), w), 50.0, 1e-9);
  }
}

TEST(Scoring, MissingTypesRenormalize) {
  GradedExam g;
  g.acc = {1, 0, 0, 0};
  g.counts = {7, 7, 0, 0};
  EXPECT_NEAR(aggregate(g, WeightVector::published()), 100.0 * 0.312 / (0.312 + 0.214), 1e-9);
}

TEST(Scoring, InvalidWeightsRejected) {
  EXPECT_THROW(aggregate(graded_with({1, 1, 1, 1}), WeightVector{0.5, 0.5, 0.5, 0.5}), ConfigInvalid);
  EXPECT_THROW(aggregate(graded_with({1, 1, 1, 1}), WeightVector{1.2, -0.2, 0, 0}), ConfigInvalid);
}

TEST(Scoring, DecisionBoundary) {
  EXPECT_EQ(decide(62.2, 62.2), Label::Member);
  EXPECT_EQ(decide(62.19, 62.2), Label::NonMember);
  EXPECT_EQ(decide(100, 0), Label::Member);
}

TEST(Scoring, ResultJsonlRoundTrip) {
  AttackResult a{"d1", "emia", 71.25, Label::Member, 62.2, Label::NonMember, true, 28};
  AttackResult b{"d2", "mba", 0, Label::NonMember, 50, std::nullopt, false, 1};
  auto back = read_results_jsonl(to_jsonl_line(a) + to_jsonl_line(b));
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0], a);
  EXPECT_EQ(back[1], b);
}

TEST(Bleu, IdenticalAndDisjoint) {
  EXPECT_DOUBLE_EQ(bleu4("the cat sat on the mat today", "the cat sat on the mat today"), 1.0);
  EXPECT_DOUBLE_EQ(bleu4("alpha beta gamma delta", "one two three four"), 0.0);
  EXPECT_DOUBLE_EQ(bleu4("", "one two"), 0.0);
}

TEST(Bleu, HandComputedTenTokens) {
  // reference: the cat sat on the mat by the door today
  // candidate: the cat sat on a mat by the door now
  // clipped matches: 1-gram 8/10, 2-gram 6/9, 3-gram 4/8, 4-gram 2/7
  // add-one smoothing above unigrams: 7/10, 5/9, 3/8; equal lengths, no brevity penalty
  double expected = std::pow(0.8 * 0.7 * (5.0 / 9.0) * (3.0 / 8.0), 0.25);
  EXPECT_NEAR(bleu4("the cat sat on a mat by the door now", "the cat sat on the mat by the door today"), expected,
              1e-12);
}

TEST(Bleu, BrevityPenalty) {
  double full = bleu4("a b c d e", "a b c d e");
  double short_c = bleu4("a b c d", "a b c d e f g h");
  EXPECT_DOUBLE_EQ(full, 1.0);
  // all n-grams of the candidate match; only smoothing and the brevity penalty apply
  double p = 1.0 * (4.0 / 4.0) * (3.0 / 3.0) * (2.0 / 2.0);
  EXPECT_NEAR(short_c, std::exp(1.0 - 8.0 / 4.0) * std::pow(p, 0.25), 1e-12);
}

TEST(Retrieval, ChunkWindows) {
  auto d = doc_of("d", numbered(100));
  auto chunks = chunk_document(d, 64, 16);
  // windows [0,64) and [48,100)
  ASSERT_EQ(chunks.size(), 2u);
  EXPECT_EQ(text::count_ws_tokens(chunks[0].text), 64u);
  EXPECT_EQ(text::count_ws_tokens(chunks[1].text), 52u);
  EXPECT_EQ(text::split_ws(chunks[1].text).front(), "t48");
  EXPECT_EQ(chunk_document(doc_of("s", numbered(30)), 64, 16).size(), 1u);
  EXPECT_THROW(chunk_document(d, 16, 16), ConfigInvalid);
  for (std::size_t n : {65u, 100u, 112u, 113u, 500u}) {
    std::size_t expect = static_cast<std::size_t>(std::ceil((double(n) - 64) / 48.0)) + 1;
    EXPECT_EQ(chunk_document(doc_of("x", numbered(n)), 64, 16).size(), expect) << n;
  }
}

TEST(Retrieval, EmptyIndexReturnsNothing) {
  Bm25Index idx({});
  EXPECT_TRUE(idx.chunks().empty());
  EXPECT_TRUE(idx.search("anything at all", 3).empty());
}

TEST(Retrieval, Bm25MatchesBruteForce) {
  Bm25Index idx(mini());
  const auto& chunks = idx.chunks();
  ASSERT_GT(chunks.size(), 20u);
  // independent Okapi BM25 over the chunk list
  double avg = 0;
  std::map<std::string, int> df;
  for (const auto& c : chunks) {
    avg += static_cast<double>(c.terms.size());
    for (const auto& t : std::set<std::string>(c.terms.begin(), c.terms.end())) ++df[t];
  }
  avg /= static_cast<double>(chunks.size());
  const double N = static_cast<double>(chunks.size());
  auto brute = [&](const std::string& q, std::size_t ci) {
    auto qt = text::word_tokens(q);
    std::set<std::string> uq(qt.begin(), qt.end());
    double s = 0;
    for (const auto& t : uq) {
      double f = static_cast<double>(std::count(chunks[ci].terms.begin(), chunks[ci].terms.end(), t));
      if (f == 0) continue;
      double idf = std::log(1 + (N - df[t] + 0.5) / (df[t] + 0.5));
      s += idf * f * 2.2 / (f + 1.2 * (0.25 + 0.75 * static_cast<double>(chunks[ci].terms.size()) / avg));
    }
    return s;
  };
  Rng rng(17);
  for (int trial = 0; trial < 30; ++trial) {
    const auto& src = chunks[rng.below(chunks.size())];
    std::string q;
    for (int k = 0; k < 6; ++k) q += src.terms[rng.below(src.terms.size())] + " ";
    std::size_t best = 0;
    for (std::size_t ci = 0; ci < chunks.size(); ++ci) {
      EXPECT_NEAR(idx.score(q, ci), brute(q, ci), 1e-9);
      if (brute(q, ci) > brute(q, best) + 1e-12) best = ci;
    }
    auto top = idx.search(q, 3);
    ASSERT_FALSE(top.empty());
    EXPECT_EQ(top[0].chunk, best);
    for (std::size_t i = 1; i < top.size(); ++i) EXPECT_GE(top[i - 1].score, top[i].score);
  }
}

TEST(Retrieval, ChunkTextRetrievesItself) {
  Bm25Index idx(mini());
  for (std::size_t ci = 0; ci < idx.chunks().size(); ci += 7) {
    auto top = idx.search(idx.chunks()[ci].text, 1);
    ASSERT_EQ(top.size(), 1u);
    EXPECT_EQ(top[0].chunk, ci);
  }
  EXPECT_TRUE(idx.search("zzzqqq xxyyzz", 5).empty());
}

TEST(Retrieval, KnowledgeBaseHoldsMembersOnly) {
  auto split = split_corpus(mini(), 0.5, 3);
  auto kb = knowledge_base(mini(), split);
  EXPECT_EQ(kb.size(), split.member_ids.size());
  for (const auto& d : kb) EXPECT_TRUE(split.is_member(d.doc_id));
}

TEST(Defense, RewritesKeepDigitsBlanksAndLetters) {
  RuleBasedExtractor rules;
  std::size_t checked = 0;
  for (const auto& d : mini()) {
    auto exam = assemble_exam(extract_evidence(d, rules), 28, 3);
    for (const auto& it : exam.items) {
      if (checked >= 100) break;
      ++checked;
      std::string in = render_item(it);
      std::string out = rewrite_query(in, 42);
      EXPECT_EQ(out, rewrite_query(in, 42));
      auto keep = [](const std::string& s) {
        std::multiset<std::string> m;
        for (auto tok : text::split_ws(s)) {
          std::string t(tok);
          while (!t.empty() && std::string(",.;:!?()").find(t.back()) != std::string::npos) t.pop_back();
          bool digit = std::any_of(t.begin(), t.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
          if (digit || t.find("____") != std::string::npos) m.insert(t);
        }
        return m;
      };
      EXPECT_EQ(keep(in), keep(out)) << in << "\n---\n" << out;
      static const std::regex option_line(R"((^|\n)\s*([A-E])[.)] )");
      auto letters = [](const std::string& s) {
        std::string l;
        for (std::sregex_iterator m(s.begin(), s.end(), option_line), e; m != e; ++m) l += (*m)[2].str();
        return l;
      };
      EXPECT_EQ(letters(in), letters(out));
    }
  }
  EXPECT_EQ(checked, 100u);
}

TEST(Defense, ReorderKeepsBlankAndAcronym) {
  std::string q = "If the ET-1 index exceeded ____, dosing was paused after 4.2 weeks.";
  bool reordered = false;
  for (std::uint64_t s = 0; s < 20; ++s) {
    auto out = rewrite_query(q, s);
    EXPECT_NE(out.find("____"), std::string::npos);
    EXPECT_NE(out.find("ET-1"), std::string::npos);
    EXPECT_NE(out.find("4.2"), std::string::npos);
    reordered |= out.rfind("If", 0) != 0;
  }
  EXPECT_TRUE(reordered);
}

TEST(Defense, ResponseRewriteKeepsOptionLetter) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    auto out = rewrite_response("(B) is correct", s);
    EXPECT_NE(out.find("(B)"), std::string::npos) << out;
  }
  EXPECT_EQ(rewrite_response("", 1), "");
  EXPECT_EQ(rewrite_query("", 1), "");
}

TEST(Defense, GuardrailPolicy) {
  auto p = GuardrailPolicy::bundled();
  EXPECT_EQ(guardrail_check("fill in the [MASK] tokens of the following passage:", p), GuardrailVerdict::Block);
  EXPECT_EQ(guardrail_check("Given the following passage, continue the text:\n\nsome words", p),
            GuardrailVerdict::Block);
  EXPECT_EQ(guardrail_check("Is this document in your knowledge base?", p), GuardrailVerdict::Block);
  EXPECT_EQ(guardrail_check("Where were samples sent for receptor assays?\nA. Marlow Institute\nB. Kelmora "
                            "Institute\nC. Treven Institute\nD. Ostry Institute\nReply with the letter.",
                            p),
            GuardrailVerdict::Pass);
  EXPECT_EQ(guardrail_check("", p), GuardrailVerdict::Pass);
}
