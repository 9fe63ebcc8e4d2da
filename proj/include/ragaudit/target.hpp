#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ragaudit/chat_client.hpp"
#include "ragaudit/defense.hpp"
#include "ragaudit/exam.hpp"
#include "ragaudit/grader.hpp"
#include "ragaudit/retrieval.hpp"

namespace ragaudit {

enum class TargetKind { SimulatedRAG, RemoteHTTP };
enum class RetrieverKind { BM25Lexical, RemoteEmbedding };

std::string_view to_string(TargetKind k);
std::string_view to_string(RetrieverKind k);

struct TargetConfig {
  TargetKind kind = TargetKind::SimulatedRAG;
  std::size_t top_k = 3;
  RetrieverKind retriever = RetrieverKind::BM25Lexical;
  DefenseConfig defenses;
  std::uint64_t seed = 0;
  std::size_t chunk_tokens = kDefaultChunkTokens;
  std::size_t chunk_overlap = kDefaultChunkOverlap;
};

/// Behaviour of the simulated generator. When an item's evidence anchor is in
/// a retrieved chunk it answers correctly with probability p_hit; otherwise it
/// guesses. Choice guesses are uniform over the options (1/C for SC,
/// 1/C(n,2) for MC); with choice_guessing off they always miss.
///
/// familiarity_max scales a per-document familiarity f in [0, familiarity_max]
/// standing in for what a model can say about a document it never retrieved:
/// it biases yes/no and true/false replies towards agreement, lets
/// continuations reuse the document's wording and raises mask-fill hits.
struct OracleGeneratorConfig {
  double p_hit = 0.95;
  double guess_fb = 0.02;
  double guess_tf = 0.5;
  bool choice_guessing = true;
  double familiarity_max = 0.8;
  double paraphrase_rate = 0.3;  // share of reworded tokens in reproduced passages
  double guess_mask = 0.2;

  /// p_hit = 1 with every guess and noise rate at zero.
  static OracleGeneratorConfig oracle();
  /// Throws ConfigInvalid when a probability leaves [0,1].
  void validate() const;

  static double guess_sc(int options) { return 1.0 / options; }
  static double guess_mc(int options) { return 2.0 / (options * (options - 1)); }
};

/// What the simulated generator may consult besides the query text. Attack
/// code attaches one hint per question; remote targets ignore hints.
struct QueryHint {
  enum class Kind { ExamItem, Continuation, MaskFill, YesNo };
  Kind kind = Kind::ExamItem;
  std::string doc_id;
  std::optional<ExamItem> item;      // ExamItem
  std::vector<std::string> anchors;  // hit test: [0] for items; one per mask for MaskFill
  std::string reference;             // Continuation: the withheld text
  std::vector<std::string> answers;  // MaskFill: the hidden tokens
};

struct Query {
  std::string query_id;
  std::string text;
  std::vector<QueryHint> hints;
};

struct RetrievalTrace {
  std::string query_id;
  std::vector<std::string> retrieved_doc_ids;
  std::optional<bool> contains_target;
};

/// Analysis-only channel; never handed to attack or scoring code.
class TraceSink {
 public:
  void add(RetrievalTrace t);
  std::vector<RetrievalTrace> snapshot() const;
  /// Sorted by query_id so concurrent runs serialize identically.
  std::string to_jsonl() const;

 private:
  mutable std::mutex mu_;
  std::vector<RetrievalTrace> traces_;
};

class Target {
 public:
  virtual ~Target() = default;
  /// The reply's item_id is the query id. Throws TargetUnavailable.
  virtual RawResponse answer(const Query& query) const = 0;
  virtual std::string name() const = 0;
  std::size_t queries_served() const { return served_.load(); }

 protected:
  mutable std::atomic<std::size_t> served_{0};
};

/// Local RAG stand-in: (rewritten) query -> top-k chunks -> oracle generator
/// -> response rewrite. The guardrail screens the incoming query. Safe for
/// concurrent answer() calls; replies depend only on (seed, query).
class SimulatedRag final : public Target {
 public:
  SimulatedRag(std::shared_ptr<const Retriever> index, TargetConfig config, OracleGeneratorConfig oracle,
               TraceSink* traces = nullptr);

  RawResponse answer(const Query& query) const override;
  std::string name() const override { return "sim"; }

  const GuardrailStats& guardrail_stats() const { return stats_; }
  double familiarity(const std::string& doc_id) const;
  const TargetConfig& config() const { return cfg_; }

 private:
  std::string generate(const Query& q, std::size_t hint_index, const std::vector<std::size_t>& retrieved) const;
  bool anchor_hit(std::string_view anchor, const std::vector<std::size_t>& retrieved) const;

  std::shared_ptr<const Retriever> index_;
  TargetConfig cfg_;
  OracleGeneratorConfig gen_;
  TraceSink* traces_;
  mutable GuardrailStats stats_;
};

/// Sends the query text as one user message to a chat-completion endpoint.
class RemoteHttpTarget final : public Target {
 public:
  explicit RemoteHttpTarget(std::shared_ptr<const ChatClient> client, std::string system_prompt = {});
  RawResponse answer(const Query& query) const override;
  std::string name() const override { return "remote"; }

 private:
  std::shared_ptr<const ChatClient> client_;
  std::string system_prompt_;
};

}  // namespace ragaudit
