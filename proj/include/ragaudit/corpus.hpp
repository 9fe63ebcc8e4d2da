#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace ragaudit {

enum class Label { Member, NonMember };

std::string_view to_string(Label label);
Label label_from_string(std::string_view s);

struct Document {
  std::string doc_id;
  std::string title;
  std::string text;
  std::size_t token_count = 0;  // whitespace tokens of `text`, computed at ingest
  std::optional<Label> label;

  bool operator==(const Document&) const = default;
};

enum class CorpusFormat { BeirJsonl, PlainDir };

CorpusFormat corpus_format_from_string(std::string_view s);

/// Documents with fewer whitespace tokens are dropped at ingest.
inline constexpr std::size_t kMinDocumentTokens = 50;

/// Reads a corpus, drops exact duplicates (NFC + trimmed text, first
/// occurrence wins) and documents under kMinDocumentTokens. Input order is
/// preserved. JSONL records may carry `_id` (BEIR) or `doc_id` (the
/// persisted format written by write_corpus_jsonl).
///
/// Throws MalformedRecord for unparseable lines, EmptyCorpus when nothing
/// survives and CorpusError for a missing path.
std::vector<Document> ingest_corpus(const std::filesystem::path& path, CorpusFormat format);

/// Same as ingest_corpus over in-memory JSONL text.
std::vector<Document> ingest_jsonl(std::string_view jsonl);

void write_corpus_jsonl(const std::filesystem::path& path, const std::vector<Document>& docs);
std::string corpus_to_jsonl(const std::vector<Document>& docs);

struct CorpusSplit {
  std::set<std::string> member_ids;
  std::set<std::string> nonmember_ids;
  std::uint64_t seed = 0;

  bool is_member(const std::string& doc_id) const { return member_ids.count(doc_id) != 0; }
};

/// Random member/non-member split; member count is round(member_fraction * |docs|).
CorpusSplit split_corpus(const std::vector<Document>& docs, double member_fraction,
                         std::uint64_t seed);

struct EvalTarget {
  std::string doc_id;
  Label label;
};

struct EvalSet {
  std::vector<EvalTarget> targets;
  std::uint64_t seed = 0;
};

/// Balanced evaluation set: n_per_class members and non-members sampled
/// without replacement. Throws InsufficientPool.
EvalSet build_eval_set(const CorpusSplit& split, std::size_t n_per_class, std::uint64_t seed);

/// Balanced set drawn from the documents not used by `exclude` (a held-out
/// calibration set disjoint from the evaluation targets).
EvalSet build_dev_set(const CorpusSplit& split, const EvalSet& exclude, std::size_t n_per_class,
                      std::uint64_t seed);

/// Copies `docs`, setting each label from the split.
std::vector<Document> apply_split(std::vector<Document> docs, const CorpusSplit& split);

}  // namespace ragaudit
