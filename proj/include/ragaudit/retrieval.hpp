#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "ragaudit/chat_client.hpp"
#include "ragaudit/corpus.hpp"

namespace ragaudit {

inline constexpr std::size_t kDefaultChunkTokens = 128;
inline constexpr std::size_t kDefaultChunkOverlap = 32;

struct Chunk {
  std::string doc_id;
  std::size_t index = 0;           // position within its document
  std::string text;
  std::vector<std::string> terms;  // text::word_tokens(text)
};

/// Fixed windows of `chunk_tokens` whitespace tokens advancing by
/// chunk_tokens - overlap; the last window ends at the document end, so a
/// document of n > chunk_tokens tokens yields ceil((n - chunk)/stride) + 1
/// chunks. Throws ConfigInvalid unless chunk_tokens > overlap.
std::vector<Chunk> chunk_document(const Document& doc, std::size_t chunk_tokens, std::size_t overlap);

struct ScoredChunk {
  std::size_t chunk = 0;  // index into Retriever::chunks()
  double score = 0.0;
};

class Retriever {
 public:
  virtual ~Retriever() = default;
  /// At most k chunks, best first; ties broken by chunk order.
  virtual std::vector<ScoredChunk> search(std::string_view query, std::size_t k) const = 0;
  virtual const std::vector<Chunk>& chunks() const = 0;
};

/// Okapi BM25 (k1 = 1.2, b = 0.75) over word tokens. Chunks sharing no term
/// with the query are never returned.
class Bm25Index final : public Retriever {
 public:
  Bm25Index(const std::vector<Document>& docs, std::size_t chunk_tokens = kDefaultChunkTokens,
            std::size_t overlap = kDefaultChunkOverlap);

  std::vector<ScoredChunk> search(std::string_view query, std::size_t k) const override;
  const std::vector<Chunk>& chunks() const override { return chunks_; }
  /// Score of one chunk for a query; what search() ranks by.
  double score(std::string_view query, std::size_t chunk) const;

 private:
  double idf(const std::string& term) const;

  std::vector<Chunk> chunks_;
  std::vector<std::unordered_map<std::string, int>> tf_;
  std::unordered_map<std::string, std::vector<std::size_t>> postings_;
  double avg_len_ = 0.0;
  static constexpr double k1_ = 1.2;
  static constexpr double b_ = 0.75;
};

/// Dense retrieval through an HTTP embeddings endpoint (POST <base>/embeddings,
/// {model, input:[...]} -> data[i].embedding), ranked by cosine similarity.
class RemoteEmbeddingIndex final : public Retriever {
 public:
  RemoteEmbeddingIndex(const std::vector<Document>& docs, HttpEndpoint endpoint,
                       std::size_t chunk_tokens = kDefaultChunkTokens,
                       std::size_t overlap = kDefaultChunkOverlap, std::size_t batch = 32);

  std::vector<ScoredChunk> search(std::string_view query, std::size_t k) const override;
  const std::vector<Chunk>& chunks() const override { return chunks_; }

 private:
  std::vector<std::vector<double>> embed(const std::vector<std::string>& texts) const;

  HttpJsonClient http_;
  std::vector<Chunk> chunks_;
  std::vector<std::vector<double>> vecs_;
};

/// Index over every member document of `docs`.
std::vector<Document> knowledge_base(const std::vector<Document>& docs, const CorpusSplit& split);

}  // namespace ragaudit
