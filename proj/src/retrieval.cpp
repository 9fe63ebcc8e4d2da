#include "ragaudit/retrieval.hpp"

#include <algorithm>
#include <cmath>

#include "ragaudit/errors.hpp"
#include "ragaudit/text.hpp"

namespace ragaudit {

std::vector<Chunk> chunk_document(const Document& doc, std::size_t chunk_tokens, std::size_t overlap) {
  if (chunk_tokens == 0 || chunk_tokens <= overlap)
    throw ConfigInvalid("chunk size must exceed the overlap");
  auto toks = text::split_ws(doc.text);
  std::vector<Chunk> out;
  if (toks.empty()) return out;
  const std::size_t stride = chunk_tokens - overlap;
  for (std::size_t start = 0;; start += stride) {
    std::size_t end = std::min(toks.size(), start + chunk_tokens);
    Chunk c;
    c.doc_id = doc.doc_id;
    c.index = out.size();
    std::size_t b = static_cast<std::size_t>(toks[start].data() - doc.text.data());
    std::size_t e = static_cast<std::size_t>(toks[end - 1].data() - doc.text.data()) + toks[end - 1].size();
    c.text = doc.text.substr(b, e - b);
    c.terms = text::word_tokens(c.text);
    out.push_back(std::move(c));
    if (end == toks.size()) break;
  }
  return out;
}

Bm25Index::Bm25Index(const std::vector<Document>& docs, std::size_t chunk_tokens, std::size_t overlap) {
  for (const auto& d : docs) {
    auto cs = chunk_document(d, chunk_tokens, overlap);
    for (auto& c : cs) chunks_.push_back(std::move(c));
  }
  double total = 0;
  tf_.resize(chunks_.size());
  for (std::size_t i = 0; i < chunks_.size(); ++i) {
    for (const auto& t : chunks_[i].terms) ++tf_[i][t];
    for (const auto& [t, n] : tf_[i]) postings_[t].push_back(i);
    total += static_cast<double>(chunks_[i].terms.size());
  }
  avg_len_ = chunks_.empty() ? 0.0 : total / static_cast<double>(chunks_.size());
}

double Bm25Index::idf(const std::string& term) const {
  auto it = postings_.find(term);
  double df = it == postings_.end() ? 0.0 : static_cast<double>(it->second.size());
  double n = static_cast<double>(chunks_.size());
  return std::log(1.0 + (n - df + 0.5) / (df + 0.5));
}

double Bm25Index::score(std::string_view query, std::size_t chunk) const {
  auto q = text::word_tokens(query);
  std::sort(q.begin(), q.end());
  q.erase(std::unique(q.begin(), q.end()), q.end());
  double len = static_cast<double>(chunks_[chunk].terms.size());
  double s = 0;
  for (const auto& t : q) {
    auto it = tf_[chunk].find(t);
    if (it == tf_[chunk].end()) continue;
    double f = it->second;
    s += idf(t) * f * (k1_ + 1) / (f + k1_ * (1 - b_ + b_ * len / avg_len_));
  }
  return s;
}

std::vector<ScoredChunk> Bm25Index::search(std::string_view query, std::size_t k) const {
  auto q = text::word_tokens(query);
  std::sort(q.begin(), q.end());
  q.erase(std::unique(q.begin(), q.end()), q.end());
  std::unordered_map<std::size_t, double> acc;
  for (const auto& t : q) {
    auto it = postings_.find(t);
    if (it == postings_.end()) continue;
    double w = idf(t);
    for (auto i : it->second) {
      double f = tf_[i].at(t);
      double len = static_cast<double>(chunks_[i].terms.size());
      acc[i] += w * f * (k1_ + 1) / (f + k1_ * (1 - b_ + b_ * len / avg_len_));
    }
  }
  std::vector<ScoredChunk> out;
  out.reserve(acc.size());
  for (const auto& [i, s] : acc) out.push_back({i, s});
  auto better = [](const ScoredChunk& a, const ScoredChunk& b) {
    return a.score != b.score ? a.score > b.score : a.chunk < b.chunk;
  };
  if (out.size() > k) {
    std::partial_sort(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(k), out.end(), better);
    out.resize(k);
  } else {
    std::sort(out.begin(), out.end(), better);
  }
  return out;
}

RemoteEmbeddingIndex::RemoteEmbeddingIndex(const std::vector<Document>& docs, HttpEndpoint endpoint,
                                           std::size_t chunk_tokens, std::size_t overlap, std::size_t batch)
    : http_(std::move(endpoint)) {
  for (const auto& d : docs)
    for (auto& c : chunk_document(d, chunk_tokens, overlap)) chunks_.push_back(std::move(c));
  batch = std::max<std::size_t>(batch, 1);
  for (std::size_t i = 0; i < chunks_.size(); i += batch) {
    std::vector<std::string> texts;
    for (std::size_t j = i; j < std::min(chunks_.size(), i + batch); ++j) texts.push_back(chunks_[j].text);
    for (auto& v : embed(texts)) vecs_.push_back(std::move(v));
  }
}

std::vector<std::vector<double>> RemoteEmbeddingIndex::embed(const std::vector<std::string>& texts) const {
  nlohmann::json body{{"model", http_.endpoint().model}, {"input", texts}};
  auto r = http_.post("/embeddings", body);
  std::vector<std::vector<double>> out;
  try {
    for (const auto& d : r.at("data")) {
      auto v = d.at("embedding").get<std::vector<double>>();
      double n = 0;
      for (double x : v) n += x * x;
      n = std::sqrt(n);
      if (n > 0)
        for (double& x : v) x /= n;
      out.push_back(std::move(v));
    }
  } catch (const nlohmann::json::exception& e) {
    throw TargetUnavailable(std::string("malformed embeddings response: ") + e.what());
  }
  if (out.size() != texts.size()) throw TargetUnavailable("embeddings response size mismatch");
  return out;
}

std::vector<ScoredChunk> RemoteEmbeddingIndex::search(std::string_view query, std::size_t k) const {
  if (chunks_.empty()) return {};
  auto q = embed({std::string(query)}).front();
  std::vector<ScoredChunk> out;
  for (std::size_t i = 0; i < vecs_.size(); ++i) {
    double s = 0;
    for (std::size_t d = 0; d < std::min(q.size(), vecs_[i].size()); ++d) s += q[d] * vecs_[i][d];
    out.push_back({i, s});
  }
  std::stable_sort(out.begin(), out.end(), [](const ScoredChunk& a, const ScoredChunk& b) { return a.score > b.score; });
  if (out.size() > k) out.resize(k);
  return out;
}

std::vector<Document> knowledge_base(const std::vector<Document>& docs, const CorpusSplit& split) {
  std::vector<Document> kb;
  for (const auto& d : docs)
    if (split.is_member(d.doc_id)) kb.push_back(d);
  return kb;
}

}  // namespace ragaudit
