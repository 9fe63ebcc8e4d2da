#include "ragaudit/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "ragaudit/errors.hpp"
#include "ragaudit/rng.hpp"
#include "ragaudit/text.hpp"

namespace ragaudit {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::string_view to_string(Label label) {
  return label == Label::Member ? "member" : "nonmember";
}

Label label_from_string(std::string_view s) {
  if (s == "member" || s == "Member") return Label::Member;
  if (s == "nonmember" || s == "NonMember" || s == "non-member") return Label::NonMember;
  throw UserError("unknown label: " + std::string(s));
}

CorpusFormat corpus_format_from_string(std::string_view s) {
  if (s == "beir-jsonl" || s == "jsonl") return CorpusFormat::BeirJsonl;
  if (s == "plain-dir") return CorpusFormat::PlainDir;
  throw ConfigInvalid("unknown corpus format: " + std::string(s));
}

namespace {

std::string dedup_key(std::string_view text) { return text::nfc(text::trim(text)); }

class Filter {
 public:
  void offer(Document doc) {
    doc.token_count = text::count_ws_tokens(doc.text);
    if (doc.token_count < kMinDocumentTokens) return;
    if (!seen_text_.insert(dedup_key(doc.text)).second) return;
    // Repeated ids with different text would break the uniqueness invariant.
    if (!seen_ids_.insert(doc.doc_id).second) return;
    docs_.push_back(std::move(doc));
  }

  std::vector<Document> finish() && {
    if (docs_.empty()) throw EmptyCorpus();
    return std::move(docs_);
  }

 private:
  std::unordered_set<std::string> seen_text_;
  std::unordered_set<std::string> seen_ids_;
  std::vector<Document> docs_;
};

Document parse_record(const std::string& line, std::size_t line_no) {
  json rec;
  try {
    rec = json::parse(line);
  } catch (const json::parse_error& e) {
    throw MalformedRecord(line_no, e.what());
  }
  if (!rec.is_object()) throw MalformedRecord(line_no, "record is not a JSON object");

  Document doc;
  auto read_string = [&](const char* key) -> std::optional<std::string> {
    auto it = rec.find(key);
    if (it == rec.end() || it->is_null()) return std::nullopt;
    if (it->is_string()) return it->get<std::string>();
    if (it->is_number_integer()) return std::to_string(it->get<long long>());
    throw MalformedRecord(line_no, std::string("field '") + key + "' is not a string");
  };
  if (auto id = read_string("_id")) {
    doc.doc_id = *id;
  } else if (auto id2 = read_string("doc_id")) {
    doc.doc_id = *id2;
  } else {
    throw MalformedRecord(line_no, "missing '_id'");
  }
  auto body = read_string("text");
  if (!body) throw MalformedRecord(line_no, "missing 'text'");
  doc.text = std::move(*body);
  doc.title = read_string("title").value_or("");
  if (auto label = read_string("label")) doc.label = label_from_string(*label);
  return doc;
}

std::vector<Document> ingest_stream(std::istream& in) {
  Filter filter;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (text::trim(line).empty()) continue;
    filter.offer(parse_record(line, line_no));
  }
  return std::move(filter).finish();
}

std::vector<Document> ingest_dir(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".txt") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  Filter filter;
  for (const auto& file : files) {
    std::ifstream in(file, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    Document doc;
    doc.doc_id = file.stem().string();
    doc.text = buf.str();
    filter.offer(std::move(doc));
  }
  return std::move(filter).finish();
}

}  // namespace

std::vector<Document> ingest_corpus(const fs::path& path, CorpusFormat format) {
  if (!fs::exists(path)) throw CorpusError("corpus path does not exist: " + path.string());
  if (format == CorpusFormat::PlainDir) {
    if (!fs::is_directory(path)) throw CorpusError("plain-dir corpus is not a directory: " + path.string());
    return ingest_dir(path);
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CorpusError("cannot open corpus: " + path.string());
  return ingest_stream(in);
}

std::vector<Document> ingest_jsonl(std::string_view jsonl) {
  std::istringstream in{std::string(jsonl)};
  return ingest_stream(in);
}

std::string corpus_to_jsonl(const std::vector<Document>& docs) {
  std::string out;
  for (const auto& d : docs) {
    nlohmann::ordered_json rec;
    rec["doc_id"] = d.doc_id;
    rec["title"] = d.title;
    rec["text"] = d.text;
    rec["token_count"] = d.token_count;
    rec["label"] = d.label ? json(std::string(to_string(*d.label))) : json(nullptr);
    out += rec.dump();
    out += '\n';
  }
  return out;
}

void write_corpus_jsonl(const fs::path& path, const std::vector<Document>& docs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UserError("cannot write corpus file: " + path.string());
  out << corpus_to_jsonl(docs);
}

CorpusSplit split_corpus(const std::vector<Document>& docs, double member_fraction,
                         std::uint64_t seed) {
  if (docs.size() < 2) throw UserError("split_corpus needs at least two documents");
  if (!(member_fraction > 0.0 && member_fraction < 1.0))
    throw ConfigInvalid("member_fraction must lie in (0, 1)");

  std::vector<std::size_t> order(docs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(derive_seed(seed, "split"));
  rng.shuffle(std::span<std::size_t>(order));

  const auto n_members =
      static_cast<std::size_t>(std::llround(member_fraction * static_cast<double>(docs.size())));
  CorpusSplit split;
  split.seed = seed;
  for (std::size_t i = 0; i < order.size(); ++i) {
    const auto& id = docs[order[i]].doc_id;
    (i < n_members ? split.member_ids : split.nonmember_ids).insert(id);
  }
  return split;
}

namespace {

std::vector<std::string> sample(const std::set<std::string>& pool,
                                const std::set<std::string>& excluded, std::size_t n, Rng& rng,
                                const char* cls) {
  std::vector<std::string> candidates;
  for (const auto& id : pool)
    if (!excluded.count(id)) candidates.push_back(id);
  if (n > candidates.size()) throw InsufficientPool(cls, candidates.size(), n);
  // Partial Fisher-Yates: the first n slots are a uniform sample.
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t j = i + static_cast<std::size_t>(rng.below(candidates.size() - i));
    std::swap(candidates[i], candidates[j]);
  }
  candidates.resize(n);
  return candidates;
}

EvalSet build_balanced(const CorpusSplit& split, const std::set<std::string>& excluded,
                       std::size_t n_per_class, std::uint64_t seed, const char* tag) {
  Rng rng(derive_seed(seed, tag));
  EvalSet set;
  set.seed = seed;
  auto members = sample(split.member_ids, excluded, n_per_class, rng, "member");
  auto nonmembers = sample(split.nonmember_ids, excluded, n_per_class, rng, "nonmember");
  for (auto& id : members) set.targets.push_back({std::move(id), Label::Member});
  for (auto& id : nonmembers) set.targets.push_back({std::move(id), Label::NonMember});
  rng.shuffle(std::span<EvalTarget>(set.targets));
  return set;
}

}  // namespace

EvalSet build_eval_set(const CorpusSplit& split, std::size_t n_per_class, std::uint64_t seed) {
  return build_balanced(split, {}, n_per_class, seed, "eval");
}

EvalSet build_dev_set(const CorpusSplit& split, const EvalSet& exclude, std::size_t n_per_class,
                      std::uint64_t seed) {
  std::set<std::string> excluded;
  for (const auto& t : exclude.targets) excluded.insert(t.doc_id);
  return build_balanced(split, excluded, n_per_class, seed, "dev");
}

std::vector<Document> apply_split(std::vector<Document> docs, const CorpusSplit& split) {
  for (auto& d : docs) d.label = split.is_member(d.doc_id) ? Label::Member : Label::NonMember;
  return docs;
}

}  // namespace ragaudit
