#pragma once

// Offer JSONL: one object per line.
//
//   {"offer_id": "...", "domain": "...", "brand": "...", "title": "...",
//    "price": 46.9, "n_sizes": 6, "category": "dress", "product_id": "p1",
//    "image_emb": [[...], ...] | {"ref": <row>, "count": <rows>},
//    "text_emb": [...] | {"ref": <row>}}
//
// "category" and "product_id" are optional. Referenced embeddings live in
// sidecar tables next to the JSONL file: <stem>.img.mfeb and <stem>.txt.mfeb.

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "prodmatch/core/error.hpp"
#include "prodmatch/domain/corpus.hpp"
#include "prodmatch/domain/embedding_file.hpp"
#include "prodmatch/domain/text.hpp"

namespace prodmatch {

inline constexpr std::string_view kOfferSchemaV1 = "offers-jsonl/v1";

inline std::filesystem::path image_sidecar_path(const std::filesystem::path& jsonl) {
  auto p = jsonl;
  return p.replace_extension(".img.mfeb");
}

inline std::filesystem::path text_sidecar_path(const std::filesystem::path& jsonl) {
  auto p = jsonl;
  return p.replace_extension(".txt.mfeb");
}

struct IngestOptions {
  CorpusRole role = CorpusRole::train;
  std::string index_domain;
  std::string query_domain;
  std::optional<std::filesystem::path> image_sidecar;  // default: image_sidecar_path()
  std::optional<std::filesystem::path> text_sidecar;   // default: text_sidecar_path()
};

namespace detail {

class LazyTable {
 public:
  explicit LazyTable(std::filesystem::path path) : path_(std::move(path)) {}

  const EmbeddingTable& get() {
    if (!table_) table_ = read_embedding_table(path_);
    return *table_;
  }

 private:
  std::filesystem::path path_;
  std::optional<EmbeddingTable> table_;
};

inline std::vector<double> parse_vector(const nlohmann::json& j, const std::string& source, std::size_t line,
                                        const char* field) {
  if (!j.is_array()) throw FormatError(source, line, std::string(field) + " must be an array of numbers");
  std::vector<double> v;
  v.reserve(j.size());
  for (const auto& x : j) {
    if (!x.is_number()) throw FormatError(source, line, std::string(field) + " contains a non-number");
    v.push_back(x.get<double>());
  }
  return v;
}

inline std::vector<std::vector<double>> resolve_ref(const nlohmann::json& j, LazyTable& table,
                                                    const std::string& source, std::size_t line,
                                                    const char* field) {
  if (!j.contains("ref") || !j["ref"].is_number_unsigned())
    throw FormatError(source, line, std::string(field) + ".ref must be a non-negative integer");
  const auto first = j["ref"].get<std::size_t>();
  const auto count = j.contains("count") ? j["count"].get<std::size_t>() : std::size_t{1};
  const EmbeddingTable* sidecar = nullptr;
  try {
    sidecar = &table.get();
  } catch (const NotFoundError& e) {
    throw FormatError(source, line, std::string(field) + " refers to a missing sidecar (" + e.what() + ")");
  }
  const EmbeddingTable& t = *sidecar;
  if (first + count > t.count())
    throw FormatError(source, line,
                      std::string(field) + " references rows [" + std::to_string(first) + ", " +
                          std::to_string(first + count) + ") beyond sidecar size " + std::to_string(t.count()));
  std::vector<std::vector<double>> rows;
  for (std::size_t r = first; r < first + count; ++r) rows.push_back(t.row_as_double(r));
  return rows;
}

template <typename T>
T required(const nlohmann::json& obj, const char* key, const std::string& source, std::size_t line) {
  if (!obj.contains(key)) throw FormatError(source, line, std::string("missing field '") + key + "'");
  try {
    return obj.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw FormatError(source, line, std::string("field '") + key + "' has the wrong type");
  }
}

}  // namespace detail

/// Parse one JSONL record. Sidecars are only opened when a record refers to them.
inline Offer parse_offer(const nlohmann::json& j, detail::LazyTable& images, detail::LazyTable& texts,
                         const std::string& source, std::size_t line) {
  if (!j.is_object()) throw FormatError(source, line, "record is not a JSON object");
  Offer o;
  o.offer_id = detail::required<std::string>(j, "offer_id", source, line);
  o.domain = detail::required<std::string>(j, "domain", source, line);
  o.brand_raw = detail::required<std::string>(j, "brand", source, line);
  o.title_raw = detail::required<std::string>(j, "title", source, line);
  o.price = detail::required<double>(j, "price", source, line);
  o.n_sizes = detail::required<std::int64_t>(j, "n_sizes", source, line);
  if (j.contains("category") && !j["category"].is_null()) o.category = j["category"].get<std::string>();
  if (j.contains("product_id") && !j["product_id"].is_null()) o.product_id = j["product_id"].get<std::string>();
  o.text_feature = normalize_text(o.brand_raw, o.title_raw);

  if (!j.contains("image_emb")) throw FormatError(source, line, "missing field 'image_emb'");
  const auto& img = j["image_emb"];
  if (img.is_object()) {
    o.image_embeddings = detail::resolve_ref(img, images, source, line, "image_emb");
  } else if (img.is_array()) {
    for (const auto& row : img) o.image_embeddings.push_back(detail::parse_vector(row, source, line, "image_emb"));
  } else {
    throw FormatError(source, line, "image_emb must be an array of vectors or a sidecar reference");
  }
  if (o.image_embeddings.empty()) throw FormatError(source, line, "offer has no image embeddings");
  const std::size_t d = o.image_embeddings.front().size();
  for (const auto& v : o.image_embeddings)
    if (v.size() != d)
      throw FormatError(source, line,
                        "image embedding dimension mismatch (" + std::to_string(d) + " vs " +
                            std::to_string(v.size()) + ")");

  if (!j.contains("text_emb")) throw FormatError(source, line, "missing field 'text_emb'");
  const auto& txt = j["text_emb"];
  if (txt.is_object()) {
    o.text_embedding = detail::resolve_ref(txt, texts, source, line, "text_emb").front();
  } else {
    o.text_embedding = detail::parse_vector(txt, source, line, "text_emb");
  }

  try {
    (void)o.numerical();
  } catch (const DomainError& e) {
    throw FormatError(source, line, e.what());
  }
  return o;
}

/// Read an offer JSONL file into a validated Corpus.
inline Corpus ingest_offers(const std::filesystem::path& path, std::string_view schema = kOfferSchemaV1,
                            const IngestOptions& options = {}) {
  if (schema != kOfferSchemaV1) throw ConfigError("unsupported offer schema '" + std::string(schema) + "'");
  std::ifstream is(path);
  if (!is) throw NotFoundError("cannot open corpus file " + path.string());
  const std::string source = path.string();
  detail::LazyTable images(options.image_sidecar.value_or(image_sidecar_path(path)));
  detail::LazyTable texts(options.text_sidecar.value_or(text_sidecar_path(path)));

  std::vector<Offer> offers;
  std::set<OfferKey> seen;
  std::string text;
  std::size_t line = 0;
  while (std::getline(is, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      throw FormatError(source, line, std::string("malformed JSON: ") + e.what());
    }
    Offer o = parse_offer(j, images, texts, source, line);
    if (!seen.insert(o.key()).second) throw FormatError(source, line, "duplicate offer " + o.key().str());
    offers.push_back(std::move(o));
  }
  try {
    return Corpus(std::move(offers), options.role, options.index_domain, options.query_domain);
  } catch (const DomainError& e) {
    throw FormatError(source, 0, e.what());
  }
}

struct WriteOptions {
  bool use_sidecars = true;
};

/// Write a corpus as JSONL. With sidecars, embeddings go to <stem>.img.mfeb /
/// <stem>.txt.mfeb as float32 rows and records hold references.
inline void write_offers(const std::filesystem::path& path, const Corpus& corpus, const WriteOptions& options = {}) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw Error("cannot open " + path.string() + " for writing");
  EmbeddingTable images;
  EmbeddingTable texts;
  for (const Offer& o : corpus.offers()) {
    nlohmann::ordered_json j;
    j["offer_id"] = o.offer_id;
    j["domain"] = o.domain;
    j["brand"] = o.brand_raw;
    j["title"] = o.title_raw;
    j["price"] = o.price;
    j["n_sizes"] = o.n_sizes;
    j["category"] = o.category;
    if (o.product_id) j["product_id"] = *o.product_id;
    if (options.use_sidecars) {
      j["image_emb"] = {{"ref", images.count()}, {"count", o.image_embeddings.size()}};
      for (const auto& v : o.image_embeddings) images.append(v);
      j["text_emb"] = {{"ref", texts.count()}};
      texts.append(o.text_embedding);
    } else {
      j["image_emb"] = o.image_embeddings;
      j["text_emb"] = o.text_embedding;
    }
    os << j.dump() << '\n';
  }
  if (!os) throw Error("write failed: " + path.string());
  if (options.use_sidecars) {
    write_embedding_table(image_sidecar_path(path), images);
    write_embedding_table(text_sidecar_path(path), texts);
  }
}

}  // namespace prodmatch
