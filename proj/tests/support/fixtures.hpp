#pragma once

#include <unistd.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "prodmatch/prodmatch.hpp"

namespace fixture {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("prodmatch-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

inline void write_file(const std::filesystem::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << content;
}

inline prodmatch::Offer offer(std::string domain, std::string id, std::optional<std::string> product,
                              std::vector<double> image, std::vector<double> text = {0.5, -0.5},
                              std::string brand = "Acme", double price = 20.0, std::int64_t sizes = 3) {
  prodmatch::Offer o;
  o.domain = std::move(domain);
  o.offer_id = std::move(id);
  o.product_id = std::move(product);
  o.image_embeddings = {std::move(image)};
  o.text_embedding = std::move(text);
  o.brand_raw = brand;
  o.title_raw = "shirt";
  o.price = price;
  o.n_sizes = sizes;
  return o;
}

inline prodmatch::SynthConfig small_synth(std::uint64_t seed = 11) {
  prodmatch::SynthConfig c;
  c.n_products = 240;
  c.d_img = 24;
  c.d_txt = 12;
  c.img_signal_rank = 6;
  c.txt_signal_rank = 4;
  c.detail_rank = 2;
  c.n_brands = 12;
  c.seed = seed;
  return c;
}

/// Unit rows with labels drawn from a few products plus singletons.
inline prodmatch::EmbeddingBatch random_batch(std::mt19937_64& gen, std::size_t n, std::size_t dim,
                                              std::size_t n_labels) {
  std::normal_distribution<double> normal;
  std::uniform_int_distribution<std::int64_t> label(0, static_cast<std::int64_t>(n_labels) - 1);
  prodmatch::EmbeddingBatch b;
  b.embeddings.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim));
  for (Eigen::Index i = 0; i < b.embeddings.size(); ++i) b.embeddings.data()[i] = normal(gen);
  for (Eigen::Index i = 0; i < b.embeddings.rows(); ++i) b.embeddings.row(i).normalize();
  for (std::size_t i = 0; i < n; ++i) b.labels.push_back(label(gen));
  b.labels[1] = b.labels[0];  // at least one positive pair
  return b;
}

}  // namespace fixture
