#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "prodmatch/core/error.hpp"
#include "prodmatch/core/linalg.hpp"
#include "prodmatch/core/random.hpp"
#include "prodmatch/domain/corpus.hpp"
#include "prodmatch/domain/corpus_io.hpp"
#include "prodmatch/domain/text.hpp"

namespace prodmatch {

/// Knobs of the synthetic corpus. Embedding geometry per modality: a product
/// latent lives in a random `*_signal_rank`-dimensional subspace; each offer
/// adds a domain offset, offer noise (isotropic inside the signal subspace,
/// `nuisance_gain` times stronger outside it) and per-image noise, then is
/// normalized. All noise scales with `noise_scale`, so noise_scale = 0 and
/// domain_shift_scale = 0 give exact duplicates across domains.
///
/// Variant families plant hard negatives: a variant copies an earlier
/// product's brand, title and (up to `variant_spread`) its latents, and
/// differs mainly in a small low-noise "detail" image subspace, like
/// garments that differ only in cut.
struct SynthConfig {
  std::size_t n_products = 1000;
  std::size_t n_domains = 3;  // domain 0 = index, 1 = in-domain query, 2 = held-out query
  std::size_t d_img = 64;
  std::size_t d_txt = 32;
  std::size_t img_signal_rank = 12;
  std::size_t txt_signal_rank = 8;
  double domain_shift_scale = 1.0;
  double noise_scale = 0.6;
  double nuisance_gain = 3.0;
  double image_noise = 0.5;    // per-image noise relative to noise_scale
  double brand_share = 0.5;    // weight of the brand component in a product latent
  double variant_fraction = 0.3;  // share of products created as a variant of an earlier one
  double variant_spread = 0.15;   // latent distance between a variant and its parent
  std::size_t detail_rank = 4;
  double detail_scale = 0.5;      // norm of the detail component
  double detail_noise = 0.2;      // offer noise inside the detail subspace, relative to noise_scale
  double lone_negative_fraction = 0.3;  // share of training offers without a match
  double train_fraction = 0.7;          // products created before the cut-off
  double validation_fraction = 0.1;     // of the training-period products
  double query_presence = 0.8;          // chance a test product is offered by a query domain
  double query_lone_fraction = 0.2;     // share of unmatched offers in each test query set
  double index_lone_ratio = 2.0;        // unmatched index offers per matched index offer
  double images_mean = 4.5;
  double images_sd = 2.0;
  double price_log_mean = 3.6;
  double price_log_sd = 0.8;
  double price_noise = 0.05;            // log-scale jitter of an offer's price around its product
  double size_jitter = 0.2;             // chance an offer lists one size more or less
  std::size_t n_brands = 40;
  std::uint64_t seed = 7;

  void validate() const {
    if (n_products < 1) throw ConfigError("synth: n_products must be >= 1");
    if (n_domains < 2 || n_domains > 26) throw ConfigError("synth: n_domains must lie in [2, 26]");
    if (d_img < 1 || d_txt < 1) throw ConfigError("synth: embedding dimensions must be >= 1");
    if (img_signal_rank < 1 || img_signal_rank + detail_rank > d_img)
      throw ConfigError("synth: img_signal_rank + detail_rank must lie in [1, d_img]");
    if (txt_signal_rank < 1 || txt_signal_rank > d_txt)
      throw ConfigError("synth: txt_signal_rank must lie in [1, d_txt]");
    for (double s : {domain_shift_scale, noise_scale, nuisance_gain, image_noise, images_sd, price_log_sd, price_noise,
                     index_lone_ratio, variant_spread, detail_scale, detail_noise})
      if (!(s >= 0.0)) throw ConfigError("synth: scales must be non-negative");
    for (double f : {brand_share, variant_fraction, lone_negative_fraction, train_fraction, validation_fraction, query_presence,
                     query_lone_fraction, size_jitter})
      if (!(f >= 0.0 && f <= 1.0)) throw ConfigError("synth: fractions must lie in [0, 1]");
    if (lone_negative_fraction >= 1.0) throw ConfigError("synth: lone_negative_fraction must be < 1");
    if (query_lone_fraction >= 1.0) throw ConfigError("synth: query_lone_fraction must be < 1");
    if (!(images_mean > 0.0)) throw ConfigError("synth: images_mean must be positive");
    if (n_brands < 1) throw ConfigError("synth: n_brands must be >= 1");
  }
};

inline void from_json(const nlohmann::json& j, SynthConfig& c) {
#define PRODMATCH_SYNTH_FIELD(name) c.name = j.value(#name, c.name)
  PRODMATCH_SYNTH_FIELD(n_products);
  PRODMATCH_SYNTH_FIELD(n_domains);
  PRODMATCH_SYNTH_FIELD(d_img);
  PRODMATCH_SYNTH_FIELD(d_txt);
  PRODMATCH_SYNTH_FIELD(img_signal_rank);
  PRODMATCH_SYNTH_FIELD(txt_signal_rank);
  PRODMATCH_SYNTH_FIELD(domain_shift_scale);
  PRODMATCH_SYNTH_FIELD(noise_scale);
  PRODMATCH_SYNTH_FIELD(nuisance_gain);
  PRODMATCH_SYNTH_FIELD(image_noise);
  PRODMATCH_SYNTH_FIELD(brand_share);
  PRODMATCH_SYNTH_FIELD(variant_fraction);
  PRODMATCH_SYNTH_FIELD(variant_spread);
  PRODMATCH_SYNTH_FIELD(detail_rank);
  PRODMATCH_SYNTH_FIELD(detail_scale);
  PRODMATCH_SYNTH_FIELD(detail_noise);
  PRODMATCH_SYNTH_FIELD(lone_negative_fraction);
  PRODMATCH_SYNTH_FIELD(train_fraction);
  PRODMATCH_SYNTH_FIELD(validation_fraction);
  PRODMATCH_SYNTH_FIELD(query_presence);
  PRODMATCH_SYNTH_FIELD(query_lone_fraction);
  PRODMATCH_SYNTH_FIELD(index_lone_ratio);
  PRODMATCH_SYNTH_FIELD(images_mean);
  PRODMATCH_SYNTH_FIELD(images_sd);
  PRODMATCH_SYNTH_FIELD(price_log_mean);
  PRODMATCH_SYNTH_FIELD(price_log_sd);
  PRODMATCH_SYNTH_FIELD(price_noise);
  PRODMATCH_SYNTH_FIELD(size_jitter);
  PRODMATCH_SYNTH_FIELD(n_brands);
  PRODMATCH_SYNTH_FIELD(seed);
#undef PRODMATCH_SYNTH_FIELD
}

inline void to_json(nlohmann::ordered_json& j, const SynthConfig& c) {
  j = {{"n_products", c.n_products},
       {"n_domains", c.n_domains},
       {"d_img", c.d_img},
       {"d_txt", c.d_txt},
       {"img_signal_rank", c.img_signal_rank},
       {"txt_signal_rank", c.txt_signal_rank},
       {"domain_shift_scale", c.domain_shift_scale},
       {"noise_scale", c.noise_scale},
       {"nuisance_gain", c.nuisance_gain},
       {"image_noise", c.image_noise},
       {"brand_share", c.brand_share},
       {"variant_fraction", c.variant_fraction},
       {"variant_spread", c.variant_spread},
       {"detail_rank", c.detail_rank},
       {"detail_scale", c.detail_scale},
       {"detail_noise", c.detail_noise},
       {"lone_negative_fraction", c.lone_negative_fraction},
       {"train_fraction", c.train_fraction},
       {"validation_fraction", c.validation_fraction},
       {"query_presence", c.query_presence},
       {"query_lone_fraction", c.query_lone_fraction},
       {"index_lone_ratio", c.index_lone_ratio},
       {"images_mean", c.images_mean},
       {"images_sd", c.images_sd},
       {"price_log_mean", c.price_log_mean},
       {"price_log_sd", c.price_log_sd},
       {"price_noise", c.price_noise},
       {"size_jitter", c.size_jitter},
       {"n_brands", c.n_brands},
       {"seed", c.seed}};
}

/// The generated splits. Domain names are "partnerA", "partnerB", ...;
/// partnerA is the index domain everywhere, partnerB the in-domain query
/// domain, and the last domain is never seen in training.
struct SynthCorpus {
  Corpus train;
  Corpus validation;
  Corpus test_index;
  Corpus test_in_query;
  Corpus test_out_query;

  /// Every offer of every split in one corpus (within-domain ids stay unique).
  Corpus combined() const {
    std::vector<Offer> all;
    for (const Corpus* c : {&train, &validation, &test_index, &test_in_query, &test_out_query})
      all.insert(all.end(), c->offers().begin(), c->offers().end());
    return Corpus(std::move(all), CorpusRole::train);
  }
};

inline std::string synth_domain_name(std::size_t d) { return std::string("partner") + static_cast<char>('A' + d); }

namespace detail {

inline const std::array<const char*, 7> kSynthCategories = {"dresses", "shoes",   "tops",       "trousers",
                                                             "jackets", "bags",    "accessories"};
inline const std::array<const char*, 7> kSynthNouns = {"dress", "sneaker", "top", "trousers",
                                                        "jacket", "bag",   "scarf"};
inline const std::array<double, 7> kSynthCategoryWeights = {0.25, 0.2, 0.18, 0.12, 0.1, 0.08, 0.07};
inline const std::array<const char*, 6> kSubBrands = {"", "", "originals", "sport", "kids", "studio"};
inline const std::array<const char*, 12> kColours = {"black", "white", "navy",  "red",   "beige", "olive",
                                                     "grey",  "pink",  "brown", "green", "blue",  "cream"};
inline const std::array<const char*, 10> kAdjectives = {"long-sleeved", "slim",    "oversized", "cropped", "wrap",
                                                        "pleated",      "relaxed", "classic",   "knitted", "printed"};
inline const std::array<const char*, 16> kSyllables = {"ka", "lo", "mi", "ra", "ne", "vo", "ti", "sa",
                                                       "del", "mar", "zen", "bri", "cor", "fen", "lun", "tor"};

struct Modality {
  Matrix basis;                      // d x r, orthonormal columns spanning the signal subspace
  Matrix detail;                     // d x detail_rank
  Matrix complement;                 // the remaining directions
  std::vector<Vector> domain_offset;
};

/// Random orthonormal basis of R^d split into signal and complement blocks.
inline Modality make_modality(std::size_t d, std::size_t r, std::size_t rd, std::size_t n_domains, double shift,
                              Rng& rng) {
  Eigen::MatrixXd g(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < g.rows(); ++i)
    for (Eigen::Index j = 0; j < g.cols(); ++j) g(i, j) = rng.normal();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(g.rows(), g.cols());
  Modality m;
  m.basis = q.leftCols(static_cast<Eigen::Index>(r));
  m.detail = q.middleCols(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(rd));
  m.complement = q.rightCols(static_cast<Eigen::Index>(d - r - rd));
  for (std::size_t k = 0; k < n_domains; ++k) {
    Vector o(static_cast<Eigen::Index>(d));
    for (Eigen::Index i = 0; i < o.size(); ++i) o(i) = rng.normal();
    m.domain_offset.push_back(o.normalized() * shift);
  }
  return m;
}

inline Vector gaussian(std::size_t n, Rng& rng) {
  Vector v(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = rng.normal();
  return v;
}

/// Isotropic Gaussian of expected norm ~scale inside the column space of `basis`.
inline Vector subspace_noise(const Matrix& basis, double scale, Rng& rng) {
  if (basis.cols() == 0 || scale == 0.0) return Vector::Zero(basis.rows());
  return basis * gaussian(static_cast<std::size_t>(basis.cols()), rng) *
         (scale / std::sqrt(static_cast<double>(basis.cols())));
}

inline Vector unit_latent(std::size_t r, const Vector& brand, double brand_share, Rng& rng) {
  Vector own = gaussian(r, rng).normalized();
  Vector z = brand_share * brand + std::sqrt(1.0 - brand_share * brand_share) * own;
  return z.normalized();
}

struct ProductDraw {
  std::string product_id;
  std::size_t brand = 0;
  std::string sub_brand;
  std::string category;
  std::string title;
  Vector img_latent;  // in signal coordinates
  Vector txt_latent;
  Vector detail;      // in detail coordinates
  double log_price = 0.0;
  std::int64_t n_sizes = 1;
};

class Generator {
 public:
  explicit Generator(const SynthConfig& c) : c_(c), rng_(Rng::derive(c.seed, 0)) {
    c_.validate();
    img_ = make_modality(c_.d_img, c_.img_signal_rank, c_.detail_rank, c_.n_domains, c_.domain_shift_scale, rng_);
    txt_ = make_modality(c_.d_txt, c_.txt_signal_rank, 0, c_.n_domains, c_.domain_shift_scale, rng_);
    for (std::size_t b = 0; b < c_.n_brands; ++b) {
      brand_names_.push_back(make_brand_name());
      brand_img_.push_back(gaussian(c_.img_signal_rank, rng_).normalized());
      brand_txt_.push_back(gaussian(c_.txt_signal_rank, rng_).normalized());
    }
    next_id_.assign(c_.n_domains, 0);
  }

  ProductDraw product(const std::string& id) {
    ProductDraw p;
    p.product_id = id;
    p.brand = static_cast<std::size_t>(rng_.below(c_.n_brands));
    p.sub_brand = kSubBrands[rng_.below(kSubBrands.size())];
    double u = rng_.uniform();
    std::size_t cat = 0;
    while (cat + 1 < kSynthCategories.size() && u >= kSynthCategoryWeights[cat]) u -= kSynthCategoryWeights[cat++];
    p.category = kSynthCategories[cat];
    const std::string noun = kSynthNouns[cat];
    p.title = std::string(kAdjectives[rng_.below(kAdjectives.size())]) + " " + kColours[rng_.below(kColours.size())] +
              " " + noun;
    p.img_latent = unit_latent(c_.img_signal_rank, brand_img_[p.brand], c_.brand_share, rng_);
    p.txt_latent = unit_latent(c_.txt_signal_rank, brand_txt_[p.brand], c_.brand_share, rng_);
    p.detail = random_detail();
    p.log_price = rng_.normal(c_.price_log_mean, c_.price_log_sd);
    p.n_sizes = 1 + static_cast<std::int64_t>(rng_.below(8));
    return p;
  }

  ProductDraw variant(const ProductDraw& parent, const std::string& id) {
    ProductDraw p = parent;
    p.product_id = id;
    p.img_latent = nudge(parent.img_latent);
    p.txt_latent = nudge(parent.txt_latent);
    p.detail = random_detail();
    p.log_price += 0.05 * rng_.normal();
    return p;
  }

  Offer offer(const ProductDraw& p, std::size_t domain) {
    Offer o;
    o.domain = synth_domain_name(domain);
    o.offer_id = std::string(1, static_cast<char>('a' + domain)) + pad(next_id_[domain]++, 6);
    o.product_id = p.product_id;
    o.category = p.category;
    o.brand_raw = present_brand(p, domain);
    o.title_raw = present_title(p.title, domain);
    o.text_feature = normalize_text(o.brand_raw, o.title_raw);
    o.price = std::round(std::exp(p.log_price + c_.price_noise * rng_.normal()) * 100.0) / 100.0;
    if (o.price < 0.01) o.price = 0.01;
    o.n_sizes = p.n_sizes;
    if (rng_.bernoulli(c_.size_jitter)) o.n_sizes = std::max<std::int64_t>(1, o.n_sizes + (rng_.bernoulli(0.5) ? 1 : -1));

    const double s = c_.noise_scale;
    Vector img_center = img_.basis * p.img_latent + img_.domain_offset[domain] + subspace_noise(img_.basis, s, rng_) +
                        subspace_noise(img_.complement, s * c_.nuisance_gain, rng_);
    if (c_.detail_rank > 0) img_center += img_.detail * p.detail + subspace_noise(img_.detail, s * c_.detail_noise, rng_);
    const double draw = std::round(rng_.normal(c_.images_mean, c_.images_sd));
    const auto n_images = static_cast<std::size_t>(std::max(1.0, draw));
    const Matrix identity = Matrix::Identity(static_cast<Eigen::Index>(c_.d_img), static_cast<Eigen::Index>(c_.d_img));
    for (std::size_t k = 0; k < n_images; ++k) {
      Vector x = img_center + subspace_noise(identity, s * c_.image_noise, rng_);
      o.image_embeddings.push_back(to_std(unit_or_raw(x)));
    }
    Vector t = txt_.basis * p.txt_latent + txt_.domain_offset[domain] + subspace_noise(txt_.basis, s, rng_) +
               subspace_noise(txt_.complement, s * c_.nuisance_gain, rng_);
    o.text_embedding = to_std(unit_or_raw(t));
    return o;
  }

 private:
  Vector random_detail() {
    if (c_.detail_rank == 0) return Vector();
    return gaussian(c_.detail_rank, rng_).normalized() * c_.detail_scale;
  }

  Vector nudge(const Vector& latent) {
    return (latent + c_.variant_spread * gaussian(static_cast<std::size_t>(latent.size()), rng_).normalized()).normalized();
  }

  static Vector unit_or_raw(const Vector& v) {
    const double n = v.norm();
    return n > 0.0 ? Vector(v / n) : v;
  }

  static std::string pad(std::size_t n, std::size_t width) {
    std::string s = std::to_string(n);
    return std::string(s.size() < width ? width - s.size() : 0, '0') + s;
  }

  std::string make_brand_name() {
    for (;;) {
      std::string name;
      const std::size_t parts = 2 + rng_.below(2);
      for (std::size_t i = 0; i < parts; ++i) name += kSyllables[rng_.below(kSyllables.size())];
      if (name.size() >= 5 && std::find(brand_names_.begin(), brand_names_.end(), name) == brand_names_.end())
        return name;
    }
  }

  /// Domains spell brands differently: letter case, and whether the sub-brand
  /// suffix is shown at all.
  std::string present_brand(const ProductDraw& p, std::size_t domain) {
    std::string b = brand_names_[p.brand];
    if (!p.sub_brand.empty() && (domain % 2 == 0 || rng_.bernoulli(0.5))) b += " " + p.sub_brand;
    switch (domain % 3) {
      case 0: std::transform(b.begin(), b.end(), b.begin(), [](unsigned char ch) { return std::toupper(ch); }); break;
      case 1: b[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(b[0]))); break;
      default: break;
    }
    return b;
  }

  std::string present_title(const std::string& title, std::size_t domain) {
    std::string t = title;
    if (domain % 2 == 0)
      std::transform(t.begin(), t.end(), t.begin(), [](unsigned char ch) { return std::toupper(ch); });
    if (domain % 3 == 1) t += " " + std::string(kColours[rng_.below(kColours.size())]) + " detail";
    return t;
  }

  SynthConfig c_;
  Rng rng_;
  Modality img_, txt_;
  std::vector<std::string> brand_names_;
  std::vector<Vector> brand_img_, brand_txt_;
  std::vector<std::size_t> next_id_;
};

}  // namespace detail

/// Deterministic synthetic corpus. Products are generated in creation order;
/// the first train_fraction of them form the training period (offered in
/// the index and in-domain query domains), the rest the test period. A
/// seeded validation_fraction of training-period products is held out.
/// Test products are always in the index domain and, each with probability
/// query_presence, in the query domains; unmatched offers pad every split.
inline SynthCorpus generate(const SynthConfig& config) {
  config.validate();
  detail::Generator gen(config);
  Rng plan(Rng::derive(config.seed, 1));
  const std::size_t index_dom = 0, in_dom = 1, out_dom = config.n_domains - 1;
  const auto n_train_products =
      static_cast<std::size_t>(std::llround(config.train_fraction * static_cast<double>(config.n_products)));

  // Variants pick a parent created earlier in the same period and join its
  // family; validation holds out whole families.
  std::vector<detail::ProductDraw> products;
  std::vector<std::size_t> family(config.n_products);
  for (std::size_t p = 0; p < config.n_products; ++p) {
    const std::size_t period_start = p < n_train_products ? 0 : n_train_products;
    const std::string id = "p" + std::to_string(p);
    family[p] = p;
    if (p > period_start && plan.bernoulli(config.variant_fraction)) {
      const std::size_t parent = period_start + plan.below(p - period_start);
      products.push_back(gen.variant(products[parent], id));
      family[p] = family[parent];
    } else {
      products.push_back(gen.product(id));
    }
  }

  std::vector<char> is_validation(n_train_products, 0);
  {
    std::vector<std::size_t> order(n_train_products);
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    plan.shuffle(std::span<std::size_t>(order));
    const auto n_val = static_cast<std::size_t>(
        std::llround(config.validation_fraction * static_cast<double>(n_train_products)));
    std::vector<char> held(n_train_products, 0);
    std::size_t taken = 0;
    for (std::size_t i = 0; i < order.size() && taken < n_val; ++i) {
      const std::size_t f = family[order[i]];
      if (held[f]) continue;
      held[f] = 1;
      for (std::size_t p = f; p < n_train_products; ++p)
        if (family[p] == f) {
          is_validation[p] = 1;
          ++taken;
        }
    }
  }

  std::vector<Offer> train, validation, index, in_query, out_query;
  std::size_t lone_counter = 0;
  auto lone = [&](std::size_t domain) {
    return gen.offer(gen.product("lone" + std::to_string(lone_counter++)), domain);
  };
  auto add_lones = [&](std::vector<Offer>& split, std::size_t matched, double fraction, auto pick_domain) {
    const auto n = static_cast<std::size_t>(
        std::llround(fraction / (1.0 - fraction) * static_cast<double>(matched)));
    for (std::size_t i = 0; i < n; ++i) split.push_back(lone(pick_domain(i)));
  };

  for (std::size_t p = 0; p < n_train_products; ++p) {
    auto& split = is_validation[p] ? validation : train;
    split.push_back(gen.offer(products[p], index_dom));
    split.push_back(gen.offer(products[p], in_dom));
  }
  auto alternate = [&](std::size_t i) { return i % 2 == 0 ? index_dom : in_dom; };
  add_lones(train, train.size(), config.lone_negative_fraction, alternate);
  add_lones(validation, validation.size(), config.lone_negative_fraction, alternate);

  for (std::size_t p = n_train_products; p < config.n_products; ++p) {
    index.push_back(gen.offer(products[p], index_dom));
    if (plan.bernoulli(config.query_presence)) in_query.push_back(gen.offer(products[p], in_dom));
    if (plan.bernoulli(config.query_presence)) out_query.push_back(gen.offer(products[p], out_dom));
  }
  const std::size_t matched_index = index.size();
  for (std::size_t i = 0; i < static_cast<std::size_t>(std::llround(config.index_lone_ratio * static_cast<double>(matched_index))); ++i)
    index.push_back(lone(index_dom));
  add_lones(in_query, in_query.size(), config.query_lone_fraction, [&](std::size_t) { return in_dom; });
  add_lones(out_query, out_query.size(), config.query_lone_fraction, [&](std::size_t) { return out_dom; });

  const std::string a = synth_domain_name(index_dom);
  SynthCorpus out{Corpus(std::move(train), CorpusRole::train),
                  Corpus(std::move(validation), CorpusRole::validation),
                  Corpus(std::move(index), CorpusRole::test_in_domain, a, synth_domain_name(in_dom)),
                  Corpus(std::move(in_query), CorpusRole::test_in_domain, a, synth_domain_name(in_dom)),
                  Corpus(std::move(out_query), CorpusRole::test_out_domain, a, synth_domain_name(out_dom))};
  return out;
}

inline const std::array<const char*, 5> kSynthSplitNames = {"train", "validation", "test_index", "test_in_query",
                                                            "test_out_query"};

/// Writes <dir>/<split>.jsonl (+ sidecars) for every split and manifest.json.
inline nlohmann::ordered_json write_synth_corpus(const std::filesystem::path& dir, const SynthCorpus& data,
                                                 const SynthConfig& config) {
  std::filesystem::create_directories(dir);
  const std::array<const Corpus*, 5> splits = {&data.train, &data.validation, &data.test_index, &data.test_in_query,
                                               &data.test_out_query};
  nlohmann::ordered_json manifest;
  manifest["format"] = "prodmatch-synth/v1";
  nlohmann::ordered_json cfg;
  to_json(cfg, config);
  manifest["config"] = cfg;
  manifest["index_domain"] = data.test_index.index_domain();
  manifest["in_domain_query"] = data.test_in_query.query_domain();
  manifest["out_domain_query"] = data.test_out_query.query_domain();
  for (std::size_t i = 0; i < splits.size(); ++i) {
    const std::string file = std::string(kSynthSplitNames[i]) + ".jsonl";
    write_offers(dir / file, *splits[i]);
    manifest["splits"][kSynthSplitNames[i]] = {{"file", file},
                                                {"role", to_string(splits[i]->role())},
                                                {"offers", splits[i]->size()},
                                                {"matching_pairs", matching_pairs(*splits[i]).size()},
                                                {"lone_offers", lone_offers(*splits[i]).size()}};
  }
  std::ofstream os(dir / "manifest.json", std::ios::trunc);
  os << manifest.dump(2) << '\n';
  if (!os) throw Error("cannot write " + (dir / "manifest.json").string());
  return manifest;
}

}  // namespace prodmatch
