#include <doctest.h>

#include <cmath>
#include <numeric>

#include "lfm/datamodel.hpp"
#include "lfm/errors.hpp"

using namespace lfm;

namespace {

std::size_t total(const std::vector<std::size_t>& v) { return std::accumulate(v.begin(), v.end(), std::size_t{0}); }

// Extended-precision profile value before flooring.
long double reference_value(std::size_t n_max, long double gamma, std::size_t k, std::size_t classes) {
  long double e = -static_cast<long double>(k) / static_cast<long double>(classes - 1);
  return n_max * std::pow(gamma, e);
}

EmbeddingSet balanced_set(std::size_t classes, std::size_t per_class, std::size_t dim = 4) {
  EmbeddingSet set;
  set.dim = dim;
  set.features = RowMatrix::Zero(classes * per_class, dim);
  for (std::size_t c = 0; c < classes; ++c) {
    for (std::size_t i = 0; i < per_class; ++i) {
      const std::size_t r = c * per_class + i;
      set.labels.push_back(static_cast<std::uint32_t>(c));
      set.features(r, r % dim) = 1.0;
    }
  }
  return set;
}

ClassCatalog simple_catalog(std::size_t classes, std::size_t dim, std::size_t count) {
  ClassCatalog cat;
  cat.text_features = RowMatrix::Zero(classes, dim);
  for (std::size_t c = 0; c < classes; ++c) {
    cat.names.push_back("c" + std::to_string(c));
    cat.counts.push_back(count);
    cat.text_features(c, c % dim) = 1.0;
  }
  return cat;
}

}  // namespace

TEST_CASE("long-tail counts for ten classes at gamma 100") {
  auto counts = build_longtail_counts({5000, 100.0, 10});
  std::vector<std::size_t> expected{5000, 2997, 1796, 1077, 645, 387, 232, 139, 83, 50};
  CHECK(counts == expected);
  CHECK(total(counts) == 12406);
}

TEST_CASE("long-tail totals for the CIFAR-LT profiles") {
  CHECK(total(build_longtail_counts({5000, 10.0, 10})) == 20431);
  CHECK(total(build_longtail_counts({5000, 50.0, 10})) == 13996);
  CHECK(total(build_longtail_counts({5000, 100.0, 10})) == 12406);
  CHECK(total(build_longtail_counts({500, 10.0, 100})) == 19573);
  CHECK(total(build_longtail_counts({500, 50.0, 100})) == 12608);
  CHECK(total(build_longtail_counts({500, 100.0, 100})) == 10847);
}

TEST_CASE("long-tail counts agree with an extended-precision evaluation") {
  for (double gamma : {1.0, 2.5, 10.0, 37.0, 100.0, 256.0}) {
    for (std::size_t classes : {2u, 5u, 10u, 37u, 100u}) {
      auto counts = build_longtail_counts({1000, gamma, classes});
      for (std::size_t k = 0; k < classes; ++k) {
        const long double v = reference_value(1000, gamma, k, classes);
        const long double nearest = std::round(v);
        if (std::abs(v - nearest) < 1e-9L) continue;  // floor is ambiguous at working precision
        CHECK(counts[k] == static_cast<std::size_t>(std::floor(v)));
      }
    }
  }
}

TEST_CASE("long-tail counts are balanced at gamma 1, nonincreasing, and span the ratio") {
  auto flat = build_longtail_counts({5000, 1.0, 10});
  CHECK(flat == std::vector<std::size_t>(10, 5000));

  for (double gamma : {10.0, 50.0, 100.0}) {
    auto counts = build_longtail_counts({500, gamma, 100});
    CHECK(counts.front() == 500);
    for (std::size_t k = 1; k < counts.size(); ++k) CHECK(counts[k] <= counts[k - 1]);
    const double ratio = static_cast<double>(counts.front()) / static_cast<double>(counts.back());
    CHECK(ratio == doctest::Approx(gamma).epsilon(0.02));
  }
}

TEST_CASE("long-tail spec validation") {
  CHECK_THROWS_AS(build_longtail_counts({100, 0.5, 10}), ConfigError);
  CHECK_THROWS_AS(build_longtail_counts({100, 10.0, 1}), ConfigError);
  CHECK_THROWS_AS(build_longtail_counts({5, 10.0, 4}), ConfigError);
}

TEST_CASE("subset draws exact per-class counts") {
  auto data = balanced_set(10, 5000);
  auto catalog = simple_catalog(10, 4, 5000);
  auto counts = build_longtail_counts({5000, 100.0, 10});
  auto [subset, cat] = subset_longtail(data, catalog, counts, 7);
  CHECK(subset.size() == 12406);
  CHECK(subset.class_counts(10) == counts);
  CHECK(cat.counts == counts);
  CHECK(cat.names == catalog.names);
}

TEST_CASE("subset with full availability is the identity") {
  auto data = balanced_set(3, 20);
  auto catalog = simple_catalog(3, 4, 20);
  auto [subset, cat] = subset_longtail(data, catalog, {20, 20, 20}, 3);
  CHECK(subset.labels == data.labels);
  CHECK(subset.features == data.features);
}

TEST_CASE("subset is deterministic under its seed") {
  EmbeddingSet data;
  data.dim = 2;
  data.features = RowMatrix(300, 2);
  for (int r = 0; r < 300; ++r) {
    const double a = 0.01 * r;
    data.features.row(r) << std::cos(a), std::sin(a);
    data.labels.push_back(static_cast<std::uint32_t>(r % 3));
  }
  auto catalog = simple_catalog(3, 2, 100);
  auto a = subset_longtail(data, catalog, {50, 20, 5}, 11).first;
  auto b = subset_longtail(data, catalog, {50, 20, 5}, 11).first;
  auto c = subset_longtail(data, catalog, {50, 20, 5}, 12).first;
  CHECK(a.features == b.features);
  CHECK(a.labels == b.labels);
  CHECK(a.features != c.features);
}

TEST_CASE("subset reports the class that is short") {
  auto data = balanced_set(3, 10);
  auto catalog = simple_catalog(3, 4, 10);
  try {
    subset_longtail(data, catalog, {10, 11, 1}, 0);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("c1") != std::string::npos);
  }
}

TEST_CASE("synthetic zero-noise limit") {
  SyntheticSpec spec;
  spec.num_classes = 6;
  spec.dim = 8;
  spec.pair_groups = {{0, 1}};
  spec.intra_noise = 0.0;
  spec.train_per_class = 5;
  spec.val_per_class = 2;
  auto synth = generate_synthetic(spec);
  const auto& text = synth.catalog.text_features;
  CHECK(text.row(0).dot(text.row(1)) >= 0.8);
  for (std::size_t r = 0; r < synth.train.size(); ++r) {
    Vector diff = synth.train.features.row(r) - text.row(synth.train.labels[r]);
    CHECK(diff.norm() < 1e-12);
  }
}

TEST_CASE("synthetic outputs are unit-norm and reproducible") {
  SyntheticSpec spec;
  spec.pair_groups = {{0, 19}, {3, 4}};
  spec.modality_gap = 0.2;
  spec.train_per_class = 40;
  spec.val_per_class = 10;
  spec.seed = 99;
  auto a = generate_synthetic(spec);
  auto b = generate_synthetic(spec);
  for (const RowMatrix* m : {&a.train.features, &a.val.features, &a.catalog.text_features}) {
    for (Eigen::Index r = 0; r < m->rows(); ++r) CHECK(std::abs(m->row(r).norm() - 1.0) < 1e-6);
  }
  CHECK(a.train.features == b.train.features);
  CHECK(a.val.features == b.val.features);
  CHECK(a.catalog.text_features == b.catalog.text_features);
  CHECK(a.train.labels == b.train.labels);
  CHECK(a.val.split == SplitTag::val);
  CHECK(a.catalog.counts == std::vector<std::size_t>(20, 40));
}

TEST_CASE("paired prototypes are closer than unpaired ones") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    SyntheticSpec spec;
    spec.pair_groups = {{0, 19}, {1, 18}};
    spec.train_per_class = 1;
    spec.val_per_class = 1;
    spec.seed = seed;
    const auto& t = generate_synthetic(spec).catalog.text_features;
    const double paired = t.row(0).dot(t.row(19));
    CHECK(paired == doctest::Approx(0.85).epsilon(1e-9));
    CHECK(paired > t.row(0).dot(t.row(18)));
    CHECK(paired > t.row(0).dot(t.row(5)));
  }
}

TEST_CASE("synthetic spec validation") {
  SyntheticSpec spec;
  spec.pair_groups = {{0, 20}};
  CHECK_THROWS_AS(generate_synthetic(spec), ConfigError);
  spec.pair_groups = {{2, 2}};
  CHECK_THROWS_AS(generate_synthetic(spec), ConfigError);
  spec.pair_groups = {};
  spec.pair_similarity = 1.0;
  CHECK_THROWS_AS(generate_synthetic(spec), ConfigError);
}

TEST_CASE("catalog helpers") {
  ClassCatalog cat = simple_catalog(4, 4, 1);
  cat.counts = {5, 9, 5, 1};
  CHECK(cat.sorted_by_count() == std::vector<std::size_t>{1, 0, 2, 3});
  CHECK(cat.prompt(2) == "a photo of a c2");
  cat.validate();
  cat.counts[3] = 0;
  CHECK_THROWS(cat.validate());
}

TEST_CASE("normalized rejects degenerate rows") {
  CHECK_THROWS_AS(normalized(Vector::Zero(3)), DataError);
  Vector v(2);
  v << 3.0, 4.0;
  CHECK(normalized(v)(1) == doctest::Approx(0.8));
}

TEST_CASE("embedding validation") {
  auto data = balanced_set(2, 3);
  data.validate(2);
  CHECK_THROWS_AS(data.validate(1), DataError);
  data.features(0, 0) = 2.0;
  CHECK_THROWS_AS(data.validate(2), DataError);
}
