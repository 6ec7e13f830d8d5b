#include <doctest.h>

#include <cmath>
#include <numeric>

#include "lfm/errors.hpp"
#include "lfm/rng.hpp"
#include "lfm/textguide.hpp"

using namespace lfm;

namespace {

// One-dimensional rows are enough for the sampler; only labels matter.
EmbeddingSet labeled_rows(const std::vector<std::size_t>& counts) {
  EmbeddingSet set;
  set.dim = 1;
  std::size_t n = std::accumulate(counts.begin(), counts.end(), std::size_t{0});
  set.features = RowMatrix::Ones(n, 1);
  for (std::size_t k = 0; k < counts.size(); ++k) set.labels.insert(set.labels.end(), counts[k], k);
  return set;
}

RowMatrix toy_similarity() {
  RowMatrix s(3, 3);
  s << 1.0, 0.8, 0.2, 0.8, 1.0, 0.5, 0.2, 0.5, 1.0;
  return s;
}

RowMatrix random_similarity(std::size_t c, Rng& rng) {
  RowMatrix s(c, c);
  for (std::size_t i = 0; i < c; ++i) {
    for (std::size_t j = 0; j <= i; ++j) s(i, j) = s(j, i) = (i == j) ? 1.0 : 2.0 * rng.uniform() - 1.0;
  }
  return s;
}

}  // namespace

TEST_CASE("two classes always pair with each other") {
  RowMatrix s(2, 2);
  s << 1.0, -0.3, -0.3, 1.0;
  auto model = build_sampling_model(s, {7, 3}, 0.05);
  CHECK(model.p_cond(0, 0) == 0.0);
  CHECK(model.p_cond(0, 1) == 1.0);
  CHECK(model.p_cond(1, 0) == 1.0);
  CHECK(model.p_cond(1, 1) == 0.0);
  CHECK(model.p_first[0] == doctest::Approx(0.7));
}

TEST_CASE("identical text features give uniform rows") {
  ClassCatalog cat;
  cat.text_features = RowMatrix::Zero(5, 3);
  cat.text_features.col(1).setOnes();
  for (int k = 0; k < 5; ++k) {
    cat.names.push_back("k" + std::to_string(k));
    cat.counts.push_back(10);
  }
  auto model = build_sampling_model(cat, 0.05);
  for (int i = 0; i < 5; ++i) {
    for (int j = 0; j < 5; ++j) CHECK(model.p_cond(i, j) == doctest::Approx(i == j ? 0.0 : 0.25));
  }
}

TEST_CASE("three-class temperature softmax value") {
  auto model = build_sampling_model(toy_similarity(), {50, 30, 20}, 0.05);
  const long double expected = 1.0L / (1.0L + std::exp(-12.0L));
  CHECK(std::abs(model.p_cond(0, 1) - static_cast<double>(expected)) < 1e-15);
  CHECK(model.p_cond(0, 1) == doctest::Approx(0.99999386).epsilon(1e-8));
}

TEST_CASE("rows are stochastic with zero diagonal") {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t c = 2 + rng.index(30);
    std::vector<std::size_t> counts(c);
    for (auto& n : counts) n = 1 + rng.index(1000);
    const double tau = 0.01 + rng.uniform();
    auto model = build_sampling_model(random_similarity(c, rng), counts, tau);
    for (std::size_t i = 0; i < c; ++i) {
      CHECK(model.p_cond(i, i) == 0.0);
      CHECK(model.p_cond.row(i).sum() == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(model.p_cond.row(i).minCoeff() >= 0.0);
    }
    CHECK(std::accumulate(model.p_first.begin(), model.p_first.end(), 0.0) == doctest::Approx(1.0));
  }
}

TEST_CASE("very large temperature flattens every row") {
  Rng rng(6);
  const std::size_t c = 12;
  auto model = build_sampling_model(random_similarity(c, rng), std::vector<std::size_t>(c, 4), 1e6);
  for (std::size_t i = 0; i < c; ++i) {
    for (std::size_t j = 0; j < c; ++j) {
      if (i != j) CHECK(std::abs(model.p_cond(i, j) - 1.0 / (c - 1)) < 1e-4);
    }
  }
}

TEST_CASE("higher similarity means higher pairing probability") {
  Rng rng(8);
  const std::size_t c = 6;
  RowMatrix s = random_similarity(c, rng);
  auto before = build_sampling_model(s, std::vector<std::size_t>(c, 1), 0.2);
  s(2, 4) = s(4, 2) = s(2, 4) + 0.3;
  auto after = build_sampling_model(s, std::vector<std::size_t>(c, 1), 0.2);
  CHECK(after.p_cond(2, 4) > before.p_cond(2, 4));
  CHECK(after.p_cond(2, 1) < before.p_cond(2, 1));
}

TEST_CASE("temperature must be positive") {
  CHECK_THROWS_AS(build_sampling_model(toy_similarity(), {1, 1, 1}, 0.0), ConfigError);
}

TEST_CASE("degenerate row forces the partner class") {
  LocalSamplingModel model;
  model.p_first = {0.25, 0.25, 0.25, 0.25};
  model.p_cond = RowMatrix::Constant(4, 4, 1.0 / 3.0);
  model.p_cond.diagonal().setZero();
  model.p_cond.row(0) << 0.0, 1.0, 0.0, 0.0;
  auto data = labeled_rows({5, 5, 5, 5});
  PairStream stream(model, data, 17);
  std::size_t from_zero = 0;
  for (int i = 0; i < 2000; ++i) {
    auto pair = stream.next();
    CHECK(pair.second.label != pair.first.label);
    CHECK(data.labels[pair.second.row] == pair.second.label);
    if (pair.first.label == 0) {
      ++from_zero;
      CHECK(pair.second.label == 1);
    }
  }
  CHECK(from_zero == 500);  // 100 epochs of 20 rows, 5 of them class 0
}

TEST_CASE("first members cover each epoch exactly once") {
  auto model = build_sampling_model(toy_similarity(), {6, 3, 2}, 0.5);
  auto data = labeled_rows({6, 3, 2});
  PairStream stream(model, data, 1);
  for (int epoch = 0; epoch < 3; ++epoch) {
    std::vector<int> seen(data.size(), 0);
    for (std::size_t i = 0; i < data.size(); ++i) ++seen[stream.next().first.row];
    CHECK(std::all_of(seen.begin(), seen.end(), [](int v) { return v == 1; }));
  }
}

TEST_CASE("pair streams are deterministic under their seed") {
  auto model = build_sampling_model(toy_similarity(), {50, 30, 20}, 0.3);
  auto data = labeled_rows({50, 30, 20});
  PairStream a(model, data, 42), b(model, data, 42), c(model, data, 43);
  bool differs = false;
  for (int i = 0; i < 1000; ++i) {
    auto pa = a.next(), pb = b.next(), pc = c.next();
    CHECK(pa.first.row == pb.first.row);
    CHECK(pa.second.row == pb.second.row);
    differs |= pa.first.row != pc.first.row || pa.second.row != pc.second.row;
  }
  CHECK(differs);
}

TEST_CASE("local sampling needs every class populated") {
  auto model = build_sampling_model(toy_similarity(), {5, 5, 5}, 0.3);
  auto data = labeled_rows({5, 0, 5});
  CHECK_THROWS_AS(PairStream(model, data, 0), DataError);
  CHECK_NOTHROW(PairStream(model, data, 0, PairMode::uniform));
}

TEST_CASE("conditional frequencies of the three-class model") {
  auto model = build_sampling_model(toy_similarity(), {50, 30, 20}, 0.05);
  auto data = labeled_rows({50, 30, 20});
  PairStream stream(model, data, 2024);
  constexpr std::size_t kDraws = 1000000;
  RowMatrix hits = RowMatrix::Zero(3, 3);
  Vector firsts = Vector::Zero(3);
  for (std::size_t i = 0; i < kDraws; ++i) {
    auto p = stream.next();
    hits(p.first.label, p.second.label) += 1;
    firsts(p.first.label) += 1;
  }
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      const double p = model.p_cond(i, j);
      const double n = firsts(i);
      const double sigma = std::sqrt(n * p * (1 - p));
      CHECK(std::abs(hits(i, j) - n * p) <= 3 * sigma + 1e-9);
    }
  }
}

TEST_CASE("effective distribution matches pair membership frequencies") {
  auto model = build_sampling_model(toy_similarity(), {50, 30, 20}, 0.05);
  auto data = labeled_rows({50, 30, 20});
  auto expected = effective_class_distribution(model);
  CHECK(std::accumulate(expected.begin(), expected.end(), 0.0) == doctest::Approx(2.0));

  PairStream stream(model, data, 99);
  constexpr std::size_t kDraws = 1000000;
  std::vector<double> member(3, 0.0);
  for (std::size_t i = 0; i < kDraws; ++i) {
    auto p = stream.next();
    member[p.first.label] += 1;
    member[p.second.label] += 1;
  }
  for (int y = 0; y < 3; ++y) {
    const double sigma = std::sqrt(kDraws * expected[y] * (1 - expected[y]));
    CHECK(std::abs(member[y] - kDraws * expected[y]) <= 3 * sigma);
  }
}

TEST_CASE("effective distribution closed forms") {
  RowMatrix flat = RowMatrix::Zero(4, 4);
  auto balanced = build_sampling_model(flat, {10, 10, 10, 10}, 1.0);
  auto exact = effective_class_distribution(balanced);
  auto indep = effective_class_distribution_independent(balanced);
  for (int k = 0; k < 4; ++k) {
    CHECK(exact[k] == doctest::Approx(0.5));
    CHECK(indep[k] == doctest::Approx(0.25 + 0.75 * 0.25));
    CHECK(indep[k] == doctest::Approx(indep[0]));
  }
  CHECK(effective_imbalance_factor(balanced) == doctest::Approx(1.0));

  // Two classes: each pair contains both, so membership is certain.
  RowMatrix s2 = RowMatrix::Identity(2, 2);
  auto two = build_sampling_model(s2, {100, 1}, 0.05);
  const double p1 = 100.0 / 101.0, p2 = 1.0 / 101.0;
  auto e2 = effective_class_distribution(two);
  CHECK(e2[0] == doctest::Approx(p1 + p2));
  CHECK(e2[1] == doctest::Approx(p2 + p1));
  auto i2 = effective_class_distribution_independent(two);
  CHECK(i2[0] == doctest::Approx(p1 + (1 - p1) * p2));
  CHECK(i2[1] == doctest::Approx(p2 + (1 - p2) * p1));
  CHECK(effective_imbalance_factor(two) == doctest::Approx(1.0));
  CHECK(imbalance_factor(i2) == doctest::Approx(1.0));
}

TEST_CASE("exact effective distribution dominates the independent form") {
  Rng rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t c = 3 + rng.index(10);
    std::vector<std::size_t> counts(c);
    for (auto& n : counts) n = 1 + rng.index(500);
    auto model = build_sampling_model(random_similarity(c, rng), counts, 0.1);
    auto exact = effective_class_distribution(model);
    auto indep = effective_class_distribution_independent(model);
    for (std::size_t k = 0; k < c; ++k) {
      CHECK(exact[k] >= indep[k] - 1e-15);
      CHECK(exact[k] >= model.p_first[k]);
      CHECK(exact[k] <= 1.0 + 1e-12);
    }
  }
}

TEST_CASE("categorical sampling skips empty cells") {
  std::vector<double> probs{0.0, 0.5, 0.0, 0.5, 0.0};
  auto cdf = cumulative(probs.data(), probs.size());
  CHECK(sample_categorical(cdf, 0.0) == 1);
  CHECK(sample_categorical(cdf, 0.4999) == 1);
  CHECK(sample_categorical(cdf, 0.5) == 3);
  CHECK(sample_categorical(cdf, 0.9999999) == 3);
}
