#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <sstream>

#include "lfm/errors.hpp"
#include "lfm/io.hpp"

using namespace lfm;
namespace fs = std::filesystem;

namespace {

const fs::path kFixtures = LFM_FIXTURE_DIR;

EmbeddingSet small_set() {
  EmbeddingSet set;
  set.dim = 3;
  set.features = RowMatrix(4, 3);
  set.features << 1, 0, 0, 0, 1, 0, 0, 0.6, 0.8, -0.6, 0, 0.8;
  set.labels = {0, 1, 2, 1};
  return set;
}

std::string serialize(const EmbeddingSet& set) {
  std::ostringstream out(std::ios::binary);
  io::write_embeddings(out, set);
  return out.str();
}

EmbeddingSet parse(const std::string& bytes) {
  std::istringstream in(bytes, std::ios::binary);
  return io::read_embeddings(in);
}

}  // namespace

TEST_CASE("LFME round trip") {
  auto set = small_set();
  const std::string bytes = serialize(set);
  CHECK(bytes.size() == 18 + 4 * (4 + 3 * 4));
  CHECK(bytes.substr(0, 4) == "LFME");
  auto back = parse(bytes);
  CHECK(back.dim == 3);
  CHECK(back.labels == set.labels);
  CHECK((back.features - set.features).cwiseAbs().maxCoeff() < 1e-7);
}

TEST_CASE("LFME reader rejects malformed input") {
  const std::string good = serialize(small_set());

  std::string bad_magic = good;
  bad_magic[0] = 'X';
  CHECK_THROWS_AS(parse(bad_magic), DataError);

  std::string bad_version = good;
  bad_version[4] = 9;
  CHECK_THROWS_AS(parse(bad_version), DataError);

  CHECK_THROWS_AS(parse(good.substr(0, good.size() - 3)), DataError);
  CHECK_THROWS_AS(parse(good + "x"), DataError);
  CHECK_THROWS_AS(parse(""), DataError);

  // Scale one stored float so its row is far from unit norm.
  std::string bad_norm = good;
  float f = 2.0f;
  std::memcpy(&bad_norm[18 + 4], &f, sizeof f);
  CHECK_THROWS_AS(parse(bad_norm), DataError);
}

TEST_CASE("LFME reader loads the independently written golden file") {
  auto set = io::read_embeddings(kFixtures / "golden.lfme", SplitTag::val);
  auto expected = io::read_json(kFixtures / "golden_expected.json");
  REQUIRE(set.size() == 100);
  CHECK(set.dim == 8);
  CHECK(set.split == SplitTag::val);
  CHECK(set.labels == expected["labels"].get<std::vector<std::uint32_t>>());
  for (std::size_t r = 0; r < 100; ++r) {
    auto row = expected["features"][r].get<std::vector<double>>();
    for (std::size_t c = 0; c < 8; ++c) CHECK(set.features(r, c) == doctest::Approx(row[c]).epsilon(1e-6));
    CHECK(std::abs(set.features.row(r).norm() - 1.0) < 1e-12);
  }
}

TEST_CASE("catalog JSON golden file and round trip") {
  auto cat = io::read_catalog(kFixtures / "golden_catalog.json");
  CHECK(cat.num_classes() == 5);
  CHECK(cat.dim() == 8);
  CHECK(cat.names[3] == "class_3");
  CHECK(cat.counts == std::vector<std::size_t>(5, 20));
  CHECK(cat.prompt(0) == "a photo of a class_0");

  auto back = io::catalog_from_json(io::catalog_to_json(cat));
  CHECK(back.names == cat.names);
  CHECK(back.counts == cat.counts);
  CHECK(back.prompt_template == cat.prompt_template);
  CHECK(back.text_features == cat.text_features);
}

TEST_CASE("catalog JSON validation") {
  auto doc = io::read_json(kFixtures / "golden_catalog.json");
  auto missing = doc;
  missing.erase("counts");
  CHECK_THROWS(io::catalog_from_json(missing));

  auto zero = doc;
  zero["counts"][0] = 0;
  CHECK_THROWS(io::catalog_from_json(zero));

  auto ragged = doc;
  ragged["text_features"][1].erase(0);
  CHECK_THROWS(io::catalog_from_json(ragged));

  auto off_norm = doc;
  off_norm["text_features"][2][0] = 3.0;
  CHECK_THROWS(io::catalog_from_json(off_norm));
}
