#include "lfm/io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include "lfm/errors.hpp"

namespace lfm::io {

namespace {

static_assert(std::numeric_limits<float>::is_iec559, "LFME stores IEEE-754 binary32");

template <typename T>
void put_le(std::ostream& out, T value) {
  std::array<unsigned char, sizeof(T)> bytes{};
  std::memcpy(bytes.data(), &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    std::reverse(bytes.begin(), bytes.end());
  }
  out.write(reinterpret_cast<const char*>(bytes.data()), sizeof(T));
}

template <typename T>
T get_le(std::istream& in) {
  std::array<unsigned char, sizeof(T)> bytes{};
  if (!in.read(reinterpret_cast<char*>(bytes.data()), sizeof(T))) {
    throw DataError("embedding file is truncated");
  }
  if constexpr (std::endian::native == std::endian::big) {
    std::reverse(bytes.begin(), bytes.end());
  }
  T value;
  std::memcpy(&value, bytes.data(), sizeof(T));
  return value;
}

}  // namespace

void write_embeddings(std::ostream& out, const EmbeddingSet& set) {
  out.write(kEmbeddingMagic, 4);
  put_le<std::uint16_t>(out, kEmbeddingVersion);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(set.dim));
  put_le<std::uint64_t>(out, static_cast<std::uint64_t>(set.size()));
  for (std::size_t i = 0; i < set.size(); ++i) {
    put_le<std::uint32_t>(out, set.labels[i]);
    for (std::size_t j = 0; j < set.dim; ++j) {
      put_le<float>(out, static_cast<float>(set.features(static_cast<Eigen::Index>(i),
                                                         static_cast<Eigen::Index>(j))));
    }
  }
  if (!out) throw DataError("failed writing embedding stream");
}

void write_embeddings(const std::filesystem::path& path, const EmbeddingSet& set) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  write_embeddings(out, set);
}

EmbeddingSet read_embeddings(std::istream& in, SplitTag split) {
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kEmbeddingMagic, 4) != 0) {
    throw DataError("not an LFME embedding file (bad magic)");
  }
  auto version = get_le<std::uint16_t>(in);
  if (version != kEmbeddingVersion) {
    throw DataError("unsupported LFME version " + std::to_string(version));
  }
  auto dim = get_le<std::uint32_t>(in);
  auto count = get_le<std::uint64_t>(in);
  if (dim == 0) throw DataError("LFME file declares dimension 0");

  EmbeddingSet set;
  set.dim = dim;
  set.split = split;
  set.labels.reserve(count);
  set.features.resize(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(dim));
  for (std::uint64_t i = 0; i < count; ++i) {
    set.labels.push_back(get_le<std::uint32_t>(in));
    auto row = set.features.row(static_cast<Eigen::Index>(i));
    for (std::uint32_t j = 0; j < dim; ++j) row(j) = get_le<float>(in);
    double norm = row.norm();
    if (!std::isfinite(norm) || std::abs(norm - 1.0) > 1e-4) {
      std::ostringstream msg;
      msg << "LFME record " << i << " is not unit-norm (norm " << norm << ")";
      throw DataError(msg.str());
    }
    row /= norm;
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw DataError("trailing bytes after the last LFME record");
  }
  return set;
}

EmbeddingSet read_embeddings(const std::filesystem::path& path, SplitTag split) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return read_embeddings(in, split);
}

nlohmann::json catalog_to_json(const ClassCatalog& catalog) {
  nlohmann::json features = nlohmann::json::array();
  for (Eigen::Index k = 0; k < catalog.text_features.rows(); ++k) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < catalog.text_features.cols(); ++j) {
      row.push_back(catalog.text_features(k, j));
    }
    features.push_back(std::move(row));
  }
  return {{"names", catalog.names},
          {"counts", catalog.counts},
          {"prompt_template", catalog.prompt_template},
          {"text_features", std::move(features)}};
}

ClassCatalog catalog_from_json(const nlohmann::json& doc) {
  ClassCatalog catalog;
  try {
    catalog.names = doc.at("names").get<std::vector<std::string>>();
    catalog.counts = doc.at("counts").get<std::vector<std::size_t>>();
    catalog.prompt_template = doc.value("prompt_template", std::string(kDefaultPromptTemplate));
    const auto& rows = doc.at("text_features");
    if (!rows.is_array() || rows.empty()) throw DataError("catalog text_features is empty");
    const auto dim = rows.front().size();
    catalog.text_features.resize(static_cast<Eigen::Index>(rows.size()),
                                 static_cast<Eigen::Index>(dim));
    for (std::size_t k = 0; k < rows.size(); ++k) {
      if (rows[k].size() != dim) throw DataError("catalog text_features rows differ in length");
      for (std::size_t j = 0; j < dim; ++j) {
        catalog.text_features(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)) =
            rows[k][j].get<double>();
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed catalog: ") + e.what());
  }
  // Stored features may be float32-rounded; restore exact unit norm before validating.
  for (Eigen::Index k = 0; k < catalog.text_features.rows(); ++k) {
    double norm = catalog.text_features.row(k).norm();
    if (std::isfinite(norm) && std::abs(norm - 1.0) <= 1e-4) catalog.text_features.row(k) /= norm;
  }
  catalog.validate();
  return catalog;
}

nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void write_json(const std::filesystem::path& path, const nlohmann::json& doc) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  out << doc.dump(2) << '\n';
}

void write_catalog(const std::filesystem::path& path, const ClassCatalog& catalog) {
  write_json(path, catalog_to_json(catalog));
}

ClassCatalog read_catalog(const std::filesystem::path& path) {
  return catalog_from_json(read_json(path));
}

}  // namespace lfm::io
