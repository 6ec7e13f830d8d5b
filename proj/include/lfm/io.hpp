#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>

#include <nlohmann/json.hpp>

#include "lfm/datamodel.hpp"

namespace lfm::io {

/// LFME embedding file, little-endian:
///   "LFME" | u16 version=1 | u32 dim | u64 count | count x ([u32 label][dim x f32])
inline constexpr char kEmbeddingMagic[4] = {'L', 'F', 'M', 'E'};
inline constexpr std::uint16_t kEmbeddingVersion = 1;

void write_embeddings(std::ostream& out, const EmbeddingSet& set);
void write_embeddings(const std::filesystem::path& path, const EmbeddingSet& set);

/// Rows are re-normalized after the f32 round trip. A row whose stored norm is
/// off by more than 1e-4 is rejected as corrupt.
EmbeddingSet read_embeddings(std::istream& in, SplitTag split = SplitTag::train);
EmbeddingSet read_embeddings(const std::filesystem::path& path, SplitTag split = SplitTag::train);

nlohmann::json catalog_to_json(const ClassCatalog& catalog);
ClassCatalog catalog_from_json(const nlohmann::json& doc);

void write_catalog(const std::filesystem::path& path, const ClassCatalog& catalog);
ClassCatalog read_catalog(const std::filesystem::path& path);

nlohmann::json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const nlohmann::json& doc);

}  // namespace lfm::io
