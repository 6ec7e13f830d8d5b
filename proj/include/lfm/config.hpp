#pragma once

#include <initializer_list>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "lfm/datamodel.hpp"
#include "lfm/model.hpp"

namespace lfm::config {

using nlohmann::json;

/// Throws ConfigError if `obj` is not an object or carries a key outside `allowed`.
void check_keys(const json& obj, std::initializer_list<std::string_view> allowed,
                const std::string& where);

/// Integer JSON value >= 0, whether stored signed or unsigned.
bool is_non_negative_integer(const json& value);

/// Synthetic section; the seed is not part of it (derived from the run seed).
SyntheticSpec synthetic_from_json(const json& obj);
json to_json(const SyntheticSpec& spec);

/// Long-tail section {n_max, gamma}; num_classes comes from the data.
LongTailSpec longtail_from_json(const json& obj, std::size_t num_classes, std::size_t default_n_max);
json to_json(const LongTailSpec& spec);

TrainConfig train_from_json(const json& obj);
json to_json(const TrainConfig& config);

/// {dim, logit_scale, W, encoder_proj, config, history}; matrices as flat row-major arrays.
json head_to_json(const TrainedHead& head);
TrainedHead head_from_json(const json& doc);

}  // namespace lfm::config
