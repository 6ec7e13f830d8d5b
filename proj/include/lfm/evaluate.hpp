#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lfm/datamodel.hpp"
#include "lfm/model.hpp"

namespace lfm {

enum class ShotGroup { many = 0, medium = 1, few = 2 };

std::string to_string(ShotGroup group);

/// Groups classes by training count: many if n > many_above, few if n < few_below,
/// medium otherwise (both bounds inclusive).
struct ShotSplit {
  std::vector<ShotGroup> category;
  std::size_t many_above = 100;
  std::size_t few_below = 20;
};

ShotSplit shot_split(const std::vector<std::size_t>& counts, std::size_t many_above = 100,
                     std::size_t few_below = 20);

struct GroupTally {
  std::size_t correct = 0;
  std::size_t total = 0;
  /// Percent; empty when the group has no validation rows.
  std::optional<double> accuracy() const;
};

struct EvalReport {
  std::array<GroupTally, 3> groups;  ///< indexed by ShotGroup
  GroupTally all;
  std::vector<std::optional<double>> per_class;  ///< percent
  /// rows = true class, columns = predicted class.
  std::vector<std::vector<std::size_t>> confusion;

  std::optional<double> many() const { return groups[0].accuracy(); }
  std::optional<double> medium() const { return groups[1].accuracy(); }
  std::optional<double> few() const { return groups[2].accuracy(); }
  std::optional<double> overall() const { return all.accuracy(); }

  /// Group totals recombine to the overall tally and confusion rows match per-class totals.
  bool accounting_holds() const;
};

/// Builds a report from explicit predictions (one per validation row).
EvalReport tally(const std::vector<std::uint32_t>& truth, const std::vector<std::size_t>& predicted,
                 const ShotSplit& split);

EvalReport evaluate(const TrainedHead& head, const EmbeddingSet& val, const ClassCatalog& catalog,
                    const ShotSplit& split);

/// {many, med, few, all, per_class, confusion}; percentages rounded to 0.1, empty groups null.
nlohmann::json report_to_json(const EvalReport& report);

/// Confusion matrix as CSV, header row of predicted class names.
std::string confusion_csv(const EvalReport& report, const ClassCatalog& catalog);

}  // namespace lfm
