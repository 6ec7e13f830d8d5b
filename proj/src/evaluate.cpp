#include "lfm/evaluate.hpp"

#include <cmath>
#include <sstream>

#include "lfm/errors.hpp"

namespace lfm {

std::string to_string(ShotGroup group) {
  switch (group) {
    case ShotGroup::many: return "many";
    case ShotGroup::medium: return "med";
    case ShotGroup::few: return "few";
  }
  return "many";
}

ShotSplit shot_split(const std::vector<std::size_t>& counts, std::size_t many_above,
                     std::size_t few_below) {
  ShotSplit split;
  split.many_above = many_above;
  split.few_below = few_below;
  split.category.reserve(counts.size());
  for (auto n : counts) {
    if (n > many_above) {
      split.category.push_back(ShotGroup::many);
    } else if (n < few_below) {
      split.category.push_back(ShotGroup::few);
    } else {
      split.category.push_back(ShotGroup::medium);
    }
  }
  return split;
}

std::optional<double> GroupTally::accuracy() const {
  if (total == 0) return std::nullopt;
  return 100.0 * static_cast<double>(correct) / static_cast<double>(total);
}

bool EvalReport::accounting_holds() const {
  std::size_t correct = 0;
  std::size_t total = 0;
  for (const auto& g : groups) {
    correct += g.correct;
    total += g.total;
  }
  if (correct != all.correct || total != all.total) return false;
  std::size_t rows = 0;
  std::size_t diagonal = 0;
  for (std::size_t k = 0; k < confusion.size(); ++k) {
    for (std::size_t j = 0; j < confusion[k].size(); ++j) rows += confusion[k][j];
    diagonal += confusion[k][k];
  }
  return rows == all.total && diagonal == all.correct;
}

EvalReport tally(const std::vector<std::uint32_t>& truth, const std::vector<std::size_t>& predicted,
                 const ShotSplit& split) {
  if (truth.size() != predicted.size()) throw DataError("prediction count differs from label count");
  const auto c = split.category.size();
  EvalReport report;
  report.confusion.assign(c, std::vector<std::size_t>(c, 0));
  std::vector<GroupTally> per_class(c);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const auto y = truth[i];
    if (y >= c || predicted[i] >= c) throw DataError("label outside the catalog in evaluation");
    const bool hit = predicted[i] == y;
    ++report.confusion[y][predicted[i]];
    auto& group = report.groups[static_cast<std::size_t>(split.category[y])];
    ++group.total;
    ++report.all.total;
    ++per_class[y].total;
    if (hit) {
      ++group.correct;
      ++report.all.correct;
      ++per_class[y].correct;
    }
  }
  report.per_class.reserve(c);
  for (const auto& t : per_class) report.per_class.push_back(t.accuracy());
  return report;
}

EvalReport evaluate(const TrainedHead& head, const EmbeddingSet& val, const ClassCatalog& catalog,
                    const ShotSplit& split) {
  if (split.category.size() != catalog.num_classes()) {
    throw DataError("shot split does not cover the catalog");
  }
  if (val.dim != head.dim) throw DataError("validation dimension differs from the head");
  std::vector<std::size_t> predicted(val.size());
  for (std::size_t i = 0; i < val.size(); ++i) {
    Vector x = val.features.row(static_cast<Eigen::Index>(i)).transpose();
    predicted[i] = predict(head, x, catalog);
  }
  return tally(val.labels, predicted, split);
}

namespace {

nlohmann::json percent(const std::optional<double>& value) {
  if (!value) return nullptr;
  return std::round(*value * 10.0) / 10.0;
}

}  // namespace

nlohmann::json report_to_json(const EvalReport& report) {
  nlohmann::json per_class = nlohmann::json::array();
  for (const auto& v : report.per_class) per_class.push_back(percent(v));
  return {{"many", percent(report.many())},
          {"med", percent(report.medium())},
          {"few", percent(report.few())},
          {"all", percent(report.overall())},
          {"per_class", std::move(per_class)},
          {"confusion", report.confusion}};
}

std::string confusion_csv(const EvalReport& report, const ClassCatalog& catalog) {
  std::ostringstream out;
  out << "true\\pred";
  for (const auto& name : catalog.names) out << ',' << name;
  out << '\n';
  for (std::size_t k = 0; k < report.confusion.size(); ++k) {
    out << catalog.names.at(k);
    for (auto v : report.confusion[k]) out << ',' << v;
    out << '\n';
  }
  return out.str();
}

}  // namespace lfm
