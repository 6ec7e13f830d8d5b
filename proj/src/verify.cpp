#include "lfm/verify.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "lfm/datamodel.hpp"
#include "lfm/mixup.hpp"
#include "lfm/model.hpp"
#include "lfm/rng.hpp"
#include "lfm/stats.hpp"
#include "lfm/textguide.hpp"

namespace lfm::verify {

CheckResult label_shift_argmin(std::size_t trials, std::uint64_t seed) {
  Rng rng(seed);
  double worst = 0.0;
  for (std::size_t t = 0; t < trials; ++t) {
    const double lambda_x = rng.uniform();
    const double alpha = 2.0 * rng.uniform();
    const std::size_t n_i = 1 + rng.index(10000);
    const std::size_t n_j = 1 + rng.index(10000);
    const double p = static_cast<double>(n_i) / static_cast<double>(n_i + n_j);
    const double closed = label_shift(lambda_x, alpha, n_i, n_j);
    const double numeric = label_shift_argmin_numeric(lambda_x, alpha, p);
    worst = std::max(worst, std::abs(closed - numeric));
  }
  std::ostringstream detail;
  detail << trials << " random (lambda_x, alpha, n_i, n_j); max |closed - argmin| = " << worst;
  return {"label_shift_argmin", worst <= 1e-6, worst, 1e-6, detail.str()};
}

CheckResult beta_sampler(std::size_t samples, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> draws(samples);
  for (auto& v : draws) v = sample_beta(0.5, 0.5, rng);
  const double ks = stats::ks_statistic(std::move(draws), stats::arcsine_cdf);
  std::ostringstream detail;
  detail << samples << " Beta(1/2,1/2) draws; KS vs arcsine CDF = " << ks;
  return {"beta_sampler_ks", ks < 0.01, ks, 0.01, detail.str()};
}

namespace {

double relative_error(const RowMatrix& analytic, const RowMatrix& numeric) {
  const double scale = std::max({analytic.norm(), numeric.norm(), 1e-12});
  return (analytic - numeric).norm() / scale;
}

RowMatrix random_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng, double sd) {
  RowMatrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = rng.normal(0.0, sd);
  return m;
}

}  // namespace

CheckResult gradient_check(std::size_t points, std::uint64_t seed) {
  constexpr Eigen::Index kDim = 6;
  constexpr Eigen::Index kClasses = 5;
  constexpr Eigen::Index kBatch = 3;
  constexpr double kStep = 1e-5;
  Rng rng(seed);
  double worst = 0.0;
  for (std::size_t point = 0; point < points; ++point) {
    ClassCatalog catalog;
    catalog.text_features = random_matrix(kClasses, kDim, rng, 1.0);
    for (Eigen::Index k = 0; k < kClasses; ++k) {
      catalog.text_features.row(k).normalize();
      catalog.names.push_back("c" + std::to_string(k));
      catalog.counts.push_back(1 + rng.index(500));
    }
    TrainedHead head = TrainedHead::zero_shot(kDim, 1.0 + 29.0 * rng.uniform());
    head.W += random_matrix(kDim, kDim, rng, 0.3);
    head.encoder_proj += random_matrix(kDim, kDim, rng, 0.3);
    RowMatrix inputs = random_matrix(kBatch, kDim, rng, 1.0);
    RowMatrix targets = RowMatrix::Zero(kBatch, kClasses);
    for (Eigen::Index b = 0; b < kBatch; ++b) {
      const double lam = rng.uniform();
      targets(b, static_cast<Eigen::Index>(rng.index(kClasses))) += lam;
      targets(b, static_cast<Eigen::Index>(rng.index(kClasses))) += 1.0 - lam;
    }
    const LossKind loss = point % 2 ? LossKind::balanced_ce : LossKind::ce;

    HeadGradients analytic = loss_and_gradients(head, inputs, targets, catalog, loss);
    auto numeric = [&](RowMatrix TrainedHead::*param) {
      RowMatrix grad(kDim, kDim);
      TrainedHead probe = head;
      for (Eigen::Index i = 0; i < kDim; ++i) {
        for (Eigen::Index j = 0; j < kDim; ++j) {
          const double saved = (probe.*param)(i, j);
          (probe.*param)(i, j) = saved + kStep;
          const double up = loss_and_gradients(probe, inputs, targets, catalog, loss).loss;
          (probe.*param)(i, j) = saved - kStep;
          const double down = loss_and_gradients(probe, inputs, targets, catalog, loss).loss;
          (probe.*param)(i, j) = saved;
          grad(i, j) = (up - down) / (2.0 * kStep);
        }
      }
      return grad;
    };
    worst = std::max(worst, relative_error(analytic.W, numeric(&TrainedHead::W)));
    worst = std::max(worst, relative_error(analytic.encoder_proj, numeric(&TrainedHead::encoder_proj)));
  }
  std::ostringstream detail;
  detail << points << " random heads (adapter and projection); max relative error = " << worst;
  return {"gradient_check", worst < 1e-4, worst, 1e-4, detail.str()};
}

std::vector<CheckResult> sampler_fidelity(const LocalSamplingModel& model, const EmbeddingSet& data,
                                          std::size_t draws, std::uint64_t seed) {
  const auto c = model.num_classes();
  PairStream stream(model, data, seed);

  std::vector<std::vector<std::size_t>> joint(c, std::vector<std::size_t>(c, 0));
  std::vector<std::size_t> first(c, 0);
  std::vector<std::size_t> member(c, 0);
  bool distinct = true;
  for (std::size_t t = 0; t < draws; ++t) {
    SampledPair pair = stream.next();
    distinct = distinct && pair.first.label != pair.second.label;
    ++joint[pair.first.label][pair.second.label];
    ++first[pair.first.label];
    ++member[pair.first.label];
    ++member[pair.second.label];
  }

  double worst_cond = 0.0;
  stats::ChiSquare pooled;
  for (std::size_t i = 0; i < c; ++i) {
    std::vector<double> row(c);
    for (std::size_t j = 0; j < c; ++j) {
      row[j] = model.p_cond(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
    worst_cond = std::max(worst_cond, stats::max_binomial_z(joint[i], row, first[i]));
    auto chi = stats::chi_square_test(joint[i], row);
    pooled.statistic += chi.statistic;
    pooled.dof += chi.dof;
  }
  pooled.p_value = stats::chi_square_sf(pooled.statistic, pooled.dof);

  // A class occurs at most once per pair, so membership counts are binomial.
  auto effective = effective_class_distribution(model);
  double worst_member = 0.0;
  for (std::size_t k = 0; k < c; ++k) {
    const double p = effective[k];
    const double n = static_cast<double>(draws);
    const double sigma = std::sqrt(n * p * (1.0 - p));
    worst_member = std::max(worst_member, std::abs(static_cast<double>(member[k]) - n * p) / sigma);
  }

  std::vector<CheckResult> out;
  std::ostringstream a, b, d;
  a << draws << " pairs, " << c << " classes; worst conditional deviation " << worst_cond << " sigma"
    << (distinct ? "" : "; a pair repeated its class");
  out.push_back({"sampler_conditional_3sigma", distinct && worst_cond <= 3.0, worst_cond, 3.0, a.str()});
  b << "worst membership deviation " << worst_member << " sigma from p(Y=y)";
  out.push_back({"sampler_membership_3sigma", worst_member <= 3.0, worst_member, 3.0, b.str()});
  d << "pooled chi-square " << pooled.statistic << " on " << pooled.dof << " dof, p = " << pooled.p_value;
  out.push_back({"sampler_chi_square", pooled.p_value > 0.001, pooled.p_value, 0.001, d.str()});
  return out;
}

std::vector<CheckResult> sampler_fidelity(std::size_t draws, std::uint64_t seed) {
  // Three classes with s_01 = 0.8, s_02 = 0.2, s_12 = 0.5 at tau = 0.05.
  RowMatrix similarity(3, 3);
  similarity << 1.0, 0.8, 0.2,
                0.8, 1.0, 0.5,
                0.2, 0.5, 1.0;
  const std::vector<std::size_t> counts{50, 30, 20};
  LocalSamplingModel model = build_sampling_model(similarity, counts, 0.05);

  EmbeddingSet data;
  data.dim = 1;
  data.features = RowMatrix::Ones(100, 1);
  for (std::uint32_t k = 0; k < 3; ++k) data.labels.insert(data.labels.end(), counts[k], k);
  return sampler_fidelity(model, data, draws, seed);
}

std::vector<CheckResult> run_all(std::uint64_t seed) {
  std::vector<CheckResult> results;
  results.push_back(label_shift_argmin(10000, derive_seed(seed, 11)));
  results.push_back(beta_sampler(100000, derive_seed(seed, 12)));
  results.push_back(gradient_check(100, derive_seed(seed, 13)));
  for (auto& r : sampler_fidelity(1000000, derive_seed(seed, 14))) results.push_back(std::move(r));
  return results;
}

nlohmann::json to_json(const std::vector<CheckResult>& results) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& r : results) {
    out.push_back({{"name", r.name},
                   {"passed", r.passed},
                   {"metric", r.metric},
                   {"threshold", r.threshold},
                   {"detail", r.detail}});
  }
  return out;
}

}  // namespace lfm::verify
