#include <doctest.h>

#include <cmath>

#include "lfm/config.hpp"
#include "lfm/errors.hpp"
#include "lfm/stats.hpp"

using namespace lfm;
using nlohmann::json;

TEST_CASE("chi-square survival function reference values") {
  // Closed forms: dof 2 -> exp(-x/2); dof 1 -> erfc(sqrt(x/2)).
  for (double x : {0.1, 1.0, 4.0, 13.8}) {
    CHECK(stats::chi_square_sf(x, 2.0) == doctest::Approx(std::exp(-x / 2)).epsilon(1e-12));
    CHECK(stats::chi_square_sf(x, 1.0) == doctest::Approx(std::erfc(std::sqrt(x / 2))).epsilon(1e-12));
  }
}

TEST_CASE("Pearson statistic by hand") {
  auto r = stats::chi_square_test({30, 50, 20, 0}, {0.25, 0.5, 0.25, 0.0});
  // (30-25)^2/25 + 0 + (20-25)^2/25 = 2
  CHECK(r.statistic == doctest::Approx(2.0));
  CHECK(r.dof == 2.0);
  CHECK(r.p_value == doctest::Approx(std::exp(-1.0)));
  CHECK(stats::chi_square_test({1, 1}, {1.0, 0.0}).p_value == 0.0);
}

TEST_CASE("binomial z and median") {
  CHECK(stats::max_binomial_z({60, 40}, {0.5, 0.5}, 100) == doctest::Approx(2.0));
  CHECK(stats::median({3.0, 1.0, 2.0}) == 2.0);
  CHECK(stats::median({4.0, 1.0, 2.0, 3.0}) == 2.5);
}

TEST_CASE("KS statistics") {
  CHECK(stats::ks_statistic({0.5}, [](double x) { return x; }) == doctest::Approx(0.5));
  CHECK(stats::ks_two_sample({1, 2, 3}, {1, 2, 3}) == 0.0);
  CHECK(stats::ks_two_sample({1, 2}, {3, 4}) == 1.0);
  CHECK(stats::arcsine_cdf(0.5) == doctest::Approx(0.5));
}

TEST_CASE("config sections reject unknown keys") {
  CHECK_THROWS_AS(config::synthetic_from_json({{"num_class", 3}}), ConfigError);
  CHECK_THROWS_AS(config::train_from_json({{"stage2", {{"epoch", 3}}}}), ConfigError);
  CHECK_THROWS_AS(config::train_from_json({{"optimizer", "adam"}}), ConfigError);
  CHECK_THROWS_AS(config::longtail_from_json({{"imbalance", 10}}, 10, 100), ConfigError);
  CHECK_THROWS_AS(config::train_from_json({{"loss", "focal"}}), ConfigError);
  CHECK_THROWS_AS(config::train_from_json({{"batch_size", "big"}}), ConfigError);
}

TEST_CASE("config round trips fill defaults") {
  auto spec = config::synthetic_from_json({{"pair_groups", {{0, 3}}}, {"modality_gap", 0.1}});
  CHECK(spec.num_classes == 20);
  CHECK(spec.modality_gap == 0.1);
  CHECK(config::synthetic_from_json(config::to_json(spec)).pair_groups == spec.pair_groups);

  auto train = config::train_from_json({{"stage2", {{"epochs", 3}}}, {"loss", "balce"}});
  CHECK(train.stage2.epochs == 3);
  CHECK(train.stage2.lr0 == TrainConfig{}.stage2.lr0);
  CHECK(train.loss == LossKind::balanced_ce);
  auto again = config::train_from_json([&] {
    json j = config::to_json(train);
    j.erase("seed");
    return j;
  }());
  CHECK(config::to_json(again) == config::to_json(train));

  auto lt = config::longtail_from_json(json::object(), 10, 400);
  CHECK(lt.n_max == 400);
  CHECK(lt.gamma == 100.0);
  CHECK(lt.num_classes == 10);
}

TEST_CASE("head JSON round trip is exact") {
  TrainedHead head = TrainedHead::zero_shot(3, 12.5);
  head.W << 1.0 / 3.0, 0.1, -2.0, 0, 1, 0, 1e-17, 3, 4;
  head.encoder_proj(2, 1) = -0.7;
  head.history.push_back({2, 1, 0.25, 0.5});
  TrainedHead back = config::head_from_json(config::head_to_json(head));
  CHECK(back.W == head.W);
  CHECK(back.encoder_proj == head.encoder_proj);
  CHECK(back.logit_scale == 12.5);
  REQUIRE(back.history.size() == 1);
  CHECK(back.history[0].train_loss == 0.25);

  json bad = config::head_to_json(head);
  bad["W"].erase(0);
  CHECK_THROWS(config::head_from_json(bad));
}
