#include <doctest.h>

#include <cmath>
#include <map>
#include <sstream>

#include "rumfit/eval.hpp"
#include "test_util.hpp"

using namespace rumfit;

TEST_CASE("cdf of a perfect fit is a single point") {
  const Rum r = Rum::point_mass(Permutation({1, 0, 2}));
  const auto t = testutil::table_from_rum(r, 2);
  const auto cdf = error_cdf(r, t);
  REQUIRE(cdf.points.size() == 1);
  CHECK(cdf.points[0].x == 0.0);
  CHECK(cdf.points[0].y == 1.0);
}

TEST_CASE("cdf of two slates") {
  const auto cdf = error_cdf_from_errors({0.4, 0.0});
  REQUIRE(cdf.points.size() == 2);
  CHECK(cdf.points[0].x == 0.0);
  CHECK(cdf.points[0].y == 0.5);
  CHECK(cdf.points[1].x == 0.4);
  CHECK(cdf.points[1].y == 1.0);
  CHECK_THROWS_AS(error_cdf_from_errors({}), std::invalid_argument);
}

TEST_CASE("property: cdf is monotone and integrates to the average error") {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    Rng rng(seed);
    const std::size_t n = 3 + seed % 5;
    const auto t = testutil::random_table(n, 2 + seed % 2, 12, rng);
    const auto r = testutil::random_rum(n, 3, rng);
    const auto cdf = error_cdf(r, t);
    for (std::size_t i = 1; i < cdf.points.size(); ++i) {
      CHECK(cdf.points[i].x > cdf.points[i - 1].x);
      CHECK(cdf.points[i].y > cdf.points[i - 1].y);
    }
    CHECK(cdf.points.back().y == 1.0);
    CHECK(cdf.mean() == doctest::Approx(average_l1_error(r, t)).epsilon(1e-12));
  }
}

TEST_CASE("rmse hand values") {
  const WinnerTable actual(2, {{Slate({0, 1}), {0.5, 0.5}}});
  const WinnerTable pred(2, {{Slate({0, 1}), {1.0, 0.0}}});
  CHECK(rmse(actual, actual) == 0.0);
  CHECK(rmse(pred, actual) == doctest::Approx(std::sqrt(0.5)));
  const WinnerTable other(3, {{Slate({1, 2}), {0.5, 0.5}}});
  CHECK_THROWS_AS(rmse(other, actual), std::invalid_argument);
}

TEST_CASE("property: rmse matches a naive recomputation") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    const auto a = testutil::random_table(6, 3, 10, rng);
    std::vector<SlateDistribution> pe;
    for (const auto& e : a.entries()) pe.push_back({e.slate, testutil::random_simplex(3, rng)});
    const WinnerTable p(6, pe);
    double sum = 0;
    for (std::size_t s = 0; s < a.size(); ++s) {
      for (std::size_t i = 0; i < 3; ++i) {
        sum += std::pow(a[s].probabilities[i] - p[s].probabilities[i], 2);
      }
    }
    CHECK(rmse(p, a) == doctest::Approx(std::sqrt(sum / 10.0)).epsilon(1e-12));
  }
}

TEST_CASE("property: folds partition the observation units") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed);
    std::vector<ChoiceObservation> obs;
    for (const auto& s : testutil::random_slates(6, 2, 9, rng)) {
      obs.push_back({s, s[0], 1 + uniform_below(rng, 7)});
      obs.push_back({s, s[1], 1 + uniform_below(rng, 7)});
    }
    const auto ds = aggregate_observations(6, 2, obs);
    const auto folds = split_folds(ds, 5, seed);
    REQUIRE(folds.size() == 5);
    std::uint64_t lo = ds.total_count(), hi = 0;
    std::map<std::pair<Slate, ItemId>, std::uint64_t> merged;
    for (const auto& f : folds) {
      lo = std::min(lo, f.total_count());
      hi = std::max(hi, f.total_count());
      for (const auto& o : f.observations) merged[{o.slate, o.winner}] += o.count;
    }
    CHECK(hi - lo <= 1);
    for (const auto& o : ds.observations) CHECK(merged[{o.slate, o.winner}] == o.count);
    CHECK(merged.size() == ds.observations.size());

    const auto again = split_folds(ds, 5, seed);
    for (std::size_t f = 0; f < 5; ++f) CHECK(again[f].observations == folds[f].observations);

    const auto split = fold_split(folds, 2);
    CHECK(split.train.total_count() + split.test.total_count() == ds.total_count());
  }
}

TEST_CASE("fold errors") {
  const auto ds = testutil::dataset_from(2, 2, {{Slate({0, 1}), 0, 3}});
  CHECK_THROWS_AS(split_folds(ds, 1, 0), std::invalid_argument);
  CHECK_THROWS_AS(split_folds(ds, 4, 0), std::invalid_argument);
  CHECK_NOTHROW(split_folds(ds, 3, 0));
}

TEST_CASE("train tensor predicts uniform on unseen slates") {
  const WinnerTable train(3, {{Slate({0, 1}), {0.9, 0.1}}});
  const WinnerTable test(3, {{Slate({0, 1}), {0.8, 0.2}}, {Slate({1, 2}), {0.3, 0.7}}});
  const auto p = train_tensor_predict(train, test);
  CHECK(p[0].probabilities[0] == 0.9);
  CHECK(p[1].probabilities[0] == 0.5);
  CHECK(p[1].probabilities[1] == 0.5);
}

TEST_CASE("train tensor is exact when train and test distributions match") {
  std::vector<ChoiceObservation> obs;
  for (const auto& s : all_slates(3, 2)) {
    obs.push_back({s, s[0], 1});
    obs.push_back({s, s[1], 3});
  }
  const auto t = empirical_distributions(aggregate_observations(3, 2, obs));
  CHECK(rmse(train_tensor_predict(t, t), t) == 0.0);
}

TEST_CASE("cross validation on representable data") {
  const Permutation pi({2, 0, 1, 3});
  const std::vector<Permutation> rankings(20, pi);
  const auto ds = expand_full_rankings(rankings, 2);
  CvConfig cfg;
  cfg.seeds = {0, 1};
  cfg.fit.oracle = OracleKind::exact;
  for (auto model : {PredictModel::rum, PredictModel::train_tensor}) {
    const auto s = cross_validate(ds, cfg, model);
    CHECK(s.cells.size() == 10);
    CHECK(s.mean <= 1e-9);
  }
  const auto mnl = cross_validate(ds, cfg, PredictModel::mnl);
  CHECK(mnl.mean < 0.05);
}

TEST_CASE("cross validation is reproducible and thread independent") {
  Rng rng(17);
  std::vector<Permutation> rankings;
  for (int i = 0; i < 15; ++i) rankings.push_back(testutil::random_permutation(5, rng));
  const auto ds = expand_full_rankings(rankings, 2);
  CvConfig cfg;
  cfg.seeds = {3, 4};
  cfg.fit.t = 10;
  const auto a = cross_validate(ds, cfg, PredictModel::rum);
  cfg.threads = 3;
  const auto b = cross_validate(ds, cfg, PredictModel::rum);
  REQUIRE(a.cells.size() == b.cells.size());
  for (std::size_t i = 0; i < a.cells.size(); ++i) CHECK(a.cells[i].rmse == b.cells[i].rmse);
  CHECK(a.mean == b.mean);
  double var = 0;
  for (const auto& c : a.cells) var += (c.rmse - a.mean) * (c.rmse - a.mean);
  CHECK(a.stddev == doctest::Approx(std::sqrt(var / a.cells.size())));
}

TEST_CASE("csv writers") {
  std::ostringstream a, b, c;
  write_fit_report_csv(a, {{"toy", 2, 3, 0.25, std::nullopt}});
  CHECK(a.str() == "dataset,k,|P|,avg_error,lower_bound\ntoy,2,3,0.25,\n");
  write_error_cdf_csv(b, error_cdf_from_errors({0.0, 0.5}));
  CHECK(b.str() == "x,y\n0,0.5\n0.5,1\n");
  CvSummary s;
  s.model = PredictModel::train_tensor;
  s.cells = {{1, 0, 0.125}};
  write_cv_report_csv(c, {s});
  CHECK(c.str() == "model,seed,fold,rmse\ntensor,1,0,0.125\n");
}
