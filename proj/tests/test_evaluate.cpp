#include <random>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "salary/evaluate.hpp"

using namespace salary;
using namespace salary::evaluate;

namespace {

Dataset toy(std::size_t n, std::uint64_t seed = 1) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(100.0, 20.0);
  Dataset d;
  for (std::size_t i = 0; i < n; ++i) {
    PlayerRecord r;
    r.player_name = "p" + std::to_string(i);
    r.features[feature::goals] = static_cast<double>(i);
    r.weekly_gross = z(rng);
    d.records.push_back(r);
  }
  return d;
}

}  // namespace

TEST(RSquare, PerfectAndMean) {
  std::vector<double> y = {1, 2, 3, 4};
  EXPECT_DOUBLE_EQ(r_square(y, y), 1.0);
  std::vector<double> m(4, 2.5);
  EXPECT_DOUBLE_EQ(r_square(y, m), 0.0);
}

TEST(RSquare, ConstantTruthIsError) {
  std::vector<double> y = {2, 2, 2}, p = {1, 2, 3};
  EXPECT_THROW(r_square(y, p), DomainError);
}

TEST(RSquare, LengthMismatch) {
  std::vector<double> a = {1, 2}, b = {1};
  EXPECT_THROW(r_square(a, b), DimensionError);
  EXPECT_THROW(rmse(a, b), DimensionError);
  EXPECT_THROW(smape(a, b), DimensionError);
}

TEST(Rmse, HandValues) {
  std::vector<double> y = {0, 0}, p = {3, 4};
  EXPECT_NEAR(rmse(y, p), std::sqrt(12.5), 1e-15);
  EXPECT_NEAR(rmse(y, p), 3.5355339059, 1e-9);
  EXPECT_EQ(rmse(y, y), 0.0);
}

TEST(Smape, HandValues) {
  EXPECT_DOUBLE_EQ(sape(10, 30), 1.0);
  EXPECT_EQ(sape(0, 10), 2.0);
  EXPECT_EQ(sape(0, 0), 0.0);
  std::vector<double> y = {5, 7};
  EXPECT_EQ(smape(y, y), 0.0);
  EXPECT_THROW(sape(-1, 2), DomainError);
}

TEST(Smape, BoundedAndSymmetric) {
  std::mt19937_64 rng(2);
  std::exponential_distribution<double> e(0.01);
  for (int i = 0; i < 1000; ++i) {
    const double a = i % 10 == 0 ? 0.0 : e(rng), b = e(rng);
    EXPECT_GE(sape(a, b), 0.0);
    EXPECT_LE(sape(a, b), 2.0);
    EXPECT_EQ(sape(a, b), sape(b, a));
  }
}

TEST(Residuals, SignConvention) {
  std::vector<double> y = {10, 20}, p = {12, 15};
  EXPECT_EQ(residuals(y, p), (std::vector<double>{-2, 5}));
}

TEST(MetricReport, NanForUndefinedPieces) {
  std::vector<double> y = {1, 1}, p = {-1, 2};
  auto m = metric_report(y, p);
  EXPECT_TRUE(std::isnan(m.r_square));
  EXPECT_TRUE(std::isnan(m.smape));
  EXPECT_GT(m.rmse, 0.0);
}

TEST(KFold, SmallCases) {
  auto p = kfold_plan(4, 2, 0);
  EXPECT_EQ(p.fold_sizes(), (std::vector<std::size_t>{2, 2}));
  auto q = kfold_plan(5, 2, 0);
  EXPECT_EQ(q.fold_sizes(), (std::vector<std::size_t>{3, 2}));
  auto r = kfold_plan(1684, 5, 0);
  EXPECT_EQ(r.fold_sizes(), (std::vector<std::size_t>{337, 337, 337, 337, 336}));
}

TEST(KFold, InvalidK) {
  EXPECT_THROW(kfold_plan(5, 1, 0), DomainError);
  EXPECT_THROW(kfold_plan(3, 4, 0), DomainError);
}

TEST(KFold, PartitionSweep) {
  for (std::size_t n = 2; n <= 40; ++n)
    for (int k = 2; k <= static_cast<int>(std::min<std::size_t>(n, 10)); ++k) {
      auto plan = kfold_plan(n, k, n * 31 + static_cast<std::size_t>(k));
      std::set<std::size_t> seen;
      std::size_t smallest = n, largest = 0;
      for (int f = 0; f < k; ++f) {
        auto test = plan.test_indices(f);
        auto train = plan.train_indices(f);
        EXPECT_EQ(test.size() + train.size(), n);
        for (auto i : test) EXPECT_TRUE(seen.insert(i).second) << "index in two folds";
        smallest = std::min(smallest, test.size());
        largest = std::max(largest, test.size());
      }
      EXPECT_EQ(seen.size(), n);
      EXPECT_LE(largest - smallest, 1u);
    }
}

TEST(CrossVal, ConstantPredictorClosedForm) {
  const auto d = toy(23);
  const auto plan = kfold_plan(d.size(), 4, 5);
  const double c = 90.0;
  auto factory = [c](const Dataset&) { return Predictor([c](const PlayerRecord&) { return c; }); };
  auto scores = cross_val_score(d, factory, plan, rmse_metric);
  ASSERT_EQ(scores.per_fold.size(), 4u);
  for (int f = 0; f < 4; ++f) {
    double ss = 0.0;
    auto test = plan.test_indices(f);
    for (auto i : test) ss += (d.records[i].weekly_gross - c) * (d.records[i].weekly_gross - c);
    EXPECT_NEAR(scores.per_fold[static_cast<std::size_t>(f)], std::sqrt(ss / static_cast<double>(test.size())), 1e-12);
  }
}

TEST(CrossVal, LeaveOneOut) {
  const auto d = toy(3);
  auto factory = [](const Dataset&) { return Predictor([](const PlayerRecord&) { return 0.0; }); };
  auto scores = cross_val_score(d, factory, kfold_plan(3, 3, 0), rmse_metric);
  EXPECT_EQ(scores.per_fold.size(), 3u);
}

TEST(CrossVal, TrainingMeanFactoryIsDeterministic) {
  const auto d = toy(30);
  auto factory = [](const Dataset& train) {
    double m = 0.0;
    for (const auto& r : train.records) m += r.weekly_gross;
    m /= static_cast<double>(train.size());
    return Predictor([m](const PlayerRecord&) { return m; });
  };
  const auto plan = kfold_plan(d.size(), 5, 9);
  auto a = cross_val_score(d, factory, plan, rmse_metric);
  auto b = cross_val_score(d, factory, plan, rmse_metric);
  EXPECT_EQ(a.per_fold, b.per_fold);
}

TEST(CrossVal, PlanSizeMismatch) {
  const auto d = toy(10);
  auto factory = [](const Dataset&) { return Predictor([](const PlayerRecord&) { return 0.0; }); };
  EXPECT_THROW(cross_val_score(d, factory, kfold_plan(9, 3, 0), rmse_metric), DimensionError);
}

TEST(Grid, ExpansionOrder) {
  ParamGrid g = {{"a", {1, 2}}, {"b", {"x", "y", "z"}}};
  auto points = expand_grid(g);
  ASSERT_EQ(points.size(), 6u);
  EXPECT_EQ(describe(points[0]), "a=1 b=\"x\"");
  EXPECT_EQ(describe(points[1]), "a=1 b=\"y\"");
  EXPECT_EQ(describe(points[3]), "a=2 b=\"x\"");
  EXPECT_THROW(expand_grid({}), DomainError);
  EXPECT_THROW(expand_grid({{"a", {}}}), DomainError);
}

TEST(Grid, FromJsonKeepsOrder) {
  auto g = grid_from_json(nlohmann::ordered_json::parse(R"({"z": [1], "a": [2, 3]})"));
  ASSERT_EQ(g.size(), 2u);
  EXPECT_EQ(g[0].first, "z");
  EXPECT_THROW(grid_from_json(nlohmann::ordered_json::parse(R"({"z": 1})")), SchemaError);
}

TEST(Grid, FailedCellsAreExcluded) {
  const auto d = toy(20);
  ParamGrid g = {{"offset", {0.0, -1.0, 5.0}}};
  auto make = [&](const GridPoint& point) {
    const double offset = point.at(0).second.get<double>();
    return [offset](const Dataset& train) {
      if (offset < 0.0) throw DomainError("negative offset");
      double m = 0.0;
      for (const auto& r : train.records) m += r.weekly_gross;
      m = m / static_cast<double>(train.size()) + offset;
      return Predictor([m](const PlayerRecord&) { return m; });
    };
  };
  auto result = grid_search(d, g, 4, 0, make);
  ASSERT_EQ(result.table.size(), 3u);
  EXPECT_TRUE(result.table[1].failed);
  EXPECT_EQ(result.best_params.at(0).second.get<double>(), 0.0);
  std::ostringstream out;
  write_score_table(out, result);
  EXPECT_NE(out.str().find("failed"), std::string::npos);
}

TEST(Grid, AllFailedIsError) {
  const auto d = toy(10);
  ParamGrid g = {{"x", {1}}};
  auto make = [](const GridPoint&) {
    return [](const Dataset&) -> Predictor { throw DomainError("nope"); };
  };
  EXPECT_THROW(grid_search(d, g, 2, 0, make), Error);
}
