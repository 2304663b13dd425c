#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "salary/estimate.hpp"

using namespace salary;
using namespace salary::estimate;

namespace {

mixed::PredictionInterval interval(double pred, double lower, double upper) {
  mixed::PredictionInterval pi;
  pi.predicted = pred;
  pi.lower = lower;
  pi.upper = upper;
  return pi;
}

}  // namespace

TEST(Interval, RecordedRows) {
  // Published interval table rows (pred values are not needed by the rule).
  EXPECT_EQ(classify_by_interval(172500, interval(156346.2, 131187.2, 181748)), EstimationLabel::Normal);
  EXPECT_EQ(classify_by_interval(103846, interval(216888.6, 188808.6, 244518.6)), EstimationLabel::Underestimation);
}

TEST(Interval, BoundariesAreNormal) {
  auto pi = interval(5, 1, 10);
  EXPECT_EQ(classify_by_interval(10, pi), EstimationLabel::Normal);
  EXPECT_EQ(classify_by_interval(1, pi), EstimationLabel::Normal);
  EXPECT_EQ(classify_by_interval(10.0001, pi), EstimationLabel::Overestimation);
  EXPECT_THROW(classify_by_interval(1, interval(0, 2, 1)), DomainError);
}

TEST(Smape, HandCases) {
  EXPECT_EQ(classify_by_smape(100, 100, 0.01), EstimationLabel::Normal);
  EXPECT_EQ(classify_by_smape(100000, 50000, 0.2937), EstimationLabel::Overestimation);
  EXPECT_EQ(classify_by_smape(50000, 100000, 0.2937), EstimationLabel::Underestimation);
  EXPECT_EQ(classify_by_smape(10, 30, 1.0), EstimationLabel::Normal);  // equal to threshold
  EXPECT_THROW(classify_by_smape(1, 1, -0.1), DomainError);
}

TEST(Partition, EveryRecordGetsExactlyOneLabel) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1e5);
  Dataset d;
  std::vector<double> pred;
  std::vector<mixed::PredictionInterval> intervals;
  for (int i = 0; i < 500; ++i) {
    PlayerRecord r;
    r.player_name = "p" + std::to_string(i);
    r.weekly_gross = u(rng);
    d.records.push_back(r);
    pred.push_back(u(rng));
    const double a = u(rng), b = u(rng);
    intervals.push_back(interval(pred.back(), std::min(a, b), std::max(a, b)));
  }
  double used = -1.0;
  auto t = classify_by_threshold(d, pred, std::nullopt, &used);
  EXPECT_GT(used, 0.0);
  std::vector<EstimationLabel> tl, il;
  for (const auto& r : t) tl.push_back(r.label);
  for (const auto& r : classify_intervals(d, intervals)) il.push_back(r.label);
  for (const auto& labels : {tl, il}) {
    auto s = summarize(labels, Method::interval, 0.9);
    EXPECT_EQ(s.count(EstimationLabel::Normal) + s.count(EstimationLabel::Overestimation) +
                  s.count(EstimationLabel::Underestimation),
              500u);
    EXPECT_NEAR(s.fraction(EstimationLabel::Normal) + s.fraction(EstimationLabel::Overestimation) +
                    s.fraction(EstimationLabel::Underestimation),
                1.0, 1e-12);
  }
}

TEST(Threshold, ExplicitThresholdIsUsed) {
  Dataset d;
  d.records.resize(2);
  d.records[0].weekly_gross = 100;
  d.records[1].weekly_gross = 100;
  std::vector<double> pred = {100, 300};
  double used = 0.0;
  auto rows = classify_by_threshold(d, pred, 0.5, &used);
  EXPECT_EQ(used, 0.5);
  EXPECT_EQ(rows[0].label, EstimationLabel::Normal);
  EXPECT_EQ(rows[1].label, EstimationLabel::Underestimation);
  std::vector<double> short_pred = {1};
  EXPECT_THROW(classify_by_threshold(d, short_pred, 0.5), DimensionError);
}

TEST(Output, IntervalTableLayout) {
  Dataset d;
  d.records.resize(1);
  d.records[0].player_name = "Aaron Ram";
  d.records[0].weekly_gross = 172500;
  auto pi = interval(156346.2, 131187.2, 181748);
  pi.player = "Aaron Ram";
  std::ostringstream out;
  write_prediction_intervals(out, d, {pi});
  EXPECT_EQ(out.str(), "Player,Salary,Pred,up,down\nAaron Ram,172500,156346.2,181748,131187.2\n");
}

TEST(Output, SummaryRows) {
  std::vector<EstimationLabel> labels = {EstimationLabel::Normal, EstimationLabel::Normal,
                                         EstimationLabel::Underestimation, EstimationLabel::Overestimation};
  std::ostringstream out;
  write_summary(out, summarize(labels, Method::smape_threshold, 0.25));
  EXPECT_NE(out.str().find("smape_threshold,0.25,Normal,2,0.5"), std::string::npos);
}
