#ifndef SALARY_EVALUATE_HPP
#define SALARY_EVALUATE_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "salary/common.hpp"
#include "salary/csv.hpp"
#include "salary/dataset.hpp"

namespace salary::evaluate {

namespace detail {
inline void require_same_length(std::span<const double> a, std::span<const double> b, std::size_t min_n) {
  if (a.size() != b.size()) throw DimensionError("truth and prediction differ in length");
  if (a.size() < min_n) throw DomainError("need at least " + std::to_string(min_n) + " values");
}
}  // namespace detail

/// 1 - RSS / TSS.
inline double r_square(std::span<const double> truth, std::span<const double> pred) {
  detail::require_same_length(truth, pred, 2);
  const double mean = std::accumulate(truth.begin(), truth.end(), 0.0) / static_cast<double>(truth.size());
  double rss = 0.0, tss = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    rss += (truth[i] - pred[i]) * (truth[i] - pred[i]);
    tss += (truth[i] - mean) * (truth[i] - mean);
  }
  if (!(tss > 0.0)) throw DomainError("R-square undefined: target has zero variance");
  return 1.0 - rss / tss;
}

inline double rmse(std::span<const double> truth, std::span<const double> pred) {
  detail::require_same_length(truth, pred, 1);
  double sum = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) sum += (truth[i] - pred[i]) * (truth[i] - pred[i]);
  return std::sqrt(sum / static_cast<double>(truth.size()));
}

/// Symmetric absolute percentage error of one pair, as a fraction in [0, 2].
/// 0 when both values are 0.
inline double sape(double actual, double predicted) {
  if (actual < 0.0 || predicted < 0.0) throw DomainError("SMAPE needs non-negative values");
  const double denom = (actual + predicted) / 2.0;
  if (denom == 0.0) return 0.0;
  return std::abs(predicted - actual) / denom;
}

/// Mean symmetric absolute percentage error, as a fraction in [0, 2].
inline double smape(std::span<const double> truth, std::span<const double> pred) {
  detail::require_same_length(truth, pred, 1);
  double sum = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) sum += sape(truth[i], pred[i]);
  return sum / static_cast<double>(truth.size());
}

/// Observed minus predicted.
inline std::vector<double> residuals(std::span<const double> truth, std::span<const double> pred) {
  detail::require_same_length(truth, pred, 0);
  std::vector<double> out(truth.size());
  for (std::size_t i = 0; i < truth.size(); ++i) out[i] = truth[i] - pred[i];
  return out;
}

struct MetricReport {
  double r_square = std::numeric_limits<double>::quiet_NaN();
  double rmse = 0.0;
  double smape = 0.0;
  std::size_t n = 0;
};

/// R-square is NaN when the truth is constant; SMAPE is NaN when any value is
/// negative.
inline MetricReport metric_report(std::span<const double> truth, std::span<const double> pred) {
  MetricReport m;
  m.n = truth.size();
  m.rmse = rmse(truth, pred);
  try {
    m.r_square = r_square(truth, pred);
  } catch (const DomainError&) {
  }
  try {
    m.smape = smape(truth, pred);
  } catch (const DomainError&) {
    m.smape = std::numeric_limits<double>::quiet_NaN();
  }
  return m;
}

inline void write_residuals(std::ostream& out, const Dataset& d, std::span<const double> pred) {
  const auto truth = d.targets();
  auto res = residuals(std::span<const double>(truth.data(), static_cast<std::size_t>(truth.size())), pred);
  csv::write_row(out, {"PLAYER", "TRUE", "PRED", "RESIDUAL"});
  for (std::size_t i = 0; i < d.size(); ++i)
    csv::write_row(out, {d.records[i].player_name, csv::format_number(d.records[i].weekly_gross),
                         csv::format_number(pred[i]), csv::format_number(res[i])});
}

// ---------------------------------------------------------------------------
// Cross-validation
// ---------------------------------------------------------------------------

struct FoldPlan {
  int k = 5;
  std::vector<int> assignments;  // fold id of each record
  std::uint64_t shuffle_rng_state = 0;

  std::vector<std::size_t> test_indices(int fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < assignments.size(); ++i)
      if (assignments[i] == fold) out.push_back(i);
    return out;
  }
  std::vector<std::size_t> train_indices(int fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < assignments.size(); ++i)
      if (assignments[i] != fold) out.push_back(i);
    return out;
  }
  std::vector<std::size_t> fold_sizes() const {
    std::vector<std::size_t> sizes(static_cast<std::size_t>(k), 0);
    for (int f : assignments) ++sizes.at(static_cast<std::size_t>(f));
    return sizes;
  }
};

/// Shuffled partition of 0..n-1 into k folds whose sizes differ by at most one.
inline FoldPlan kfold_plan(std::size_t n, int k, std::uint64_t shuffle_rng_state) {
  if (k < 2 || static_cast<std::size_t>(k) > n) throw DomainError("k must satisfy 2 <= k <= n");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(shuffle_rng_state);
  std::shuffle(order.begin(), order.end(), rng);
  FoldPlan plan{k, std::vector<int>(n), shuffle_rng_state};
  for (std::size_t i = 0; i < n; ++i) plan.assignments[order[i]] = static_cast<int>(i % static_cast<std::size_t>(k));
  return plan;
}

struct CvScores {
  std::vector<double> per_fold;
  double mean = 0.0;
};

using Predictor = std::function<double(const PlayerRecord&)>;
using ModelFactory = std::function<Predictor(const Dataset&)>;
using Metric = std::function<double(std::span<const double>, std::span<const double>)>;

inline double r_square_metric(std::span<const double> t, std::span<const double> p) { return r_square(t, p); }
inline double rmse_metric(std::span<const double> t, std::span<const double> p) { return rmse(t, p); }

/// Trains on k-1 folds and scores the held-out fold, for every fold.
template <class Factory, class MetricFn>
CvScores cross_val_score(const Dataset& dataset, Factory&& factory, const FoldPlan& plan, MetricFn&& metric) {
  if (plan.assignments.size() != dataset.size()) throw DimensionError("fold plan does not match the dataset size");
  CvScores scores;
  for (int fold = 0; fold < plan.k; ++fold) {
    const auto test_idx = plan.test_indices(fold);
    const auto train_idx = plan.train_indices(fold);
    if (test_idx.empty()) throw DomainError("fold " + std::to_string(fold) + " is empty");
    const Dataset train = dataset.subset(train_idx);
    auto predict = factory(train);
    std::vector<double> truth, pred;
    for (auto i : test_idx) {
      truth.push_back(dataset.records[i].weekly_gross);
      pred.push_back(predict(dataset.records[i]));
    }
    scores.per_fold.push_back(metric(std::span<const double>(truth), std::span<const double>(pred)));
  }
  scores.mean = std::accumulate(scores.per_fold.begin(), scores.per_fold.end(), 0.0) /
                static_cast<double>(scores.per_fold.size());
  return scores;
}

// ---------------------------------------------------------------------------
// Grid search
// ---------------------------------------------------------------------------

/// Parameter name -> candidate values, in declaration order.
using ParamGrid = std::vector<std::pair<std::string, std::vector<nlohmann::json>>>;
using GridPoint = std::vector<std::pair<std::string, nlohmann::json>>;

/// Cartesian product; the first parameter varies slowest.
inline std::vector<GridPoint> expand_grid(const ParamGrid& grid) {
  if (grid.empty()) throw DomainError("empty parameter grid");
  for (const auto& [name, values] : grid)
    if (values.empty()) throw DomainError("parameter '" + name + "' has no values");
  std::vector<GridPoint> points{{}};
  for (const auto& [name, values] : grid) {
    std::vector<GridPoint> next;
    for (const auto& point : points)
      for (const auto& v : values) {
        GridPoint p = point;
        p.emplace_back(name, v);
        next.push_back(std::move(p));
      }
    points = std::move(next);
  }
  return points;
}

inline ParamGrid grid_from_json(const nlohmann::ordered_json& j) {
  if (!j.is_object()) throw SchemaError("grid must be a JSON object of name -> list");
  ParamGrid grid;
  for (const auto& [name, values] : j.items()) {
    if (!values.is_array()) throw SchemaError("grid entry '" + name + "' must be a list");
    std::vector<nlohmann::json> vs;
    for (const auto& v : values) vs.push_back(nlohmann::json::parse(v.dump()));
    grid.emplace_back(name, std::move(vs));
  }
  return grid;
}

inline std::string describe(const GridPoint& point) {
  std::string out;
  for (const auto& [name, value] : point) out += (out.empty() ? "" : " ") + name + "=" + value.dump();
  return out;
}

struct GridCell {
  GridPoint point;
  CvScores scores;
  bool failed = false;
  std::string error;
};

struct GridSearchResult {
  GridPoint best_params;
  double best_score = 0.0;
  std::vector<GridCell> table;
};

/// Exhaustive search scored by mean cross-validated R-square. A cell whose
/// fit throws is recorded as failed and never chosen; ties keep grid order.
template <class MakeFactory>
GridSearchResult grid_search(const Dataset& dataset, const ParamGrid& grid, int k, std::uint64_t rng_state,
                             MakeFactory&& make_factory) {
  const auto points = expand_grid(grid);
  const auto plan = kfold_plan(dataset.size(), k, rng_state);
  GridSearchResult result;
  std::optional<std::size_t> best;
  for (const auto& point : points) {
    GridCell cell{point, {}, false, {}};
    try {
      cell.scores = cross_val_score(dataset, make_factory(point), plan, r_square_metric);
      if (!std::isfinite(cell.scores.mean)) throw NumericError("non-finite score");
    } catch (const std::exception& e) {
      cell.failed = true;
      cell.error = e.what();
    }
    if (!cell.failed && (!best || cell.scores.mean > result.table[*best].scores.mean)) best = result.table.size();
    result.table.push_back(std::move(cell));
  }
  if (!best) throw Error("every grid configuration failed to fit");
  result.best_params = result.table[*best].point;
  result.best_score = result.table[*best].scores.mean;
  return result;
}

inline void write_score_table(std::ostream& out, const GridSearchResult& result) {
  std::size_t k = 0;
  for (const auto& c : result.table) k = std::max(k, c.scores.per_fold.size());
  csv::Row header = {"PARAMS", "MEAN_R2", "STATUS"};
  for (std::size_t f = 0; f < k; ++f) header.push_back("FOLD" + std::to_string(f + 1));
  csv::write_row(out, header);
  for (const auto& c : result.table) {
    csv::Row row = {describe(c.point), c.failed ? "" : csv::format_number(c.scores.mean),
                    c.failed ? "failed: " + c.error : "ok"};
    for (std::size_t f = 0; f < k; ++f)
      row.push_back(f < c.scores.per_fold.size() ? csv::format_number(c.scores.per_fold[f]) : "");
    csv::write_row(out, row);
  }
}

}  // namespace salary::evaluate

#endif  // SALARY_EVALUATE_HPP
