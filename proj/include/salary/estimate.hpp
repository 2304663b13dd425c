#ifndef SALARY_ESTIMATE_HPP
#define SALARY_ESTIMATE_HPP

#include <array>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "salary/common.hpp"
#include "salary/csv.hpp"
#include "salary/dataset.hpp"
#include "salary/evaluate.hpp"
#include "salary/mixedmodel.hpp"

namespace salary::estimate {

enum class EstimationLabel { Overestimation, Underestimation, Normal };

inline std::string_view to_string(EstimationLabel label) {
  switch (label) {
    case EstimationLabel::Overestimation: return "Overestimation";
    case EstimationLabel::Underestimation: return "Underestimation";
    case EstimationLabel::Normal: return "Normal";
  }
  return "Normal";
}

enum class Method { interval, smape_threshold };

inline std::string_view to_string(Method m) { return m == Method::interval ? "interval" : "smape_threshold"; }

/// Salary below the interval is underestimated, above it overestimated.
/// The limits themselves count as Normal.
inline EstimationLabel classify_by_interval(double true_salary, const mixed::PredictionInterval& interval) {
  if (!(interval.lower <= interval.upper)) throw DomainError("interval lower limit exceeds upper limit");
  if (true_salary < interval.lower) return EstimationLabel::Underestimation;
  if (true_salary > interval.upper) return EstimationLabel::Overestimation;
  return EstimationLabel::Normal;
}

/// Non-Normal only when the pair's symmetric error strictly exceeds
/// `threshold`; the direction is Over when the true salary is the larger one.
inline EstimationLabel classify_by_smape(double true_salary, double pred_salary, double threshold) {
  if (threshold < 0.0) throw DomainError("threshold must be >= 0");
  const double e = evaluate::sape(true_salary, pred_salary);
  if (!(e > threshold)) return EstimationLabel::Normal;
  return true_salary > pred_salary ? EstimationLabel::Overestimation : EstimationLabel::Underestimation;
}

struct EstimationSummary {
  Method method = Method::interval;
  double threshold_or_level = 0.0;
  std::size_t total = 0;
  std::array<std::size_t, 3> counts{};  // indexed by EstimationLabel

  std::size_t count(EstimationLabel l) const { return counts[static_cast<std::size_t>(l)]; }
  double fraction(EstimationLabel l) const {
    return total ? static_cast<double>(count(l)) / static_cast<double>(total) : 0.0;
  }
};

inline EstimationSummary summarize(std::span<const EstimationLabel> labels, Method method, double threshold_or_level) {
  EstimationSummary s{method, threshold_or_level, labels.size(), {}};
  for (auto l : labels) ++s.counts[static_cast<std::size_t>(l)];
  return s;
}

inline void write_summary(std::ostream& out, const EstimationSummary& s) {
  csv::write_row(out, {"METHOD", "THRESHOLD_OR_LEVEL", "LABEL", "COUNT", "FRACTION"});
  for (auto l : {EstimationLabel::Normal, EstimationLabel::Overestimation, EstimationLabel::Underestimation})
    csv::write_row(out, {std::string(to_string(s.method)), csv::format_number(s.threshold_or_level),
                         std::string(to_string(l)), std::to_string(s.count(l)), csv::format_number(s.fraction(l))});
}

struct IntervalRow {
  std::string player;
  double truth = 0.0;
  mixed::PredictionInterval interval;
  EstimationLabel label = EstimationLabel::Normal;
};

inline std::vector<IntervalRow> classify_intervals(const Dataset& d,
                                                   const std::vector<mixed::PredictionInterval>& intervals) {
  if (intervals.size() != d.size()) throw DimensionError("one interval per record is required");
  std::vector<IntervalRow> rows;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double truth = d.records[i].weekly_gross;
    rows.push_back({d.records[i].player_name, truth, intervals[i], classify_by_interval(truth, intervals[i])});
  }
  return rows;
}

inline void write_interval_rows(std::ostream& out, const std::vector<IntervalRow>& rows) {
  csv::write_row(out, {"PLAYER", "TRUE", "PRED", "LOWER", "UPPER", "LABEL"});
  for (const auto& r : rows)
    csv::write_row(out, {r.player, csv::format_number(r.truth), csv::format_number(r.interval.predicted),
                         csv::format_number(r.interval.lower), csv::format_number(r.interval.upper),
                         std::string(to_string(r.label))});
}

/// Interval table in the Player,Salary,Pred,up,down layout.
inline void write_prediction_intervals(std::ostream& out, const Dataset& d,
                                       const std::vector<mixed::PredictionInterval>& intervals) {
  csv::write_row(out, {"Player", "Salary", "Pred", "up", "down"});
  for (std::size_t i = 0; i < intervals.size(); ++i)
    csv::write_row(out, {intervals[i].player, csv::format_number(d.records[i].weekly_gross),
                         csv::format_number(intervals[i].predicted), csv::format_number(intervals[i].upper),
                         csv::format_number(intervals[i].lower)});
}

struct ThresholdRow {
  std::string player;
  double truth = 0.0;
  double pred = 0.0;
  double sape = 0.0;
  EstimationLabel label = EstimationLabel::Normal;
};

/// Labels every record against `threshold`, or against the dataset's own
/// SMAPE when no threshold is given.
inline std::vector<ThresholdRow> classify_by_threshold(const Dataset& d, std::span<const double> pred,
                                                       std::optional<double> threshold, double* used = nullptr) {
  if (pred.size() != d.size()) throw DimensionError("one prediction per record is required");
  std::vector<double> truth;
  for (const auto& r : d.records) truth.push_back(r.weekly_gross);
  const double t = threshold ? *threshold : evaluate::smape(truth, pred);
  if (used) *used = t;
  std::vector<ThresholdRow> rows;
  for (std::size_t i = 0; i < d.size(); ++i)
    rows.push_back({d.records[i].player_name, truth[i], pred[i], evaluate::sape(truth[i], pred[i]),
                    classify_by_smape(truth[i], pred[i], t)});
  return rows;
}

inline void write_threshold_rows(std::ostream& out, const std::vector<ThresholdRow>& rows) {
  csv::write_row(out, {"PLAYER", "TRUE", "PRED", "SAPE", "LABEL"});
  for (const auto& r : rows)
    csv::write_row(out, {r.player, csv::format_number(r.truth), csv::format_number(r.pred),
                         csv::format_number(r.sape), std::string(to_string(r.label))});
}

}  // namespace salary::estimate

#endif  // SALARY_ESTIMATE_HPP
