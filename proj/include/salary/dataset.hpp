#ifndef SALARY_DATASET_HPP
#define SALARY_DATASET_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "salary/common.hpp"

namespace salary {

inline constexpr std::size_t kFeatureCount = 24;

/// Model feature order. Both models index features by position in this list.
inline constexpr std::array<std::string_view, kFeatureCount> kFeatureNames = {
    "Current_Age", "POS",     "grade_value", "Starts",      "Min",
    "Gls",         "Ast",     "CrdY",        "CrdR",        "SoT",
    "G_Sh",        "Pass_Att", "Cmp_per",    "TklW",        "Blocks",
    "Int",         "Clr",     "Dribble_Att", "Dribble_Succ_per", "Carries",
    "Targ",        "Rec_per", "League_num",  "Club_num"};

namespace feature {
inline constexpr std::size_t current_age = 0;
inline constexpr std::size_t pos = 1;
inline constexpr std::size_t grade_value = 2;
inline constexpr std::size_t starts = 3;
inline constexpr std::size_t minutes = 4;
inline constexpr std::size_t goals = 5;
inline constexpr std::size_t cmp_per = 12;
inline constexpr std::size_t dribble_succ_per = 18;
inline constexpr std::size_t rec_per = 21;
inline constexpr std::size_t league_num = 22;
inline constexpr std::size_t club_num = 23;
}  // namespace feature

inline std::vector<std::string> default_feature_names() {
  return {kFeatureNames.begin(), kFeatureNames.end()};
}

inline std::size_t feature_index(std::string_view name) {
  auto it = std::find(kFeatureNames.begin(), kFeatureNames.end(), name);
  if (it == kFeatureNames.end()) throw SchemaError("unknown feature '" + std::string(name) + "'");
  return static_cast<std::size_t>(it - kFeatureNames.begin());
}

/// Label <-> code maps for the three categorical columns.
struct Codebook {
  std::map<std::string, int> positions;
  std::map<std::string, int> leagues;
  std::map<std::string, int> clubs;

  static Codebook defaults() {
    Codebook book;
    book.positions = {{"Defenders", 1}, {"Midfields", 2}, {"Strikes", 3}};
    book.leagues = {{"Premier League", 1},
                    {"Bundesliga", 2},
                    {"La Liga", 3},
                    {"League 1", 4},
                    {"Series A", 5}};
    return book;
  }

  static std::string inverse(const std::map<std::string, int>& map, int code) {
    for (const auto& [label, c] : map)
      if (c == code) return label;
    throw EncodingError("no label for code " + std::to_string(code));
  }

  std::string position_label(int code) const { return inverse(positions, code); }
  std::string league_label(int code) const { return inverse(leagues, code); }
  std::string club_label(int code) const { return inverse(clubs, code); }

  static int max_code(const std::map<std::string, int>& map) {
    int m = 0;
    for (const auto& [label, c] : map) m = std::max(m, c);
    return m;
  }
};

struct PlayerRecord {
  std::string player_name;
  std::string club_name;
  std::string league_name;
  int club_code = 0;
  int league_code = 0;
  int position_code = 0;
  std::array<double, kFeatureCount> features{};
  double weekly_gross = 0.0;

  std::span<const double> x() const noexcept { return features; }
};

struct Dataset {
  std::vector<PlayerRecord> records;
  std::vector<std::string> feature_names = default_feature_names();
  int club_count = 0;
  int league_count = 0;

  std::size_t size() const noexcept { return records.size(); }
  bool empty() const noexcept { return records.empty(); }

  /// Recomputes club_count / league_count from the records.
  void refresh_counts() {
    std::set<int> clubs, leagues;
    for (const auto& r : records) {
      clubs.insert(r.club_code);
      leagues.insert(r.league_code);
    }
    club_count = static_cast<int>(clubs.size());
    league_count = static_cast<int>(leagues.size());
  }

  Dataset subset(std::span<const std::size_t> indices) const {
    Dataset out;
    out.feature_names = feature_names;
    out.records.reserve(indices.size());
    for (auto i : indices) out.records.push_back(records.at(i));
    out.refresh_counts();
    return out;
  }

  Eigen::MatrixXd feature_matrix() const {
    Eigen::MatrixXd x(static_cast<Eigen::Index>(records.size()), kFeatureCount);
    for (std::size_t i = 0; i < records.size(); ++i)
      for (std::size_t j = 0; j < kFeatureCount; ++j)
        x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = records[i].features[j];
    return x;
  }

  Eigen::VectorXd targets() const {
    Eigen::VectorXd y(static_cast<Eigen::Index>(records.size()));
    for (std::size_t i = 0; i < records.size(); ++i)
      y(static_cast<Eigen::Index>(i)) = records[i].weekly_gross;
    return y;
  }
};

/// Limits used when validating a record's categorical codes.
struct CodeLimits {
  int positions = 3;
  int leagues = 5;

  static CodeLimits from(const Codebook& book) {
    return {Codebook::max_code(book.positions), Codebook::max_code(book.leagues)};
  }
};

inline void validate_record(const PlayerRecord& r, const CodeLimits& limits = {}) {
  auto fail = [&](const std::string& why) {
    throw ValidationError("record '" + r.player_name + "' (" + r.club_name + "): " + why);
  };
  if (r.player_name.empty()) fail("empty player name");
  for (std::size_t j = 0; j < kFeatureCount; ++j)
    if (!std::isfinite(r.features[j])) fail(std::string(kFeatureNames[j]) + " is not finite");
  if (!std::isfinite(r.weekly_gross)) fail("weekly gross is not finite");
  if (!(r.features[feature::minutes] > 90.0)) fail("Min must exceed 90");
  for (auto j : {feature::cmp_per, feature::dribble_succ_per, feature::rec_per}) {
    double v = r.features[j];
    if (v < 0.0 || v > 100.0) fail(std::string(kFeatureNames[j]) + " outside [0, 100]");
  }
  if (r.position_code < 1 || r.position_code > limits.positions) fail("position code out of range");
  if (r.league_code < 1 || r.league_code > limits.leagues) fail("league code out of range");
  if (r.club_code < 1) fail("club code must be positive");
  if (r.features[feature::pos] != r.position_code) fail("POS feature disagrees with position code");
  if (r.features[feature::league_num] != r.league_code) fail("League_num disagrees with league code");
  if (r.features[feature::club_num] != r.club_code) fail("Club_num disagrees with club code");
}

inline void validate_dataset(const Dataset& d, const CodeLimits& limits = {}) {
  if (d.feature_names != default_feature_names())
    throw ValidationError("dataset feature order differs from the model feature order");
  for (const auto& r : d.records) validate_record(r, limits);
}

}  // namespace salary

#endif  // SALARY_DATASET_HPP
