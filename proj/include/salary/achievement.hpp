#ifndef SALARY_ACHIEVEMENT_HPP
#define SALARY_ACHIEVEMENT_HPP

#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "salary/common.hpp"
#include "salary/csv.hpp"
#include "salary/dataset.hpp"

namespace salary::achievement {

inline constexpr double kLeagueWeight = 4.5;
inline constexpr double kUclWeight = 4.5;
inline constexpr double kLeagueCupWeight = 1.0;

/// Final positions in the three tournaments. An absent rank means the club
/// did not reach a ranked stage and contributes nothing.
struct AchievementRanks {
  std::optional<int> league_rank;
  std::optional<int> ucl_rank;
  std::optional<int> league_cup_rank;
};

/// Weighted reciprocal-rank grade in [0, 10]; 10 only for three titles.
inline double total_grade(const AchievementRanks& ranks) {
  auto term = [](const std::optional<int>& rank, double weight, const char* name) {
    if (!rank) return 0.0;
    if (*rank < 1) throw DomainError(std::string(name) + " rank must be >= 1");
    return weight / static_cast<double>(*rank);
  };
  return term(ranks.league_rank, kLeagueWeight, "league") +
         term(ranks.ucl_rank, kUclWeight, "UCL") +
         term(ranks.league_cup_rank, kLeagueCupWeight, "league cup");
}

/// Parses one rank cell: blank is absent, otherwise a positive integer.
inline std::optional<int> parse_rank(std::string_view text) {
  if (csv::is_blank(text)) return std::nullopt;
  auto value = csv::parse_number(text);
  if (!value) throw DomainError("rank '" + std::string(text) + "' is not a number");
  if (*value != std::floor(*value)) throw DomainError("fractional rank " + std::string(text));
  if (*value < 1.0) throw DomainError("rank must be >= 1, got " + std::string(text));
  return static_cast<int>(*value);
}

/// Sets grade_value on each record. Several rank entries for a player (one per
/// season) are graded separately and averaged.
inline Dataset attach_grades(Dataset dataset,
                             const std::multimap<std::string, AchievementRanks>& ranks_by_player) {
  for (auto& r : dataset.records) {
    auto [lo, hi] = ranks_by_player.equal_range(r.player_name);
    if (lo == hi) throw ValidationError("no achievement ranks for player '" + r.player_name + "'");
    double sum = 0.0;
    int seasons = 0;
    for (auto it = lo; it != hi; ++it, ++seasons) sum += total_grade(it->second);
    r.features[feature::grade_value] = sum / seasons;
  }
  return dataset;
}

}  // namespace salary::achievement

#endif  // SALARY_ACHIEVEMENT_HPP
