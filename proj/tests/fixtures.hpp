#ifndef SALARY_TESTS_FIXTURES_HPP
#define SALARY_TESTS_FIXTURES_HPP

#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "salary/csv.hpp"
#include "salary/ingest.hpp"

namespace salary::oracle {

/// One exported season row with plausible defaults; `overrides` replaces
/// individual cells by column name.
inline std::map<std::string, std::string> season_row(const std::string& player, const std::string& club,
                                                     const std::string& league,
                                                     std::map<std::string, std::string> overrides = {}) {
  std::map<std::string, std::string> row = {
      {"PLAYER", player}, {"CLUB", club},         {"LEAGUE", league},      {"POS", "Midfields"},
      {"CURRENT_AGE", "25"}, {"STARTS", "20"},    {"MIN", "1800"},        {"GLS", "4"},
      {"AST", "3"},       {"CRDY", "2"},          {"CRDR", "0"},           {"SOT", "10"},
      {"G_SH", "0.1"},    {"PASS_ATT", "900"},    {"CMP_PER", "80"},       {"TKLW", "10"},
      {"BLOCKS", "5"},    {"INT", "8"},           {"CLR", "12"},           {"DRIBBLE_ATT", "30"},
      {"DRIBBLE_SUCC_PER", "50"}, {"CARRIES", "400"}, {"TARG", "500"},     {"REC_PER", "70"},
      {"LEAGUE_RANK", "2"}, {"UCL_RANK", ""},     {"LEAGUECUP_RANK", "4"}, {"WEEKLY_GROSS", "50000"}};
  for (auto& [k, v] : overrides) row.at(k) = v;
  return row;
}

inline std::string season_csv(const std::vector<std::map<std::string, std::string>>& rows) {
  std::ostringstream out;
  csv::write_row(out, ingest::raw_csv_columns());
  for (const auto& r : rows) {
    csv::Row fields;
    for (const auto& c : ingest::raw_csv_columns()) fields.push_back(r.at(c));
    csv::write_row(out, fields);
  }
  return out.str();
}

inline csv::Table season_table(const std::vector<std::map<std::string, std::string>>& rows) {
  std::istringstream in(season_csv(rows));
  return csv::parse(in);
}

}  // namespace salary::oracle

#endif  // SALARY_TESTS_FIXTURES_HPP
