#ifndef SALARY_INGEST_HPP
#define SALARY_INGEST_HPP

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <variant>
#include <vector>

#include "salary/achievement.hpp"
#include "salary/common.hpp"
#include "salary/csv.hpp"
#include "salary/dataset.hpp"

namespace salary::ingest {

enum class TableKind { standard, shooting, passing, defensive, possession, salary, merged };

inline std::string_view to_string(TableKind kind) {
  switch (kind) {
    case TableKind::standard: return "standard";
    case TableKind::shooting: return "shooting";
    case TableKind::passing: return "passing";
    case TableKind::defensive: return "defensive";
    case TableKind::possession: return "possession";
    case TableKind::salary: return "salary";
    case TableKind::merged: return "merged";
  }
  return "unknown";
}

// Columns of the exported per-season CSV, in file order.
inline const std::vector<std::string>& raw_csv_columns() {
  static const std::vector<std::string> cols = {
      "PLAYER",      "CLUB",        "LEAGUE",     "POS",          "CURRENT_AGE",
      "STARTS",      "MIN",         "GLS",        "AST",          "CRDY",
      "CRDR",        "SOT",         "G_SH",       "PASS_ATT",     "CMP_PER",
      "TKLW",        "BLOCKS",      "INT",        "CLR",          "DRIBBLE_ATT",
      "DRIBBLE_SUCC_PER", "CARRIES", "TARG",      "REC_PER",      "LEAGUE_RANK",
      "UCL_RANK",    "LEAGUECUP_RANK", "WEEKLY_GROSS"};
  return cols;
}

inline const std::vector<std::string>& kind_columns(TableKind kind) {
  static const std::map<TableKind, std::vector<std::string>> sets = {
      {TableKind::standard,
       {"POS", "CURRENT_AGE", "STARTS", "MIN", "GLS", "AST", "CRDY", "CRDR", "LEAGUE_RANK",
        "UCL_RANK", "LEAGUECUP_RANK"}},
      {TableKind::shooting, {"SOT", "G_SH"}},
      {TableKind::passing, {"PASS_ATT", "CMP_PER"}},
      {TableKind::defensive, {"TKLW", "BLOCKS", "INT", "CLR"}},
      {TableKind::possession, {"DRIBBLE_ATT", "DRIBBLE_SUCC_PER", "CARRIES", "TARG", "REC_PER"}},
      {TableKind::salary, {"WEEKLY_GROSS"}},
      {TableKind::merged,
       {"POS", "CURRENT_AGE", "STARTS", "MIN", "GLS", "AST", "CRDY", "CRDR", "LEAGUE_RANK",
        "UCL_RANK", "LEAGUECUP_RANK", "SOT", "G_SH", "PASS_ATT", "CMP_PER", "TKLW", "BLOCKS",
        "INT", "CLR", "DRIBBLE_ATT", "DRIBBLE_SUCC_PER", "CARRIES", "TARG", "REC_PER",
        "WEEKLY_GROSS", "LEAGUE_NUM", "CLUB_NUM", "GRADE_VALUE"}},
  };
  return sets.at(kind);
}

// Raw numeric column feeding each model feature (grade and codes are derived).
inline const std::map<std::string, std::size_t>& numeric_feature_columns() {
  static const std::map<std::string, std::size_t> cols = {
      {"CURRENT_AGE", 0}, {"STARTS", 3},     {"MIN", 4},          {"GLS", 5},
      {"AST", 6},         {"CRDY", 7},       {"CRDR", 8},         {"SOT", 9},
      {"G_SH", 10},       {"PASS_ATT", 11},  {"CMP_PER", 12},     {"TKLW", 13},
      {"BLOCKS", 14},     {"INT", 15},       {"CLR", 16},         {"DRIBBLE_ATT", 17},
      {"DRIBBLE_SUCC_PER", 18}, {"CARRIES", 19}, {"TARG", 20},    {"REC_PER", 21}};
  return cols;
}

inline const std::set<std::string>& rank_columns() {
  static const std::set<std::string> cols = {"LEAGUE_RANK", "UCL_RANK", "LEAGUECUP_RANK"};
  return cols;
}

using Cell = std::variant<std::monostate, double, std::string>;

struct RawRow {
  std::string player_name;
  std::string club_name;
  std::string league_name;
  std::map<std::string, Cell> values;

  const Cell* find(const std::string& column) const {
    auto it = values.find(column);
    return it == values.end() ? nullptr : &it->second;
  }

  bool operator==(const RawRow&) const = default;
};

struct RawFeatureTable {
  TableKind kind = TableKind::merged;
  std::string season;
  std::vector<std::string> columns;
  std::vector<RawRow> rows;

  bool has_column(std::string_view name) const {
    return std::find(columns.begin(), columns.end(), name) != columns.end();
  }

  bool operator==(const RawFeatureTable&) const = default;
};

inline void validate_table(const RawFeatureTable& table) {
  const auto& allowed = kind_columns(table.kind);
  for (const auto& c : table.columns)
    if (std::find(allowed.begin(), allowed.end(), c) == allowed.end())
      throw SchemaError("column " + c + " not permitted in a " + std::string(to_string(table.kind)) +
                        " table");
  for (const auto& row : table.rows) {
    if (row.player_name.empty())
      throw ValidationError(std::string(to_string(table.kind)) + " table has a row with no player name");
    for (const auto& [column, value] : row.values)
      if (!table.has_column(column))
        throw SchemaError("row for '" + row.player_name + "' has undeclared column " + column);
  }
}

inline std::optional<double> numeric(const Cell* cell) {
  if (!cell) return std::nullopt;
  if (const double* v = std::get_if<double>(cell)) return *v;
  return std::nullopt;
}

using PlayerKey = std::pair<std::string, std::string>;  // (player, club)

inline std::string describe(const PlayerKey& key) { return key.first + " @ " + key.second; }

struct JoinResult {
  RawFeatureTable table;
  std::size_t dropped = 0;            // distinct players missing from at least one table
  std::vector<PlayerKey> dropped_keys;
};

/// Inner join of one season's tables on (player, club). Output rows are sorted
/// by key, so the result does not depend on input table order.
inline JoinResult join_feature_tables(std::vector<RawFeatureTable> tables, const std::string& season) {
  if (tables.empty()) throw JoinError("no tables to join");
  std::sort(tables.begin(), tables.end(),
            [](const auto& a, const auto& b) { return a.kind < b.kind; });
  bool has_salary = false;
  for (std::size_t t = 0; t < tables.size(); ++t) {
    validate_table(tables[t]);
    if (tables[t].season != season)
      throw JoinError("table " + std::string(to_string(tables[t].kind)) + " is for season '" +
                      tables[t].season + "', expected '" + season + "'");
    if (t > 0 && tables[t].kind == tables[t - 1].kind)
      throw JoinError("two " + std::string(to_string(tables[t].kind)) + " tables");
    has_salary = has_salary || tables[t].kind == TableKind::salary;
  }
  if (!has_salary) throw JoinError("salary table is missing");

  std::vector<std::map<PlayerKey, const RawRow*>> indexed(tables.size());
  std::set<PlayerKey> all_keys;
  for (std::size_t t = 0; t < tables.size(); ++t) {
    for (const auto& row : tables[t].rows) {
      PlayerKey key{row.player_name, row.club_name};
      if (!indexed[t].emplace(key, &row).second)
        throw JoinError("duplicate key " + describe(key) + " in " +
                        std::string(to_string(tables[t].kind)) + " table");
      all_keys.insert(key);
    }
  }

  JoinResult result;
  result.table.kind = TableKind::merged;
  result.table.season = season;
  for (const auto& t : tables)
    for (const auto& c : t.columns)
      if (!result.table.has_column(c)) result.table.columns.push_back(c);

  for (const auto& key : all_keys) {
    bool everywhere = std::all_of(indexed.begin(), indexed.end(),
                                  [&](const auto& index) { return index.count(key) > 0; });
    if (!everywhere) {
      ++result.dropped;
      result.dropped_keys.push_back(key);
      continue;
    }
    RawRow merged;
    merged.player_name = key.first;
    merged.club_name = key.second;
    for (const auto& index : indexed) {
      const RawRow* row = index.at(key);
      if (merged.league_name.empty()) merged.league_name = row->league_name;
      for (const auto& [column, value] : row->values) merged.values[column] = value;
    }
    result.table.rows.push_back(std::move(merged));
  }
  return result;
}

/// Keeps players with strictly more than 90 minutes, restricts to the modelling
/// columns, and zero-fills missing or non-finite numeric cells.
inline RawFeatureTable clean_players(const RawFeatureTable& table) {
  if (!table.has_column("MIN")) throw SchemaError("table has no MIN column");
  const auto& keep = kind_columns(TableKind::merged);

  RawFeatureTable out;
  out.kind = table.kind;
  out.season = table.season;
  for (const auto& c : table.columns)
    if (std::find(keep.begin(), keep.end(), c) != keep.end()) out.columns.push_back(c);

  const auto& numeric_cols = numeric_feature_columns();
  for (const auto& row : table.rows) {
    auto minutes = numeric(row.find("MIN"));
    if (!minutes || !std::isfinite(*minutes) || !(*minutes > 90.0)) continue;

    RawRow kept{row.player_name, row.club_name, row.league_name, {}};
    for (const auto& c : out.columns) {
      const Cell* cell = row.find(c);
      const bool numeric_column = numeric_cols.count(c) > 0 || c == "WEEKLY_GROSS";
      if (numeric_column) {
        auto v = numeric(cell);
        if (!v || !std::isfinite(*v)) {
          // Zero denominators (e.g. goals per shot with no shots) land here too.
          warn("player '" + row.player_name + "' (" + table.season + "): " + c +
               " missing or not finite, set to 0");
          kept.values[c] = 0.0;
          continue;
        }
      }
      if (cell) kept.values[c] = *cell;
    }
    out.rows.push_back(std::move(kept));
  }
  if (out.rows.empty() && !table.rows.empty())
    warn("season '" + table.season + "': no player has more than 90 minutes");
  return out;
}

/// Club codes 1..N in ascending alphabetical order of club name.
inline std::map<std::string, int> club_codes(const std::vector<RawFeatureTable>& tables) {
  std::set<std::string> names;
  for (const auto& t : tables)
    for (const auto& r : t.rows) names.insert(r.club_name);
  std::map<std::string, int> codes;
  int next = 1;
  for (const auto& n : names) codes[n] = next++;
  return codes;
}

struct EncodeResult {
  RawFeatureTable table;
  Codebook codebook;
};

/// Replaces POS text with its code and adds LEAGUE_NUM / CLUB_NUM columns.
/// When `labels.clubs` is empty, clubs are coded alphabetically from this table.
inline EncodeResult encode_categoricals(const RawFeatureTable& table,
                                        Codebook labels = Codebook::defaults()) {
  if (labels.clubs.empty()) labels.clubs = club_codes({table});

  std::set<std::string> unknown_positions, unknown_leagues, unknown_clubs;
  EncodeResult result{table, labels};
  auto& out = result.table;
  for (const char* c : {"POS", "LEAGUE_NUM", "CLUB_NUM"})
    if (!out.has_column(c)) out.columns.push_back(c);

  for (auto& row : out.rows) {
    const Cell* pos = row.find("POS");
    const std::string* label = pos ? std::get_if<std::string>(pos) : nullptr;
    if (!label) throw EncodingError("player '" + row.player_name + "' has no position label");
    auto p = labels.positions.find(*label);
    if (p == labels.positions.end()) unknown_positions.insert(*label);
    else row.values["POS"] = static_cast<double>(p->second);

    auto l = labels.leagues.find(row.league_name);
    if (l == labels.leagues.end()) unknown_leagues.insert(row.league_name);
    else row.values["LEAGUE_NUM"] = static_cast<double>(l->second);

    auto c = labels.clubs.find(row.club_name);
    if (c == labels.clubs.end()) unknown_clubs.insert(row.club_name);
    else row.values["CLUB_NUM"] = static_cast<double>(c->second);
  }

  auto list = [](const std::set<std::string>& s) {
    std::string joined;
    for (const auto& v : s) joined += (joined.empty() ? "'" : ", '") + v + "'";
    return joined;
  };
  std::string problems;
  if (!unknown_positions.empty()) problems += "unknown position label(s) " + list(unknown_positions);
  if (!unknown_leagues.empty())
    problems += (problems.empty() ? "" : "; ") + std::string("unknown league label(s) ") + list(unknown_leagues);
  if (!unknown_clubs.empty())
    problems += (problems.empty() ? "" : "; ") + std::string("unknown club label(s) ") + list(unknown_clubs);
  if (!problems.empty()) throw EncodingError(problems);
  return result;
}

/// Adds a GRADE_VALUE column computed from the three rank columns.
inline RawFeatureTable attach_season_grades(RawFeatureTable table) {
  if (!table.has_column("GRADE_VALUE")) table.columns.push_back("GRADE_VALUE");
  for (auto& row : table.rows) {
    auto rank = [&](const char* column) -> std::optional<int> {
      const Cell* cell = row.find(column);
      if (!cell || std::holds_alternative<std::monostate>(*cell)) return std::nullopt;
      if (const double* v = std::get_if<double>(cell)) return achievement::parse_rank(csv::format_number(*v));
      return achievement::parse_rank(std::get<std::string>(*cell));
    };
    achievement::AchievementRanks ranks{rank("LEAGUE_RANK"), rank("UCL_RANK"), rank("LEAGUECUP_RANK")};
    row.values["GRADE_VALUE"] = achievement::total_grade(ranks);
  }
  return table;
}

/// Collapses 1-3 cleaned, encoded seasons (oldest first) into one record per
/// player. Numeric features and salary are averaged over the seasons a player
/// appears in; position, league and club come from the latest such season.
///
/// Seasons are matched on (player, club); a player whose club changed is
/// matched on name alone when that name is unique in both seasons.
inline Dataset average_seasons(const std::vector<RawFeatureTable>& per_season,
                               const CodeLimits& limits = {}) {
  if (per_season.empty()) throw ValidationError("no seasons to average");
  if (per_season.size() > 3) warn("averaging more than three seasons");

  struct Accumulator {
    PlayerRecord latest;
    std::array<double, kFeatureCount> sums{};
    double gross_sum = 0.0;
    int seasons = 0;
  };
  std::vector<Accumulator> players;
  std::map<PlayerKey, std::size_t> by_key;

  for (auto season = per_season.rbegin(); season != per_season.rend(); ++season) {
    const RawFeatureTable& raw =
        season->has_column("GRADE_VALUE") ? *season : attach_season_grades(*season);
    for (const char* c : {"LEAGUE_NUM", "CLUB_NUM", "POS"})
      if (!raw.has_column(c))
        throw SchemaError("season '" + raw.season + "' is not encoded (no " + c + ")");

    std::map<std::string, int> name_count_here;
    for (const auto& r : raw.rows) ++name_count_here[r.player_name];
    std::map<std::string, std::vector<std::size_t>> known_by_name;
    for (const auto& [key, idx] : by_key) known_by_name[key.first].push_back(idx);

    std::vector<std::pair<std::size_t, const RawRow*>> matched;
    std::vector<const RawRow*> fresh;
    for (const auto& r : raw.rows) {
      auto exact = by_key.find({r.player_name, r.club_name});
      if (exact != by_key.end()) {
        matched.emplace_back(exact->second, &r);
        continue;
      }
      auto named = known_by_name.find(r.player_name);
      if (named != known_by_name.end() && named->second.size() == 1 &&
          name_count_here[r.player_name] == 1) {
        matched.emplace_back(named->second.front(), &r);
        continue;
      }
      fresh.push_back(&r);
    }

    auto value_of = [&](const RawRow& r, const std::string& column) {
      auto v = numeric(r.find(column));
      if (!v) throw SchemaError("player '" + r.player_name + "' season '" + raw.season +
                                "' has no numeric " + column);
      return *v;
    };
    auto accumulate = [&](Accumulator& acc, const RawRow& r) {
      for (const auto& [column, j] : numeric_feature_columns()) acc.sums[j] += value_of(r, column);
      acc.sums[feature::grade_value] += value_of(r, "GRADE_VALUE");
      acc.gross_sum += value_of(r, "WEEKLY_GROSS");
      ++acc.seasons;
    };

    for (auto [idx, row] : matched) accumulate(players[idx], *row);
    for (const RawRow* row : fresh) {
      Accumulator acc;
      acc.latest.player_name = row->player_name;
      acc.latest.club_name = row->club_name;
      acc.latest.league_name = row->league_name;
      acc.latest.position_code = static_cast<int>(value_of(*row, "POS"));
      acc.latest.league_code = static_cast<int>(value_of(*row, "LEAGUE_NUM"));
      acc.latest.club_code = static_cast<int>(value_of(*row, "CLUB_NUM"));
      accumulate(acc, *row);
      by_key[{row->player_name, row->club_name}] = players.size();
      players.push_back(std::move(acc));
    }
  }

  Dataset dataset;
  dataset.records.reserve(players.size());
  for (auto& acc : players) {
    PlayerRecord r = std::move(acc.latest);
    for (std::size_t j = 0; j < kFeatureCount; ++j) r.features[j] = acc.sums[j] / acc.seasons;
    r.features[feature::pos] = r.position_code;
    r.features[feature::league_num] = r.league_code;
    r.features[feature::club_num] = r.club_code;
    r.weekly_gross = acc.gross_sum / acc.seasons;
    dataset.records.push_back(std::move(r));
  }
  std::sort(dataset.records.begin(), dataset.records.end(), [](const auto& a, const auto& b) {
    return std::tie(a.player_name, a.club_name) < std::tie(b.player_name, b.club_name);
  });
  dataset.refresh_counts();
  validate_dataset(dataset, limits);
  return dataset;
}

// ---------------------------------------------------------------------------
// File formats
// ---------------------------------------------------------------------------

/// Reads a label/code codebook. Labels carry a category prefix:
/// `position:Defenders,1`, `league:Premier League,1`, `club:Arsenal,4`.
/// Categories present in the file replace the defaults for that category.
inline Codebook read_codebook(std::istream& in) {
  csv::Table t = csv::parse(in);
  if (t.header.size() != 2) throw ParseError("codebook must have two columns (label, code)", 1);
  Codebook book = Codebook::defaults();
  Codebook loaded;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& label = t.rows[i][0];
    auto code = csv::parse_number(t.rows[i][1]);
    const auto line = t.line_numbers[i];
    if (!code || *code < 1 || *code != std::floor(*code))
      throw ParseError("code must be a positive integer", line);
    auto colon = label.find(':');
    if (colon == std::string::npos) throw ParseError("label needs a category prefix", line);
    std::string category = label.substr(0, colon);
    std::string name = label.substr(colon + 1);
    int c = static_cast<int>(*code);
    if (category == "position") loaded.positions[name] = c;
    else if (category == "league") loaded.leagues[name] = c;
    else if (category == "club") loaded.clubs[name] = c;
    else throw ParseError("unknown category '" + category + "'", line);
  }
  if (!loaded.positions.empty()) book.positions = loaded.positions;
  if (!loaded.leagues.empty()) book.leagues = loaded.leagues;
  book.clubs = loaded.clubs;
  return book;
}

inline Codebook read_codebook_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open codebook " + path);
  return read_codebook(in);
}

/// Splits one exported season CSV into the per-source tables it was assembled
/// from. A blank WEEKLY_GROSS means the player had no salary entry.
inline std::vector<RawFeatureTable> split_season_csv(const csv::Table& file, const std::string& season) {
  const auto& expected = raw_csv_columns();
  for (const auto& c : expected)
    if (!file.column(c)) throw SchemaError("season '" + season + "': missing column " + c);
  for (const auto& c : file.header)
    if (std::find(expected.begin(), expected.end(), c) == expected.end())
      throw SchemaError("season '" + season + "': unexpected column " + c);

  const std::vector<TableKind> kinds = {TableKind::standard, TableKind::shooting, TableKind::passing,
                                        TableKind::defensive, TableKind::possession, TableKind::salary};
  std::vector<RawFeatureTable> tables;
  for (auto k : kinds) tables.push_back({k, season, kind_columns(k), {}});

  const std::size_t player_col = *file.column("PLAYER");
  const std::size_t club_col = *file.column("CLUB");
  const std::size_t league_col = *file.column("LEAGUE");
  for (std::size_t i = 0; i < file.rows.size(); ++i) {
    const auto& fields = file.rows[i];
    const auto line = file.line_numbers[i];
    if (csv::is_blank(fields[player_col])) throw ParseError("empty PLAYER", line);
    for (auto& table : tables) {
      RawRow row{fields[player_col], fields[club_col], fields[league_col], {}};
      bool present = true;
      for (const auto& c : table.columns) {
        const std::string& text = fields[*file.column(c)];
        if (c == "POS") {
          row.values[c] = text;
        } else if (rank_columns().count(c)) {
          try {
            auto r = achievement::parse_rank(text);
            row.values[c] = r ? Cell{static_cast<double>(*r)} : Cell{};
          } catch (const DomainError& e) {
            throw ParseError(c + ": " + e.what(), line);
          }
        } else if (csv::is_blank(text)) {
          row.values[c] = std::monostate{};
          if (table.kind == TableKind::salary) present = false;
        } else {
          auto v = csv::parse_number(text);
          if (!v) throw ParseError(c + " value '" + text + "' is not numeric", line);
          row.values[c] = *v;
        }
      }
      if (present) table.rows.push_back(std::move(row));
    }
  }
  return tables;
}

struct SeasonProvenance {
  std::string season;
  std::size_t input_rows = 0;
  std::size_t join_dropped = 0;
  std::size_t minutes_dropped = 0;
  std::size_t retained = 0;
};

struct IngestResult {
  Dataset dataset;
  Codebook codebook;
  std::vector<SeasonProvenance> provenance;
};

/// Full pipeline over exported season files, oldest first.
inline IngestResult ingest_seasons(const std::vector<std::pair<std::string, csv::Table>>& seasons,
                                   const Codebook& labels = Codebook::defaults()) {
  if (seasons.empty()) throw ValidationError("no season files given");
  IngestResult result;
  std::vector<RawFeatureTable> cleaned;
  for (const auto& [name, file] : seasons) {
    SeasonProvenance prov{name, file.rows.size()};
    auto joined = join_feature_tables(split_season_csv(file, name), name);
    prov.join_dropped = joined.dropped;
    auto clean = clean_players(joined.table);
    prov.minutes_dropped = joined.table.rows.size() - clean.rows.size();
    prov.retained = clean.rows.size();
    cleaned.push_back(std::move(clean));
    result.provenance.push_back(prov);
  }
  Codebook book = labels;
  if (book.clubs.empty()) book.clubs = club_codes(cleaned);
  std::vector<RawFeatureTable> encoded;
  for (const auto& t : cleaned) encoded.push_back(attach_season_grades(encode_categoricals(t, book).table));
  result.dataset = average_seasons(encoded, CodeLimits::from(book));
  result.codebook = book;
  return result;
}

// Processed dataset file: identity columns, the 24 model features, salary.
inline std::vector<std::string> dataset_csv_columns() {
  std::vector<std::string> cols = {"PLAYER", "CLUB", "LEAGUE"};
  for (auto n : kFeatureNames) cols.emplace_back(n);
  cols.emplace_back("WEEKLY_GROSS");
  return cols;
}

inline void write_dataset(std::ostream& out, const Dataset& d) {
  csv::write_row(out, dataset_csv_columns());
  for (const auto& r : d.records) {
    csv::Row row = {r.player_name, r.club_name, r.league_name};
    for (double v : r.features) row.push_back(csv::format_number(v));
    row.push_back(csv::format_number(r.weekly_gross));
    csv::write_row(out, row);
  }
}

inline Dataset parse_dataset(const csv::Table& file, const CodeLimits& limits = {}) {
  if (file.header != dataset_csv_columns())
    throw SchemaError("header does not match the processed dataset layout");
  Dataset d;
  for (std::size_t i = 0; i < file.rows.size(); ++i) {
    const auto& f = file.rows[i];
    const auto line = file.line_numbers[i];
    PlayerRecord r;
    r.player_name = f[0];
    r.club_name = f[1];
    r.league_name = f[2];
    for (std::size_t j = 0; j <= kFeatureCount; ++j) {
      auto v = csv::parse_number(f[3 + j]);
      if (!v) throw ParseError(file.header[3 + j] + " value '" + f[3 + j] + "' is not numeric", line);
      if (j < kFeatureCount) r.features[j] = *v;
      else r.weekly_gross = *v;
    }
    auto as_code = [&](std::size_t j) {
      double v = r.features[j];
      if (v != std::floor(v)) throw ParseError(std::string(kFeatureNames[j]) + " must be an integer code", line);
      return static_cast<int>(v);
    };
    r.position_code = as_code(feature::pos);
    r.league_code = as_code(feature::league_num);
    r.club_code = as_code(feature::club_num);
    d.records.push_back(std::move(r));
  }
  d.refresh_counts();
  validate_dataset(d, limits);

  std::map<int, int> club_league;
  for (const auto& r : d.records) {
    auto [it, inserted] = club_league.emplace(r.club_code, r.league_code);
    if (!inserted && it->second != r.league_code)
      throw ValidationError("record '" + r.player_name + "': club " + std::to_string(r.club_code) +
                            " appears in two leagues");
  }
  return d;
}

/// Loads either a processed dataset CSV or a single exported season CSV (which
/// is run through the ingest pipeline with the given codebook).
inline Dataset load_dataset(const std::string& path, const Codebook& labels = Codebook::defaults()) {
  csv::Table file = csv::read_file(path);
  if (file.header == dataset_csv_columns()) return parse_dataset(file, CodeLimits::from(labels));
  std::set<std::string> got(file.header.begin(), file.header.end());
  std::set<std::string> raw(raw_csv_columns().begin(), raw_csv_columns().end());
  if (got == raw && got.size() == file.header.size())
    return ingest_seasons({{path, file}}, labels).dataset;
  throw SchemaError(path + ": header matches neither the processed dataset nor the season export layout");
}

}  // namespace salary::ingest

#endif  // SALARY_INGEST_HPP
