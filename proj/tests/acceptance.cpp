// Acceptance gate: one PASS/FAIL line per criterion, non-zero exit if any fail.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "oracles.hpp"
#include "salary.hpp"

using namespace salary;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* pattern, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, pattern, a, b, c);
  return buf;
}

std::vector<std::size_t> iota_rows(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), std::size_t{0});
  return v;
}

// 1 -------------------------------------------------------------------------
Outcome split_oracle() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(1001);
  int mismatches = 0;
  double worst_sse = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const int n = std::uniform_int_distribution<int>(1, 50)(rng);
    const int p = std::uniform_int_distribution<int>(1, 5)(rng);
    // Mix of coarse grids (many ties) and continuous unit-scale values; the
    // absolute SSE tolerance presumes SSEs of order one.
    const bool coarse = trial % 2 == 0;
    std::uniform_int_distribution<int> level(0, 5);
    std::normal_distribution<double> z;
    Eigen::MatrixXd x(n, p);
    Eigen::VectorXd y(n);
    std::vector<std::vector<double>> xv(static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(p)));
    std::vector<double> yv(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < p; ++j) xv[i][j] = x(i, j) = coarse ? level(rng) : z(rng);
      yv[i] = y(i) = coarse ? level(rng) : z(rng);
    }
    const auto rows = iota_rows(static_cast<std::size_t>(n));
    const auto got = cart::best_split({x, y, rows}, iota_rows(static_cast<std::size_t>(p)));
    const auto want = oracle::brute_force_split(xv, yv);
    if (got.has_value() != want.has_value()) {
      ++mismatches;
      continue;
    }
    if (!got) continue;
    worst_sse = std::max(worst_sse, std::abs(got->sse - want->sse));
    if (std::abs(got->sse - want->sse) > 1e-9 || got->feature != want->feature || got->threshold != want->threshold)
      ++mismatches;
  }
  const double elapsed = seconds_since(t0);
  return {mismatches == 0 && elapsed < 10.0,
          fmt("%.0f/200 mismatches, max |dSSE| %.2e, %.2f s", mismatches, worst_sse, elapsed)};
}

// 2 -------------------------------------------------------------------------
Outcome tree_interpolation() {
  std::mt19937_64 rng(1002);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int n = std::uniform_int_distribution<int>(2, 80)(rng);
    const int p = std::uniform_int_distribution<int>(1, 6)(rng);
    std::uniform_int_distribution<int> level(0, 3);
    std::normal_distribution<double> z(50000.0, 20000.0);
    std::set<std::vector<double>> seen;
    Eigen::MatrixXd x(n, p);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n;) {
      std::vector<double> row(static_cast<std::size_t>(p));
      for (auto& v : row) v = trial % 2 ? level(rng) : z(rng);
      if (!seen.insert(row).second) {
        if (seen.size() >= static_cast<std::size_t>(std::pow(4, p))) break;
        continue;
      }
      for (int j = 0; j < p; ++j) x(i, j) = row[static_cast<std::size_t>(j)];
      y(i) = z(rng);
      ++i;
    }
    const auto m = static_cast<Eigen::Index>(seen.size());
    Eigen::MatrixXd xs = x.topRows(m);
    Eigen::VectorXd ys = y.head(m);
    if (m < 2) continue;
    const auto tree = cart::grow_tree(xs, ys, forest::ForestParams{}.growth());
    double rss = 0.0, tss = 0.0;
    const double mean = ys.mean();
    for (Eigen::Index i = 0; i < m; ++i) {
      Eigen::RowVectorXd row = xs.row(i);
      const double e = ys(i) - tree.predict(std::span<const double>(row.data(), static_cast<std::size_t>(p)));
      rss += e * e;
      tss += (ys(i) - mean) * (ys(i) - mean);
    }
    if (tss > 0.0) worst = std::max(worst, std::abs(1.0 - (1.0 - rss / tss)));
  }
  return {worst <= 1e-12, fmt("max |R2 - 1| = %.3e over 100 trials", worst)};
}

// 3 -------------------------------------------------------------------------
Outcome forest_degeneracy() {
  std::mt19937_64 rng(1003);
  std::normal_distribution<double> z;
  Eigen::MatrixXd x(150, 5);
  Eigen::VectorXd y(150);
  for (int i = 0; i < 150; ++i) {
    for (int j = 0; j < 5; ++j) x(i, j) = z(rng);
    y(i) = x(i, 0) * 3.0 - x(i, 2) + z(rng);
  }
  forest::ForestParams p;
  p.n_estimators = 1;
  p.bootstrap = false;
  const auto model = forest::fit_forest(x, y, {}, p);
  const auto tree = cart::grow_tree(x, y, p.growth());
  int differ = 0;
  for (int q = 0; q < 1000; ++q) {
    std::vector<double> v(5);
    for (auto& e : v) e = 2.0 * z(rng);
    if (forest::predict_forest(model, v) != cart::predict_tree(tree, v)) ++differ;
  }
  return {differ == 0, fmt("%.0f/1000 query points differ", differ)};
}

// 4 -------------------------------------------------------------------------
Outcome forest_range() {
  std::mt19937_64 rng(1004);
  std::normal_distribution<double> z;
  std::exponential_distribution<double> salary(1.0 / 50000.0);
  Eigen::MatrixXd x(300, 6);
  Eigen::VectorXd y(300);
  for (int i = 0; i < 300; ++i) {
    for (int j = 0; j < 6; ++j) x(i, j) = z(rng);
    y(i) = salary(rng);
  }
  const auto model = forest::fit_forest(x, y, {}, forest::ForestParams{});
  const double lo = y.minCoeff(), hi = y.maxCoeff();
  int outside = 0, negative = 0;
  std::normal_distribution<double> wide(0.0, 4.0);
  for (int q = 0; q < 10000; ++q) {
    std::vector<double> v(6);
    for (auto& e : v) e = wide(rng);
    const double pred = model.predict(v);
    if (pred < lo || pred > hi) ++outside;
    if (pred < 0.0) ++negative;
  }
  return {outside == 0 && negative == 0, fmt("%.0f outside [min, max], %.0f negative of 10000", outside, negative)};
}

// 5 -------------------------------------------------------------------------
Outcome importances() {
  std::mt19937_64 rng(1005);
  std::normal_distribution<double> z;
  Eigen::MatrixXd x(300, 8);
  Eigen::VectorXd y(300);
  for (int i = 0; i < 300; ++i) {
    for (int j = 0; j < 8; ++j) x(i, j) = z(rng);
    y(i) = x(i, 1) + 0.5 * x(i, 4) * x(i, 5) + z(rng);
  }
  forest::ForestParams p;
  p.n_estimators = 50;
  const auto general = forest::fit_forest(x, y, {}, p).importances();
  double sum = 0.0, min = 1.0;
  for (double v : general) {
    sum += v;
    min = std::min(min, v);
  }
  for (int i = 0; i < 300; ++i) y(i) = 10.0 * x(i, 3);
  const auto single = forest::fit_forest(x, y, {}, p).importances();
  const bool ok = min >= 0.0 && std::abs(sum - 1.0) <= 1e-9 && single[3] >= 0.9;
  return {ok, fmt("min %.3g, |sum-1| %.2e, single-signal share %.4f", min, std::abs(sum - 1.0), single[3])};
}

// Shared helpers for the mixed-model criteria --------------------------------

const std::vector<std::string> kEffects = {"Gls", "Ast", "Current_Age"};
const std::vector<double> kBeta = {40000.0, 6000.0, 800.0, 2000.0};

mixed::MixedModelSpec effects_spec() {
  mixed::MixedModelSpec s;
  s.fixed_effects = kEffects;
  return s;
}

std::vector<std::pair<double, double>> g_r2_pairs;  // (marginal, conditional) of every fit

mixed::MixedModelFit fit_and_log(const Dataset& d, const mixed::MixedModelSpec& spec) {
  auto fit = mixed::fit_reml(d, spec);
  g_r2_pairs.emplace_back(fit.r2_marginal, fit.r2_conditional);
  return fit;
}

// 6 -------------------------------------------------------------------------
Outcome reml_recovery() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(1006);
  int covered = 0;
  std::vector<int> per_coefficient(kBeta.size(), 0);
  for (int rep = 0; rep < 100; ++rep) {
    auto truth = oracle::simulate_nested(rng, 5, 20, 20, kEffects, kBeta, 4e6, 9e6, 25e6);
    const auto fit = fit_and_log(truth.data, effects_spec());
    bool all = true;
    for (Eigen::Index k = 0; k < fit.coefficients.size(); ++k) {
      const bool in = std::abs(fit.coefficients(k) - kBeta[static_cast<std::size_t>(k)]) <= 3.0 * fit.std_errors(k);
      per_coefficient[static_cast<std::size_t>(k)] += in;
      all = all && in;
    }
    covered += all;
  }

  // Balanced one-level intercept-only fits against the ANOVA estimators.
  double worst = 0.0;
  for (int rep = 0; rep < 10; ++rep) {
    const int groups = 15 + rep, m = 6;
    std::normal_distribution<double> z;
    std::vector<std::vector<double>> values(static_cast<std::size_t>(groups));
    Eigen::MatrixXd fixed(groups * m, 0);
    Eigen::VectorXd y(groups * m);
    std::vector<int> league(static_cast<std::size_t>(groups * m), 1), club;
    for (int g = 0; g < groups; ++g) {
      const double effect = 3.0 * z(rng);
      for (int i = 0; i < m; ++i) {
        y(g * m + i) = 10.0 + effect + 2.0 * z(rng);
        values[static_cast<std::size_t>(g)].push_back(y(g * m + i));
        club.push_back(g + 1);
      }
    }
    const auto anova = oracle::one_way_anova(values);
    if (!(anova.between_variance > 0.0)) continue;
    mixed::MixedModelSpec spec;
    spec.fixed_effects = {};
    spec.league_intercept = false;
    const auto fit = mixed::fit_reml(mixed::make_design(fixed, y, league, club, {}, spec), spec);
    g_r2_pairs.emplace_back(fit.r2_marginal, fit.r2_conditional);
    worst = std::max({worst, std::abs(fit.intercept() - anova.grand_mean),
                      std::abs(fit.var_club_in_league - anova.between_variance),
                      std::abs(fit.var_residual - anova.within_variance)});
  }
  const double elapsed = seconds_since(t0);
  std::string per;
  for (int c : per_coefficient) per += (per.empty() ? "" : "/") + std::to_string(c);
  return {covered >= 95 && worst <= 1e-6 && elapsed < 60.0,
          fmt("%.0f/100 replications with every coefficient within 3 SE", covered) + " (per coefficient " + per +
              ")" + fmt("; ANOVA max diff %.2e; %.1f s", worst, elapsed)};
}

// 7 -------------------------------------------------------------------------
// League effects are absent by construction: club effects and residuals are
// centred within each league, so every league has the same conditional mean.
Outcome boundary_reml() {
  std::mt19937_64 rng(1007);
  auto truth = oracle::simulate_nested(rng, 5, 20, 20, kEffects, kBeta, 0.0, 9e6, 25e6);
  std::map<int, std::pair<double, int>> noise;
  for (std::size_t i = 0; i < truth.data.size(); ++i) {
    const auto& r = truth.data.records[i];
    double fixed = kBeta[0];
    for (std::size_t k = 0; k < kEffects.size(); ++k) fixed += kBeta[k + 1] * r.features[feature_index(kEffects[k])];
    noise[r.league_code].first += r.weekly_gross - fixed;
    noise[r.league_code].second += 1;
  }
  for (auto& r : truth.data.records) r.weekly_gross -= noise[r.league_code].first / noise[r.league_code].second;
  const auto fit = fit_and_log(truth.data, effects_spec());
  return {fit.var_league <= 1e-6 * fit.var_residual,
          fmt("var_league %.3e, var_residual %.3e, ratio %.2e", fit.var_league, fit.var_residual,
              fit.var_league / fit.var_residual)};
}

// 8 -------------------------------------------------------------------------
Outcome nakagawa() {
  std::mt19937_64 rng(1008);
  // No group structure at all; REML settles both variances on the boundary.
  auto flat = oracle::simulate_nested(rng, 5, 4, 30, kEffects, kBeta, 0.0, 0.0, 25e6);
  const auto spec = effects_spec();
  const auto design = mixed::build_design(flat.data, spec);
  const auto fixed = mixed::fit_fixed_theta(design, spec, {0.0, 0.0});
  g_r2_pairs.emplace_back(fixed.r2_marginal, fixed.r2_conditional);
  const double gap = std::abs(fixed.r2_conditional - fixed.r2_marginal);
  int violations = 0;
  for (const auto& [m, c] : g_r2_pairs) violations += !(c >= m);
  return {violations == 0 && gap <= 1e-8,
          fmt("%.0f fits checked, %.0f with conditional < marginal; zero-variance gap %.2e",
              static_cast<double>(g_r2_pairs.size()), violations, gap)};
}

// 9 -------------------------------------------------------------------------
Outcome interval_coverage() {
  std::mt19937_64 rng(1009);
  int covered = 0, total = 0;
  for (int rep = 0; rep < 40; ++rep) {
    auto truth = oracle::simulate_nested(rng, 5, 10, 10, kEffects, kBeta, 4e6, 9e6, 25e6);
    const auto fit = fit_and_log(truth.data, effects_spec());
    std::vector<std::size_t> pick = iota_rows(truth.data.size());
    std::shuffle(pick.begin(), pick.end(), rng);
    pick.resize(50);
    const auto subset = truth.data.subset(pick);
    const auto intervals = mixed::prediction_interval(fit, subset, 0.90, 1000, 10 + static_cast<std::uint64_t>(rep));
    for (std::size_t i = 0; i < pick.size(); ++i) {
      const double eta = truth.linear_predictor[pick[i]];
      covered += intervals[i].lower <= eta && eta <= intervals[i].upper;
      ++total;
    }
  }
  const double rate = static_cast<double>(covered) / total;
  return {std::abs(rate - 0.90) <= 0.03, fmt("coverage %.4f over %.0f records", rate, total)};
}

// 10 ------------------------------------------------------------------------
Outcome smape_bounds() {
  std::mt19937_64 rng(1010);
  std::exponential_distribution<double> e(1.0 / 50000.0);
  std::bernoulli_distribution zero(0.05);
  int out_of_range = 0, asymmetric = 0;
  std::vector<double> a, b;
  for (int i = 0; i < 10000; ++i) {
    const double x = zero(rng) ? 0.0 : e(rng), y = zero(rng) ? 0.0 : e(rng);
    const double s = evaluate::sape(x, y);
    out_of_range += !(s >= 0.0 && s <= 2.0);
    asymmetric += s != evaluate::sape(y, x);
    a.push_back(x);
    b.push_back(y);
  }
  const double whole = evaluate::smape(a, b), whole_swapped = evaluate::smape(b, a);
  const double edge = evaluate::sape(0.0, 10.0);
  const bool ok = out_of_range == 0 && asymmetric == 0 && whole == whole_swapped && whole >= 0.0 && whole <= 2.0 &&
                  edge == 2.0;
  return {ok, fmt("%.0f out of [0,2], %.0f asymmetric; sape(0,10) = %.17g", out_of_range, asymmetric, edge)};
}

// 11 ------------------------------------------------------------------------
Outcome estimation_partition() {
  std::mt19937_64 rng(1011);
  auto truth = oracle::simulate_nested(rng, 5, 6, 10, kEffects, kBeta, 4e6, 9e6, 25e6);
  for (auto& r : truth.data.records) r.weekly_gross = std::abs(r.weekly_gross);
  const auto fit = mixed::fit_reml(truth.data, effects_spec());
  const auto intervals = mixed::prediction_interval(fit, truth.data, 0.9, 500, 10);
  std::vector<double> pred;
  for (const auto& r : truth.data.records) pred.push_back(std::max(0.0, fit.predict(r)));
  bool ok = true;
  std::string detail;
  for (auto method : {estimate::Method::interval, estimate::Method::smape_threshold}) {
    std::vector<estimate::EstimationLabel> labels;
    if (method == estimate::Method::interval) {
      for (const auto& r : estimate::classify_intervals(truth.data, intervals)) labels.push_back(r.label);
    } else {
      for (const auto& r : estimate::classify_by_threshold(truth.data, pred, std::nullopt)) labels.push_back(r.label);
    }
    const auto s = estimate::summarize(labels, method, 0.0);
    const std::size_t sum = s.count(estimate::EstimationLabel::Normal) +
                            s.count(estimate::EstimationLabel::Overestimation) +
                            s.count(estimate::EstimationLabel::Underestimation);
    ok = ok && sum == truth.data.size() && labels.size() == truth.data.size();
    detail += std::string(estimate::to_string(method)) + " " + std::to_string(sum) + "/" +
              std::to_string(truth.data.size()) + "; ";
  }
  mixed::PredictionInterval ram;
  ram.predicted = 156346.2;
  ram.upper = 181748;
  ram.lower = 131187.2;
  mixed::PredictionInterval dia;
  dia.predicted = 216888.6;
  dia.upper = 244518.6;
  dia.lower = 188808.6;
  const auto l_ram = estimate::classify_by_interval(172500, ram);
  const auto l_dia = estimate::classify_by_interval(103846, dia);
  ok = ok && l_ram == estimate::EstimationLabel::Normal && l_dia == estimate::EstimationLabel::Underestimation;
  detail += "Aaron Ram " + std::string(estimate::to_string(l_ram)) + ", Abdou Dia " +
            std::string(estimate::to_string(l_dia));
  return {ok, detail};
}

// 12 ------------------------------------------------------------------------
Outcome achievement_grade() {
  const bool ten = achievement::total_grade({1, 1, 1}) == 10.0;
  std::mt19937_64 rng(1012);
  std::uniform_int_distribution<int> rank(1, 30), step(1, 10), which(0, 2);
  std::bernoulli_distribution present(0.8);
  int violations = 0;
  for (int i = 0; i < 1000; ++i) {
    achievement::AchievementRanks r;
    if (present(rng)) r.league_rank = rank(rng);
    if (present(rng)) r.ucl_rank = rank(rng);
    if (present(rng)) r.league_cup_rank = rank(rng);
    const double before = achievement::total_grade(r);
    auto worse = r;
    std::optional<int>* slot[3] = {&worse.league_rank, &worse.ucl_rank, &worse.league_cup_rank};
    auto& s = *slot[which(rng)];
    const bool was_present = s.has_value();
    if (was_present) *s += step(rng);
    const double after = achievement::total_grade(worse);
    if (was_present ? !(after < before) : after != before) ++violations;
    // Dropping a present rank (never reaching a ranked stage) never helps.
    auto absent = r;
    absent.league_rank.reset();
    if (achievement::total_grade(absent) > before) ++violations;
  }
  return {ten && violations == 0, fmt("grade(1,1,1) = %.17g; %.0f monotonicity violations in 1000 draws",
                                      achievement::total_grade({1, 1, 1}), violations)};
}

// 13 ------------------------------------------------------------------------
std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome determinism() {
  const auto root = fs::temp_directory_path() / "salary_acceptance_determinism";
  fs::remove_all(root);
  std::string detail;
  bool ok = true;
  for (auto kind : {commands::ModelKind::rf, commands::ModelKind::lmm}) {
    std::vector<std::map<std::string, std::string>> runs;
    for (int run = 0; run < 2; ++run) {
      const auto dir = root / (std::string(commands::to_string(kind)) + std::to_string(run));
      commands::RunConfig cfg;
      cfg.inputs = {std::string(SALARY_DATA_DIR) + "/season_2022-2023.csv"};
      cfg.out_dir = (dir / "train").string();
      cfg.model = kind;
      commands::run_train(cfg);
      cfg.model_file = (dir / "train" / "model.json").string();
      cfg.out_dir = (dir / "estimate").string();
      commands::run_estimate(cfg);
      std::map<std::string, std::string> files;
      for (const auto& e : fs::recursive_directory_iterator(dir))
        if (e.is_regular_file()) files[fs::relative(e.path(), dir).string()] = slurp(e.path());
      runs.push_back(std::move(files));
    }
    const bool same = runs[0] == runs[1] && runs[0].size() >= 6;
    ok = ok && same;
    detail += std::string(commands::to_string(kind)) + ": " + std::to_string(runs[0].size()) + " files " +
              (same ? "identical" : "DIFFER") + "; ";
  }
  fs::remove_all(root);
  return {ok, detail};
}

// 14 ------------------------------------------------------------------------
Outcome cross_validation() {
  int bad = 0;
  for (std::size_t n = 2; n <= 60; ++n)
    for (int k = 2; k <= static_cast<int>(std::min<std::size_t>(n, 12)); ++k) {
      const auto plan = evaluate::kfold_plan(n, k, n * 1000 + static_cast<std::size_t>(k));
      std::vector<int> hits(n, 0);
      std::size_t lo = n, hi = 0;
      for (int f = 0; f < k; ++f) {
        const auto test = plan.test_indices(f);
        for (auto i : test) ++hits[i];
        if (test.size() + plan.train_indices(f).size() != n) ++bad;
        lo = std::min(lo, test.size());
        hi = std::max(hi, test.size());
      }
      for (int h : hits) bad += h != 1;
      bad += hi - lo > 1;
    }

  // Relabel the folds of a plan and compare the mean score.
  std::mt19937_64 rng(1014);
  auto truth = oracle::simulate_nested(rng, 2, 3, 10, kEffects, kBeta, 0.0, 1e6, 4e6);
  auto factory = [](const Dataset& train) {
    forest::ForestParams p;
    p.n_estimators = 10;
    auto model = std::make_shared<forest::ForestModel>(forest::fit_forest(train, p));
    return evaluate::Predictor([model](const PlayerRecord& r) { return model->predict(r.x()); });
  };
  double worst = 0.0;
  for (int trial = 0; trial < 5; ++trial) {
    const auto plan = evaluate::kfold_plan(truth.data.size(), 5, static_cast<std::uint64_t>(trial));
    std::vector<int> relabel = {0, 1, 2, 3, 4};
    std::shuffle(relabel.begin(), relabel.end(), rng);
    auto permuted = plan;
    for (auto& a : permuted.assignments) a = relabel[static_cast<std::size_t>(a)];
    const double a = evaluate::cross_val_score(truth.data, factory, plan, evaluate::rmse_metric).mean;
    const double b = evaluate::cross_val_score(truth.data, factory, permuted, evaluate::rmse_metric).mean;
    worst = std::max(worst, std::abs(a - b) / std::abs(a));
  }
  return {bad == 0 && worst <= 1e-12, fmt("%.0f partition defects; max relative mean change %.2e", bad, worst)};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"split search matches exhaustive oracle", split_oracle},
      {"fully grown tree interpolates unique rows", tree_interpolation},
      {"single unbagged tree forest equals CART", forest_degeneracy},
      {"forest predictions stay within training range", forest_range},
      {"feature importances normalised and concentrated", importances},
      {"REML recovers fixed effects and ANOVA components", reml_recovery},
      {"REML league variance on the boundary", boundary_reml},
      {"conditional R2 >= marginal R2", nakagawa},
      {"90% interval coverage of the linear predictor", interval_coverage},
      {"SMAPE bounds and symmetry", smape_bounds},
      {"estimation labels partition the players", estimation_partition},
      {"achievement grade maximum and monotonicity", achievement_grade},
      {"end-to-end runs are byte-identical", determinism},
      {"fold partitions and relabelling invariance", cross_validation},
  };
  ScopedWarningCapture quiet;
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << "criterion " << (i + 1) << " [" << (o.pass ? "PASS" : "FAIL") << "] " << criteria[i].first << " -- "
              << o.detail << std::endl;
  }
  std::cout << (failed ? std::to_string(failed) + " criteria failed" : std::string("all criteria passed")) << '\n';
  return failed ? 1 : 0;
}
