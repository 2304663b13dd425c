#ifndef SALARY_MIXEDMODEL_HPP
#define SALARY_MIXEDMODEL_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numbers>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "salary/common.hpp"
#include "salary/dataset.hpp"

namespace salary::mixed {

inline std::vector<std::string> default_fixed_effects() {
  return {"Current_Age", "POS",     "grade_value", "Starts",      "Min",
          "Gls",         "Ast",     "CrdY",        "CrdR",        "SoT",
          "G_Sh",        "Pass_Att", "Cmp_per",    "TklW",        "Blocks",
          "Int",         "Clr",     "Dribble_Att", "Dribble_Succ_per", "Carries",
          "Targ",        "Rec_per"};
}

/// Weekly salary ~ fixed effects + (1 | league / club). Either random
/// intercept can be switched off.
struct MixedModelSpec {
  std::string response = "WEEKLY_GROSS";
  std::vector<std::string> fixed_effects = default_fixed_effects();
  bool league_intercept = true;
  bool club_intercept = true;

  int variance_component_count() const { return int{league_intercept} + int{club_intercept} + 1; }
  bool operator==(const MixedModelSpec&) const = default;
};

inline constexpr const char* kInterceptName = "(Intercept)";

struct Design {
  Eigen::MatrixXd x;        // n x p, first column is the intercept
  Eigen::MatrixXd z_league; // n x L indicators (L = 0 when the level is off)
  Eigen::MatrixXd z_club;   // n x C indicators
  Eigen::VectorXd y;
  std::vector<std::string> column_names;
  std::vector<int> league_codes;  // code of each z_league column
  std::vector<int> club_codes;    // code of each z_club column

  Eigen::Index n() const { return x.rows(); }
  Eigen::Index p() const { return x.cols(); }
  Eigen::Index q() const { return z_league.cols() + z_club.cols(); }

  Eigen::MatrixXd z() const {
    Eigen::MatrixXd out(n(), q());
    out << z_league, z_club;
    return out;
  }
};

/// Builds the design from explicit columns. `league_of_row` and `club_of_row`
/// hold group codes; each club must sit in exactly one league.
inline Design make_design(const Eigen::MatrixXd& fixed, const Eigen::VectorXd& y,
                          const std::vector<int>& league_of_row, const std::vector<int>& club_of_row,
                          std::vector<std::string> fixed_names, const MixedModelSpec& spec) {
  const Eigen::Index n = fixed.rows();
  if (n == 0) throw DomainError("design needs at least one observation");
  if (y.size() != n || static_cast<Eigen::Index>(league_of_row.size()) != n ||
      static_cast<Eigen::Index>(club_of_row.size()) != n)
    throw DimensionError("design inputs differ in length");
  if (static_cast<Eigen::Index>(fixed_names.size()) != fixed.cols())
    throw DimensionError("fixed-effect name count does not match columns");

  std::map<int, int> league_of_club;
  for (Eigen::Index i = 0; i < n; ++i) {
    auto [it, inserted] = league_of_club.emplace(club_of_row[i], league_of_row[i]);
    if (!inserted && it->second != league_of_row[i])
      throw ValidationError("club " + std::to_string(club_of_row[i]) + " appears under leagues " +
                            std::to_string(it->second) + " and " + std::to_string(league_of_row[i]));
  }

  Design d;
  d.y = y;
  d.x.resize(n, fixed.cols() + 1);
  d.x.col(0).setOnes();
  d.x.rightCols(fixed.cols()) = fixed;
  d.column_names.push_back(kInterceptName);
  for (auto& name : fixed_names) d.column_names.push_back(std::move(name));

  auto indicators = [n](const std::vector<int>& codes_of_row, std::vector<int>& codes) {
    std::map<int, Eigen::Index> column;
    for (int c : codes_of_row) column.emplace(c, 0);
    Eigen::Index k = 0;
    for (auto& [code, col] : column) {
      col = k++;
      codes.push_back(code);
    }
    Eigen::MatrixXd z = Eigen::MatrixXd::Zero(n, k);
    for (Eigen::Index i = 0; i < n; ++i) z(i, column.at(codes_of_row[i])) = 1.0;
    return z;
  };
  if (spec.league_intercept) d.z_league = indicators(league_of_row, d.league_codes);
  else d.z_league.resize(n, 0);
  if (spec.club_intercept) d.z_club = indicators(club_of_row, d.club_codes);
  else d.z_club.resize(n, 0);
  return d;
}

inline Design build_design(const Dataset& dataset, const MixedModelSpec& spec) {
  if (dataset.empty()) throw DomainError("design needs at least one observation");
  if (spec.response != "WEEKLY_GROSS") throw SchemaError("unsupported response '" + spec.response + "'");
  std::vector<std::size_t> columns;
  for (const auto& name : spec.fixed_effects) columns.push_back(feature_index(name));

  const auto n = static_cast<Eigen::Index>(dataset.size());
  Eigen::MatrixXd fixed(n, static_cast<Eigen::Index>(columns.size()));
  Eigen::VectorXd y(n);
  std::vector<int> leagues, clubs;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& r = dataset.records[static_cast<std::size_t>(i)];
    for (std::size_t k = 0; k < columns.size(); ++k) fixed(i, static_cast<Eigen::Index>(k)) = r.features[columns[k]];
    y(i) = r.weekly_gross;
    leagues.push_back(r.league_code);
    clubs.push_back(r.club_code);
  }
  return make_design(fixed, y, leagues, clubs, spec.fixed_effects, spec);
}

/// Variance ratios (group variance / residual variance).
struct Theta {
  double league = 0.0;
  double club = 0.0;
  bool operator==(const Theta&) const = default;
};

class FitError : public Error {
 public:
  FitError(const std::string& what, Theta best_theta, double best_criterion, int iterations)
      : Error(what), best_theta(best_theta), best_criterion(best_criterion), iterations(iterations) {}
  Theta best_theta;
  double best_criterion;
  int iterations;
};

namespace detail {

/// Cross products of a design with the fixed columns centred and scaled.
/// Column j >= 1 of the working design is (x_j - mean_j) / scale_j.
struct Workspace {
  Eigen::Index n = 0, p = 0, q = 0, n_league = 0;
  Eigen::MatrixXd to_original;  // p x p: beta = to_original * beta_working
  double log_det_to_original = 0.0;
  Eigen::MatrixXd xtx, ztz, ztx;
  Eigen::VectorXd xty, zty;
  double yty = 0.0;
};

inline std::vector<std::size_t> collinear_columns(const Eigen::MatrixXd& xs) {
  std::vector<Eigen::VectorXd> basis;
  std::vector<std::size_t> bad;
  for (Eigen::Index j = 0; j < xs.cols(); ++j) {
    Eigen::VectorXd v = xs.col(j);
    const double norm = v.norm();
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& b : basis) v -= b.dot(v) * b;
    if (norm == 0.0 || v.norm() <= 1e-9 * norm) {
      bad.push_back(static_cast<std::size_t>(j));
      continue;
    }
    basis.push_back(v / v.norm());
  }
  return bad;
}

inline Workspace prepare(const Design& d) {
  Workspace w;
  w.n = d.n();
  w.p = d.p();
  w.q = d.q();
  w.n_league = d.z_league.cols();

  Eigen::MatrixXd xs = d.x;
  Eigen::MatrixXd to_original = Eigen::MatrixXd::Identity(w.p, w.p);
  for (Eigen::Index j = 1; j < w.p; ++j) {
    const double mean = d.x.col(j).mean();
    const double scale = std::sqrt((d.x.col(j).array() - mean).square().sum() / static_cast<double>(w.n));
    if (!(scale > 0.0)) {
      xs.col(j).setZero();
      continue;
    }
    xs.col(j) = (d.x.col(j).array() - mean) / scale;
    to_original(j, j) = 1.0 / scale;
    to_original(0, j) = -mean / scale;
    w.log_det_to_original -= std::log(scale);
  }
  auto bad = collinear_columns(xs);
  if (!bad.empty()) {
    std::string names;
    for (auto j : bad) names += (names.empty() ? "" : ", ") + d.column_names[j];
    throw NumericError("fixed-effect design is rank deficient; collinear column(s): " + names);
  }
  w.to_original = std::move(to_original);

  const Eigen::MatrixXd z = d.z();
  w.xtx = xs.transpose() * xs;
  w.ztz = z.transpose() * z;
  w.ztx = z.transpose() * xs;
  w.xty = xs.transpose() * d.y;
  w.zty = z.transpose() * d.y;
  w.yty = d.y.squaredNorm();
  return w;
}

/// Penalised least squares solution at fixed theta.
struct Solution {
  double criterion = 0.0;         // -2 restricted log-likelihood
  double penalized_rss = 0.0;
  Eigen::VectorXd beta_working;   // fixed effects on the working scale
  Eigen::VectorXd u;              // spherical random effects; b = lambda .* u
  Eigen::VectorXd lambda;         // diagonal relative covariance factor
  Eigen::MatrixXd rx_cross;       // X' V^-1 X on the working scale (V scaled by sigma^2)
};

inline Eigen::VectorXd lambda_of(const Workspace& w, const Theta& theta) {
  Eigen::VectorXd lambda(w.q);
  for (Eigen::Index k = 0; k < w.q; ++k) lambda(k) = std::sqrt(k < w.n_league ? theta.league : theta.club);
  return lambda;
}

inline Solution solve(const Workspace& w, const Theta& theta) {
  if (!(theta.league >= 0.0) || !(theta.club >= 0.0)) throw DomainError("variance ratios must be >= 0");
  Solution s;
  s.lambda = lambda_of(w, theta);
  const auto& lam = s.lambda;

  Eigen::MatrixXd a = lam.asDiagonal() * w.ztz * lam.asDiagonal();
  a.diagonal().array() += 1.0;
  Eigen::LLT<Eigen::MatrixXd> l_theta(a);
  if (l_theta.info() != Eigen::Success) throw NumericError("random-effects system is not positive definite");
  double log_det_l = 0.0;
  for (Eigen::Index k = 0; k < w.q; ++k) log_det_l += 2.0 * std::log(l_theta.matrixL()(k, k));

  const Eigen::VectorXd cu = l_theta.matrixL().solve(lam.asDiagonal() * w.zty);
  const Eigen::MatrixXd cx = l_theta.matrixL().solve(lam.asDiagonal() * w.ztx);
  s.rx_cross = w.xtx - cx.transpose() * cx;
  Eigen::LLT<Eigen::MatrixXd> rx(s.rx_cross);
  if (rx.info() != Eigen::Success) throw NumericError("fixed-effects system is not positive definite");
  double log_det_rx = 0.0;
  for (Eigen::Index k = 0; k < w.p; ++k) log_det_rx += 2.0 * std::log(rx.matrixL()(k, k));

  const Eigen::VectorXd rhs = w.xty - cx.transpose() * cu;
  s.beta_working = rx.solve(rhs);
  s.penalized_rss = w.yty - cu.squaredNorm() - s.beta_working.dot(rhs);
  if (!(s.penalized_rss > 0.0)) throw NumericError("penalised residual sum of squares is not positive");
  s.u = l_theta.matrixU().solve(cu - cx * s.beta_working);

  const double dof = static_cast<double>(w.n - w.p);
  // Reported on the original fixed-effect scale.
  log_det_rx -= 2.0 * w.log_det_to_original;
  s.criterion = log_det_l + log_det_rx +
                dof * (1.0 + std::log(2.0 * std::numbers::pi * s.penalized_rss / dof));
  if (!std::isfinite(s.criterion)) throw NumericError("restricted likelihood is not finite");
  return s;
}

}  // namespace detail

/// -2 x restricted log-likelihood with the residual variance and fixed
/// effects profiled out.
inline double reml_criterion(const Theta& theta, const Design& design) {
  if (design.n() <= design.p()) throw DomainError("need more observations than fixed effects");
  return detail::solve(detail::prepare(design), theta).criterion;
}

struct OptimizerSettings {
  double ratio_floor = 1e-10;
  double ratio_ceiling = 1e8;
  double relative_tolerance = 1e-8;  // criterion spread across the simplex
  double step_tolerance = 1e-7;      // simplex diameter in log-ratio units
  int max_iterations = 500;
  int max_restarts = 5;
  bool operator==(const OptimizerSettings&) const = default;
};

struct MixedModelFit {
  MixedModelSpec spec;
  std::vector<std::string> coefficient_names;  // "(Intercept)" first
  Eigen::VectorXd coefficients;
  Eigen::VectorXd std_errors;
  Eigen::VectorXd t_values;
  Eigen::VectorXd p_values;
  double var_league = 0.0;
  double var_club_in_league = 0.0;
  double var_residual = 0.0;
  std::map<int, double> league_blups;
  std::map<int, double> club_blups;
  double reml_loglik = 0.0;
  Theta theta;
  int iterations = 0;
  int n_obs = 0, n_clubs = 0, n_leagues = 0;
  double r2_marginal = 0.0;
  double r2_conditional = 0.0;

  // Joint normal used for simulation: mean and covariance of
  // (coefficients, league effects, club effects) in that order.
  Eigen::VectorXd sim_mean;
  Eigen::MatrixXd sim_covariance;
  std::vector<int> sim_league_codes;
  std::vector<int> sim_club_codes;

  double intercept() const { return coefficients(0); }

  std::size_t parameter_count() const {
    return static_cast<std::size_t>(coefficients.size()) + static_cast<std::size_t>(spec.variance_component_count());
  }

  /// Fixed part plus the group effects of the record's league and club
  /// (zero for groups not seen in training).
  double predict(const PlayerRecord& r) const {
    double v = coefficients(0);
    for (std::size_t k = 0; k < spec.fixed_effects.size(); ++k)
      v += coefficients(static_cast<Eigen::Index>(k + 1)) * r.features[feature_index(spec.fixed_effects[k])];
    if (auto it = league_blups.find(r.league_code); it != league_blups.end()) v += it->second;
    if (auto it = club_blups.find(r.club_code); it != club_blups.end()) v += it->second;
    return v;
  }
};

namespace detail {

struct Optimum {
  Theta theta;
  double criterion;
  int iterations;
};

/// Nelder-Mead over log variance ratios, projected onto the box
/// [log floor, log ceiling]; restarted from the incumbent until a restart
/// brings no improvement.
inline Optimum minimize(const Workspace& w, const MixedModelSpec& spec, const OptimizerSettings& opt) {
  const double lo = std::log(opt.ratio_floor), hi = std::log(opt.ratio_ceiling);
  const int dims = int{spec.league_intercept} + int{spec.club_intercept};

  auto to_theta = [&](const Eigen::VectorXd& phi) {
    Theta t;
    int k = 0;
    if (spec.league_intercept) t.league = std::exp(phi(k++));
    if (spec.club_intercept) t.club = std::exp(phi(k++));
    return t;
  };
  int evaluations = 0;
  auto f = [&](const Eigen::VectorXd& phi) {
    ++evaluations;
    return solve(w, to_theta(phi)).criterion;
  };
  auto project = [&](Eigen::VectorXd phi) {
    for (Eigen::Index k = 0; k < phi.size(); ++k) phi(k) = std::clamp(phi(k), lo, hi);
    return phi;
  };

  if (dims == 0) return {Theta{}, f(Eigen::VectorXd()), 0};

  Eigen::VectorXd best = Eigen::VectorXd::Zero(dims);
  double best_f = f(best);
  int iterations = 0;
  for (int restart = 0; restart <= opt.max_restarts; ++restart) {
    std::vector<Eigen::VectorXd> simplex{best};
    std::vector<double> values{best_f};
    for (int k = 0; k < dims; ++k) {
      Eigen::VectorXd v = best;
      v(k) += (v(k) + 1.0 > hi) ? -1.0 : 1.0;
      simplex.push_back(project(v));
      values.push_back(f(simplex.back()));
    }

    bool converged = false;
    for (int it = 0; it < opt.max_iterations; ++it, ++iterations) {
      std::vector<std::size_t> order(simplex.size());
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::sort(order.begin(), order.end(), [&](auto a, auto b) { return values[a] < values[b]; });
      std::vector<Eigen::VectorXd> s;
      std::vector<double> fv;
      for (auto i : order) {
        s.push_back(simplex[i]);
        fv.push_back(values[i]);
      }
      simplex = std::move(s);
      values = std::move(fv);

      double diameter = 0.0;
      for (std::size_t i = 1; i < simplex.size(); ++i)
        diameter = std::max(diameter, (simplex[i] - simplex[0]).lpNorm<Eigen::Infinity>());
      const double spread = values.back() - values.front();
      if (spread <= opt.relative_tolerance * std::abs(values.front()) &&
          (diameter <= opt.step_tolerance || spread <= 1e-14 * std::abs(values.front()))) {
        converged = true;
        break;
      }

      const std::size_t worst = simplex.size() - 1;
      Eigen::VectorXd centroid = Eigen::VectorXd::Zero(dims);
      for (std::size_t i = 0; i < worst; ++i) centroid += simplex[i];
      centroid /= static_cast<double>(worst);

      Eigen::VectorXd reflected = project(centroid + (centroid - simplex[worst]));
      const double fr = f(reflected);
      if (fr < values.front()) {
        Eigen::VectorXd expanded = project(centroid + 2.0 * (centroid - simplex[worst]));
        const double fe = f(expanded);
        if (fe < fr) {
          simplex[worst] = expanded;
          values[worst] = fe;
        } else {
          simplex[worst] = reflected;
          values[worst] = fr;
        }
        continue;
      }
      if (fr < values[worst - 1]) {
        simplex[worst] = reflected;
        values[worst] = fr;
        continue;
      }
      const bool outside = fr < values[worst];
      Eigen::VectorXd contracted =
          project(outside ? centroid + 0.5 * (reflected - centroid) : centroid + 0.5 * (simplex[worst] - centroid));
      const double fc = f(contracted);
      if (fc < std::min(fr, values[worst])) {
        simplex[worst] = contracted;
        values[worst] = fc;
        continue;
      }
      for (std::size_t i = 1; i < simplex.size(); ++i) {
        simplex[i] = project(simplex[0] + 0.5 * (simplex[i] - simplex[0]));
        values[i] = f(simplex[i]);
      }
    }
    const auto idx = static_cast<std::size_t>(std::min_element(values.begin(), values.end()) - values.begin());
    if (!converged)
      throw FitError("REML optimiser did not converge within " + std::to_string(opt.max_iterations) +
                         " iterations",
                     to_theta(simplex[idx]), values[idx], iterations);
    const bool improved = values[idx] < best_f - opt.relative_tolerance * std::abs(best_f);
    best = simplex[idx];
    best_f = std::min(best_f, values[idx]);
    if (!improved && restart > 0) break;
  }

  // Newton polish on the interior coordinates. Simplex comparisons stall once
  // criterion differences reach rounding level; central differences do not.
  std::vector<Eigen::Index> free;
  for (Eigen::Index k = 0; k < dims; ++k)
    if (best(k) > lo + 1.0 && best(k) < hi - 1.0) free.push_back(k);
  const auto m = static_cast<Eigen::Index>(free.size());
  for (int step = 0; m > 0 && step < 20; ++step) {
    const double h = 1e-4;
    auto at = [&](Eigen::Index a, double da, Eigen::Index b, double db) {
      Eigen::VectorXd v = best;
      v(free[static_cast<std::size_t>(a)]) += da;
      v(free[static_cast<std::size_t>(b)]) += db;
      return f(v);
    };
    Eigen::VectorXd g(m);
    Eigen::MatrixXd hess(m, m);
    for (Eigen::Index a = 0; a < m; ++a) {
      const double up = at(a, h, a, 0.0), down = at(a, -h, a, 0.0);
      g(a) = (up - down) / (2.0 * h);
      hess(a, a) = (up - 2.0 * best_f + down) / (h * h);
      for (Eigen::Index b = 0; b < a; ++b) {
        hess(a, b) = hess(b, a) =
            (at(a, h, b, h) - at(a, h, b, -h) - at(a, -h, b, h) + at(a, -h, b, -h)) / (4.0 * h * h);
      }
    }
    Eigen::LLT<Eigen::MatrixXd> llt(hess);
    if (llt.info() != Eigen::Success) break;
    const Eigen::VectorXd d = -llt.solve(g);
    if (!(d.lpNorm<Eigen::Infinity>() < 0.5)) break;
    Eigen::VectorXd candidate = best;
    for (Eigen::Index a = 0; a < m; ++a) candidate(free[static_cast<std::size_t>(a)]) += d(a);
    candidate = project(candidate);
    const double fc = f(candidate);
    if (!(fc <= best_f + 1e-12 * std::abs(best_f))) break;
    best = candidate;
    best_f = std::min(best_f, fc);
    if (d.lpNorm<Eigen::Infinity>() < 1e-9) break;
  }
  return {to_theta(best), best_f, iterations};
}

inline double normal_two_sided_p(double t) { return std::erfc(std::abs(t) / std::numbers::sqrt2); }

inline double sample_variance(const Eigen::VectorXd& v) {
  if (v.size() < 2) return 0.0;
  return (v.array() - v.mean()).square().sum() / static_cast<double>(v.size() - 1);
}

}  // namespace detail

struct NakagawaR2 {
  double marginal = 0.0;
  double conditional = 0.0;
};

/// Nakagawa R^2 from the variance of the fitted fixed part over `design`.
inline NakagawaR2 r2_nakagawa(const MixedModelFit& fit, const Design& design) {
  if (design.p() != fit.coefficients.size()) throw DimensionError("design does not match the fit");
  const double fixed = detail::sample_variance(design.x * fit.coefficients);
  const double groups = fit.var_league + fit.var_club_in_league;
  const double total = fixed + groups + fit.var_residual;
  if (!(total > 0.0)) return {};
  return {fixed / total, (fixed + groups) / total};
}

/// Fits the model at a given theta (no optimisation).
inline MixedModelFit fit_at(const Design& design, const MixedModelSpec& spec, const Theta& theta,
                            const detail::Workspace& w) {
  const auto s = detail::solve(w, theta);
  const double dof = static_cast<double>(w.n - w.p);
  const double sigma2 = s.penalized_rss / dof;

  MixedModelFit fit;
  fit.spec = spec;
  fit.coefficient_names = design.column_names;
  fit.theta = theta;
  fit.coefficients = w.to_original * s.beta_working;
  const Eigen::MatrixXd cov_working = sigma2 * s.rx_cross.llt().solve(Eigen::MatrixXd::Identity(w.p, w.p));
  const Eigen::MatrixXd cov = w.to_original * cov_working * w.to_original.transpose();
  fit.std_errors = cov.diagonal().cwiseMax(0.0).cwiseSqrt();
  fit.t_values.resize(w.p);
  fit.p_values.resize(w.p);
  for (Eigen::Index k = 0; k < w.p; ++k) {
    fit.t_values(k) = fit.std_errors(k) > 0.0 ? fit.coefficients(k) / fit.std_errors(k) : 0.0;
    fit.p_values(k) = detail::normal_two_sided_p(fit.t_values(k));
  }
  fit.var_residual = sigma2;
  fit.var_league = spec.league_intercept ? theta.league * sigma2 : 0.0;
  fit.var_club_in_league = spec.club_intercept ? theta.club * sigma2 : 0.0;

  const Eigen::VectorXd b = s.lambda.cwiseProduct(s.u);
  for (std::size_t k = 0; k < design.league_codes.size(); ++k)
    fit.league_blups[design.league_codes[k]] = b(static_cast<Eigen::Index>(k));
  for (std::size_t k = 0; k < design.club_codes.size(); ++k)
    fit.club_blups[design.club_codes[k]] = b(static_cast<Eigen::Index>(design.league_codes.size() + k));

  fit.reml_loglik = -0.5 * s.criterion;
  fit.n_obs = static_cast<int>(w.n);
  {
    std::set<int> leagues, clubs;
    for (Eigen::Index i = 0; i < w.n; ++i) {
      for (Eigen::Index k = 0; k < design.z_league.cols(); ++k)
        if (design.z_league(i, k) != 0.0) leagues.insert(design.league_codes[static_cast<std::size_t>(k)]);
      for (Eigen::Index k = 0; k < design.z_club.cols(); ++k)
        if (design.z_club(i, k) != 0.0) clubs.insert(design.club_codes[static_cast<std::size_t>(k)]);
    }
    fit.n_leagues = static_cast<int>(leagues.size());
    fit.n_clubs = static_cast<int>(clubs.size());
  }

  // Joint sampling distribution of (beta, b): sigma^2 times the inverse of the
  // full penalised normal matrix, mapped back to original units.
  const Eigen::Index m = w.p + w.q;
  Eigen::MatrixXd normal(m, m);
  normal.topLeftCorner(w.p, w.p) = w.xtx;
  normal.topRightCorner(w.p, w.q) = w.ztx.transpose() * s.lambda.asDiagonal();
  normal.bottomLeftCorner(w.q, w.p) = s.lambda.asDiagonal() * w.ztx;
  Eigen::MatrixXd a = s.lambda.asDiagonal() * w.ztz * s.lambda.asDiagonal();
  a.diagonal().array() += 1.0;
  normal.bottomRightCorner(w.q, w.q) = a;
  Eigen::MatrixXd transform = Eigen::MatrixXd::Zero(m, m);
  transform.topLeftCorner(w.p, w.p) = w.to_original;
  transform.bottomRightCorner(w.q, w.q) = s.lambda.asDiagonal();
  const Eigen::MatrixXd inv = normal.ldlt().solve(Eigen::MatrixXd::Identity(m, m));
  fit.sim_covariance = sigma2 * transform * inv * transform.transpose();
  fit.sim_covariance = 0.5 * (fit.sim_covariance + fit.sim_covariance.transpose());
  fit.sim_mean.resize(m);
  fit.sim_mean << fit.coefficients, b;
  fit.sim_league_codes = design.league_codes;
  fit.sim_club_codes = design.club_codes;

  const auto r2 = r2_nakagawa(fit, design);
  fit.r2_marginal = r2.marginal;
  fit.r2_conditional = r2.conditional;
  return fit;
}

/// REML fit with a derivative-free bounded search over the variance ratios.
inline MixedModelFit fit_reml(const Design& design, const MixedModelSpec& spec = {},
                              const OptimizerSettings& settings = {}) {
  if (design.n() <= design.p() + 2)
    throw DomainError("need more than " + std::to_string(design.p() + 2) + " observations, got " +
                      std::to_string(design.n()));
  const auto w = detail::prepare(design);
  const auto optimum = detail::minimize(w, spec, settings);
  auto fit = fit_at(design, spec, optimum.theta, w);
  fit.iterations = optimum.iterations;
  return fit;
}

inline MixedModelFit fit_reml(const Dataset& dataset, const MixedModelSpec& spec = {},
                              const OptimizerSettings& settings = {}) {
  return fit_reml(build_design(dataset, spec), spec, settings);
}

/// Fit with the variance ratios held fixed, e.g. (0, 0) for ordinary least squares.
inline MixedModelFit fit_fixed_theta(const Design& design, const MixedModelSpec& spec, const Theta& theta) {
  if (design.n() <= design.p()) throw DomainError("need more observations than fixed effects");
  return fit_at(design, spec, theta, detail::prepare(design));
}

struct FixedEffectRow {
  std::string name;
  double estimate = 0.0;
  double std_error = 0.0;
  double t_value = 0.0;
  double p_value = 1.0;
  std::string stars;
};

inline std::string significance_stars(double p) {
  if (p < 0.001) return "***";
  if (p < 0.01) return "**";
  if (p < 0.05) return "*";
  return "";
}

inline std::vector<FixedEffectRow> fixed_effect_table(const MixedModelFit& fit) {
  std::vector<FixedEffectRow> rows;
  for (Eigen::Index k = 0; k < fit.coefficients.size(); ++k) {
    const double p = fit.p_values(k);
    rows.push_back({fit.coefficient_names[static_cast<std::size_t>(k)], fit.coefficients(k), fit.std_errors(k),
                    fit.t_values(k), p, significance_stars(p)});
  }
  return rows;
}

inline double p_value_for_t(double t) { return detail::normal_two_sided_p(t); }

struct InformationCriteria {
  double aic = 0.0;
  double bic = 0.0;
};

inline InformationCriteria information_criteria(double loglik, std::size_t parameters, double n_obs) {
  const double k = static_cast<double>(parameters);
  return {-2.0 * loglik + 2.0 * k, -2.0 * loglik + k * std::log(n_obs)};
}

inline InformationCriteria information_criteria(const MixedModelFit& fit) {
  return information_criteria(fit.reml_loglik, fit.parameter_count(), static_cast<double>(fit.n_obs));
}

struct PredictionInterval {
  std::string player;
  std::string club;
  double predicted = 0.0;
  double upper = 0.0;
  double lower = 0.0;
  double level = 0.9;
};

/// R type-7 sample quantile of sorted values.
inline double quantile_sorted(const std::vector<double>& sorted, double prob) {
  if (sorted.empty()) throw DomainError("quantile of an empty sample");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * prob;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

/// Simulated intervals for the linear predictor (no residual variance).
/// Coefficients and group effects are drawn jointly from their estimated
/// normal distribution; limits are empirical (1 -/+ level)/2 quantiles. The
/// interval is widened if needed so it always contains the point prediction.
inline std::vector<PredictionInterval> prediction_interval(const MixedModelFit& fit, const Dataset& records,
                                                           double level, int n_draws, std::uint64_t rng_state) {
  if (!(level > 0.0 && level < 1.0)) throw DomainError("level must lie in (0, 1)");
  if (n_draws < 1) throw DomainError("n_draws must be >= 1");
  const Eigen::Index m = fit.sim_mean.size();
  const Eigen::Index p = fit.coefficients.size();
  const auto n_league = static_cast<Eigen::Index>(fit.sim_league_codes.size());
  if (fit.sim_covariance.rows() != m || fit.sim_covariance.cols() != m)
    throw ValidationError("fit has no simulation covariance");

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(fit.sim_covariance);
  const Eigen::MatrixXd root =
      eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();

  Rng rng(rng_state);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd draws(m, n_draws);
  for (int d = 0; d < n_draws; ++d) {
    Eigen::VectorXd z(m);
    for (Eigen::Index k = 0; k < m; ++k) z(k) = normal(rng);
    draws.col(d) = fit.sim_mean + root * z;
  }

  std::map<int, Eigen::Index> league_row, club_row;
  for (Eigen::Index k = 0; k < n_league; ++k) league_row[fit.sim_league_codes[static_cast<std::size_t>(k)]] = p + k;
  for (std::size_t k = 0; k < fit.sim_club_codes.size(); ++k)
    club_row[fit.sim_club_codes[k]] = p + n_league + static_cast<Eigen::Index>(k);

  std::vector<std::size_t> columns;
  for (const auto& name : fit.spec.fixed_effects) columns.push_back(feature_index(name));

  std::vector<PredictionInterval> out;
  out.reserve(records.size());
  std::vector<double> sims(static_cast<std::size_t>(n_draws));
  for (const auto& r : records.records) {
    Eigen::VectorXd x(p);
    x(0) = 1.0;
    for (std::size_t k = 0; k < columns.size(); ++k) x(static_cast<Eigen::Index>(k + 1)) = r.features[columns[k]];
    Eigen::VectorXd linear = draws.topRows(p).transpose() * x;
    if (auto it = league_row.find(r.league_code); it != league_row.end()) linear += draws.row(it->second).transpose();
    if (auto it = club_row.find(r.club_code); it != club_row.end()) linear += draws.row(it->second).transpose();
    for (int d = 0; d < n_draws; ++d) sims[static_cast<std::size_t>(d)] = linear(d);
    std::sort(sims.begin(), sims.end());

    PredictionInterval pi;
    pi.player = r.player_name;
    pi.club = r.club_name;
    pi.level = level;
    pi.predicted = fit.predict(r);
    pi.lower = std::min(quantile_sorted(sims, (1.0 - level) / 2.0), pi.predicted);
    pi.upper = std::max(quantile_sorted(sims, (1.0 + level) / 2.0), pi.predicted);
    out.push_back(std::move(pi));
  }
  return out;
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

inline constexpr int kFitFormatVersion = 1;

namespace detail {
inline nlohmann::json vec_json(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}
inline Eigen::VectorXd vec_from(const nlohmann::json& j) {
  auto v = j.get<std::vector<double>>();
  return Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}
inline nlohmann::json blups_json(const std::map<int, double>& m) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& [code, value] : m) arr.push_back({{"code", code}, {"value", value}});
  return arr;
}
inline std::map<int, double> blups_from(const nlohmann::json& j) {
  std::map<int, double> m;
  for (const auto& e : j) m[e.at("code").get<int>()] = e.at("value").get<double>();
  return m;
}
}  // namespace detail

inline nlohmann::json to_json(const MixedModelFit& fit) {
  nlohmann::json j;
  j["format"] = "salary.mixed_model";
  j["version"] = kFitFormatVersion;
  j["spec"] = {{"response", fit.spec.response},
               {"fixed_effects", fit.spec.fixed_effects},
               {"league_intercept", fit.spec.league_intercept},
               {"club_intercept", fit.spec.club_intercept}};
  j["coefficient_names"] = fit.coefficient_names;
  j["coefficients"] = detail::vec_json(fit.coefficients);
  j["std_errors"] = detail::vec_json(fit.std_errors);
  j["t_values"] = detail::vec_json(fit.t_values);
  j["p_values"] = detail::vec_json(fit.p_values);
  j["variance_components"] = {{"league", fit.var_league},
                              {"club_in_league", fit.var_club_in_league},
                              {"residual", fit.var_residual}};
  j["blups"] = {{"league", detail::blups_json(fit.league_blups)}, {"club", detail::blups_json(fit.club_blups)}};
  j["reml_loglik"] = fit.reml_loglik;
  j["metadata"] = {{"theta", {fit.theta.league, fit.theta.club}},
                   {"iterations", fit.iterations},
                   {"n_obs", fit.n_obs},
                   {"n_clubs", fit.n_clubs},
                   {"n_leagues", fit.n_leagues},
                   {"r2_marginal", fit.r2_marginal},
                   {"r2_conditional", fit.r2_conditional}};
  nlohmann::json cov = nlohmann::json::array();
  for (Eigen::Index r = 0; r < fit.sim_covariance.rows(); ++r) cov.push_back(detail::vec_json(fit.sim_covariance.row(r)));
  j["simulation"] = {{"mean", detail::vec_json(fit.sim_mean)},
                     {"covariance", cov},
                     {"league_codes", fit.sim_league_codes},
                     {"club_codes", fit.sim_club_codes}};
  return j;
}

inline MixedModelFit fit_from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "salary.mixed_model") throw ValidationError("not a mixed model document");
  if (j.at("version").get<int>() != kFitFormatVersion) throw ValidationError("unsupported mixed model format version");
  MixedModelFit fit;
  const auto& spec = j.at("spec");
  fit.spec.response = spec.at("response").get<std::string>();
  fit.spec.fixed_effects = spec.at("fixed_effects").get<std::vector<std::string>>();
  fit.spec.league_intercept = spec.at("league_intercept").get<bool>();
  fit.spec.club_intercept = spec.at("club_intercept").get<bool>();
  fit.coefficient_names = j.at("coefficient_names").get<std::vector<std::string>>();
  fit.coefficients = detail::vec_from(j.at("coefficients"));
  fit.std_errors = detail::vec_from(j.at("std_errors"));
  fit.t_values = detail::vec_from(j.at("t_values"));
  fit.p_values = detail::vec_from(j.at("p_values"));
  const auto& vc = j.at("variance_components");
  fit.var_league = vc.at("league").get<double>();
  fit.var_club_in_league = vc.at("club_in_league").get<double>();
  fit.var_residual = vc.at("residual").get<double>();
  fit.league_blups = detail::blups_from(j.at("blups").at("league"));
  fit.club_blups = detail::blups_from(j.at("blups").at("club"));
  fit.reml_loglik = j.at("reml_loglik").get<double>();
  const auto& meta = j.at("metadata");
  fit.theta = {meta.at("theta").at(0).get<double>(), meta.at("theta").at(1).get<double>()};
  fit.iterations = meta.at("iterations").get<int>();
  fit.n_obs = meta.at("n_obs").get<int>();
  fit.n_clubs = meta.at("n_clubs").get<int>();
  fit.n_leagues = meta.at("n_leagues").get<int>();
  fit.r2_marginal = meta.at("r2_marginal").get<double>();
  fit.r2_conditional = meta.at("r2_conditional").get<double>();
  const auto& sim = j.at("simulation");
  fit.sim_mean = detail::vec_from(sim.at("mean"));
  const auto m = fit.sim_mean.size();
  fit.sim_covariance.resize(m, m);
  const auto& cov = sim.at("covariance");
  if (static_cast<Eigen::Index>(cov.size()) != m) throw ValidationError("simulation covariance has wrong shape");
  for (Eigen::Index r = 0; r < m; ++r) fit.sim_covariance.row(r) = detail::vec_from(cov.at(static_cast<std::size_t>(r))).transpose();
  fit.sim_league_codes = sim.at("league_codes").get<std::vector<int>>();
  fit.sim_club_codes = sim.at("club_codes").get<std::vector<int>>();
  if (fit.coefficient_names.size() != static_cast<std::size_t>(fit.coefficients.size()) ||
      fit.coefficients.size() != static_cast<Eigen::Index>(fit.spec.fixed_effects.size() + 1))
    throw ValidationError("coefficient count does not match the model spec");
  return fit;
}

}  // namespace salary::mixed

#endif  // SALARY_MIXEDMODEL_HPP
