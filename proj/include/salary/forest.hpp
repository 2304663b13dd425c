#ifndef SALARY_FOREST_HPP
#define SALARY_FOREST_HPP

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "salary/cart.hpp"
#include "salary/common.hpp"
#include "salary/dataset.hpp"

namespace salary::forest {

/// Bagging hyperparameters. Defaults are the published configuration:
/// 200 fully grown trees over all features, bootstrap on, random state 2.
struct ForestParams {
  int n_estimators = 200;
  std::optional<int> max_features;
  std::optional<int> max_depth;
  int min_samples_split = 2;
  int min_samples_leaf = 1;
  bool bootstrap = true;
  std::uint64_t base_rng_state = 2;

  cart::GrowthParams growth() const {
    return {max_depth, min_samples_split, min_samples_leaf, max_features};
  }

  void validate() const {
    if (n_estimators < 1) throw DomainError("n_estimators must be >= 1");
    growth().validate();
  }

  bool operator==(const ForestParams&) const = default;
};

/// `n` indices drawn uniformly with replacement.
inline std::vector<std::size_t> bootstrap_sample(std::size_t n, Rng& rng) {
  if (n == 0) throw DomainError("bootstrap of an empty dataset");
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::vector<std::size_t> rows(n);
  for (auto& r : rows) r = pick(rng);
  return rows;
}

inline std::vector<std::size_t> bootstrap_sample(const Dataset& dataset, Rng& rng) {
  return bootstrap_sample(dataset.size(), rng);
}

/// Mean over trees of per-tree normalised SSE reductions, renormalised to sum
/// to one. Trees without splits contribute nothing.
inline std::vector<double> compute_importances(const std::vector<cart::RegressionTree>& trees,
                                               std::size_t feature_count) {
  std::vector<double> total(feature_count, 0.0);
  for (const auto& tree : trees) {
    auto reduction = tree.impurity_reduction();
    const double sum = std::accumulate(reduction.begin(), reduction.end(), 0.0);
    if (!(sum > 0.0)) continue;
    for (std::size_t j = 0; j < feature_count; ++j) total[j] += reduction[j] / sum;
  }
  for (auto& v : total) v /= static_cast<double>(std::max<std::size_t>(trees.size(), 1));
  const double grand = std::accumulate(total.begin(), total.end(), 0.0);
  if (!(grand > 0.0)) {
    warn("forest has no splits; feature importances are all zero");
    return std::vector<double>(feature_count, 0.0);
  }
  for (auto& v : total) v /= grand;
  return total;
}

class ForestModel {
 public:
  ForestModel() = default;
  ForestModel(std::vector<cart::RegressionTree> trees, std::vector<std::uint64_t> tree_seeds,
              ForestParams params, std::vector<std::string> feature_names)
      : trees_(std::move(trees)),
        tree_seeds_(std::move(tree_seeds)),
        params_(params),
        feature_names_(std::move(feature_names)) {
    if (trees_.size() != static_cast<std::size_t>(params_.n_estimators))
      throw ValidationError("forest tree count differs from n_estimators");
    if (tree_seeds_.size() != trees_.size()) throw ValidationError("one seed per tree is required");
    importances_ = compute_importances(trees_, feature_names_.size());
  }

  const std::vector<cart::RegressionTree>& trees() const noexcept { return trees_; }
  const std::vector<std::uint64_t>& tree_seeds() const noexcept { return tree_seeds_; }
  const ForestParams& params() const noexcept { return params_; }
  const std::vector<std::string>& feature_names() const noexcept { return feature_names_; }
  const std::vector<double>& importances() const noexcept { return importances_; }

  /// Average of the tree predictions. The result is clamped to the range of
  /// the tree predictions, which only removes rounding excursions.
  double predict(std::span<const double> x) const {
    if (x.size() != feature_names_.size())
      throw DimensionError("expected " + std::to_string(feature_names_.size()) + " features, got " +
                           std::to_string(x.size()));
    double sum = 0.0;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto& tree : trees_) {
      const double v = tree.predict(x);
      sum += v;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    return std::clamp(sum / static_cast<double>(trees_.size()), lo, hi);
  }

  bool operator==(const ForestModel&) const = default;

 private:
  std::vector<cart::RegressionTree> trees_;
  std::vector<std::uint64_t> tree_seeds_;
  ForestParams params_;
  std::vector<std::string> feature_names_;
  std::vector<double> importances_;
};

/// Fits the ensemble. Tree t draws from its own stream seeded with
/// derive_seed(base_rng_state, t), so the model does not depend on `threads`.
inline ForestModel fit_forest(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                              std::vector<std::string> feature_names, const ForestParams& params,
                              unsigned threads = 1) {
  params.validate();
  if (x.rows() < 1) throw DomainError("cannot fit a forest on an empty dataset");
  if (x.rows() != y.size()) throw DimensionError("feature matrix and target vector differ in length");
  if (feature_names.empty())
    for (Eigen::Index j = 0; j < x.cols(); ++j) feature_names.push_back("x" + std::to_string(j));

  const auto n = static_cast<std::size_t>(x.rows());
  const auto count = static_cast<std::size_t>(params.n_estimators);
  std::vector<std::optional<cart::RegressionTree>> grown(count);
  std::vector<std::uint64_t> seeds(count);
  for (std::size_t t = 0; t < count; ++t) seeds[t] = derive_seed(params.base_rng_state, t);

  auto grow_one = [&](std::size_t t) {
    Rng rng(seeds[t]);
    std::vector<std::size_t> rows;
    if (params.bootstrap) {
      rows = bootstrap_sample(n, rng);
    } else {
      rows.resize(n);
      std::iota(rows.begin(), rows.end(), std::size_t{0});
    }
    grown[t] = cart::grow_tree(x, y, std::move(rows), params.growth(), feature_names, &rng);
  };

  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(count)));
  if (threads == 1) {
    for (std::size_t t = 0; t < count; ++t) grow_one(t);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(threads);
    std::vector<std::thread> workers;
    for (unsigned w = 0; w < threads; ++w)
      workers.emplace_back([&, w] {
        try {
          for (std::size_t t = next++; t < count; t = next++) grow_one(t);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    for (auto& worker : workers) worker.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }

  std::vector<cart::RegressionTree> trees;
  trees.reserve(count);
  for (auto& t : grown) trees.push_back(std::move(*t));
  return ForestModel(std::move(trees), std::move(seeds), params, std::move(feature_names));
}

inline ForestModel fit_forest(const Dataset& dataset, const ForestParams& params, unsigned threads = 1) {
  if (dataset.empty()) throw DomainError("cannot fit a forest on an empty dataset");
  return fit_forest(dataset.feature_matrix(), dataset.targets(), dataset.feature_names, params, threads);
}

inline double predict_forest(const ForestModel& model, std::span<const double> x) { return model.predict(x); }

inline std::vector<double> feature_importance(const ForestModel& model) { return model.importances(); }

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

inline constexpr int kForestFormatVersion = 1;

inline nlohmann::json params_to_json(const ForestParams& p) {
  nlohmann::json j;
  j["n_estimators"] = p.n_estimators;
  j["max_features"] = p.max_features ? nlohmann::json(*p.max_features) : nlohmann::json(nullptr);
  j["max_depth"] = p.max_depth ? nlohmann::json(*p.max_depth) : nlohmann::json(nullptr);
  j["min_samples_split"] = p.min_samples_split;
  j["min_samples_leaf"] = p.min_samples_leaf;
  j["bootstrap"] = p.bootstrap;
  j["base_rng_state"] = p.base_rng_state;
  return j;
}

inline ForestParams params_from_json(const nlohmann::json& j) {
  ForestParams p;
  p.n_estimators = j.at("n_estimators").get<int>();
  if (!j.at("max_features").is_null()) p.max_features = j.at("max_features").get<int>();
  if (!j.at("max_depth").is_null()) p.max_depth = j.at("max_depth").get<int>();
  p.min_samples_split = j.at("min_samples_split").get<int>();
  p.min_samples_leaf = j.at("min_samples_leaf").get<int>();
  p.bootstrap = j.at("bootstrap").get<bool>();
  p.base_rng_state = j.at("base_rng_state").get<std::uint64_t>();
  return p;
}

inline nlohmann::json to_json(const ForestModel& model) {
  nlohmann::json j;
  j["format"] = "salary.random_forest";
  j["version"] = kForestFormatVersion;
  j["params"] = params_to_json(model.params());
  j["feature_names"] = model.feature_names();
  j["importances"] = model.importances();
  nlohmann::json trees = nlohmann::json::array();
  for (std::size_t t = 0; t < model.trees().size(); ++t) {
    nlohmann::json tree;
    tree["seed"] = model.tree_seeds()[t];
    tree["nodes"] = cart::nodes_to_json(model.trees()[t]);
    trees.push_back(std::move(tree));
  }
  j["trees"] = std::move(trees);
  return j;
}

inline ForestModel forest_from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "salary.random_forest") throw ValidationError("not a random forest document");
  if (j.at("version").get<int>() != kForestFormatVersion)
    throw ValidationError("unsupported forest format version");
  const auto params = params_from_json(j.at("params"));
  auto names = j.at("feature_names").get<std::vector<std::string>>();
  std::vector<cart::RegressionTree> trees;
  std::vector<std::uint64_t> seeds;
  for (const auto& t : j.at("trees")) {
    seeds.push_back(t.at("seed").get<std::uint64_t>());
    trees.emplace_back(cart::nodes_from_json(t.at("nodes")), params.growth(), names);
  }
  return ForestModel(std::move(trees), std::move(seeds), params, std::move(names));
}

}  // namespace salary::forest

#endif  // SALARY_FOREST_HPP
