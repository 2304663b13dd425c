#ifndef SALARY_CART_HPP
#define SALARY_CART_HPP

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <sstream>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "salary/common.hpp"

namespace salary::cart {

struct GrowthParams {
  std::optional<int> max_depth;     // unlimited when empty
  int min_samples_split = 2;
  int min_samples_leaf = 1;
  std::optional<int> max_features;  // all features when empty

  void validate() const {
    if (max_depth && *max_depth < 0) throw DomainError("max_depth must be >= 0");
    if (min_samples_split < 2) throw DomainError("min_samples_split must be >= 2");
    if (min_samples_leaf < 1) throw DomainError("min_samples_leaf must be >= 1");
    if (max_features && *max_features < 1) throw DomainError("max_features must be >= 1");
  }

  bool operator==(const GrowthParams&) const = default;
};

/// Training samples: the rows of `x`/`y` listed in `rows`. Rows may repeat
/// (bootstrap multisets).
struct SampleView {
  const Eigen::MatrixXd& x;
  const Eigen::VectorXd& y;
  std::span<const std::size_t> rows;
};

struct Split {
  std::size_t feature = 0;
  double threshold = 0.0;
  double sse = 0.0;         // summed SSE of both children
  double parent_sse = 0.0;
  std::size_t left_count = 0;
};

namespace detail {

inline double sum_squared_error(const Eigen::VectorXd& y, std::span<const std::size_t> rows) {
  if (rows.empty()) return 0.0;
  double mean = 0.0;
  for (auto r : rows) mean += y(static_cast<Eigen::Index>(r));
  mean /= static_cast<double>(rows.size());
  double sse = 0.0;
  for (auto r : rows) {
    double d = y(static_cast<Eigen::Index>(r)) - mean;
    sse += d * d;
  }
  return sse;
}

inline bool constant_targets(const Eigen::VectorXd& y, std::span<const std::size_t> rows) {
  for (auto r : rows)
    if (y(static_cast<Eigen::Index>(r)) != y(static_cast<Eigen::Index>(rows.front()))) return false;
  return true;
}

inline bool constant_feature(const Eigen::MatrixXd& x, std::span<const std::size_t> rows, std::size_t j) {
  const auto col = static_cast<Eigen::Index>(j);
  for (auto r : rows)
    if (x(static_cast<Eigen::Index>(r), col) != x(static_cast<Eigen::Index>(rows.front()), col)) return false;
  return true;
}

/// Midpoint of two adjacent distinct values that still satisfies lo <= t < hi.
inline double midpoint(double lo, double hi) {
  double mid = lo + (hi - lo) / 2.0;
  if (!(mid < hi)) mid = lo;
  return mid;
}

// Relative slack under which two candidate SSEs count as tied.
inline constexpr double kTieTolerance = 1e-12;

}  // namespace detail

/// Least-squares split search over every candidate feature and every midpoint
/// between adjacent distinct sorted values. Ties go to the lowest feature
/// index, then the smallest threshold. Children must hold at least
/// `min_samples_leaf` samples each.
inline std::optional<Split> best_split(const SampleView& samples,
                                       std::vector<std::size_t> candidate_features,
                                       int min_samples_leaf = 1) {
  const std::size_t n = samples.rows.size();
  if (n == 0) throw DomainError("best_split on an empty sample set");
  if (n < 2 || detail::constant_targets(samples.y, samples.rows)) return std::nullopt;
  for (auto j : candidate_features)
    if (j >= static_cast<std::size_t>(samples.x.cols())) throw DimensionError("candidate feature out of range");
  std::sort(candidate_features.begin(), candidate_features.end());
  candidate_features.erase(std::unique(candidate_features.begin(), candidate_features.end()),
                           candidate_features.end());

  // Centre targets on the node mean so the running sums stay well conditioned.
  double mean = 0.0;
  for (auto r : samples.rows) mean += samples.y(static_cast<Eigen::Index>(r));
  mean /= static_cast<double>(n);
  double total = 0.0, total_sq = 0.0;
  for (auto r : samples.rows) {
    double d = samples.y(static_cast<Eigen::Index>(r)) - mean;
    total += d;
    total_sq += d * d;
  }
  const double parent_sse = total_sq - total * total / static_cast<double>(n);
  const double tolerance = detail::kTieTolerance * std::max(parent_sse, 1e-300);
  const std::size_t min_leaf = static_cast<std::size_t>(std::max(1, min_samples_leaf));

  std::optional<Split> best;
  std::vector<std::size_t> order(samples.rows.begin(), samples.rows.end());
  for (auto j : candidate_features) {
    const auto col = static_cast<Eigen::Index>(j);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return samples.x(static_cast<Eigen::Index>(a), col) < samples.x(static_cast<Eigen::Index>(b), col);
    });
    double left_sum = 0.0, left_sq = 0.0;
    for (std::size_t k = 0; k + 1 < n; ++k) {
      double d = samples.y(static_cast<Eigen::Index>(order[k])) - mean;
      left_sum += d;
      left_sq += d * d;
      const double lo = samples.x(static_cast<Eigen::Index>(order[k]), col);
      const double hi = samples.x(static_cast<Eigen::Index>(order[k + 1]), col);
      if (!(lo < hi)) continue;
      const std::size_t nl = k + 1, nr = n - nl;
      if (nl < min_leaf || nr < min_leaf) continue;
      const double right_sum = total - left_sum;
      const double right_sq = total_sq - left_sq;
      double sse = (left_sq - left_sum * left_sum / static_cast<double>(nl)) +
                   (right_sq - right_sum * right_sum / static_cast<double>(nr));
      sse = std::max(sse, 0.0);
      if (!best || sse < best->sse - tolerance)
        best = Split{j, detail::midpoint(lo, hi), sse, std::max(parent_sse, 0.0), nl};
    }
  }
  if (best) {
    // Report the winner's SSE from a direct two-pass sum rather than the
    // running totals used for the search.
    std::vector<std::size_t> left, right;
    const auto col = static_cast<Eigen::Index>(best->feature);
    for (auto r : samples.rows)
      (samples.x(static_cast<Eigen::Index>(r), col) <= best->threshold ? left : right).push_back(r);
    best->sse = detail::sum_squared_error(samples.y, left) + detail::sum_squared_error(samples.y, right);
  }
  return best;
}

enum class NodeKind { split, leaf };

struct Node {
  NodeKind kind = NodeKind::leaf;
  // split nodes
  std::size_t feature = 0;
  double threshold = 0.0;
  std::size_t left = 0;
  std::size_t right = 0;
  double sse_reduction = 0.0;
  // leaf nodes
  double prediction = 0.0;
  std::size_t region_id = 0;
  // all nodes
  std::size_t sample_count = 0;

  bool is_leaf() const noexcept { return kind == NodeKind::leaf; }
  bool operator==(const Node&) const = default;
};

/// Binary least-squares regression tree. Nodes are stored in depth-first
/// preorder; node 0 is the root. x[feature] <= threshold routes left.
class RegressionTree {
 public:
  RegressionTree() = default;
  RegressionTree(std::vector<Node> nodes, GrowthParams params, std::vector<std::string> feature_names)
      : nodes_(std::move(nodes)), params_(params), feature_names_(std::move(feature_names)) {
    check();
  }

  const std::vector<Node>& nodes() const noexcept { return nodes_; }
  const GrowthParams& params() const noexcept { return params_; }
  const std::vector<std::string>& feature_names() const noexcept { return feature_names_; }
  std::size_t feature_count() const noexcept { return feature_names_.size(); }

  std::size_t leaf_count() const {
    return static_cast<std::size_t>(
        std::count_if(nodes_.begin(), nodes_.end(), [](const Node& n) { return n.is_leaf(); }));
  }

  std::size_t depth() const { return nodes_.empty() ? 0 : depth_from(0); }

  const Node& leaf_for(std::span<const double> x) const {
    if (x.size() != feature_count())
      throw DimensionError("expected " + std::to_string(feature_count()) + " features, got " +
                           std::to_string(x.size()));
    std::size_t i = 0;
    while (!nodes_[i].is_leaf()) i = x[nodes_[i].feature] <= nodes_[i].threshold ? nodes_[i].left : nodes_[i].right;
    return nodes_[i];
  }

  double predict(std::span<const double> x) const { return leaf_for(x).prediction; }

  /// Per-feature total SSE reduction over all splits (unnormalised).
  std::vector<double> impurity_reduction() const {
    std::vector<double> out(feature_count(), 0.0);
    for (const auto& n : nodes_)
      if (!n.is_leaf()) out[n.feature] += n.sse_reduction;
    return out;
  }

  bool operator==(const RegressionTree&) const = default;

 private:
  std::size_t depth_from(std::size_t i) const {
    if (nodes_[i].is_leaf()) return 0;
    return 1 + std::max(depth_from(nodes_[i].left), depth_from(nodes_[i].right));
  }

  void check() const {
    if (nodes_.empty()) throw ValidationError("tree has no nodes");
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      const Node& n = nodes_[i];
      if (n.is_leaf()) continue;
      if (n.left <= i || n.right <= i || n.left >= nodes_.size() || n.right >= nodes_.size())
        throw ValidationError("tree node " + std::to_string(i) + " has invalid children");
      if (n.feature >= feature_names_.size())
        throw ValidationError("tree node " + std::to_string(i) + " uses an unknown feature");
    }
  }

  std::vector<Node> nodes_;
  GrowthParams params_;
  std::vector<std::string> feature_names_;
};

namespace detail {

class TreeBuilder {
 public:
  TreeBuilder(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const GrowthParams& params, Rng* rng)
      : x_(x), y_(y), params_(params), rng_(rng) {}

  std::vector<Node> build(std::vector<std::size_t> rows) {
    grow(std::move(rows), 0);
    return std::move(nodes_);
  }

 private:
  std::size_t grow(std::vector<std::size_t> rows, int depth) {
    const std::size_t id = nodes_.size();
    nodes_.emplace_back();
    nodes_[id].sample_count = rows.size();

    std::optional<Split> split;
    const auto n = static_cast<int>(rows.size());
    const bool may_split = n >= params_.min_samples_split && n >= 2 * params_.min_samples_leaf &&
                           !(params_.max_depth && depth >= *params_.max_depth);
    if (may_split) split = best_split({x_, y_, rows}, candidates(rows), params_.min_samples_leaf);

    if (!split) {
      make_leaf(id, rows);
      return id;
    }

    std::vector<std::size_t> left, right;
    left.reserve(split->left_count);
    right.reserve(rows.size() - split->left_count);
    const auto col = static_cast<Eigen::Index>(split->feature);
    for (auto r : rows) (x_(static_cast<Eigen::Index>(r), col) <= split->threshold ? left : right).push_back(r);
    rows.clear();
    rows.shrink_to_fit();

    nodes_[id].kind = NodeKind::split;
    nodes_[id].feature = split->feature;
    nodes_[id].threshold = split->threshold;
    nodes_[id].sse_reduction = std::max(split->parent_sse - split->sse, 0.0);
    const std::size_t l = grow(std::move(left), depth + 1);
    const std::size_t r = grow(std::move(right), depth + 1);
    nodes_[id].left = l;
    nodes_[id].right = r;
    return id;
  }

  void make_leaf(std::size_t id, const std::vector<std::size_t>& rows) {
    Node& node = nodes_[id];
    node.kind = NodeKind::leaf;
    node.region_id = leaves_++;
    if (constant_targets(y_, rows)) {
      node.prediction = y_(static_cast<Eigen::Index>(rows.front()));
      return;
    }
    double sum = 0.0;
    for (auto r : rows) sum += y_(static_cast<Eigen::Index>(r));
    node.prediction = sum / static_cast<double>(rows.size());
  }

  // Features examined at a node. With max_features = k, features are visited
  // in random order until k non-constant ones have been collected.
  std::vector<std::size_t> candidates(const std::vector<std::size_t>& rows) {
    const auto p = static_cast<std::size_t>(x_.cols());
    std::vector<std::size_t> all(p);
    std::iota(all.begin(), all.end(), std::size_t{0});
    if (!params_.max_features || static_cast<std::size_t>(*params_.max_features) >= p) return all;
    if (!rng_) throw DomainError("feature subsampling needs a random stream");

    const auto k = static_cast<std::size_t>(*params_.max_features);
    std::vector<std::size_t> chosen;
    std::size_t informative = 0;
    for (std::size_t i = 0; i < p && informative < k; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, p - 1);
      std::swap(all[i], all[pick(*rng_)]);
      chosen.push_back(all[i]);
      if (!constant_feature(x_, rows, all[i])) ++informative;
    }
    return chosen;
  }

  const Eigen::MatrixXd& x_;
  const Eigen::VectorXd& y_;
  GrowthParams params_;
  Rng* rng_;
  std::vector<Node> nodes_;
  std::size_t leaves_ = 0;
};

}  // namespace detail

/// Grows a tree on the listed rows of `x` (repeats allowed). `rng` is only
/// drawn from when max_features restricts the per-split candidates.
inline RegressionTree grow_tree(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                std::vector<std::size_t> rows, const GrowthParams& params,
                                std::vector<std::string> feature_names, Rng* rng = nullptr) {
  params.validate();
  if (x.rows() != y.size()) throw DimensionError("feature matrix and target vector differ in length");
  if (rows.empty()) throw DomainError("grow_tree needs at least one sample");
  for (auto r : rows)
    if (r >= static_cast<std::size_t>(x.rows())) throw DimensionError("sample row out of range");
  if (feature_names.empty())
    for (Eigen::Index j = 0; j < x.cols(); ++j) feature_names.push_back("x" + std::to_string(j));
  if (feature_names.size() != static_cast<std::size_t>(x.cols()))
    throw DimensionError("feature name count does not match feature matrix");
  detail::TreeBuilder builder(x, y, params, rng);
  return RegressionTree(builder.build(std::move(rows)), params, std::move(feature_names));
}

/// Grows a tree on every row of `x`.
inline RegressionTree grow_tree(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                const GrowthParams& params, std::vector<std::string> feature_names = {},
                                Rng* rng = nullptr) {
  std::vector<std::size_t> rows(static_cast<std::size_t>(x.rows()));
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return grow_tree(x, y, std::move(rows), params, std::move(feature_names), rng);
}

inline double predict_tree(const RegressionTree& tree, std::span<const double> x) { return tree.predict(x); }

inline std::string export_tree(const RegressionTree& tree) {
  std::ostringstream out;
  out.precision(10);
  const auto& nodes = tree.nodes();
  auto visit = [&](auto&& self, std::size_t i, int depth) -> void {
    const Node& n = nodes[i];
    out << std::string(static_cast<std::size_t>(depth) * 2, ' ');
    if (n.is_leaf()) {
      out << "leaf " << n.region_id << ": predict " << n.prediction << " (n=" << n.sample_count << ")\n";
      return;
    }
    out << tree.feature_names()[n.feature] << " <= " << n.threshold << " (n=" << n.sample_count
        << ", sse_reduction=" << n.sse_reduction << ")\n";
    self(self, n.left, depth + 1);
    self(self, n.right, depth + 1);
  };
  visit(visit, 0, 0);
  return out.str();
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

inline constexpr int kTreeFormatVersion = 1;

inline nlohmann::json params_to_json(const GrowthParams& p) {
  nlohmann::json j;
  j["max_depth"] = p.max_depth ? nlohmann::json(*p.max_depth) : nlohmann::json(nullptr);
  j["min_samples_split"] = p.min_samples_split;
  j["min_samples_leaf"] = p.min_samples_leaf;
  j["max_features"] = p.max_features ? nlohmann::json(*p.max_features) : nlohmann::json(nullptr);
  return j;
}

inline GrowthParams params_from_json(const nlohmann::json& j) {
  GrowthParams p;
  if (!j.at("max_depth").is_null()) p.max_depth = j.at("max_depth").get<int>();
  p.min_samples_split = j.at("min_samples_split").get<int>();
  p.min_samples_leaf = j.at("min_samples_leaf").get<int>();
  if (!j.at("max_features").is_null()) p.max_features = j.at("max_features").get<int>();
  return p;
}

/// Node list without the envelope; reused inside forest model files.
inline nlohmann::json nodes_to_json(const RegressionTree& tree) {
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& n : tree.nodes()) {
    nlohmann::json j;
    if (n.is_leaf()) {
      j["kind"] = "leaf";
      j["prediction"] = n.prediction;
      j["region_id"] = n.region_id;
    } else {
      j["kind"] = "split";
      j["feature"] = n.feature;
      j["threshold"] = n.threshold;
      j["left"] = n.left;
      j["right"] = n.right;
      j["sse_reduction"] = n.sse_reduction;
    }
    j["samples"] = n.sample_count;
    nodes.push_back(std::move(j));
  }
  return nodes;
}

inline std::vector<Node> nodes_from_json(const nlohmann::json& nodes) {
  std::vector<Node> out;
  for (const auto& j : nodes) {
    Node n;
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "leaf") {
      n.kind = NodeKind::leaf;
      n.prediction = j.at("prediction").get<double>();
      n.region_id = j.at("region_id").get<std::size_t>();
    } else if (kind == "split") {
      n.kind = NodeKind::split;
      n.feature = j.at("feature").get<std::size_t>();
      n.threshold = j.at("threshold").get<double>();
      n.left = j.at("left").get<std::size_t>();
      n.right = j.at("right").get<std::size_t>();
      n.sse_reduction = j.at("sse_reduction").get<double>();
    } else {
      throw ValidationError("unknown node kind '" + kind + "'");
    }
    n.sample_count = j.at("samples").get<std::size_t>();
    out.push_back(n);
  }
  return out;
}

inline nlohmann::json to_json(const RegressionTree& tree) {
  nlohmann::json j;
  j["format"] = "salary.regression_tree";
  j["version"] = kTreeFormatVersion;
  j["params"] = params_to_json(tree.params());
  j["feature_names"] = tree.feature_names();
  j["nodes"] = nodes_to_json(tree);
  return j;
}

inline RegressionTree tree_from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "salary.regression_tree") throw ValidationError("not a regression tree document");
  if (j.at("version").get<int>() != kTreeFormatVersion) throw ValidationError("unsupported tree format version");
  return RegressionTree(nodes_from_json(j.at("nodes")), params_from_json(j.at("params")),
                        j.at("feature_names").get<std::vector<std::string>>());
}

}  // namespace salary::cart

#endif  // SALARY_CART_HPP
