#ifndef SALARY_COMMANDS_HPP
#define SALARY_COMMANDS_HPP

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "salary/common.hpp"
#include "salary/csv.hpp"
#include "salary/dataset.hpp"
#include "salary/estimate.hpp"
#include "salary/evaluate.hpp"
#include "salary/forest.hpp"
#include "salary/ingest.hpp"
#include "salary/mixedmodel.hpp"
#include "salary/svg.hpp"

// Command implementations behind the `salary` executable. Every command
// reads its inputs, writes its artifacts under `out_dir`, and throws on error.
namespace salary::commands {

enum class ModelKind { rf, lmm };

inline std::string_view to_string(ModelKind k) { return k == ModelKind::rf ? "rf" : "lmm"; }

inline constexpr std::uint64_t kDefaultIntervalSeed = 10;
inline constexpr std::uint64_t kDefaultShuffleSeed = 0;

struct RunConfig {
  std::vector<std::string> inputs;
  std::string out_dir = "out";
  ModelKind model = ModelKind::rf;
  std::string model_file;
  std::string codebook;
  std::string grid_file;
  std::optional<std::uint64_t> rng_state;
  forest::ForestParams forest;
  mixed::MixedModelSpec mixed_spec;
  double level = 0.90;
  int n_draws = 1000;
  int k = 5;
  std::optional<double> threshold;
  std::optional<estimate::Method> method;
  bool svg = false;
  unsigned threads = 1;
};

namespace detail {

inline std::filesystem::path prepare_out(const RunConfig& cfg) {
  std::filesystem::path dir(cfg.out_dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

inline void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  auto out = open_out(path);
  out << j.dump(1, '\t') << '\n';
}

inline nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(path + ": " + e.what());
  }
}

inline const std::string& single_input(const RunConfig& cfg) {
  if (cfg.inputs.size() != 1) throw Error("expected exactly one --input file");
  return cfg.inputs.front();
}

inline Dataset load(const RunConfig& cfg) {
  const Codebook book = cfg.codebook.empty() ? Codebook::defaults() : ingest::read_codebook_file(cfg.codebook);
  return ingest::load_dataset(single_input(cfg), book);
}

inline void write_metric_rows(std::ostream& out, const std::vector<std::pair<std::string, std::string>>& rows) {
  csv::write_row(out, {"METRIC", "VALUE"});
  for (const auto& [k, v] : rows) csv::write_row(out, {k, v});
}

inline void write_importances(const std::filesystem::path& dir, const forest::ForestModel& model, bool svg) {
  const auto& imp = model.importances();
  std::vector<std::size_t> order(imp.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return imp[a] > imp[b]; });
  auto out = open_out(dir / "feature_importance.csv");
  csv::write_row(out, {"RANK", "FEATURE", "IMPORTANCE"});
  std::vector<std::string> labels;
  std::vector<double> values;
  for (std::size_t r = 0; r < order.size(); ++r) {
    csv::write_row(out, {std::to_string(r + 1), model.feature_names()[order[r]], csv::format_number(imp[order[r]])});
    labels.push_back(model.feature_names()[order[r]]);
    values.push_back(imp[order[r]]);
  }
  if (svg) {
    auto s = open_out(dir / "feature_importance.svg");
    svg::bars(s, labels, values, "Impurity-based feature importance");
  }
}

inline void write_fixed_effects(const std::filesystem::path& path, const mixed::MixedModelFit& fit) {
  auto out = open_out(path);
  csv::write_row(out, {"TERM", "ESTIMATE", "STD_ERROR", "T_VALUE", "P_VALUE", "SIGNIF"});
  for (const auto& row : mixed::fixed_effect_table(fit))
    csv::write_row(out, {row.name, csv::format_number(row.estimate), csv::format_number(row.std_error),
                         csv::format_number(row.t_value), csv::format_number(row.p_value), row.stars});
}

/// Either model behind one interface.
struct LoadedModel {
  ModelKind kind = ModelKind::rf;
  std::optional<forest::ForestModel> forest;
  std::optional<mixed::MixedModelFit> mixed;

  double predict(const PlayerRecord& r) const {
    return kind == ModelKind::rf ? forest->predict(r.x()) : mixed->predict(r);
  }
  std::vector<double> predict_all(const Dataset& d) const {
    std::vector<double> out;
    out.reserve(d.size());
    for (const auto& r : d.records) out.push_back(predict(r));
    return out;
  }
};

inline LoadedModel load_model(const std::string& path) {
  const auto j = read_json(path);
  const auto format = j.value("format", "");
  LoadedModel m;
  if (format == "salary.random_forest") {
    m.kind = ModelKind::rf;
    m.forest = forest::forest_from_json(j);
  } else if (format == "salary.mixed_model") {
    m.kind = ModelKind::lmm;
    m.mixed = mixed::fit_from_json(j);
  } else {
    throw ValidationError(path + " is not a model file");
  }
  return m;
}

inline std::vector<std::pair<std::string, std::string>> metric_rows(const LoadedModel& model, const Dataset& d,
                                                                    const std::string& protocol) {
  const auto pred = model.predict_all(d);
  const auto truth = d.targets();
  const auto report = evaluate::metric_report(
      std::span<const double>(truth.data(), static_cast<std::size_t>(truth.size())), pred);
  std::vector<std::pair<std::string, std::string>> rows = {
      {"protocol", protocol},
      {"model", std::string(to_string(model.kind))},
      {"n", std::to_string(report.n)},
      {"r_square", csv::format_number(report.r_square)},
      {"rmse", csv::format_number(report.rmse)},
      {"smape", csv::format_number(report.smape)}};
  if (model.kind == ModelKind::lmm) {
    const auto& fit = *model.mixed;
    const auto ic = mixed::information_criteria(fit);
    rows.insert(rows.end(), {{"aic", csv::format_number(ic.aic)},
                             {"bic", csv::format_number(ic.bic)},
                             {"reml_loglik", csv::format_number(fit.reml_loglik)},
                             {"r2_marginal", csv::format_number(fit.r2_marginal)},
                             {"r2_conditional", csv::format_number(fit.r2_conditional)},
                             {"var_league", csv::format_number(fit.var_league)},
                             {"var_club_in_league", csv::format_number(fit.var_club_in_league)},
                             {"var_residual", csv::format_number(fit.var_residual)}});
  }
  return rows;
}

inline void apply_forest_param(forest::ForestParams& p, const std::string& name, const nlohmann::json& v) {
  auto optional_int = [&](std::optional<int>& field) {
    if (v.is_null() || (v.is_string() && (v == "all" || v == "none" || v == "None"))) field.reset();
    else field = v.get<int>();
  };
  if (name == "n_estimators") p.n_estimators = v.get<int>();
  else if (name == "max_features") optional_int(p.max_features);
  else if (name == "max_depth") optional_int(p.max_depth);
  else if (name == "min_samples_split") p.min_samples_split = v.get<int>();
  else if (name == "min_samples_leaf") p.min_samples_leaf = v.get<int>();
  else if (name == "bootstrap") p.bootstrap = v.get<bool>();
  else if (name == "base_rng_state" || name == "random_state") p.base_rng_state = v.get<std::uint64_t>();
  else throw SchemaError("unknown random forest parameter '" + name + "'");
}

inline void apply_mixed_param(mixed::MixedModelSpec& s, const std::string& name, const nlohmann::json& v) {
  if (name == "league_intercept") s.league_intercept = v.get<bool>();
  else if (name == "club_intercept") s.club_intercept = v.get<bool>();
  else if (name == "fixed_effects") s.fixed_effects = v.get<std::vector<std::string>>();
  else throw SchemaError("unknown mixed model parameter '" + name + "'");
}

}  // namespace detail

struct IngestSummary {
  std::size_t players = 0;
  std::vector<ingest::SeasonProvenance> provenance;
};

/// Season CSVs (oldest first) -> dataset.csv, codebook.csv, provenance.json.
inline IngestSummary run_ingest(const RunConfig& cfg) {
  if (cfg.inputs.empty()) throw Error("ingest needs at least one --input season file");
  const auto dir = detail::prepare_out(cfg);
  const Codebook labels = cfg.codebook.empty() ? Codebook::defaults() : ingest::read_codebook_file(cfg.codebook);
  std::vector<std::pair<std::string, csv::Table>> seasons;
  for (const auto& path : cfg.inputs) seasons.emplace_back(std::filesystem::path(path).filename().string(), csv::read_file(path));
  auto result = ingest::ingest_seasons(seasons, labels);

  {
    auto out = detail::open_out(dir / "dataset.csv");
    ingest::write_dataset(out, result.dataset);
  }
  {
    auto out = detail::open_out(dir / "codebook.csv");
    csv::write_row(out, {"label", "code"});
    for (const auto& [l, c] : result.codebook.positions) csv::write_row(out, {"position:" + l, std::to_string(c)});
    for (const auto& [l, c] : result.codebook.leagues) csv::write_row(out, {"league:" + l, std::to_string(c)});
    for (const auto& [l, c] : result.codebook.clubs) csv::write_row(out, {"club:" + l, std::to_string(c)});
  }
  nlohmann::json prov = nlohmann::json::array();
  std::size_t minutes = 0, joins = 0;
  for (const auto& p : result.provenance) {
    prov.push_back({{"season", p.season},
                    {"input_rows", p.input_rows},
                    {"join_dropped", p.join_dropped},
                    {"minutes_filter_dropped", p.minutes_dropped},
                    {"retained", p.retained}});
    minutes += p.minutes_dropped;
    joins += p.join_dropped;
  }
  detail::write_json(dir / "provenance.json", {{"seasons", prov},
                                               {"minutes_filter_dropped", minutes},
                                               {"join_dropped", joins},
                                               {"players", result.dataset.size()},
                                               {"clubs", result.dataset.club_count},
                                               {"leagues", result.dataset.league_count}});
  return {result.dataset.size(), result.provenance};
}

/// Fits the chosen model on the whole dataset -> model.json and
/// train_metrics.csv (in-sample, no held-out split).
inline void run_train(const RunConfig& cfg) {
  const auto dir = detail::prepare_out(cfg);
  const Dataset data = detail::load(cfg);
  detail::LoadedModel model;
  model.kind = cfg.model;
  if (cfg.model == ModelKind::rf) {
    auto params = cfg.forest;
    if (cfg.rng_state) params.base_rng_state = *cfg.rng_state;
    model.forest = forest::fit_forest(data, params, cfg.threads);
    detail::write_json(dir / "model.json", forest::to_json(*model.forest));
    detail::write_importances(dir, *model.forest, cfg.svg);
  } else {
    model.mixed = mixed::fit_reml(data, cfg.mixed_spec);
    detail::write_json(dir / "model.json", mixed::to_json(*model.mixed));
    detail::write_fixed_effects(dir / "fixed_effects.csv", *model.mixed);
  }
  auto out = detail::open_out(dir / "train_metrics.csv");
  detail::write_metric_rows(out, detail::metric_rows(model, data, "training set (no held-out split)"));
}

struct EstimateSummary {
  estimate::EstimationSummary summary;
};

/// Labels every player and writes the estimation table, its summary, and the
/// plot data (predicted vs true, residuals, and for forests the importances).
inline EstimateSummary run_estimate(const RunConfig& cfg) {
  if (cfg.model_file.empty()) throw Error("estimate needs --model-file");
  const auto dir = detail::prepare_out(cfg);
  const Dataset data = detail::load(cfg);
  const auto model = detail::load_model(cfg.model_file);
  const auto method =
      cfg.method.value_or(model.kind == ModelKind::lmm ? estimate::Method::interval : estimate::Method::smape_threshold);

  const auto pred = model.predict_all(data);
  std::vector<estimate::EstimationLabel> labels;
  double parameter = 0.0;
  if (method == estimate::Method::interval) {
    if (model.kind != ModelKind::lmm) throw Error("the interval method needs a mixed model");
    const auto intervals = mixed::prediction_interval(*model.mixed, data, cfg.level, cfg.n_draws,
                                                      cfg.rng_state.value_or(kDefaultIntervalSeed));
    const auto rows = estimate::classify_intervals(data, intervals);
    for (const auto& r : rows) labels.push_back(r.label);
    parameter = cfg.level;
    auto out = detail::open_out(dir / "estimates.csv");
    estimate::write_interval_rows(out, rows);
    auto pi = detail::open_out(dir / "prediction_intervals.csv");
    estimate::write_prediction_intervals(pi, data, intervals);
  } else {
    const auto rows = estimate::classify_by_threshold(data, pred, cfg.threshold, &parameter);
    for (const auto& r : rows) labels.push_back(r.label);
    auto out = detail::open_out(dir / "estimates.csv");
    estimate::write_threshold_rows(out, rows);
  }
  const auto summary = estimate::summarize(labels, method, parameter);
  {
    auto out = detail::open_out(dir / "estimation_summary.csv");
    estimate::write_summary(out, summary);
  }

  std::vector<double> truth;
  for (const auto& r : data.records) truth.push_back(r.weekly_gross);
  {
    auto out = detail::open_out(dir / "predicted_vs_true.csv");
    csv::write_row(out, {"PLAYER", "TRUE", "PRED"});
    for (std::size_t i = 0; i < data.size(); ++i)
      csv::write_row(out, {data.records[i].player_name, csv::format_number(truth[i]), csv::format_number(pred[i])});
  }
  {
    auto out = detail::open_out(dir / "residuals.csv");
    evaluate::write_residuals(out, data, pred);
  }
  if (model.kind == ModelKind::rf) detail::write_importances(dir, *model.forest, cfg.svg);
  if (cfg.svg) {
    auto s = detail::open_out(dir / "predicted_vs_true.svg");
    svg::scatter(s, truth, pred, "Predicted vs true weekly salary", "true", "predicted", svg::Reference::identity);
    const auto res = evaluate::residuals(truth, pred);
    auto r = detail::open_out(dir / "residuals.svg");
    svg::scatter(r, pred, res, "Residuals", "predicted", "true - predicted", svg::Reference::zero);
  }
  return {summary};
}

/// k-fold cross-validation, over a parameter grid when --grid is given.
inline evaluate::GridSearchResult run_cv(const RunConfig& cfg) {
  const auto dir = detail::prepare_out(cfg);
  const Dataset data = detail::load(cfg);
  evaluate::ParamGrid grid;
  if (!cfg.grid_file.empty()) {
    std::ifstream in(cfg.grid_file, std::ios::binary);
    if (!in) throw Error("cannot open grid file " + cfg.grid_file);
    grid = evaluate::grid_from_json(nlohmann::ordered_json::parse(in));
  } else {
    grid = {{"(configured)", {nlohmann::json(true)}}};
  }
  const auto seed = cfg.rng_state.value_or(kDefaultShuffleSeed);

  auto make_factory = [&](const evaluate::GridPoint& point) -> evaluate::ModelFactory {
    if (cfg.model == ModelKind::rf) {
      auto params = cfg.forest;
      for (const auto& [name, v] : point)
        if (name != "(configured)") detail::apply_forest_param(params, name, v);
      const unsigned threads = cfg.threads;
      return [params, threads](const Dataset& train) -> evaluate::Predictor {
        auto model = std::make_shared<forest::ForestModel>(forest::fit_forest(train, params, threads));
        return [model](const PlayerRecord& r) { return model->predict(r.x()); };
      };
    }
    auto spec = cfg.mixed_spec;
    for (const auto& [name, v] : point)
      if (name != "(configured)") detail::apply_mixed_param(spec, name, v);
    return [spec](const Dataset& train) -> evaluate::Predictor {
      auto fit = std::make_shared<mixed::MixedModelFit>(mixed::fit_reml(train, spec));
      return [fit](const PlayerRecord& r) { return fit->predict(r); };
    };
  };
  auto result = evaluate::grid_search(data, grid, cfg.k, seed, make_factory);
  {
    auto out = detail::open_out(dir / "cv_scores.csv");
    evaluate::write_score_table(out, result);
  }
  nlohmann::json best = nlohmann::json::object();
  for (const auto& [name, v] : result.best_params) best[name] = v;
  detail::write_json(dir / "best_params.json", {{"model", to_string(cfg.model)},
                                                {"k", cfg.k},
                                                {"shuffle_rng_state", seed},
                                                {"protocol", "k-fold cross-validation"},
                                                {"best_params", best},
                                                {"best_mean_r_square", result.best_score}});
  return result;
}

/// Human-readable summary of a fitted model on a dataset -> report.txt and
/// report_metrics.csv.
inline std::string run_report(const RunConfig& cfg) {
  if (cfg.model_file.empty()) throw Error("report needs --model-file");
  const auto dir = detail::prepare_out(cfg);
  const Dataset data = detail::load(cfg);
  const auto model = detail::load_model(cfg.model_file);
  const auto rows = detail::metric_rows(model, data, "evaluated on --input (in-sample if it is the training set)");
  {
    auto out = detail::open_out(dir / "report_metrics.csv");
    detail::write_metric_rows(out, rows);
  }
  std::ostringstream text;
  text << "Model: " << to_string(model.kind) << "\nDataset: " << detail::single_input(cfg) << " (" << data.size()
       << " players, " << data.club_count << " clubs, " << data.league_count << " leagues)\n\n";
  for (const auto& [k, v] : rows) text << "  " << k << ": " << v << '\n';
  text << '\n';
  if (model.kind == ModelKind::lmm) {
    text << "Fixed effects (p-values: two-sided normal approximation)\n";
    for (const auto& r : mixed::fixed_effect_table(*model.mixed))
      text << "  " << r.name << "  estimate=" << csv::format_number(r.estimate)
           << "  t=" << csv::format_number(r.t_value) << "  p=" << csv::format_number(r.p_value) << ' ' << r.stars
           << '\n';
    text << "Signif. codes: '***' p < 0.001, '**' p < 0.01, '*' p < 0.05\n";
  } else {
    const auto& imp = model.forest->importances();
    std::vector<std::size_t> order(imp.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return imp[a] > imp[b]; });
    text << "Feature importance (normalised SSE reduction)\n";
    for (auto j : order) text << "  " << model.forest->feature_names()[j] << "  " << csv::format_number(imp[j]) << '\n';
    detail::write_importances(dir, *model.forest, cfg.svg);
  }
  auto out = detail::open_out(dir / "report.txt");
  out << text.str();
  return text.str();
}

}  // namespace salary::commands

#endif  // SALARY_COMMANDS_HPP
