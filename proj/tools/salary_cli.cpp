// salary: command-line front end for the weekly-salary models.
//
//   salary ingest   --input s1.csv --input s2.csv --out data/
//   salary train    --input data/dataset.csv --model rf --out run/
//   salary estimate --input data/dataset.csv --model-file run/model.json --out run/
//   salary cv       --input data/dataset.csv --model rf --grid grid.json --k 5 --out cv/
//   salary report   --input data/dataset.csv --model-file run/model.json --out run/

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>

#include "salary.hpp"

namespace {

using salary::commands::ModelKind;
using salary::commands::RunConfig;

void mark_failed(const std::string& out_dir, const std::string& command, const std::string& message) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  std::ofstream marker(std::filesystem::path(out_dir) / "FAILED", std::ios::trunc);
  marker << command << ": " << message << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Weekly salary prediction with a random forest and a nested mixed-effects model"};
  app.set_config("--config", "", "TOML/INI file with option defaults (command-line flags win)");
  app.require_subcommand(1);
  app.fallthrough();

  RunConfig cfg;
  std::string model = "rf";
  std::string method;
  std::string max_features = "all";
  std::string max_depth = "none";
  std::uint64_t rng_state = 0;
  double threshold = 0.0;
  bool no_bootstrap = false;
  std::vector<std::string> fixed_effects;

  app.add_option("--input", cfg.inputs, "Input CSV file(s); seasons oldest first for ingest");
  app.add_option("--out", cfg.out_dir, "Output directory")->capture_default_str();
  app.add_option("--model", model, "Model kind")->check(CLI::IsMember({"rf", "lmm"}))->capture_default_str();
  auto* rng_opt = app.add_option("--rng-state", rng_state,
                                 "Random state (rf: bagging, default 2; estimate: interval draws, default 10; "
                                 "cv: fold shuffle, default 0)");
  app.add_option("--level", cfg.level, "Prediction interval level")->check(CLI::Range(0.0, 1.0))->capture_default_str();
  app.add_option("--k", cfg.k, "Number of cross-validation folds")->check(CLI::PositiveNumber)->capture_default_str();
  auto* threshold_opt =
      app.add_option("--threshold", threshold, "SMAPE threshold as a fraction (default: the dataset's SMAPE)");
  app.add_option("--model-file", cfg.model_file, "Model file written by train");
  app.add_option("--codebook", cfg.codebook, "Codebook CSV (label,code) with category-prefixed labels");
  app.add_option("--grid", cfg.grid_file, "JSON parameter grid for cv");
  app.add_option("--method", method, "Estimation method")->check(CLI::IsMember({"interval", "smape"}));
  app.add_option("--n-draws", cfg.n_draws, "Simulation draws for prediction intervals")->capture_default_str();
  app.add_flag("--svg", cfg.svg, "Also write SVG renderings of the plot data");
  app.add_option("--threads", cfg.threads, "Worker threads for forest fitting")->capture_default_str();
  app.add_option("--n-estimators", cfg.forest.n_estimators, "Trees in the forest")->capture_default_str();
  app.add_option("--max-features", max_features, "Features tried per split (integer or 'all')")->capture_default_str();
  app.add_option("--max-depth", max_depth, "Maximum tree depth (integer or 'none')")->capture_default_str();
  app.add_option("--min-samples-split", cfg.forest.min_samples_split)->capture_default_str();
  app.add_option("--min-samples-leaf", cfg.forest.min_samples_leaf)->capture_default_str();
  app.add_flag("--no-bootstrap", no_bootstrap, "Grow every tree on the full dataset");
  app.add_option("--fixed-effects", fixed_effects, "Override the mixed model's fixed-effect features")->delimiter(',');

  std::map<std::string, CLI::App*> subs = {
      {"ingest", app.add_subcommand("ingest", "Join, clean, encode and average exported season tables")},
      {"train", app.add_subcommand("train", "Fit a model on a dataset and report training metrics")},
      {"estimate", app.add_subcommand("estimate", "Label players as over-, under- or normally estimated")},
      {"cv", app.add_subcommand("cv", "k-fold cross-validation and grid search")},
      {"report", app.add_subcommand("report", "Summarise a fitted model on a dataset")}};

  CLI11_PARSE(app, argc, argv);

  std::string command;
  for (const auto& [name, sub] : subs)
    if (sub->parsed()) command = name;

  try {
    cfg.model = model == "lmm" ? ModelKind::lmm : ModelKind::rf;
    if (*rng_opt) cfg.rng_state = rng_state;
    if (*threshold_opt) cfg.threshold = threshold;
    if (method == "interval") cfg.method = salary::estimate::Method::interval;
    if (method == "smape") cfg.method = salary::estimate::Method::smape_threshold;
    if (max_features != "all") cfg.forest.max_features = std::stoi(max_features);
    if (max_depth != "none") cfg.forest.max_depth = std::stoi(max_depth);
    cfg.forest.bootstrap = !no_bootstrap;
    if (!fixed_effects.empty()) cfg.mixed_spec.fixed_effects = fixed_effects;

    if (command == "ingest") {
      auto s = salary::commands::run_ingest(cfg);
      std::cout << "ingested " << s.players << " players into " << cfg.out_dir << '\n';
      for (const auto& p : s.provenance)
        std::cout << "  " << p.season << ": " << p.input_rows << " rows, " << p.join_dropped << " without salary, "
                  << p.minutes_dropped << " under 90 minutes, " << p.retained << " kept\n";
    } else if (command == "train") {
      salary::commands::run_train(cfg);
      std::cout << "model written to " << (std::filesystem::path(cfg.out_dir) / "model.json").string() << '\n';
    } else if (command == "estimate") {
      auto s = salary::commands::run_estimate(cfg).summary;
      using salary::estimate::EstimationLabel;
      for (auto l : {EstimationLabel::Normal, EstimationLabel::Overestimation, EstimationLabel::Underestimation})
        std::cout << salary::estimate::to_string(l) << ": " << s.count(l) << " (" << s.fraction(l) * 100.0 << "%)\n";
      if (s.method == salary::estimate::Method::smape_threshold)
        std::cout << "threshold (SMAPE): " << s.threshold_or_level * 100.0 << "%\n";
    } else if (command == "cv") {
      auto r = salary::commands::run_cv(cfg);
      std::cout << "best mean R^2 " << r.best_score << " at " << salary::evaluate::describe(r.best_params) << '\n';
    } else if (command == "report") {
      std::cout << salary::commands::run_report(cfg);
    }
    std::error_code ec;
    std::filesystem::remove(std::filesystem::path(cfg.out_dir) / "FAILED", ec);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    mark_failed(cfg.out_dir, command, e.what());
    return 1;
  }
  return 0;
}
