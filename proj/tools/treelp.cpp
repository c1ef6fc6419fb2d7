#include <csignal>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "treelp/pipeline.hpp"
#include "treelp/service/server.hpp"

namespace {

using namespace treelp;

int exit_code(ErrorKind k) {
  switch (k) {
    case ErrorKind::usage: return 1;
    case ErrorKind::data: return 2;
    case ErrorKind::model: return 3;
  }
  return 1;
}

std::optional<fs::path> opt_path(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return fs::path(s);
}

httplib::Server* g_server = nullptr;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Decision trees compiled to explainable rule programs"};
  app.require_subcommand(1);

  PipelineConfig cfg;
  std::string dataset, grid_path, outdir = ".", criterion = "entropy", max_features = "all";
  std::optional<std::uint64_t> seed;
  auto* train = app.add_subcommand("train", "Train a tree and write model.json and metrics.json");
  train->add_option("--dataset", dataset, "CSV or JSON table")->required()->check(CLI::ExistingFile);
  train->add_option("--target", cfg.target, "Target column")->capture_default_str();
  train->add_option("--seed", seed, "Random seed")->required();
  train->add_option("--grid", grid_path, "Grid search specification (JSON)")->check(CLI::ExistingFile);
  train->add_option("--train-fraction", cfg.train_fraction, "Share of rows used for training")->capture_default_str();
  train->add_option("--features", cfg.k, "Number of features to keep, 0 for all")->capture_default_str();
  train->add_option("--max-thresholds", cfg.max_thresholds, "Discretizer cut points per feature")->capture_default_str();
  train->add_option("--max-depth", cfg.params.max_depth, "Depth without a grid")->capture_default_str();
  train->add_option("--criterion", criterion, "entropy or gini")->capture_default_str();
  train->add_option("--max-features", max_features, "sqrt, log2 or all")->capture_default_str();
  train->add_option("--min-samples-leaf", cfg.params.min_samples_leaf)->capture_default_str();
  train->add_option("--out", outdir, "Output directory")->capture_default_str();

  std::string model, cases, labels, encoding = "paths";
  std::int64_t case_id = 0;
  auto* compile = app.add_subcommand("compile", "Write nodes.lp, paths.lp and extra.lp");
  compile->add_option("--model", model)->required()->check(CLI::ExistingFile);
  compile->add_option("--out", outdir)->capture_default_str();
  compile->add_option("--labels", labels, "Class label map (JSON)")->check(CLI::ExistingFile);
  compile->add_option("--cases", cases, "Also write cases.lp from these cases")->check(CLI::ExistingFile);

  auto* explain = app.add_subcommand("explain", "Explain the prediction for one case");
  explain->add_option("--model", model)->required()->check(CLI::ExistingFile);
  explain->add_option("--cases", cases, "CSV with an id column, or .lp facts")->required()->check(CLI::ExistingFile);
  explain->add_option("--id", case_id)->required();
  explain->add_option("--encoding", encoding, "nodes or paths")->capture_default_str();
  explain->add_option("--labels", labels)->check(CLI::ExistingFile);

  auto* predict = app.add_subcommand("predict", "Predict every case");
  predict->add_option("--model", model)->required()->check(CLI::ExistingFile);
  predict->add_option("--cases", cases)->required()->check(CLI::ExistingFile);
  predict->add_option("--encoding", encoding)->capture_default_str();
  predict->add_option("--labels", labels)->check(CLI::ExistingFile);

  auto* rank = app.add_subcommand("rank", "Chi-square ranking of the features");
  rank->add_option("--dataset", dataset)->required()->check(CLI::ExistingFile);
  rank->add_option("--target", cfg.target)->capture_default_str();
  rank->add_option("--max-thresholds", cfg.max_thresholds)->capture_default_str();

  std::string bind = "127.0.0.1";
  int port = 8080;
  auto* serve = app.add_subcommand("serve", "Serve a model over HTTP");
  serve->add_option("--model", model)->required()->check(CLI::ExistingFile);
  serve->add_option("--labels", labels)->check(CLI::ExistingFile);
  serve->add_option("--bind", bind)->capture_default_str();
  serve->add_option("--port", port)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (*train) {
      cfg.dataset = dataset;
      cfg.seed = *seed;
      cfg.outdir = outdir;
      cfg.params.criterion = parse_criterion(criterion);
      cfg.params.max_features = parse_max_features(max_features);
      if (!grid_path.empty()) cfg.grid = learn::parse_grid(read_file(grid_path));
      cmd_train(cfg, std::cerr);
    } else if (*compile) {
      for (const auto& p : cmd_compile(model, outdir, opt_path(labels), opt_path(cases))) std::cerr << "wrote " << p.string() << "\n";
    } else if (*explain) {
      std::cout << cmd_explain(model, cases, case_id, compile::parse_encoding(encoding), opt_path(labels));
    } else if (*predict) {
      std::cout << cmd_predict(model, cases, compile::parse_encoding(encoding), opt_path(labels));
    } else if (*rank) {
      std::cout << cmd_rank(dataset, cfg.target, cfg.max_thresholds);
    } else if (*serve) {
      auto loaded = std::make_shared<const service::LoadedModel>(load_compiled(model, opt_path(labels)));
      service::Service svc(loaded);
      auto server = service::make_server(svc);
      g_server = server.get();
      std::signal(SIGINT, [](int) { g_server->stop(); });
      std::signal(SIGTERM, [](int) { g_server->stop(); });
      std::cerr << "listening on " << bind << ":" << port << "\n";
      if (!server->listen(bind, port)) throw UsageError("cannot listen on " + bind + ":" + std::to_string(port));
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
