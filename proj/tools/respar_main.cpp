#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "respar/dataset.hpp"
#include "respar/decoupled.hpp"
#include "respar/experiment.hpp"
#include "respar/gradcheck.hpp"

namespace {

struct TrainArgs {
  std::string mode;
  std::string config_path;
  std::string out_path;
  std::string serial_ref;
  std::string penalty;
  std::string init;
  int stages = 0;
  int epochs = 0;
  int blocks = 0;
  int feature_dim = 0;
  int hidden_dim = 0;
  int batch_size = -1;
  int workers = -1;
  int coarse_epochs = -1;
  std::uint64_t seed = 0;
  bool no_timing = false;
};

respar::TrainConfig build_train_config(const CLI::App& cmd, const TrainArgs& args) {
  using respar::TrainConfig;
  const bool mode_given = cmd.count("--mode") > 0;
  const respar::TrainMode flag_mode =
      mode_given ? respar::train_mode_from_name(args.mode) : respar::TrainMode::Serial;

  TrainConfig cfg = respar::default_config(flag_mode);
  bool file_has_schedules = false;
  if (!args.config_path.empty()) {
    std::ifstream in(args.config_path);
    if (!in) throw respar::ConfigError("cannot open config file '" + args.config_path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
      file_has_schedules = nlohmann::json::parse(buf.str()).contains("schedules");
    } catch (const nlohmann::json::parse_error& e) {
      throw respar::ConfigError(std::string("config parse error: ") + e.what());
    }
    cfg = respar::parse_config_json(buf.str(), cfg);
  }
  // Flags override file values; a mode flag re-bases default schedules unless
  // the file pinned its own.
  if (mode_given && cfg.mode != flag_mode) {
    cfg.mode = flag_mode;
    if (!file_has_schedules) cfg.schedules = respar::default_schedules(flag_mode);
  }
  if (cmd.count("--stages")) cfg.stages = args.stages;
  if (cmd.count("--epochs")) cfg.epochs = args.epochs;
  if (cmd.count("--seed")) cfg.seed = args.seed;
  if (cmd.count("--blocks")) cfg.num_blocks = args.blocks;
  if (cmd.count("--feature-dim")) cfg.feature_dim = args.feature_dim;
  if (cmd.count("--hidden-dim")) cfg.hidden_dim = args.hidden_dim;
  if (cmd.count("--batch-size")) cfg.batch_size = args.batch_size;
  if (cmd.count("--workers")) cfg.workers = args.workers;
  if (cmd.count("--coarse-epochs")) cfg.coarse_epochs = args.coarse_epochs;
  if (cmd.count("--penalty")) cfg.penalty = respar::penalty_kind_from_name(args.penalty);
  if (cmd.count("--init")) cfg.init = respar::init_scheme_from_name(args.init);
  if (cmd.count("--out")) cfg.out_path = args.out_path;
  if (args.no_timing) cfg.emit_timing = false;
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Layer-parallel training of residual networks"};
  app.require_subcommand(1);

  // dataset
  auto* dataset_cmd = app.add_subcommand("dataset", "Generate the concentric-circles point set");
  int ds_n = 200;
  std::uint64_t ds_seed = 0;
  std::string ds_out = "points.csv";
  dataset_cmd->add_option("--n", ds_n, "number of points")->check(CLI::PositiveNumber);
  dataset_cmd->add_option("--seed", ds_seed, "generator seed");
  dataset_cmd->add_option("--out", ds_out, "output CSV path")->required();

  // gradcheck
  auto* grad_cmd =
      app.add_subcommand("gradcheck", "Finite-difference check of every analytic gradient");
  double gc_eps = 1e-5;
  std::uint64_t gc_seed = 0;
  grad_cmd->add_option("--eps", gc_eps, "central-difference step")->check(CLI::PositiveNumber);
  grad_cmd->add_option("--seed", gc_seed, "instance seed");

  // train
  auto* train_cmd = app.add_subcommand("train", "Run one training experiment");
  TrainArgs ta;
  train_cmd->add_option("--mode", ta.mode, "serial, penalty or alm")
      ->check(CLI::IsMember({"serial", "penalty", "alm"}));
  train_cmd->add_option("--stages", ta.stages, "stage count K")->check(CLI::PositiveNumber);
  train_cmd->add_option("--epochs", ta.epochs, "epoch count")->check(CLI::PositiveNumber);
  train_cmd->add_option("--seed", ta.seed, "experiment seed");
  train_cmd->add_option("--config", ta.config_path, "JSON config file");
  train_cmd->add_option("--out", ta.out_path, "metrics CSV path");
  train_cmd->add_option("--serial-ref", ta.serial_ref,
                        "serial metrics CSV for the speedup ratio");
  train_cmd->add_option("--blocks", ta.blocks, "residual block count L");
  train_cmd->add_option("--feature-dim", ta.feature_dim, "feature width d");
  train_cmd->add_option("--hidden-dim", ta.hidden_dim, "hidden width h");
  train_cmd->add_option("--batch-size", ta.batch_size, "mini-batch size (0 = full batch)");
  train_cmd->add_option("--workers", ta.workers, "stage workers (0 = one per stage)");
  train_cmd->add_option("--coarse-epochs", ta.coarse_epochs, "multilevel coarse budget");
  train_cmd->add_option("--penalty", ta.penalty, "squared_l2, l1 or linf")
      ->check(CLI::IsMember({"squared_l2", "l1", "linf"}));
  train_cmd->add_option("--init", ta.init, "multilevel, warmstart or random")
      ->check(CLI::IsMember({"multilevel", "warmstart", "random"}));
  train_cmd->add_flag("--no-timing", ta.no_timing,
                      "write zeros in the timing column (byte-reproducible output)");

  // report
  auto* report_cmd = app.add_subcommand("report", "Summarize a metrics CSV");
  std::string rp_in;
  std::string rp_ref;
  report_cmd->add_option("--in", rp_in, "metrics CSV path")->required();
  report_cmd->add_option("--serial-ref", rp_ref, "serial metrics CSV for the speedup ratio");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*dataset_cmd) {
      respar::write_points_csv(respar::gen_circles(ds_n, ds_seed), ds_out);
      std::printf("wrote %d points to %s\n", ds_n, ds_out.c_str());
      return 0;
    }
    if (*grad_cmd) {
      const respar::GradCheckReport report = respar::fd_gradcheck(gc_seed, gc_eps);
      for (const auto& e : report.entries)
        std::printf("%-40s max rel err %.3e\n", e.name.c_str(), e.max_rel_err);
      std::printf("overall max rel err %.3e (tolerance 1e-06)\n", report.max_rel_err);
      if (!report.passed()) {
        std::printf("FAIL\n");
        return 1;
      }
      std::printf("OK\n");
      return 0;
    }
    if (*train_cmd) {
      const respar::TrainConfig cfg = build_train_config(*train_cmd, ta);
      const respar::ExperimentResult result = respar::run_experiment(cfg, ta.serial_ref);
      if (!cfg.out_path.empty()) std::printf("wrote metrics to %s\n", cfg.out_path.c_str());
      std::printf("mode=%s K=%d epochs=%d seed=%llu\n", respar::train_mode_name(cfg.mode),
                  cfg.stages, cfg.epochs, static_cast<unsigned long long>(cfg.seed));
      std::printf("init %.2fs (excluded from runtime)\n", result.summary.init_seconds);
      std::fputs(respar::format_summary_table(result.summary).c_str(), stdout);
      return 0;
    }
    if (*report_cmd) {
      const auto rows = respar::read_metrics_csv(rp_in);
      std::fputs(respar::format_summary_table(respar::summarize_metrics(rows, rp_ref)).c_str(),
                 stdout);
      return 0;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
