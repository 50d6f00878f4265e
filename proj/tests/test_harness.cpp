#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "respar/dataset.hpp"
#include "respar/decoupled.hpp"
#include "respar/experiment.hpp"
#include "respar/gradcheck.hpp"
#include "respar/metrics.hpp"

using namespace respar;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string temp_path(const std::string& name) {
  return std::string("/tmp/respar_test_") + name;
}

}  // namespace

TEST_CASE("circle labels") {
  CHECK(circles_label(0.0, 0.0) == 0);   // center
  CHECK(circles_label(1.0, 1.0) == 2);   // corner, radius sqrt(2)
  CHECK(circles_label(0.5, 0.0) == 0);   // boundary points go inward
  CHECK(circles_label(0.0, 0.75) == 1);
  CHECK(circles_label(0.8, 0.0) == 2);
}

TEST_CASE("gen_circles determinism and label rule") {
  const Dataset a = gen_circles(200, 9);
  const Dataset b = gen_circles(200, 9);
  CHECK(a.points.data == b.points.data);
  CHECK(a.labels == b.labels);
  CHECK(a.points.rows == 200);
  CHECK(a.points.cols == 2);

  const Dataset other = gen_circles(200, 10);
  CHECK(a.points.data != other.points.data);

  // Independent distance computation for every generated point.
  for (int i = 0; i < 200; ++i) {
    const double x = a.points.at(i, 0);
    const double y = a.points.at(i, 1);
    CHECK(x >= -1.0);
    CHECK(x < 1.0);
    const double r = std::sqrt(x * x + y * y);
    const int want = r <= 0.5 ? 0 : (r <= 0.75 ? 1 : 2);
    CHECK(a.labels[i] == want);
  }

  CHECK_THROWS_AS(gen_circles(0, 1), std::invalid_argument);
}

TEST_CASE("points csv") {
  const Dataset data = gen_circles(25, 3);
  const std::string path = temp_path("points.csv");
  write_points_csv(data, path);
  const std::string text = slurp(path);
  CHECK(text.rfind("x,y,label\n", 0) == 0);
  write_points_csv(data, path);
  CHECK(slurp(path) == text);
  std::remove(path.c_str());
}

TEST_CASE("metrics csv round trip is exact") {
  std::vector<MetricsRow> rows;
  rows.push_back({0, 1.0986122886681098, 0.3333333333333333, 0.0, 1.0, 0.1, 0.012345});
  rows.push_back({1, 3.5e-5, 0.95, 1.25e-7, 100.0, 0.001, 0.011111});
  const std::string path = temp_path("metrics.csv");
  write_metrics_csv(rows, path);
  const std::vector<MetricsRow> back = read_metrics_csv(path);
  REQUIRE(back.size() == rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) CHECK(back[i] == rows[i]);
  std::remove(path.c_str());

  CHECK_THROWS(read_metrics_csv(temp_path("missing.csv")));
}

TEST_CASE("config defaults follow the toy-study schedules") {
  const TrainConfig penalty = default_config(TrainMode::Penalty);
  CHECK(Schedules::value_at(penalty.schedules.beta_steps, 0, 0) == 1.0);
  CHECK(Schedules::value_at(penalty.schedules.beta_steps, 99, 0) == 1.0);
  CHECK(Schedules::value_at(penalty.schedules.beta_steps, 100, 0) == 10.0);
  CHECK(Schedules::value_at(penalty.schedules.beta_steps, 299, 0) == 100.0);
  CHECK(Schedules::value_at(penalty.schedules.lr_steps, 69, 0) == 0.1);
  CHECK(Schedules::value_at(penalty.schedules.lr_steps, 70, 0) == 0.01);
  CHECK(Schedules::value_at(penalty.schedules.lr_steps, 150, 0) == 0.001);
  CHECK(penalty.schedules.kappa_lr == 1e-9);
  CHECK(penalty.schedules.correction_max_iters == 1);

  const TrainConfig alm = default_config(TrainMode::Alm);
  CHECK(Schedules::value_at(alm.schedules.beta_steps, 0, 0) == 0.1);
  CHECK(Schedules::value_at(alm.schedules.beta_steps, 260, 0) == 10.0);
}

TEST_CASE("config json parsing and validation") {
  const TrainConfig base = default_config(TrainMode::Serial);

  const TrainConfig cfg = parse_config_json(
      R"({"mode": "alm", "stages": 3, "blocks": 12, "epochs": 5,
          "schedules": {"beta": [[0, 0.5], [3, 5.0]], "kappa_lr": 1e-8,
                        "correction_max_iters": 4, "tau": [[0, 0.01]]}})",
      base);
  CHECK(cfg.mode == TrainMode::Alm);
  CHECK(cfg.stages == 3);
  CHECK(Schedules::value_at(cfg.schedules.beta_steps, 4, 0) == 5.0);
  CHECK(cfg.schedules.kappa_lr == 1e-8);
  CHECK(cfg.schedules.correction_max_iters == 4);
  // Mode switch without explicit schedules re-bases the defaults.
  const TrainConfig alm2 = parse_config_json(R"({"mode": "alm"})", base);
  CHECK(Schedules::value_at(alm2.schedules.beta_steps, 0, 0) == 0.1);

  CHECK_THROWS_AS(parse_config_json(R"({"stagez": 2})", base), ConfigError);
  CHECK_THROWS_AS(parse_config_json(R"({"stages": 7, "blocks": 60})", base), ConfigError);
  CHECK_THROWS_AS(parse_config_json(R"({"epochs": 0})", base), ConfigError);
  CHECK_THROWS_AS(parse_config_json(R"({"mode": "alm", "penalty": "l1"})", base), ConfigError);
  CHECK_THROWS_AS(parse_config_json(R"({"schedules": {"beta": [[5, 1.0], [2, 2.0]]}})", base),
                  ConfigError);
  CHECK_THROWS_AS(parse_config_json("not json", base), ConfigError);
}

TEST_CASE("fd_gradcheck passes on the standard instance") {
  const GradCheckReport report = fd_gradcheck(0, 1e-5);
  CHECK(report.entries.size() >= 6);
  for (const auto& e : report.entries) {
    INFO(e.name);
    CHECK(e.max_rel_err <= 1e-6);
  }
  CHECK(report.passed());
  CHECK_THROWS_AS(fd_gradcheck(0, 0.0), std::invalid_argument);
}

TEST_CASE("identity-activation synthetic loss: finite differences are exact") {
  // With the tanh hook replaced by the identity the stage map is affine, so a
  // quadratic synthetic loss has bias-free central differences.
  Rng rng(20);
  ResidualNet net = make_net(2, 4, 4, 3, 3, rng);
  net.activation = Activation::Identity;
  Tensor lambda = rng_uniform(rng, 5, 4, -1.0, 1.0);
  const Tensor lambda_next = rng_uniform(rng, 5, 4, 1.0, 2.0);
  const Tensor kappa_next = rng_uniform(rng, 5, 4, 0.5, 1.5);
  const double beta = 3.0, norm = 20.0;

  const auto eval = [&] {
    const ForwardTape tape = net_forward(net, lambda, 1, 2);
    return beta / norm * psi(PenaltyKind::SquaredL2, lambda_next, tape.features) +
           dot(kappa_next, tape.features);
  };
  const ForwardTape tape = net_forward(net, lambda, 1, 2);
  Tensor upstream = scale(psi_grads(PenaltyKind::SquaredL2, lambda_next, tape.features).d_x,
                          beta / norm);
  axpy_inplace(upstream, 1.0, kappa_next);
  const VjpResult vjp = net_vjp(net, tape, upstream);

  // Central differences are exact for quadratics at any step, so a large step
  // suppresses the division roundoff.
  const double eps = 1e-2;
  const auto check_exact = [&](Tensor& param, const Tensor& analytic) {
    for (std::size_t i = 0; i < param.data.size(); ++i) {
      const double saved = param.data[i];
      param.data[i] = saved + eps;
      const double hi = eval();
      param.data[i] = saved - eps;
      const double lo = eval();
      param.data[i] = saved;
      const double fd = (hi - lo) / (2 * eps);
      const double denom = std::max(std::fabs(analytic.data[i]), std::fabs(fd));
      REQUIRE(denom > 1e-3);  // the instance is built to have O(1) gradients
      CHECK(std::fabs(analytic.data[i] - fd) / denom <= 1e-9);
    }
  };
  check_exact(net.blocks[1].w2, vjp.grads.blocks[0].w2);
  check_exact(net.blocks[1].b2, vjp.grads.blocks[0].b2);
  check_exact(lambda, vjp.input_cotangent);
}

TEST_CASE("run_experiment writes reproducible metrics") {
  TrainConfig cfg = default_config(TrainMode::Penalty);
  cfg.stages = 2;
  cfg.num_blocks = 6;
  cfg.feature_dim = 4;
  cfg.hidden_dim = 4;
  cfg.epochs = 4;
  cfg.coarse_epochs = 1;
  cfg.train_points = 24;
  cfg.test_points = 24;
  cfg.seed = 11;
  cfg.emit_timing = false;  // byte-reproducible output
  cfg.out_path = temp_path("exp_a.csv");
  const ExperimentResult a = run_experiment(cfg);
  cfg.out_path = temp_path("exp_b.csv");
  const ExperimentResult b = run_experiment(cfg);
  CHECK(slurp(temp_path("exp_a.csv")) == slurp(temp_path("exp_b.csv")));
  CHECK(a.metrics.size() == 4);
  CHECK(a.summary.final_test_accuracy >= 0.0);
  CHECK(a.summary.final_test_accuracy <= 1.0);
  CHECK(a.summary.final_train_loss >= 0.0);
  for (const MetricsRow& row : a.metrics) {
    CHECK(row.train_loss >= 0.0);
    CHECK(std::isfinite(row.train_loss));
  }
  std::remove(temp_path("exp_a.csv").c_str());
  std::remove(temp_path("exp_b.csv").c_str());
  (void)b;
}

TEST_CASE("summaries and speedup against a reference file") {
  std::vector<MetricsRow> serial_rows;
  for (int e = 0; e < 4; ++e) serial_rows.push_back({e, 0.5, 0.8, 0.0, 0.0, 0.1, 1.0});
  const std::string ref = temp_path("serial_ref.csv");
  write_metrics_csv(serial_rows, ref);

  std::vector<MetricsRow> fast_rows;
  for (int e = 0; e < 4; ++e) fast_rows.push_back({e, 0.4, 0.9, 0.1, 1.0, 0.1, 0.5});
  const ExperimentSummary s = summarize_metrics(fast_rows, ref);
  CHECK(s.speedup == doctest::Approx(2.0));
  CHECK(s.train_wall_seconds == doctest::Approx(2.0));
  CHECK(s.final_test_accuracy == 0.9);
  const std::string table = format_summary_table(s);
  CHECK(table.find("speedup") != std::string::npos);
  std::remove(ref.c_str());
}

TEST_CASE("mini-batch slicing keeps per-sample auxiliary state") {
  TrainConfig cfg = default_config(TrainMode::Penalty);
  cfg.stages = 2;
  cfg.num_blocks = 6;
  cfg.feature_dim = 4;
  cfg.hidden_dim = 4;
  cfg.epochs = 3;
  cfg.coarse_epochs = 1;
  cfg.train_points = 30;
  cfg.test_points = 30;
  cfg.seed = 13;

  const Dataset train_set = gen_circles(30, 13);
  const Dataset test_set = gen_circles(30, 14);

  // batch_size 0 is an alias for the full batch.
  cfg.batch_size = 0;
  const TrainResult full = train(cfg, train_set, test_set);
  cfg.batch_size = 30;
  const TrainResult same = train(cfg, train_set, test_set);
  CHECK(full.metrics.back().train_loss == same.metrics.back().train_loss);

  // Uneven mini-batches (30 = 8+8+8+6) run, stay finite and are reproducible.
  cfg.batch_size = 8;
  const TrainResult mini1 = train(cfg, train_set, test_set);
  const TrainResult mini2 = train(cfg, train_set, test_set);
  for (std::size_t i = 0; i < mini1.metrics.size(); ++i) {
    CHECK(std::isfinite(mini1.metrics[i].train_loss));
    CHECK(mini1.metrics[i].train_loss == mini2.metrics[i].train_loss);
    CHECK(mini1.metrics[i].max_violation == mini2.metrics[i].max_violation);
  }
}

TEST_CASE("noise injection into the last auxiliary variable") {
  TrainConfig cfg = default_config(TrainMode::Penalty);
  cfg.stages = 2;
  cfg.num_blocks = 6;
  cfg.feature_dim = 4;
  cfg.hidden_dim = 4;
  cfg.epochs = 4;
  cfg.coarse_epochs = 1;
  cfg.train_points = 24;
  cfg.test_points = 24;
  cfg.seed = 17;
  cfg.schedules.noise_sigma_last = 0.01;

  const Dataset train_set = gen_circles(24, 17);
  const Dataset test_set = gen_circles(24, 18);
  const TrainResult a = train(cfg, train_set, test_set);
  const TrainResult b = train(cfg, train_set, test_set);
  for (std::size_t i = 0; i < a.metrics.size(); ++i) {
    CHECK(std::isfinite(a.metrics[i].train_loss));
    CHECK(a.metrics[i].train_loss == b.metrics[i].train_loss);
  }
  cfg.schedules.noise_sigma_last = 0.0;
  const TrainResult quiet = train(cfg, train_set, test_set);
  CHECK(quiet.metrics.back().train_loss != a.metrics.back().train_loss);
}
