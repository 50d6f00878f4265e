#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "respar/dataset.hpp"
#include "respar/decoupled.hpp"
#include "respar/experiment.hpp"
#include "respar/gradcheck.hpp"
#include "respar/penalty.hpp"

namespace py = pybind11;

namespace {

respar::Tensor tensor_from_lists(const std::vector<std::vector<double>>& rows) {
  const int r = static_cast<int>(rows.size());
  const int c = r == 0 ? 0 : static_cast<int>(rows[0].size());
  respar::Tensor t(r, c);
  for (int i = 0; i < r; ++i) {
    if (static_cast<int>(rows[i].size()) != c)
      throw std::invalid_argument("ragged rows in tensor literal");
    for (int j = 0; j < c; ++j) t.at(i, j) = rows[i][j];
  }
  return t;
}

std::vector<std::vector<double>> tensor_to_lists(const respar::Tensor& t) {
  std::vector<std::vector<double>> rows(t.rows, std::vector<double>(t.cols));
  for (int i = 0; i < t.rows; ++i)
    for (int j = 0; j < t.cols; ++j) rows[i][j] = t.at(i, j);
  return rows;
}

}  // namespace

PYBIND11_MODULE(_respar, m) {
  m.doc() = "Layer-parallel training of residual networks";

  py::class_<respar::MetricsRow>(m, "MetricsRow")
      .def_readonly("epoch", &respar::MetricsRow::epoch)
      .def_readonly("train_loss", &respar::MetricsRow::train_loss)
      .def_readonly("test_accuracy", &respar::MetricsRow::test_accuracy)
      .def_readonly("max_violation", &respar::MetricsRow::max_violation)
      .def_readonly("beta", &respar::MetricsRow::beta)
      .def_readonly("lr", &respar::MetricsRow::lr)
      .def_readonly("epoch_seconds", &respar::MetricsRow::epoch_seconds)
      .def("__repr__", [](const respar::MetricsRow& r) {
        return "MetricsRow(epoch=" + std::to_string(r.epoch) +
               ", train_loss=" + std::to_string(r.train_loss) +
               ", test_accuracy=" + std::to_string(r.test_accuracy) + ")";
      });

  py::class_<respar::ExperimentSummary>(m, "ExperimentSummary")
      .def_readonly("final_train_loss", &respar::ExperimentSummary::final_train_loss)
      .def_readonly("final_test_accuracy", &respar::ExperimentSummary::final_test_accuracy)
      .def_readonly("train_wall_seconds", &respar::ExperimentSummary::train_wall_seconds)
      .def_readonly("mean_epoch_seconds", &respar::ExperimentSummary::mean_epoch_seconds)
      .def_readonly("init_seconds", &respar::ExperimentSummary::init_seconds)
      .def_readonly("speedup", &respar::ExperimentSummary::speedup);

  py::class_<respar::TrainConfig>(m, "TrainConfig")
      .def(py::init([](const std::string& mode) {
             return respar::default_config(respar::train_mode_from_name(mode));
           }),
           py::arg("mode") = "serial")
      .def_property(
          "mode",
          [](const respar::TrainConfig& c) { return std::string(train_mode_name(c.mode)); },
          [](respar::TrainConfig& c, const std::string& v) {
            c.mode = respar::train_mode_from_name(v);
            c.schedules = respar::default_schedules(c.mode);
          })
      .def_readwrite("stages", &respar::TrainConfig::stages)
      .def_readwrite("blocks", &respar::TrainConfig::num_blocks)
      .def_readwrite("feature_dim", &respar::TrainConfig::feature_dim)
      .def_readwrite("hidden_dim", &respar::TrainConfig::hidden_dim)
      .def_readwrite("epochs", &respar::TrainConfig::epochs)
      .def_readwrite("batch_size", &respar::TrainConfig::batch_size)
      .def_readwrite("seed", &respar::TrainConfig::seed)
      .def_readwrite("train_points", &respar::TrainConfig::train_points)
      .def_readwrite("test_points", &respar::TrainConfig::test_points)
      .def_property(
          "penalty",
          [](const respar::TrainConfig& c) { return std::string(penalty_kind_name(c.penalty)); },
          [](respar::TrainConfig& c, const std::string& v) {
            c.penalty = respar::penalty_kind_from_name(v);
          })
      .def_property(
          "init",
          [](const respar::TrainConfig& c) { return std::string(init_scheme_name(c.init)); },
          [](respar::TrainConfig& c, const std::string& v) {
            c.init = respar::init_scheme_from_name(v);
          })
      .def_readwrite("coarse_epochs", &respar::TrainConfig::coarse_epochs)
      .def_readwrite("warmstart_epochs", &respar::TrainConfig::warmstart_epochs)
      .def_readwrite("workers", &respar::TrainConfig::workers)
      .def_readwrite("out_path", &respar::TrainConfig::out_path)
      .def_readwrite("emit_timing", &respar::TrainConfig::emit_timing);

  m.def("load_config", [](const std::string& path) {
    return respar::load_config_file(path, respar::default_config(respar::TrainMode::Serial));
  });

  m.def(
      "gen_circles",
      [](int n, std::uint64_t seed) {
        const respar::Dataset data = respar::gen_circles(n, seed);
        return py::make_tuple(tensor_to_lists(data.points), data.labels);
      },
      py::arg("n"), py::arg("seed") = 0,
      "Uniform points in [-1,1]^2 labeled by the three concentric rings");

  m.def(
      "gradcheck",
      [](std::uint64_t seed, double eps, double tol) {
        const respar::GradCheckReport report = respar::fd_gradcheck(seed, eps);
        py::dict errs;
        for (const auto& e : report.entries) errs[py::str(e.name)] = e.max_rel_err;
        return py::make_tuple(report.passed(tol), errs);
      },
      py::arg("seed") = 0, py::arg("eps") = 1e-5, py::arg("tol") = 1e-6,
      "Returns (passed, {check name: max rel err})");

  m.def(
      "psi",
      [](const std::string& kind, const std::vector<std::vector<double>>& lam,
         const std::vector<std::vector<double>>& x) {
        return respar::psi(respar::penalty_kind_from_name(kind), tensor_from_lists(lam),
                           tensor_from_lists(x));
      },
      py::arg("kind"), py::arg("lam"), py::arg("x"), "Penalty discrepancy psi(lambda, x)");

  m.def(
      "train",
      [](const respar::TrainConfig& cfg, const std::string& serial_ref) {
        respar::ExperimentResult result;
        {
          py::gil_scoped_release release;
          result = respar::run_experiment(cfg, serial_ref);
        }
        return py::make_tuple(result.summary, result.metrics);
      },
      py::arg("config"), py::arg("serial_ref") = "",
      "Runs one experiment; returns (summary, per-epoch rows)");
}
