#include "respar/penalty.hpp"

#include <cmath>
#include <cstddef>

namespace respar {

namespace {

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) {
    throw ShapeError(std::string(op) + ": incompatible shapes " + a.shape_str() + " and " +
                     b.shape_str());
  }
}

double sign0(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

}  // namespace

const char* penalty_kind_name(PenaltyKind kind) {
  switch (kind) {
    case PenaltyKind::SquaredL2: return "squared_l2";
    case PenaltyKind::L1: return "l1";
    case PenaltyKind::LInf: return "linf";
  }
  return "?";
}

PenaltyKind penalty_kind_from_name(const std::string& name) {
  if (name == "squared_l2") return PenaltyKind::SquaredL2;
  if (name == "l1") return PenaltyKind::L1;
  if (name == "linf") return PenaltyKind::LInf;
  throw std::invalid_argument("unknown penalty kind '" + name +
                              "' (expected squared_l2, l1 or linf)");
}

double psi(PenaltyKind kind, const Tensor& lambda, const Tensor& x) {
  require_same_shape("psi", lambda, x);
  double acc = 0.0;
  switch (kind) {
    case PenaltyKind::SquaredL2:
      for (std::size_t i = 0; i < lambda.data.size(); ++i) {
        const double d = lambda.data[i] - x.data[i];
        acc += d * d;
      }
      return acc;
    case PenaltyKind::L1:
      for (std::size_t i = 0; i < lambda.data.size(); ++i)
        acc += std::fabs(lambda.data[i] - x.data[i]);
      return acc;
    case PenaltyKind::LInf:
      for (std::size_t i = 0; i < lambda.data.size(); ++i)
        acc = std::max(acc, std::fabs(lambda.data[i] - x.data[i]));
      return acc;
  }
  return acc;
}

PsiGrads psi_grads(PenaltyKind kind, const Tensor& lambda, const Tensor& x) {
  require_same_shape("psi_grads", lambda, x);
  Tensor d_lambda(lambda.rows, lambda.cols);
  switch (kind) {
    case PenaltyKind::SquaredL2:
      for (std::size_t i = 0; i < lambda.data.size(); ++i)
        d_lambda.data[i] = 2.0 * (lambda.data[i] - x.data[i]);
      break;
    case PenaltyKind::L1:
      for (std::size_t i = 0; i < lambda.data.size(); ++i)
        d_lambda.data[i] = sign0(lambda.data[i] - x.data[i]);
      break;
    case PenaltyKind::LInf: {
      std::size_t arg = 0;
      double best = -1.0;
      for (std::size_t i = 0; i < lambda.data.size(); ++i) {
        const double m = std::fabs(lambda.data[i] - x.data[i]);
        if (m > best) {  // strict: ties keep the lowest flat index
          best = m;
          arg = i;
        }
      }
      if (!lambda.data.empty()) d_lambda.data[arg] = sign0(lambda.data[arg] - x.data[arg]);
      break;
    }
  }
  return {d_lambda, scale(d_lambda, -1.0)};
}

ViolationReport make_violation_report(
    PenaltyKind kind, const std::vector<std::pair<const Tensor*, const Tensor*>>& boundaries,
    long normalizer) {
  ViolationReport report;
  report.normalizer = normalizer;
  report.per_stage.push_back(0.0);  // psi(lambda_0, x_0) = 0 by definition
  for (const auto& [lambda_k, x_prev] : boundaries) {
    report.per_stage.push_back(psi(kind, *lambda_k, *x_prev));
  }
  report.max_violation = 0.0;
  for (double v : report.per_stage) report.max_violation = std::max(report.max_violation, v);
  return report;
}

}  // namespace respar
