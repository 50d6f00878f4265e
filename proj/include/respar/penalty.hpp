#ifndef RESPAR_PENALTY_HPP
#define RESPAR_PENALTY_HPP

#include <string>
#include <utility>
#include <vector>

#include "respar/tensor.hpp"

namespace respar {

// Discrepancy metric between an auxiliary variable and the state it stands for.
// SquaredL2 is the plain sum of squares (not root-squared): the multiplier and
// stationarity updates assume dpsi/dlambda == 2*(lambda - x).
enum class PenaltyKind { SquaredL2, L1, LInf };

const char* penalty_kind_name(PenaltyKind kind);
PenaltyKind penalty_kind_from_name(const std::string& name);

double psi(PenaltyKind kind, const Tensor& lambda, const Tensor& x);

// d_x == -d_lambda for every kind. L1 uses sign with sign(0)=0; LInf puts unit
// mass on the largest-magnitude entry (lowest flat index on ties).
struct PsiGrads {
  Tensor d_lambda;
  Tensor d_x;
};
PsiGrads psi_grads(PenaltyKind kind, const Tensor& lambda, const Tensor& x);

// Per-stage discrepancies psi(lambda_k, X^{k-1}_{kn}). Entry 0 is identically
// zero: stage 0 starts from the true input, there is nothing to violate.
struct ViolationReport {
  std::vector<double> per_stage;
  double max_violation = 0.0;
  long normalizer = 0;  // scalar element count of one lambda_k
};

// boundaries[k-1] = (lambda_k, cached X^{k-1}_{kn}) for stages k = 1..K-1.
ViolationReport make_violation_report(
    PenaltyKind kind, const std::vector<std::pair<const Tensor*, const Tensor*>>& boundaries,
    long normalizer);

}  // namespace respar

#endif  // RESPAR_PENALTY_HPP
