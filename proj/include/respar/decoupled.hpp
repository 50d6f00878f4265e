#ifndef RESPAR_DECOUPLED_HPP
#define RESPAR_DECOUPLED_HPP

#include <utility>
#include <vector>

#include "respar/config.hpp"
#include "respar/dataset.hpp"
#include "respar/metrics.hpp"
#include "respar/network.hpp"
#include "respar/penalty.hpp"
#include "respar/runtime.hpp"
#include "respar/tensor.hpp"

namespace respar {

// K equal contiguous block ranges [kn, kn+n); throws ConfigError when K does
// not divide L.
std::vector<std::pair<int, int>> partition(int num_blocks, int stages);

// One shooting interval of the decoupled net. Stage 0 starts from the true
// input (lambda_0 is never stored), later stages from their auxiliary
// variable; kappa_0 is identically zero. lambda/kappa/boundary tensors hold
// one row per training sample so mini-batches slice by sample index.
struct StageState {
  int index = 0;
  int begin = 0;  // first block
  int end = 0;    // one past the last block
  Tensor lambda;
  Tensor kappa;
  Tensor boundary_out;      // X^k_{end} from the latest forward
  Tensor boundary_adjoint;  // p^k_{begin} from the latest backward
  ForwardTape tape;         // current batch only
  long version = -1;        // iteration stamp of tape/boundary caches
};

// Read-only copy of the downstream neighbour state taken at iteration start;
// the one piece of cross-stage data a backward pass may touch.
struct NeighborSnapshot {
  Tensor lambda_next;
  Tensor kappa_next;
};

// Per-iteration coefficients resolved from the schedules.
struct StepParams {
  double beta = 1.0;
  double tau = -1.0;  // < 0 means no tolerance (single correction pass)
  double lr = 0.1;
  double lambda_lr = 0.1;
  double kappa_lr = 1e-9;
  int max_corrections = 1;
};

// Algorithm state for the stage-parallel trainer; penalty mode is the
// degenerate case that never touches kappa.
class DecoupledTrainer {
 public:
  DecoupledTrainer(ResidualNet net, int stages, TrainMode mode, PenaltyKind kind,
                   int num_samples);

  // Serial forward pass over the whole set: lambda_k := X_{kn}, kappa := 0,
  // boundary caches refreshed. Initial violation is exactly zero.
  void reset_lambda_from_forward(const Tensor& full_x);

  // One training iteration on rows [row0, row0+batch.rows): parallel stage
  // forward+backward, then the serial correction sweep. Returns the last
  // stage's batch loss (from its forward pass, before any update).
  double step(const Tensor& batch_x, const std::vector<int>& labels, int row0,
              const StepParams& params, StagePool& pool);

  // Pieces of step(), public so tests and oracles can drive them directly.
  void take_snapshot(int k, int row0, int nrows, NeighborSnapshot& snap) const;
  void stage_forward(int k, const Tensor& batch_x, int row0);
  // Backpropagates phi for the last stage and the synthetic loss
  // (beta/#)psi(lambda_{k+1}, X^k_end) + <kappa_{k+1}, X^k_end> otherwise;
  // applies the gradient step to the stage's own parameters and caches the
  // boundary adjoint. Returns the gradients for inspection.
  NetGrads stage_backward_update(int k, const std::vector<int>& labels,
                                 const NeighborSnapshot& snap, double beta, double lr, int row0);
  // lambda_k step(s) combining the backward-looking penalty gradient, the
  // cached boundary adjoint and -kappa_k. First pass always runs; passes
  // 2..max_corrections run only while psi > tau.
  void correct_aux(int k, const StepParams& params, int row0, int nrows);
  // kappa_k <- kappa_k - eta #/(2 beta) (lambda_k - X^{k-1}_{kn});
  // requires the squared-l2 penalty.
  void correct_multiplier(int k, double beta, double kappa_lr, int row0, int nrows);

  // The full lambda-correction gradient at the cached state (test/oracle hook).
  Tensor correction_gradient(int k, double beta, int row0, int nrows) const;

  ViolationReport violation_report() const;

  const ResidualNet& net() const { return net_; }
  ResidualNet& net() { return net_; }
  int stages() const { return static_cast<int>(stages_.size()); }
  int blocks_per_stage() const { return blocks_per_stage_; }
  StageState& stage(int k) { return stages_.at(k); }
  const StageState& stage(int k) const { return stages_.at(k); }
  long iteration() const { return iteration_; }
  TrainMode mode() const { return mode_; }
  PenaltyKind penalty_kind() const { return kind_; }

  // Normalizer #: scalar element count of one lambda slice.
  static long normalizer(int nrows, int feature_dim) {
    return static_cast<long>(nrows) * feature_dim;
  }

 private:
  void require_corrector_stage(int k) const;

  ResidualNet net_;
  TrainMode mode_;
  PenaltyKind kind_;
  int blocks_per_stage_ = 0;
  int num_samples_ = 0;
  std::vector<StageState> stages_;
  long iteration_ = 0;
  bool has_forward_ = false;
  double last_stage_loss_ = 0.0;
};

// Builds the initial network (and trains the warm start) for cfg. The
// multilevel scheme trains a K-block coarse net serially for cfg.coarse_epochs
// and replicates each coarse block n times into its stage.
ResidualNet build_initial_net(const TrainConfig& cfg, const Tensor& train_x,
                              const std::vector<int>& labels, Rng& rng);

struct TrainResult {
  std::vector<MetricsRow> metrics;
  std::vector<EpochTiming> timings;
  double init_seconds = 0.0;
  ResidualNet net;
};

// Full experiment loop: schedules, per-epoch serial-forward evaluation,
// violation reporting. Aborts with a diagnostic if the loss turns non-finite.
TrainResult train(const TrainConfig& cfg, const Dataset& train_set, const Dataset& test_set);

}  // namespace respar

#endif  // RESPAR_DECOUPLED_HPP
