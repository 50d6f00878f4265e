#include "respar/decoupled.hpp"

#include <cassert>
#include <chrono>
#include <cmath>
#include <optional>

namespace respar {

std::vector<std::pair<int, int>> partition(int num_blocks, int stages) {
  if (stages < 1) throw ConfigError("partition: need at least one stage");
  if (num_blocks < 1 || num_blocks % stages != 0) {
    throw ConfigError("partition: " + std::to_string(stages) + " stages do not divide " +
                      std::to_string(num_blocks) + " blocks evenly");
  }
  const int n = num_blocks / stages;
  std::vector<std::pair<int, int>> ranges;
  ranges.reserve(stages);
  for (int k = 0; k < stages; ++k) ranges.emplace_back(k * n, (k + 1) * n);
  return ranges;
}

DecoupledTrainer::DecoupledTrainer(ResidualNet net, int stages, TrainMode mode, PenaltyKind kind,
                                   int num_samples)
    : net_(std::move(net)), mode_(mode), kind_(kind), num_samples_(num_samples) {
  if (num_samples < 1) throw ConfigError("DecoupledTrainer: need at least one sample");
  const auto ranges = partition(net_.depth(), stages);
  blocks_per_stage_ = ranges[0].second - ranges[0].first;
  stages_.resize(stages);
  for (int k = 0; k < stages; ++k) {
    StageState& st = stages_[k];
    st.index = k;
    st.begin = ranges[k].first;
    st.end = ranges[k].second;
    if (k > 0) {
      st.lambda = Tensor(num_samples, net_.d);
      st.kappa = Tensor(num_samples, net_.d);
    }
    st.boundary_out = Tensor(num_samples, net_.d);
    st.boundary_adjoint = Tensor(num_samples, net_.d);
  }
}

void DecoupledTrainer::reset_lambda_from_forward(const Tensor& full_x) {
  if (full_x.rows != num_samples_) {
    throw ShapeError("reset_lambda_from_forward: " + full_x.shape_str() + " vs " +
                     std::to_string(num_samples_) + " samples");
  }
  Tensor cur = full_x;
  for (int k = 0; k < stages(); ++k) {
    StageState& st = stages_[k];
    if (k > 0) {
      st.lambda = cur;
      st.kappa = Tensor(num_samples_, net_.d);
    }
    const ForwardTape tape = net_forward(net_, cur, st.begin, st.end);
    cur = tape.features;
    st.boundary_out = cur;
    st.boundary_adjoint = Tensor(num_samples_, net_.d);
    st.version = iteration_;
  }
  has_forward_ = true;
}

void DecoupledTrainer::take_snapshot(int k, int row0, int nrows, NeighborSnapshot& snap) const {
  if (k < 0 || k >= stages() - 1) {
    throw std::invalid_argument("take_snapshot: stage " + std::to_string(k) +
                                " has no downstream neighbour");
  }
  const StageState& next = stages_[k + 1];
  snap.lambda_next = slice_rows(next.lambda, row0, nrows);
  snap.kappa_next = slice_rows(next.kappa, row0, nrows);
}

void DecoupledTrainer::stage_forward(int k, const Tensor& batch_x, int row0) {
  StageState& st = stages_.at(k);
  const int nrows = batch_x.rows;
  const Tensor input = k == 0 ? batch_x : slice_rows(st.lambda, row0, nrows);
  st.tape = net_forward(net_, input, st.begin, st.end);
  assign_rows(st.boundary_out, row0, st.tape.features);
  st.version = iteration_;
  has_forward_ = true;
}

NetGrads DecoupledTrainer::stage_backward_update(int k, const std::vector<int>& labels,
                                                 const NeighborSnapshot& snap, double beta,
                                                 double lr, int row0) {
  StageState& st = stages_.at(k);
  if (st.version != iteration_) {
    throw std::logic_error("stage_backward_update: stage " + std::to_string(k) +
                           " has no forward pass for this iteration");
  }
  const int nrows = st.tape.features.rows;
  Tensor upstream;
  if (k == stages() - 1) {
    const LossResult loss = loss_phi(st.tape.logits, labels);
    last_stage_loss_ = loss.value;
    upstream = loss.grad_logits;
  } else {
    if (snap.lambda_next.empty()) {
      throw std::invalid_argument("stage_backward_update: stage " + std::to_string(k) +
                                  " needs the (lambda, kappa) snapshot of stage " +
                                  std::to_string(k + 1));
    }
    // Synthetic loss (beta/#) psi(lambda_{k+1}, X^k_end) + <kappa_{k+1}, X^k_end>.
    const double w = beta / static_cast<double>(normalizer(nrows, net_.d));
    const PsiGrads pg = psi_grads(kind_, snap.lambda_next, st.tape.features);
    upstream = scale(pg.d_x, w);
    axpy_inplace(upstream, 1.0, snap.kappa_next);
  }
  VjpResult vjp = net_vjp(net_, st.tape, upstream);
  apply_updates(net_, vjp.grads, st.begin, lr);
  assign_rows(st.boundary_adjoint, row0, vjp.input_cotangent);
  return std::move(vjp.grads);
}

void DecoupledTrainer::require_corrector_stage(int k) const {
  if (k < 1 || k >= stages()) {
    throw std::invalid_argument("correction: stage " + std::to_string(k) +
                                " out of range (lambda_0 is fixed to the true input)");
  }
}

Tensor DecoupledTrainer::correction_gradient(int k, double beta, int row0, int nrows) const {
  require_corrector_stage(k);
  const Tensor lambda_k = slice_rows(stages_[k].lambda, row0, nrows);
  const Tensor x_prev = slice_rows(stages_[k - 1].boundary_out, row0, nrows);
  const double w = beta / static_cast<double>(normalizer(nrows, net_.d));
  Tensor g = scale(psi_grads(kind_, lambda_k, x_prev).d_lambda, w);
  axpy_inplace(g, 1.0, slice_rows(stages_[k].boundary_adjoint, row0, nrows));
  axpy_inplace(g, -1.0, slice_rows(stages_[k].kappa, row0, nrows));
  return g;
}

void DecoupledTrainer::correct_aux(int k, const StepParams& params, int row0, int nrows) {
  require_corrector_stage(k);
  if (!has_forward_) throw std::logic_error("correct_aux before any forward pass");
  assert(stages_[k - 1].version == stages_[k].version);
  const Tensor x_prev = slice_rows(stages_[k - 1].boundary_out, row0, nrows);
  const Tensor p_k = slice_rows(stages_[k].boundary_adjoint, row0, nrows);
  const Tensor kappa_k = slice_rows(stages_[k].kappa, row0, nrows);
  const double w = params.beta / static_cast<double>(normalizer(nrows, net_.d));

  Tensor lambda_k = slice_rows(stages_[k].lambda, row0, nrows);
  for (int pass = 0; pass < params.max_corrections; ++pass) {
    // The first pass always runs; further passes only while psi exceeds the
    // tolerance (tau < 0 disables them, the single-correction default).
    if (pass >= 1 && (params.tau < 0.0 || psi(kind_, lambda_k, x_prev) <= params.tau)) break;
    Tensor g = scale(psi_grads(kind_, lambda_k, x_prev).d_lambda, w);
    axpy_inplace(g, 1.0, p_k);
    axpy_inplace(g, -1.0, kappa_k);
    axpy_inplace(lambda_k, -params.lambda_lr, g);
  }
  assign_rows(stages_[k].lambda, row0, lambda_k);
}

void DecoupledTrainer::correct_multiplier(int k, double beta, double kappa_lr, int row0,
                                          int nrows) {
  require_corrector_stage(k);
  if (kind_ != PenaltyKind::SquaredL2) {
    throw std::logic_error("correct_multiplier: the multiplier update is only derived for the "
                           "squared_l2 penalty");
  }
  const Tensor lambda_k = slice_rows(stages_[k].lambda, row0, nrows);
  const Tensor x_prev = slice_rows(stages_[k - 1].boundary_out, row0, nrows);
  Tensor kappa_k = slice_rows(stages_[k].kappa, row0, nrows);
  const double w = static_cast<double>(normalizer(nrows, net_.d)) / (2.0 * beta);
  axpy_inplace(kappa_k, -kappa_lr * w, sub(lambda_k, x_prev));
  assign_rows(stages_[k].kappa, row0, kappa_k);
}

double DecoupledTrainer::step(const Tensor& batch_x, const std::vector<int>& labels, int row0,
                              const StepParams& params, StagePool& pool) {
  if (pool.stages() != stages()) {
    throw std::invalid_argument("step: pool built for " + std::to_string(pool.stages()) +
                                " stages, trainer has " + std::to_string(stages()));
  }
  const int nrows = batch_x.rows;
  ++iteration_;

  std::vector<NeighborSnapshot> snaps(stages());
  for (int k = 0; k + 1 < stages(); ++k) take_snapshot(k, row0, nrows, snaps[k]);

  pool.run_iteration([&](int k) {
    stage_forward(k, batch_x, row0);
    stage_backward_update(k, labels, snaps[k], params.beta, params.lr, row0);
  });

  for (int k = 1; k < stages(); ++k) {
    correct_aux(k, params, row0, nrows);
    if (mode_ == TrainMode::Alm) correct_multiplier(k, params.beta, params.kappa_lr, row0, nrows);
  }
  return last_stage_loss_;
}

ViolationReport DecoupledTrainer::violation_report() const {
  if (!has_forward_) {
    throw std::logic_error("violation_report: no forward pass has cached boundary states yet");
  }
  std::vector<std::pair<const Tensor*, const Tensor*>> boundaries;
  for (int k = 1; k < stages(); ++k) {
    boundaries.emplace_back(&stages_[k].lambda, &stages_[k - 1].boundary_out);
  }
  return make_violation_report(kind_, boundaries, normalizer(num_samples_, net_.d));
}

ResidualNet build_initial_net(const TrainConfig& cfg, const Tensor& train_x,
                              const std::vector<int>& labels, Rng& rng) {
  // The serial baseline is the traditional method: plain random init.
  if (cfg.mode == TrainMode::Serial || cfg.init == InitScheme::Random) {
    return make_net(2, cfg.feature_dim, cfg.hidden_dim, cfg.num_blocks, cfg.classes, rng);
  }
  const auto lr_at = [&](int epoch) {
    return Schedules::value_at(cfg.schedules.lr_steps, epoch, 0.1);
  };
  if (cfg.init == InitScheme::Warmstart) {
    ResidualNet net =
        make_net(2, cfg.feature_dim, cfg.hidden_dim, cfg.num_blocks, cfg.classes, rng);
    for (int e = 0; e < cfg.warmstart_epochs; ++e) serial_train_step(net, train_x, labels, lr_at(e));
    return net;
  }
  // Multilevel: train a K-block coarse net, then replicate each trained block
  // n times to fill its stage. The replicas' branch outputs carry a 1/n
  // factor: n small steps of x + F/n retrace one coarse step of x + F, so the
  // deep net starts out computing (nearly) the trained coarse map.
  ResidualNet coarse = make_net(2, cfg.feature_dim, cfg.hidden_dim, cfg.stages, cfg.classes, rng);
  for (int e = 0; e < cfg.coarse_epochs; ++e) serial_train_step(coarse, train_x, labels, lr_at(e));
  ResidualNet net;
  net.in_dim = coarse.in_dim;
  net.d = coarse.d;
  net.h = coarse.h;
  net.classes = coarse.classes;
  net.activation = coarse.activation;
  net.s = coarse.s;
  net.t = coarse.t;
  const int n = cfg.num_blocks / cfg.stages;
  net.blocks.reserve(cfg.num_blocks);
  for (int k = 0; k < cfg.stages; ++k) {
    BlockParams replica = coarse.blocks[k];
    replica.w2 = scale(replica.w2, 1.0 / n);
    replica.b2 = scale(replica.b2, 1.0 / n);
    for (int i = 0; i < n; ++i) net.blocks.push_back(replica);
  }
  return net;
}

namespace {

[[noreturn]] void abort_non_finite(const TrainConfig& cfg, int epoch,
                                   const DecoupledTrainer* trainer) {
  std::string where = "n/a";
  if (trainer) {
    for (int k = 0; k < trainer->stages(); ++k) {
      const StageState& st = trainer->stage(k);
      if (!all_finite(st.boundary_out) || (k > 0 && !all_finite(st.lambda))) {
        where = std::to_string(k);
        break;
      }
    }
  }
  throw std::runtime_error("training diverged: non-finite loss at epoch " +
                           std::to_string(epoch) + " (mode " + train_mode_name(cfg.mode) +
                           ", K=" + std::to_string(cfg.stages) + ", stage " + where + ")");
}

}  // namespace

TrainResult train(const TrainConfig& cfg, const Dataset& train_set, const Dataset& test_set) {
  cfg.validate();
  using clock = std::chrono::steady_clock;
  const int n_train = train_set.points.rows;
  const int batch = cfg.batch_size == 0 ? n_train : std::min(cfg.batch_size, n_train);

  Rng root(cfg.seed);
  Rng net_rng = root.split();
  Rng noise_rng = root.split();

  TrainResult result;
  const auto t_init = clock::now();
  ResidualNet net = build_initial_net(cfg, train_set.points, train_set.labels, net_rng);

  std::optional<DecoupledTrainer> trainer;
  std::optional<StagePool> pool;
  if (cfg.mode != TrainMode::Serial) {
    trainer.emplace(std::move(net), cfg.stages, cfg.mode, cfg.penalty, n_train);
    trainer->reset_lambda_from_forward(train_set.points);
    pool.emplace(cfg.stages, resolve_worker_count(cfg.workers, cfg.stages));
  }
  result.init_seconds = std::chrono::duration<double>(clock::now() - t_init).count();

  const int last_stage = cfg.stages - 1;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    StepParams sp;
    sp.beta = Schedules::value_at(cfg.schedules.beta_steps, epoch, 1.0);
    sp.tau = Schedules::value_at(cfg.schedules.tau_steps, epoch, -1.0);
    sp.lr = Schedules::value_at(cfg.schedules.lr_steps, epoch, 0.1);
    sp.lambda_lr = cfg.schedules.lambda_lr_steps.empty()
                       ? sp.lr * cfg.schedules.lambda_lr_scale
                       : Schedules::value_at(cfg.schedules.lambda_lr_steps, epoch, sp.lr);
    sp.kappa_lr = cfg.schedules.kappa_lr;
    sp.max_corrections = cfg.schedules.correction_max_iters;

    EpochTiming timing;
    timing.epoch = epoch;
    const auto t0 = clock::now();
    for (int row0 = 0; row0 < n_train; row0 += batch) {
      const int nrows = std::min(batch, n_train - row0);
      const Tensor batch_x = slice_rows(train_set.points, row0, nrows);
      const std::vector<int> batch_y(train_set.labels.begin() + row0,
                                     train_set.labels.begin() + row0 + nrows);
      if (cfg.mode == TrainMode::Serial) {
        serial_train_step(net, batch_x, batch_y, sp.lr);
      } else {
        trainer->step(batch_x, batch_y, row0, sp, *pool);
        if (cfg.schedules.noise_sigma_last > 0.0 && cfg.stages >= 2) {
          Tensor noise =
              rng_normal(noise_rng, nrows, trainer->net().d, 0.0, cfg.schedules.noise_sigma_last);
          Tensor lam = slice_rows(trainer->stage(last_stage).lambda, row0, nrows);
          axpy_inplace(lam, 1.0, noise);
          assign_rows(trainer->stage(last_stage).lambda, row0, lam);
        }
      }
      if (pool) {
        timing.stage_busy_seconds.resize(cfg.stages, 0.0);
        for (int k = 0; k < cfg.stages; ++k)
          timing.stage_busy_seconds[k] += pool->busy_seconds()[k];
      }
    }
    timing.train_wall_seconds = std::chrono::duration<double>(clock::now() - t0).count();
    if (cfg.mode == TrainMode::Serial) timing.stage_busy_seconds = {timing.train_wall_seconds};

    // Evaluation through a full serial forward pass; excluded from timings.
    const ResidualNet& eval_net = cfg.mode == TrainMode::Serial ? net : trainer->net();
    const ForwardTape tape = net_forward(eval_net, train_set.points, 0, eval_net.depth());
    const double train_loss = loss_phi(tape.logits, train_set.labels).value;
    if (!std::isfinite(train_loss))
      abort_non_finite(cfg, epoch, trainer ? &*trainer : nullptr);
    MetricsRow row;
    row.epoch = epoch;
    row.train_loss = train_loss;
    row.test_accuracy = accuracy(eval_net, test_set.points, test_set.labels);
    row.max_violation = cfg.mode == TrainMode::Serial ? 0.0 : trainer->violation_report().max_violation;
    row.beta = cfg.mode == TrainMode::Serial ? 0.0 : sp.beta;
    row.lr = sp.lr;
    row.epoch_seconds = cfg.emit_timing ? timing.train_wall_seconds : 0.0;
    result.metrics.push_back(row);
    result.timings.push_back(std::move(timing));
  }
  result.net = cfg.mode == TrainMode::Serial ? std::move(net) : std::move(trainer->net());
  return result;
}

}  // namespace respar
