#include "respar/gradcheck.hpp"

#include <cmath>
#include <functional>
#include <stdexcept>

#include "respar/network.hpp"
#include "respar/penalty.hpp"

namespace respar {

namespace {

// Entries below the floor are compared absolutely; central differences carry
// ~1e-10 absolute noise, which would swamp a pure ratio on tiny gradients.
double rel_err(double analytic, double fd) {
  const double denom = std::max({std::fabs(analytic), std::fabs(fd), 1e-3});
  return std::fabs(analytic - fd) / denom;
}

double central_diff(double& slot, double eps, const std::function<double()>& eval) {
  const double saved = slot;
  slot = saved + eps;
  const double hi = eval();
  slot = saved - eps;
  const double lo = eval();
  slot = saved;
  if (!std::isfinite(hi) || !std::isfinite(lo)) {
    throw std::runtime_error("fd_gradcheck: non-finite loss during finite differences");
  }
  return (hi - lo) / (2.0 * eps);
}

double check_tensor(Tensor& param, const Tensor& analytic, double eps,
                    const std::function<double()>& eval) {
  double worst = 0.0;
  for (std::size_t i = 0; i < param.data.size(); ++i) {
    const double fd = central_diff(param.data[i], eps, eval);
    worst = std::max(worst, rel_err(analytic.data[i], fd));
  }
  return worst;
}

double check_block(BlockParams& p, const BlockParams& g, double eps,
                   const std::function<double()>& eval) {
  double worst = check_tensor(p.w1, g.w1, eps, eval);
  worst = std::max(worst, check_tensor(p.b1, g.b1, eps, eval));
  worst = std::max(worst, check_tensor(p.w2, g.w2, eps, eval));
  worst = std::max(worst, check_tensor(p.b2, g.b2, eps, eval));
  return worst;
}

struct Instance {
  ResidualNet net;
  Tensor x;                 // 5 x 2 raw input
  std::vector<int> labels;  // 5 entries in {0,1,2}
  Tensor lambda_in;         // 5 x 4, stage input for lambda-based checks
  Tensor lambda_next;       // 5 x 4
  Tensor kappa_next;        // 5 x 4
  Tensor kappa_k;           // 5 x 4
  Tensor x_prev;            // 5 x 4, cached upstream boundary
  double beta = 3.0;
};

Instance make_instance(std::uint64_t seed) {
  Rng rng(seed);
  Instance ins;
  ins.net = make_net(2, 4, 4, 3, 3, rng);
  ins.x = rng_uniform(rng, 5, 2, -1.0, 1.0);
  ins.labels.resize(5);
  for (int& y : ins.labels) y = static_cast<int>(rng.next_u64() % 3);
  ins.lambda_in = rng_uniform(rng, 5, 4, -1.0, 1.0);
  ins.lambda_next = rng_uniform(rng, 5, 4, -1.0, 1.0);
  ins.kappa_next = rng_uniform(rng, 5, 4, -1.0, 1.0);
  ins.kappa_k = rng_uniform(rng, 5, 4, -1.0, 1.0);
  ins.x_prev = rng_uniform(rng, 5, 4, -1.0, 1.0);
  return ins;
}

constexpr long kNorm = 20;  // # = 5 samples x 4 features

// (beta/#) psi(lambda_next, X_end) + <kappa_next, X_end> over a block range.
double synthetic_value(const Instance& ins, const Tensor& input, int from, int to,
                       bool with_kappa) {
  const ForwardTape tape = net_forward(ins.net, input, from, to);
  double v = ins.beta / kNorm * psi(PenaltyKind::SquaredL2, ins.lambda_next, tape.features);
  if (with_kappa) v += dot(ins.kappa_next, tape.features);
  return v;
}

Tensor synthetic_upstream(const Instance& ins, const ForwardTape& tape, bool with_kappa) {
  const PsiGrads pg = psi_grads(PenaltyKind::SquaredL2, ins.lambda_next, tape.features);
  Tensor upstream = scale(pg.d_x, ins.beta / kNorm);
  if (with_kappa) axpy_inplace(upstream, 1.0, ins.kappa_next);
  return upstream;
}

}  // namespace

GradCheckReport fd_gradcheck(std::uint64_t seed, double eps) {
  if (eps <= 0.0) throw std::invalid_argument("fd_gradcheck: eps must be positive");
  Instance ins = make_instance(seed);
  const int depth = ins.net.depth();
  GradCheckReport report;

  const auto push = [&](const std::string& name, double err) {
    report.entries.push_back({name, err});
    report.max_rel_err = std::max(report.max_rel_err, err);
  };

  {  // Serial loss: every parameter plus the raw input.
    const auto eval = [&] {
      const ForwardTape tape = net_forward(ins.net, ins.x, 0, depth);
      return loss_phi(tape.logits, ins.labels).value;
    };
    const ForwardTape tape = net_forward(ins.net, ins.x, 0, depth);
    const VjpResult vjp = net_vjp(ins.net, tape, loss_phi(tape.logits, ins.labels).grad_logits);
    double worst = check_tensor(ins.net.s.w, vjp.grads.s.w, eps, eval);
    worst = std::max(worst, check_tensor(ins.net.s.b, vjp.grads.s.b, eps, eval));
    for (int l = 0; l < depth; ++l)
      worst = std::max(worst, check_block(ins.net.blocks[l], vjp.grads.blocks[l], eps, eval));
    worst = std::max(worst, check_tensor(ins.net.t.w, vjp.grads.t.w, eps, eval));
    worst = std::max(worst, check_tensor(ins.net.t.b, vjp.grads.t.b, eps, eval));
    push("serial loss / parameters", worst);
    push("serial loss / input", check_tensor(ins.x, vjp.raw_cotangent, eps, eval));
  }

  {  // Penalty synthetic loss on the first stage (covers the input map).
    const auto eval = [&] { return synthetic_value(ins, ins.x, 0, 2, false); };
    const ForwardTape tape = net_forward(ins.net, ins.x, 0, 2);
    const VjpResult vjp = net_vjp(ins.net, tape, synthetic_upstream(ins, tape, false));
    double worst = check_tensor(ins.net.s.w, vjp.grads.s.w, eps, eval);
    worst = std::max(worst, check_tensor(ins.net.s.b, vjp.grads.s.b, eps, eval));
    for (int l = 0; l < 2; ++l)
      worst = std::max(worst, check_block(ins.net.blocks[l], vjp.grads.blocks[l], eps, eval));
    push("penalty synthetic loss / parameters", worst);
  }

  {  // ALM synthetic loss on a middle stage fed by lambda.
    const auto eval = [&] { return synthetic_value(ins, ins.lambda_in, 1, 2, true); };
    const ForwardTape tape = net_forward(ins.net, ins.lambda_in, 1, 2);
    const VjpResult vjp = net_vjp(ins.net, tape, synthetic_upstream(ins, tape, true));
    push("alm synthetic loss / parameters",
         check_block(ins.net.blocks[1], vjp.grads.blocks[0], eps, eval));
    push("alm synthetic loss / stage input",
         check_tensor(ins.lambda_in, vjp.input_cotangent, eps, eval));
  }

  {  // Lambda correction, middle stage: G = (beta/#) psi(lambda, x_prev)
     // + synthetic(stage(lambda)) - <kappa_k, lambda>.
    const auto eval = [&] {
      return ins.beta / kNorm * psi(PenaltyKind::SquaredL2, ins.lambda_in, ins.x_prev) +
             synthetic_value(ins, ins.lambda_in, 1, 2, true) - dot(ins.kappa_k, ins.lambda_in);
    };
    const ForwardTape tape = net_forward(ins.net, ins.lambda_in, 1, 2);
    const VjpResult vjp = net_vjp(ins.net, tape, synthetic_upstream(ins, tape, true));
    Tensor g = scale(psi_grads(PenaltyKind::SquaredL2, ins.lambda_in, ins.x_prev).d_lambda,
                     ins.beta / kNorm);
    axpy_inplace(g, 1.0, vjp.input_cotangent);
    axpy_inplace(g, -1.0, ins.kappa_k);
    push("lambda correction / middle stage", check_tensor(ins.lambda_in, g, eps, eval));
  }

  {  // Lambda correction, last stage: the middle term is the phi cotangent.
    const auto eval = [&] {
      const ForwardTape tape = net_forward(ins.net, ins.lambda_in, 2, depth);
      return ins.beta / kNorm * psi(PenaltyKind::SquaredL2, ins.lambda_in, ins.x_prev) +
             loss_phi(tape.logits, ins.labels).value - dot(ins.kappa_k, ins.lambda_in);
    };
    const ForwardTape tape = net_forward(ins.net, ins.lambda_in, 2, depth);
    const VjpResult vjp = net_vjp(ins.net, tape, loss_phi(tape.logits, ins.labels).grad_logits);
    Tensor g = scale(psi_grads(PenaltyKind::SquaredL2, ins.lambda_in, ins.x_prev).d_lambda,
                     ins.beta / kNorm);
    axpy_inplace(g, 1.0, vjp.input_cotangent);
    axpy_inplace(g, -1.0, ins.kappa_k);
    push("lambda correction / last stage", check_tensor(ins.lambda_in, g, eps, eval));
  }

  return report;
}

}  // namespace respar
