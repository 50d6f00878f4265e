#include "respar/network.hpp"

#include <cmath>
#include <string>

namespace respar {

namespace {

Tensor glorot(Rng& rng, int fan_in, int fan_out) {
  const double a = std::sqrt(6.0 / (fan_in + fan_out));
  return rng_uniform(rng, fan_in, fan_out, -a, a);
}

// upstream .* act'(pre), with the derivative taken from the cached activation.
Tensor act_bwd(const Tensor& a, const Tensor& upstream, Activation act) {
  if (act == Activation::Identity) return upstream;
  Tensor out(a.rows, a.cols);
  for (std::size_t i = 0; i < a.data.size(); ++i)
    out.data[i] = upstream.data[i] * (1.0 - a.data[i] * a.data[i]);
  return out;
}

void check_width(const char* where, const Tensor& x, int want) {
  if (x.cols != want) {
    throw ShapeError(std::string(where) + ": feature width " + std::to_string(x.cols) +
                     ", expected " + std::to_string(want));
  }
}

}  // namespace

long ResidualNet::param_count() const {
  long n = s.w.size() + s.b.size() + t.w.size() + t.b.size();
  for (const auto& blk : blocks)
    n += blk.w1.size() + blk.b1.size() + blk.w2.size() + blk.b2.size();
  return n;
}

// Depth-aware init scales. Plain Glorot blocks make the backward Jacobian
// product of a 60-block trunk blow up under full-batch descent at lr 0.1, so
// the branch output layer is damped toward the identity map; a forward-Euler
// reading of x + F(x, w). Constants picked on the three-ring study for stable
// paper-schedule training across seeds.
constexpr double kInputGain = 2.0;
constexpr double kHiddenGain = 1.2;
constexpr double kBranchGain = 2.2;

ResidualNet make_net(int in_dim, int d, int h, int num_blocks, int classes, Rng& rng) {
  ResidualNet net;
  net.in_dim = in_dim;
  net.d = d;
  net.h = h;
  net.classes = classes;
  net.s = {scale(glorot(rng, in_dim, d), kInputGain), Tensor(1, d)};
  const double branch = kBranchGain / std::sqrt(static_cast<double>(std::max(num_blocks, 1)));
  net.blocks.reserve(num_blocks);
  for (int l = 0; l < num_blocks; ++l) {
    BlockParams p;
    p.w1 = scale(glorot(rng, d, h), kHiddenGain);
    p.b1 = Tensor(1, h);
    p.w2 = scale(glorot(rng, h, d), branch);
    p.b2 = Tensor(1, d);
    net.blocks.push_back(std::move(p));
  }
  net.t = {glorot(rng, d, classes), Tensor(1, classes)};
  return net;
}

ResidualNet make_zero_net(int in_dim, int d, int h, int num_blocks, int classes) {
  ResidualNet net;
  net.in_dim = in_dim;
  net.d = d;
  net.h = h;
  net.classes = classes;
  net.s = {Tensor(in_dim, d), Tensor(1, d)};
  net.blocks.assign(num_blocks, {Tensor(d, h), Tensor(1, h), Tensor(h, d), Tensor(1, d)});
  net.t = {Tensor(d, classes), Tensor(1, classes)};
  return net;
}

std::pair<Tensor, BlockCache> block_forward(const Tensor& x, const BlockParams& p,
                                            Activation act) {
  check_width("block_forward", x, p.w1.rows);
  Tensor pre = add_rowvec(matmul(x, p.w1), p.b1);
  Tensor a = act == Activation::Tanh ? tanh_fwd(pre) : std::move(pre);
  Tensor x_next = add(x, add_rowvec(matmul(a, p.w2), p.b2));
  return {std::move(x_next), BlockCache{x, std::move(a)}};
}

std::pair<Tensor, BlockParams> block_vjp(const BlockCache& cache, const BlockParams& p,
                                         const Tensor& upstream, Activation act) {
  if (!upstream.same_shape(cache.x)) {
    throw ShapeError("block_vjp: upstream " + upstream.shape_str() + " vs input " +
                     cache.x.shape_str());
  }
  BlockParams grads;
  grads.b2 = col_sum(upstream);
  grads.w2 = matmul(transpose(cache.a), upstream);
  Tensor da = matmul(upstream, transpose(p.w2));
  Tensor dpre = act_bwd(cache.a, da, act);
  grads.b1 = col_sum(dpre);
  grads.w1 = matmul(transpose(cache.x), dpre);
  Tensor p_prev = add(upstream, matmul(dpre, transpose(p.w1)));
  return {std::move(p_prev), std::move(grads)};
}

Tensor affine_forward(const Tensor& x, const AffineParams& p) {
  return add_rowvec(matmul(x, p.w), p.b);
}

ForwardTape net_forward(const ResidualNet& net, const Tensor& x, int from_block, int to_block) {
  const int depth = net.depth();
  if (from_block < 0 || from_block > to_block || to_block > depth) {
    throw std::invalid_argument("net_forward: bad block range [" + std::to_string(from_block) +
                                ", " + std::to_string(to_block) + ") for depth " +
                                std::to_string(depth));
  }
  ForwardTape tape;
  tape.from_block = from_block;
  tape.to_block = to_block;
  tape.has_input_layer = from_block == 0;
  tape.has_output_layer = to_block == depth;

  Tensor cur;
  if (tape.has_input_layer) {
    check_width("net_forward (raw input)", x, net.in_dim);
    tape.raw_input = x;
    cur = affine_forward(x, net.s);
  } else {
    check_width("net_forward (features)", x, net.d);
    cur = x;
  }
  tape.blocks.reserve(to_block - from_block);
  for (int l = from_block; l < to_block; ++l) {
    auto [next, cache] = block_forward(cur, net.blocks[l], net.activation);
    tape.blocks.push_back(std::move(cache));
    cur = std::move(next);
  }
  tape.features = std::move(cur);
  if (tape.has_output_layer) tape.logits = affine_forward(tape.features, net.t);
  return tape;
}

VjpResult net_vjp(const ResidualNet& net, const ForwardTape& tape, const Tensor& upstream) {
  VjpResult res;
  res.grads.blocks.resize(tape.blocks.size());

  Tensor cot;
  if (tape.has_output_layer) {
    res.grads.has_t = true;
    res.grads.t.b = col_sum(upstream);
    res.grads.t.w = matmul(transpose(tape.features), upstream);
    cot = matmul(upstream, transpose(net.t.w));
  } else {
    cot = upstream;
  }
  for (int l = tape.to_block - 1; l >= tape.from_block; --l) {
    const int i = l - tape.from_block;
    auto [prev, grads] = block_vjp(tape.blocks[i], net.blocks[l], cot, net.activation);
    res.grads.blocks[i] = std::move(grads);
    cot = std::move(prev);
  }
  res.input_cotangent = cot;
  if (tape.has_input_layer) {
    res.grads.has_s = true;
    res.grads.s.b = col_sum(cot);
    res.grads.s.w = matmul(transpose(tape.raw_input), cot);
    res.raw_cotangent = matmul(cot, transpose(net.s.w));
  }
  return res;
}

void apply_updates(ResidualNet& net, const NetGrads& grads, int from_block, double lr) {
  if (grads.has_s) {
    axpy_inplace(net.s.w, -lr, grads.s.w);
    axpy_inplace(net.s.b, -lr, grads.s.b);
  }
  for (std::size_t i = 0; i < grads.blocks.size(); ++i) {
    BlockParams& p = net.blocks[from_block + i];
    const BlockParams& g = grads.blocks[i];
    axpy_inplace(p.w1, -lr, g.w1);
    axpy_inplace(p.b1, -lr, g.b1);
    axpy_inplace(p.w2, -lr, g.w2);
    axpy_inplace(p.b2, -lr, g.b2);
  }
  if (grads.has_t) {
    axpy_inplace(net.t.w, -lr, grads.t.w);
    axpy_inplace(net.t.b, -lr, grads.t.b);
  }
}

LossResult loss_phi(const Tensor& logits, const std::vector<int>& labels) {
  if (static_cast<int>(labels.size()) != logits.rows) {
    throw ShapeError("loss_phi: " + std::to_string(labels.size()) + " labels for " +
                     logits.shape_str() + " logits");
  }
  const int batch = logits.rows;
  const int classes = logits.cols;
  LossResult res;
  res.grad_logits = Tensor(batch, classes);
  double total = 0.0;
  for (int i = 0; i < batch; ++i) {
    if (labels[i] < 0 || labels[i] >= classes) {
      throw std::invalid_argument("loss_phi: label " + std::to_string(labels[i]) +
                                  " out of range for " + std::to_string(classes) + " classes");
    }
    double m = logits.at(i, 0);
    for (int c = 1; c < classes; ++c) m = std::max(m, logits.at(i, c));
    double z = 0.0;
    for (int c = 0; c < classes; ++c) z += std::exp(logits.at(i, c) - m);
    const double lse = m + std::log(z);
    total += lse - logits.at(i, labels[i]);
    for (int c = 0; c < classes; ++c) {
      const double softmax = std::exp(logits.at(i, c) - lse);
      res.grad_logits.at(i, c) = (softmax - (c == labels[i] ? 1.0 : 0.0)) / batch;
    }
  }
  res.value = total / batch;
  return res;
}

double accuracy(const ResidualNet& net, const Tensor& x_raw, const std::vector<int>& labels) {
  const ForwardTape tape = net_forward(net, x_raw, 0, net.depth());
  const Tensor& logits = tape.logits;
  int hits = 0;
  for (int i = 0; i < logits.rows; ++i) {
    int best = 0;
    for (int c = 1; c < logits.cols; ++c)
      if (logits.at(i, c) > logits.at(i, best)) best = c;
    if (best == labels[i]) ++hits;
  }
  return logits.rows == 0 ? 0.0 : static_cast<double>(hits) / logits.rows;
}

double serial_train_step(ResidualNet& net, const Tensor& batch, const std::vector<int>& labels,
                         double lr) {
  if (lr < 0.0) throw std::invalid_argument("serial_train_step: lr must be >= 0");
  const ForwardTape tape = net_forward(net, batch, 0, net.depth());
  const LossResult loss = loss_phi(tape.logits, labels);
  const VjpResult vjp = net_vjp(net, tape, loss.grad_logits);
  apply_updates(net, vjp.grads, 0, lr);
  return loss.value;
}

}  // namespace respar
