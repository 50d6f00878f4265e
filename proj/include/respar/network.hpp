#ifndef RESPAR_NETWORK_HPP
#define RESPAR_NETWORK_HPP

#include <utility>
#include <vector>

#include "respar/tensor.hpp"

namespace respar {

// Identity exists so tests can degenerate a block to an affine map.
enum class Activation { Tanh, Identity };

// One residual module: x + act(x*w1 + b1)*w2 + b2. Two weight layers per
// module, so 60 modules plus the input and output maps give 122 layers.
struct BlockParams {
  Tensor w1;  // d x h
  Tensor b1;  // 1 x h
  Tensor w2;  // h x d
  Tensor b2;  // 1 x d
};

struct AffineParams {
  Tensor w;
  Tensor b;  // 1 x out
};

// Input map s (in_dim -> d), residual trunk, output map t (d -> classes).
struct ResidualNet {
  AffineParams s;
  std::vector<BlockParams> blocks;
  AffineParams t;
  int in_dim = 2;
  int d = 8;
  int h = 8;
  int classes = 3;
  Activation activation = Activation::Tanh;

  int depth() const { return static_cast<int>(blocks.size()); }
  long param_count() const;
};

// Glorot-uniform weights, zero biases. Draw order: s, blocks in order
// (w1 then w2 each), t.
ResidualNet make_net(int in_dim, int d, int h, int num_blocks, int classes, Rng& rng);
// All-zero parameters; the trunk is then the identity map on features.
ResidualNet make_zero_net(int in_dim, int d, int h, int num_blocks, int classes);

struct BlockCache {
  Tensor x;  // block input
  Tensor a;  // act(x*w1 + b1)
};

// Cached trajectory of one forward pass over a block range.
struct ForwardTape {
  int from_block = 0;
  int to_block = 0;
  bool has_input_layer = false;
  bool has_output_layer = false;
  Tensor raw_input;  // only when the input layer was applied
  std::vector<BlockCache> blocks;
  Tensor features;  // X_{to_block}
  Tensor logits;    // only when the output layer was applied

  const Tensor& output() const { return has_output_layer ? logits : features; }
};

std::pair<Tensor, BlockCache> block_forward(const Tensor& x, const BlockParams& p,
                                            Activation act);
// Exact reverse-mode of block_forward: cotangent w.r.t. the block input plus
// parameter gradients, given the cotangent at the block output.
std::pair<Tensor, BlockParams> block_vjp(const BlockCache& cache, const BlockParams& p,
                                         const Tensor& upstream, Activation act);

Tensor affine_forward(const Tensor& x, const AffineParams& p);

// Applies the input map iff from_block == 0, blocks [from_block, to_block),
// and the output map iff to_block == depth().
ForwardTape net_forward(const ResidualNet& net, const Tensor& x, int from_block, int to_block);

struct NetGrads {
  AffineParams s;
  std::vector<BlockParams> blocks;  // index 0 corresponds to from_block
  AffineParams t;
  bool has_s = false;
  bool has_t = false;
};

struct VjpResult {
  Tensor input_cotangent;  // w.r.t. X_{from_block}
  Tensor raw_cotangent;    // w.r.t. the raw input; only when S was applied
  NetGrads grads;
};

// upstream is d(loss)/d(logits) when the tape has the output layer, else
// d(loss)/d(features).
VjpResult net_vjp(const ResidualNet& net, const ForwardTape& tape, const Tensor& upstream);

// Gradient-descent update of every parameter covered by grads; grads.blocks[i]
// applies to net block (from_block + i).
void apply_updates(ResidualNet& net, const NetGrads& grads, int from_block, double lr);

struct LossResult {
  double value = 0.0;
  Tensor grad_logits;
};

// Mean softmax cross-entropy over the batch.
LossResult loss_phi(const Tensor& logits, const std::vector<int>& labels);

// Argmax match rate; ties resolve to the lowest class index.
double accuracy(const ResidualNet& net, const Tensor& x_raw, const std::vector<int>& labels);

// One full-batch gradient-descent step on every parameter; returns the
// pre-step loss.
double serial_train_step(ResidualNet& net, const Tensor& batch, const std::vector<int>& labels,
                         double lr);

}  // namespace respar

#endif  // RESPAR_NETWORK_HPP
