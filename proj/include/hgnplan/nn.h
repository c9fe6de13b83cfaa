#pragma once

// Small dense numeric kernel: fully-connected MLPs with LeakyReLU, their exact
// reverse-mode gradients, squared error and Adam with coupled L2 weight decay.

#include "hgnplan/matrix.h"

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace hgnplan {

constexpr double kDefaultLeakySlope = 0.01;

inline double leaky_relu(double x, double slope) { return x > 0.0 ? x : slope * x; }
std::vector<double> leaky_relu(std::span<const double> x, double slope);

// y = W x + b with W of shape out x in.
struct DenseLayer {
    DenseMatrix weight;
    std::vector<double> bias;

    std::size_t in_dim() const { return weight.cols(); }
    std::size_t out_dim() const { return weight.rows(); }
};

struct MlpParams {
    std::vector<DenseLayer> layers;
    double slope = kDefaultLeakySlope;
    // The last layer has no activation.
    bool final_linear = false;

    std::size_t in_dim() const { return layers.empty() ? 0 : layers.front().in_dim(); }
    std::size_t out_dim() const { return layers.empty() ? 0 : layers.back().out_dim(); }
    bool activated(std::size_t layer) const { return !(final_linear && layer + 1 == layers.size()); }
};

// Per-layer inputs and pre-activations for a batch (one row per sample).
struct MlpCache {
    std::vector<DenseMatrix> inputs;
    std::vector<DenseMatrix> pre_activations;
};

// Row-batched forward. `cache` may be null when no backward pass follows.
DenseMatrix mlp_forward(const MlpParams &p, const DenseMatrix &x, MlpCache *cache = nullptr);
std::vector<double> mlp_forward(const MlpParams &p, std::span<const double> x, MlpCache *cache = nullptr);

// Accumulates parameter gradients into `grads` (same shape as `p`) and returns dL/dx.
DenseMatrix mlp_backward(const MlpParams &p, const MlpCache &cache, const DenseMatrix &dy, MlpParams &grads);
std::vector<double> mlp_backward(const MlpParams &p, const MlpCache &cache, std::span<const double> dy,
                                 MlpParams &grads);

MlpParams zeros_like(const MlpParams &p);

// dims = [in, h1, ..., out]. Glorot-uniform weights from a seeded generator, zero biases.
MlpParams init_params(std::span<const std::size_t> dims, std::uint64_t seed, double slope = kDefaultLeakySlope,
                      bool final_linear = false);

// Flat views over every weight and bias buffer, in a fixed order.
void collect_parameters(MlpParams &p, std::vector<std::span<double>> &out);
void collect_parameters(const MlpParams &p, std::vector<std::span<const double>> &out);

inline double mse(double pred, double target) {
    double d = pred - target;
    return d * d;
}

struct AdamState {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::size_t step = 0;
    std::vector<std::vector<double>> m;
    std::vector<std::vector<double>> v;
};

// g' = g + weight_decay * theta, then one bias-corrected Adam update. Moments are
// allocated on first use; shapes must stay fixed afterwards.
void adam_step(std::span<const std::span<double>> params, std::span<const std::span<const double>> grads,
               AdamState &st, double lr, double weight_decay);

}  // namespace hgnplan
