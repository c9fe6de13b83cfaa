#pragma once

// STRIPS-HGN: encoder block, recurrent core block applied M times on
// [G0 | G_{t-1}], and a decoder MLP on the core's global output.

#include "hgnplan/cost.h"
#include "hgnplan/heuristics.h"
#include "hgnplan/hgn_block.h"
#include "hgnplan/hypergraph.h"
#include "hgnplan/nn.h"
#include "hgnplan/task.h"

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace hgnplan {

constexpr int kModelFormatVersion = 1;

struct StripsHgnConfig {
    std::size_t latent_width = 32;
    std::size_t steps = 10;
    double slope = kDefaultLeakySlope;
    ArityBounds arity;
    // Fully-connected layers per update function. The decoder adds one width-1 linear layer.
    std::size_t mlp_layers = 2;

    bool operator==(const StripsHgnConfig &) const = default;
};

HgnBlockConfig encoder_block_config(const ArityBounds &arity);
HgnBlockConfig core_block_config(const ArityBounds &arity);

struct StripsHgnModel {
    StripsHgnConfig config;
    HgnBlockParams encoder;
    HgnBlockParams core;
    MlpParams decoder;
    nlohmann::json metadata = nlohmann::json::object();

    // Glorot-uniform weights and zero biases; every MLP gets its own derived stream.
    static StripsHgnModel initialized(const StripsHgnConfig &cfg, std::uint64_t seed);
    static StripsHgnModel zeros(const StripsHgnConfig &cfg);

    std::vector<std::span<double>> parameters();
    std::vector<std::span<const double>> parameters() const;
    std::size_t parameter_count() const;
};

// Throws ShapeError if parameter shapes disagree with the configuration.
void validate_model(const StripsHgnModel &m);

struct ForwardTrace {
    BlockCache encoder;
    std::vector<BlockCache> core;
    std::vector<MlpCache> decoder;
    // latents[0] = G0, latents[t] = G_t.
    std::vector<Hypergraph> latents;
    std::vector<double> outputs;
};

// Raw per-step outputs h_1..h_M. Input widths must be (2, 3).
std::vector<double> forward(const StripsHgnModel &m, const Hypergraph &input, ForwardTrace *trace = nullptr,
                            const BlockTopology *topology = nullptr);

// max(h_M, 0) for state s of task t.
Cost heuristic_value(const StripsHgnModel &m, const GroundedTask &t, const State &s);

// Search-time heuristic; the structure and gather indices are built once per task,
// which is where arity overflow surfaces.
class HgnHeuristic final : public Heuristic {
public:
    HgnHeuristic(std::shared_ptr<const StripsHgnModel> model, const GroundedTask &t);
    Cost evaluate(const State &s) override;
    std::string name() const override { return "hgn"; }

private:
    std::shared_ptr<const StripsHgnModel> model_;
    const GroundedTask &task_;
    std::shared_ptr<const HypergraphStructure> structure_;
    BlockTopology topology_;
};

struct HgnExample {
    Hypergraph input;
    double target = 0.0;
};

// Mean over the batch of the mean over steps of (h_t - target)^2, on raw outputs.
double loss(const StripsHgnModel &m, std::span<const HgnExample> batch);
double step_loss(std::span<const double> outputs, double target);

// Adds scale * dL_sample/dtheta into `grads` (shaped like m) and returns the sample's loss.
double accumulate_gradients(const StripsHgnModel &m, const HgnExample &ex, double scale, StripsHgnModel &grads);

// Gradient of the single-sample loss.
StripsHgnModel loss_gradients(const StripsHgnModel &m, const HgnExample &ex);

// Batch loss and its gradient in one pass.
double loss_and_gradients(const StripsHgnModel &m, std::span<const HgnExample> batch, StripsHgnModel &grads);

nlohmann::json model_to_json(const StripsHgnModel &m);
// Throws ModelVersionError or ModelFormatError.
StripsHgnModel model_from_json(const nlohmann::json &j);

void save_model(const StripsHgnModel &m, const std::filesystem::path &path);
StripsHgnModel load_model(const std::filesystem::path &path);

}  // namespace hgnplan
