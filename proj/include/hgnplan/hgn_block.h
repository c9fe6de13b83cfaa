#pragma once

// Hypergraph Network block: hyperedge update, then vertex update from the
// aggregated incoming hyperedges, then global update from the aggregates.

#include "hgnplan/hypergraph.h"
#include "hgnplan/nn.h"
#include "hgnplan/pddl.h"

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace hgnplan {

struct ArityBounds {
    std::size_t n_sender = 1;
    std::size_t n_receiver = 1;

    bool operator==(const ArityBounds &) const = default;
};

// Largest precondition and add-effect lists over every schema of every domain.
ArityBounds compute_arity_bounds(std::span<const DomainDef> domains);

// Throws ArityOverflowError if some hyperedge has more senders/receivers than allowed.
void check_arity(const HypergraphStructure &st, const ArityBounds &bounds);

enum class Aggregator { Sum, Mean };

struct HgnBlockConfig {
    bool update_edges = true;
    bool update_vertices = true;
    bool update_global = true;

    // phi_e(e_k, stack(R_k), stack(S_k), u)
    bool edge_uses_vertices = true;
    bool edge_uses_global = false;
    // phi_v(agg incoming e', v_i, u)
    bool vertex_uses_edges = true;
    bool vertex_uses_global = false;
    // phi_u(agg e', agg v', u)
    bool global_uses_edges = true;
    bool global_uses_vertices = true;
    bool global_uses_global = false;

    Aggregator edge_to_vertex = Aggregator::Sum;
    Aggregator edge_to_global = Aggregator::Sum;
    Aggregator vertex_to_global = Aggregator::Sum;

    ArityBounds arity;
};

// Absent update functions are left with no layers.
struct HgnBlockParams {
    MlpParams edge;
    MlpParams vertex;
    MlpParams global;
};

HgnBlockParams zeros_like(const HgnBlockParams &p);
void collect_parameters(HgnBlockParams &p, std::vector<std::span<double>> &out);
void collect_parameters(const HgnBlockParams &p, std::vector<std::span<const double>> &out);

// Feature vectors of `ids` in ascending name order, concatenated and zero-padded
// to n_max * width.
std::vector<double> pad_and_stack(const DenseMatrix &features, std::span<const int> ids,
                                  std::span<const std::string> names, std::size_t n_max);

// Element-wise sum; an empty set yields zeros of `width`.
std::vector<double> aggregate_sum(std::span<const std::vector<double>> vectors, std::size_t width);

// Gather indices derived from a structure once and reused by every block call.
struct BlockTopology {
    std::size_t n_receiver = 0;
    std::size_t n_sender = 0;
    // n_edges x n_receiver (resp. n_sender) vertex ids in name order, -1 for padding.
    std::vector<int> receiver_slots;
    std::vector<int> sender_slots;
    // CSR list of hyperedges in which each vertex is a receiver, ascending edge id.
    std::vector<std::size_t> incoming_offsets;
    std::vector<int> incoming_edges;
};

BlockTopology make_topology(const HypergraphStructure &st, const ArityBounds &bounds);

struct BlockCache {
    std::shared_ptr<const HypergraphStructure> structure;
    std::size_t in_vertex_width = 0;
    std::size_t in_edge_width = 0;
    std::size_t in_global_width = 0;
    std::size_t out_vertex_width = 0;
    std::size_t out_edge_width = 0;
    std::size_t n_vertices_out = 0;
    std::size_t n_edges_out = 0;
    MlpCache edge;
    MlpCache vertex;
    MlpCache global;
    BlockTopology topology;
};

struct BlockGradients {
    HgnBlockParams params;
    DenseMatrix vertices;
    DenseMatrix edges;
    std::vector<double> global;
};

// `topology` may be null, in which case it is derived from g's structure.
Hypergraph block_forward(const HgnBlockConfig &cfg, const HgnBlockParams &params, const Hypergraph &g,
                         BlockCache *cache = nullptr, const BlockTopology *topology = nullptr);

// Accumulates into `grads.params` (shaped like `params`) and overwrites the input
// feature gradients in `grads`.
void block_backward(const HgnBlockConfig &cfg, const HgnBlockParams &params, const BlockCache &cache,
                    const Hypergraph &grad_out, BlockGradients &grads);

}  // namespace hgnplan
