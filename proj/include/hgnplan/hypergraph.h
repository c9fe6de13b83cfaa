#pragma once

#include "hgnplan/matrix.h"
#include "hgnplan/task.h"

#include <memory>
#include <string>
#include <vector>

namespace hgnplan {

// One relaxed action: receivers are its add effects, senders its preconditions.
struct Hyperedge {
    std::vector<int> receivers;
    std::vector<int> senders;

    bool operator==(const Hyperedge &) const = default;
};

struct HypergraphStructure {
    std::size_t n_vertices = 0;
    std::vector<Hyperedge> edges;
    std::vector<std::string> vertex_names;

    std::size_t n_edges() const { return edges.size(); }
    bool operator==(const HypergraphStructure &) const = default;
};

// Features (u, V, E) over a shared structure. Row i of `vertices` is v_i, row k of
// `edges` is e_k.
struct Hypergraph {
    std::shared_ptr<const HypergraphStructure> structure;
    std::vector<double> global;
    DenseMatrix vertices;
    DenseMatrix edges;

    std::size_t vertex_width() const { return vertices.cols(); }
    std::size_t edge_width() const { return edges.cols(); }
};

constexpr std::size_t kInputVertexWidth = 2;
constexpr std::size_t kInputEdgeWidth = 3;

// Delete-relaxation hypergraph: vertex i is proposition i, hyperedge k is action k.
HypergraphStructure build_structure(const GroundedTask &t);

// v_i = [in state, in goal], e_k = [cost, |add|, |pre|], no global features.
Hypergraph encode_features(std::shared_ptr<const HypergraphStructure> st, const GroundedTask &t, const State &s);

// Per-vertex and per-hyperedge concatenation [a | b]. Global features are dropped.
// Throws ShapeError if the structures differ.
Hypergraph concat_features(const Hypergraph &a, const Hypergraph &b);

// Relabels vertex i as vertex_perm[i] and stores hyperedge k at position edge_perm[k].
// Names travel with their vertices.
Hypergraph permuted(const Hypergraph &g, const std::vector<int> &vertex_perm, const std::vector<int> &edge_perm);

// Structure and feature matrices, for training-set files.
nlohmann::json to_json(const Hypergraph &g);
Hypergraph hypergraph_from_json(const nlohmann::json &j);

}  // namespace hgnplan
