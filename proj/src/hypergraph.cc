#include "hgnplan/hypergraph.h"

#include "hgnplan/errors.h"

#include <algorithm>

namespace hgnplan {

HypergraphStructure build_structure(const GroundedTask &t) {
    HypergraphStructure st;
    st.n_vertices = t.num_props();
    st.vertex_names = t.props();
    st.edges.reserve(t.num_actions());
    for (const auto &a : t.actions())
        st.edges.push_back({a.add, a.pre});
    return st;
}

Hypergraph encode_features(std::shared_ptr<const HypergraphStructure> st, const GroundedTask &t, const State &s) {
    if (s.width() != st->n_vertices || t.num_props() != st->n_vertices || t.num_actions() != st->n_edges())
        throw ShapeError("state/task does not match hypergraph structure");
    Hypergraph g;
    g.vertices = DenseMatrix(st->n_vertices, kInputVertexWidth);
    g.edges = DenseMatrix(st->n_edges(), kInputEdgeWidth);
    for (std::size_t i = 0; i < st->n_vertices; ++i)
        g.vertices(i, 0) = s.test(static_cast<PropId>(i)) ? 1.0 : 0.0;
    for (PropId p : t.goal())
        g.vertices(static_cast<std::size_t>(p), 1) = 1.0;
    for (std::size_t k = 0; k < st->n_edges(); ++k) {
        const auto &a = t.action(static_cast<ActionId>(k));
        g.edges(k, 0) = a.cost;
        g.edges(k, 1) = static_cast<double>(st->edges[k].receivers.size());
        g.edges(k, 2) = static_cast<double>(st->edges[k].senders.size());
    }
    g.structure = std::move(st);
    return g;
}

namespace {

DenseMatrix hconcat(const DenseMatrix &a, const DenseMatrix &b) {
    DenseMatrix out(a.rows(), a.cols() + b.cols());
    for (std::size_t r = 0; r < a.rows(); ++r) {
        auto dst = out.row(r);
        std::copy(a.row(r).begin(), a.row(r).end(), dst.begin());
        std::copy(b.row(r).begin(), b.row(r).end(), dst.begin() + static_cast<std::ptrdiff_t>(a.cols()));
    }
    return out;
}

}  // namespace

Hypergraph concat_features(const Hypergraph &a, const Hypergraph &b) {
    if (a.structure != b.structure && !(a.structure && b.structure && *a.structure == *b.structure))
        throw ShapeError("cannot concatenate hypergraphs with different structures");
    if (a.vertices.rows() != b.vertices.rows() || a.edges.rows() != b.edges.rows())
        throw ShapeError("cannot concatenate hypergraphs with different vertex/edge counts");
    Hypergraph g;
    g.structure = a.structure;
    g.vertices = hconcat(a.vertices, b.vertices);
    g.edges = hconcat(a.edges, b.edges);
    return g;
}

Hypergraph permuted(const Hypergraph &g, const std::vector<int> &vertex_perm, const std::vector<int> &edge_perm) {
    const auto &src = *g.structure;
    if (vertex_perm.size() != src.n_vertices || edge_perm.size() != src.n_edges())
        throw ShapeError("permutation size mismatch");
    auto st = std::make_shared<HypergraphStructure>();
    st->n_vertices = src.n_vertices;
    st->vertex_names.resize(src.n_vertices);
    st->edges.resize(src.n_edges());
    Hypergraph out;
    out.global = g.global;
    out.vertices = DenseMatrix(g.vertices.rows(), g.vertices.cols());
    out.edges = DenseMatrix(g.edges.rows(), g.edges.cols());
    for (std::size_t i = 0; i < src.n_vertices; ++i) {
        auto to = static_cast<std::size_t>(vertex_perm[i]);
        st->vertex_names[to] = src.vertex_names[i];
        std::copy(g.vertices.row(i).begin(), g.vertices.row(i).end(), out.vertices.row(to).begin());
    }
    auto relabel = [&](const std::vector<int> &ids) {
        std::vector<int> r;
        for (int v : ids)
            r.push_back(vertex_perm[static_cast<std::size_t>(v)]);
        std::sort(r.begin(), r.end());
        return r;
    };
    for (std::size_t k = 0; k < src.n_edges(); ++k) {
        auto to = static_cast<std::size_t>(edge_perm[k]);
        st->edges[to] = {relabel(src.edges[k].receivers), relabel(src.edges[k].senders)};
        std::copy(g.edges.row(k).begin(), g.edges.row(k).end(), out.edges.row(to).begin());
    }
    out.structure = std::move(st);
    return out;
}

namespace {

nlohmann::json matrix_json(const DenseMatrix &m) {
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t r = 0; r < m.rows(); ++r)
        rows.push_back(std::vector<double>(m.row(r).begin(), m.row(r).end()));
    return rows;
}

DenseMatrix matrix_from_json(const nlohmann::json &j, std::size_t expected_rows) {
    if (!j.is_array() || j.size() != expected_rows)
        throw ShapeError("feature matrix row count mismatch");
    std::size_t cols = expected_rows ? j[0].size() : 0;
    DenseMatrix m(expected_rows, cols);
    for (std::size_t r = 0; r < expected_rows; ++r) {
        if (j[r].size() != cols)
            throw ShapeError("ragged feature matrix");
        for (std::size_t c = 0; c < cols; ++c)
            m(r, c) = j[r][c].get<double>();
    }
    return m;
}

}  // namespace

nlohmann::json to_json(const Hypergraph &g) {
    nlohmann::json j;
    const auto &st = *g.structure;
    j["n_vertices"] = st.n_vertices;
    j["vertex_names"] = st.vertex_names;
    nlohmann::json edges = nlohmann::json::array();
    for (const auto &e : st.edges)
        edges.push_back({{"receivers", e.receivers}, {"senders", e.senders}});
    j["hyperedges"] = std::move(edges);
    j["global"] = g.global;
    j["vertex_features"] = matrix_json(g.vertices);
    j["edge_features"] = matrix_json(g.edges);
    return j;
}

Hypergraph hypergraph_from_json(const nlohmann::json &j) {
    auto st = std::make_shared<HypergraphStructure>();
    st->n_vertices = j.at("n_vertices").get<std::size_t>();
    st->vertex_names = j.at("vertex_names").get<std::vector<std::string>>();
    for (const auto &e : j.at("hyperedges"))
        st->edges.push_back({e.at("receivers").get<std::vector<int>>(), e.at("senders").get<std::vector<int>>()});
    for (const auto &e : st->edges)
        for (const auto *ids : {&e.receivers, &e.senders})
            for (int v : *ids)
                if (v < 0 || static_cast<std::size_t>(v) >= st->n_vertices)
                    throw ShapeError("hyperedge references unknown vertex");
    Hypergraph g;
    g.global = j.at("global").get<std::vector<double>>();
    g.vertices = matrix_from_json(j.at("vertex_features"), st->n_vertices);
    g.edges = matrix_from_json(j.at("edge_features"), st->n_edges());
    g.structure = std::move(st);
    return g;
}

}  // namespace hgnplan
