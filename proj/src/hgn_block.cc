#include "hgnplan/hgn_block.h"

#include "hgnplan/errors.h"

#include <algorithm>
#include <numeric>

namespace hgnplan {

ArityBounds compute_arity_bounds(std::span<const DomainDef> domains) {
    if (domains.empty())
        throw std::invalid_argument("compute_arity_bounds needs at least one domain");
    ArityBounds b{1, 1};
    for (const auto &d : domains)
        for (const auto &s : d.schemas) {
            b.n_sender = std::max(b.n_sender, s.pre.size());
            b.n_receiver = std::max(b.n_receiver, s.add.size());
        }
    return b;
}

void check_arity(const HypergraphStructure &st, const ArityBounds &bounds) {
    for (std::size_t k = 0; k < st.n_edges(); ++k) {
        const auto &e = st.edges[k];
        if (e.senders.size() > bounds.n_sender || e.receivers.size() > bounds.n_receiver)
            throw ArityOverflowError("hyperedge " + std::to_string(k) + " has " + std::to_string(e.senders.size()) +
                                     " senders / " + std::to_string(e.receivers.size()) +
                                     " receivers, model allows " + std::to_string(bounds.n_sender) + " / " +
                                     std::to_string(bounds.n_receiver));
    }
}

HgnBlockParams zeros_like(const HgnBlockParams &p) {
    return {zeros_like(p.edge), zeros_like(p.vertex), zeros_like(p.global)};
}

void collect_parameters(HgnBlockParams &p, std::vector<std::span<double>> &out) {
    collect_parameters(p.edge, out);
    collect_parameters(p.vertex, out);
    collect_parameters(p.global, out);
}

void collect_parameters(const HgnBlockParams &p, std::vector<std::span<const double>> &out) {
    collect_parameters(p.edge, out);
    collect_parameters(p.vertex, out);
    collect_parameters(p.global, out);
}

namespace {

void sorted_slots(std::span<const int> ids, std::span<const std::string> names, std::size_t n_max, int *slots) {
    if (ids.size() > n_max)
        throw ArityOverflowError(std::to_string(ids.size()) + " vertices exceed stacking bound " +
                                 std::to_string(n_max));
    std::vector<int> sorted(ids.begin(), ids.end());
    std::sort(sorted.begin(), sorted.end(), [&](int a, int b) {
        const auto &na = names[static_cast<std::size_t>(a)];
        const auto &nb = names[static_cast<std::size_t>(b)];
        return na != nb ? na < nb : a < b;
    });
    std::fill(slots, slots + n_max, -1);
    std::copy(sorted.begin(), sorted.end(), slots);
}

void add_scaled(std::span<double> dst, std::span<const double> src, double scale) {
    for (std::size_t j = 0; j < dst.size(); ++j)
        dst[j] += scale * src[j];
}

double mean_scale(Aggregator a, std::size_t n) {
    return a == Aggregator::Mean && n > 0 ? 1.0 / static_cast<double>(n) : 1.0;
}

std::vector<double> aggregate_rows(const DenseMatrix &m, Aggregator a) {
    std::vector<double> out(m.cols(), 0.0);
    for (std::size_t r = 0; r < m.rows(); ++r)
        add_scaled(out, m.row(r), 1.0);
    double s = mean_scale(a, m.rows());
    for (double &v : out)
        v *= s;
    return out;
}

void require_width(const MlpParams &mlp, std::size_t width, const char *which) {
    if (mlp.layers.empty())
        throw ShapeError(std::string(which) + " update is enabled but has no parameters");
    if (mlp.in_dim() != width)
        throw ShapeError(std::string(which) + " MLP expects input width " + std::to_string(mlp.in_dim()) +
                         ", block provides " + std::to_string(width));
}

}  // namespace

std::vector<double> pad_and_stack(const DenseMatrix &features, std::span<const int> ids,
                                  std::span<const std::string> names, std::size_t n_max) {
    std::vector<int> slots(n_max);
    sorted_slots(ids, names, n_max, slots.data());
    const std::size_t w = features.cols();
    std::vector<double> out(n_max * w, 0.0);
    for (std::size_t j = 0; j < n_max; ++j)
        if (slots[j] >= 0) {
            auto r = features.row(static_cast<std::size_t>(slots[j]));
            std::copy(r.begin(), r.end(), out.begin() + static_cast<std::ptrdiff_t>(j * w));
        }
    return out;
}

std::vector<double> aggregate_sum(std::span<const std::vector<double>> vectors, std::size_t width) {
    std::vector<double> out(width, 0.0);
    for (const auto &v : vectors) {
        if (v.size() != width)
            throw ShapeError("aggregate_sum: width " + std::to_string(v.size()) + " != " + std::to_string(width));
        add_scaled(out, v, 1.0);
    }
    return out;
}

BlockTopology make_topology(const HypergraphStructure &st, const ArityBounds &bounds) {
    check_arity(st, bounds);
    BlockTopology t;
    t.n_receiver = bounds.n_receiver;
    t.n_sender = bounds.n_sender;
    const std::size_t ne = st.n_edges();
    t.receiver_slots.resize(ne * t.n_receiver);
    t.sender_slots.resize(ne * t.n_sender);
    std::vector<std::size_t> counts(st.n_vertices, 0);
    for (std::size_t k = 0; k < ne; ++k) {
        const auto &e = st.edges[k];
        sorted_slots(e.receivers, st.vertex_names, t.n_receiver, t.receiver_slots.data() + k * t.n_receiver);
        sorted_slots(e.senders, st.vertex_names, t.n_sender, t.sender_slots.data() + k * t.n_sender);
        for (int i : e.receivers)
            ++counts[static_cast<std::size_t>(i)];
    }
    t.incoming_offsets.assign(st.n_vertices + 1, 0);
    for (std::size_t i = 0; i < st.n_vertices; ++i)
        t.incoming_offsets[i + 1] = t.incoming_offsets[i] + counts[i];
    t.incoming_edges.resize(t.incoming_offsets.back());
    std::vector<std::size_t> fill(t.incoming_offsets.begin(), t.incoming_offsets.end() - 1);
    for (std::size_t k = 0; k < ne; ++k)
        for (int i : st.edges[k].receivers)
            t.incoming_edges[fill[static_cast<std::size_t>(i)]++] = static_cast<int>(k);
    return t;
}

Hypergraph block_forward(const HgnBlockConfig &cfg, const HgnBlockParams &params, const Hypergraph &g,
                         BlockCache *cache, const BlockTopology *topology) {
    if (!g.structure)
        throw ShapeError("hypergraph has no structure");
    const auto &st = *g.structure;
    const std::size_t nv = st.n_vertices;
    const std::size_t ne = st.n_edges();
    if (g.vertices.rows() != nv || g.edges.rows() != ne)
        throw ShapeError("feature rows do not match the hypergraph structure");
    const std::size_t dv = g.vertex_width();
    const std::size_t de = g.edge_width();
    const std::size_t du = g.global.size();

    BlockTopology local;
    if (!topology) {
        local = make_topology(st, cfg.arity);
        topology = &local;
    } else if (topology->n_receiver != cfg.arity.n_receiver || topology->n_sender != cfg.arity.n_sender ||
               topology->incoming_offsets.size() != nv + 1) {
        throw ShapeError("block topology does not match the configuration");
    }
    const BlockTopology &topo = *topology;

    Hypergraph out;
    out.structure = g.structure;

    if (cfg.update_edges) {
        const std::size_t nr = topo.n_receiver, ns = topo.n_sender;
        const std::size_t width =
            de + (cfg.edge_uses_vertices ? (nr + ns) * dv : 0) + (cfg.edge_uses_global ? du : 0);
        require_width(params.edge, width, "hyperedge");
        DenseMatrix x(ne, width);
        for (std::size_t k = 0; k < ne; ++k) {
            double *row = x.row(k).data();
            auto ek = g.edges.row(k);
            std::copy(ek.begin(), ek.end(), row);
            std::size_t off = de;
            if (cfg.edge_uses_vertices) {
                for (std::size_t j = 0; j < nr; ++j, off += dv) {
                    int id = topo.receiver_slots[k * nr + j];
                    if (id >= 0) {
                        auto v = g.vertices.row(static_cast<std::size_t>(id));
                        std::copy(v.begin(), v.end(), row + off);
                    }
                }
                for (std::size_t j = 0; j < ns; ++j, off += dv) {
                    int id = topo.sender_slots[k * ns + j];
                    if (id >= 0) {
                        auto v = g.vertices.row(static_cast<std::size_t>(id));
                        std::copy(v.begin(), v.end(), row + off);
                    }
                }
            }
            if (cfg.edge_uses_global)
                std::copy(g.global.begin(), g.global.end(), row + off);
        }
        out.edges = mlp_forward(params.edge, x, cache ? &cache->edge : nullptr);
    } else {
        out.edges = g.edges;
    }

    const std::size_t de_out = out.edges.cols();
    if (cfg.update_vertices) {
        const std::size_t width = (cfg.vertex_uses_edges ? de_out : 0) + dv + (cfg.vertex_uses_global ? du : 0);
        require_width(params.vertex, width, "vertex");
        DenseMatrix x(nv, width);
        for (std::size_t i = 0; i < nv; ++i) {
            auto row = x.row(i);
            std::size_t off = 0;
            if (cfg.vertex_uses_edges) {
                const std::size_t b = topo.incoming_offsets[i], e = topo.incoming_offsets[i + 1];
                const double s = mean_scale(cfg.edge_to_vertex, e - b);
                for (std::size_t p = b; p < e; ++p)
                    add_scaled(row.subspan(0, de_out), out.edges.row(static_cast<std::size_t>(topo.incoming_edges[p])),
                               1.0);
                if (s != 1.0)
                    for (std::size_t j = 0; j < de_out; ++j)
                        row[j] *= s;
                off = de_out;
            }
            auto v = g.vertices.row(i);
            std::copy(v.begin(), v.end(), row.begin() + static_cast<std::ptrdiff_t>(off));
            off += dv;
            if (cfg.vertex_uses_global)
                std::copy(g.global.begin(), g.global.end(), row.begin() + static_cast<std::ptrdiff_t>(off));
        }
        out.vertices = mlp_forward(params.vertex, x, cache ? &cache->vertex : nullptr);
    } else {
        out.vertices = g.vertices;
    }

    if (cfg.update_global) {
        std::vector<double> x;
        if (cfg.global_uses_edges) {
            auto a = aggregate_rows(out.edges, cfg.edge_to_global);
            x.insert(x.end(), a.begin(), a.end());
        }
        if (cfg.global_uses_vertices) {
            auto a = aggregate_rows(out.vertices, cfg.vertex_to_global);
            x.insert(x.end(), a.begin(), a.end());
        }
        if (cfg.global_uses_global)
            x.insert(x.end(), g.global.begin(), g.global.end());
        require_width(params.global, x.size(), "global");
        out.global = mlp_forward(params.global, x, cache ? &cache->global : nullptr);
    } else {
        out.global = g.global;
    }

    if (cache) {
        cache->structure = g.structure;
        cache->in_vertex_width = dv;
        cache->in_edge_width = de;
        cache->in_global_width = du;
        cache->out_vertex_width = out.vertices.cols();
        cache->out_edge_width = de_out;
        cache->n_vertices_out = nv;
        cache->n_edges_out = ne;
        cache->topology = topo;
    }
    return out;
}

void block_backward(const HgnBlockConfig &cfg, const HgnBlockParams &params, const BlockCache &cache,
                    const Hypergraph &grad_out, BlockGradients &grads) {
    const std::size_t nv = cache.n_vertices_out, ne = cache.n_edges_out;
    const std::size_t dv = cache.in_vertex_width, de = cache.in_edge_width, du = cache.in_global_width;
    const std::size_t dv_out = cache.out_vertex_width, de_out = cache.out_edge_width;
    const BlockTopology &topo = cache.topology;

    // Empty upstream gradients stand for zeros.
    DenseMatrix d_edges = grad_out.edges.empty() ? DenseMatrix(ne, de_out) : grad_out.edges;
    DenseMatrix d_vertices = grad_out.vertices.empty() ? DenseMatrix(nv, dv_out) : grad_out.vertices;
    if (d_edges.rows() != ne || d_edges.cols() != de_out || d_vertices.rows() != nv || d_vertices.cols() != dv_out)
        throw ShapeError("block_backward: upstream feature gradient shape mismatch");

    grads.vertices = DenseMatrix(nv, dv);
    grads.edges = DenseMatrix(ne, de);
    grads.global.assign(du, 0.0);
    if (grads.params.edge.layers.size() != params.edge.layers.size() ||
        grads.params.vertex.layers.size() != params.vertex.layers.size() ||
        grads.params.global.layers.size() != params.global.layers.size())
        grads.params = zeros_like(params);

    if (cfg.update_global) {
        const std::size_t dg = params.global.out_dim();
        std::vector<double> dy = grad_out.global.empty() ? std::vector<double>(dg, 0.0) : grad_out.global;
        if (dy.size() != dg)
            throw ShapeError("block_backward: upstream global gradient width mismatch");
        auto dx = mlp_backward(params.global, cache.global, dy, grads.params.global);
        std::span<const double> rest(dx);
        if (cfg.global_uses_edges) {
            const double s = mean_scale(cfg.edge_to_global, ne);
            for (std::size_t k = 0; k < ne; ++k)
                add_scaled(d_edges.row(k), rest.subspan(0, de_out), s);
            rest = rest.subspan(de_out);
        }
        if (cfg.global_uses_vertices) {
            const double s = mean_scale(cfg.vertex_to_global, nv);
            for (std::size_t i = 0; i < nv; ++i)
                add_scaled(d_vertices.row(i), rest.subspan(0, dv_out), s);
            rest = rest.subspan(dv_out);
        }
        if (cfg.global_uses_global)
            add_scaled(grads.global, rest, 1.0);
    } else if (!grad_out.global.empty()) {
        if (grad_out.global.size() != du)
            throw ShapeError("block_backward: upstream global gradient width mismatch");
        add_scaled(grads.global, grad_out.global, 1.0);
    }

    if (cfg.update_vertices) {
        DenseMatrix dx = mlp_backward(params.vertex, cache.vertex, d_vertices, grads.params.vertex);
        for (std::size_t i = 0; i < nv; ++i) {
            auto row = dx.row(i);
            std::size_t off = 0;
            if (cfg.vertex_uses_edges) {
                const std::size_t b = topo.incoming_offsets[i], e = topo.incoming_offsets[i + 1];
                const double s = mean_scale(cfg.edge_to_vertex, e - b);
                for (std::size_t p = b; p < e; ++p)
                    add_scaled(d_edges.row(static_cast<std::size_t>(topo.incoming_edges[p])), row.subspan(0, de_out),
                               s);
                off = de_out;
            }
            add_scaled(grads.vertices.row(i), row.subspan(off, dv), 1.0);
            off += dv;
            if (cfg.vertex_uses_global)
                add_scaled(grads.global, row.subspan(off, du), 1.0);
        }
    } else {
        add_scaled(grads.vertices.values(), d_vertices.values(), 1.0);
    }

    if (cfg.update_edges) {
        DenseMatrix dx = mlp_backward(params.edge, cache.edge, d_edges, grads.params.edge);
        const std::size_t nr = topo.n_receiver, ns = topo.n_sender;
        for (std::size_t k = 0; k < ne; ++k) {
            auto row = dx.row(k);
            add_scaled(grads.edges.row(k), row.subspan(0, de), 1.0);
            std::size_t off = de;
            if (cfg.edge_uses_vertices) {
                for (std::size_t j = 0; j < nr; ++j, off += dv) {
                    int id = topo.receiver_slots[k * nr + j];
                    if (id >= 0)
                        add_scaled(grads.vertices.row(static_cast<std::size_t>(id)), row.subspan(off, dv), 1.0);
                }
                for (std::size_t j = 0; j < ns; ++j, off += dv) {
                    int id = topo.sender_slots[k * ns + j];
                    if (id >= 0)
                        add_scaled(grads.vertices.row(static_cast<std::size_t>(id)), row.subspan(off, dv), 1.0);
                }
            }
            if (cfg.edge_uses_global)
                add_scaled(grads.global, row.subspan(off, du), 1.0);
        }
    } else {
        add_scaled(grads.edges.values(), d_edges.values(), 1.0);
    }
}

}  // namespace hgnplan
