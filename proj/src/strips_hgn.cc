#include "hgnplan/strips_hgn.h"

#include "hgnplan/errors.h"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace hgnplan {

HgnBlockConfig encoder_block_config(const ArityBounds &arity) {
    HgnBlockConfig c;
    c.update_global = false;
    c.edge_uses_vertices = false;
    c.vertex_uses_edges = false;
    c.arity = arity;
    return c;
}

HgnBlockConfig core_block_config(const ArityBounds &arity) {
    HgnBlockConfig c;
    c.arity = arity;
    return c;
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

struct ModelShapes {
    std::vector<std::size_t> enc_edge, enc_vertex, core_edge, core_vertex, core_global, decoder;
};

ModelShapes shapes_for(const StripsHgnConfig &c) {
    if (c.steps < 1 || c.latent_width < 1 || c.mlp_layers < 1 || c.arity.n_sender < 1 || c.arity.n_receiver < 1)
        throw ShapeError("model configuration needs steps, widths, layers and arity bounds of at least 1");
    const std::size_t L = c.latent_width;
    auto dims = [&](std::size_t in) {
        std::vector<std::size_t> d{in};
        for (std::size_t i = 0; i < c.mlp_layers; ++i)
            d.push_back(L);
        return d;
    };
    ModelShapes s;
    s.enc_edge = dims(kInputEdgeWidth);
    s.enc_vertex = dims(kInputVertexWidth);
    s.core_edge = dims(2 * L + (c.arity.n_receiver + c.arity.n_sender) * 2 * L);
    s.core_vertex = dims(L + 2 * L);
    s.core_global = dims(L + L);
    s.decoder = dims(L);
    s.decoder.push_back(1);
    return s;
}

std::vector<std::size_t> dims_of(const MlpParams &p) {
    std::vector<std::size_t> d;
    if (p.layers.empty())
        return d;
    d.push_back(p.in_dim());
    for (const auto &l : p.layers) {
        if (l.bias.size() != l.out_dim())
            return {};
        d.push_back(l.out_dim());
    }
    for (std::size_t i = 1; i < p.layers.size(); ++i)
        if (p.layers[i].in_dim() != p.layers[i - 1].out_dim())
            return {};
    return d;
}

void split_columns(const DenseMatrix &m, std::size_t left, DenseMatrix &a, DenseMatrix &b) {
    a = DenseMatrix(m.rows(), left);
    b = DenseMatrix(m.rows(), m.cols() - left);
    for (std::size_t r = 0; r < m.rows(); ++r) {
        auto row = m.row(r);
        std::copy(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(left), a.row(r).begin());
        std::copy(row.begin() + static_cast<std::ptrdiff_t>(left), row.end(), b.row(r).begin());
    }
}

void add_into(DenseMatrix &dst, const DenseMatrix &src) {
    auto d = dst.values();
    auto s = src.values();
    for (std::size_t i = 0; i < d.size(); ++i)
        d[i] += s[i];
}

}  // namespace

StripsHgnModel StripsHgnModel::initialized(const StripsHgnConfig &cfg, std::uint64_t seed) {
    ModelShapes s = shapes_for(cfg);
    StripsHgnModel m;
    m.config = cfg;
    std::uint64_t stream = splitmix64(seed);
    auto next = [&] { return stream = splitmix64(stream); };
    const double a = cfg.slope;
    m.encoder.edge = init_params(s.enc_edge, next(), a);
    m.encoder.vertex = init_params(s.enc_vertex, next(), a);
    m.core.edge = init_params(s.core_edge, next(), a);
    m.core.vertex = init_params(s.core_vertex, next(), a);
    m.core.global = init_params(s.core_global, next(), a);
    m.decoder = init_params(s.decoder, next(), a, true);
    m.metadata["seed"] = seed;
    return m;
}

StripsHgnModel StripsHgnModel::zeros(const StripsHgnConfig &cfg) {
    ModelShapes s = shapes_for(cfg);
    auto zero_mlp = [&](const std::vector<std::size_t> &dims, bool final_linear) {
        MlpParams p;
        p.slope = cfg.slope;
        p.final_linear = final_linear;
        for (std::size_t l = 0; l + 1 < dims.size(); ++l)
            p.layers.push_back({DenseMatrix(dims[l + 1], dims[l]), std::vector<double>(dims[l + 1], 0.0)});
        return p;
    };
    StripsHgnModel m;
    m.config = cfg;
    m.encoder.edge = zero_mlp(s.enc_edge, false);
    m.encoder.vertex = zero_mlp(s.enc_vertex, false);
    m.core.edge = zero_mlp(s.core_edge, false);
    m.core.vertex = zero_mlp(s.core_vertex, false);
    m.core.global = zero_mlp(s.core_global, false);
    m.decoder = zero_mlp(s.decoder, true);
    return m;
}

std::vector<std::span<double>> StripsHgnModel::parameters() {
    std::vector<std::span<double>> out;
    collect_parameters(encoder, out);
    collect_parameters(core, out);
    collect_parameters(decoder, out);
    return out;
}

std::vector<std::span<const double>> StripsHgnModel::parameters() const {
    std::vector<std::span<const double>> out;
    collect_parameters(encoder, out);
    collect_parameters(core, out);
    collect_parameters(decoder, out);
    return out;
}

std::size_t StripsHgnModel::parameter_count() const {
    std::size_t n = 0;
    for (auto p : parameters())
        n += p.size();
    return n;
}

void validate_model(const StripsHgnModel &m) {
    ModelShapes s = shapes_for(m.config);
    auto check = [](const MlpParams &p, const std::vector<std::size_t> &want, const char *which) {
        if (dims_of(p) != want)
            throw ShapeError(std::string("parameter shapes of ") + which + " do not match the model configuration");
    };
    check(m.encoder.edge, s.enc_edge, "encoder.edge");
    check(m.encoder.vertex, s.enc_vertex, "encoder.vertex");
    if (!m.encoder.global.layers.empty())
        throw ShapeError("encoder has no global update");
    check(m.core.edge, s.core_edge, "core.edge");
    check(m.core.vertex, s.core_vertex, "core.vertex");
    check(m.core.global, s.core_global, "core.global");
    check(m.decoder, s.decoder, "decoder");
    if (!m.decoder.final_linear)
        throw ShapeError("decoder must end in a linear layer");
}

std::vector<double> forward(const StripsHgnModel &m, const Hypergraph &input, ForwardTrace *trace,
                            const BlockTopology *topology) {
    if (input.vertex_width() != kInputVertexWidth || input.edge_width() != kInputEdgeWidth)
        throw ShapeError("STRIPS-HGN input must have vertex width 2 and hyperedge width 3");
    BlockTopology local;
    if (!topology) {
        local = make_topology(*input.structure, m.config.arity);
        topology = &local;
    }
    const HgnBlockConfig enc_cfg = encoder_block_config(m.config.arity);
    const HgnBlockConfig core_cfg = core_block_config(m.config.arity);
    const std::size_t M = m.config.steps;

    if (trace) {
        trace->core.assign(M, {});
        trace->decoder.assign(M, {});
        trace->latents.clear();
        trace->outputs.clear();
    }
    Hypergraph g0 = block_forward(enc_cfg, m.encoder, input, trace ? &trace->encoder : nullptr, topology);
    std::vector<double> outputs;
    outputs.reserve(M);
    Hypergraph prev = g0;
    if (trace)
        trace->latents.push_back(g0);
    for (std::size_t t = 0; t < M; ++t) {
        Hypergraph in = concat_features(g0, prev);
        Hypergraph next = block_forward(core_cfg, m.core, in, trace ? &trace->core[t] : nullptr, topology);
        auto h = mlp_forward(m.decoder, next.global, trace ? &trace->decoder[t] : nullptr);
        outputs.push_back(h.at(0));
        if (trace)
            trace->latents.push_back(next);
        prev = std::move(next);
    }
    if (trace)
        trace->outputs = outputs;
    return outputs;
}

Cost heuristic_value(const StripsHgnModel &m, const GroundedTask &t, const State &s) {
    auto st = std::make_shared<const HypergraphStructure>(build_structure(t));
    BlockTopology topo = make_topology(*st, m.config.arity);
    auto out = forward(m, encode_features(st, t, s), nullptr, &topo);
    return Cost(std::max(out.back(), 0.0));
}

HgnHeuristic::HgnHeuristic(std::shared_ptr<const StripsHgnModel> model, const GroundedTask &t)
    : model_(std::move(model)),
      task_(t),
      structure_(std::make_shared<const HypergraphStructure>(build_structure(t))),
      topology_(make_topology(*structure_, model_->config.arity)) {}

Cost HgnHeuristic::evaluate(const State &s) {
    auto out = forward(*model_, encode_features(structure_, task_, s), nullptr, &topology_);
    return Cost(std::max(out.back(), 0.0));
}

double step_loss(std::span<const double> outputs, double target) {
    double sum = 0.0;
    for (double h : outputs)
        sum += mse(h, target);
    return sum / static_cast<double>(outputs.size());
}

double loss(const StripsHgnModel &m, std::span<const HgnExample> batch) {
    if (batch.empty())
        throw std::invalid_argument("loss of an empty batch");
    double sum = 0.0;
    for (const auto &ex : batch)
        sum += step_loss(forward(m, ex.input), ex.target);
    return sum / static_cast<double>(batch.size());
}

double accumulate_gradients(const StripsHgnModel &m, const HgnExample &ex, double scale, StripsHgnModel &grads) {
    ForwardTrace tr;
    forward(m, ex.input, &tr);
    const std::size_t M = m.config.steps;
    const std::size_t L = m.config.latent_width;
    const double l = step_loss(tr.outputs, ex.target);
    const HgnBlockConfig core_cfg = core_block_config(m.config.arity);
    const HgnBlockConfig enc_cfg = encoder_block_config(m.config.arity);

    // The loss is linear in its output gradients, so `scale` is applied once at dh.
    const auto &g0 = tr.latents[0];
    DenseMatrix d0_vertices(g0.vertices.rows(), L), d0_edges(g0.edges.rows(), L);
    Hypergraph d_next;
    d_next.structure = g0.structure;
    d_next.vertices = DenseMatrix(g0.vertices.rows(), L);
    d_next.edges = DenseMatrix(g0.edges.rows(), L);

    BlockGradients bg;
    bg.params = std::move(grads.core);
    for (std::size_t t = M; t-- > 0;) {
        const double dh = scale * 2.0 * (tr.outputs[t] - ex.target) / static_cast<double>(M);
        d_next.global = mlp_backward(m.decoder, tr.decoder[t], std::vector<double>{dh}, grads.decoder);
        block_backward(core_cfg, m.core, tr.core[t], d_next, bg);
        DenseMatrix a, b;
        split_columns(bg.vertices, L, a, b);
        add_into(d0_vertices, a);
        d_next.vertices = std::move(b);
        split_columns(bg.edges, L, a, b);
        add_into(d0_edges, a);
        d_next.edges = std::move(b);
    }
    // At t = 1 the second half of the core input is G0 itself.
    add_into(d0_vertices, d_next.vertices);
    add_into(d0_edges, d_next.edges);
    grads.core = std::move(bg.params);

    Hypergraph d0;
    d0.structure = g0.structure;
    d0.vertices = std::move(d0_vertices);
    d0.edges = std::move(d0_edges);
    BlockGradients eg;
    eg.params = std::move(grads.encoder);
    block_backward(enc_cfg, m.encoder, tr.encoder, d0, eg);
    grads.encoder = std::move(eg.params);
    return l;
}

StripsHgnModel loss_gradients(const StripsHgnModel &m, const HgnExample &ex) {
    StripsHgnModel g = StripsHgnModel::zeros(m.config);
    accumulate_gradients(m, ex, 1.0, g);
    return g;
}

double loss_and_gradients(const StripsHgnModel &m, std::span<const HgnExample> batch, StripsHgnModel &grads) {
    if (batch.empty())
        throw std::invalid_argument("loss of an empty batch");
    const double scale = 1.0 / static_cast<double>(batch.size());
    double sum = 0.0;
    for (const auto &ex : batch)
        sum += accumulate_gradients(m, ex, scale, grads);
    return sum * scale;
}

namespace {

nlohmann::json mlp_to_json(const MlpParams &p) {
    nlohmann::json layers = nlohmann::json::array();
    for (const auto &l : p.layers) {
        nlohmann::json w = nlohmann::json::array();
        for (std::size_t r = 0; r < l.weight.rows(); ++r) {
            auto row = l.weight.row(r);
            w.push_back(std::vector<double>(row.begin(), row.end()));
        }
        layers.push_back({{"weight", w}, {"bias", l.bias}});
    }
    return {{"slope", p.slope}, {"final_linear", p.final_linear}, {"layers", layers}};
}

MlpParams mlp_from_json(const nlohmann::json &j) {
    MlpParams p;
    p.slope = j.at("slope").get<double>();
    p.final_linear = j.at("final_linear").get<bool>();
    for (const auto &lj : j.at("layers")) {
        const auto &w = lj.at("weight");
        auto rows = w.get<std::vector<std::vector<double>>>();
        const std::size_t cols = rows.empty() ? 0 : rows.front().size();
        DenseLayer l{DenseMatrix(rows.size(), cols), lj.at("bias").get<std::vector<double>>()};
        for (std::size_t r = 0; r < rows.size(); ++r) {
            if (rows[r].size() != cols)
                throw ModelFormatError("ragged weight matrix in model file");
            std::copy(rows[r].begin(), rows[r].end(), l.weight.row(r).begin());
        }
        p.layers.push_back(std::move(l));
    }
    return p;
}

}  // namespace

nlohmann::json model_to_json(const StripsHgnModel &m) {
    const auto &c = m.config;
    nlohmann::json j;
    j["format"] = "strips-hgn-model";
    j["version"] = kModelFormatVersion;
    j["hyperparameters"] = {{"latent_width", c.latent_width}, {"steps", c.steps},
                            {"slope", c.slope},               {"mlp_layers", c.mlp_layers},
                            {"n_sender", c.arity.n_sender},   {"n_receiver", c.arity.n_receiver}};
    j["encoder"] = {{"edge", mlp_to_json(m.encoder.edge)}, {"vertex", mlp_to_json(m.encoder.vertex)}};
    j["core"] = {{"edge", mlp_to_json(m.core.edge)},
                 {"vertex", mlp_to_json(m.core.vertex)},
                 {"global", mlp_to_json(m.core.global)}};
    j["decoder"] = mlp_to_json(m.decoder);
    j["metadata"] = m.metadata;
    return j;
}

StripsHgnModel model_from_json(const nlohmann::json &j) {
    try {
        if (!j.is_object() || j.value("format", "") != "strips-hgn-model")
            throw ModelFormatError("not a STRIPS-HGN model file");
        const int version = j.at("version").get<int>();
        if (version != kModelFormatVersion)
            throw ModelVersionError("unsupported model file version " + std::to_string(version) + " (expected " +
                                    std::to_string(kModelFormatVersion) + ")");
        const auto &h = j.at("hyperparameters");
        StripsHgnModel m;
        m.config.latent_width = h.at("latent_width").get<std::size_t>();
        m.config.steps = h.at("steps").get<std::size_t>();
        m.config.slope = h.at("slope").get<double>();
        m.config.mlp_layers = h.at("mlp_layers").get<std::size_t>();
        m.config.arity.n_sender = h.at("n_sender").get<std::size_t>();
        m.config.arity.n_receiver = h.at("n_receiver").get<std::size_t>();
        m.encoder.edge = mlp_from_json(j.at("encoder").at("edge"));
        m.encoder.vertex = mlp_from_json(j.at("encoder").at("vertex"));
        m.core.edge = mlp_from_json(j.at("core").at("edge"));
        m.core.vertex = mlp_from_json(j.at("core").at("vertex"));
        m.core.global = mlp_from_json(j.at("core").at("global"));
        m.decoder = mlp_from_json(j.at("decoder"));
        m.metadata = j.value("metadata", nlohmann::json::object());
        validate_model(m);
        return m;
    } catch (const nlohmann::json::exception &e) {
        throw ModelFormatError(std::string("malformed model file: ") + e.what());
    } catch (const ShapeError &e) {
        throw ModelFormatError(std::string("inconsistent model file: ") + e.what());
    }
}

void save_model(const StripsHgnModel &m, const std::filesystem::path &path) {
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot write model file " + path.string());
    out << model_to_json(m).dump() << '\n';
    if (!out)
        throw std::runtime_error("failed writing model file " + path.string());
}

StripsHgnModel load_model(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open model file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(ss.str());
    } catch (const nlohmann::json::parse_error &e) {
        throw ModelFormatError("corrupt model file " + path.string() + ": " + e.what());
    }
    return model_from_json(j);
}

}  // namespace hgnplan
