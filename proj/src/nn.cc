#include "hgnplan/nn.h"

#include "hgnplan/errors.h"

#include <algorithm>
#include <cmath>
#include <random>

namespace hgnplan {

DenseMatrix::DenseMatrix(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ ? rows.begin()->size() : 0;
    data_.reserve(rows_ * cols_);
    for (const auto &r : rows) {
        if (r.size() != cols_)
            throw ShapeError("ragged matrix initializer");
        data_.insert(data_.end(), r.begin(), r.end());
    }
}

void DenseMatrix::fill(double v) {
    std::fill(data_.begin(), data_.end(), v);
}

std::vector<double> leaky_relu(std::span<const double> x, double slope) {
    std::vector<double> y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i)
        y[i] = leaky_relu(x[i], slope);
    return y;
}

namespace {

// Eight independent partial sums, combined in a fixed order; vectorizes without
// reassociation flags and stays deterministic.
double dot(const double *a, const double *b, std::size_t n) {
    double acc[8] = {0, 0, 0, 0, 0, 0, 0, 0};
    std::size_t k = 0;
    for (; k + 8 <= n; k += 8)
        for (std::size_t l = 0; l < 8; ++l)
            acc[l] += a[k + l] * b[k + l];
    double tail = 0.0;
    for (; k < n; ++k)
        tail += a[k] * b[k];
    return ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7])) + tail;
}

// y = x W^T + b over a row batch.
DenseMatrix affine(const DenseLayer &layer, const DenseMatrix &x) {
    const std::size_t in = layer.in_dim();
    const std::size_t out = layer.out_dim();
    DenseMatrix y(x.rows(), out);
    for (std::size_t i = 0; i < x.rows(); ++i) {
        const double *xr = x.row(i).data();
        double *yr = y.row(i).data();
        for (std::size_t o = 0; o < out; ++o)
            yr[o] = dot(xr, layer.weight.row(o).data(), in) + layer.bias[o];
    }
    return y;
}

}  // namespace

DenseMatrix mlp_forward(const MlpParams &p, const DenseMatrix &x, MlpCache *cache) {
    if (x.cols() != p.in_dim())
        throw ShapeError("MLP input width " + std::to_string(x.cols()) + " != " + std::to_string(p.in_dim()));
    if (cache) {
        cache->inputs.resize(p.layers.size());
        cache->pre_activations.resize(p.layers.size());
    }
    const DenseMatrix *cur = &x;
    DenseMatrix a;
    for (std::size_t l = 0; l < p.layers.size(); ++l) {
        DenseMatrix z = affine(p.layers[l], *cur);
        if (cache) {
            cache->inputs[l] = *cur;
            cache->pre_activations[l] = z;
        }
        if (p.activated(l))
            for (double &v : z.values())
                v = leaky_relu(v, p.slope);
        a = std::move(z);
        cur = &a;
    }
    return a;
}

std::vector<double> mlp_forward(const MlpParams &p, std::span<const double> x, MlpCache *cache) {
    DenseMatrix xm(1, x.size());
    std::copy(x.begin(), x.end(), xm.values().begin());
    DenseMatrix y = mlp_forward(p, xm, cache);
    return {y.values().begin(), y.values().end()};
}

DenseMatrix mlp_backward(const MlpParams &p, const MlpCache &cache, const DenseMatrix &dy, MlpParams &grads) {
    if (cache.inputs.size() != p.layers.size() || grads.layers.size() != p.layers.size())
        throw ShapeError("MLP cache/gradient does not match parameters");
    if (dy.cols() != p.out_dim() || (!p.layers.empty() && dy.rows() != cache.inputs.front().rows()))
        throw ShapeError("MLP output gradient shape mismatch");
    DenseMatrix delta = dy;
    for (std::size_t li = p.layers.size(); li-- > 0;) {
        const DenseLayer &layer = p.layers[li];
        DenseLayer &g = grads.layers[li];
        const DenseMatrix &z = cache.pre_activations[li];
        const DenseMatrix &x = cache.inputs[li];
        const std::size_t in = layer.in_dim();
        const std::size_t out = layer.out_dim();
        if (p.activated(li)) {
            auto dv = delta.values();
            auto zv = z.values();
            for (std::size_t i = 0; i < dv.size(); ++i)
                if (!(zv[i] > 0.0))
                    dv[i] *= p.slope;
        }
        DenseMatrix dx(x.rows(), in);
        for (std::size_t i = 0; i < x.rows(); ++i) {
            const double *dr = delta.row(i).data();
            const double *xr = x.row(i).data();
            double *dxr = dx.row(i).data();
            for (std::size_t o = 0; o < out; ++o) {
                const double d = dr[o];
                if (d == 0.0)
                    continue;
                g.bias[o] += d;
                double *gw = g.weight.row(o).data();
                const double *w = layer.weight.row(o).data();
                for (std::size_t k = 0; k < in; ++k) {
                    gw[k] += d * xr[k];
                    dxr[k] += d * w[k];
                }
            }
        }
        delta = std::move(dx);
    }
    return delta;
}

std::vector<double> mlp_backward(const MlpParams &p, const MlpCache &cache, std::span<const double> dy,
                                 MlpParams &grads) {
    DenseMatrix dym(1, dy.size());
    std::copy(dy.begin(), dy.end(), dym.values().begin());
    DenseMatrix dx = mlp_backward(p, cache, dym, grads);
    return {dx.values().begin(), dx.values().end()};
}

MlpParams zeros_like(const MlpParams &p) {
    MlpParams z;
    z.slope = p.slope;
    z.final_linear = p.final_linear;
    for (const auto &l : p.layers)
        z.layers.push_back({DenseMatrix(l.weight.rows(), l.weight.cols()), std::vector<double>(l.bias.size(), 0.0)});
    return z;
}

MlpParams init_params(std::span<const std::size_t> dims, std::uint64_t seed, double slope, bool final_linear) {
    if (dims.size() < 2)
        throw ShapeError("an MLP needs at least input and output dimensions");
    MlpParams p;
    p.slope = slope;
    p.final_linear = final_linear;
    std::mt19937_64 rng(seed);
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        const std::size_t in = dims[l];
        const std::size_t out = dims[l + 1];
        const double bound = std::sqrt(6.0 / static_cast<double>(in + out));
        std::uniform_real_distribution<double> dist(-bound, bound);
        DenseLayer layer{DenseMatrix(out, in), std::vector<double>(out, 0.0)};
        for (double &w : layer.weight.values())
            w = dist(rng);
        p.layers.push_back(std::move(layer));
    }
    return p;
}

void collect_parameters(MlpParams &p, std::vector<std::span<double>> &out) {
    for (auto &l : p.layers) {
        out.push_back(l.weight.values());
        out.emplace_back(l.bias);
    }
}

void collect_parameters(const MlpParams &p, std::vector<std::span<const double>> &out) {
    for (const auto &l : p.layers) {
        out.push_back(l.weight.values());
        out.emplace_back(l.bias);
    }
}

void adam_step(std::span<const std::span<double>> params, std::span<const std::span<const double>> grads,
               AdamState &st, double lr, double weight_decay) {
    if (params.size() != grads.size())
        throw ShapeError("parameter/gradient list length mismatch");
    if (st.m.empty()) {
        for (const auto &p : params) {
            st.m.emplace_back(p.size(), 0.0);
            st.v.emplace_back(p.size(), 0.0);
        }
    }
    if (st.m.size() != params.size())
        throw ShapeError("Adam state does not match parameter list");
    ++st.step;
    const double t = static_cast<double>(st.step);
    const double c1 = 1.0 - std::pow(st.beta1, t);
    const double c2 = 1.0 - std::pow(st.beta2, t);
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto theta = params[i];
        auto g = grads[i];
        auto &m = st.m[i];
        auto &v = st.v[i];
        if (theta.size() != g.size() || m.size() != theta.size())
            throw ShapeError("parameter/gradient shape mismatch");
        for (std::size_t j = 0; j < theta.size(); ++j) {
            const double gj = g[j] + weight_decay * theta[j];
            m[j] = st.beta1 * m[j] + (1.0 - st.beta1) * gj;
            v[j] = st.beta2 * v[j] + (1.0 - st.beta2) * gj * gj;
            const double mhat = m[j] / c1;
            const double vhat = v[j] / c2;
            theta[j] -= lr * mhat / (std::sqrt(vhat) + st.eps);
        }
    }
}

}  // namespace hgnplan
