#include "tabmda/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <utility>

#include "tabmda/errors.hpp"
#include "tabmda/numerics.hpp"
#include "tabmda/rng.hpp"

namespace tabmda {

void EncoderConfig::validate() const {
    if (f_max < 1) throw ConfigError("encoder config: f_max must be >= 1");
    if (c_max < 2) throw ConfigError("encoder config: c_max must be >= 2");
    if (d_model == 0 || n_layers == 0 || n_heads == 0 || d_ff == 0) {
        throw ConfigError("encoder config: sizes must be positive");
    }
    if (d_model % n_heads != 0) {
        throw ConfigError("encoder config: d_model must be divisible by n_heads");
    }
    if (layer_norm_eps <= 0.0) {
        throw ConfigError("encoder config: layer_norm_eps must be positive");
    }
}

void EncoderWeights::validate_shapes(const EncoderConfig& cfg) const {
    auto expect = [](bool ok, const char* what) {
        if (!ok) throw ShapeError(std::string("encoder weights: bad shape for ") + what);
    };
    expect(input_projection.rows() == cfg.f_max && input_projection.cols() == cfg.d_model,
           "input_projection");
    expect(label_embedding.rows() == cfg.c_max && label_embedding.cols() == cfg.d_model,
           "label_embedding");
    expect(layers.size() == cfg.n_layers, "layer count");
    for (const auto& l : layers) {
        const std::size_t d = cfg.d_model;
        expect(l.wq.rows() == d && l.wq.cols() == d, "wq");
        expect(l.wk.rows() == d && l.wk.cols() == d, "wk");
        expect(l.wv.rows() == d && l.wv.cols() == d, "wv");
        expect(l.wo.rows() == d && l.wo.cols() == d, "wo");
        expect(l.ln1_gain.size() == d && l.ln1_bias.size() == d, "ln1");
        expect(l.ln2_gain.size() == d && l.ln2_bias.size() == d, "ln2");
        expect(l.ff_w1.rows() == d && l.ff_w1.cols() == cfg.d_ff, "ff_w1");
        expect(l.ff_b1.size() == cfg.d_ff, "ff_b1");
        expect(l.ff_w2.rows() == cfg.d_ff && l.ff_w2.cols() == d, "ff_w2");
        expect(l.ff_b2.size() == d, "ff_b2");
    }
}

namespace {

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x * 0.7071067811865475)); }

void layer_norm(std::span<const double> x, std::span<const double> gain,
                std::span<const double> bias, double eps, std::span<double> out) {
    const std::size_t d = x.size();
    double mean = 0.0;
    for (const double v : x) mean += v;
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (const double v : x) {
        const double diff = v - mean;
        var += diff * diff;
    }
    var /= static_cast<double>(d);
    const double inv = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < d; ++j) {
        out[j] = gain[j] * (x[j] - mean) * inv + bias[j];
    }
}

void vecmat(std::span<const double> v, const Matrix& w, std::span<double> out) {
    const std::size_t rows = w.rows();
    const std::size_t cols = w.cols();
    for (std::size_t j = 0; j < cols; ++j) out[j] = 0.0;
    for (std::size_t k = 0; k < rows; ++k) {
        const double vk = v[k];
        const auto wr = w.row(k);
        for (std::size_t j = 0; j < cols; ++j) out[j] += vk * wr[j];
    }
}

struct TokenSetup {
    Matrix ctx_tokens;   // M x d_model
    Matrix query_tokens; // Q x d_model
};

/// Standardize with context stats, zero-pad to f_max with a f_max/D feature
/// scale, project into d_model, and add label embeddings to context tokens.
TokenSetup build_tokens(const EncoderWeights& weights, const EncoderConfig& cfg,
                        const Context& ctx, const Matrix& queries, bool fold_labels) {
    const std::size_t d_in = ctx.features.cols();
    if (ctx.features.rows() == 0) throw EmptyContext("embed: context has no rows");
    if (ctx.labels.size() != ctx.features.rows()) {
        throw ShapeError("embed: context labels and features disagree");
    }
    if (d_in == 0) throw ShapeError("embed: context has no feature columns");
    if (queries.rows() > 0 && queries.cols() != d_in) {
        throw ShapeError("embed: query feature width differs from context");
    }
    if (d_in > cfg.f_max) throw TooManyFeatures("embed: more features than f_max");
    for (const int y : ctx.labels) {
        if (y < 0) throw ShapeError("embed: negative context label");
        if (!fold_labels && static_cast<std::size_t>(y) >= cfg.c_max) {
            throw TooManyClasses("embed: context label exceeds c_max");
        }
    }

    auto standardized = standardize_fit_apply(ctx.features, {queries});
    const Matrix& ctx_std = standardized.train;
    const Matrix& query_std = standardized.others[0];

    const double feature_scale = static_cast<double>(cfg.f_max) / static_cast<double>(d_in);

    auto project = [&](const Matrix& src, std::size_t i, std::span<double> out) {
        // Equivalent to (zero-padded row) * input_projection: columns past
        // d_in contribute nothing.
        for (std::size_t m = 0; m < cfg.d_model; ++m) out[m] = 0.0;
        for (std::size_t j = 0; j < d_in; ++j) {
            const double xj = src(i, j) * feature_scale;
            const auto wr = weights.input_projection.row(j);
            for (std::size_t m = 0; m < cfg.d_model; ++m) out[m] += xj * wr[m];
        }
    };

    TokenSetup setup;
    setup.ctx_tokens = Matrix(ctx_std.rows(), cfg.d_model);
    for (std::size_t i = 0; i < ctx_std.rows(); ++i) {
        auto out = setup.ctx_tokens.row(i);
        project(ctx_std, i, out);
        std::size_t y = static_cast<std::size_t>(ctx.labels[i]);
        if (fold_labels) y %= cfg.c_max;
        const auto emb = weights.label_embedding.row(y);
        for (std::size_t m = 0; m < cfg.d_model; ++m) out[m] += emb[m];
    }
    setup.query_tokens = Matrix(queries.rows(), cfg.d_model);
    for (std::size_t i = 0; i < queries.rows(); ++i) {
        project(query_std, i, setup.query_tokens.row(i));
    }
    return setup;
}

struct LayerCache {
    Matrix keys;   // M x d_model, from ln1 of the layer's input states
    Matrix values; // M x d_model
};

void attend(const EncoderConfig& cfg, std::span<const double> query_vec,
            const Matrix& keys, const Matrix& values, std::span<double> out) {
    const std::size_t n_keys = keys.rows();
    const std::size_t d_head = cfg.d_model / cfg.n_heads;
    const double scale = 1.0 / std::sqrt(static_cast<double>(d_head));
    std::vector<double> scores(n_keys);
    for (std::size_t h = 0; h < cfg.n_heads; ++h) {
        const std::size_t off = h * d_head;
        double max_score = -std::numeric_limits<double>::infinity();
        for (std::size_t t = 0; t < n_keys; ++t) {
            double s = 0.0;
            const auto kr = keys.row(t);
            for (std::size_t j = 0; j < d_head; ++j) s += query_vec[off + j] * kr[off + j];
            scores[t] = s * scale;
            max_score = std::max(max_score, scores[t]);
        }
        double denom = 0.0;
        for (std::size_t t = 0; t < n_keys; ++t) {
            scores[t] = std::exp(scores[t] - max_score);
            denom += scores[t];
        }
        for (std::size_t j = 0; j < d_head; ++j) out[off + j] = 0.0;
        for (std::size_t t = 0; t < n_keys; ++t) {
            const double w = scores[t] / denom;
            const auto vr = values.row(t);
            for (std::size_t j = 0; j < d_head; ++j) out[off + j] += w * vr[off + j];
        }
    }
}

} // namespace

Matrix transformer_embed(const EncoderWeights& weights, const EncoderConfig& cfg,
                         const Context& ctx, const Matrix& queries, bool fold_labels) {
    cfg.validate();
    weights.validate_shapes(cfg);

    TokenSetup setup = build_tokens(weights, cfg, ctx, queries, fold_labels);
    const std::size_t m = setup.ctx_tokens.rows();
    const std::size_t d = cfg.d_model;

    // Context pass: full self-attention among context tokens; cache per-layer
    // keys/values for the query pass.
    std::vector<LayerCache> cache(cfg.n_layers);
    Matrix states = std::move(setup.ctx_tokens);
    std::vector<double> normed(d), tmp(d), attn_out(d), proj(d);
    std::vector<double> hidden(cfg.d_ff);
    for (std::size_t l = 0; l < cfg.n_layers; ++l) {
        const LayerWeights& lw = weights.layers[l];
        Matrix normed_all(m, d);
        for (std::size_t i = 0; i < m; ++i) {
            layer_norm(states.row(i), lw.ln1_gain, lw.ln1_bias, cfg.layer_norm_eps,
                       normed_all.row(i));
        }
        Matrix q_all = matmul(normed_all, lw.wq);
        cache[l].keys = matmul(normed_all, lw.wk);
        cache[l].values = matmul(normed_all, lw.wv);

        for (std::size_t i = 0; i < m; ++i) {
            attend(cfg, q_all.row(i), cache[l].keys, cache[l].values, attn_out);
            vecmat(attn_out, lw.wo, proj);
            auto sr = states.row(i);
            for (std::size_t j = 0; j < d; ++j) sr[j] += proj[j];
        }
        for (std::size_t i = 0; i < m; ++i) {
            auto sr = states.row(i);
            layer_norm(sr, lw.ln2_gain, lw.ln2_bias, cfg.layer_norm_eps, normed);
            vecmat(normed, lw.ff_w1, hidden);
            for (std::size_t j = 0; j < cfg.d_ff; ++j) hidden[j] = gelu(hidden[j] + lw.ff_b1[j]);
            vecmat(hidden, lw.ff_w2, tmp);
            for (std::size_t j = 0; j < d; ++j) sr[j] += tmp[j] + lw.ff_b2[j];
        }
    }

    // Query pass: each query token sees the cached context keys/values plus
    // its own key/value, so row i is a function of query row i alone.
    Matrix out(setup.query_tokens.rows(), d);
    std::vector<double> qv(d), k_own(d), v_own(d), state(d);
    std::vector<double> mixed(d);
    for (std::size_t qi = 0; qi < setup.query_tokens.rows(); ++qi) {
        const auto token = setup.query_tokens.row(qi);
        state.assign(token.begin(), token.end());
        for (std::size_t l = 0; l < cfg.n_layers; ++l) {
            const LayerWeights& lw = weights.layers[l];
            layer_norm(state, lw.ln1_gain, lw.ln1_bias, cfg.layer_norm_eps, normed);
            vecmat(normed, lw.wq, qv);
            vecmat(normed, lw.wk, k_own);
            vecmat(normed, lw.wv, v_own);

            Matrix keys(m + 1, d), values(m + 1, d);
            for (std::size_t t = 0; t < m; ++t) {
                keys.set_row(t, cache[l].keys.row(t));
                values.set_row(t, cache[l].values.row(t));
            }
            keys.set_row(m, k_own);
            values.set_row(m, v_own);

            attend(cfg, qv, keys, values, mixed);
            vecmat(mixed, lw.wo, proj);
            for (std::size_t j = 0; j < d; ++j) state[j] += proj[j];

            layer_norm(state, lw.ln2_gain, lw.ln2_bias, cfg.layer_norm_eps, normed);
            vecmat(normed, lw.ff_w1, hidden);
            for (std::size_t j = 0; j < cfg.d_ff; ++j) hidden[j] = gelu(hidden[j] + lw.ff_b1[j]);
            vecmat(hidden, lw.ff_w2, tmp);
            for (std::size_t j = 0; j < d; ++j) state[j] += tmp[j] + lw.ff_b2[j];
        }
        out.set_row(qi, state);
    }
    return out;
}

TransformerEncoder::TransformerEncoder(EncoderConfig cfg, EncoderWeights weights,
                                       bool fold_labels)
    : cfg_(cfg), weights_(std::move(weights)), fold_labels_(fold_labels) {
    cfg_.validate();
    weights_.validate_shapes(cfg_);
}

Matrix centroid_embed(const Context& ctx, const Matrix& queries, std::size_t c_total) {
    if (ctx.features.rows() == 0) throw EmptyContext("centroid_embed: context has no rows");
    if (ctx.labels.size() != ctx.features.rows()) {
        throw ShapeError("centroid_embed: context labels and features disagree");
    }
    if (queries.rows() > 0 && queries.cols() != ctx.features.cols()) {
        throw ShapeError("centroid_embed: query feature width differs from context");
    }
    for (const int y : ctx.labels) {
        if (y < 0) throw ShapeError("centroid_embed: negative context label");
        if (static_cast<std::size_t>(y) >= c_total) {
            throw TooManyClasses("centroid_embed: context label exceeds c_total");
        }
    }

    constexpr double kAbsentClass = -1e6;
    auto standardized = standardize_fit_apply(ctx.features, {queries});
    const Matrix& ctx_std = standardized.train;
    const Matrix& query_std = standardized.others[0];
    const std::size_t d = ctx_std.cols();

    Matrix centroids(c_total, d);
    std::vector<std::size_t> counts(c_total, 0);
    for (std::size_t i = 0; i < ctx_std.rows(); ++i) {
        const auto cls = static_cast<std::size_t>(ctx.labels[i]);
        counts[cls] += 1;
        auto cr = centroids.row(cls);
        const auto xr = ctx_std.row(i);
        for (std::size_t j = 0; j < d; ++j) cr[j] += xr[j];
    }
    for (std::size_t c = 0; c < c_total; ++c) {
        if (counts[c] == 0) continue;
        auto cr = centroids.row(c);
        for (std::size_t j = 0; j < d; ++j) cr[j] /= static_cast<double>(counts[c]);
    }

    Matrix out(query_std.rows(), c_total);
    for (std::size_t i = 0; i < query_std.rows(); ++i) {
        const auto xr = query_std.row(i);
        for (std::size_t c = 0; c < c_total; ++c) {
            if (counts[c] == 0) {
                out(i, c) = kAbsentClass;
                continue;
            }
            const auto cr = centroids.row(c);
            double sq = 0.0;
            for (std::size_t j = 0; j < d; ++j) {
                const double diff = xr[j] - cr[j];
                sq += diff * diff;
            }
            out(i, c) = -std::sqrt(sq);
        }
    }
    return out;
}

EncoderWeights generate_synthetic_weights(const EncoderConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    Rng rng(seed);

    auto fill_matrix = [&](std::size_t rows, std::size_t cols, std::size_t fan_in) {
        Matrix m(rows, cols);
        const double std_dev = 1.0 / std::sqrt(static_cast<double>(fan_in));
        for (double& v : m.data()) v = rng.next_normal() * std_dev;
        return m;
    };
    auto fill_vector = [&](std::size_t n) {
        std::vector<double> v(n);
        const double std_dev = 1.0 / std::sqrt(static_cast<double>(n));
        for (double& x : v) x = rng.next_normal() * std_dev;
        return v;
    };

    EncoderWeights w;
    w.input_projection = fill_matrix(cfg.f_max, cfg.d_model, cfg.f_max);
    w.label_embedding = fill_matrix(cfg.c_max, cfg.d_model, cfg.c_max);
    w.layers.resize(cfg.n_layers);
    for (auto& l : w.layers) {
        l.wq = fill_matrix(cfg.d_model, cfg.d_model, cfg.d_model);
        l.wk = fill_matrix(cfg.d_model, cfg.d_model, cfg.d_model);
        l.wv = fill_matrix(cfg.d_model, cfg.d_model, cfg.d_model);
        l.wo = fill_matrix(cfg.d_model, cfg.d_model, cfg.d_model);
        l.ln1_gain = fill_vector(cfg.d_model);
        l.ln1_bias = fill_vector(cfg.d_model);
        l.ln2_gain = fill_vector(cfg.d_model);
        l.ln2_bias = fill_vector(cfg.d_model);
        l.ff_w1 = fill_matrix(cfg.d_model, cfg.d_ff, cfg.d_model);
        l.ff_b1 = fill_vector(cfg.d_ff);
        l.ff_w2 = fill_matrix(cfg.d_ff, cfg.d_model, cfg.d_ff);
        l.ff_b2 = fill_vector(cfg.d_model);
    }
    return w;
}

} // namespace tabmda
