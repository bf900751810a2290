#pragma once

#include <cstdint>
#include <vector>

#include "tabmda/matrix.hpp"

namespace tabmda {

/// Architecture of the reference in-context transformer encoder.
struct EncoderConfig {
    std::size_t f_max = 100;   // maximum feature count
    std::size_t d_model = 512; // embedding width D'
    std::size_t n_layers = 2;
    std::size_t n_heads = 8;
    std::size_t d_ff = 1024;
    std::size_t c_max = 10;    // maximum number of context classes
    double layer_norm_eps = 1e-5;

    /// Throws ConfigError unless d_model % n_heads == 0, f_max >= 1,
    /// c_max >= 2 and all sizes are positive.
    void validate() const;
};

struct LayerWeights {
    Matrix wq, wk, wv, wo;        // d_model x d_model each
    std::vector<double> ln1_gain, ln1_bias; // d_model
    std::vector<double> ln2_gain, ln2_bias; // d_model
    Matrix ff_w1;                 // d_model x d_ff
    std::vector<double> ff_b1;    // d_ff
    Matrix ff_w2;                 // d_ff x d_model
    std::vector<double> ff_b2;    // d_model

    bool operator==(const LayerWeights&) const = default;
};

struct EncoderWeights {
    Matrix input_projection; // f_max x d_model
    Matrix label_embedding;  // c_max x d_model
    std::vector<LayerWeights> layers;

    bool operator==(const EncoderWeights&) const = default;

    /// Throws ShapeError if any tensor disagrees with cfg.
    void validate_shapes(const EncoderConfig& cfg) const;
};

/// A labeled sample set presented to the encoder.
struct Context {
    Matrix features;         // M x D
    std::vector<int> labels; // M entries in [0, C)
};

/// Common surface of the transformer and centroid encoders. embed() is pure
/// and reentrant; one instance may serve any number of threads.
class InContextEncoder {
public:
    virtual ~InContextEncoder() = default;

    /// Width D' of the produced embeddings.
    virtual std::size_t embedding_dim() const = 0;

    /// One embedding row per query row. Row i depends only on the context
    /// and query row i, never on other queries.
    virtual Matrix embed(const Context& ctx, const Matrix& queries) const = 0;
};

/// Forward pass of the reference encoder:
///  1. standardize all feature columns with context statistics,
///  2. zero-pad to f_max and scale features by f_max/D,
///  3. project into d_model; context tokens also get label_embedding[y],
///  4. n_layers pre-norm blocks; context tokens attend to all context tokens,
///     each query attends to the context plus itself, never to other queries;
///     no positional encoding,
///  5. return the final-layer query token vectors.
///
/// fold_labels maps context labels to label % c_max instead of rejecting
/// datasets with more than c_max classes (opt-in).
Matrix transformer_embed(const EncoderWeights& weights, const EncoderConfig& cfg,
                         const Context& ctx, const Matrix& queries,
                         bool fold_labels = false);

class TransformerEncoder : public InContextEncoder {
public:
    TransformerEncoder(EncoderConfig cfg, EncoderWeights weights, bool fold_labels = false);

    std::size_t embedding_dim() const override { return cfg_.d_model; }
    Matrix embed(const Context& ctx, const Matrix& queries) const override {
        return transformer_embed(weights_, cfg_, ctx, queries, fold_labels_);
    }

    const EncoderConfig& config() const { return cfg_; }
    const EncoderWeights& weights() const { return weights_; }

private:
    EncoderConfig cfg_;
    EncoderWeights weights_;
    bool fold_labels_;
};

/// Transparent reference encoder over the same interface: entry (i, c) is the
/// negative euclidean distance from query i to the class-c centroid in
/// context-standardized feature space; classes absent from the context get
/// -1e6.
Matrix centroid_embed(const Context& ctx, const Matrix& queries, std::size_t c_total);

class CentroidEncoder : public InContextEncoder {
public:
    explicit CentroidEncoder(std::size_t c_total) : c_total_(c_total) {}

    std::size_t embedding_dim() const override { return c_total_; }
    Matrix embed(const Context& ctx, const Matrix& queries) const override {
        return centroid_embed(ctx, queries, c_total_);
    }

private:
    std::size_t c_total_;
};

/// Seeded stand-in for a pre-trained checkpoint. Every tensor is filled with
/// normal draws of std 1/sqrt(fan_in) in a fixed order, so the same seed
/// reproduces the same weights bit for bit. fan_in is the contraction
/// dimension for 2-D tensors (first dimension) and the length for 1-D ones.
EncoderWeights generate_synthetic_weights(const EncoderConfig& cfg, std::uint64_t seed);

} // namespace tabmda
