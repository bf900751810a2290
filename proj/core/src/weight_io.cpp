#include "tabmda/weight_io.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <functional>
#include <map>
#include <vector>

#include <json.hpp>

#include "tabmda/errors.hpp"

namespace tabmda {

namespace {

constexpr char kMagic[4] = {'P', 'F', 'N', 'W'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_f64(std::string& out, double d) {
    put_u64(out, std::bit_cast<std::uint64_t>(d));
}

class Reader {
public:
    explicit Reader(const std::string& buf) : buf_(buf) {}

    bool has(std::size_t n) const { return pos_ + n <= buf_.size(); }
    std::size_t remaining() const { return buf_.size() - pos_; }

    std::uint32_t u32() {
        require(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) {
            v |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf_[pos_ + i])) << (8 * i);
        }
        pos_ += 4;
        return v;
    }

    std::uint64_t u64() {
        require(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) {
            v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf_[pos_ + i])) << (8 * i);
        }
        pos_ += 8;
        return v;
    }

    double f64() { return std::bit_cast<double>(u64()); }

    std::string bytes(std::size_t n) {
        require(n);
        std::string s = buf_.substr(pos_, n);
        pos_ += n;
        return s;
    }

private:
    void require(std::size_t n) const {
        if (!has(n)) throw CorruptWeights("weight file: truncated payload");
    }

    const std::string& buf_;
    std::size_t pos_ = 0;
};

struct TensorRef {
    std::string name;
    std::vector<std::size_t> shape;
    std::function<double*()> data;
    std::function<std::size_t()> count;
};

/// Canonical manifest order; save writes it and load expects exactly it.
std::vector<TensorRef> tensor_manifest(EncoderWeights& w, const EncoderConfig& cfg) {
    std::vector<TensorRef> refs;
    auto add_matrix = [&](const std::string& name, Matrix& m) {
        refs.push_back({name,
                        {m.rows(), m.cols()},
                        [&m] { return m.data().data(); },
                        [&m] { return m.data().size(); }});
    };
    auto add_vector = [&](const std::string& name, std::vector<double>& v) {
        refs.push_back({name, {v.size()}, [&v] { return v.data(); }, [&v] { return v.size(); }});
    };
    add_matrix("input_projection", w.input_projection);
    add_matrix("label_embedding", w.label_embedding);
    for (std::size_t l = 0; l < cfg.n_layers; ++l) {
        const std::string p = "layers." + std::to_string(l) + ".";
        add_matrix(p + "wq", w.layers[l].wq);
        add_matrix(p + "wk", w.layers[l].wk);
        add_matrix(p + "wv", w.layers[l].wv);
        add_matrix(p + "wo", w.layers[l].wo);
        add_vector(p + "ln1_gain", w.layers[l].ln1_gain);
        add_vector(p + "ln1_bias", w.layers[l].ln1_bias);
        add_vector(p + "ln2_gain", w.layers[l].ln2_gain);
        add_vector(p + "ln2_bias", w.layers[l].ln2_bias);
        add_matrix(p + "ff_w1", w.layers[l].ff_w1);
        add_vector(p + "ff_b1", w.layers[l].ff_b1);
        add_matrix(p + "ff_w2", w.layers[l].ff_w2);
        add_vector(p + "ff_b2", w.layers[l].ff_b2);
    }
    return refs;
}

/// Tensor shapes implied by the config, keyed by canonical name.
std::map<std::string, std::vector<std::size_t>> expected_shapes(const EncoderConfig& cfg) {
    std::map<std::string, std::vector<std::size_t>> shapes;
    shapes["input_projection"] = {cfg.f_max, cfg.d_model};
    shapes["label_embedding"] = {cfg.c_max, cfg.d_model};
    for (std::size_t l = 0; l < cfg.n_layers; ++l) {
        const std::string p = "layers." + std::to_string(l) + ".";
        shapes[p + "wq"] = {cfg.d_model, cfg.d_model};
        shapes[p + "wk"] = {cfg.d_model, cfg.d_model};
        shapes[p + "wv"] = {cfg.d_model, cfg.d_model};
        shapes[p + "wo"] = {cfg.d_model, cfg.d_model};
        shapes[p + "ln1_gain"] = {cfg.d_model};
        shapes[p + "ln1_bias"] = {cfg.d_model};
        shapes[p + "ln2_gain"] = {cfg.d_model};
        shapes[p + "ln2_bias"] = {cfg.d_model};
        shapes[p + "ff_w1"] = {cfg.d_model, cfg.d_ff};
        shapes[p + "ff_b1"] = {cfg.d_ff};
        shapes[p + "ff_w2"] = {cfg.d_ff, cfg.d_model};
        shapes[p + "ff_b2"] = {cfg.d_model};
    }
    return shapes;
}

} // namespace

void save_weights(const EncoderConfig& cfg, const EncoderWeights& weights,
                  const std::string& path) {
    cfg.validate();
    weights.validate_shapes(cfg);

    auto& mutable_weights = const_cast<EncoderWeights&>(weights);
    auto refs = tensor_manifest(mutable_weights, cfg);

    nlohmann::json header;
    header["config"] = {{"f_max", cfg.f_max},       {"d_model", cfg.d_model},
                        {"n_layers", cfg.n_layers}, {"n_heads", cfg.n_heads},
                        {"d_ff", cfg.d_ff},         {"c_max", cfg.c_max},
                        {"layer_norm_eps", cfg.layer_norm_eps}};
    nlohmann::json manifest = nlohmann::json::array();
    for (const auto& ref : refs) {
        manifest.push_back({{"name", ref.name}, {"shape", ref.shape}});
    }
    header["tensors"] = manifest;
    const std::string header_text = header.dump();

    std::string out;
    out.append(kMagic, 4);
    put_u32(out, kVersion);
    put_u32(out, static_cast<std::uint32_t>(header_text.size()));
    out += header_text;
    std::uint64_t payload_bytes = 0;
    for (const auto& ref : refs) {
        const double* data = ref.data();
        const std::size_t count = ref.count();
        for (std::size_t i = 0; i < count; ++i) put_f64(out, data[i]);
        payload_bytes += count * sizeof(double);
    }
    put_u64(out, payload_bytes);

    std::ofstream file(path, std::ios::binary | std::ios::trunc);
    if (!file) throw RuntimeError("weight file: cannot open for writing: " + path);
    file.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!file) throw RuntimeError("weight file: write failed: " + path);
}

std::pair<EncoderConfig, EncoderWeights> load_weights(const std::string& path) {
    std::ifstream file(path, std::ios::binary);
    if (!file) throw RuntimeError("weight file: cannot open: " + path);
    std::string buf((std::istreambuf_iterator<char>(file)), std::istreambuf_iterator<char>());

    Reader reader(buf);
    if (!reader.has(4) || reader.bytes(4) != std::string(kMagic, 4)) {
        throw NotAWeightFile("weight file: bad magic bytes");
    }
    const std::uint32_t version = reader.u32();
    if (version != kVersion) {
        throw VersionError("weight file: unsupported version " + std::to_string(version));
    }
    const std::uint32_t header_len = reader.u32();
    if (!reader.has(header_len)) throw CorruptWeights("weight file: truncated header");
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(reader.bytes(header_len));
    } catch (const nlohmann::json::exception&) {
        throw CorruptWeights("weight file: header is not valid JSON");
    }

    EncoderConfig cfg;
    EncoderWeights weights;
    try {
        const auto& c = header.at("config");
        cfg.f_max = c.at("f_max").get<std::size_t>();
        cfg.d_model = c.at("d_model").get<std::size_t>();
        cfg.n_layers = c.at("n_layers").get<std::size_t>();
        cfg.n_heads = c.at("n_heads").get<std::size_t>();
        cfg.d_ff = c.at("d_ff").get<std::size_t>();
        cfg.c_max = c.at("c_max").get<std::size_t>();
        cfg.layer_norm_eps = c.at("layer_norm_eps").get<double>();
    } catch (const nlohmann::json::exception&) {
        throw CorruptWeights("weight file: incomplete config header");
    }
    try {
        cfg.validate();
    } catch (const ConfigError& e) {
        throw CorruptWeights(std::string("weight file: invalid config: ") + e.what());
    }

    // Allocate per config, then fill through the canonical manifest.
    weights.input_projection = Matrix(cfg.f_max, cfg.d_model);
    weights.label_embedding = Matrix(cfg.c_max, cfg.d_model);
    weights.layers.resize(cfg.n_layers);
    for (auto& l : weights.layers) {
        l.wq = l.wk = l.wv = l.wo = Matrix(cfg.d_model, cfg.d_model);
        l.ln1_gain.resize(cfg.d_model);
        l.ln1_bias.resize(cfg.d_model);
        l.ln2_gain.resize(cfg.d_model);
        l.ln2_bias.resize(cfg.d_model);
        l.ff_w1 = Matrix(cfg.d_model, cfg.d_ff);
        l.ff_b1.resize(cfg.d_ff);
        l.ff_w2 = Matrix(cfg.d_ff, cfg.d_model);
        l.ff_b2.resize(cfg.d_model);
    }
    auto refs = tensor_manifest(weights, cfg);
    auto shapes = expected_shapes(cfg);

    if (!header.contains("tensors") || !header["tensors"].is_array() ||
        header["tensors"].size() != refs.size()) {
        throw CorruptWeights("weight file: tensor manifest does not match config");
    }
    std::uint64_t declared_payload = 0;
    for (std::size_t i = 0; i < refs.size(); ++i) {
        const auto& entry = header["tensors"][i];
        std::string name;
        std::vector<std::size_t> shape;
        try {
            name = entry.at("name").get<std::string>();
            shape = entry.at("shape").get<std::vector<std::size_t>>();
        } catch (const nlohmann::json::exception&) {
            throw CorruptWeights("weight file: malformed manifest entry");
        }
        if (name != refs[i].name || shapes.at(refs[i].name) != shape) {
            throw CorruptWeights("weight file: manifest entry '" + name +
                                 "' disagrees with config");
        }
        std::size_t count = 1;
        for (const std::size_t s : shape) count *= s;
        declared_payload += count * sizeof(double);
    }

    const std::size_t body_and_trailer = reader.remaining();
    if (body_and_trailer != declared_payload + sizeof(std::uint64_t)) {
        throw CorruptWeights("weight file: declared sizes disagree with payload length");
    }
    for (auto& ref : refs) {
        double* data = ref.data();
        const std::size_t count = ref.count();
        for (std::size_t i = 0; i < count; ++i) {
            data[i] = reader.f64();
            if (!std::isfinite(data[i])) {
                throw CorruptWeights("weight file: non-finite value in " + ref.name);
            }
        }
    }
    const std::uint64_t trailer = reader.u64();
    if (trailer != declared_payload) {
        throw CorruptWeights("weight file: trailing byte count mismatch");
    }
    return {cfg, std::move(weights)};
}

} // namespace tabmda
