#include "posterlab/nn.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "posterlab/common.hpp"

namespace posterlab::nn {

void ParamRegistry::add(const std::string& name, Param* p) {
    for (const auto& [n, _] : entries_)
        require(n != name, ErrorKind::InvalidInput, "duplicate param name: " + name);
    entries_.push_back({name, p});
}

Param* ParamRegistry::find(const std::string& name) const {
    for (const auto& [n, p] : entries_)
        if (n == name) return p;
    return nullptr;
}

void ParamRegistry::zero_grad() {
    for (auto& [_, p] : entries_) p->zero_grad();
}

int64_t ParamRegistry::param_count() const {
    int64_t n = 0;
    for (const auto& [_, p] : entries_) n += p->value.size();
    return n;
}

double ParamRegistry::grad_sq_norm() const {
    double s = 0.0;
    for (const auto& [_, p] : entries_) s += p->grad.sq_norm();
    return s;
}

void ParamRegistry::clip_grad_norm(double max_norm) {
    double norm = std::sqrt(grad_sq_norm());
    if (norm <= max_norm || norm == 0.0) return;
    double scale = max_norm / norm;
    for (auto& [_, p] : entries_) {
        for (int64_t i = 0; i < p->grad.size(); ++i) p->grad[i] *= scale;
    }
}

void ParamRegistry::copy_values_from(const ParamRegistry& other) {
    require(entries_.size() == other.entries_.size(), ErrorKind::InvalidInput, "registry size mismatch");
    for (size_t i = 0; i < entries_.size(); ++i) {
        Param* dst = entries_[i].second;
        const Param* src = other.entries_[i].second;
        require(dst->value.same_shape(src->value), ErrorKind::InvalidInput, "param shape mismatch in copy");
        std::copy(src->value.data(), src->value.data() + src->value.size(), dst->value.data());
    }
}

void Adam::step(ParamRegistry& params) {
    if (cfg_.grad_clip > 0) params.clip_grad_norm(cfg_.grad_clip);
    ++t_;
    double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (auto& [name, p] : params.entries()) {
        for (int64_t i = 0; i < p->value.size(); ++i) {
            double g = p->grad[i];
            require(std::isfinite(g), ErrorKind::Numeric, "non-finite gradient in " + name);
            p->adam_m[i] = cfg_.beta1 * p->adam_m[i] + (1.0 - cfg_.beta1) * g;
            p->adam_v[i] = cfg_.beta2 * p->adam_v[i] + (1.0 - cfg_.beta2) * g * g;
            double mhat = p->adam_m[i] / bc1;
            double vhat = p->adam_v[i] / bc2;
            p->value[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
        }
    }
}

Linear::Linear(int in, int out, std::mt19937_64& rng, double init_scale, bool zero_init) {
    if (zero_init) {
        weight = Param(Tensor::zeros(in, out));
    } else {
        weight = Param(Tensor::randn(in, out, rng, init_scale / std::sqrt(static_cast<double>(in))));
    }
    bias = Param(Tensor::zeros(1, out));
}

Var Linear::forward(const Var& x) const {
    auto& self = const_cast<Linear&>(*this);
    return ag::add_rowvec(ag::matmul(x, ag::param_leaf(self.weight)), ag::param_leaf(self.bias));
}

void Linear::register_into(ParamRegistry& reg, const std::string& prefix) {
    reg.add(prefix + ".weight", &weight);
    reg.add(prefix + ".bias", &bias);
}

LayerNorm::LayerNorm(int dim) {
    gamma = Param(Tensor::full(1, dim, 1.0));
    beta = Param(Tensor::zeros(1, dim));
}

Var LayerNorm::forward(const Var& x) const {
    auto& self = const_cast<LayerNorm&>(*this);
    return ag::layer_norm_rows(x, ag::param_leaf(self.gamma), ag::param_leaf(self.beta));
}

void LayerNorm::register_into(ParamRegistry& reg, const std::string& prefix) {
    reg.add(prefix + ".gamma", &gamma);
    reg.add(prefix + ".beta", &beta);
}

Embedding::Embedding(int count, int dim, std::mt19937_64& rng, double init_scale) {
    table = Param(Tensor::randn(count, dim, rng, init_scale));
}

Var Embedding::forward(const std::vector<int>& ids) const {
    auto& self = const_cast<Embedding&>(*this);
    return ag::gather_rows(ag::param_leaf(self.table), ids);
}

void Embedding::register_into(ParamRegistry& reg, const std::string& prefix) {
    reg.add(prefix + ".table", &table);
}

Tensor timestep_features(double t, int dim) {
    Tensor out(1, dim);
    int half = dim / 2;
    for (int i = 0; i < half; ++i) {
        double freq = std::pow(1000.0, static_cast<double>(i) / half);
        out[2 * i] = std::sin(t * freq);
        out[2 * i + 1] = std::cos(t * freq);
    }
    if (dim % 2 == 1) out[dim - 1] = t;
    return out;
}

namespace {

constexpr char kMagic[4] = {'P', 'L', 'B', 'K'};
constexpr uint32_t kVersion = 1;

template <typename T>
void write_pod(std::ofstream& f, const T& v) {
    f.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& f) {
    T v{};
    f.read(reinterpret_cast<char*>(&v), sizeof(T));
    require(bool(f), ErrorKind::Io, "truncated checkpoint");
    return v;
}

}  // namespace

void save_checkpoint(const std::string& path, const std::string& config_json, const ParamRegistry& params) {
    std::ofstream f(path, std::ios::binary);
    require(bool(f), ErrorKind::Io, "cannot write checkpoint: " + path);
    f.write(kMagic, 4);
    write_pod(f, kVersion);
    write_pod(f, static_cast<uint64_t>(config_json.size()));
    f.write(config_json.data(), static_cast<std::streamsize>(config_json.size()));
    write_pod(f, static_cast<uint64_t>(params.entries().size()));
    for (const auto& [name, p] : params.entries()) {
        write_pod(f, static_cast<uint32_t>(name.size()));
        f.write(name.data(), static_cast<std::streamsize>(name.size()));
        write_pod(f, static_cast<int32_t>(p->value.rows()));
        write_pod(f, static_cast<int32_t>(p->value.cols()));
        f.write(reinterpret_cast<const char*>(p->value.data()),
                static_cast<std::streamsize>(p->value.size() * sizeof(double)));
    }
    require(bool(f), ErrorKind::Io, "failed writing checkpoint: " + path);
}

namespace {

std::string read_header(std::ifstream& f, const std::string& path) {
    char magic[4];
    f.read(magic, 4);
    require(bool(f) && std::memcmp(magic, kMagic, 4) == 0, ErrorKind::Io, "bad checkpoint magic: " + path);
    uint32_t version = read_pod<uint32_t>(f);
    require(version == kVersion, ErrorKind::Io, "unsupported checkpoint version");
    uint64_t json_len = read_pod<uint64_t>(f);
    std::string config(json_len, '\0');
    f.read(config.data(), static_cast<std::streamsize>(json_len));
    require(bool(f), ErrorKind::Io, "truncated checkpoint header");
    return config;
}

}  // namespace

std::string load_checkpoint(const std::string& path, ParamRegistry& params) {
    std::ifstream f(path, std::ios::binary);
    require(bool(f), ErrorKind::Io, "cannot read checkpoint: " + path);
    std::string config = read_header(f, path);
    uint64_t count = read_pod<uint64_t>(f);
    size_t loaded = 0;
    for (uint64_t i = 0; i < count; ++i) {
        uint32_t name_len = read_pod<uint32_t>(f);
        std::string name(name_len, '\0');
        f.read(name.data(), name_len);
        int32_t rows = read_pod<int32_t>(f);
        int32_t cols = read_pod<int32_t>(f);
        Param* p = params.find(name);
        require(p != nullptr, ErrorKind::Io, "checkpoint tensor not in model: " + name);
        require(p->value.rows() == rows && p->value.cols() == cols, ErrorKind::Io,
                "checkpoint shape mismatch for " + name);
        f.read(reinterpret_cast<char*>(p->value.data()),
               static_cast<std::streamsize>(p->value.size() * sizeof(double)));
        require(bool(f), ErrorKind::Io, "truncated checkpoint tensor: " + name);
        ++loaded;
    }
    require(loaded == params.entries().size(), ErrorKind::Io, "checkpoint missing tensors");
    return config;
}

std::string read_checkpoint_config(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    require(bool(f), ErrorKind::Io, "cannot read checkpoint: " + path);
    return read_header(f, path);
}

}  // namespace posterlab::nn
