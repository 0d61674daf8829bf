#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "posterlab/autograd.hpp"
#include "posterlab/tensor.hpp"

namespace posterlab::nn {

using ag::Param;
using ag::Var;

// Named parameter registry. Models register every Param once; the registry
// drives zero_grad, Adam steps, checkpointing and finite-difference probes.
class ParamRegistry {
public:
    void add(const std::string& name, Param* p);
    const std::vector<std::pair<std::string, Param*>>& entries() const { return entries_; }
    Param* find(const std::string& name) const;

    void zero_grad();
    int64_t param_count() const;
    double grad_sq_norm() const;
    void clip_grad_norm(double max_norm);
    void copy_values_from(const ParamRegistry& other);  // shapes must match

private:
    std::vector<std::pair<std::string, Param*>> entries_;
};

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double grad_clip = 1.0;  // global norm; <= 0 disables
};

class Adam {
public:
    explicit Adam(AdamConfig cfg) : cfg_(cfg) {}
    void step(ParamRegistry& params);
    int64_t steps_taken() const { return t_; }
    const AdamConfig& config() const { return cfg_; }
    void set_lr(double lr) { cfg_.lr = lr; }

private:
    AdamConfig cfg_;
    int64_t t_ = 0;
};

struct Linear {
    Param weight;  // in x out
    Param bias;    // 1 x out

    Linear() = default;
    Linear(int in, int out, std::mt19937_64& rng, double init_scale, bool zero_init = false);
    Var forward(const Var& x) const;
    void register_into(ParamRegistry& reg, const std::string& prefix);
};

struct LayerNorm {
    Param gamma;  // 1 x dim
    Param beta;   // 1 x dim

    LayerNorm() = default;
    explicit LayerNorm(int dim);
    Var forward(const Var& x) const;
    void register_into(ParamRegistry& reg, const std::string& prefix);
};

struct Embedding {
    Param table;  // count x dim

    Embedding() = default;
    Embedding(int count, int dim, std::mt19937_64& rng, double init_scale);
    Var forward(const std::vector<int>& ids) const;
    void register_into(ParamRegistry& reg, const std::string& prefix);
};

// Sinusoidal features of a scalar in [0,1]; returned as a 1 x dim constant.
Tensor timestep_features(double t, int dim);

// Checkpoint blob: magic, version, JSON config header, named f64 tensors.
void save_checkpoint(const std::string& path, const std::string& config_json, const ParamRegistry& params);
// Returns the embedded config JSON; tensor values are loaded into `params`
// (every registered name must be present with matching shape).
std::string load_checkpoint(const std::string& path, ParamRegistry& params);
// Reads only the embedded config JSON.
std::string read_checkpoint_config(const std::string& path);

}  // namespace posterlab::nn
