#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "posterlab/design.hpp"
#include "posterlab/nn.hpp"

namespace posterlab {

// ---------------------------------------------------------------------------
// Autoregressive design policy: a small decoder-only transformer over the
// design token vocabulary, conditioned on a product embedding and the
// instruction built from the candidate texts. Emits background, selection and
// layout jointly; decoding is grammar-constrained.
// ---------------------------------------------------------------------------

struct DesignPolicyConfig {
    int n_products = 64;
    int d_model = 64;
    int n_layers = 2;
    int n_heads = 4;
    int d_ff = 256;
    int max_seq = 160;
    uint64_t seed = 1;
    bool zero_init_head = true;

    std::string to_json() const;
    static DesignPolicyConfig from_json(const std::string& json);
};

struct DecodeConfig {
    enum class Mode { Greedy, Temperature };
    Mode mode = Mode::Greedy;
    double temperature = 1.0;
    uint64_t seed = 0;
    int max_len = 64;
    int retry_budget = 8;
};

struct TrainDesignConfig {
    int epochs = 4;
    int batch_size = 16;
    double lr = 3e-3;
    double val_fraction = 0.1;
    uint64_t seed = 7;
    int log_every = 50;
    bool verbose = false;
};

struct DesignExample {
    int64_t product_id = 0;
    CandidateTextSet candidates;
    Design design;
};

struct TrainCurvePoint {
    int epoch = 0;
    double train_loss = 0.0;  // mean nats/token over the epoch
    double val_loss = 0.0;
};

struct TrainDesignReport {
    std::vector<TrainCurvePoint> curve;
    double initial_val_loss = 0.0;
    int64_t steps = 0;
};

class DesignPolicy {
public:
    explicit DesignPolicy(const DesignPolicyConfig& cfg);

    const DesignPolicyConfig& config() const { return cfg_; }
    nn::ParamRegistry& params() { return params_; }
    const nn::ParamRegistry& params() const { return params_; }

    // Deep copy (used to freeze a reference policy).
    std::unique_ptr<DesignPolicy> clone() const;

    // Teacher-forced per-token log-probabilities of the serialized design.
    std::vector<double> design_logprobs(int64_t product_id, const InstructionText& instr,
                                        const SerializedDesign& s) const;
    // Single-pass sequence log-likelihood (sum over design tokens).
    double sequence_loglik(int64_t product_id, const InstructionText& instr, const SerializedDesign& s) const;

    // Graph-building variant for training: returns an n x 1 Var of per-token
    // log-probabilities (gradients flow into this policy's parameters).
    ag::Var design_logprob_vars(int64_t product_id, const InstructionText& instr, const SerializedDesign& s);

    Design sample_design(int64_t product_id, const InstructionText& instr, const DecodeConfig& decode) const;

    // Mean cross-entropy (nats/token) over a batch of examples, on-graph.
    ag::Var batch_cross_entropy(const std::vector<const DesignExample*>& batch);
    double eval_cross_entropy(const std::vector<DesignExample>& examples) const;

    void save(const std::string& path) const;
    static std::unique_ptr<DesignPolicy> load(const std::string& path);

private:
    struct Block {
        nn::LayerNorm ln1;
        nn::Linear wq, wk, wv, wo;
        nn::LayerNorm ln2;
        nn::Linear fc1, fc2;
    };

    // Full forward: embeds [product, BOS, instruction, design prefix] and
    // returns logits for every position.
    ag::Var forward_logits(int64_t product_id, const InstructionText& instr,
                           const std::vector<TokenId>& design_tokens, bool with_grad) const;

    DesignPolicyConfig cfg_;
    nn::ParamRegistry params_;
    nn::Embedding tok_emb_;
    nn::Embedding prod_emb_;
    nn::Embedding pos_emb_;
    std::vector<Block> blocks_;
    nn::LayerNorm ln_f_;
    nn::Linear head_;
};

TrainDesignReport train_design(DesignPolicy& policy, const std::vector<DesignExample>& dataset,
                               const TrainDesignConfig& cfg);

// Grammar mask used by constrained decoding; exposed for tests.
class DesignGrammar {
public:
    explicit DesignGrammar(int num_candidates);
    // Allowed next tokens given the emitted prefix so far.
    std::vector<TokenId> allowed_next() const;
    void advance(TokenId token);
    bool accepted() const { return state_ == State::Done; }

private:
    enum class State {
        BgMark, Color, Texture, TxtMark, FirstSel, MoreSelOrLay,
        BoxType, CoordX0, CoordY0, CoordX1, CoordY1, Done
    };
    State state_ = State::BgMark;
    int num_candidates_;
    int last_sel_ = -1;
    int num_sel_ = 0;
    int boxes_emitted_ = 0;   // product box first, then one text box per selection
    int cur_x0_ = 0, cur_y0_ = 0;
};

}  // namespace posterlab
