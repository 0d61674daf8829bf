#include "posterlab/design_policy.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <nlohmann/json.hpp>

#include "posterlab/rng.hpp"

namespace posterlab {

using ag::Var;
using json = nlohmann::json;

std::string DesignPolicyConfig::to_json() const {
    json j{{"kind", "design_policy"},
           {"n_products", n_products},
           {"d_model", d_model},
           {"n_layers", n_layers},
           {"n_heads", n_heads},
           {"d_ff", d_ff},
           {"max_seq", max_seq},
           {"seed", seed},
           {"zero_init_head", zero_init_head}};
    return j.dump();
}

DesignPolicyConfig DesignPolicyConfig::from_json(const std::string& text) {
    json j = json::parse(text);
    DesignPolicyConfig c;
    c.n_products = j.at("n_products").get<int>();
    c.d_model = j.at("d_model").get<int>();
    c.n_layers = j.at("n_layers").get<int>();
    c.n_heads = j.at("n_heads").get<int>();
    c.d_ff = j.at("d_ff").get<int>();
    c.max_seq = j.at("max_seq").get<int>();
    c.seed = j.at("seed").get<uint64_t>();
    c.zero_init_head = j.at("zero_init_head").get<bool>();
    return c;
}

DesignPolicy::DesignPolicy(const DesignPolicyConfig& cfg) : cfg_(cfg) {
    require(cfg.d_model % cfg.n_heads == 0, ErrorKind::InvalidInput, "d_model must be divisible by n_heads");
    auto rng = make_rng(derive_seed(cfg.seed, "design_policy_init"));
    tok_emb_ = nn::Embedding(vocab::kSize, cfg.d_model, rng, 0.02);
    prod_emb_ = nn::Embedding(cfg.n_products, cfg.d_model, rng, 0.02);
    pos_emb_ = nn::Embedding(cfg.max_seq, cfg.d_model, rng, 0.02);
    blocks_.resize(cfg.n_layers);
    for (auto& b : blocks_) {
        b.ln1 = nn::LayerNorm(cfg.d_model);
        b.wq = nn::Linear(cfg.d_model, cfg.d_model, rng, 1.0);
        b.wk = nn::Linear(cfg.d_model, cfg.d_model, rng, 1.0);
        b.wv = nn::Linear(cfg.d_model, cfg.d_model, rng, 1.0);
        b.wo = nn::Linear(cfg.d_model, cfg.d_model, rng, 1.0);
        b.ln2 = nn::LayerNorm(cfg.d_model);
        b.fc1 = nn::Linear(cfg.d_model, cfg.d_ff, rng, 1.0);
        b.fc2 = nn::Linear(cfg.d_ff, cfg.d_model, rng, 1.0);
    }
    ln_f_ = nn::LayerNorm(cfg.d_model);
    head_ = nn::Linear(cfg.d_model, vocab::kSize, rng, 1.0, cfg.zero_init_head);

    tok_emb_.register_into(params_, "tok_emb");
    prod_emb_.register_into(params_, "prod_emb");
    pos_emb_.register_into(params_, "pos_emb");
    for (int i = 0; i < cfg.n_layers; ++i) {
        auto p = "block" + std::to_string(i);
        blocks_[i].ln1.register_into(params_, p + ".ln1");
        blocks_[i].wq.register_into(params_, p + ".wq");
        blocks_[i].wk.register_into(params_, p + ".wk");
        blocks_[i].wv.register_into(params_, p + ".wv");
        blocks_[i].wo.register_into(params_, p + ".wo");
        blocks_[i].ln2.register_into(params_, p + ".ln2");
        blocks_[i].fc1.register_into(params_, p + ".fc1");
        blocks_[i].fc2.register_into(params_, p + ".fc2");
    }
    ln_f_.register_into(params_, "ln_f");
    head_.register_into(params_, "head");
}

std::unique_ptr<DesignPolicy> DesignPolicy::clone() const {
    auto copy = std::make_unique<DesignPolicy>(cfg_);
    copy->params_.copy_values_from(params_);
    return copy;
}

namespace {

Tensor causal_mask(int n) {
    Tensor m(n, n);
    for (int r = 0; r < n; ++r)
        for (int c = r + 1; c < n; ++c) m.at(r, c) = -1e9;
    return m;
}

}  // namespace

Var DesignPolicy::forward_logits(int64_t product_id, const InstructionText& instr,
                                 const std::vector<TokenId>& design_tokens, bool /*with_grad*/) const {
    require(product_id >= 0 && product_id < cfg_.n_products, ErrorKind::InvalidInput, "product_id out of range");
    for (TokenId t : instr.tokens)
        require(t >= 0 && t < vocab::kSize, ErrorKind::InvalidInput, "instruction token out of vocabulary");
    for (TokenId t : design_tokens)
        require(t >= 0 && t < vocab::kSize, ErrorKind::InvalidInput, "design token out of vocabulary");

    std::vector<int> ids;
    ids.push_back(vocab::kBos);
    ids.insert(ids.end(), instr.tokens.begin(), instr.tokens.end());
    ids.insert(ids.end(), design_tokens.begin(), design_tokens.end());
    int seq = 1 + static_cast<int>(ids.size());
    require(seq <= cfg_.max_seq, ErrorKind::InvalidInput,
            "sequence length " + std::to_string(seq) + " exceeds max_seq");

    auto& self = const_cast<DesignPolicy&>(*this);
    Var toks = self.tok_emb_.forward(ids);
    Var prod = self.prod_emb_.forward({static_cast<int>(product_id)});
    Var x = ag::concat_rows({prod, toks});
    std::vector<int> pos(seq);
    std::iota(pos.begin(), pos.end(), 0);
    x = ag::add(x, self.pos_emb_.forward(pos));

    int dh = cfg_.d_model / cfg_.n_heads;
    double inv_sqrt_dh = 1.0 / std::sqrt(static_cast<double>(dh));
    Var mask = ag::constant(causal_mask(seq));

    for (auto& blk : self.blocks_) {
        Var xn = blk.ln1.forward(x);
        Var q = blk.wq.forward(xn);
        Var k = blk.wk.forward(xn);
        Var v = blk.wv.forward(xn);
        Var wo_leaf = ag::param_leaf(blk.wo.weight);
        Var attn_out;
        for (int h = 0; h < cfg_.n_heads; ++h) {
            Var qh = ag::slice_cols(q, h * dh, dh);
            Var kh = ag::slice_cols(k, h * dh, dh);
            Var vh = ag::slice_cols(v, h * dh, dh);
            Var scores = ag::add(ag::scale(ag::matmul(qh, kh, false, true), inv_sqrt_dh), mask);
            Var probs = ag::softmax_rows(scores);
            Var head = ag::matmul(probs, vh);
            Var proj = ag::matmul(head, ag::slice_rows(wo_leaf, h * dh, dh));
            attn_out = attn_out ? ag::add(attn_out, proj) : proj;
        }
        attn_out = ag::add_rowvec(attn_out, ag::param_leaf(blk.wo.bias));
        x = ag::add(x, attn_out);
        Var xm = blk.ln2.forward(x);
        Var mlp = blk.fc2.forward(ag::gelu(blk.fc1.forward(xm)));
        x = ag::add(x, mlp);
    }
    x = self.ln_f_.forward(x);
    return self.head_.forward(x);
}

std::vector<double> DesignPolicy::design_logprobs(int64_t product_id, const InstructionText& instr,
                                                  const SerializedDesign& s) const {
    require(!s.tokens.empty(), ErrorKind::InvalidInput, "empty design sequence");
    Var logits = forward_logits(product_id, instr, s.tokens, false);
    // Position predicting design token i: prod + BOS + instr occupy the first
    // (2 + |instr|) slots, so the prefix ends at index 1 + |instr|.
    int base = 1 + static_cast<int>(instr.tokens.size());
    Var lsm = ag::log_softmax_rows(logits);
    std::vector<double> out(s.tokens.size());
    for (size_t i = 0; i < s.tokens.size(); ++i) out[i] = lsm->value.at(base + static_cast<int>(i), s.tokens[i]);
    return out;
}

double DesignPolicy::sequence_loglik(int64_t product_id, const InstructionText& instr,
                                     const SerializedDesign& s) const {
    Var logits = forward_logits(product_id, instr, s.tokens, false);
    int base = 1 + static_cast<int>(instr.tokens.size());
    Var lsm = ag::log_softmax_rows(logits);
    double total = 0.0;
    for (size_t i = 0; i < s.tokens.size(); ++i) total += lsm->value.at(base + static_cast<int>(i), s.tokens[i]);
    return total;
}

Var DesignPolicy::design_logprob_vars(int64_t product_id, const InstructionText& instr, const SerializedDesign& s) {
    require(!s.tokens.empty(), ErrorKind::InvalidInput, "empty design sequence");
    Var logits = forward_logits(product_id, instr, s.tokens, true);
    int base = 1 + static_cast<int>(instr.tokens.size());
    Var rows = ag::slice_rows(ag::log_softmax_rows(logits), base, static_cast<int>(s.tokens.size()));
    std::vector<int> cols(s.tokens.begin(), s.tokens.end());
    return ag::select_cols(rows, cols);
}

DesignGrammar::DesignGrammar(int num_candidates) : num_candidates_(num_candidates) {
    require(num_candidates >= 1 && num_candidates <= kMaxCandidates, ErrorKind::InvalidInput,
            "num_candidates out of range");
}

std::vector<TokenId> DesignGrammar::allowed_next() const {
    std::vector<TokenId> out;
    switch (state_) {
        case State::BgMark:
            out.push_back(vocab::kBgMark);
            break;
        case State::Color:
            for (int i = 0; i < kNumColors; ++i) out.push_back(vocab::kColorBase + i);
            break;
        case State::Texture:
            for (int i = 0; i < kNumTextures; ++i) out.push_back(vocab::kTextureBase + i);
            break;
        case State::TxtMark:
            out.push_back(vocab::kTxtMark);
            break;
        case State::FirstSel:
            for (int i = 0; i < num_candidates_; ++i) out.push_back(vocab::kSelBase + i);
            break;
        case State::MoreSelOrLay:
            // Emission order is ascending, so only higher indices remain.
            if (num_sel_ < kMaxSelected)
                for (int i = last_sel_ + 1; i < num_candidates_; ++i) out.push_back(vocab::kSelBase + i);
            out.push_back(vocab::kLayMark);
            break;
        case State::BoxType:
            if (boxes_emitted_ == 0)
                out.push_back(vocab::kBoxProduct);
            else if (boxes_emitted_ <= num_sel_)
                out.push_back(vocab::kBoxText);
            else
                out.push_back(vocab::kEos);
            break;
        case State::CoordX0:
        case State::CoordY0:
            for (int i = 0; i < kCoordBins; ++i) out.push_back(vocab::kCoordBase + i);
            break;
        case State::CoordX1:
            for (int i = cur_x0_; i < kCoordBins; ++i) out.push_back(vocab::kCoordBase + i);
            break;
        case State::CoordY1:
            for (int i = cur_y0_; i < kCoordBins; ++i) out.push_back(vocab::kCoordBase + i);
            break;
        case State::Done:
            break;
    }
    return out;
}

void DesignGrammar::advance(TokenId token) {
    auto allowed = allowed_next();
    require(std::find(allowed.begin(), allowed.end(), token) != allowed.end(), ErrorKind::Parse,
            "token not allowed by grammar: " + vocab::token_name(token));
    switch (state_) {
        case State::BgMark: state_ = State::Color; break;
        case State::Color: state_ = State::Texture; break;
        case State::Texture: state_ = State::TxtMark; break;
        case State::TxtMark: state_ = State::FirstSel; break;
        case State::FirstSel:
            last_sel_ = token - vocab::kSelBase;
            num_sel_ = 1;
            state_ = State::MoreSelOrLay;
            break;
        case State::MoreSelOrLay:
            if (token == vocab::kLayMark) {
                state_ = State::BoxType;
            } else {
                last_sel_ = token - vocab::kSelBase;
                ++num_sel_;
            }
            break;
        case State::BoxType:
            if (token == vocab::kEos)
                state_ = State::Done;
            else {
                ++boxes_emitted_;
                state_ = State::CoordX0;
            }
            break;
        case State::CoordX0:
            cur_x0_ = token - vocab::kCoordBase;
            state_ = State::CoordY0;
            break;
        case State::CoordY0:
            cur_y0_ = token - vocab::kCoordBase;
            state_ = State::CoordX1;
            break;
        case State::CoordX1: state_ = State::CoordY1; break;
        case State::CoordY1: state_ = State::BoxType; break;
        case State::Done:
            fail(ErrorKind::Parse, "grammar already accepted");
    }
}

Design DesignPolicy::sample_design(int64_t product_id, const InstructionText& instr,
                                   const DecodeConfig& decode) const {
    auto candidates = instruction_candidates(instr);
    int num_candidates = static_cast<int>(candidates.size());
    std::vector<TokenId> last_attempt;
    for (int attempt = 0; attempt < std::max(1, decode.retry_budget); ++attempt) {
        auto rng = make_rng(derive_seed(decode.seed, "sample_design", static_cast<uint64_t>(attempt)));
        DesignGrammar grammar(num_candidates);
        std::vector<TokenId> emitted;
        while (!grammar.accepted() && static_cast<int>(emitted.size()) < decode.max_len) {
            Var logits = forward_logits(product_id, instr, emitted, false);
            int row = logits->value.rows() - 1;
            auto allowed = grammar.allowed_next();
            TokenId chosen;
            if (decode.mode == DecodeConfig::Mode::Greedy) {
                chosen = allowed[0];
                double best = logits->value.at(row, allowed[0]);
                for (TokenId t : allowed) {
                    double v = logits->value.at(row, t);
                    if (v > best) {
                        best = v;
                        chosen = t;
                    }
                }
            } else {
                require(decode.temperature > 0, ErrorKind::InvalidInput, "temperature must be positive");
                double mx = -1e300;
                for (TokenId t : allowed) mx = std::max(mx, logits->value.at(row, t));
                std::vector<double> w(allowed.size());
                double z = 0.0;
                for (size_t i = 0; i < allowed.size(); ++i) {
                    w[i] = std::exp((logits->value.at(row, allowed[i]) - mx) / decode.temperature);
                    z += w[i];
                }
                std::uniform_real_distribution<double> unif(0.0, z);
                double u = unif(rng);
                size_t pick = 0;
                double acc = 0.0;
                for (size_t i = 0; i < allowed.size(); ++i) {
                    acc += w[i];
                    if (u <= acc) {
                        pick = i;
                        break;
                    }
                }
                chosen = allowed[pick];
            }
            grammar.advance(chosen);
            emitted.push_back(chosen);
        }
        last_attempt = emitted;
        if (grammar.accepted()) {
            return parse_design_tokens(emitted, num_candidates);
        }
        if (decode.mode == DecodeConfig::Mode::Greedy) break;  // retries would repeat the same prefix
    }
    std::string seq;
    for (TokenId t : last_attempt) seq += vocab::token_name(t) + " ";
    fail(ErrorKind::GenerationFailure, "constrained decoding did not terminate within max_len; sequence: " + seq);
}

Var DesignPolicy::batch_cross_entropy(const std::vector<const DesignExample*>& batch) {
    require(!batch.empty(), ErrorKind::InvalidInput, "empty batch");
    Var total;
    int64_t tokens = 0;
    for (const DesignExample* ex : batch) {
        auto instr = format_instruction(ex->candidates);
        auto s = serialize_design(ex->design);
        Var lp = design_logprob_vars(ex->product_id, instr, s);
        tokens += lp->value.rows();
        Var sum = ag::sum_all(lp);
        total = total ? ag::add(total, sum) : sum;
    }
    return ag::scale(total, -1.0 / static_cast<double>(tokens));
}

double DesignPolicy::eval_cross_entropy(const std::vector<DesignExample>& examples) const {
    require(!examples.empty(), ErrorKind::InvalidInput, "empty eval set");
    double total = 0.0;
    int64_t tokens = 0;
    for (const auto& ex : examples) {
        auto instr = format_instruction(ex.candidates);
        auto s = serialize_design(ex.design);
        auto lp = design_logprobs(ex.product_id, instr, s);
        for (double v : lp) total += v;
        tokens += static_cast<int64_t>(lp.size());
    }
    return -total / static_cast<double>(tokens);
}

void DesignPolicy::save(const std::string& path) const { nn::save_checkpoint(path, cfg_.to_json(), params_); }

std::unique_ptr<DesignPolicy> DesignPolicy::load(const std::string& path) {
    auto cfg = DesignPolicyConfig::from_json(nn::read_checkpoint_config(path));
    auto policy = std::make_unique<DesignPolicy>(cfg);
    nn::load_checkpoint(path, policy->params());
    return policy;
}

TrainDesignReport train_design(DesignPolicy& policy, const std::vector<DesignExample>& dataset,
                               const TrainDesignConfig& cfg) {
    require(!dataset.empty(), ErrorKind::InvalidInput, "empty training dataset");
    for (const auto& ex : dataset) ex.design.validate(static_cast<int>(ex.candidates.texts.size()));

    auto rng = make_rng(derive_seed(cfg.seed, "train_design"));
    std::vector<size_t> order(dataset.size());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    size_t n_val = std::min(dataset.size() - 1, static_cast<size_t>(std::llround(cfg.val_fraction * dataset.size())));
    std::vector<DesignExample> val;
    std::vector<size_t> train_idx;
    for (size_t i = 0; i < order.size(); ++i) {
        if (i < n_val)
            val.push_back(dataset[order[i]]);
        else
            train_idx.push_back(order[i]);
    }
    if (val.empty()) val.push_back(dataset[order[0]]);

    TrainDesignReport report;
    report.initial_val_loss = policy.eval_cross_entropy(val);

    nn::Adam opt({.lr = cfg.lr});
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(train_idx.begin(), train_idx.end(), rng);
        double epoch_loss = 0.0;
        int64_t batches = 0;
        for (size_t start = 0; start < train_idx.size(); start += cfg.batch_size) {
            std::vector<const DesignExample*> batch;
            for (size_t i = start; i < std::min(train_idx.size(), start + cfg.batch_size); ++i)
                batch.push_back(&dataset[train_idx[i]]);
            policy.params().zero_grad();
            Var loss = policy.batch_cross_entropy(batch);
            double lv = ag::scalar(loss);
            if (!std::isfinite(lv))
                fail(ErrorKind::Numeric, "NaN loss at step " + std::to_string(report.steps) +
                                             " (lr=" + std::to_string(opt.config().lr) + ")");
            ag::backward(loss);
            opt.step(policy.params());
            epoch_loss += lv;
            ++batches;
            ++report.steps;
        }
        TrainCurvePoint pt;
        pt.epoch = epoch;
        pt.train_loss = epoch_loss / std::max<int64_t>(1, batches);
        pt.val_loss = policy.eval_cross_entropy(val);
        report.curve.push_back(pt);
    }
    return report;
}

}  // namespace posterlab
