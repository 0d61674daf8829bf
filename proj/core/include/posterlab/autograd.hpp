#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "posterlab/tensor.hpp"

namespace posterlab::ag {

// Minimal reverse-mode autodiff over Tensor. A forward pass builds a graph of
// shared_ptr nodes; backward() walks it once in reverse topological order.
// Everything is double precision so finite-difference checks are meaningful.

struct Node;
using Var = std::shared_ptr<Node>;

struct Node {
    Tensor value;
    Tensor grad;  // same shape as value; shares storage with a Param's grad for leaves
    bool requires_grad = false;
    std::vector<Var> parents;
    std::function<void(Node&)> backward_fn;

    void ensure_grad();
    void accumulate(const Tensor& g);
};

// Trainable parameter: persistent value/grad plus Adam state.
struct Param {
    Tensor value;
    Tensor grad;
    Tensor adam_m;
    Tensor adam_v;

    Param() = default;
    explicit Param(Tensor v);
    void zero_grad() { grad.zero(); }
};

Var leaf(const Tensor& value, bool requires_grad = false);
Var param_leaf(Param& p);  // grads accumulate straight into p.grad
Var constant(const Tensor& value);

void backward(const Var& root);  // root must be 1x1

// Elementwise / broadcast
Var add(const Var& a, const Var& b);
Var add_rowvec(const Var& a, const Var& bias);  // bias is 1 x cols
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double c);
Var add_scalar(const Var& a, double c);

// Linear algebra
Var matmul(const Var& a, const Var& b, bool trans_a = false, bool trans_b = false);

// Structure
Var concat_rows(const std::vector<Var>& parts);
Var slice_rows(const Var& a, int start, int count);
Var slice_cols(const Var& a, int start, int count);
Var reshape(const Var& a, int rows, int cols);

// Nonlinearities / normalization
Var softmax_rows(const Var& a);
Var log_softmax_rows(const Var& a);
Var layer_norm_rows(const Var& x, const Var& gamma, const Var& beta, double eps = 1e-6);
Var gelu(const Var& x);
Var tanh_act(const Var& x);
Var sigmoid(const Var& x);
Var softplus(const Var& x);

// Reductions
Var sum_all(const Var& x);
Var mean_all(const Var& x);
Var mean_sq_diff(const Var& a, const Var& b);  // mean((a-b)^2)

// Lookup
Var gather_rows(const Var& table, const std::vector<int>& indices);
Var select_cols(const Var& a, const std::vector<int>& cols);  // out[i] = a[i, cols[i]], n x 1

// Convolution on channel-major images: x is (C, H*W); weight (OC, C*kh*kw);
// bias (1, OC); output (OC, OH*OW).
Var conv2d(const Var& x, int height, int width, const Var& weight, const Var& bias, int ksize, int stride, int pad);

inline double scalar(const Var& v) { return v->value[0]; }

}  // namespace posterlab::ag
