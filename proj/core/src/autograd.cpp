#include "posterlab/autograd.hpp"

#include <cmath>
#include <unordered_set>

#include "posterlab/common.hpp"

namespace posterlab::ag {

void Node::ensure_grad() {
    if (grad.size() != value.size() || grad.rows() != value.rows()) grad = Tensor(value.rows(), value.cols());
}

void Node::accumulate(const Tensor& g) {
    ensure_grad();
    grad.axpy(1.0, g);
}

Param::Param(Tensor v)
    : value(std::move(v)),
      grad(value.rows(), value.cols()),
      adam_m(value.rows(), value.cols()),
      adam_v(value.rows(), value.cols()) {}

Var leaf(const Tensor& value, bool requires_grad) {
    auto n = std::make_shared<Node>();
    n->value = value;
    n->requires_grad = requires_grad;
    if (requires_grad) n->ensure_grad();
    return n;
}

Var param_leaf(Param& p) {
    auto n = std::make_shared<Node>();
    n->value = p.value;  // shared storage
    n->grad = p.grad;    // shared storage: accumulation lands in the Param
    n->requires_grad = true;
    return n;
}

Var constant(const Tensor& value) { return leaf(value, false); }

namespace {

Var make_op(Tensor value, std::vector<Var> parents, std::function<void(Node&)> backward_fn) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    n->parents = std::move(parents);
    for (const auto& p : n->parents) {
        if (p->requires_grad) {
            n->requires_grad = true;
            break;
        }
    }
    if (n->requires_grad) n->backward_fn = std::move(backward_fn);
    return n;
}

}  // namespace

void backward(const Var& root) {
    require(root->value.size() == 1, ErrorKind::InvalidInput, "backward root must be scalar");
    // Iterative topological sort.
    std::vector<Node*> order;
    std::unordered_set<Node*> seen;
    std::vector<std::pair<Node*, size_t>> stack;
    stack.push_back({root.get(), 0});
    seen.insert(root.get());
    while (!stack.empty()) {
        auto& [node, idx] = stack.back();
        if (idx < node->parents.size()) {
            Node* p = node->parents[idx].get();
            ++idx;
            if (p->requires_grad && !seen.count(p)) {
                seen.insert(p);
                stack.push_back({p, 0});
            }
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }
    root->ensure_grad();
    root->grad.fill(1.0);
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* n = *it;
        if (n->backward_fn && n->requires_grad) n->backward_fn(*n);
    }
}

Var add(const Var& a, const Var& b) {
    require(a->value.same_shape(b->value), ErrorKind::InvalidInput, "add shape mismatch");
    Tensor out = a->value.clone();
    out.axpy(1.0, b->value);
    return make_op(std::move(out), {a, b}, [](Node& n) {
        if (n.parents[0]->requires_grad) n.parents[0]->accumulate(n.grad);
        if (n.parents[1]->requires_grad) n.parents[1]->accumulate(n.grad);
    });
}

Var add_rowvec(const Var& a, const Var& bias) {
    require(bias->value.rows() == 1 && bias->value.cols() == a->value.cols(), ErrorKind::InvalidInput,
            "add_rowvec bias shape");
    Tensor out = a->value.clone();
    for (int r = 0; r < out.rows(); ++r)
        for (int c = 0; c < out.cols(); ++c) out.at(r, c) += bias->value.at(0, c);
    return make_op(std::move(out), {a, bias}, [](Node& n) {
        if (n.parents[0]->requires_grad) n.parents[0]->accumulate(n.grad);
        if (n.parents[1]->requires_grad) {
            Tensor g(1, n.grad.cols());
            for (int r = 0; r < n.grad.rows(); ++r)
                for (int c = 0; c < n.grad.cols(); ++c) g.at(0, c) += n.grad.at(r, c);
            n.parents[1]->accumulate(g);
        }
    });
}

Var sub(const Var& a, const Var& b) {
    require(a->value.same_shape(b->value), ErrorKind::InvalidInput, "sub shape mismatch");
    Tensor out = a->value.clone();
    out.axpy(-1.0, b->value);
    return make_op(std::move(out), {a, b}, [](Node& n) {
        if (n.parents[0]->requires_grad) n.parents[0]->accumulate(n.grad);
        if (n.parents[1]->requires_grad) {
            n.parents[1]->ensure_grad();
            n.parents[1]->grad.axpy(-1.0, n.grad);
        }
    });
}

Var mul(const Var& a, const Var& b) {
    require(a->value.same_shape(b->value), ErrorKind::InvalidInput, "mul shape mismatch");
    Tensor out(a->value.rows(), a->value.cols());
    for (int64_t i = 0; i < out.size(); ++i) out[i] = a->value[i] * b->value[i];
    return make_op(std::move(out), {a, b}, [](Node& n) {
        const Tensor& av = n.parents[0]->value;
        const Tensor& bv = n.parents[1]->value;
        if (n.parents[0]->requires_grad) {
            Tensor g(av.rows(), av.cols());
            for (int64_t i = 0; i < g.size(); ++i) g[i] = n.grad[i] * bv[i];
            n.parents[0]->accumulate(g);
        }
        if (n.parents[1]->requires_grad) {
            Tensor g(bv.rows(), bv.cols());
            for (int64_t i = 0; i < g.size(); ++i) g[i] = n.grad[i] * av[i];
            n.parents[1]->accumulate(g);
        }
    });
}

Var scale(const Var& a, double c) {
    Tensor out = a->value.clone();
    for (int64_t i = 0; i < out.size(); ++i) out[i] *= c;
    return make_op(std::move(out), {a}, [c](Node& n) {
        if (!n.parents[0]->requires_grad) return;
        n.parents[0]->ensure_grad();
        n.parents[0]->grad.axpy(c, n.grad);
    });
}

Var add_scalar(const Var& a, double c) {
    Tensor out = a->value.clone();
    for (int64_t i = 0; i < out.size(); ++i) out[i] += c;
    return make_op(std::move(out), {a}, [](Node& n) {
        if (n.parents[0]->requires_grad) n.parents[0]->accumulate(n.grad);
    });
}

Var matmul(const Var& a, const Var& b, bool trans_a, bool trans_b) {
    Tensor out = posterlab::matmul(a->value, b->value, trans_a, trans_b);
    return make_op(std::move(out), {a, b}, [trans_a, trans_b](Node& n) {
        const Tensor& av = n.parents[0]->value;
        const Tensor& bv = n.parents[1]->value;
        // d a = d out @ b^T etc., adjusted for the transpose flags.
        if (n.parents[0]->requires_grad) {
            n.parents[0]->ensure_grad();
            if (!trans_a)
                matmul_acc(n.parents[0]->grad, n.grad, bv, false, !trans_b);
            else
                matmul_acc(n.parents[0]->grad, bv, n.grad, trans_b, true);
        }
        if (n.parents[1]->requires_grad) {
            n.parents[1]->ensure_grad();
            if (!trans_b)
                matmul_acc(n.parents[1]->grad, av, n.grad, !trans_a, false);
            else
                matmul_acc(n.parents[1]->grad, n.grad, av, true, trans_a);
        }
    });
}

Var concat_rows(const std::vector<Var>& parts) {
    require(!parts.empty(), ErrorKind::InvalidInput, "concat_rows needs parts");
    int cols = parts[0]->value.cols();
    int rows = 0;
    for (const auto& p : parts) {
        require(p->value.cols() == cols, ErrorKind::InvalidInput, "concat_rows col mismatch");
        rows += p->value.rows();
    }
    Tensor out(rows, cols);
    int r0 = 0;
    for (const auto& p : parts) {
        std::copy(p->value.data(), p->value.data() + p->value.size(), out.data() + static_cast<size_t>(r0) * cols);
        r0 += p->value.rows();
    }
    return make_op(std::move(out), parts, [cols](Node& n) {
        int r0 = 0;
        for (auto& p : n.parents) {
            int pr = p->value.rows();
            if (p->requires_grad) {
                Tensor g(pr, cols);
                std::copy(n.grad.data() + static_cast<size_t>(r0) * cols,
                          n.grad.data() + static_cast<size_t>(r0 + pr) * cols, g.data());
                p->accumulate(g);
            }
            r0 += pr;
        }
    });
}

Var slice_rows(const Var& a, int start, int count) {
    require(start >= 0 && count >= 0 && start + count <= a->value.rows(), ErrorKind::InvalidInput,
            "slice_rows out of range");
    int cols = a->value.cols();
    Tensor out(count, cols);
    std::copy(a->value.data() + static_cast<size_t>(start) * cols,
              a->value.data() + static_cast<size_t>(start + count) * cols, out.data());
    return make_op(std::move(out), {a}, [start, cols](Node& n) {
        if (!n.parents[0]->requires_grad) return;
        n.parents[0]->ensure_grad();
        double* dst = n.parents[0]->grad.data() + static_cast<size_t>(start) * cols;
        const double* src = n.grad.data();
        for (int64_t i = 0; i < n.grad.size(); ++i) dst[i] += src[i];
    });
}

Var slice_cols(const Var& a, int start, int count) {
    require(start >= 0 && count >= 0 && start + count <= a->value.cols(), ErrorKind::InvalidInput,
            "slice_cols out of range");
    Tensor out(a->value.rows(), count);
    for (int r = 0; r < out.rows(); ++r)
        for (int c = 0; c < count; ++c) out.at(r, c) = a->value.at(r, start + c);
    return make_op(std::move(out), {a}, [start, count](Node& n) {
        if (!n.parents[0]->requires_grad) return;
        n.parents[0]->ensure_grad();
        for (int r = 0; r < n.grad.rows(); ++r)
            for (int c = 0; c < count; ++c) n.parents[0]->grad.at(r, start + c) += n.grad.at(r, c);
    });
}

Var reshape(const Var& a, int rows, int cols) {
    Tensor out = a->value.reshaped(rows, cols);
    return make_op(std::move(out), {a}, [](Node& n) {
        if (!n.parents[0]->requires_grad) return;
        Node& p = *n.parents[0];
        p.ensure_grad();
        const double* src = n.grad.data();
        double* dst = p.grad.data();
        for (int64_t i = 0; i < n.grad.size(); ++i) dst[i] += src[i];
    });
}

Var softmax_rows(const Var& a) {
    Tensor out(a->value.rows(), a->value.cols());
    for (int r = 0; r < out.rows(); ++r) {
        double mx = -1e300;
        for (int c = 0; c < out.cols(); ++c) mx = std::max(mx, a->value.at(r, c));
        double z = 0.0;
        for (int c = 0; c < out.cols(); ++c) {
            double e = std::exp(a->value.at(r, c) - mx);
            out.at(r, c) = e;
            z += e;
        }
        for (int c = 0; c < out.cols(); ++c) out.at(r, c) /= z;
    }
    return make_op(std::move(out), {a}, [](Node& n) {
        if (!n.parents[0]->requires_grad) return;
        Tensor g(n.value.rows(), n.value.cols());
        for (int r = 0; r < g.rows(); ++r) {
            double dot = 0.0;
            for (int c = 0; c < g.cols(); ++c) dot += n.grad.at(r, c) * n.value.at(r, c);
            for (int c = 0; c < g.cols(); ++c) g.at(r, c) = n.value.at(r, c) * (n.grad.at(r, c) - dot);
        }
        n.parents[0]->accumulate(g);
    });
}

Var log_softmax_rows(const Var& a) {
    Tensor out(a->value.rows(), a->value.cols());
    for (int r = 0; r < out.rows(); ++r) {
        double mx = -1e300;
        for (int c = 0; c < out.cols(); ++c) mx = std::max(mx, a->value.at(r, c));
        double z = 0.0;
        for (int c = 0; c < out.cols(); ++c) z += std::exp(a->value.at(r, c) - mx);
        double lz = mx + std::log(z);
        for (int c = 0; c < out.cols(); ++c) out.at(r, c) = a->value.at(r, c) - lz;
    }
    return make_op(std::move(out), {a}, [](Node& n) {
        if (!n.parents[0]->requires_grad) return;
        Tensor g(n.value.rows(), n.value.cols());
        for (int r = 0; r < g.rows(); ++r) {
            double gsum = 0.0;
            for (int c = 0; c < g.cols(); ++c) gsum += n.grad.at(r, c);
            for (int c = 0; c < g.cols(); ++c) g.at(r, c) = n.grad.at(r, c) - std::exp(n.value.at(r, c)) * gsum;
        }
        n.parents[0]->accumulate(g);
    });
}

Var layer_norm_rows(const Var& x, const Var& gamma, const Var& beta, double eps) {
    int rows = x->value.rows(), cols = x->value.cols();
    require(gamma->value.cols() == cols && beta->value.cols() == cols, ErrorKind::InvalidInput, "layer_norm shapes");
    Tensor out(rows, cols);
    auto xhat = std::make_shared<Tensor>(rows, cols);
    auto inv_std = std::make_shared<std::vector<double>>(rows);
    for (int r = 0; r < rows; ++r) {
        double mean = 0.0;
        for (int c = 0; c < cols; ++c) mean += x->value.at(r, c);
        mean /= cols;
        double var = 0.0;
        for (int c = 0; c < cols; ++c) {
            double d = x->value.at(r, c) - mean;
            var += d * d;
        }
        var /= cols;
        double istd = 1.0 / std::sqrt(var + eps);
        (*inv_std)[r] = istd;
        for (int c = 0; c < cols; ++c) {
            double xh = (x->value.at(r, c) - mean) * istd;
            xhat->at(r, c) = xh;
            out.at(r, c) = xh * gamma->value.at(0, c) + beta->value.at(0, c);
        }
    }
    return make_op(std::move(out), {x, gamma, beta}, [xhat, inv_std, cols](Node& n) {
        const Tensor& gm = n.parents[1]->value;
        if (n.parents[1]->requires_grad) {
            Tensor gg(1, cols);
            for (int r = 0; r < n.grad.rows(); ++r)
                for (int c = 0; c < cols; ++c) gg.at(0, c) += n.grad.at(r, c) * xhat->at(r, c);
            n.parents[1]->accumulate(gg);
        }
        if (n.parents[2]->requires_grad) {
            Tensor gb(1, cols);
            for (int r = 0; r < n.grad.rows(); ++r)
                for (int c = 0; c < cols; ++c) gb.at(0, c) += n.grad.at(r, c);
            n.parents[2]->accumulate(gb);
        }
        if (n.parents[0]->requires_grad) {
            Tensor gx(n.grad.rows(), cols);
            for (int r = 0; r < n.grad.rows(); ++r) {
                double sum_dy = 0.0, sum_dy_xhat = 0.0;
                for (int c = 0; c < cols; ++c) {
                    double dy = n.grad.at(r, c) * gm.at(0, c);
                    sum_dy += dy;
                    sum_dy_xhat += dy * xhat->at(r, c);
                }
                for (int c = 0; c < cols; ++c) {
                    double dy = n.grad.at(r, c) * gm.at(0, c);
                    gx.at(r, c) =
                        (*inv_std)[r] * (dy - sum_dy / cols - xhat->at(r, c) * sum_dy_xhat / cols);
                }
            }
            n.parents[0]->accumulate(gx);
        }
    });
}

namespace {
constexpr double kInvSqrt2 = 0.7071067811865475244;
constexpr double kInvSqrt2Pi = 0.3989422804014326779;
}  // namespace

Var gelu(const Var& x) {
    Tensor out(x->value.rows(), x->value.cols());
    for (int64_t i = 0; i < out.size(); ++i) {
        double v = x->value[i];
        out[i] = 0.5 * v * (1.0 + std::erf(v * kInvSqrt2));
    }
    return make_op(std::move(out), {x}, [](Node& n) {
        if (!n.parents[0]->requires_grad) return;
        const Tensor& xv = n.parents[0]->value;
        Tensor g(xv.rows(), xv.cols());
        for (int64_t i = 0; i < g.size(); ++i) {
            double v = xv[i];
            double cdf = 0.5 * (1.0 + std::erf(v * kInvSqrt2));
            double pdf = kInvSqrt2Pi * std::exp(-0.5 * v * v);
            g[i] = n.grad[i] * (cdf + v * pdf);
        }
        n.parents[0]->accumulate(g);
    });
}

Var tanh_act(const Var& x) {
    Tensor out(x->value.rows(), x->value.cols());
    for (int64_t i = 0; i < out.size(); ++i) out[i] = std::tanh(x->value[i]);
    return make_op(std::move(out), {x}, [](Node& n) {
        if (!n.parents[0]->requires_grad) return;
        Tensor g(n.value.rows(), n.value.cols());
        for (int64_t i = 0; i < g.size(); ++i) g[i] = n.grad[i] * (1.0 - n.value[i] * n.value[i]);
        n.parents[0]->accumulate(g);
    });
}

Var sigmoid(const Var& x) {
    Tensor out(x->value.rows(), x->value.cols());
    for (int64_t i = 0; i < out.size(); ++i) {
        double v = x->value[i];
        out[i] = v >= 0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
    }
    return make_op(std::move(out), {x}, [](Node& n) {
        if (!n.parents[0]->requires_grad) return;
        Tensor g(n.value.rows(), n.value.cols());
        for (int64_t i = 0; i < g.size(); ++i) g[i] = n.grad[i] * n.value[i] * (1.0 - n.value[i]);
        n.parents[0]->accumulate(g);
    });
}

Var softplus(const Var& x) {
    Tensor out(x->value.rows(), x->value.cols());
    for (int64_t i = 0; i < out.size(); ++i) {
        double v = x->value[i];
        out[i] = std::max(v, 0.0) + std::log1p(std::exp(-std::abs(v)));
    }
    return make_op(std::move(out), {x}, [](Node& n) {
        if (!n.parents[0]->requires_grad) return;
        const Tensor& xv = n.parents[0]->value;
        Tensor g(xv.rows(), xv.cols());
        for (int64_t i = 0; i < g.size(); ++i) {
            double v = xv[i];
            double s = v >= 0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
            g[i] = n.grad[i] * s;
        }
        n.parents[0]->accumulate(g);
    });
}

Var sum_all(const Var& x) {
    Tensor out(1, 1);
    out[0] = x->value.sum();
    return make_op(std::move(out), {x}, [](Node& n) {
        if (!n.parents[0]->requires_grad) return;
        Node& p = *n.parents[0];
        p.ensure_grad();
        double g = n.grad[0];
        for (int64_t i = 0; i < p.grad.size(); ++i) p.grad[i] += g;
    });
}

Var mean_all(const Var& x) { return scale(sum_all(x), 1.0 / static_cast<double>(x->value.size())); }

Var mean_sq_diff(const Var& a, const Var& b) {
    require(a->value.same_shape(b->value), ErrorKind::InvalidInput, "mean_sq_diff shape mismatch");
    Tensor out(1, 1);
    double s = 0.0;
    for (int64_t i = 0; i < a->value.size(); ++i) {
        double d = a->value[i] - b->value[i];
        s += d * d;
    }
    double inv_n = 1.0 / static_cast<double>(a->value.size());
    out[0] = s * inv_n;
    return make_op(std::move(out), {a, b}, [inv_n](Node& n) {
        const Tensor& av = n.parents[0]->value;
        const Tensor& bv = n.parents[1]->value;
        double g = 2.0 * inv_n * n.grad[0];
        if (n.parents[0]->requires_grad) {
            Tensor ga(av.rows(), av.cols());
            for (int64_t i = 0; i < ga.size(); ++i) ga[i] = g * (av[i] - bv[i]);
            n.parents[0]->accumulate(ga);
        }
        if (n.parents[1]->requires_grad) {
            Tensor gb(bv.rows(), bv.cols());
            for (int64_t i = 0; i < gb.size(); ++i) gb[i] = g * (bv[i] - av[i]);
            n.parents[1]->accumulate(gb);
        }
    });
}

Var gather_rows(const Var& table, const std::vector<int>& indices) {
    int cols = table->value.cols();
    Tensor out(static_cast<int>(indices.size()), cols);
    for (size_t i = 0; i < indices.size(); ++i) {
        int idx = indices[i];
        require(idx >= 0 && idx < table->value.rows(), ErrorKind::InvalidInput, "gather_rows index out of range");
        std::copy(table->value.data() + static_cast<size_t>(idx) * cols,
                  table->value.data() + static_cast<size_t>(idx + 1) * cols,
                  out.data() + i * cols);
    }
    auto idx_copy = std::make_shared<std::vector<int>>(indices);
    return make_op(std::move(out), {table}, [idx_copy, cols](Node& n) {
        if (!n.parents[0]->requires_grad) return;
        Node& p = *n.parents[0];
        p.ensure_grad();
        for (size_t i = 0; i < idx_copy->size(); ++i) {
            double* dst = p.grad.data() + static_cast<size_t>((*idx_copy)[i]) * cols;
            const double* src = n.grad.data() + i * cols;
            for (int c = 0; c < cols; ++c) dst[c] += src[c];
        }
    });
}

Var select_cols(const Var& a, const std::vector<int>& cols) {
    require(static_cast<int>(cols.size()) == a->value.rows(), ErrorKind::InvalidInput,
            "select_cols needs one column per row");
    Tensor out(a->value.rows(), 1);
    for (int r = 0; r < out.rows(); ++r) {
        require(cols[r] >= 0 && cols[r] < a->value.cols(), ErrorKind::InvalidInput, "select_cols out of range");
        out.at(r, 0) = a->value.at(r, cols[r]);
    }
    auto idx_copy = std::make_shared<std::vector<int>>(cols);
    return make_op(std::move(out), {a}, [idx_copy](Node& n) {
        if (!n.parents[0]->requires_grad) return;
        Node& p = *n.parents[0];
        p.ensure_grad();
        for (int r = 0; r < n.grad.rows(); ++r) p.grad.at(r, (*idx_copy)[r]) += n.grad.at(r, 0);
    });
}

namespace {

// im2col for channel-major (C, H*W) images.
Tensor im2col(const Tensor& x, int h, int w, int ksize, int stride, int pad, int oh, int ow) {
    int channels = x.rows();
    Tensor col(channels * ksize * ksize, oh * ow);
    for (int c = 0; c < channels; ++c) {
        for (int kr = 0; kr < ksize; ++kr) {
            for (int kc = 0; kc < ksize; ++kc) {
                int row = (c * ksize + kr) * ksize + kc;
                for (int orr = 0; orr < oh; ++orr) {
                    int ir = orr * stride + kr - pad;
                    for (int oc = 0; oc < ow; ++oc) {
                        int ic = oc * stride + kc - pad;
                        double v = 0.0;
                        if (ir >= 0 && ir < h && ic >= 0 && ic < w) v = x.at(c, ir * w + ic);
                        col.at(row, orr * ow + oc) = v;
                    }
                }
            }
        }
    }
    return col;
}

void col2im_acc(Tensor& gx, const Tensor& gcol, int h, int w, int ksize, int stride, int pad, int oh, int ow) {
    int channels = gx.rows();
    for (int c = 0; c < channels; ++c) {
        for (int kr = 0; kr < ksize; ++kr) {
            for (int kc = 0; kc < ksize; ++kc) {
                int row = (c * ksize + kr) * ksize + kc;
                for (int orr = 0; orr < oh; ++orr) {
                    int ir = orr * stride + kr - pad;
                    if (ir < 0 || ir >= h) continue;
                    for (int oc = 0; oc < ow; ++oc) {
                        int ic = oc * stride + kc - pad;
                        if (ic < 0 || ic >= w) continue;
                        gx.at(c, ir * w + ic) += gcol.at(row, orr * ow + oc);
                    }
                }
            }
        }
    }
}

}  // namespace

Var conv2d(const Var& x, int height, int width, const Var& weight, const Var& bias, int ksize, int stride, int pad) {
    int channels = x->value.rows();
    require(x->value.cols() == height * width, ErrorKind::InvalidInput, "conv2d geometry mismatch");
    require(weight->value.cols() == channels * ksize * ksize, ErrorKind::InvalidInput, "conv2d weight shape");
    int oh = (height + 2 * pad - ksize) / stride + 1;
    int ow = (width + 2 * pad - ksize) / stride + 1;
    Tensor col = im2col(x->value, height, width, ksize, stride, pad, oh, ow);
    Tensor out = posterlab::matmul(weight->value, col);
    for (int r = 0; r < out.rows(); ++r)
        for (int c = 0; c < out.cols(); ++c) out.at(r, c) += bias->value.at(0, r);
    auto col_keep = std::make_shared<Tensor>(col);
    return make_op(std::move(out), {x, weight, bias},
                   [col_keep, height, width, ksize, stride, pad, oh, ow](Node& n) {
                       if (n.parents[1]->requires_grad) {
                           n.parents[1]->ensure_grad();
                           matmul_acc(n.parents[1]->grad, n.grad, *col_keep, false, true);
                       }
                       if (n.parents[2]->requires_grad) {
                           Tensor gb(1, n.grad.rows());
                           for (int r = 0; r < n.grad.rows(); ++r)
                               for (int c = 0; c < n.grad.cols(); ++c) gb.at(0, r) += n.grad.at(r, c);
                           n.parents[2]->accumulate(gb);
                       }
                       if (n.parents[0]->requires_grad) {
                           Tensor gcol = posterlab::matmul(n.parents[1]->value, n.grad, true, false);
                           n.parents[0]->ensure_grad();
                           col2im_acc(n.parents[0]->grad, gcol, height, width, ksize, stride, pad, oh, ow);
                       }
                   });
}

}  // namespace posterlab::ag
