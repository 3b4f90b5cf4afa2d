#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <unordered_set>
#include <utility>
#include <vector>

#include "hatcn/errors.hpp"
#include "hatcn/grid.hpp"

// Minimal reverse-mode differentiation over Grid values. The graph is
// define-by-run: every operation allocates a fresh node holding the result,
// links to its parents and remembers how to push gradients back to them.
// Parameters are long-lived leaf nodes; their gradients accumulate across
// backward passes until zero_grad() is called.

namespace hatcn::ad {

struct Node;
using NodePtr = std::shared_ptr<Node>;

struct Node {
    Grid value;
    Grid grad;  // same shape as value, zero after reset
    bool requires_grad = false;
    std::vector<NodePtr> parents;
    std::function<void(const Node&)> backward_fn;  // pushes this->grad into parents

    explicit Node(Grid v, bool needs_grad)
        : value(std::move(v)),
          grad(value.rows(), value.cols(), 0.0),
          requires_grad(needs_grad) {}

    void zero_grad() { grad.fill(0.0); }
};

inline NodePtr constant(Grid v) { return std::make_shared<Node>(std::move(v), false); }

inline NodePtr parameter(Grid v) { return std::make_shared<Node>(std::move(v), true); }

namespace detail {

inline NodePtr make(Grid value, std::vector<NodePtr> parents,
                    std::function<void(const Node&)> backward_fn) {
    bool needs = false;
    for (const auto& p : parents) needs = needs || p->requires_grad;
    auto n = std::make_shared<Node>(std::move(value), needs);
    if (needs) {
        n->parents = std::move(parents);
        n->backward_fn = std::move(backward_fn);
    }
    return n;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Dilated causal convolution
// ---------------------------------------------------------------------------

struct ConvSpec {
    std::size_t in_channels = 1;
    std::size_t out_channels = 1;
    std::size_t kernel_size = 1;
    std::size_t dilation = 1;
};

// kernel is out_channels x (in_channels * kernel_size), tap k of input channel
// c for output channel o at kernel.at(o, c*kernel_size + k); tap k = l-1 is the
// current time step. Output length equals input length: the implicit left zero
// padding has length (l-1)*d, so out[o][t] only reads input at
// t - (l-1-k)*d >= 0 and positions before the series start contribute zero.
inline NodePtr dilated_causal_conv(const NodePtr& x, const NodePtr& kernel,
                                   const NodePtr& bias, const ConvSpec& spec) {
    const std::size_t cin = spec.in_channels;
    const std::size_t cout = spec.out_channels;
    const std::size_t l = spec.kernel_size;
    const std::size_t d = spec.dilation;
    if (l < 1 || d < 1) throw ConfigError("conv: kernel size and dilation must be >= 1");
    if (x->value.rows() != cin)
        throw ConfigError("conv: input channel count does not match kernel");
    if (kernel->value.rows() != cout || kernel->value.cols() != cin * l)
        throw ConfigError("conv: kernel grid must be out_channels x (in_channels*kernel_size)");
    if (bias->value.rows() != cout || bias->value.cols() != 1)
        throw ConfigError("conv: bias must be out_channels x 1");

    const std::size_t T = x->value.cols();
    Grid out(cout, T);
    for (std::size_t o = 0; o < cout; ++o) {
        double* orow = out.row_ptr(o);
        const double b = bias->value.at(o, 0);
        for (std::size_t t = 0; t < T; ++t) orow[t] = b;
        for (std::size_t c = 0; c < cin; ++c) {
            const double* xrow = x->value.row_ptr(c);
            for (std::size_t k = 0; k < l; ++k) {
                const double w = kernel->value.at(o, c * l + k);
                const std::size_t shift = (l - 1 - k) * d;
                if (shift >= T) continue;
                for (std::size_t t = shift; t < T; ++t) orow[t] += w * xrow[t - shift];
            }
        }
    }

    auto backward = [cin, cout, l, d, T](const Node& self) {
        Node& xn = *self.parents[0];
        Node& kn = *self.parents[1];
        Node& bn = *self.parents[2];
        if (bn.requires_grad) {
            for (std::size_t o = 0; o < cout; ++o) {
                const double* grow = self.grad.row_ptr(o);
                double s = 0.0;
                for (std::size_t t = 0; t < T; ++t) s += grow[t];
                bn.grad.at(o, 0) += s;
            }
        }
        if (kn.requires_grad) {
            for (std::size_t o = 0; o < cout; ++o) {
                const double* grow = self.grad.row_ptr(o);
                for (std::size_t c = 0; c < cin; ++c) {
                    const double* xrow = xn.value.row_ptr(c);
                    for (std::size_t k = 0; k < l; ++k) {
                        const std::size_t shift = (l - 1 - k) * d;
                        if (shift >= T) continue;
                        double s = 0.0;
                        for (std::size_t t = shift; t < T; ++t) s += grow[t] * xrow[t - shift];
                        kn.grad.at(o, c * l + k) += s;
                    }
                }
            }
        }
        if (xn.requires_grad) {
            for (std::size_t o = 0; o < cout; ++o) {
                const double* grow = self.grad.row_ptr(o);
                for (std::size_t c = 0; c < cin; ++c) {
                    double* gxrow = xn.grad.row_ptr(c);
                    for (std::size_t k = 0; k < l; ++k) {
                        const double w = kn.value.at(o, c * l + k);
                        const std::size_t shift = (l - 1 - k) * d;
                        if (shift >= T) continue;
                        for (std::size_t t = shift; t < T; ++t) gxrow[t - shift] += w * grow[t];
                    }
                }
            }
        }
    };
    return detail::make(std::move(out), {x, kernel, bias}, backward);
}

// ---------------------------------------------------------------------------
// Linear algebra
// ---------------------------------------------------------------------------

inline NodePtr matmul(const NodePtr& a, const NodePtr& b) {
    if (a->value.cols() != b->value.rows())
        throw ConfigError("matmul: inner dimensions do not match");
    const std::size_t m = a->value.rows();
    const std::size_t n = a->value.cols();
    const std::size_t p = b->value.cols();
    Grid out(m, p);
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = a->value.row_ptr(i);
        double* orow = out.row_ptr(i);
        for (std::size_t k = 0; k < n; ++k) {
            const double av = arow[k];
            const double* brow = b->value.row_ptr(k);
            for (std::size_t j = 0; j < p; ++j) orow[j] += av * brow[j];
        }
    }
    auto backward = [m, n, p](const Node& self) {
        Node& an = *self.parents[0];
        Node& bn = *self.parents[1];
        if (an.requires_grad) {  // dA += dC * B^T
            for (std::size_t i = 0; i < m; ++i) {
                const double* grow = self.grad.row_ptr(i);
                double* garow = an.grad.row_ptr(i);
                for (std::size_t k = 0; k < n; ++k) {
                    const double* brow = bn.value.row_ptr(k);
                    double s = 0.0;
                    for (std::size_t j = 0; j < p; ++j) s += grow[j] * brow[j];
                    garow[k] += s;
                }
            }
        }
        if (bn.requires_grad) {  // dB += A^T * dC
            for (std::size_t i = 0; i < m; ++i) {
                const double* arow = an.value.row_ptr(i);
                const double* grow = self.grad.row_ptr(i);
                for (std::size_t k = 0; k < n; ++k) {
                    const double av = arow[k];
                    double* gbrow = bn.grad.row_ptr(k);
                    for (std::size_t j = 0; j < p; ++j) gbrow[j] += av * grow[j];
                }
            }
        }
    };
    return detail::make(std::move(out), {a, b}, backward);
}

inline NodePtr transpose(const NodePtr& a) {
    const std::size_t m = a->value.rows();
    const std::size_t n = a->value.cols();
    Grid out(n, m);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) out.at(j, i) = a->value.at(i, j);
    auto backward = [m, n](const Node& self) {
        Node& an = *self.parents[0];
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j) an.grad.at(i, j) += self.grad.at(j, i);
    };
    return detail::make(std::move(out), {a}, backward);
}

inline NodePtr add(const NodePtr& a, const NodePtr& b) {
    if (!a->value.same_shape(b->value)) throw ConfigError("add: shape mismatch");
    Grid out = a->value;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += b->value[i];
    auto backward = [](const Node& self) {
        Node& an = *self.parents[0];
        Node& bn = *self.parents[1];
        if (an.requires_grad)
            for (std::size_t i = 0; i < self.grad.size(); ++i) an.grad[i] += self.grad[i];
        if (bn.requires_grad)
            for (std::size_t i = 0; i < self.grad.size(); ++i) bn.grad[i] += self.grad[i];
    };
    return detail::make(std::move(out), {a, b}, backward);
}

// Concatenate Cx1 columns into a CxK grid.
inline NodePtr concat_cols(const std::vector<NodePtr>& columns) {
    if (columns.empty()) throw ConfigError("concat_cols: no columns");
    const std::size_t rows = columns.front()->value.rows();
    for (const auto& c : columns)
        if (c->value.rows() != rows || c->value.cols() != 1)
            throw ConfigError("concat_cols: every part must be rows x 1");
    Grid out(rows, columns.size());
    for (std::size_t j = 0; j < columns.size(); ++j)
        for (std::size_t i = 0; i < rows; ++i) out.at(i, j) = columns[j]->value.at(i, 0);
    auto backward = [rows](const Node& self) {
        for (std::size_t j = 0; j < self.parents.size(); ++j) {
            Node& p = *self.parents[j];
            if (!p.requires_grad) continue;
            for (std::size_t i = 0; i < rows; ++i) p.grad.at(i, 0) += self.grad.at(i, j);
        }
    };
    return detail::make(std::move(out), columns, backward);
}

// Extract column j as a rows x 1 grid.
inline NodePtr column(const NodePtr& a, std::size_t j) {
    if (j >= a->value.cols()) throw ConfigError("column: index out of range");
    const std::size_t rows = a->value.rows();
    Grid out(rows, 1);
    for (std::size_t i = 0; i < rows; ++i) out.at(i, 0) = a->value.at(i, j);
    auto backward = [rows, j](const Node& self) {
        Node& an = *self.parents[0];
        for (std::size_t i = 0; i < rows; ++i) an.grad.at(i, j) += self.grad.at(i, 0);
    };
    return detail::make(std::move(out), {a}, backward);
}

// ---------------------------------------------------------------------------
// Nonlinearities
// ---------------------------------------------------------------------------

inline NodePtr relu(const NodePtr& a) {
    Grid out = a->value;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = out[i] > 0.0 ? out[i] : 0.0;
    auto backward = [](const Node& self) {
        Node& an = *self.parents[0];
        for (std::size_t i = 0; i < self.grad.size(); ++i)
            if (an.value[i] > 0.0) an.grad[i] += self.grad[i];
    };
    return detail::make(std::move(out), {a}, backward);
}

inline NodePtr tanh(const NodePtr& a) {
    Grid out = a->value;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(out[i]);
    auto backward = [](const Node& self) {
        Node& an = *self.parents[0];
        for (std::size_t i = 0; i < self.grad.size(); ++i) {
            const double y = self.value[i];
            an.grad[i] += self.grad[i] * (1.0 - y * y);
        }
    };
    return detail::make(std::move(out), {a}, backward);
}

inline double sigmoid_scalar(double x) {
    return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

inline NodePtr sigmoid(const NodePtr& a) {
    Grid out = a->value;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = sigmoid_scalar(out[i]);
    auto backward = [](const Node& self) {
        Node& an = *self.parents[0];
        for (std::size_t i = 0; i < self.grad.size(); ++i) {
            const double y = self.value[i];
            an.grad[i] += self.grad[i] * y * (1.0 - y);
        }
    };
    return detail::make(std::move(out), {a}, backward);
}

// Row-wise softmax with max-subtraction. Rows sum to 1 within 1e-9 and the
// output is invariant to adding a constant to a row.
inline NodePtr softmax_rows(const NodePtr& a) {
    const std::size_t rows = a->value.rows();
    const std::size_t cols = a->value.cols();
    Grid out(rows, cols);
    for (std::size_t i = 0; i < rows; ++i) {
        const double* in = a->value.row_ptr(i);
        double* o = out.row_ptr(i);
        double mx = in[0];
        for (std::size_t j = 1; j < cols; ++j) mx = std::max(mx, in[j]);
        double z = 0.0;
        for (std::size_t j = 0; j < cols; ++j) {
            o[j] = std::exp(in[j] - mx);
            z += o[j];
        }
        for (std::size_t j = 0; j < cols; ++j) o[j] /= z;
    }
    auto backward = [rows, cols](const Node& self) {
        Node& an = *self.parents[0];
        for (std::size_t i = 0; i < rows; ++i) {
            const double* y = self.value.row_ptr(i);
            const double* g = self.grad.row_ptr(i);
            double dot = 0.0;
            for (std::size_t j = 0; j < cols; ++j) dot += y[j] * g[j];
            double* ga = an.grad.row_ptr(i);
            for (std::size_t j = 0; j < cols; ++j) ga[j] += y[j] * (g[j] - dot);
        }
    };
    return detail::make(std::move(out), {a}, backward);
}

// ---------------------------------------------------------------------------
// Reductions and loss
// ---------------------------------------------------------------------------

inline NodePtr sum(const NodePtr& a) {
    Grid out(1, 1);
    out[0] = a->value.sum();
    auto backward = [](const Node& self) {
        Node& an = *self.parents[0];
        const double g = self.grad[0];
        for (std::size_t i = 0; i < an.grad.size(); ++i) an.grad[i] += g;
    };
    return detail::make(std::move(out), {a}, backward);
}

inline NodePtr mean(const NodePtr& a) {
    const double n = static_cast<double>(a->value.size());
    Grid out(1, 1);
    out[0] = a->value.sum() / n;
    auto backward = [n](const Node& self) {
        Node& an = *self.parents[0];
        const double g = self.grad[0] / n;
        for (std::size_t i = 0; i < an.grad.size(); ++i) an.grad[i] += g;
    };
    return detail::make(std::move(out), {a}, backward);
}

// Binary cross-entropy of sigmoid(logit) against target, fused for stability:
// loss = max(z,0) - y*z + log(1+exp(-|z|)), dloss/dz = sigmoid(z) - y.
inline NodePtr bce_with_logit(const NodePtr& logit, double target) {
    if (logit->value.rows() != 1 || logit->value.cols() != 1)
        throw UsageError("bce_with_logit: logit must be a 1x1 scalar");
    const double z = logit->value[0];
    Grid out(1, 1);
    out[0] = std::max(z, 0.0) - target * z + std::log1p(std::exp(-std::abs(z)));
    auto backward = [z, target](const Node& self) {
        Node& ln = *self.parents[0];
        ln.grad[0] += self.grad[0] * (sigmoid_scalar(z) - target);
    };
    return detail::make(std::move(out), {logit}, backward);
}

// ---------------------------------------------------------------------------
// Backward pass
// ---------------------------------------------------------------------------

// Seeds the scalar output with `seed` and propagates gradients to every
// reachable node. Gradients accumulate additively across calls.
inline void backward(const NodePtr& output, double seed = 1.0) {
    if (output->value.rows() != 1 || output->value.cols() != 1)
        throw UsageError("backward: output must be a 1x1 scalar");
    if (!output->requires_grad) return;

    // Post-order over parents; reversed, consumers run before producers.
    std::vector<Node*> order;
    std::unordered_set<Node*> visited;
    std::vector<std::pair<Node*, std::size_t>> stack;
    stack.emplace_back(output.get(), 0);
    visited.insert(output.get());
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->parents.size()) {
            Node* p = node->parents[next++].get();
            if (p->requires_grad && visited.insert(p).second) stack.emplace_back(p, 0);
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }

    // Interior grads are scratch space for this pass; only leaves accumulate,
    // which is what batched training relies on (one backward per sample).
    for (Node* node : order)
        if (!node->parents.empty()) node->grad.fill(0.0);

    output->grad[0] += seed;
    for (auto it = order.rbegin(); it != order.rend(); ++it)
        if ((*it)->backward_fn) (*it)->backward_fn(**it);
}

}  // namespace hatcn::ad
