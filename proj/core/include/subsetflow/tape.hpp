#pragma once

#include <functional>
#include <vector>

#include "subsetflow/tensor.hpp"

namespace subsetflow {

// Handle to a value recorded on a Tape.
struct Var {
    int id = -1;
    bool valid() const { return id >= 0; }
};

// Reverse-mode gradient tape over tensor-valued primitives. Nodes are recorded
// in program order; grad() replays adjoint accumulation in exact reverse record
// order, which makes gradients bitwise deterministic for a fixed program.
//
// Single-writer: one tape per thread of evaluation.
class Tape {
public:
    explicit Tape(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}

    bool grad_enabled() const { return grad_enabled_; }

    Var leaf(Tensor value, bool requires_grad = false);
    Var constant(double v) { return leaf(Tensor::scalar(v), false); }
    Var constant_vec(std::vector<double> v) { return leaf(Tensor::vec(std::move(v)), false); }

    const Tensor& val(Var v) const { return nodes_[v.id].value; }
    double scalar(Var v) const { return nodes_[v.id].value[0]; }
    int size() const { return static_cast<int>(nodes_.size()); }

    // Elementwise, same shape.
    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    Var mul(Var a, Var b);
    Var div(Var a, Var b);

    Var add_scalar(Var a, double c);
    Var mul_scalar(Var a, double c);
    Var neg(Var a) { return mul_scalar(a, -1.0); }

    // y = W x  (W is [m x n], x is [n])
    Var matvec(Var w, Var x);
    // y = (W .* mask) x + b; mask is a constant tensor.
    Var masked_affine(Var w, const Tensor& mask, Var x, Var b);

    Var tanh_(Var a);
    Var sigmoid_(Var a);
    Var exp_(Var a);
    Var log_(Var a);
    Var sqrt_(Var a);

    // Values below `lo` are clamped (gradient zero in the clamped region).
    Var clamp_min(Var a, double lo);
    // Clamp into [lo, hi]; gradient zero where clamped.
    Var clamp(Var a, double lo, double hi);

    Var softmax(Var v);      // 1-D, stable
    Var cumsum(Var v);       // 1-D
    Var sum(Var v);          // -> scalar
    Var slice(Var v, int offset, int len);
    Var gather(Var v, int index);            // -> scalar
    Var pack(const std::vector<Var>& scalars);  // scalars -> 1-D vector
    Var broadcast(Var s, int n);             // scalar -> length-n vector

    // d(loss)/d(param) for every param leaf, in order. Loss must be scalar.
    // The tape is cleared afterwards.
    std::vector<Tensor> grad(Var loss, const std::vector<Var>& params);

    void clear();

private:
    struct Node {
        Tensor value;
        bool requires_grad = false;
        std::function<void(Tape&, int)> backward;  // empty for leaves/constants
    };

    Var push(Tensor value, bool requires_grad, std::function<void(Tape&, int)> backward);
    bool rg(Var v) const { return nodes_[v.id].requires_grad; }

    // Adjoint accumulation helpers used by backward closures.
    Tensor& grad_of(int id);
    bool has_grad(int id) const { return !grads_[id].empty(); }
    const Tensor& out_grad(int id) const { return grads_[id]; }

    std::vector<Node> nodes_;
    std::vector<Tensor> grads_;
    bool grad_enabled_;
};

}  // namespace subsetflow
