#include "subsetflow/tape.hpp"

#include <algorithm>
#include <cmath>

namespace subsetflow {

Var Tape::push(Tensor value, bool requires_grad, std::function<void(Tape&, int)> backward) {
    Node n;
    n.value = std::move(value);
    n.requires_grad = grad_enabled_ && requires_grad;
    if (n.requires_grad) n.backward = std::move(backward);
    nodes_.push_back(std::move(n));
    return Var{static_cast<int>(nodes_.size()) - 1};
}

Var Tape::leaf(Tensor value, bool requires_grad) {
    return push(std::move(value), requires_grad, nullptr);
}

Tensor& Tape::grad_of(int id) {
    if (grads_[id].empty()) grads_[id] = Tensor(nodes_[id].value.shape());
    return grads_[id];
}

namespace {
void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (!a.same_shape(b)) throw ContractError(std::string(op) + ": shape mismatch");
}
}  // namespace

Var Tape::add(Var a, Var b) {
    const Tensor &ta = val(a), &tb = val(b);
    check_same_shape(ta, tb, "add");
    Tensor out(ta.shape());
    for (int i = 0; i < ta.size(); ++i) out[i] = ta[i] + tb[i];
    return push(std::move(out), rg(a) || rg(b), [a, b](Tape& t, int id) {
        const Tensor& g = t.out_grad(id);
        if (t.rg(a)) {
            Tensor& ga = t.grad_of(a.id);
            for (int i = 0; i < g.size(); ++i) ga[i] += g[i];
        }
        if (t.rg(b)) {
            Tensor& gb = t.grad_of(b.id);
            for (int i = 0; i < g.size(); ++i) gb[i] += g[i];
        }
    });
}

Var Tape::sub(Var a, Var b) {
    const Tensor &ta = val(a), &tb = val(b);
    check_same_shape(ta, tb, "sub");
    Tensor out(ta.shape());
    for (int i = 0; i < ta.size(); ++i) out[i] = ta[i] - tb[i];
    return push(std::move(out), rg(a) || rg(b), [a, b](Tape& t, int id) {
        const Tensor& g = t.out_grad(id);
        if (t.rg(a)) {
            Tensor& ga = t.grad_of(a.id);
            for (int i = 0; i < g.size(); ++i) ga[i] += g[i];
        }
        if (t.rg(b)) {
            Tensor& gb = t.grad_of(b.id);
            for (int i = 0; i < g.size(); ++i) gb[i] -= g[i];
        }
    });
}

Var Tape::mul(Var a, Var b) {
    const Tensor &ta = val(a), &tb = val(b);
    check_same_shape(ta, tb, "mul");
    Tensor out(ta.shape());
    for (int i = 0; i < ta.size(); ++i) out[i] = ta[i] * tb[i];
    return push(std::move(out), rg(a) || rg(b), [a, b](Tape& t, int id) {
        const Tensor& g = t.out_grad(id);
        const Tensor &ta = t.val(a), &tb = t.val(b);
        if (t.rg(a)) {
            Tensor& ga = t.grad_of(a.id);
            for (int i = 0; i < g.size(); ++i) ga[i] += g[i] * tb[i];
        }
        if (t.rg(b)) {
            Tensor& gb = t.grad_of(b.id);
            for (int i = 0; i < g.size(); ++i) gb[i] += g[i] * ta[i];
        }
    });
}

Var Tape::div(Var a, Var b) {
    const Tensor &ta = val(a), &tb = val(b);
    check_same_shape(ta, tb, "div");
    Tensor out(ta.shape());
    for (int i = 0; i < ta.size(); ++i) out[i] = ta[i] / tb[i];
    return push(std::move(out), rg(a) || rg(b), [a, b](Tape& t, int id) {
        const Tensor& g = t.out_grad(id);
        const Tensor &ta = t.val(a), &tb = t.val(b);
        if (t.rg(a)) {
            Tensor& ga = t.grad_of(a.id);
            for (int i = 0; i < g.size(); ++i) ga[i] += g[i] / tb[i];
        }
        if (t.rg(b)) {
            Tensor& gb = t.grad_of(b.id);
            for (int i = 0; i < g.size(); ++i) gb[i] -= g[i] * ta[i] / (tb[i] * tb[i]);
        }
    });
}

Var Tape::add_scalar(Var a, double c) {
    const Tensor& ta = val(a);
    Tensor out(ta.shape());
    for (int i = 0; i < ta.size(); ++i) out[i] = ta[i] + c;
    return push(std::move(out), rg(a), [a](Tape& t, int id) {
        const Tensor& g = t.out_grad(id);
        Tensor& ga = t.grad_of(a.id);
        for (int i = 0; i < g.size(); ++i) ga[i] += g[i];
    });
}

Var Tape::mul_scalar(Var a, double c) {
    const Tensor& ta = val(a);
    Tensor out(ta.shape());
    for (int i = 0; i < ta.size(); ++i) out[i] = ta[i] * c;
    return push(std::move(out), rg(a), [a, c](Tape& t, int id) {
        const Tensor& g = t.out_grad(id);
        Tensor& ga = t.grad_of(a.id);
        for (int i = 0; i < g.size(); ++i) ga[i] += g[i] * c;
    });
}

Var Tape::matvec(Var w, Var x) {
    const Tensor &tw = val(w), &tx = val(x);
    if (tw.shape().size() != 2 || tw.shape()[1] != tx.size())
        throw ContractError("matvec: shape mismatch");
    int m = tw.shape()[0], n = tw.shape()[1];
    Tensor out({m});
    for (int i = 0; i < m; ++i) {
        double s = 0.0;
        for (int j = 0; j < n; ++j) s += tw.at2(i, j) * tx[j];
        out[i] = s;
    }
    return push(std::move(out), rg(w) || rg(x), [w, x, m, n](Tape& t, int id) {
        const Tensor& g = t.out_grad(id);
        const Tensor &tw = t.val(w), &tx = t.val(x);
        if (t.rg(w)) {
            Tensor& gw = t.grad_of(w.id);
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < n; ++j) gw.at2(i, j) += g[i] * tx[j];
        }
        if (t.rg(x)) {
            Tensor& gx = t.grad_of(x.id);
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < n; ++j) gx[j] += g[i] * tw.at2(i, j);
        }
    });
}

Var Tape::masked_affine(Var w, const Tensor& mask, Var x, Var b) {
    const Tensor &tw = val(w), &tx = val(x), &tb = val(b);
    if (tw.shape().size() != 2 || tw.shape()[1] != tx.size() || tb.size() != tw.shape()[0] ||
        !tw.same_shape(mask))
        throw ContractError("masked_affine: shape mismatch");
    int m = tw.shape()[0], n = tw.shape()[1];
    Tensor out({m});
    for (int i = 0; i < m; ++i) {
        double s = tb[i];
        for (int j = 0; j < n; ++j) s += tw.at2(i, j) * mask.at2(i, j) * tx[j];
        out[i] = s;
    }
    Tensor mask_copy = mask;
    return push(std::move(out), rg(w) || rg(x) || rg(b),
                [w, x, b, m, n, mk = std::move(mask_copy)](Tape& t, int id) {
                    const Tensor& g = t.out_grad(id);
                    const Tensor &tw = t.val(w), &tx = t.val(x);
                    if (t.rg(w)) {
                        Tensor& gw = t.grad_of(w.id);
                        for (int i = 0; i < m; ++i)
                            for (int j = 0; j < n; ++j)
                                gw.at2(i, j) += g[i] * mk.at2(i, j) * tx[j];
                    }
                    if (t.rg(x)) {
                        Tensor& gx = t.grad_of(x.id);
                        for (int i = 0; i < m; ++i)
                            for (int j = 0; j < n; ++j)
                                gx[j] += g[i] * tw.at2(i, j) * mk.at2(i, j);
                    }
                    if (t.rg(b)) {
                        Tensor& gb = t.grad_of(b.id);
                        for (int i = 0; i < m; ++i) gb[i] += g[i];
                    }
                });
}

Var Tape::tanh_(Var a) {
    const Tensor& ta = val(a);
    Tensor out(ta.shape());
    for (int i = 0; i < ta.size(); ++i) out[i] = std::tanh(ta[i]);
    return push(std::move(out), rg(a), [a](Tape& t, int id) {
        const Tensor &g = t.out_grad(id), &y = t.val(Var{id});
        Tensor& ga = t.grad_of(a.id);
        for (int i = 0; i < g.size(); ++i) ga[i] += g[i] * (1.0 - y[i] * y[i]);
    });
}

Var Tape::sigmoid_(Var a) {
    const Tensor& ta = val(a);
    Tensor out(ta.shape());
    for (int i = 0; i < ta.size(); ++i) {
        double x = ta[i];
        out[i] = x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
    }
    return push(std::move(out), rg(a), [a](Tape& t, int id) {
        const Tensor &g = t.out_grad(id), &y = t.val(Var{id});
        Tensor& ga = t.grad_of(a.id);
        for (int i = 0; i < g.size(); ++i) ga[i] += g[i] * y[i] * (1.0 - y[i]);
    });
}

Var Tape::exp_(Var a) {
    const Tensor& ta = val(a);
    Tensor out(ta.shape());
    for (int i = 0; i < ta.size(); ++i) out[i] = std::exp(ta[i]);
    return push(std::move(out), rg(a), [a](Tape& t, int id) {
        const Tensor &g = t.out_grad(id), &y = t.val(Var{id});
        Tensor& ga = t.grad_of(a.id);
        for (int i = 0; i < g.size(); ++i) ga[i] += g[i] * y[i];
    });
}

Var Tape::log_(Var a) {
    const Tensor& ta = val(a);
    Tensor out(ta.shape());
    for (int i = 0; i < ta.size(); ++i) out[i] = std::log(ta[i]);
    return push(std::move(out), rg(a), [a](Tape& t, int id) {
        const Tensor& g = t.out_grad(id);
        const Tensor& ta = t.val(a);
        Tensor& ga = t.grad_of(a.id);
        for (int i = 0; i < g.size(); ++i) ga[i] += g[i] / ta[i];
    });
}

Var Tape::sqrt_(Var a) {
    const Tensor& ta = val(a);
    Tensor out(ta.shape());
    for (int i = 0; i < ta.size(); ++i) out[i] = std::sqrt(ta[i]);
    return push(std::move(out), rg(a), [a](Tape& t, int id) {
        const Tensor &g = t.out_grad(id), &y = t.val(Var{id});
        Tensor& ga = t.grad_of(a.id);
        for (int i = 0; i < g.size(); ++i) ga[i] += g[i] * 0.5 / y[i];
    });
}

Var Tape::clamp_min(Var a, double lo) {
    const Tensor& ta = val(a);
    Tensor out(ta.shape());
    for (int i = 0; i < ta.size(); ++i) out[i] = std::max(ta[i], lo);
    return push(std::move(out), rg(a), [a, lo](Tape& t, int id) {
        const Tensor& g = t.out_grad(id);
        const Tensor& ta = t.val(a);
        Tensor& ga = t.grad_of(a.id);
        for (int i = 0; i < g.size(); ++i)
            if (ta[i] > lo) ga[i] += g[i];
    });
}

Var Tape::clamp(Var a, double lo, double hi) {
    const Tensor& ta = val(a);
    Tensor out(ta.shape());
    for (int i = 0; i < ta.size(); ++i) out[i] = std::min(std::max(ta[i], lo), hi);
    return push(std::move(out), rg(a), [a, lo, hi](Tape& t, int id) {
        const Tensor& g = t.out_grad(id);
        const Tensor& ta = t.val(a);
        Tensor& ga = t.grad_of(a.id);
        for (int i = 0; i < g.size(); ++i)
            if (ta[i] > lo && ta[i] < hi) ga[i] += g[i];
    });
}

Var Tape::softmax(Var v) {
    const Tensor& tv = val(v);
    Tensor out(tv.shape());
    double m = tv[0];
    for (int i = 1; i < tv.size(); ++i) m = std::max(m, tv[i]);
    double s = 0.0;
    for (int i = 0; i < tv.size(); ++i) {
        out[i] = std::exp(tv[i] - m);
        s += out[i];
    }
    for (int i = 0; i < tv.size(); ++i) out[i] /= s;
    return push(std::move(out), rg(v), [v](Tape& t, int id) {
        const Tensor &g = t.out_grad(id), &y = t.val(Var{id});
        Tensor& gv = t.grad_of(v.id);
        double dot = 0.0;
        for (int i = 0; i < g.size(); ++i) dot += g[i] * y[i];
        for (int i = 0; i < g.size(); ++i) gv[i] += y[i] * (g[i] - dot);
    });
}

Var Tape::cumsum(Var v) {
    const Tensor& tv = val(v);
    Tensor out(tv.shape());
    double s = 0.0;
    for (int i = 0; i < tv.size(); ++i) {
        s += tv[i];
        out[i] = s;
    }
    return push(std::move(out), rg(v), [v](Tape& t, int id) {
        const Tensor& g = t.out_grad(id);
        Tensor& gv = t.grad_of(v.id);
        double s = 0.0;
        for (int i = g.size() - 1; i >= 0; --i) {
            s += g[i];
            gv[i] += s;
        }
    });
}

Var Tape::sum(Var v) {
    const Tensor& tv = val(v);
    double s = 0.0;
    for (int i = 0; i < tv.size(); ++i) s += tv[i];
    return push(Tensor::scalar(s), rg(v), [v](Tape& t, int id) {
        double g = t.out_grad(id)[0];
        Tensor& gv = t.grad_of(v.id);
        for (int i = 0; i < gv.size(); ++i) gv[i] += g;
    });
}

Var Tape::slice(Var v, int offset, int len) {
    const Tensor& tv = val(v);
    if (offset < 0 || len < 0 || offset + len > tv.size())
        throw ContractError("slice: out of range");
    Tensor out({len});
    for (int i = 0; i < len; ++i) out[i] = tv[offset + i];
    return push(std::move(out), rg(v), [v, offset, len](Tape& t, int id) {
        const Tensor& g = t.out_grad(id);
        Tensor& gv = t.grad_of(v.id);
        for (int i = 0; i < len; ++i) gv[offset + i] += g[i];
    });
}

Var Tape::gather(Var v, int index) {
    const Tensor& tv = val(v);
    if (index < 0 || index >= tv.size()) throw ContractError("gather: out of range");
    return push(Tensor::scalar(tv[index]), rg(v), [v, index](Tape& t, int id) {
        t.grad_of(v.id)[index] += t.out_grad(id)[0];
    });
}

Var Tape::pack(const std::vector<Var>& scalars) {
    Tensor out({static_cast<int>(scalars.size())});
    bool any_rg = false;
    for (size_t i = 0; i < scalars.size(); ++i) {
        out[static_cast<int>(i)] = scalar(scalars[i]);
        any_rg = any_rg || rg(scalars[i]);
    }
    std::vector<Var> parents = scalars;
    return push(std::move(out), any_rg, [parents](Tape& t, int id) {
        const Tensor& g = t.out_grad(id);
        for (size_t i = 0; i < parents.size(); ++i)
            if (t.rg(parents[i])) t.grad_of(parents[i].id)[0] += g[static_cast<int>(i)];
    });
}

Var Tape::broadcast(Var s, int n) {
    Tensor out({n}, scalar(s));
    return push(std::move(out), rg(s), [s](Tape& t, int id) {
        const Tensor& g = t.out_grad(id);
        double acc = 0.0;
        for (int i = 0; i < g.size(); ++i) acc += g[i];
        t.grad_of(s.id)[0] += acc;
    });
}

std::vector<Tensor> Tape::grad(Var loss, const std::vector<Var>& params) {
    if (!grad_enabled_) throw ContractError("grad on a non-recording tape");
    if (val(loss).size() != 1) throw ContractError("grad: loss must be scalar");
    grads_.assign(nodes_.size(), Tensor());
    grads_[loss.id] = Tensor::scalar(1.0);
    for (int id = loss.id; id >= 0; --id) {
        if (!has_grad(id)) continue;
        Node& n = nodes_[id];
        if (n.backward) n.backward(*this, id);
    }
    std::vector<Tensor> out;
    out.reserve(params.size());
    for (Var p : params) {
        if (has_grad(p.id))
            out.push_back(std::move(grads_[p.id]));
        else
            out.push_back(Tensor(nodes_[p.id].value.shape()));
    }
    clear();
    return out;
}

void Tape::clear() {
    nodes_.clear();
    grads_.clear();
}

}  // namespace subsetflow
