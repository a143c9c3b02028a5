#include <algorithm>
#include <cmath>

#include "subsetflow/errors.hpp"
#include "subsetflow/transforms.hpp"

namespace subsetflow {

TapeTransform::TapeTransform(Tape& tape, const TransformSpec& spec, Var raw_block)
    : tape_(&tape), spec_(spec) {
    Tape& t = tape;
    if (t.val(raw_block).size() != transform_param_count(spec))
        throw ContractError("transform raw parameter block has wrong size");
    switch (spec.family) {
        case TransformFamily::Linear: {
            pi_ = t.softmax(raw_block);
            cumz_ = t.cumsum(pi_);
            break;
        }
        case TransformFamily::Quadratic: {
            int B = spec.bins;
            Var wl = t.slice(raw_block, 0, B);
            Var vl = t.slice(raw_block, B, B + 1);
            w_ = t.mul_scalar(t.softmax(wl), spec.domain);
            double vmax = t.val(vl)[0];
            for (int k = 0; k <= B; ++k) vmax = std::max(vmax, t.val(vl)[k]);
            Var ev = t.exp_(t.add_scalar(vl, -vmax));
            Var avg = t.mul_scalar(t.add(t.slice(ev, 0, B), t.slice(ev, 1, B)), 0.5);
            Var masses_un = t.mul(avg, w_);
            Var denom = t.sum(masses_un);
            v_ = t.div(ev, t.broadcast(denom, B + 1));
            masses_ = t.div(masses_un, t.broadcast(denom, B));
            cum_masses_ = t.cumsum(masses_);
            knots_ = t.cumsum(w_);  // knots_[k] holds y_{k+1}
            break;
        }
        case TransformFamily::Mol: {
            int M = spec.bins;
            double Q = spec.domain;
            pi_ = t.softmax(t.slice(raw_block, 0, M));
            mu_ = t.add_scalar(t.mul_scalar(t.slice(raw_block, M, M), 0.25 * Q), 0.5 * Q);
            Var c = t.clamp(t.slice(raw_block, 2 * M, M), -10.0, 10.0);
            s_ = t.add_scalar(t.mul_scalar(t.exp_(c), Q / 8.0), kMolScaleFloor);
            if (!spec.absorb_tails) {
                Var f0 = forward_cdf_raw(t.constant(0.0));
                Var f1 = forward_cdf_raw(t.constant(spec.domain));
                trunc_lo_ = f0;
                trunc_width_ = t.sub(f1, f0);
            }
            break;
        }
    }
}

int TapeTransform::bin_of_y(double y) const {
    if (spec_.family == TransformFamily::Linear) {
        int K = spec_.bins;
        int k = static_cast<int>(std::floor(y * K / spec_.domain));
        return std::min(std::max(k, 0), K - 1);
    }
    const Tensor& kn = tape_->val(knots_);
    int B = spec_.bins;
    int k = 0;
    while (k < B - 1 && y >= kn[k]) ++k;
    return k;
}

Var TapeTransform::mol_endpoint_terms(Var y) const {
    Tape& t = *tape_;
    int M = spec_.bins;
    double yv = t.scalar(y);
    if (spec_.absorb_tails) {
        if (yv <= 0.0) return t.leaf(Tensor({M}, 0.0), false);
        if (yv >= spec_.domain) return t.leaf(Tensor({M}, 1.0), false);
    }
    double shift = spec_.absorb_tails ? 0.5 : 0.0;
    Var u = t.div(t.sub(t.broadcast(t.add_scalar(y, -shift), M), mu_), s_);
    return t.sigmoid_(u);
}

Var TapeTransform::forward_cdf_raw(Var y) const {
    Tape& t = *tape_;
    int M = spec_.bins;
    double shift = spec_.absorb_tails ? 0.5 : 0.0;
    Var u = t.div(t.sub(t.broadcast(t.add_scalar(y, -shift), M), mu_), s_);
    return t.sum(t.mul(pi_, t.sigmoid_(u)));
}

Var TapeTransform::forward(Var y) const {
    Tape& t = *tape_;
    double yv = t.scalar(y);
    switch (spec_.family) {
        case TransformFamily::Linear: {
            int k = bin_of_y(yv);
            double wq = spec_.domain / spec_.bins;
            Var term = t.mul(t.gather(pi_, k),
                             t.mul_scalar(t.add_scalar(y, -(k * wq)), 1.0 / wq));
            return k > 0 ? t.add(t.gather(cumz_, k - 1), term) : term;
        }
        case TransformFamily::Quadratic: {
            int k = bin_of_y(yv);
            Var yk = k > 0 ? t.gather(knots_, k - 1) : t.constant(0.0);
            Var wk = t.gather(w_, k);
            Var vk = t.gather(v_, k);
            Var dv = t.sub(t.gather(v_, k + 1), vk);
            Var a = t.div(t.sub(y, yk), wk);
            Var inner = t.add(t.mul(a, vk), t.mul_scalar(t.mul(t.mul(a, a), dv), 0.5));
            Var term = t.mul(wk, inner);
            return k > 0 ? t.add(t.gather(cum_masses_, k - 1), term) : term;
        }
        case TransformFamily::Mol: {
            if (spec_.absorb_tails) {
                if (yv <= 0.0) return t.constant(0.0);
                if (yv >= spec_.domain) return t.constant(1.0);
                return forward_cdf_raw(y);
            }
            return t.div(t.sub(forward_cdf_raw(y), trunc_lo_), trunc_width_);
        }
    }
    throw ContractError("unknown transform family");
}

Var TapeTransform::quad_partial_from_lower(Var y, int k) const {
    Tape& t = *tape_;
    Var yk = k > 0 ? t.gather(knots_, k - 1) : t.constant(0.0);
    Var wk = t.gather(w_, k);
    Var vk = t.gather(v_, k);
    Var dv = t.sub(t.gather(v_, k + 1), vk);
    Var a = t.div(t.sub(y, yk), wk);
    return t.mul(t.sub(y, yk), t.add(vk, t.mul_scalar(t.mul(a, dv), 0.5)));
}

Var TapeTransform::quad_partial_to_upper(Var y, int k) const {
    Tape& t = *tape_;
    Var yk = k > 0 ? t.gather(knots_, k - 1) : t.constant(0.0);
    Var yk1 = t.gather(knots_, k);
    Var wk = t.gather(w_, k);
    Var vk = t.gather(v_, k);
    Var dv = t.sub(t.gather(v_, k + 1), vk);
    Var a = t.div(t.sub(y, yk), wk);
    Var half = t.mul_scalar(t.add_scalar(a, 1.0), 0.5);
    return t.mul(t.sub(yk1, y), t.add(vk, t.mul(half, dv)));
}

Var TapeTransform::interval_width(Var lower, Var upper) const {
    Tape& t = *tape_;
    double lv = t.scalar(lower), uv = t.scalar(upper);
    if (lv > uv) throw ContractError("interval lower > upper");
    switch (spec_.family) {
        case TransformFamily::Linear: {
            int ka = bin_of_y(lv), kb = bin_of_y(uv);
            double scale = spec_.bins / spec_.domain;
            double wq = spec_.domain / spec_.bins;
            if (ka == kb)
                return t.mul(t.gather(pi_, ka), t.mul_scalar(t.sub(upper, lower), scale));
            Var width = t.mul(t.gather(pi_, ka),
                              t.mul_scalar(t.add_scalar(t.neg(lower), (ka + 1) * wq), scale));
            if (kb - ka > 1) width = t.add(width, t.sum(t.slice(pi_, ka + 1, kb - ka - 1)));
            Var pb = t.mul(t.gather(pi_, kb),
                           t.mul_scalar(t.add_scalar(upper, -(kb * wq)), scale));
            return t.add(width, pb);
        }
        case TransformFamily::Quadratic: {
            int ka = bin_of_y(lv), kb = bin_of_y(uv);
            if (ka == kb) {
                Var yk = ka > 0 ? t.gather(knots_, ka - 1) : t.constant(0.0);
                Var wk = t.gather(w_, ka);
                Var vk = t.gather(v_, ka);
                Var dv = t.sub(t.gather(v_, ka + 1), vk);
                Var al = t.div(t.sub(lower, yk), wk);
                Var au = t.div(t.sub(upper, yk), wk);
                Var mid = t.mul_scalar(t.add(al, au), 0.5);
                return t.mul(t.sub(upper, lower), t.add(vk, t.mul(mid, dv)));
            }
            Var width = quad_partial_to_upper(lower, ka);
            if (kb - ka > 1) width = t.add(width, t.sum(t.slice(masses_, ka + 1, kb - ka - 1)));
            return t.add(width, quad_partial_from_lower(upper, kb));
        }
        case TransformFamily::Mol: {
            Var terms = t.sub(mol_endpoint_terms(upper), mol_endpoint_terms(lower));
            Var width = t.sum(t.mul(pi_, terms));
            return spec_.absorb_tails ? width : t.div(width, trunc_width_);
        }
    }
    throw ContractError("unknown transform family");
}

Var TapeTransform::log_deriv(Var y) const {
    Tape& t = *tape_;
    double yv = t.scalar(y);
    switch (spec_.family) {
        case TransformFamily::Linear: {
            int k = bin_of_y(yv);
            return t.log_(t.mul_scalar(t.gather(pi_, k), spec_.bins / spec_.domain));
        }
        case TransformFamily::Quadratic: {
            int k = bin_of_y(yv);
            Var yk = k > 0 ? t.gather(knots_, k - 1) : t.constant(0.0);
            Var wk = t.gather(w_, k);
            Var vk = t.gather(v_, k);
            Var dv = t.sub(t.gather(v_, k + 1), vk);
            Var a = t.div(t.sub(y, yk), wk);
            return t.log_(t.clamp_min(t.add(vk, t.mul(a, dv)), 1e-300));
        }
        case TransformFamily::Mol: {
            int M = spec_.bins;
            double shift = spec_.absorb_tails ? 0.5 : 0.0;
            Var u = t.div(t.sub(t.broadcast(t.add_scalar(y, -shift), M), mu_), s_);
            Var sg = t.sigmoid_(u);
            Var one_minus = t.add_scalar(t.neg(sg), 1.0);
            Var comp = t.div(t.mul(sg, one_minus), s_);
            Var pdf = t.sum(t.mul(pi_, comp));
            Var lp = t.log_(t.clamp_min(pdf, 1e-300));
            return spec_.absorb_tails ? lp : t.sub(lp, t.log_(trunc_width_));
        }
    }
    throw ContractError("unknown transform family");
}

}  // namespace subsetflow
