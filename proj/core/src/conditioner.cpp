#include "subsetflow/conditioner.hpp"

#include <cmath>

#include "subsetflow/errors.hpp"

namespace subsetflow {

MaskedDenseNet::MaskedDenseNet(ParamStore& store, const std::string& prefix, int in_dim,
                               int out_per_dim, const std::vector<int>& hidden,
                               const std::vector<int>& positions, Rng& init_rng, bool zero_last) {
    int D = in_dim;
    if (static_cast<int>(positions.size()) != D)
        throw ContractError("conditioner: positions size must equal input dim");
    in_dim_ = D;
    out_per_dim_ = out_per_dim;
    out_dim_ = D * out_per_dim;

    // Input degree of dimension d is its 1-based autoregressive position.
    std::vector<int> in_deg(D);
    for (int d = 0; d < D; ++d) in_deg[d] = positions[d] + 1;

    std::vector<int> widths;
    widths.push_back(D);
    for (int h : hidden) widths.push_back(h);
    widths.push_back(out_dim_);

    // Hidden degrees cycle over 1..D-1; with D == 1 every connection from the
    // input is cut and the outputs are functions of the biases alone.
    std::vector<std::vector<int>> degrees(widths.size());
    degrees[0] = in_deg;
    for (size_t l = 1; l + 1 < widths.size(); ++l) {
        degrees[l].resize(widths[l]);
        for (int k = 0; k < widths[l]; ++k)
            degrees[l][k] = D > 1 ? (k % (D - 1)) + 1 : 0;
    }

    masks_.clear();
    for (size_t l = 1; l < widths.size(); ++l) {
        Tensor mask({widths[l], widths[l - 1]}, 0.0);
        bool last = (l + 1 == widths.size());
        for (int r = 0; r < widths[l]; ++r) {
            for (int c = 0; c < widths[l - 1]; ++c) {
                bool connect;
                if (last) {
                    int d = r / out_per_dim;
                    connect = in_deg[d] > degrees[l - 1][c];
                } else {
                    connect = degrees[l][r] >= degrees[l - 1][c];
                }
                if (connect) mask.at2(r, c) = 1.0;
            }
        }
        masks_.push_back(std::move(mask));
    }
    build(store, prefix, widths, init_rng, zero_last);
}

MaskedDenseNet::MaskedDenseNet(ParamStore& store, const std::string& prefix, int in_dim,
                               int out_total, const std::vector<int>& hidden, Rng& init_rng,
                               bool zero_last) {
    in_dim_ = in_dim;
    out_per_dim_ = 0;
    out_dim_ = out_total;
    std::vector<int> widths;
    widths.push_back(in_dim);
    for (int h : hidden) widths.push_back(h);
    widths.push_back(out_total);
    masks_.clear();
    for (size_t l = 1; l < widths.size(); ++l)
        masks_.push_back(Tensor({widths[l], widths[l - 1]}, 1.0));
    build(store, prefix, widths, init_rng, zero_last);
}

void MaskedDenseNet::build(ParamStore& store, const std::string& prefix,
                           const std::vector<int>& widths, Rng& init_rng, bool zero_last) {
    for (size_t l = 1; l < widths.size(); ++l) {
        int rows = widths[l], cols = widths[l - 1];
        Tensor w({rows, cols});
        bool last = (l + 1 == widths.size());
        if (!(last && zero_last)) {
            double a = 1.0 / std::sqrt(static_cast<double>(cols));
            for (int i = 0; i < w.size(); ++i) w[i] = init_rng.uniform(-a, a);
        }
        Tensor b({rows});
        w_idx_.push_back(store.add(prefix + ".w" + std::to_string(l), std::move(w)));
        b_idx_.push_back(store.add(prefix + ".b" + std::to_string(l), std::move(b)));
    }
}

Var MaskedDenseNet::forward(Tape& tape, const std::vector<Var>& bound, Var input) const {
    Var h = input;
    for (size_t l = 0; l < w_idx_.size(); ++l) {
        h = tape.masked_affine(bound[w_idx_[l]], masks_[l], h, bound[b_idx_[l]]);
        if (l + 1 < w_idx_.size()) h = tape.tanh_(h);
    }
    return h;
}

std::vector<double> MaskedDenseNet::forward_plain(const ParamStore& store,
                                                  const std::vector<double>& input) const {
    Tape t(false);
    std::vector<Var> bound = store.bind(t);
    Var out = forward(t, bound, t.leaf(Tensor::vec(input), false));
    const Tensor& v = t.val(out);
    return std::vector<double>(v.data(), v.data() + v.size());
}

}  // namespace subsetflow
