#include "subsetflow/commands.hpp"

#include <cmath>
#include <cstdio>

#include "subsetflow/errors.hpp"
#include "subsetflow/numerics.hpp"
#include "subsetflow/oracle.hpp"
#include "subsetflow/train.hpp"

namespace subsetflow {

namespace {

std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string fmt3(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.3f", v);
    return buf;
}

Dequantizer eval_dequantizer(const Checkpoint& ck) {
    if (ck.dequantizer) return *ck.dequantizer;
    return Dequantizer::uniform(ck.config.model.D, ck.config.model.K);
}

// Per-sample bound estimate in nats: mean of `draws` independent estimates of
// IWBO(k) (k=1 is the ELBO), draw j on sample_stream.split(j).
double bound_estimate(const SubsetFlowModel& model, const Dequantizer& deq,
                      std::span<const int> x, int k, int draws, const Rng& sample_stream) {
    double acc = 0.0;
    for (int j = 0; j < draws; ++j)
        acc += iwbo_sample(model, deq, x, k, sample_stream.split(static_cast<uint64_t>(j)));
    return acc / draws;
}

struct EstimatorSpec {
    std::string name;  // "exact", "elbo", "iwbo"
    int k = 1;
};

std::vector<EstimatorSpec> expand_estimators(const std::vector<std::string>& estimators,
                                             const std::vector<int>& k_list) {
    std::vector<EstimatorSpec> out;
    for (const std::string& e : estimators) {
        if (e == "exact" || e == "elbo") {
            out.push_back({e, 1});
        } else if (e == "iwbo") {
            for (int k : k_list) out.push_back({e, k});
        } else {
            throw ConfigError("unknown estimator '" + e + "'");
        }
    }
    return out;
}

}  // namespace

void cmd_gen_toy(const std::string& kind, uint32_t n, uint32_t d, uint32_t k, double tau,
                 uint64_t seed, const std::string& out_path, std::ostream& log) {
    if (k > 256) throw ConfigError("gen-toy: K must be <= 256");
    if (k < 2) throw ConfigError("gen-toy: K must be >= 2");
    if (d < 1) throw ConfigError("gen-toy: D must be >= 1");
    OrdinalDataset ds;
    if (kind == "independent-categorical") {
        ds = gen_independent(n, d, k, seed);
        log << "# entropy " << fmt3(independent_entropy_bits_per_dim(k)) << " bits/dim\n";
    } else if (kind == "markov-chain") {
        ds = gen_markov(n, d, k, tau, seed);
        log << "# entropy " << fmt3(markov_entropy_bits_per_dim(d, k, tau)) << " bits/dim\n";
    } else if (kind == "quantized-gaussian-mixture") {
        ds = gen_qgauss(n, d, k, seed);
    } else {
        throw ConfigError("gen-toy: unknown kind '" + kind + "'");
    }
    save_dataset(ds, out_path);
    log << "# wrote " << n << " samples (D=" << d << ", K=" << k << ") to " << out_path << "\n";
}

void cmd_train(const std::string& config_path, const std::string& data_path,
               const std::string& out_path, std::ostream& log) {
    RunConfig cfg = load_run_config(config_path);
    OrdinalDataset data = load_dataset(data_path);
    finalize_run_config(cfg, static_cast<int>(data.D), static_cast<int>(data.K));
    Checkpoint ck = init_checkpoint(cfg);
    train(ck, data, [&](const EpochLog& e) {
        log << "# epoch " << e.epoch << ": " << fmt3(e.bits_per_dim) << " bits/dim\n";
    });
    save_checkpoint(ck, out_path);
    log << "# saved checkpoint to " << out_path << "\n";
}

void cmd_eval(const std::string& ckpt_path, const std::string& data_path,
              const std::vector<std::string>& estimators, const std::vector<int>& k_list,
              int mc_samples, uint64_t seed, std::ostream& out) {
    Checkpoint ck = load_checkpoint(ckpt_path);
    OrdinalDataset data = load_dataset(data_path);
    if (static_cast<int>(data.D) != ck.config.model.D ||
        static_cast<int>(data.K) != ck.config.model.K)
        throw ConfigError("eval: dataset shape does not match the checkpoint");
    if (mc_samples < 1) throw ConfigError("eval: mc-samples must be >= 1");
    Dequantizer deq = eval_dequantizer(ck);
    const SubsetFlowModel& model = *ck.model;
    int D = ck.config.model.D;
    Rng root(seed);
    for (const EstimatorSpec& est : expand_estimators(estimators, k_list)) {
        if (est.name == "exact" && !model.exact_capable())
            throw ConfigError(
                "estimator 'exact' requires bin conditioning and a shared autoregressive order");
        std::vector<double> bits(data.N);
        for (uint32_t i = 0; i < data.N; ++i) {
            std::vector<int> x = data.sample_ints(i);
            double nats;
            if (est.name == "exact") {
                nats = model.exact_log_likelihood(x);
            } else {
                int k = est.name == "elbo" ? 1 : est.k;
                int draws = std::max(1, mc_samples / k);
                nats = bound_estimate(model, deq, x, k, draws, root.split(i));
            }
            bits[i] = nats_to_bits_per_dim(nats, D);
        }
        MeanStderr ms = mean_stderr(bits);
        std::string label = est.name == "iwbo" ? "iwbo(" + std::to_string(est.k) + ")" : est.name;
        out << "# " << label << ": " << fmt3(ms.mean) << " bits/dim (SE " << fmt3(ms.stderr_)
            << ")\n";
        out << est.name << "," << (est.name == "exact" ? 0 : est.k) << "," << fmt17(ms.mean)
            << "," << fmt17(ms.stderr_) << "\n";
    }
}

void cmd_sample(const std::string& ckpt_path, uint32_t n, uint64_t seed,
                const std::string& out_path, std::ostream& log) {
    Checkpoint ck = load_checkpoint(ckpt_path);
    OrdinalDataset ds;
    ds.N = n;
    ds.D = static_cast<uint32_t>(ck.config.model.D);
    ds.K = static_cast<uint32_t>(ck.config.model.K);
    ds.data.resize(static_cast<size_t>(n) * ds.D);
    Rng root(seed);
    for (uint32_t i = 0; i < n; ++i) {
        Rng s = root.split(i);
        std::vector<int> x = ck.model->sample(s);
        for (uint32_t d = 0; d < ds.D; ++d)
            ds.data[static_cast<size_t>(i) * ds.D + d] = static_cast<uint8_t>(x[d]);
    }
    save_dataset(ds, out_path);
    log << "# wrote " << n << " samples to " << out_path << "\n";
}

void cmd_gap(const std::string& ckpt_path, const std::string& data_path, int mc_samples,
             const std::vector<int>& k_list, uint64_t seed, std::ostream& out) {
    Checkpoint ck = load_checkpoint(ckpt_path);
    OrdinalDataset data = load_dataset(data_path);
    if (static_cast<int>(data.D) != ck.config.model.D ||
        static_cast<int>(data.K) != ck.config.model.K)
        throw ConfigError("gap: dataset shape does not match the checkpoint");
    if (!ck.model->exact_capable())
        throw ConfigError(
            "gap reports require bin conditioning and a shared autoregressive order");
    if (mc_samples < 1) throw ConfigError("gap: mc-samples must be >= 1");
    Dequantizer deq = eval_dequantizer(ck);
    const SubsetFlowModel& model = *ck.model;
    int D = ck.config.model.D;
    double ln2 = std::log(2.0);
    Rng root(seed);
    std::vector<int> ks;
    ks.push_back(1);  // ELBO
    for (int k : k_list) ks.push_back(k);
    for (int k : ks) {
        std::vector<double> gaps(data.N);
        for (uint32_t i = 0; i < data.N; ++i) {
            std::vector<int> x = data.sample_ints(i);
            double exact = model.exact_log_likelihood(x);
            int draws = std::max(1, mc_samples / k);
            double bound = bound_estimate(model, deq, x, k, draws, root.split(i));
            gaps[i] = (exact - bound) / (D * ln2);
        }
        MeanStderr ms = mean_stderr(gaps);
        std::string name = k == 1 ? "elbo" : "iwbo";
        std::string label = k == 1 ? "gap(elbo)" : "gap(iwbo(" + std::to_string(k) + "))";
        out << "# " << label << ": " << fmt3(ms.mean) << " bits/dim (SE " << fmt3(ms.stderr_)
            << ")\n";
        out << "gap-" << name << "," << k << "," << fmt17(ms.mean) << "," << fmt17(ms.stderr_)
            << "\n";
    }
}

void cmd_interpolate(const std::string& ckpt_path, const std::string& data_path, uint32_t idx_a,
                     uint32_t idx_b, int steps, uint64_t seed, const std::string& out_path,
                     std::ostream& out) {
    Checkpoint ck = load_checkpoint(ckpt_path);
    OrdinalDataset data = load_dataset(data_path);
    if (static_cast<int>(data.D) != ck.config.model.D ||
        static_cast<int>(data.K) != ck.config.model.K)
        throw ConfigError("interpolate: dataset shape does not match the checkpoint");
    if (idx_a >= data.N || idx_b >= data.N)
        throw ConfigError("interpolate: sample index out of range");
    Rng rng(seed);
    std::vector<int> xa = data.sample_ints(idx_a);
    std::vector<int> xb = data.sample_ints(idx_b);
    std::vector<std::vector<int>> path = ck.model->interpolate(xa, xb, steps, rng);
    OrdinalDataset ds;
    ds.N = static_cast<uint32_t>(path.size());
    ds.D = data.D;
    ds.K = data.K;
    ds.data.resize(static_cast<size_t>(ds.N) * ds.D);
    for (uint32_t i = 0; i < ds.N; ++i) {
        for (uint32_t d = 0; d < ds.D; ++d)
            ds.data[static_cast<size_t>(i) * ds.D + d] = static_cast<uint8_t>(path[i][d]);
    }
    save_dataset(ds, out_path);
    for (uint32_t i = 0; i < ds.N; ++i) {
        out << "step " << i << ":";
        for (int v : path[i]) out << " " << v;
        out << "\n";
    }
}

void cmd_oracle_normalize(const std::string& ckpt_path, std::ostream& out) {
    Checkpoint ck = load_checkpoint(ckpt_path);
    double total = enumerate_normalization(*ck.model);
    out << "total_probability," << fmt17(total) << "\n";
    if (std::abs(total - 1.0) > 1e-6)
        throw NumericError("enumerated probability mass deviates from 1: " + fmt17(total));
}

void cmd_oracle_mvdmol(uint64_t seed, int trials, std::ostream& out) {
    if (trials < 1) throw ConfigError("oracle mvdmol: trials must be >= 1");
    Rng root(seed);
    double worst = 0.0;
    for (int trial = 0; trial < trials; ++trial) {
        Rng r = root.split(static_cast<uint64_t>(trial));
        MvDmolParams p;
        p.M = 1 + r.uniform_int(3);
        p.K = 8;
        for (int m = 0; m < p.M; ++m) p.logit_pi.push_back(r.uniform(-1.0, 1.0));
        for (int i = 0; i < 3 * p.M; ++i) {
            p.mu.push_back(r.uniform(0.0, 8.0));
            p.log_s.push_back(r.uniform(-1.0, 1.0));
            p.r.push_back(r.uniform(-0.5, 0.5));
        }
        double total = 0.0;
        for (int x0 = 0; x0 < 8; ++x0)
            for (int x1 = 0; x1 < 8; ++x1)
                for (int x2 = 0; x2 < 8; ++x2) {
                    std::vector<int> x = {x0, x1, x2};
                    double ar = std::exp(mv_dmol_log_prob(p, x));
                    double joint = joint_mv_dmol(p, x);
                    total += ar;
                    worst = std::max(worst, std::abs(ar - joint) / std::max(joint, 1e-300));
                }
        if (std::abs(total - 1.0) > 1e-8)
            throw NumericError("mvdmol AR factorization does not normalize: " + fmt17(total));
    }
    out << "max_relative_error," << fmt17(worst) << "\n";
    if (worst > 1e-9)
        throw NumericError("mvdmol AR factorization deviates from the joint formula");
}

void cmd_oracle_gradcheck(uint64_t seed, std::ostream& out) {
    ModelConfig mc;
    mc.D = 2;
    mc.K = 3;
    mc.bin_conditioning = true;
    mc.layers = {{TransformFamily::Quadratic, 3, {8}, false}};
    SubsetFlowModel model(mc, seed, /*random_output_layer=*/true);
    Rng r(seed ^ 0x6AD);
    std::vector<int> x = {r.uniform_int(3), r.uniform_int(3)};

    Tape t(true);
    std::vector<Var> bound = model.bind(t);
    Var loss = t.neg(model.exact_log_likelihood_t(t, bound, x));
    std::vector<Tensor> grads = t.grad(loss, bound);

    // Flatten parameters and gradients for the finite-difference probe.
    ParamStore& store = model.params();
    std::vector<double> theta, ad;
    for (int p = 0; p < store.count(); ++p) {
        const Tensor& v = store.value(p);
        theta.insert(theta.end(), v.data(), v.data() + v.size());
        ad.insert(ad.end(), grads[p].data(), grads[p].data() + grads[p].size());
    }
    auto fn = [&](std::span<const double> point) {
        size_t off = 0;
        for (int p = 0; p < store.count(); ++p) {
            Tensor& v = store.value(p);
            for (int i = 0; i < v.size(); ++i) v[i] = point[off++];
        }
        return -model.exact_log_likelihood(x);
    };
    std::vector<double> fd = finite_diff_gradient(fn, theta);
    fn(theta);  // restore
    double worst = 0.0;
    for (size_t i = 0; i < theta.size(); ++i) {
        double denom = std::max({std::abs(ad[i]), std::abs(fd[i]), 1e-6});
        worst = std::max(worst, std::abs(ad[i] - fd[i]) / denom);
    }
    out << "max_relative_error," << fmt17(worst) << " (parameters " << theta.size() << ")\n";
    if (worst > 1e-4) throw NumericError("autodiff gradient deviates from finite differences");
}

void cmd_oracle_quadrature(const std::string& ckpt_path, const std::string& data_path,
                           uint32_t idx, int grid, std::ostream& out) {
    Checkpoint ck = load_checkpoint(ckpt_path);
    OrdinalDataset data = load_dataset(data_path);
    if (idx >= data.N) throw ConfigError("oracle quadrature: sample index out of range");
    std::vector<int> x = data.sample_ints(idx);
    double integral = quadrature_bin_mass(*ck.model, x, grid);
    out << "quadrature_mass," << fmt17(integral) << "\n";
    if (ck.model->exact_capable()) {
        double exact = std::exp(ck.model->exact_log_likelihood(x));
        out << "exact_mass," << fmt17(exact) << "\n";
        double rel = std::abs(integral - exact) / std::max(exact, 1e-300);
        out << "relative_error," << fmt17(rel) << "\n";
        if (rel > 1e-3)
            throw NumericError("quadrature mass deviates from the exact likelihood");
    }
}

}  // namespace subsetflow
