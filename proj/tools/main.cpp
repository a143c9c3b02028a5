#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "subsetflow/commands.hpp"
#include "subsetflow/errors.hpp"

namespace {

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.push_back(item);
    return out;
}

std::vector<int> split_int_list(const std::string& s) {
    std::vector<int> out;
    for (const std::string& item : split_list(s)) out.push_back(std::stoi(item));
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"subsetflow: exact discrete likelihoods via subset flows"};
    app.require_subcommand(1);

    std::string kind, config_path, data_path, ckpt_path, out_path;
    std::string estimators = "exact,elbo,iwbo", k_list = "10,100";
    uint64_t seed = 0;
    uint32_t n = 1000, d = 8, k = 4, idx_a = 0, idx_b = 1, idx = 0;
    int mc_samples = 100, steps = 8, trials = 20, grid = 32;
    double tau = 1.0;

    CLI::App* gen = app.add_subcommand("gen-toy", "generate a toy ordinal dataset");
    gen->add_option("--kind", kind,
                    "independent-categorical | markov-chain | quantized-gaussian-mixture")
        ->required();
    gen->add_option("--n", n, "sample count");
    gen->add_option("--d", d, "dimensions");
    gen->add_option("--k", k, "quantization levels");
    gen->add_option("--tau", tau, "markov transition temperature");
    gen->add_option("--seed", seed);
    gen->add_option("--out", out_path)->required();

    CLI::App* train = app.add_subcommand("train", "train a model");
    train->add_option("--config", config_path)->required();
    train->add_option("--data", data_path)->required();
    train->add_option("--out", out_path)->required();

    CLI::App* eval = app.add_subcommand("eval", "evaluate estimators on a dataset");
    eval->add_option("--ckpt", ckpt_path)->required();
    eval->add_option("--data", data_path)->required();
    eval->add_option("--estimators", estimators, "comma list of exact,elbo,iwbo");
    eval->add_option("--k", k_list, "comma list of IWBO sample counts");
    eval->add_option("--mc-samples", mc_samples);
    eval->add_option("--seed", seed);

    CLI::App* sample = app.add_subcommand("sample", "draw samples from a model");
    sample->add_option("--ckpt", ckpt_path)->required();
    sample->add_option("--n", n, "sample count");
    sample->add_option("--seed", seed);
    sample->add_option("--out", out_path)->required();

    CLI::App* gap = app.add_subcommand("gap", "dequantization-gap report");
    gap->add_option("--ckpt", ckpt_path)->required();
    gap->add_option("--data", data_path)->required();
    gap->add_option("--mc-samples", mc_samples);
    gap->add_option("--k", k_list, "comma list of IWBO sample counts");
    gap->add_option("--seed", seed);

    CLI::App* interp = app.add_subcommand("interpolate", "latent interpolation between samples");
    interp->add_option("--ckpt", ckpt_path)->required();
    interp->add_option("--data", data_path)->required();
    interp->add_option("--idx-a", idx_a);
    interp->add_option("--idx-b", idx_b);
    interp->add_option("--steps", steps);
    interp->add_option("--seed", seed);
    interp->add_option("--out", out_path)->required();

    CLI::App* oracle = app.add_subcommand("oracle", "brute-force reference checks");
    oracle->require_subcommand(1);
    CLI::App* onorm = oracle->add_subcommand("normalize", "enumerate total probability");
    onorm->add_option("--ckpt", ckpt_path)->required();
    CLI::App* omv = oracle->add_subcommand("mvdmol", "AR rewrite vs direct joint");
    omv->add_option("--seed", seed);
    omv->add_option("--trials", trials);
    CLI::App* ograd = oracle->add_subcommand("gradcheck", "autodiff vs finite differences");
    ograd->add_option("--seed", seed);
    CLI::App* oquad = oracle->add_subcommand("quadrature", "bin mass by midpoint quadrature");
    oquad->add_option("--ckpt", ckpt_path)->required();
    oquad->add_option("--data", data_path)->required();
    oquad->add_option("--idx", idx);
    oquad->add_option("--grid", grid);

    CLI11_PARSE(app, argc, argv);

    try {
        using namespace subsetflow;
        if (gen->parsed()) {
            cmd_gen_toy(kind, n, d, k, tau, seed, out_path, std::cout);
        } else if (train->parsed()) {
            cmd_train(config_path, data_path, out_path, std::cout);
        } else if (eval->parsed()) {
            cmd_eval(ckpt_path, data_path, split_list(estimators), split_int_list(k_list),
                     mc_samples, seed, std::cout);
        } else if (sample->parsed()) {
            cmd_sample(ckpt_path, n, seed, out_path, std::cout);
        } else if (gap->parsed()) {
            cmd_gap(ckpt_path, data_path, mc_samples, split_int_list(k_list), seed, std::cout);
        } else if (interp->parsed()) {
            cmd_interpolate(ckpt_path, data_path, idx_a, idx_b, steps, seed, out_path, std::cout);
        } else if (oracle->parsed()) {
            if (onorm->parsed()) cmd_oracle_normalize(ckpt_path, std::cout);
            if (omv->parsed()) cmd_oracle_mvdmol(seed, trials, std::cout);
            if (ograd->parsed()) cmd_oracle_gradcheck(seed, std::cout);
            if (oquad->parsed()) cmd_oracle_quadrature(ckpt_path, data_path, idx, grid, std::cout);
        }
    } catch (const subsetflow::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const subsetflow::DataFormatError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const subsetflow::NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 4;
    } catch (const subsetflow::ContractError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
