#include "subsetflow/config.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"
#include "subsetflow/errors.hpp"

namespace subsetflow {

namespace {

using nlohmann::json;

TransformFamily family_from_string(const std::string& s) {
    if (s == "linear") return TransformFamily::Linear;
    if (s == "quadratic") return TransformFamily::Quadratic;
    if (s == "mol") return TransformFamily::Mol;
    throw ConfigError("unknown transform family '" + s + "'");
}

std::string family_to_string(TransformFamily f) {
    switch (f) {
        case TransformFamily::Linear: return "linear";
        case TransformFamily::Quadratic: return "quadratic";
        case TransformFamily::Mol: return "mol";
    }
    throw ContractError("unknown transform family");
}

RunConfig parse_json(const json& j) {
    RunConfig cfg;
    if (!j.is_object()) throw ConfigError("config root must be an object");

    const json& model = j.value("model", json::object());
    cfg.model.bin_conditioning = model.value("bin_conditioning", true);
    cfg.model.D = model.value("D", 0);
    cfg.model.K = model.value("K", 0);
    if (!model.contains("layers") || !model["layers"].is_array() || model["layers"].empty())
        throw ConfigError("config: model.layers must be a non-empty array");
    for (const json& lj : model["layers"]) {
        LayerConfig lc;
        lc.family = family_from_string(lj.value("transform", "quadratic"));
        lc.bins = lj.value("bins", 0);  // 0 = family default, resolved later
        if (lj.contains("hidden")) lc.hidden = lj["hidden"].get<std::vector<int>>();
        std::string order = lj.value("order", "raster");
        if (order == "rotated")
            lc.reversed_order = true;
        else if (order != "raster")
            throw ConfigError("config: layer order must be 'raster' or 'rotated'");
        cfg.model.layers.push_back(std::move(lc));
    }

    const json& train = j.value("train", json::object());
    cfg.objective = objective_from_string(train.value("objective", "exact"));
    cfg.adam.lr = train.value("lr", 3e-4);
    cfg.batch = train.value("batch", 32);
    cfg.epochs = train.value("epochs", 10);
    cfg.seed = train.value("seed", static_cast<uint64_t>(0));
    if (train.contains("lr_decay")) {
        for (const json& pair : train["lr_decay"]) {
            if (!pair.is_array() || pair.size() != 2)
                throw ConfigError("config: lr_decay entries must be [epoch, factor] pairs");
            cfg.adam.decay.emplace_back(pair[0].get<int>(), pair[1].get<double>());
        }
    }
    if (cfg.batch < 1) throw ConfigError("config: train.batch must be >= 1");
    if (cfg.epochs < 0) throw ConfigError("config: train.epochs must be >= 0");

    const json& eval = j.value("eval", json::object());
    if (eval.contains("estimators"))
        cfg.estimators = eval["estimators"].get<std::vector<std::string>>();
    if (eval.contains("k_list")) cfg.k_list = eval["k_list"].get<std::vector<int>>();
    cfg.mc_samples = eval.value("mc_samples", 100);
    for (const std::string& e : cfg.estimators)
        if (e != "exact" && e != "elbo" && e != "iwbo")
            throw ConfigError("config: unknown estimator '" + e + "'");
    for (int k : cfg.k_list)
        if (k < 1) throw ConfigError("config: k_list entries must be >= 1");
    if (cfg.mc_samples < 1) throw ConfigError("config: eval.mc_samples must be >= 1");

    const json& deq = j.value("dequant", json::object());
    if (deq.contains("hidden")) cfg.dequant_hidden = deq["hidden"].get<std::vector<int>>();
    return cfg;
}

}  // namespace

RunConfig parse_run_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    try {
        return parse_json(j);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config error: ") + e.what());
    }
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_run_config(ss.str());
}

std::string run_config_to_json(const RunConfig& cfg) {
    json layers = json::array();
    for (const LayerConfig& lc : cfg.model.layers) {
        layers.push_back({{"transform", family_to_string(lc.family)},
                          {"bins", lc.bins},
                          {"hidden", lc.hidden},
                          {"order", lc.reversed_order ? "rotated" : "raster"}});
    }
    json decay = json::array();
    for (const auto& [e, f] : cfg.adam.decay) decay.push_back(json::array({e, f}));
    json j = {
        {"model",
         {{"D", cfg.model.D},
          {"K", cfg.model.K},
          {"bin_conditioning", cfg.model.bin_conditioning},
          {"layers", layers}}},
        {"train",
         {{"objective", objective_to_string(cfg.objective)},
          {"lr", cfg.adam.lr},
          {"batch", cfg.batch},
          {"epochs", cfg.epochs},
          {"seed", cfg.seed},
          {"lr_decay", decay}}},
        {"eval",
         {{"estimators", cfg.estimators}, {"k_list", cfg.k_list}, {"mc_samples", cfg.mc_samples}}},
        {"dequant", {{"hidden", cfg.dequant_hidden}}},
    };
    return j.dump();
}

void finalize_run_config(RunConfig& cfg, int D, int K) {
    cfg.model.D = D;
    cfg.model.K = K;
    for (LayerConfig& lc : cfg.model.layers) {
        if (lc.bins == 0) {
            switch (lc.family) {
                case TransformFamily::Linear: lc.bins = K; break;
                case TransformFamily::Quadratic: lc.bins = 16; break;
                case TransformFamily::Mol: lc.bins = 10; break;
            }
        }
    }
    validate_run_config(cfg);
}

void validate_run_config(const RunConfig& cfg) {
    validate_model_config(cfg.model);
    if (cfg.objective == Objective::Exact) {
        if (!cfg.model.bin_conditioning)
            throw ConfigError(
                "objective 'exact' requires model.bin_conditioning=true (exact capability rule)");
        for (const LayerConfig& lc : cfg.model.layers)
            if (lc.reversed_order != cfg.model.layers[0].reversed_order)
                throw ConfigError(
                    "objective 'exact' requires all layers to share one autoregressive order "
                    "(exact capability rule)");
    }
}

}  // namespace subsetflow
