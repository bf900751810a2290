#include "cli_support.hpp"

#include <algorithm>
#include <vector>

#include <json.hpp>

#include "tabmda/classifiers.hpp"
#include "tabmda/errors.hpp"

namespace tabmda_cli {

namespace {

using nlohmann::json;
using tabmda::ConfigError;

[[noreturn]] void fail_config(const std::string& message) {
    throw ConfigError(message);
}

void check_keys(const json& object, const std::vector<std::string>& allowed,
                const std::string& where) {
    for (const auto& [key, value] : object.items()) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
            fail_config("config: unknown key '" + key + "' in " + where);
        }
    }
}

template <typename T>
T get_typed(const json& object, const std::string& key, const T& fallback) {
    if (!object.contains(key)) return fallback;
    try {
        return object.at(key).get<T>();
    } catch (const json::exception&) {
        fail_config("config: bad type for '" + key + "'");
    }
}

} // namespace

CliConfig parse_config(const std::string& text) {
    CliConfig cfg;
    json root;
    try {
        root = json::parse(text);
    } catch (const json::exception& e) {
        fail_config(std::string("config: invalid JSON: ") + e.what());
    }
    if (!root.is_object()) fail_config("config: top level must be an object");

    check_keys(root,
               {"seed", "workers", "encoder", "weights", "dataset", "label", "out",
                "fold_labels", "registry", "experiment", "ics", "sweep", "pca",
                "gen_weights", "hyperparams", "verbosity"},
               "top level");

    cfg.seed = get_typed<std::uint64_t>(root, "seed", cfg.seed);
    cfg.workers = get_typed<std::size_t>(root, "workers", cfg.workers);
    cfg.encoder_name = get_typed<std::string>(root, "encoder", cfg.encoder_name);
    cfg.weights_path = get_typed<std::string>(root, "weights", cfg.weights_path);
    cfg.dataset_path = get_typed<std::string>(root, "dataset", cfg.dataset_path);
    cfg.label_column = get_typed<std::string>(root, "label", cfg.label_column);
    cfg.out_dir = get_typed<std::string>(root, "out", cfg.out_dir);
    cfg.fold_labels = get_typed<bool>(root, "fold_labels", cfg.fold_labels);
    cfg.registry_name = get_typed<std::string>(root, "registry", cfg.registry_name);
    cfg.verbosity = get_typed<int>(root, "verbosity", cfg.verbosity);

    if (root.contains("experiment")) {
        const auto& exp = root["experiment"];
        if (!exp.is_object()) fail_config("config: 'experiment' must be an object");
        check_keys(exp, {"n_real_grid", "repeats", "classifiers"}, "experiment");
        cfg.experiment.n_real_grid = get_typed<std::vector<std::size_t>>(
            exp, "n_real_grid", cfg.experiment.n_real_grid);
        cfg.experiment.repeats =
            get_typed<std::size_t>(exp, "repeats", cfg.experiment.repeats);
        if (exp.contains("classifiers")) {
            const auto names = get_typed<std::vector<std::string>>(exp, "classifiers", {});
            cfg.experiment.classifiers.clear();
            for (const auto& name : names) {
                cfg.experiment.classifiers.push_back(
                    tabmda::classifier_kind_from_string(name));
            }
        }
    }
    if (root.contains("ics")) {
        const auto& ics = root["ics"];
        if (!ics.is_object()) fail_config("config: 'ics' must be an object");
        check_keys(ics, {"fraction_grid", "k_grid", "trivial_augment", "fraction", "k"},
                   "ics");
        cfg.experiment.fraction_grid = get_typed<std::vector<double>>(
            ics, "fraction_grid", cfg.experiment.fraction_grid);
        cfg.experiment.k_grid =
            get_typed<std::vector<std::size_t>>(ics, "k_grid", cfg.experiment.k_grid);
        cfg.experiment.trivial_augment =
            get_typed<bool>(ics, "trivial_augment", cfg.experiment.trivial_augment);
        cfg.ics_fraction = get_typed<double>(ics, "fraction", cfg.ics_fraction);
        cfg.ics_k = get_typed<std::size_t>(ics, "k", cfg.ics_k);
        cfg.ics_trivial_augment = cfg.experiment.trivial_augment;
    }
    if (root.contains("sweep")) {
        const auto& sweep = root["sweep"];
        if (!sweep.is_object()) fail_config("config: 'sweep' must be an object");
        check_keys(sweep, {"k"}, "sweep");
        cfg.sweep_k = get_typed<std::size_t>(sweep, "k", cfg.sweep_k);
    }
    if (root.contains("pca")) {
        const auto& pca = root["pca"];
        if (!pca.is_object()) fail_config("config: 'pca' must be an object");
        check_keys(pca, {"fraction", "k"}, "pca");
        cfg.ics_fraction = get_typed<double>(pca, "fraction", cfg.ics_fraction);
        cfg.ics_k = get_typed<std::size_t>(pca, "k", cfg.ics_k);
    }
    if (root.contains("gen_weights")) {
        const auto& gw = root["gen_weights"];
        if (!gw.is_object()) fail_config("config: 'gen_weights' must be an object");
        check_keys(gw,
                   {"f_max", "d_model", "n_layers", "n_heads", "d_ff", "c_max",
                    "layer_norm_eps"},
                   "gen_weights");
        cfg.gen_weights.f_max = get_typed<std::size_t>(gw, "f_max", cfg.gen_weights.f_max);
        cfg.gen_weights.d_model =
            get_typed<std::size_t>(gw, "d_model", cfg.gen_weights.d_model);
        cfg.gen_weights.n_layers =
            get_typed<std::size_t>(gw, "n_layers", cfg.gen_weights.n_layers);
        cfg.gen_weights.n_heads =
            get_typed<std::size_t>(gw, "n_heads", cfg.gen_weights.n_heads);
        cfg.gen_weights.d_ff = get_typed<std::size_t>(gw, "d_ff", cfg.gen_weights.d_ff);
        cfg.gen_weights.c_max = get_typed<std::size_t>(gw, "c_max", cfg.gen_weights.c_max);
        cfg.gen_weights.layer_norm_eps =
            get_typed<double>(gw, "layer_norm_eps", cfg.gen_weights.layer_norm_eps);
    }
    if (root.contains("hyperparams")) {
        const auto& hp = root["hyperparams"];
        if (!hp.is_object()) fail_config("config: 'hyperparams' must be an object");
        check_keys(hp,
                   {"knn_k", "logreg_max_iter", "logreg_l2", "tree_max_depth",
                    "tree_min_leaf", "forest_trees", "gbdt_rounds", "gbdt_lr",
                    "gbdt_depth", "gbdt_lambda"},
                   "hyperparams");
        auto& out = cfg.experiment.hyperparams;
        out.knn_k = get_typed<std::size_t>(hp, "knn_k", out.knn_k);
        out.logreg_max_iter =
            get_typed<std::size_t>(hp, "logreg_max_iter", out.logreg_max_iter);
        out.logreg_l2 = get_typed<double>(hp, "logreg_l2", out.logreg_l2);
        out.tree_max_depth = get_typed<std::size_t>(hp, "tree_max_depth", out.tree_max_depth);
        out.tree_min_leaf = get_typed<std::size_t>(hp, "tree_min_leaf", out.tree_min_leaf);
        out.forest_trees = get_typed<std::size_t>(hp, "forest_trees", out.forest_trees);
        out.gbdt_rounds = get_typed<std::size_t>(hp, "gbdt_rounds", out.gbdt_rounds);
        out.gbdt_lr = get_typed<double>(hp, "gbdt_lr", out.gbdt_lr);
        out.gbdt_depth = get_typed<std::size_t>(hp, "gbdt_depth", out.gbdt_depth);
        out.gbdt_lambda = get_typed<double>(hp, "gbdt_lambda", out.gbdt_lambda);
    }
    return cfg;
}

std::string config_echo_text(const CliConfig& cfg) {
    json root;
    root["seed"] = cfg.seed;
    root["workers"] = cfg.workers;
    root["encoder"] = cfg.encoder_name;
    root["weights"] = cfg.weights_path;
    root["dataset"] = cfg.dataset_path;
    root["label"] = cfg.label_column;
    root["out"] = cfg.out_dir;
    root["fold_labels"] = cfg.fold_labels;
    root["registry"] = cfg.registry_name;
    root["verbosity"] = cfg.verbosity;
    root["experiment"] = {{"n_real_grid", cfg.experiment.n_real_grid},
                          {"repeats", cfg.experiment.repeats}};
    json classifiers = json::array();
    for (const auto kind : cfg.experiment.classifiers) {
        classifiers.push_back(std::string(tabmda::to_string(kind)));
    }
    root["experiment"]["classifiers"] = classifiers;
    root["ics"] = {{"fraction_grid", cfg.experiment.fraction_grid},
                   {"k_grid", cfg.experiment.k_grid},
                   {"trivial_augment", cfg.experiment.trivial_augment},
                   {"fraction", cfg.ics_fraction},
                   {"k", cfg.ics_k}};
    root["sweep"] = {{"k", cfg.sweep_k}};
    root["gen_weights"] = {{"f_max", cfg.gen_weights.f_max},
                           {"d_model", cfg.gen_weights.d_model},
                           {"n_layers", cfg.gen_weights.n_layers},
                           {"n_heads", cfg.gen_weights.n_heads},
                           {"d_ff", cfg.gen_weights.d_ff},
                           {"c_max", cfg.gen_weights.c_max},
                           {"layer_norm_eps", cfg.gen_weights.layer_norm_eps}};
    const auto& hp = cfg.experiment.hyperparams;
    root["hyperparams"] = {{"knn_k", hp.knn_k},
                           {"logreg_max_iter", hp.logreg_max_iter},
                           {"logreg_l2", hp.logreg_l2},
                           {"tree_max_depth", hp.tree_max_depth},
                           {"tree_min_leaf", hp.tree_min_leaf},
                           {"forest_trees", hp.forest_trees},
                           {"gbdt_rounds", hp.gbdt_rounds},
                           {"gbdt_lr", hp.gbdt_lr},
                           {"gbdt_depth", hp.gbdt_depth},
                           {"gbdt_lambda", hp.gbdt_lambda}};
    return root.dump(2) + "\n";
}

} // namespace tabmda_cli
