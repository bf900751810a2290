// tabmda command-line driver: gen-weights, evaluate, sweep, pca, augment.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>

#include <CLI11.hpp>

#include "cli_support.hpp"
#include "tabmda/augmentation.hpp"
#include "tabmda/classifiers.hpp"
#include "tabmda/dataset.hpp"
#include "tabmda/encoder.hpp"
#include "tabmda/errors.hpp"
#include "tabmda/harness.hpp"
#include "tabmda/numerics.hpp"
#include "tabmda/rng.hpp"
#include "tabmda/weight_io.hpp"

namespace {

using namespace tabmda;
using tabmda_cli::CliConfig;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitRuntime = 4;

void write_text(const std::string& path, const std::string& text) {
    std::ofstream file(path, std::ios::trunc);
    if (!file) throw RuntimeError("cannot open for writing: " + path);
    file << text;
    if (!file) throw RuntimeError("write failed: " + path);
}

void echo_config(const CliConfig& cfg) {
    std::error_code ec;
    std::filesystem::create_directories(cfg.out_dir, ec);
    if (ec) throw RuntimeError("cannot create output directory: " + cfg.out_dir);
    write_text(cfg.out_dir + "/config_echo.json", tabmda_cli::config_echo_text(cfg));
}

Dataset load_dataset(const CliConfig& cfg) {
    if (cfg.dataset_path.empty()) throw ConfigError("no dataset given (use --dataset)");
    if (!std::filesystem::exists(cfg.dataset_path)) {
        throw SchemaError("dataset file not found: " + cfg.dataset_path);
    }
    Dataset ds = load_csv(cfg.dataset_path, cfg.label_column);
    if (!cfg.registry_name.empty()) {
        const auto* entry = find_registry_entry(cfg.registry_name);
        if (entry == nullptr) {
            throw ConfigError("unknown registry entry '" + cfg.registry_name + "'");
        }
        check_registry(ds, *entry);
        ds.source_id = entry->name;
    }
    return ds;
}

std::unique_ptr<InContextEncoder> build_encoder(const CliConfig& cfg, const Dataset& ds) {
    if (cfg.encoder_name == "centroid") {
        return std::make_unique<CentroidEncoder>(ds.class_count());
    }
    if (cfg.encoder_name == "transformer") {
        if (cfg.weights_path.empty()) {
            throw ConfigError("transformer encoder needs --weights");
        }
        auto [ecfg, weights] = load_weights(cfg.weights_path);
        return std::make_unique<TransformerEncoder>(ecfg, std::move(weights),
                                                    cfg.fold_labels);
    }
    throw ConfigError("unknown encoder '" + cfg.encoder_name + "' (transformer|centroid)");
}

void log_info(const CliConfig& cfg, const std::string& message) {
    if (cfg.verbosity > 0) std::cerr << "[tabmda] " << message << "\n";
}

// ---------------------------------------------------------------------------
// commands
// ---------------------------------------------------------------------------

int command_gen_weights(const CliConfig& cfg) {
    if (cfg.weights_path.empty()) throw ConfigError("gen-weights needs --weights <path>");
    cfg.gen_weights.validate();
    const auto weights = generate_synthetic_weights(cfg.gen_weights, cfg.seed);
    save_weights(cfg.gen_weights, weights, cfg.weights_path);
    std::cout << "wrote " << cfg.weights_path << "\n";
    return kExitOk;
}

int command_evaluate(const CliConfig& cfg) {
    const Dataset ds = load_dataset(cfg);
    const auto encoder = build_encoder(cfg, ds);
    ExperimentConfig exp = cfg.experiment;
    exp.base_seed = cfg.seed;

    echo_config(cfg);
    log_info(cfg, "running evaluate on " + ds.source_id);
    const auto output = run_experiment(ds, *encoder, exp, cfg.workers);

    write_results_csv(cfg.out_dir + "/results.csv", output.results);
    write_sweep_log_csv(cfg.out_dir + "/sweep_log.csv", output.sweep_log);
    const auto table = aggregate_table(output.results);
    write_summary_csv(cfg.out_dir + "/summary.csv", table);
    write_summary_markdown(cfg.out_dir + "/summary.md", table);

    // Test indices for provenance; the same set backs every repeat.
    std::string index_text = "test_index\n";
    for (const std::size_t i : output.splits.test) {
        index_text += std::to_string(i) + "\n";
    }
    write_text(cfg.out_dir + "/test_indices.csv", index_text);
    std::cout << "wrote " << cfg.out_dir << "/results.csv (" << output.results.size()
              << " rows)\n";
    return kExitOk;
}

/// Ablation table over context sizes: full context (K=1, fraction 1) against
/// each fixed fraction and the TrivialAugment draw at a single K, reporting
/// the mean test balanced accuracy over repeats and classifiers per cell.
int command_sweep(const CliConfig& cfg) {
    const Dataset ds = load_dataset(cfg);
    const auto encoder = build_encoder(cfg, ds);
    echo_config(cfg);

    std::vector<IcsSetting> columns;
    columns.push_back({false, 1.0, 1}); // full context (no ICS)
    for (const double fraction : cfg.experiment.fraction_grid) {
        if (fraction >= 1.0) continue; // covered by the full-context column
        columns.push_back({false, fraction, cfg.sweep_k});
    }
    columns.push_back({true, 0.0, cfg.sweep_k});

    std::vector<std::string> names;
    for (const auto& column : columns) {
        if (column.trivial_augment) {
            names.push_back("ta");
        } else if (column.k == 1 && column.fraction == 1.0) {
            names.push_back("full_context");
        } else {
            char buf[32];
            std::snprintf(buf, sizeof(buf), "%g", column.fraction);
            names.push_back(buf);
        }
    }

    const auto splits = make_splits(ds, cfg.seed);
    std::string csv = "dataset,n_real,column,mean_test_bacc\n";
    for (const std::size_t n_real : cfg.experiment.n_real_grid) {
        std::vector<double> sums(columns.size(), 0.0);
        std::size_t count = 0;
        for (std::size_t repeat = 0; repeat < cfg.experiment.repeats; ++repeat) {
            const auto run_split = make_run(ds, splits.pool, n_real, repeat, cfg.seed);
            const auto run = materialize_run(ds, splits, run_split);
            const Matrix test_emb = embed_eval_points(*encoder, run.train, run.test_x);
            for (std::size_t ci = 0; ci < columns.size(); ++ci) {
                IcsParams params;
                params.k_contexts = columns[ci].k;
                params.context_fraction =
                    columns[ci].trivial_augment ? 1.0 : columns[ci].fraction;
                params.trivial_augment = columns[ci].trivial_augment;
                params.seed = derive_seed(run.run_seed, 0xAB1A0000 + ci);
                const auto aug = build_augmented_trainset(*encoder, params, run.train);
                for (std::size_t ki = 0; ki < cfg.experiment.classifiers.size(); ++ki) {
                    const auto model = fit_classifier(
                        cfg.experiment.classifiers[ki], aug.embeddings, aug.labels,
                        derive_seed(params.seed, 0xF17C0000 + ki),
                        cfg.experiment.hyperparams);
                    sums[ci] += balanced_accuracy(run.test_y, model->predict(test_emb));
                }
            }
            count += cfg.experiment.classifiers.size();
        }
        for (std::size_t ci = 0; ci < columns.size(); ++ci) {
            char buf[32];
            std::snprintf(buf, sizeof(buf), "%.6f", sums[ci] / static_cast<double>(count));
            csv += ds.source_id + "," + std::to_string(n_real) + "," + names[ci] + "," +
                   buf + "\n";
        }
        log_info(cfg, "sweep finished n_real=" + std::to_string(n_real));
    }
    write_text(cfg.out_dir + "/ablation.csv", csv);
    std::cout << "wrote " << cfg.out_dir << "/ablation.csv\n";
    return kExitOk;
}

void write_coordinates_csv(const std::string& path, const Matrix& coords,
                           const std::vector<int>& labels) {
    std::string text = "pc1,pc2,label\n";
    char buf[80];
    for (std::size_t i = 0; i < coords.rows(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.9g,%.9g,%d\n", coords(i, 0), coords(i, 1),
                      labels[i]);
        text += buf;
    }
    write_text(path, text);
}

/// Three 2-D projections: raw inputs, full-context embeddings, ICS-augmented
/// embeddings. Each PCA is fit on exactly the points it plots.
int command_pca(const CliConfig& cfg) {
    const Dataset ds = load_dataset(cfg);
    const auto encoder = build_encoder(cfg, ds);
    echo_config(cfg);

    const auto raw = pca_fit_project(ds.features);
    write_coordinates_csv(cfg.out_dir + "/pca_raw.csv", raw.coordinates, ds.labels);

    const Matrix embedded = embed_eval_points(*encoder, ds, ds.features);
    const auto manifold = pca_fit_project(embedded);
    write_coordinates_csv(cfg.out_dir + "/pca_embedded.csv", manifold.coordinates,
                          ds.labels);

    IcsParams params;
    params.k_contexts = cfg.ics_k;
    params.context_fraction = cfg.ics_trivial_augment ? 1.0 : cfg.ics_fraction;
    params.trivial_augment = cfg.ics_trivial_augment;
    params.seed = cfg.seed;
    const auto aug = build_augmented_trainset(*encoder, params, ds);
    const auto augmented = pca_fit_project(aug.embeddings);
    write_coordinates_csv(cfg.out_dir + "/pca_augmented.csv", augmented.coordinates,
                          aug.labels);

    std::cout << "wrote " << cfg.out_dir
              << "/pca_raw.csv, pca_embedded.csv, pca_augmented.csv\n";
    return kExitOk;
}

int command_augment(const CliConfig& cfg) {
    const Dataset ds = load_dataset(cfg);
    const auto encoder = build_encoder(cfg, ds);
    echo_config(cfg);

    IcsParams params;
    params.k_contexts = cfg.ics_k;
    params.context_fraction = cfg.ics_trivial_augment ? 1.0 : cfg.ics_fraction;
    params.trivial_augment = cfg.ics_trivial_augment;
    params.seed = cfg.seed;
    const auto aug = build_augmented_trainset(*encoder, params, ds);

    std::string text;
    for (std::size_t j = 0; j < aug.embeddings.cols(); ++j) {
        text += "e" + std::to_string(j) + ",";
    }
    text += "label,source_index,context_index\n";
    char buf[48];
    for (std::size_t i = 0; i < aug.embeddings.rows(); ++i) {
        for (std::size_t j = 0; j < aug.embeddings.cols(); ++j) {
            std::snprintf(buf, sizeof(buf), "%.9g,", aug.embeddings(i, j));
            text += buf;
        }
        text += std::to_string(aug.labels[i]) + "," +
                std::to_string(aug.provenance[i].first) + "," +
                std::to_string(aug.provenance[i].second) + "\n";
    }
    write_text(cfg.out_dir + "/augmented.csv", text);
    std::cout << "wrote " << cfg.out_dir << "/augmented.csv (" << aug.embeddings.rows()
              << " rows)\n";
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"TabMDA: manifold data augmentation for tabular classifiers"};
    app.require_subcommand(1);

    std::string config_path;
    CliConfig flags; // command-line values, merged over the config file

    app.add_option("--config", config_path, "JSON config file");
    app.add_option("--dataset", flags.dataset_path, "dataset CSV path");
    app.add_option("--weights", flags.weights_path, "encoder weight file");
    app.add_option("--encoder", flags.encoder_name, "encoder: transformer|centroid");
    app.add_option("--label", flags.label_column, "label column name (default: target)");
    app.add_option("--out", flags.out_dir, "output directory (default: out)");
    app.add_option("--seed", flags.seed, "base seed");
    app.add_option("--workers", flags.workers, "worker threads (default: 1)");
    app.add_option("--registry", flags.registry_name,
                   "validate the dataset against this registry entry");
    app.add_flag("--fold-labels", flags.fold_labels,
                 "fold context labels past c_max instead of rejecting them");
    app.add_flag("-v,--verbose", flags.verbosity, "verbose progress on stderr");

    for (const auto& [name, description] :
         std::initializer_list<std::pair<const char*, const char*>>{
             {"gen-weights", "write a synthetic encoder weight file"},
             {"evaluate", "run the full evaluation protocol"},
             {"sweep", "context-size ablation table"},
             {"pca", "emit 2-D projection coordinates (three panels)"},
             {"augment", "dump an augmented training set to CSV"}}) {
        app.add_subcommand(name, description)->fallthrough();
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        CliConfig cfg;
        if (!config_path.empty()) {
            std::ifstream file(config_path);
            if (!file) throw ConfigError("cannot open config file: " + config_path);
            const std::string text((std::istreambuf_iterator<char>(file)),
                                   std::istreambuf_iterator<char>());
            cfg = tabmda_cli::parse_config(text);
        }
        if (app.count("--dataset")) cfg.dataset_path = flags.dataset_path;
        if (app.count("--weights")) cfg.weights_path = flags.weights_path;
        if (app.count("--encoder")) cfg.encoder_name = flags.encoder_name;
        if (app.count("--label")) cfg.label_column = flags.label_column;
        if (app.count("--out")) cfg.out_dir = flags.out_dir;
        if (app.count("--seed")) cfg.seed = flags.seed;
        if (app.count("--workers")) cfg.workers = flags.workers;
        if (app.count("--registry")) cfg.registry_name = flags.registry_name;
        if (app.count("--fold-labels")) cfg.fold_labels = flags.fold_labels;
        if (app.count("--verbose")) cfg.verbosity = flags.verbosity;

        cfg.experiment.validate();

        const auto* sub = app.get_subcommands().front();
        cfg.command = sub->get_name();
        if (cfg.command == "gen-weights") return command_gen_weights(cfg);
        if (cfg.command == "evaluate") return command_evaluate(cfg);
        if (cfg.command == "sweep") return command_sweep(cfg);
        if (cfg.command == "pca") return command_pca(cfg);
        if (cfg.command == "augment") return command_augment(cfg);
        throw ConfigError("unknown command");
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const MissingValue& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const ParseError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const SchemaError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const RegistryMismatch& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
}
