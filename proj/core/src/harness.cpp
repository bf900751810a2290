#include "tabmda/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <stdexcept>
#include <thread>

#include "tabmda/errors.hpp"
#include "tabmda/numerics.hpp"
#include "tabmda/rng.hpp"

namespace tabmda {

namespace {

// Seed-stream salts. Every task seed derives from (base_seed, n_real,
// repeat), every sweep-cell seed from the run seed and the cell's canonical
// index, so scheduling never changes any draw.
constexpr std::uint64_t kTestSplitSalt = 0x7E575E70;
constexpr std::uint64_t kRunSaltBase = 0x52554E00;
constexpr std::uint64_t kSubsampleSalt = 1;
constexpr std::uint64_t kTrainValSalt = 2;
constexpr std::uint64_t kCellSaltBase = 0xCE110000;
constexpr std::uint64_t kRealFitSaltBase = 0xF17A0000;
constexpr std::uint64_t kSweepFitSaltBase = 0xF17B0000;

bool needs_standardization(ClassifierKind kind) {
    return kind == ClassifierKind::knn || kind == ClassifierKind::logreg;
}

std::size_t distinct_class_count(const std::vector<int>& labels) {
    std::set<int> classes(labels.begin(), labels.end());
    return classes.size();
}

std::vector<IcsSetting> enumerate_settings(const ExperimentConfig& cfg) {
    std::vector<IcsSetting> settings;
    for (const double fraction : cfg.fraction_grid) {
        for (const std::size_t k : cfg.k_grid) {
            settings.push_back({false, fraction, k});
        }
    }
    if (cfg.trivial_augment) {
        // One TrivialAugment cell; it runs with the largest K of the grid.
        const std::size_t k = *std::max_element(cfg.k_grid.begin(), cfg.k_grid.end());
        settings.push_back({true, 0.0, k});
    }
    return settings;
}

/// Selection order: higher validation score; then fixed-fraction over
/// TrivialAugment, larger fraction, smaller K.
bool setting_beats(double lhs_score, const IcsSetting& lhs, double rhs_score,
                   const IcsSetting& rhs) {
    if (lhs_score != rhs_score) return lhs_score > rhs_score;
    if (lhs.trivial_augment != rhs.trivial_augment) return !lhs.trivial_augment;
    if (lhs.fraction != rhs.fraction) return lhs.fraction > rhs.fraction;
    return lhs.k < rhs.k;
}

IcsParams params_for(const IcsSetting& setting, std::uint64_t cell_seed) {
    IcsParams params;
    params.k_contexts = setting.k;
    params.context_fraction = setting.trivial_augment ? 1.0 : setting.fraction;
    params.trivial_augment = setting.trivial_augment;
    params.seed = cell_seed;
    return params;
}

void ensure_disjoint(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b,
                     const char* what) {
    std::vector<std::size_t> overlap;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(overlap));
    if (!overlap.empty()) {
        throw std::logic_error(std::string("harness: index sets overlap: ") + what);
    }
}

std::vector<int> select_labels(const std::vector<int>& labels,
                               const std::vector<std::size_t>& indices) {
    std::vector<int> out;
    out.reserve(indices.size());
    for (const std::size_t i : indices) out.push_back(labels[i]);
    return out;
}

} // namespace

void ExperimentConfig::validate() const {
    if (repeats < 1) throw ConfigError("experiment: repeats must be >= 1");
    if (n_real_grid.empty()) throw ConfigError("experiment: n_real grid is empty");
    if (fraction_grid.empty()) throw ConfigError("experiment: fraction grid is empty");
    if (k_grid.empty()) throw ConfigError("experiment: K grid is empty");
    if (classifiers.empty()) throw ConfigError("experiment: classifier set is empty");
    for (const double f : fraction_grid) {
        if (!(f > 0.0 && f <= 1.0)) {
            throw ConfigError("experiment: fractions must be in (0, 1]");
        }
    }
    for (const std::size_t k : k_grid) {
        if (k < 1) throw ConfigError("experiment: K values must be >= 1");
    }
    hyperparams.validate();
}

std::string_view to_string(RunMode mode) {
    return mode == RunMode::real ? "real" : "tabmda";
}

SplitIndices make_splits(const Dataset& dataset, std::uint64_t base_seed) {
    const std::size_t n = dataset.size();
    std::vector<std::size_t> class_counts(dataset.class_count(), 0);
    for (const int y : dataset.labels) class_counts[static_cast<std::size_t>(y)] += 1;
    for (std::size_t c = 0; c < class_counts.size(); ++c) {
        if (class_counts[c] < 2) {
            throw StratifyError("make_splits: class " + std::to_string(c) +
                                " has fewer than 2 members");
        }
    }

    const std::size_t n_test = std::min<std::size_t>(n / 2, 500);
    SplitIndices splits;
    splits.test = stratified_subsample(dataset.labels, n_test,
                                       derive_seed(base_seed, kTestSplitSalt));
    std::vector<bool> in_test(n, false);
    for (const std::size_t i : splits.test) in_test[i] = true;
    splits.pool.reserve(n - n_test);
    for (std::size_t i = 0; i < n; ++i) {
        if (!in_test[i]) splits.pool.push_back(i);
    }
    return splits;
}

RunSplit make_run(const Dataset& dataset, const std::vector<std::size_t>& pool,
                  std::size_t n_real, std::size_t repeat_index, std::uint64_t base_seed) {
    if (n_real > pool.size()) {
        throw TooFewSamples("make_run: n_real exceeds the training pool");
    }
    const auto pool_labels = select_labels(dataset.labels, pool);
    const std::size_t classes = distinct_class_count(pool_labels);
    if (n_real < 2 * classes) {
        throw TooFewSamples("make_run: n_real smaller than twice the class count");
    }

    RunSplit split;
    split.run_seed = derive_seed(derive_seed(base_seed, kRunSaltBase + n_real), repeat_index);

    const auto sub_positions = stratified_subsample(
        pool_labels, n_real, derive_seed(split.run_seed, kSubsampleSalt));
    std::vector<std::size_t> sub_absolute;
    std::vector<int> sub_labels;
    sub_absolute.reserve(n_real);
    sub_labels.reserve(n_real);
    for (const std::size_t pos : sub_positions) {
        sub_absolute.push_back(pool[pos]);
        sub_labels.push_back(pool_labels[pos]);
    }

    const auto n_train = static_cast<std::size_t>(
        std::llround(0.8 * static_cast<double>(n_real)));
    const auto train_positions = stratified_subsample(
        sub_labels, n_train, derive_seed(split.run_seed, kTrainValSalt));
    std::vector<bool> in_train(sub_absolute.size(), false);
    for (const std::size_t pos : train_positions) {
        split.train.push_back(sub_absolute[pos]);
        in_train[pos] = true;
    }
    for (std::size_t pos = 0; pos < sub_absolute.size(); ++pos) {
        if (!in_train[pos]) split.val.push_back(sub_absolute[pos]);
    }
    return split;
}

RunData materialize_run(const Dataset& dataset, const SplitIndices& splits,
                        const RunSplit& run) {
    ensure_disjoint(run.train, run.val, "train/val");
    ensure_disjoint(run.train, splits.test, "train/test");
    ensure_disjoint(run.val, splits.test, "val/test");

    RunData data;
    data.train.features = select_rows(dataset.features, run.train);
    data.train.labels = select_labels(dataset.labels, run.train);
    data.train.feature_names = dataset.feature_names;
    data.train.class_names = dataset.class_names;
    data.train.source_id = dataset.source_id;
    data.val_x = select_rows(dataset.features, run.val);
    data.val_y = select_labels(dataset.labels, run.val);
    data.test_x = select_rows(dataset.features, splits.test);
    data.test_y = select_labels(dataset.labels, splits.test);
    data.run_seed = run.run_seed;
    data.dataset_id = dataset.source_id;
    return data;
}

namespace {

struct SweepState {
    bool any = false;
    IcsSetting setting;
    double val_bacc = 0.0;
    std::size_t cell_index = 0;
};

/// Shared sweep over all classifiers: each cell's augmented set is built once
/// and reused; seeds are keyed by the canonical cell index, so the outcome is
/// identical to per-classifier sweeps.
std::vector<SweepState> sweep_all(const RunData& run, const InContextEncoder& encoder,
                                  const ExperimentConfig& cfg, const Matrix& val_emb,
                                  std::vector<SweepLogRow>* log, std::size_t n_real,
                                  std::size_t repeat_index) {
    const auto settings = enumerate_settings(cfg);
    std::vector<SweepState> best(cfg.classifiers.size());
    for (std::size_t ci = 0; ci < settings.size(); ++ci) {
        const std::uint64_t cell_seed = derive_seed(run.run_seed, kCellSaltBase + ci);
        const AugmentedDataset aug =
            build_augmented_trainset(encoder, params_for(settings[ci], cell_seed), run.train);
        for (std::size_t ki = 0; ki < cfg.classifiers.size(); ++ki) {
            const auto kind = cfg.classifiers[ki];
            const auto model =
                fit_classifier(kind, aug.embeddings, aug.labels,
                               derive_seed(cell_seed, kSweepFitSaltBase + ki),
                               cfg.hyperparams);
            const double score = balanced_accuracy(run.val_y, model->predict(val_emb));
            if (log) {
                log->push_back({run.dataset_id, n_real, repeat_index, kind, settings[ci],
                                score});
            }
            if (!best[ki].any ||
                setting_beats(score, settings[ci], best[ki].val_bacc, best[ki].setting)) {
                best[ki] = {true, settings[ci], score, ci};
            }
        }
    }
    return best;
}

} // namespace

SweepOutcome sweep_and_select(const RunData& run, const InContextEncoder& encoder,
                              ClassifierKind classifier, const ExperimentConfig& cfg) {
    ExperimentConfig single = cfg;
    single.classifiers = {classifier};
    const Matrix val_emb = embed_eval_points(encoder, run.train, run.val_x);
    std::vector<SweepLogRow> log;
    const auto best = sweep_all(run, encoder, single, val_emb, &log, 0, 0);

    SweepOutcome outcome;
    outcome.chosen = best[0].setting;
    outcome.val_bacc = best[0].val_bacc;
    outcome.cells.reserve(log.size());
    for (const auto& row : log) outcome.cells.push_back({row.setting, row.val_bacc});
    return outcome;
}

CellOutput run_cell(const Dataset& dataset, const SplitIndices& splits,
                    const InContextEncoder& encoder, const ExperimentConfig& cfg,
                    std::size_t n_real, std::size_t repeat_index) {
    cfg.validate();
    const RunSplit run_split = make_run(dataset, splits.pool, n_real, repeat_index,
                                        cfg.base_seed);
    const RunData run = materialize_run(dataset, splits, run_split);

    CellOutput out;

    // Real mode: raw input features; knn and logreg see train-standardized
    // copies because their objectives are scale-sensitive.
    const auto standardized = standardize_fit_apply(run.train.features,
                                                    {run.val_x, run.test_x});
    for (std::size_t ki = 0; ki < cfg.classifiers.size(); ++ki) {
        const auto kind = cfg.classifiers[ki];
        const bool use_std = needs_standardization(kind);
        const Matrix& train_x = use_std ? standardized.train : run.train.features;
        const Matrix& val_x = use_std ? standardized.others[0] : run.val_x;
        const Matrix& test_x = use_std ? standardized.others[1] : run.test_x;

        const auto model = fit_classifier(kind, train_x, run.train.labels,
                                          derive_seed(run.run_seed, kRealFitSaltBase + ki),
                                          cfg.hyperparams);
        RunResult result;
        result.dataset_id = run.dataset_id;
        result.n_real = n_real;
        result.repeat_index = repeat_index;
        result.classifier = kind;
        result.mode = RunMode::real;
        result.val_bacc = balanced_accuracy(run.val_y, model->predict(val_x));
        result.test_bacc = balanced_accuracy(run.test_y, model->predict(test_x));
        out.results.push_back(std::move(result));
    }

    // TabMDA mode. An encoder class-limit failure skips the whole mode and is
    // recorded per classifier.
    try {
        const Matrix val_emb = embed_eval_points(encoder, run.train, run.val_x);
        const Matrix test_emb = embed_eval_points(encoder, run.train, run.test_x);
        const auto best = sweep_all(run, encoder, cfg, val_emb, &out.sweep_log, n_real,
                                    repeat_index);

        for (std::size_t ki = 0; ki < cfg.classifiers.size(); ++ki) {
            const auto kind = cfg.classifiers[ki];
            const std::uint64_t cell_seed =
                derive_seed(run.run_seed, kCellSaltBase + best[ki].cell_index);
            const AugmentedDataset aug = build_augmented_trainset(
                encoder, params_for(best[ki].setting, cell_seed), run.train);
            const auto model =
                fit_classifier(kind, aug.embeddings, aug.labels,
                               derive_seed(cell_seed, kSweepFitSaltBase + ki),
                               cfg.hyperparams);
            RunResult result;
            result.dataset_id = run.dataset_id;
            result.n_real = n_real;
            result.repeat_index = repeat_index;
            result.classifier = kind;
            result.mode = RunMode::tabmda;
            result.chosen = best[ki].setting;
            result.val_bacc = best[ki].val_bacc;
            result.test_bacc = balanced_accuracy(run.test_y, model->predict(test_emb));
            out.results.push_back(std::move(result));
        }
    } catch (const TooManyClasses& e) {
        for (const auto kind : cfg.classifiers) {
            RunResult result;
            result.dataset_id = run.dataset_id;
            result.n_real = n_real;
            result.repeat_index = repeat_index;
            result.classifier = kind;
            result.mode = RunMode::tabmda;
            result.skipped = true;
            result.skip_reason = e.what();
            out.results.push_back(std::move(result));
        }
    }
    return out;
}

ExperimentOutput run_experiment(const Dataset& dataset, const InContextEncoder& encoder,
                                const ExperimentConfig& cfg, std::size_t workers) {
    cfg.validate();
    ExperimentOutput output;
    output.splits = make_splits(dataset, cfg.base_seed);

    struct Task {
        std::size_t n_real;
        std::size_t repeat_index;
    };
    std::vector<Task> tasks;
    for (const std::size_t n_real : cfg.n_real_grid) {
        for (std::size_t repeat = 0; repeat < cfg.repeats; ++repeat) {
            tasks.push_back({n_real, repeat});
        }
    }

    std::vector<CellOutput> slots(tasks.size());
    std::vector<std::exception_ptr> failures(tasks.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        while (true) {
            const std::size_t t = next.fetch_add(1);
            if (t >= tasks.size()) break;
            try {
                slots[t] = run_cell(dataset, output.splits, encoder, cfg, tasks[t].n_real,
                                    tasks[t].repeat_index);
            } catch (...) {
                failures[t] = std::current_exception();
            }
        }
    };

    const std::size_t n_threads = std::max<std::size_t>(1, workers);
    if (n_threads == 1) {
        worker();
    } else {
        std::vector<std::thread> threads;
        threads.reserve(n_threads);
        for (std::size_t i = 0; i < n_threads; ++i) threads.emplace_back(worker);
        for (auto& thread : threads) thread.join();
    }
    for (const auto& failure : failures) {
        if (failure) std::rethrow_exception(failure);
    }

    for (auto& slot : slots) {
        std::move(slot.results.begin(), slot.results.end(),
                  std::back_inserter(output.results));
        std::move(slot.sweep_log.begin(), slot.sweep_log.end(),
                  std::back_inserter(output.sweep_log));
    }

    auto classifier_rank = [&](ClassifierKind kind) {
        for (std::size_t i = 0; i < cfg.classifiers.size(); ++i) {
            if (cfg.classifiers[i] == kind) return i;
        }
        return cfg.classifiers.size();
    };
    std::stable_sort(output.results.begin(), output.results.end(),
                     [&](const RunResult& a, const RunResult& b) {
                         return std::tuple(a.dataset_id, a.n_real, a.repeat_index,
                                           classifier_rank(a.classifier),
                                           static_cast<int>(a.mode)) <
                                std::tuple(b.dataset_id, b.n_real, b.repeat_index,
                                           classifier_rank(b.classifier),
                                           static_cast<int>(b.mode));
                     });
    std::stable_sort(output.sweep_log.begin(), output.sweep_log.end(),
                     [&](const SweepLogRow& a, const SweepLogRow& b) {
                         return std::tuple(a.dataset_id, a.n_real, a.repeat_index,
                                           classifier_rank(a.classifier)) <
                                std::tuple(b.dataset_id, b.n_real, b.repeat_index,
                                           classifier_rank(b.classifier));
                     });
    return output;
}

SummaryTable aggregate_table(const std::vector<RunResult>& results) {
    if (results.empty()) throw MissingCell("aggregate: no results");

    SummaryTable table;
    for (const auto& r : results) {
        const std::pair<std::string, std::size_t> row_key{r.dataset_id, r.n_real};
        if (std::find(table.rows.begin(), table.rows.end(), row_key) == table.rows.end()) {
            table.rows.push_back(row_key);
        }
        const std::pair<ClassifierKind, RunMode> col_key{r.classifier, r.mode};
        if (std::find(table.columns.begin(), table.columns.end(), col_key) ==
            table.columns.end()) {
            table.columns.push_back(col_key);
        }
    }
    std::sort(table.rows.begin(), table.rows.end());
    std::sort(table.columns.begin(), table.columns.end(),
              [](const auto& a, const auto& b) {
                  return std::tuple(static_cast<int>(a.first), static_cast<int>(a.second)) <
                         std::tuple(static_cast<int>(b.first), static_cast<int>(b.second));
              });

    table.cells.assign(table.rows.size(),
                       std::vector<SummaryCell>(table.columns.size()));
    for (std::size_t ri = 0; ri < table.rows.size(); ++ri) {
        for (std::size_t ci = 0; ci < table.columns.size(); ++ci) {
            std::vector<double> values;
            bool any_result = false;
            for (const auto& r : results) {
                if (r.dataset_id != table.rows[ri].first || r.n_real != table.rows[ri].second ||
                    r.classifier != table.columns[ci].first ||
                    r.mode != table.columns[ci].second) {
                    continue;
                }
                any_result = true;
                if (!r.skipped) values.push_back(r.test_bacc);
            }
            if (!any_result) {
                throw MissingCell("aggregate: no results for a requested cell");
            }
            SummaryCell& cell = table.cells[ri][ci];
            if (values.empty()) {
                cell.available = false;
                continue;
            }
            cell.available = true;
            cell.count = values.size();
            double sum = 0.0;
            for (const double v : values) sum += v;
            cell.mean = sum / static_cast<double>(values.size());
            if (values.size() > 1) {
                double sq = 0.0;
                for (const double v : values) {
                    const double diff = v - cell.mean;
                    sq += diff * diff;
                }
                cell.std_dev = std::sqrt(sq / static_cast<double>(values.size() - 1));
            }
        }
    }

    table.average_row.assign(table.columns.size(), SummaryCell{});
    for (std::size_t ci = 0; ci < table.columns.size(); ++ci) {
        double sum = 0.0;
        std::size_t count = 0;
        for (std::size_t ri = 0; ri < table.rows.size(); ++ri) {
            if (!table.cells[ri][ci].available) continue;
            sum += table.cells[ri][ci].mean;
            count += 1;
        }
        if (count > 0) {
            table.average_row[ci].available = true;
            table.average_row[ci].count = count;
            table.average_row[ci].mean = sum / static_cast<double>(count);
        }
    }
    return table;
}

namespace {

std::string format_fraction(const IcsSetting& setting) {
    if (setting.trivial_augment) return "ta";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", setting.fraction);
    return buf;
}

std::string format_accuracy(double value) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", value);
    return buf;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream file(path, std::ios::trunc);
    if (!file) throw RuntimeError("cannot open for writing: " + path);
    return file;
}

std::string cell_text(const SummaryCell& cell) {
    if (!cell.available) return "N/A";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.2f±%.2f", 100.0 * cell.mean, 100.0 * cell.std_dev);
    return buf;
}

std::string average_text(const SummaryCell& cell) {
    if (!cell.available) return "N/A";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", 100.0 * cell.mean);
    return buf;
}

std::string column_name(const std::pair<ClassifierKind, RunMode>& column) {
    return std::string(to_string(column.first)) + "_" + std::string(to_string(column.second));
}

} // namespace

void write_results_csv(const std::string& path, const std::vector<RunResult>& results) {
    auto file = open_out(path);
    file << "dataset,n_real,repeat,classifier,mode,fraction,k,val_bacc,test_bacc\n";
    for (const auto& r : results) {
        file << r.dataset_id << ',' << r.n_real << ',' << r.repeat_index << ','
             << to_string(r.classifier) << ',' << to_string(r.mode) << ',';
        if (r.skipped || !r.chosen) {
            file << "NA,NA,";
        } else {
            file << format_fraction(*r.chosen) << ',' << r.chosen->k << ',';
        }
        if (r.skipped) {
            file << "NA,NA\n";
        } else {
            file << format_accuracy(r.val_bacc) << ',' << format_accuracy(r.test_bacc) << '\n';
        }
    }
    if (!file) throw RuntimeError("write failed: " + path);
}

void write_sweep_log_csv(const std::string& path, const std::vector<SweepLogRow>& rows) {
    auto file = open_out(path);
    file << "dataset,n_real,repeat,classifier,fraction,k,val_bacc\n";
    for (const auto& row : rows) {
        file << row.dataset_id << ',' << row.n_real << ',' << row.repeat_index << ','
             << to_string(row.classifier) << ',' << format_fraction(row.setting) << ','
             << row.setting.k << ',' << format_accuracy(row.val_bacc) << '\n';
    }
    if (!file) throw RuntimeError("write failed: " + path);
}

void write_summary_csv(const std::string& path, const SummaryTable& table) {
    auto file = open_out(path);
    file << "dataset,n_real";
    for (const auto& column : table.columns) file << ',' << column_name(column);
    file << '\n';
    for (std::size_t ri = 0; ri < table.rows.size(); ++ri) {
        file << table.rows[ri].first << ',' << table.rows[ri].second;
        for (std::size_t ci = 0; ci < table.columns.size(); ++ci) {
            file << ',' << cell_text(table.cells[ri][ci]);
        }
        file << '\n';
    }
    file << "Average accuracy,";
    for (const auto& cell : table.average_row) file << ',' << average_text(cell);
    file << '\n';
    if (!file) throw RuntimeError("write failed: " + path);
}

void write_summary_markdown(const std::string& path, const SummaryTable& table) {
    auto file = open_out(path);
    file << "| Dataset | N_real |";
    for (const auto& column : table.columns) file << ' ' << column_name(column) << " |";
    file << "\n|---|---|";
    for (std::size_t ci = 0; ci < table.columns.size(); ++ci) file << "---|";
    file << '\n';
    for (std::size_t ri = 0; ri < table.rows.size(); ++ri) {
        file << "| " << table.rows[ri].first << " | " << table.rows[ri].second << " |";
        for (std::size_t ci = 0; ci < table.columns.size(); ++ci) {
            file << ' ' << cell_text(table.cells[ri][ci]) << " |";
        }
        file << '\n';
    }
    file << "| **Average accuracy** | |";
    for (const auto& cell : table.average_row) file << ' ' << average_text(cell) << " |";
    file << '\n';
    if (!file) throw RuntimeError("write failed: " + path);
}

} // namespace tabmda
