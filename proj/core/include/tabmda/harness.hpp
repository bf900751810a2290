#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tabmda/augmentation.hpp"
#include "tabmda/classifiers.hpp"
#include "tabmda/dataset.hpp"
#include "tabmda/encoder.hpp"

namespace tabmda {

/// Evaluation-protocol settings: subset sizes, repeats, the ICS sweep grids
/// and the classifier suite.
struct ExperimentConfig {
    std::vector<std::size_t> n_real_grid = {20, 50, 100, 200, 500};
    std::size_t repeats = 10;
    std::vector<double> fraction_grid = {0.5, 0.7, 0.9, 1.0};
    std::vector<std::size_t> k_grid = {5, 20, 50};
    bool trivial_augment = false;
    std::vector<ClassifierKind> classifiers = {ClassifierKind::knn, ClassifierKind::logreg,
                                               ClassifierKind::tree, ClassifierKind::forest,
                                               ClassifierKind::gbdt};
    std::uint64_t base_seed = 0;
    Hyperparams hyperparams;

    void validate() const;
};

struct SplitIndices {
    std::vector<std::size_t> test; // ascending dataset indices
    std::vector<std::size_t> pool; // ascending complement
};

/// Stratified test split of size min(floor(N/2), 500), drawn once per
/// (dataset, base_seed) and reused across every repeat and n_real value.
/// Errors: StratifyError when any class has fewer than 2 members.
SplitIndices make_splits(const Dataset& dataset, std::uint64_t base_seed);

struct RunSplit {
    std::vector<std::size_t> train; // ascending dataset indices, 80% of n_real
    std::vector<std::size_t> val;   // ascending dataset indices, the rest
    std::uint64_t run_seed = 0;
};

/// Stratified subsample of n_real pool members with the seed derived from
/// (base_seed, n_real, repeat_index), then a stratified 80/20 train/val
/// split. Errors: TooFewSamples when n_real < 2C or n_real exceeds the pool.
RunSplit make_run(const Dataset& dataset, const std::vector<std::size_t>& pool,
                  std::size_t n_real, std::size_t repeat_index, std::uint64_t base_seed);

/// One evaluated sweep cell. trivial_augment cells carry no fixed fraction.
struct IcsSetting {
    bool trivial_augment = false;
    double fraction = 1.0;
    std::size_t k = 1;
};

struct SweepCell {
    IcsSetting setting;
    double val_bacc = 0.0;
};

struct SweepOutcome {
    IcsSetting chosen;
    double val_bacc = 0.0;
    std::vector<SweepCell> cells; // in canonical evaluation order
};

/// Materialized data of one (n_real, repeat) run.
struct RunData {
    Dataset train;
    Matrix val_x;
    std::vector<int> val_y;
    Matrix test_x;
    std::vector<int> test_y;
    std::uint64_t run_seed = 0;
    std::string dataset_id;
};

RunData materialize_run(const Dataset& dataset, const SplitIndices& splits,
                        const RunSplit& run);

/// Evaluate every (fraction, K) grid cell (plus the TrivialAugment cell when
/// enabled) for one classifier: build the augmented train set, fit, score the
/// validation points embedded with the full-train context. Ties break to the
/// larger fraction, then the smaller K, then fixed-fraction over
/// TrivialAugment.
SweepOutcome sweep_and_select(const RunData& run, const InContextEncoder& encoder,
                              ClassifierKind classifier, const ExperimentConfig& cfg);

enum class RunMode { real, tabmda };

std::string_view to_string(RunMode mode);

struct RunResult {
    std::string dataset_id;
    std::size_t n_real = 0;
    std::size_t repeat_index = 0;
    ClassifierKind classifier{};
    RunMode mode = RunMode::real;
    std::optional<IcsSetting> chosen; // present iff mode == tabmda and not skipped
    double val_bacc = 0.0;
    double test_bacc = 0.0;
    bool skipped = false;
    std::string skip_reason;
};

struct SweepLogRow {
    std::string dataset_id;
    std::size_t n_real = 0;
    std::size_t repeat_index = 0;
    ClassifierKind classifier{};
    IcsSetting setting;
    double val_bacc = 0.0;
};

struct CellOutput {
    std::vector<RunResult> results;
    std::vector<SweepLogRow> sweep_log;
};

/// Both modes for every classifier of one (n_real, repeat) run: real-space
/// fits (features standardized with train stats for knn and logreg, raw for
/// the tree family) and the TabMDA path (sweep, refit on the chosen augmented
/// set, test points embedded with the full-train context). Encoder class
/// limits are recorded as skipped results rather than dropped.
CellOutput run_cell(const Dataset& dataset, const SplitIndices& splits,
                    const InContextEncoder& encoder, const ExperimentConfig& cfg,
                    std::size_t n_real, std::size_t repeat_index);

struct ExperimentOutput {
    std::vector<RunResult> results;   // canonical order
    std::vector<SweepLogRow> sweep_log;
    SplitIndices splits;
};

/// The full protocol over n_real_grid x repeats. Tasks run on `workers`
/// threads; per-task seeds derive from (base_seed, n_real, repeat), so the
/// output is byte-identical for any worker count.
ExperimentOutput run_experiment(const Dataset& dataset, const InContextEncoder& encoder,
                                const ExperimentConfig& cfg, std::size_t workers = 1);

struct SummaryCell {
    double mean = 0.0;
    double std_dev = 0.0; // sample std, n-1; 0 for a single repeat
    std::size_t count = 0;
    bool available = false; // false renders as N/A
};

struct SummaryTable {
    std::vector<std::pair<std::string, std::size_t>> rows; // (dataset, n_real)
    std::vector<std::pair<ClassifierKind, RunMode>> columns;
    std::vector<std::vector<SummaryCell>> cells; // [row][column]
    std::vector<SummaryCell> average_row;        // "Average accuracy" footer
};

/// Mean and sample std of test balanced accuracy per (dataset, n_real,
/// classifier, mode), plus the per-column average footer. Throws MissingCell
/// when a requested cell has no results at all.
SummaryTable aggregate_table(const std::vector<RunResult>& results);

void write_results_csv(const std::string& path, const std::vector<RunResult>& results);
void write_sweep_log_csv(const std::string& path, const std::vector<SweepLogRow>& rows);
void write_summary_csv(const std::string& path, const SummaryTable& table);
void write_summary_markdown(const std::string& path, const SummaryTable& table);

} // namespace tabmda
