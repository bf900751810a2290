// Config schema for the tabmda CLI: JSON file + flag overrides.
#pragma once

#include <cstdint>
#include <string>

#include "tabmda/encoder.hpp"
#include "tabmda/harness.hpp"

namespace tabmda_cli {

struct CliConfig {
    std::string command;
    std::string dataset_path;
    std::string weights_path;
    std::string out_dir = "out";
    std::string label_column = "target";
    std::string encoder_name = "centroid";
    std::string registry_name;
    bool fold_labels = false;
    std::uint64_t seed = 0;
    std::size_t workers = 1;
    int verbosity = 0;

    tabmda::ExperimentConfig experiment;

    // pca/augment settings: one fixed ICS cell
    double ics_fraction = 0.7;
    std::size_t ics_k = 20;
    bool ics_trivial_augment = false;

    std::size_t sweep_k = 20; // K used for the ablation table columns

    tabmda::EncoderConfig gen_weights;
};

/// Parse the JSON config text. Unknown keys and type mismatches raise
/// ConfigError before any work starts. Absent keys keep the defaults above.
CliConfig parse_config(const std::string& text);

/// Effective-config echo as JSON text; with the seed this reproduces every
/// output file.
std::string config_echo_text(const CliConfig& cfg);

} // namespace tabmda_cli
