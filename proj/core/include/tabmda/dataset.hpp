#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "tabmda/matrix.hpp"

namespace tabmda {

/// A fully ingested classification dataset: numeric features, dense labels
/// 0..C-1 with every class populated, no missing values.
struct Dataset {
    Matrix features;                        // N x D
    std::vector<int> labels;                // N entries in [0, C)
    std::vector<std::string> feature_names; // D entries
    std::vector<std::string> class_names;   // C entries
    std::string source_id;

    std::size_t size() const { return features.rows(); }
    std::size_t dim() const { return features.cols(); }
    std::size_t class_count() const { return class_names.size(); }
};

struct RegistryEntry {
    std::string name;
    int openml_id;
    std::size_t expected_n;
    std::size_t expected_d;
    std::size_t expected_classes;
};

/// Map distinct raw labels to 0..C-1. Orders numerically when every label
/// parses as a number, lexicographically otherwise, so the encoding does not
/// depend on row order or platform.
std::pair<std::vector<int>, std::vector<std::string>> encode_labels(
    const std::vector<std::string>& raw);

/// Load a UTF-8, comma-separated, header-first CSV. Every non-label column
/// must parse as a number; the label column is encoded via encode_labels.
/// Errors: SchemaError (no/duplicate header, absent label column),
/// MissingValue(row, col), ParseError(row, col).
Dataset load_csv(const std::string& path, const std::string& label_column = "target");

/// The six benchmark datasets used throughout.
const std::vector<RegistryEntry>& registry();

const RegistryEntry* find_registry_entry(std::string_view name);

/// Throws RegistryMismatch when the loaded dimensions differ from the entry.
void check_registry(const Dataset& dataset, const RegistryEntry& entry);

/// Write the dataset back out in the ingestion CSV schema.
void save_csv(const Dataset& dataset, const std::string& path,
              const std::string& label_column = "target");

} // namespace tabmda
