#include "tabmda/dataset.hpp"

#include <algorithm>
#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

#include "tabmda/errors.hpp"

namespace tabmda {

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

std::string strip_cr(std::string s) {
    if (!s.empty() && s.back() == '\r') s.pop_back();
    return s;
}

std::optional<double> parse_number(const std::string& text) {
    if (text.empty()) return std::nullopt;
    errno = 0;
    char* end = nullptr;
    const double value = std::strtod(text.c_str(), &end);
    if (end != text.c_str() + text.size() || errno == ERANGE) return std::nullopt;
    return value;
}

} // namespace

std::pair<std::vector<int>, std::vector<std::string>> encode_labels(
    const std::vector<std::string>& raw) {
    if (raw.empty()) throw EmptyInput("encode_labels: no labels");

    std::vector<std::string> distinct = raw;
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());

    const bool all_numeric = std::all_of(distinct.begin(), distinct.end(), [](const auto& s) {
        return parse_number(s).has_value();
    });
    if (all_numeric) {
        std::sort(distinct.begin(), distinct.end(), [](const auto& a, const auto& b) {
            return *parse_number(a) < *parse_number(b);
        });
    }

    std::map<std::string, int> index;
    for (std::size_t i = 0; i < distinct.size(); ++i) index[distinct[i]] = static_cast<int>(i);

    std::vector<int> encoded;
    encoded.reserve(raw.size());
    for (const auto& s : raw) encoded.push_back(index.at(s));
    return {std::move(encoded), std::move(distinct)};
}

Dataset load_csv(const std::string& path, const std::string& label_column) {
    std::ifstream file(path);
    if (!file) throw RuntimeError("load_csv: cannot open: " + path);

    std::string line;
    if (!std::getline(file, line)) throw SchemaError("load_csv: empty file: " + path);
    const auto header = split_line(strip_cr(line));
    if (header.empty()) throw SchemaError("load_csv: empty header row");

    std::size_t label_idx = header.size();
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == label_column) {
            if (label_idx != header.size()) {
                throw SchemaError("load_csv: duplicate label column '" + label_column + "'");
            }
            label_idx = i;
        }
    }
    if (label_idx == header.size()) {
        throw SchemaError("load_csv: label column '" + label_column + "' not found");
    }

    Dataset ds;
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (i != label_idx) ds.feature_names.push_back(header[i]);
    }
    const std::size_t d = ds.feature_names.size();
    if (d == 0) throw SchemaError("load_csv: no feature columns");

    std::vector<double> values;
    std::vector<std::string> raw_labels;
    std::size_t row = 0;
    while (std::getline(file, line)) {
        line = strip_cr(line);
        if (line.empty()) continue;
        ++row;
        const auto fields = split_line(line);
        if (fields.size() != header.size()) {
            throw MissingValue("load_csv: row " + std::to_string(row) + " has " +
                               std::to_string(fields.size()) + " fields, expected " +
                               std::to_string(header.size()));
        }
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (i == label_idx) {
                if (fields[i].empty()) {
                    throw MissingValue("load_csv: empty label at row " + std::to_string(row));
                }
                raw_labels.push_back(fields[i]);
                continue;
            }
            if (fields[i].empty()) {
                throw MissingValue("load_csv: missing value at row " + std::to_string(row) +
                                   ", column " + header[i]);
            }
            const auto value = parse_number(fields[i]);
            if (!value) {
                throw ParseError("load_csv: non-numeric cell '" + fields[i] + "' at row " +
                                 std::to_string(row) + ", column " + header[i]);
            }
            values.push_back(*value);
        }
    }
    if (row == 0) throw SchemaError("load_csv: no data rows");

    ds.features = Matrix(row, d);
    ds.features.data() = std::move(values);
    auto encoded = encode_labels(raw_labels);
    ds.labels = std::move(encoded.first);
    ds.class_names = std::move(encoded.second);

    // source_id = file stem
    std::string stem = path;
    if (const auto slash = stem.find_last_of("/\\"); slash != std::string::npos) {
        stem = stem.substr(slash + 1);
    }
    if (const auto dot = stem.find_last_of('.'); dot != std::string::npos) {
        stem = stem.substr(0, dot);
    }
    ds.source_id = stem;
    return ds;
}

const std::vector<RegistryEntry>& registry() {
    static const std::vector<RegistryEntry> entries = {
        {"vehicle", 54, 846, 18, 4},   {"steel", 1504, 1941, 33, 2},
        {"biodeg", 1494, 1055, 41, 2}, {"protein", 40966, 1080, 77, 8},
        {"texture", 40499, 5500, 40, 11}, {"fourier", 14, 2000, 76, 10},
    };
    return entries;
}

const RegistryEntry* find_registry_entry(std::string_view name) {
    for (const auto& entry : registry()) {
        if (entry.name == name) return &entry;
    }
    return nullptr;
}

void check_registry(const Dataset& dataset, const RegistryEntry& entry) {
    if (dataset.size() != entry.expected_n || dataset.dim() != entry.expected_d ||
        dataset.class_count() != entry.expected_classes) {
        char buf[256];
        std::snprintf(buf, sizeof(buf),
                      "registry '%s': expected N=%zu D=%zu C=%zu, loaded N=%zu D=%zu C=%zu",
                      entry.name.c_str(), entry.expected_n, entry.expected_d,
                      entry.expected_classes, dataset.size(), dataset.dim(),
                      dataset.class_count());
        throw RegistryMismatch(buf);
    }
}

void save_csv(const Dataset& dataset, const std::string& path,
              const std::string& label_column) {
    std::ofstream file(path, std::ios::trunc);
    if (!file) throw RuntimeError("save_csv: cannot open for writing: " + path);
    for (std::size_t j = 0; j < dataset.dim(); ++j) {
        file << (j < dataset.feature_names.size() ? dataset.feature_names[j]
                                                  : "f" + std::to_string(j))
             << ',';
    }
    file << label_column << '\n';
    char buf[64];
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        for (std::size_t j = 0; j < dataset.dim(); ++j) {
            std::snprintf(buf, sizeof(buf), "%.17g", dataset.features(i, j));
            file << buf << ',';
        }
        file << dataset.class_names[dataset.labels[i]] << '\n';
    }
    if (!file) throw RuntimeError("save_csv: write failed: " + path);
}

} // namespace tabmda
