#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "riskgrad/errors.hpp"
#include "riskgrad/objective.hpp"
#include "riskgrad/oracles.hpp"
#include "riskgrad/rng.hpp"

namespace riskgrad::ingest {

/// Rectangular price table: one named column per instrument plus a
/// timestamp column (synthesized as the row index when the file has none).
struct PriceTable {
    std::vector<std::string> timestamps;
    std::vector<std::string> names;
    std::vector<std::vector<double>> columns; // column-major

    std::size_t n_rows() const { return timestamps.size(); }
    std::size_t n_cols() const { return columns.size(); }
};

enum class NaPolicy { DropColumn, Error };

struct CsvOptions {
    char delimiter = ',';
    bool header = true;
    NaPolicy na_policy = NaPolicy::DropColumn;
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line, char delimiter) {
    std::vector<std::string> fields;
    std::string field;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == delimiter) {
            fields.push_back(field);
            field.clear();
        } else if (c != '\r') {
            field.push_back(c);
        }
    }
    fields.push_back(field);
    return fields;
}

inline bool is_missing(const std::string& field) { return field.empty() || field == "NA"; }

inline bool looks_like_time_column(std::string name) {
    std::transform(name.begin(), name.end(), name.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return name.find("time") != std::string::npos || name.find("date") != std::string::npos;
}

} // namespace detail

// Loads a delimited price file. Columns containing any missing cell (empty
// field or the literal "NA") are removed under DropColumn, which is the
// default policy; under Error they abort. Cells that are present but not
// numeric abort under either policy.
inline PriceTable load_csv(const std::string& path, const CsvOptions& options = {}) {
    std::ifstream in(path);
    if (!in) throw io_error("load_csv: cannot open " + path);

    std::vector<std::vector<std::string>> raw;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() && in.peek() == std::char_traits<char>::eof()) break;
        raw.push_back(detail::split_csv_line(line, options.delimiter));
    }
    if (raw.empty()) throw parse_error("load_csv: " + path + " is empty");

    std::vector<std::string> names;
    std::size_t first_data_row = 0;
    if (options.header) {
        names = raw[0];
        first_data_row = 1;
        if (raw.size() < 2) throw parse_error("load_csv: no data rows in " + path);
    } else {
        names.resize(raw[0].size());
        for (std::size_t c = 0; c < names.size(); ++c) names[c] = "c" + std::to_string(c);
    }

    const std::size_t n_fields = names.size();
    const std::size_t n_rows = raw.size() - first_data_row;
    const bool has_time_column = options.header && !names.empty() &&
                                 detail::looks_like_time_column(names.front());
    const std::size_t first_value_col = has_time_column ? 1 : 0;

    PriceTable table;
    table.timestamps.resize(n_rows);

    std::vector<std::vector<double>> values(n_fields - first_value_col,
                                            std::vector<double>(n_rows, 0.0));
    std::vector<bool> has_na(values.size(), false);

    for (std::size_t r = 0; r < n_rows; ++r) {
        const auto& row = raw[r + first_data_row];
        if (row.size() != n_fields) {
            throw parse_error("load_csv: row " + std::to_string(r + 1) + " has " +
                              std::to_string(row.size()) + " fields, expected " +
                              std::to_string(n_fields));
        }
        table.timestamps[r] = has_time_column ? row[0] : std::to_string(r);
        for (std::size_t c = first_value_col; c < n_fields; ++c) {
            const std::string& cell = row[c];
            const std::size_t v = c - first_value_col;
            if (detail::is_missing(cell)) {
                if (options.na_policy == NaPolicy::Error) {
                    throw parse_error("load_csv: missing value at row " + std::to_string(r + 1) +
                                      ", column " + names[c]);
                }
                has_na[v] = true;
                continue;
            }
            try {
                std::size_t used = 0;
                values[v][r] = std::stod(cell, &used);
                if (used != cell.size()) throw std::invalid_argument(cell);
            } catch (const std::exception&) {
                throw parse_error("load_csv: unparseable cell '" + cell + "' at row " +
                                  std::to_string(r + 1) + ", column " + names[c]);
            }
        }
    }

    for (std::size_t v = 0; v < values.size(); ++v) {
        if (has_na[v]) continue;
        table.names.push_back(names[v + first_value_col]);
        table.columns.push_back(std::move(values[v]));
    }
    if (table.columns.empty()) {
        throw parse_error("load_csv: every column of " + path + " was dropped");
    }

    // Timestamps must be strictly increasing (numerically when they parse,
    // lexicographically otherwise).
    for (std::size_t r = 1; r < table.timestamps.size(); ++r) {
        const std::string& a = table.timestamps[r - 1];
        const std::string& b = table.timestamps[r];
        bool increasing;
        try {
            std::size_t ua = 0, ub = 0;
            const double da = std::stod(a, &ua);
            const double db = std::stod(b, &ub);
            increasing = (ua == a.size() && ub == b.size()) ? da < db : a < b;
        } catch (const std::exception&) {
            increasing = a < b;
        }
        if (!increasing) {
            throw parse_error("load_csv: timestamps not strictly increasing at row " +
                              std::to_string(r + 1));
        }
    }
    return table;
}

inline void write_csv(const PriceTable& table, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw io_error("write_csv: cannot open " + path);
    out << "time";
    for (const auto& n : table.names) out << ',' << n;
    out << '\n';
    out.precision(17);
    for (std::size_t r = 0; r < table.n_rows(); ++r) {
        out << table.timestamps[r];
        for (const auto& col : table.columns) out << ',' << col[r];
        out << '\n';
    }
    if (!out) throw io_error("write_csv: failed writing " + path);
}

/// Simple differences row t = price[t+1] - price[t], one row per interval.
inline SampleSet to_increments(const PriceTable& table) {
    if (table.n_rows() < 2) throw argument_error("to_increments: need at least 2 rows");
    SampleSet set(table.n_rows() - 1, table.n_cols());
    for (std::size_t t = 0; t + 1 < table.n_rows(); ++t) {
        auto row = set.row(t);
        for (std::size_t c = 0; c < table.n_cols(); ++c) {
            row[c] = table.columns[c][t + 1] - table.columns[c][t];
        }
    }
    return set;
}

namespace detail {

inline std::vector<std::vector<double>> cholesky(const std::vector<std::vector<double>>& a) {
    const std::size_t n = a.size();
    std::vector<std::vector<double>> l(n, std::vector<double>(n, 0.0));
    for (std::size_t j = 0; j < n; ++j) {
        double pivot = a[j][j];
        for (std::size_t k = 0; k < j; ++k) pivot -= l[j][k] * l[j][k];
        if (pivot < -1e-10) {
            throw argument_error("gaussian_sampler: correlation matrix is not positive semidefinite");
        }
        l[j][j] = std::sqrt(std::max(pivot, 0.0));
        for (std::size_t i = j + 1; i < n; ++i) {
            double acc = a[i][j];
            for (std::size_t k = 0; k < j; ++k) acc -= l[i][k] * l[j][k];
            l[i][j] = l[j][j] > 0.0 ? acc / l[j][j] : 0.0;
        }
    }
    return l;
}

} // namespace detail

/// P i.i.d. draws of a Gaussian vector, independent columns unless a
/// correlation matrix is supplied. Deterministic under the seed.
inline std::shared_ptr<SampleSet> gaussian_sampler(
    const std::vector<oracles::GaussianSpec>& specs,
    const std::vector<std::vector<double>>& correlation, std::size_t p, std::uint64_t seed) {
    if (specs.empty()) throw argument_error("gaussian_sampler: no instrument specs");
    if (p == 0) throw argument_error("gaussian_sampler: P must be >= 1");
    for (const auto& s : specs) oracles::check_spec(s);

    const std::size_t d = specs.size();
    std::vector<std::vector<double>> chol;
    if (!correlation.empty()) {
        if (correlation.size() != d) {
            throw argument_error("gaussian_sampler: correlation matrix dim mismatch");
        }
        for (std::size_t i = 0; i < d; ++i) {
            if (correlation[i].size() != d) {
                throw argument_error("gaussian_sampler: correlation matrix not square");
            }
            for (std::size_t j = 0; j < i; ++j) {
                if (std::abs(correlation[i][j] - correlation[j][i]) > 1e-12) {
                    throw argument_error("gaussian_sampler: correlation matrix not symmetric");
                }
            }
        }
        chol = detail::cholesky(correlation);
    }

    auto set = std::make_shared<SampleSet>(p, d);
    RngStream rng(seed, 0);
    std::vector<double> z(d);
    for (std::size_t row = 0; row < p; ++row) {
        for (auto& x : z) x = rng.next_gaussian();
        auto out = set->row(row);
        if (chol.empty()) {
            for (std::size_t i = 0; i < d; ++i) out[i] = specs[i].mu + specs[i].sigma * z[i];
        } else {
            for (std::size_t i = 0; i < d; ++i) {
                double acc = 0.0;
                for (std::size_t j = 0; j <= i; ++j) acc += chol[i][j] * z[j];
                out[i] = specs[i].mu + specs[i].sigma * acc;
            }
        }
    }
    return set;
}

inline std::shared_ptr<SampleSet> gaussian_sampler(const std::vector<oracles::GaussianSpec>& specs,
                                                   std::size_t p, std::uint64_t seed) {
    return gaussian_sampler(specs, {}, p, seed);
}

} // namespace riskgrad::ingest
