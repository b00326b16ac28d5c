#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "imbo/linalg.hpp"
#include "imbo/rng.hpp"

namespace imbo {

/// Feature matrix plus binary labels; the sample container every other
/// module works on. Immutable by convention after construction.
struct LabeledDataset {
    Matrix features;                  // n x d
    std::vector<std::uint8_t> labels; // values in {0, 1}

    std::size_t n() const { return labels.size(); }
    std::size_t dim() const { return features.cols(); }

    void validate() const {
        if (features.rows() != labels.size())
            throw std::invalid_argument("LabeledDataset: feature rows and label count differ");
        if (!features.all_finite())
            throw std::invalid_argument("LabeledDataset: non-finite feature value");
        for (auto y : labels)
            if (y != 0 && y != 1) throw std::invalid_argument("LabeledDataset: label outside {0,1}");
    }

    LabeledDataset select_rows(std::span<const std::size_t> rows) const {
        LabeledDataset out;
        out.features = Matrix(rows.size(), dim());
        out.labels.reserve(rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            auto src = features.row(rows[i]);
            std::copy(src.begin(), src.end(), out.features.row(i).begin());
            out.labels.push_back(labels[rows[i]]);
        }
        return out;
    }
};

/// Index partition into minority (label 1) and majority (label 0).
struct ClassView {
    std::vector<std::size_t> minority_indices;
    std::vector<std::size_t> majority_indices;
    std::size_t n1 = 0;
    std::size_t n0 = 0;
    double p_hat = 0.0;
};

struct SplitSpec {
    double train_fraction = 0.7;
    std::uint64_t seed = 0;
};

/// Per-feature standardization parameters fitted on a training set.
/// Constant features (zero sample std) are flagged and passed through.
struct ScalingParams {
    std::vector<double> mean;
    std::vector<double> stddev; // 0 for constant features
    std::vector<std::uint8_t> is_constant;
};

inline ClassView partition_classes(const LabeledDataset& ds) {
    ClassView v;
    for (std::size_t i = 0; i < ds.n(); ++i) {
        if (ds.labels[i] == 1)
            v.minority_indices.push_back(i);
        else
            v.majority_indices.push_back(i);
    }
    v.n1 = v.minority_indices.size();
    v.n0 = v.majority_indices.size();
    v.p_hat = ds.n() == 0 ? 0.0 : static_cast<double>(v.n1) / static_cast<double>(ds.n());
    return v;
}

namespace detail {

inline std::int64_t round_half_up(double x) {
    return std::llround(x); // half away from zero == half up for nonnegative x
}

template <class G>
void shuffle_indices(std::vector<std::size_t>& idx, G& g) {
    for (std::size_t i = idx.size(); i > 1; --i)
        std::swap(idx[i - 1], idx[sample_index(g, i)]);
}

/// Uniform subset of `count` entries from `pool`, returned in ascending order
/// so downstream row selection preserves the original row order.
template <class G>
std::vector<std::size_t> sample_subset(std::vector<std::size_t> pool, std::size_t count, G& g) {
    shuffle_indices(pool, g);
    pool.resize(count);
    std::sort(pool.begin(), pool.end());
    return pool;
}

} // namespace detail

/// Uniform split without replacement; |train| = round(train_fraction * n),
/// rounding half up. Row order within each side follows the input order.
inline std::pair<LabeledDataset, LabeledDataset> train_validation_split(const LabeledDataset& ds,
                                                                        const SplitSpec& spec,
                                                                        const RngStream& rng) {
    if (ds.n() < 2) throw std::invalid_argument("train_validation_split: need at least 2 rows");
    if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0))
        throw std::invalid_argument("train_validation_split: train_fraction must be in (0,1)");
    RngStream g = rng.substream(spec.seed);
    std::vector<std::size_t> idx(ds.n());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    detail::shuffle_indices(idx, g);
    const auto n_train = static_cast<std::size_t>(detail::round_half_up(spec.train_fraction * static_cast<double>(ds.n())));
    std::vector<std::size_t> train_idx(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
    std::vector<std::size_t> val_idx(idx.begin() + static_cast<std::ptrdiff_t>(n_train), idx.end());
    std::sort(train_idx.begin(), train_idx.end());
    std::sort(val_idx.begin(), val_idx.end());
    return {ds.select_rows(train_idx), ds.select_rows(val_idx)};
}

/// Downsamples the minority class so n1' / (n1' + n0) hits target_ratio up to
/// rounding. Majority rows are untouched.
inline LabeledDataset subsample_minority(const LabeledDataset& ds, double target_ratio, RngStream& rng) {
    if (!(target_ratio > 0.0 && target_ratio < 1.0))
        throw std::invalid_argument("subsample_minority: target_ratio must be in (0,1)");
    const ClassView v = partition_classes(ds);
    if (v.n1 == 0 || v.n0 == 0) throw std::invalid_argument("subsample_minority: both classes must be present");
    const auto keep =
        static_cast<std::size_t>(detail::round_half_up(target_ratio * static_cast<double>(v.n0) / (1.0 - target_ratio)));
    if (keep > v.n1)
        throw std::invalid_argument("subsample_minority: target not achievable by subsampling (would need " +
                                    std::to_string(keep) + " minority rows, have " + std::to_string(v.n1) + ")");
    auto kept_minority = detail::sample_subset(v.minority_indices, keep, rng);
    std::vector<std::size_t> rows;
    rows.reserve(keep + v.n0);
    rows.insert(rows.end(), v.majority_indices.begin(), v.majority_indices.end());
    rows.insert(rows.end(), kept_minority.begin(), kept_minority.end());
    std::sort(rows.begin(), rows.end());
    return ds.select_rows(rows);
}

/// Uniformly downsamples the larger class to the smaller class's size.
inline LabeledDataset balance_by_undersampling(const LabeledDataset& ds, RngStream& rng) {
    const ClassView v = partition_classes(ds);
    if (v.n1 == 0 || v.n0 == 0) throw std::invalid_argument("balance_by_undersampling: a class is empty");
    if (v.n1 == v.n0) return ds;
    const auto& larger = v.n1 > v.n0 ? v.minority_indices : v.majority_indices;
    const auto& smaller = v.n1 > v.n0 ? v.majority_indices : v.minority_indices;
    auto kept = detail::sample_subset(larger, smaller.size(), rng);
    std::vector<std::size_t> rows;
    rows.reserve(2 * smaller.size());
    rows.insert(rows.end(), smaller.begin(), smaller.end());
    rows.insert(rows.end(), kept.begin(), kept.end());
    std::sort(rows.begin(), rows.end());
    return ds.select_rows(rows);
}

inline ScalingParams fit_scaling(const LabeledDataset& train) {
    if (train.n() == 0) throw std::invalid_argument("fit_scaling: empty training set");
    const std::size_t d = train.dim();
    ScalingParams p;
    p.mean = column_means(train.features);
    p.stddev.assign(d, 0.0);
    p.is_constant.assign(d, 0);
    if (train.n() >= 2) {
        for (std::size_t i = 0; i < train.n(); ++i) {
            auto r = train.features.row(i);
            for (std::size_t j = 0; j < d; ++j) {
                const double c = r[j] - p.mean[j];
                p.stddev[j] += c * c;
            }
        }
        for (std::size_t j = 0; j < d; ++j) p.stddev[j] = std::sqrt(p.stddev[j] / static_cast<double>(train.n() - 1));
    }
    for (std::size_t j = 0; j < d; ++j)
        if (!(p.stddev[j] > 0.0)) {
            p.stddev[j] = 0.0;
            p.is_constant[j] = 1;
        }
    return p;
}

inline LabeledDataset apply_scaling(const LabeledDataset& ds, const ScalingParams& p) {
    if (ds.dim() != p.mean.size()) throw std::invalid_argument("apply_scaling: dimension mismatch");
    LabeledDataset out = ds;
    for (std::size_t i = 0; i < out.n(); ++i) {
        auto r = out.features.row(i);
        for (std::size_t j = 0; j < out.dim(); ++j)
            if (!p.is_constant[j]) r[j] = (r[j] - p.mean[j]) / p.stddev[j];
    }
    return out;
}

/// Z-scores using train statistics (sample std, n-1 denominator) and applies
/// the same parameters to every dataset in `others`.
inline std::tuple<LabeledDataset, std::vector<LabeledDataset>, ScalingParams>
standardize(const LabeledDataset& train, const std::vector<LabeledDataset>& others) {
    const ScalingParams p = fit_scaling(train);
    std::vector<LabeledDataset> scaled;
    scaled.reserve(others.size());
    for (const auto& ds : others) scaled.push_back(apply_scaling(ds, p));
    return {apply_scaling(train, p), std::move(scaled), p};
}

// ---------------------------------------------------------------------------
// CSV ingestion. Dialect: comma separator, '.' decimal point, optional
// header, UTF-8, no quoting of numerics.
// ---------------------------------------------------------------------------

using LabelColumn = std::variant<std::string, std::size_t>;

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            cells.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    cells.push_back(cur);
    return cells;
}

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

inline std::optional<double> parse_double(const std::string& raw) {
    const std::string s = trim(raw);
    if (s.empty()) return std::nullopt;
    double value = 0.0;
    const char* begin = s.data();
    const char* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end) return std::nullopt;
    return value;
}

} // namespace detail

/// Loads a CSV file into a LabeledDataset. The label column may be named (with
/// a header) or given by 0-based index; it is mapped onto {0,1}; every other
/// column must be numeric. Header columns listed in `drop_columns` are skipped
/// (e.g. the `synthetic` marker written by the oversample CLI). Errors carry
/// 1-based row/column locations.
inline LabeledDataset load_csv(const std::string& path, const LabelColumn& label_column, bool has_header,
                               const std::vector<std::string>& drop_columns = {}) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_csv: cannot open '" + path + "'");

    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    while (!lines.empty() && detail::trim(lines.back()).empty()) lines.pop_back();
    if (lines.empty()) throw std::runtime_error("load_csv: no data rows in '" + path + "'");

    std::vector<std::string> header;
    std::size_t first_data = 0;
    if (has_header) {
        header = detail::split_csv_line(lines[0]);
        first_data = 1;
        if (lines.size() <= 1) throw std::runtime_error("load_csv: no data rows in '" + path + "'");
    }

    const std::size_t n_cols = detail::split_csv_line(lines[first_data]).size();
    std::size_t label_idx;
    if (std::holds_alternative<std::size_t>(label_column)) {
        label_idx = std::get<std::size_t>(label_column);
    } else {
        const std::string& name = std::get<std::string>(label_column);
        if (has_header) {
            auto it = std::find_if(header.begin(), header.end(),
                                   [&](const std::string& h) { return detail::trim(h) == name; });
            if (it == header.end()) throw std::runtime_error("load_csv: label column '" + name + "' not found in header");
            label_idx = static_cast<std::size_t>(it - header.begin());
        } else {
            // no header: accept a numeric column reference
            auto parsed = detail::parse_double(name);
            if (!parsed || *parsed < 0 || *parsed != std::floor(*parsed))
                throw std::runtime_error("load_csv: label column '" + name + "' needs a header or a column index");
            label_idx = static_cast<std::size_t>(*parsed);
        }
    }
    if (label_idx >= n_cols) throw std::runtime_error("load_csv: label column index out of range");

    std::vector<std::uint8_t> dropped(n_cols, 0);
    std::size_t n_dropped = 0;
    if (has_header && !drop_columns.empty()) {
        for (std::size_t c = 0; c < header.size() && c < n_cols; ++c) {
            if (c == label_idx) continue;
            const std::string name = detail::trim(header[c]);
            if (std::find(drop_columns.begin(), drop_columns.end(), name) != drop_columns.end()) {
                dropped[c] = 1;
                ++n_dropped;
            }
        }
    }

    Matrix features(lines.size() - first_data, n_cols - 1 - n_dropped);
    std::vector<std::string> raw_labels;
    raw_labels.reserve(lines.size() - first_data);

    for (std::size_t r = first_data; r < lines.size(); ++r) {
        const auto cells = detail::split_csv_line(lines[r]);
        if (cells.size() != n_cols)
            throw std::runtime_error("load_csv: row " + std::to_string(r + 1) + " has " + std::to_string(cells.size()) +
                                     " cells, expected " + std::to_string(n_cols));
        auto dst = features.row(r - first_data);
        std::size_t j = 0;
        for (std::size_t c = 0; c < n_cols; ++c) {
            if (c == label_idx) {
                raw_labels.push_back(detail::trim(cells[c]));
                continue;
            }
            if (dropped[c]) continue;
            auto v = detail::parse_double(cells[c]);
            if (!v)
                throw std::runtime_error("load_csv: non-numeric feature cell at row " + std::to_string(r + 1) +
                                         ", column " + std::to_string(c + 1));
            dst[j++] = *v;
        }
    }

    // Map the label column onto {0,1}: direct when values already parse to 0/1,
    // otherwise by ascending order of exactly two distinct values.
    std::vector<std::uint8_t> labels(raw_labels.size());
    bool direct = true;
    for (const auto& s : raw_labels) {
        auto v = detail::parse_double(s);
        if (!v || (*v != 0.0 && *v != 1.0)) {
            direct = false;
            break;
        }
    }
    if (direct) {
        for (std::size_t i = 0; i < raw_labels.size(); ++i)
            labels[i] = static_cast<std::uint8_t>(*detail::parse_double(raw_labels[i]));
    } else {
        std::vector<std::string> distinct = raw_labels;
        std::sort(distinct.begin(), distinct.end());
        distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
        if (distinct.size() != 2) throw std::runtime_error("load_csv: non-binary labels in '" + path + "'");
        auto n0 = detail::parse_double(distinct[0]);
        auto n1 = detail::parse_double(distinct[1]);
        if (n0 && n1 && *n0 > *n1) std::swap(distinct[0], distinct[1]); // numeric order when both numeric
        for (std::size_t i = 0; i < raw_labels.size(); ++i) labels[i] = raw_labels[i] == distinct[1] ? 1 : 0;
    }

    LabeledDataset ds{std::move(features), std::move(labels)};
    ds.validate();
    return ds;
}

/// Writes the dataset with a `label` column appended last; optionally a
/// `synthetic` 0/1 column after it.
inline void save_csv(const LabeledDataset& ds, const std::string& path,
                     const std::vector<std::uint8_t>* synthetic_flags = nullptr) {
    if (synthetic_flags && synthetic_flags->size() != ds.n())
        throw std::invalid_argument("save_csv: synthetic flag count mismatch");
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_csv: cannot open '" + path + "' for writing");
    for (std::size_t j = 0; j < ds.dim(); ++j) out << "x" << j << ",";
    out << "label";
    if (synthetic_flags) out << ",synthetic";
    out << "\n";
    char buf[40];
    for (std::size_t i = 0; i < ds.n(); ++i) {
        auto r = ds.features.row(i);
        for (std::size_t j = 0; j < ds.dim(); ++j) {
            std::snprintf(buf, sizeof(buf), "%.17g", r[j]);
            out << buf << ",";
        }
        out << static_cast<int>(ds.labels[i]);
        if (synthetic_flags) out << "," << static_cast<int>((*synthetic_flags)[i]);
        out << "\n";
    }
}

} // namespace imbo
