#include "deepmkl/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <random>
#include <sstream>
#include <string_view>

#include "deepmkl/error.hpp"

namespace deepmkl {

namespace {

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\"");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\"");
    return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string_view rest(line);
    while (true) {
        const auto comma = rest.find(',');
        cells.push_back(trim(rest.substr(0, comma)));
        if (comma == std::string_view::npos) break;
        rest.remove_prefix(comma + 1);
    }
    return cells;
}

bool parse_double(const std::string& cell, double& out) {
    if (cell.empty()) return false;
    const char* begin = cell.data();
    const char* end = begin + cell.size();
    if (*begin == '+') ++begin;
    const auto [ptr, ec] = std::from_chars(begin, end, out);
    return ec == std::errc() && ptr == end && std::isfinite(out);
}

}  // namespace

RawDataset load_csv(const std::filesystem::path& path, const std::string& label_column) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open '" + path.string() + "'");

    std::string line;
    if (!std::getline(in, line)) throw InputError("'" + path.string() + "' is empty");
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    const auto header = split_line(line);
    const auto label_it = std::find(header.begin(), header.end(), label_column);
    if (label_it == header.end()) {
        throw InputError("label column '" + label_column + "' not found in '" + path.string() + "'");
    }
    const auto label_idx = static_cast<std::size_t>(label_it - header.begin());

    RawDataset data;
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (c != label_idx) data.feature_names.push_back(header[c]);
    }

    std::vector<std::string> label_text;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        const auto cells = split_line(line);
        if (cells.size() != header.size() || cells[label_idx].empty()) {
            ++data.dropped_rows;
            continue;
        }
        std::vector<double> row;
        row.reserve(header.size() - 1);
        bool ok = true;
        for (std::size_t c = 0; c < cells.size() && ok; ++c) {
            if (c == label_idx) continue;
            double v = 0.0;
            ok = parse_double(cells[c], v);
            row.push_back(v);
        }
        if (!ok) {
            ++data.dropped_rows;
            continue;
        }
        data.features.push_back(std::move(row));
        label_text.push_back(cells[label_idx]);
    }

    if (data.features.empty()) throw InputError("no rows of '" + path.string() + "' survived filtering");

    std::vector<std::string> distinct = label_text;
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    if (distinct.size() != 2) {
        throw InputError("label column '" + label_column + "' must have exactly 2 distinct values, found " +
                         std::to_string(distinct.size()));
    }
    data.negative_label = distinct[0];
    data.positive_label = distinct[1];
    data.labels.reserve(label_text.size());
    for (const auto& t : label_text) data.labels.push_back(t == data.positive_label ? 1 : -1);
    return data;
}

void save_csv(const RawDataset& data, const std::filesystem::path& path, const std::string& label_column) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write '" + path.string() + "'");
    for (const auto& name : data.feature_names) out << name << ',';
    out << label_column << '\n';
    out << std::setprecision(17);
    for (std::size_t r = 0; r < data.size(); ++r) {
        for (double v : data.features[r]) out << v << ',';
        out << (data.labels[r] > 0 ? data.positive_label : data.negative_label) << '\n';
    }
}

std::pair<RawDataset, RawDataset> split(const RawDataset& raw, const SplitSpec& spec) {
    const std::size_t n = raw.size();
    if (n < 4) throw InputError("split needs at least 4 rows");
    if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0)) {
        throw InputError("train_fraction must lie in (0, 1)");
    }

    // Fisher-Yates with a fixed engine so splits are reproducible across standard libraries.
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::mt19937_64 rng(spec.seed);
    for (std::size_t i = n - 1; i > 0; --i) {
        const auto j = static_cast<std::size_t>(rng() % (i + 1));
        std::swap(order[i], order[j]);
    }

    const auto n_train = static_cast<std::size_t>(std::floor(static_cast<double>(n) * spec.train_fraction));
    RawDataset train, test;
    for (RawDataset* part : {&train, &test}) {
        part->feature_names = raw.feature_names;
        part->negative_label = raw.negative_label;
        part->positive_label = raw.positive_label;
    }
    for (std::size_t i = 0; i < n; ++i) {
        RawDataset& part = i < n_train ? train : test;
        part.features.push_back(raw.features[order[i]]);
        part.labels.push_back(raw.labels[order[i]]);
    }

    const bool has_pos = std::count(train.labels.begin(), train.labels.end(), 1) > 0;
    const bool has_neg = std::count(train.labels.begin(), train.labels.end(), -1) > 0;
    if (!has_pos || !has_neg) {
        throw InputError("split with seed " + std::to_string(spec.seed) +
                         " left a single-class training set; choose another seed");
    }
    return {std::move(train), std::move(test)};
}

Dataset to_dataset(const RawDataset& raw) {
    Dataset ds;
    const auto n = static_cast<Eigen::Index>(raw.size());
    const auto d = static_cast<Eigen::Index>(raw.dim());
    ds.X.resize(n, d);
    ds.y.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& row = raw.features[static_cast<std::size_t>(i)];
        if (static_cast<Eigen::Index>(row.size()) != d) throw InputError("ragged feature rows");
        for (Eigen::Index c = 0; c < d; ++c) ds.X(i, c) = row[static_cast<std::size_t>(c)];
        ds.y(i) = raw.labels[static_cast<std::size_t>(i)];
    }
    ds.scaling.assign(static_cast<std::size_t>(d), ColumnScaling{});
    return ds;
}

std::pair<Dataset, Dataset> standardize(const RawDataset& train, const RawDataset& test) {
    if (train.size() == 0) throw InputError("standardize: empty training set");
    if (train.dim() != test.dim()) throw InputError("standardize: train and test dimensions differ");

    Dataset tr = to_dataset(train);
    Dataset te = to_dataset(test);
    const Eigen::Index n = tr.size();
    for (Eigen::Index c = 0; c < tr.dim(); ++c) {
        const double mean = tr.X.col(c).mean();
        double ss = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) ss += (tr.X(i, c) - mean) * (tr.X(i, c) - mean);
        const double sd = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;
        ColumnScaling s{mean, sd < 1e-12 ? 1.0 : sd};
        tr.X.col(c) = (tr.X.col(c).array() - s.mean) / s.stddev;
        te.X.col(c) = (te.X.col(c).array() - s.mean) / s.stddev;
        tr.scaling[static_cast<std::size_t>(c)] = s;
        te.scaling[static_cast<std::size_t>(c)] = s;
    }
    return {std::move(tr), std::move(te)};
}

}  // namespace deepmkl
