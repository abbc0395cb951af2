#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace deepmkl {

/// Rows straight from a CSV file, labels already mapped to -1/+1.
struct RawDataset {
    std::vector<std::vector<double>> features;
    std::vector<int> labels;
    std::vector<std::string> feature_names;
    /// Original label text for -1 and +1.
    std::string negative_label;
    std::string positive_label;
    /// Rows discarded by load_csv for empty or non-numeric cells.
    std::size_t dropped_rows = 0;

    std::size_t size() const { return labels.size(); }
    std::size_t dim() const { return feature_names.size(); }
};

struct ColumnScaling {
    double mean = 0.0;
    double stddev = 1.0;
};

/// Dense design matrix with -1/+1 labels.
struct Dataset {
    Eigen::MatrixXd X;
    Eigen::VectorXd y;
    std::vector<ColumnScaling> scaling;

    Eigen::Index size() const { return X.rows(); }
    Eigen::Index dim() const { return X.cols(); }
};

struct SplitSpec {
    std::uint64_t seed = 0;
    double train_fraction = 0.5;
};

/// Reads a header-first comma-separated file. Rows with an empty or
/// unparseable numeric cell are dropped. The two label values map to -1/+1
/// in lexicographic order of their text.
RawDataset load_csv(const std::filesystem::path& path, const std::string& label_column);

/// Writes the rows back out with the label column last, using the original label text.
void save_csv(const RawDataset& data, const std::filesystem::path& path, const std::string& label_column);

/// Seeded uniform permutation; the first floor(n * train_fraction) rows train.
/// Throws InputError if the training half ends up with a single class.
std::pair<RawDataset, RawDataset> split(const RawDataset& raw, const SplitSpec& spec);

/// Centers and scales both sets by training-set column statistics (sample
/// stddev). Columns with stddev below 1e-12 are only centered.
std::pair<Dataset, Dataset> standardize(const RawDataset& train, const RawDataset& test);

/// Plain conversion without scaling.
Dataset to_dataset(const RawDataset& raw);

}  // namespace deepmkl
