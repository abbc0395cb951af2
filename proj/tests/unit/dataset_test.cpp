#include "deepmkl/dataset.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "deepmkl/error.hpp"

using namespace deepmkl;

namespace {

class TempFile {
public:
    explicit TempFile(const std::string& content) {
        path_ = std::filesystem::temp_directory_path() /
                ("deepmkl_test_" + std::to_string(reinterpret_cast<std::uintptr_t>(this)) + ".csv");
        std::ofstream(path_) << content;
    }
    ~TempFile() { std::filesystem::remove(path_); }
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

RawDataset toy(std::size_t n) {
    RawDataset raw;
    raw.feature_names = {"a", "b"};
    raw.negative_label = "neg";
    raw.positive_label = "pos";
    for (std::size_t i = 0; i < n; ++i) {
        raw.features.push_back({static_cast<double>(i), static_cast<double>(i * i)});
        raw.labels.push_back(i % 2 == 0 ? 1 : -1);
    }
    return raw;
}

}  // namespace

TEST(DatasetTest, LoadDropsRowsWithMissingValues) {
    TempFile f("x1,x2,label\n1,2,a\n3,,b\n5,6,b\n7,8,a\n");
    const auto raw = load_csv(f.path(), "label");
    EXPECT_EQ(raw.size(), 3u);
    EXPECT_EQ(raw.dropped_rows, 1u);
    EXPECT_EQ(raw.dim(), 2u);
}

TEST(DatasetTest, LoadDropsNonNumericCells) {
    TempFile f("x1,label,x2\n1,a,2\n?,b,4\n5,b,six\n7,b,8\n");
    const auto raw = load_csv(f.path(), "label");
    EXPECT_EQ(raw.size(), 2u);
    EXPECT_EQ(raw.dropped_rows, 2u);
    EXPECT_EQ(raw.feature_names, (std::vector<std::string>{"x1", "x2"}));
}

TEST(DatasetTest, LabelsMapLexicographically) {
    TempFile f("label,x\nb,1\na,2\nb,3\n");
    const auto raw = load_csv(f.path(), "label");
    EXPECT_EQ(raw.labels, (std::vector<int>{1, -1, 1}));
    EXPECT_EQ(raw.negative_label, "a");
    EXPECT_EQ(raw.positive_label, "b");
}

TEST(DatasetTest, LoadErrors) {
    TempFile three("x,label\n1,a\n2,b\n3,c\n");
    EXPECT_THROW(load_csv(three.path(), "label"), InputError);
    TempFile one("x,label\n1,a\n2,a\n");
    EXPECT_THROW(load_csv(one.path(), "label"), InputError);
    TempFile no_label("x,y\n1,2\n");
    EXPECT_THROW(load_csv(no_label.path(), "label"), InputError);
    TempFile all_bad("x,label\n,a\n?,b\n");
    EXPECT_THROW(load_csv(all_bad.path(), "label"), InputError);
    EXPECT_THROW(load_csv("/nonexistent/file.csv", "label"), InputError);
}

TEST(DatasetTest, LoadIsIdempotentOnItsOwnOutput) {
    TempFile f("x1,x2,label\n1.5,2,a\n3,,b\n5,6e-3,b\n-7,8,a\n");
    const auto first = load_csv(f.path(), "label");
    TempFile g("");
    save_csv(first, g.path(), "label");
    const auto second = load_csv(g.path(), "label");
    EXPECT_EQ(second.features, first.features);
    EXPECT_EQ(second.labels, first.labels);
    EXPECT_EQ(second.dropped_rows, 0u);
}

TEST(DatasetTest, SplitSizes) {
    const auto [tr, te] = split(toy(10), {1, 0.5});
    EXPECT_EQ(tr.size(), 5u);
    EXPECT_EQ(te.size(), 5u);
    const auto [tr2, te2] = split(toy(238), {3, 0.5});
    EXPECT_EQ(tr2.size(), 119u);
    EXPECT_EQ(te2.size(), 119u);
    const auto [tr3, te3] = split(toy(11), {3, 0.5});
    EXPECT_EQ(tr3.size(), 5u);
    EXPECT_EQ(te3.size(), 6u);
}

TEST(DatasetTest, SplitIsDeterministicPartition) {
    const auto raw = toy(40);
    const auto a = split(raw, {42, 0.5});
    const auto b = split(raw, {42, 0.5});
    EXPECT_EQ(a.first.features, b.first.features);
    EXPECT_EQ(a.second.features, b.second.features);

    std::multiset<double> seen;
    for (const auto& part : {a.first, a.second})
        for (const auto& row : part.features) seen.insert(row[0]);
    ASSERT_EQ(seen.size(), 40u);
    for (std::size_t i = 0; i < 40; ++i) EXPECT_EQ(seen.count(static_cast<double>(i)), 1u);

    const auto c = split(raw, {43, 0.5});
    EXPECT_NE(a.first.features, c.first.features);
}

TEST(DatasetTest, SplitRejectsDegenerateInputs) {
    EXPECT_THROW(split(toy(3), {1, 0.5}), InputError);
    EXPECT_THROW(split(toy(10), {1, 1.0}), InputError);
    auto single = toy(10);
    for (auto& l : single.labels) l = 1;
    single.labels[9] = -1;
    // Some seed leaves only the positive class in a 1-row training set.
    bool threw = false;
    for (std::uint64_t seed = 0; seed < 50 && !threw; ++seed) {
        try {
            split(single, {seed, 0.1});
        } catch (const InputError&) {
            threw = true;
        }
    }
    EXPECT_TRUE(threw);
}

TEST(DatasetTest, StandardizeUsesTrainingStatistics) {
    RawDataset train = toy(0), test = toy(0);
    for (double v : {1.0, 2.0, 3.0}) {
        train.features.push_back({v, 5.0});
        train.labels.push_back(1);
    }
    test.features.push_back({2.0, 5.0});
    test.features.push_back({4.0, 7.0});
    test.labels = {1, -1};
    const auto [tr, te] = standardize(train, test);

    EXPECT_NEAR(tr.X(0, 0), -1.0, 1e-15);
    EXPECT_NEAR(tr.X(1, 0), 0.0, 1e-15);
    EXPECT_NEAR(tr.X(2, 0), 1.0, 1e-15);
    for (int i = 0; i < 3; ++i) EXPECT_EQ(tr.X(i, 1), 0.0);  // constant column only centered
    EXPECT_NEAR(te.X(0, 0), 0.0, 1e-15);                       // equals the training mean
    EXPECT_NEAR(te.X(1, 0), 2.0, 1e-15);
    EXPECT_NEAR(te.X(1, 1), 2.0, 1e-15);
    EXPECT_EQ(tr.scaling[1].stddev, 1.0);
    EXPECT_NEAR(tr.scaling[0].mean, 2.0, 1e-15);
}

TEST(DatasetTest, StandardizedColumnsHaveZeroMeanUnitDeviation) {
    RawDataset raw = toy(0);
    std::mt19937_64 rng(9);
    std::normal_distribution<double> g(3.0, 7.0);
    for (int i = 0; i < 60; ++i) {
        raw.features.push_back({g(rng), g(rng) * 1e3});
        raw.labels.push_back(i % 3 == 0 ? -1 : 1);
    }
    const auto [tr_raw, te_raw] = split(raw, {5, 0.5});
    const auto [tr, te] = standardize(tr_raw, te_raw);
    for (Eigen::Index c = 0; c < tr.dim(); ++c) {
        const double mean = tr.X.col(c).mean();
        const double sd = std::sqrt((tr.X.col(c).array() - mean).square().sum() / (tr.size() - 1));
        EXPECT_LT(std::abs(mean), 1e-9);
        EXPECT_LT(std::abs(sd - 1.0), 1e-9);
    }
}

TEST(DatasetTest, StandardizeDimensionMismatch) {
    RawDataset a = toy(4), b = toy(4);
    b.feature_names.push_back("c");
    EXPECT_THROW(standardize(a, b), InputError);
}
