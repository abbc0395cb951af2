#include "deepmkl/experiment.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "deepmkl/error.hpp"
#include "oracles.hpp"

using namespace deepmkl;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

class ExperimentTest : public ::testing::Test {
protected:
    fs::path dir;

    void SetUp() override {
        dir = fs::temp_directory_path() /
              ("deepmkl_exp_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::create_directories(dir);
        write_blobs("blobs.csv", 40, 1.5, 4);
    }
    void TearDown() override { fs::remove_all(dir); }

    void write_blobs(const std::string& name, int n, double sep, std::uint64_t seed) {
        Eigen::MatrixXd X;
        Eigen::VectorXd y;
        oracle::make_blobs(n, sep, seed, X, y);
        std::ofstream out(dir / name);
        out << "x1,x2,cls\n";
        for (int i = 0; i < n; ++i) out << X(i, 0) << ',' << X(i, 1) << ',' << (y(i) > 0 ? "pos" : "neg") << '\n';
    }

    json base(std::initializer_list<const char*> methods) const {
        json j;
        j["datasets"] = json::array({{{"name", "blobs"}, {"path", "blobs.csv"}, {"label", "cls"}}});
        j["methods"] = json::array();
        for (const char* m : methods) {
            const std::string s(m);
            const auto dash = s.find('-');
            j["methods"].push_back({{"objective", s.substr(0, dash)}, {"layers", std::stoi(s.substr(dash + 1))}});
        }
        j["train"] = {{"max_iters", 20}};
        j["threads"] = 1;
        return j;
    }
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_F(ExperimentTest, ParsesConfig) {
    json j = base({"span-1", "dual-2", "span-1"});
    j["seeds"] = {3, 4};
    j["reference"] = "dual-2";
    j["rank_ties"] = "dense";
    j["train"] = {{"step_size", 0.01}, {"eta", 0.5}, {"C", 2.0}, {"max_iters", 7}};
    j["architecture"] = {{"sets", 2}};
    j["output"] = {{"json", "out/r.json"}};
    const ExperimentConfig c = parse_experiment_config(j, dir);
    EXPECT_EQ(c.datasets.at(0).path, dir / "blobs.csv");
    ASSERT_EQ(c.methods.size(), 3u);
    EXPECT_EQ(c.methods[0].name, "span-1");
    EXPECT_EQ(c.methods[1].name, "dual-2");
    EXPECT_EQ(c.methods[1].objective, Objective::Dual);
    EXPECT_EQ(c.methods[2].name, "span-1#2");
    EXPECT_EQ(c.seeds, (std::vector<std::uint64_t>{3, 4}));
    EXPECT_EQ(c.rank_ties, stats::TieRule::Dense);
    EXPECT_EQ(c.train.step_size, 0.01);
    EXPECT_EQ(c.train.span.eta, 0.5);
    EXPECT_EQ(c.train.C, 2.0);
    EXPECT_EQ(c.train.max_iters, 7);
    EXPECT_EQ(c.sets, 2);
    EXPECT_EQ(c.json_out, dir / "out/r.json");
    EXPECT_EQ(c.kernels.size(), 4u);
}

TEST_F(ExperimentTest, RejectsUnknownKeysAndBadValues) {
    auto expect_bad = [&](const std::function<void(json&)>& edit) {
        json j = base({"span-1"});
        edit(j);
        EXPECT_THROW(parse_experiment_config(j, dir), InputError) << j.dump();
    };
    expect_bad([](json& j) { j["learning_rate"] = 0.1; });
    expect_bad([](json& j) { j["datasets"][0]["delimiter"] = ";"; });
    expect_bad([](json& j) { j["methods"][0]["sets"] = 2; });
    expect_bad([](json& j) { j["train"]["momentum"] = 0.9; });
    expect_bad([](json& j) { j["output"] = {{"csv", "x.csv"}}; });
    expect_bad([](json& j) { j["methods"] = json::array(); });
    expect_bad([](json& j) { j["datasets"] = json::array(); });
    expect_bad([](json& j) { j["methods"][0]["objective"] = "margin"; });
    expect_bad([](json& j) { j["reference"] = "span-9"; });
    expect_bad([](json& j) { j["rank_ties"] = "max"; });

    std::ofstream(dir / "broken.json") << "{ not json";
    EXPECT_THROW(load_experiment_config(dir / "broken.json"), InputError);
}

TEST_F(ExperimentTest, SingleCell) {
    const ResultsTable t = run(parse_experiment_config(base({"span-1"}), dir));
    ASSERT_EQ(t.accuracy.size(), 1u);
    ASSERT_EQ(t.accuracy[0].size(), 1u);
    ASSERT_EQ(t.accuracy[0][0].size(), 1u);
    ASSERT_TRUE(t.accuracy[0][0][0].has_value());
    EXPECT_GE(*t.accuracy[0][0][0], 0.0);
    EXPECT_LE(*t.accuracy[0][0][0], 1.0);
    EXPECT_EQ(t.train_sizes, (std::vector<std::size_t>{20}));
    EXPECT_TRUE(t.failures.empty());
    EXPECT_EQ(t.reference, "span-1");
}

TEST_F(ExperimentTest, DuplicateMethodsGiveIdenticalColumns) {
    json j = base({"span-2", "span-2"});
    write_blobs("more.csv", 30, 1.0, 8);
    j["datasets"].push_back({{"name", "more"}, {"path", "more.csv"}, {"label", "cls"}});
    j["seeds"] = {0, 1, 2};
    j["threads"] = 2;
    const ResultsTable t = run(parse_experiment_config(j, dir));
    EXPECT_EQ(t.methods, (std::vector<std::string>{"span-2", "span-2#2"}));
    EXPECT_EQ(t.accuracy[0][0], t.accuracy[0][1]);
    EXPECT_EQ(t.accuracy[1][0], t.accuracy[1][1]);
    const Aggregates a = t.aggregates();
    EXPECT_EQ(a.mean_ranks, (std::vector<double>{1.5, 1.5}));
    EXPECT_EQ(a.p_values[0], 1.0);
}

TEST_F(ExperimentTest, SpanOneVersusTwoReport) {
    json j = base({"span-1", "span-2"});
    j["seeds"] = {0, 1};
    j["output"] = {{"json", "results.json"}, {"markdown", "results.md"}};
    std::vector<CellResult> cells;
    const ResultsTable t = run(parse_experiment_config(j, dir), [&](const CellResult& c) { cells.push_back(c); });
    EXPECT_EQ(cells.size(), 4u);
    for (const auto& per_method : t.accuracy[0]) {
        for (const auto& v : per_method) {
            ASSERT_TRUE(v.has_value());
            EXPECT_GE(*v, 0.0);
            EXPECT_LE(*v, 1.0);
        }
    }
    const json report = json::parse(slurp(dir / "results.json"));
    for (const char* key : {"datasets", "train_sizes", "methods", "seeds", "accuracy", "failures", "reference", "aggregates"})
        EXPECT_TRUE(report.contains(key)) << key;
    EXPECT_EQ(report["aggregates"]["mean_ranks"].size(), 2u);
    // One dataset: too few pairs for a p-value.
    EXPECT_TRUE(report["aggregates"]["p_values"].empty());

    const std::string md = slurp(dir / "results.md");
    EXPECT_NE(md.find("| blobs | 20 |"), std::string::npos);
    EXPECT_NE(md.find("| Rank | |"), std::string::npos);
    EXPECT_NE(md.find("| p-value vs span-2 | |"), std::string::npos);
}

TEST_F(ExperimentTest, FailedCellsAreRecorded) {
    // Too few rows to split: every cell of this dataset fails.
    std::ofstream(dir / "one.csv") << "x,cls\n1,a\n2,b\n3,a\n";
    json j = base({"span-1", "dual-1"});
    j["datasets"].push_back({{"name", "one"}, {"path", "one.csv"}, {"label", "cls"}});
    const ResultsTable t = run(parse_experiment_config(j, dir));
    EXPECT_TRUE(t.accuracy[0][0][0].has_value());
    EXPECT_FALSE(t.accuracy[1][0][0].has_value());
    EXPECT_FALSE(t.accuracy[1][1][0].has_value());
    ASSERT_EQ(t.failures.size(), 2u);
    EXPECT_EQ(t.failures[0].dataset, 1u);
    EXPECT_FALSE(t.failures[0].reason.empty());
    const Aggregates a = t.aggregates();
    EXPECT_EQ(a.ranked_datasets, 1u);
    EXPECT_NE(render_markdown(t).find("n/a"), std::string::npos);
}

TEST_F(ExperimentTest, JsonReportReproducesMarkdown) {
    json j = base({"span-1", "dual-1", "span-2"});
    j["seeds"] = {5, 6};
    j["rank_ties"] = "min";
    write_blobs("wide.csv", 30, 0.8, 9);
    j["datasets"].push_back({{"name", "wide"}, {"path", "wide.csv"}, {"label", "cls"}});
    const ResultsTable t = run(parse_experiment_config(j, dir));
    const std::string md = render_markdown(t);
    const ResultsTable back = results_from_json(json::parse(json(t).dump()));
    EXPECT_EQ(render_markdown(back), md);
    EXPECT_EQ(json(back).dump(), json(t).dump());

    ResultsTable published = results_from_json(json::parse(slurp(fs::path(DEEPMKL_DATA_DIR) / "reference_grid.json")));
    const std::string pm = render_markdown(published);
    EXPECT_EQ(render_markdown(results_from_json(json::parse(json(published).dump()))), pm);
    EXPECT_NE(pm.find("| Sonar | 104 | 89.42 | 88.46 | 89.42 | 89.42 | 88.46 | 90.38 | 89.42 |"), std::string::npos);
}
