#include "deepmkl/kernels.hpp"

#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "deepmkl/error.hpp"
#include "oracles.hpp"

using namespace deepmkl;

TEST(KernelsTest, BaseEvalKnownValues) {
    const std::vector<double> a{1, 2}, b{3, 4};
    EXPECT_DOUBLE_EQ(base_eval(KernelSpec::linear(), a, b), 11.0);
    EXPECT_DOUBLE_EQ(base_eval(KernelSpec::rbf(1.0), a, a), 1.0);

    const std::vector<double> e1{1, 0}, e2{0, 1};
    EXPECT_DOUBLE_EQ(base_eval(KernelSpec::polynomial(1, 1, 2), e1, e2), 1.0);
    EXPECT_NEAR(base_eval(KernelSpec::sigmoid(-1e-4, 1.0), e1, e2), 0.7615941560, 1e-10);
}

TEST(KernelsTest, BaseEvalDimensionMismatchThrows) {
    const std::vector<double> a{1, 2}, b{3};
    EXPECT_THROW(base_eval(KernelSpec::linear(), a, b), InputError);
}

TEST(KernelsTest, BaseEvalNonFiniteThrows) {
    const std::vector<double> a{1e200}, b{1e200};
    EXPECT_THROW(base_eval(KernelSpec::polynomial(1, 1, 2), a, b), NumericError);
}

TEST(KernelsTest, BaseEvalIsSymmetric) {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g;
    for (const auto& spec : default_roster()) {
        for (int trial = 0; trial < 100; ++trial) {
            std::vector<double> x(5), y(5);
            for (auto& v : x) v = g(rng);
            for (auto& v : y) v = g(rng);
            EXPECT_EQ(base_eval(spec, x, y), base_eval(spec, y, x));
        }
    }
}

TEST(KernelsTest, ComposeEvalKnownValues) {
    EXPECT_DOUBLE_EQ(compose_eval(KernelSpec::linear(), 0.3), 0.3);
    EXPECT_DOUBLE_EQ(compose_eval(KernelSpec::rbf(1.0), 1.0), 1.0);
    EXPECT_DOUBLE_EQ(compose_eval(KernelSpec::polynomial(1, 1, 2), 1.0), 4.0);
}

TEST(KernelsTest, ComposeDerivKnownValues) {
    for (double k : {-1.0, -0.2, 0.0, 0.7}) EXPECT_DOUBLE_EQ(compose_deriv(KernelSpec::linear(), k), 1.0);
    EXPECT_NEAR(compose_deriv(KernelSpec::rbf(1.0), 1.0), 2.0, 1e-12);
    EXPECT_NEAR(compose_deriv(KernelSpec::polynomial(1, 1, 2), 0.0), 2.0, 1e-12);

    // The finite-difference oracle reproduces those two values.
    auto fd = [](const KernelSpec& s, double k) {
        return oracle::central_difference([&](double v) { return compose_eval(s, v); }, k, 1e-6);
    };
    EXPECT_NEAR(fd(KernelSpec::rbf(1.0), 1.0), 2.0, 1e-6);
    EXPECT_NEAR(fd(KernelSpec::polynomial(1, 1, 2), 0.0), 2.0, 1e-6);
}

TEST(KernelsTest, ComposeDerivMatchesFiniteDifferences) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<KernelSpec> specs = default_roster();
    specs.push_back(KernelSpec::polynomial(0.5, -0.3, 3));
    specs.push_back(KernelSpec::rbf(0.25));
    specs.push_back(KernelSpec::sigmoid(2.0, -0.5));
    for (const auto& spec : specs) {
        for (int i = 0; i < 1000; ++i) {
            const double k = u(rng);
            const double exact = compose_deriv(spec, k);
            const double fd = oracle::central_difference([&](double v) { return compose_eval(spec, v); }, k, 1e-6);
            EXPECT_LT(std::abs(exact - fd) / std::max(1.0, std::abs(exact)), 1e-5) << to_string(spec.kind) << " k=" << k;
        }
    }
}

TEST(KernelsTest, RbfCompositionMapsIntoUnitInterval) {
    const auto spec = KernelSpec::rbf(1.0);
    for (double k = -1.0; k <= 1.0; k += 0.01) {
        const double v = compose_eval(spec, k);
        EXPECT_GT(v, 0.0);
        EXPECT_LE(v, 1.0);
    }
    EXPECT_EQ(compose_eval(spec, 1.0), 1.0);
}

TEST(KernelsTest, ValidateRejectsBadHyperparameters) {
    EXPECT_THROW(KernelSpec::rbf(0.0).validate(), InputError);
    EXPECT_THROW(KernelSpec::polynomial(1, 1, 0).validate(), InputError);
    EXPECT_NO_THROW(KernelSpec::sigmoid().validate());
}

TEST(KernelsTest, RosterDefaults) {
    const auto r = default_roster();
    ASSERT_EQ(r.size(), 4u);
    EXPECT_EQ(r[1].gamma, 1.0);
    EXPECT_EQ(r[2].alpha, -1e-4);
    EXPECT_EQ(r[2].beta, 1.0);
    EXPECT_EQ(r[3].alpha, 1.0);
    EXPECT_EQ(r[3].beta, 1.0);
    EXPECT_EQ(r[3].delta, 2);
}

TEST(KernelsTest, JsonRoundTrip) {
    for (const auto& spec : default_roster()) {
        const nlohmann::json j = spec;
        EXPECT_EQ(j.get<KernelSpec>(), spec);
    }
    EXPECT_THROW(nlohmann::json::parse(R"({"kind":"rbf","gama":2})").get<KernelSpec>(), InputError);
    EXPECT_THROW(nlohmann::json::parse(R"({"kind":"arccos"})").get<KernelSpec>(), InputError);
    const auto partial = nlohmann::json::parse(R"({"kind":"polynomial","delta":3})").get<KernelSpec>();
    EXPECT_EQ(partial.delta, 3);
    EXPECT_EQ(partial.alpha, 1.0);
}
