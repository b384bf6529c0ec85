#include "goa/povm_search.hpp"

#include <gtest/gtest.h>

#include <chrono>
#include <functional>
#include <random>

using namespace goa;

namespace {

CostDensity sample(const ThetaGrid& grid, const std::function<double(double)>& g) {
    std::vector<double> v(grid.size());
    for (int j = 0; j < grid.size(); ++j) v[j] = g(grid.at(j));
    return CostDensity(grid, std::move(v));
}

/// Exhaustive minimum of int f g over grid vertices: every antipodal pair and
/// every triple whose delta weights are nonnegative.
double brute_force_minimum(const CostDensity& d) {
    const int n = d.grid.size();
    const auto& g = d.values;
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n / 2; ++i) best = std::min(best, g[i] + g[i + n / 2]);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            for (int k = j + 1; k < n; ++k) {
                const double t1 = d.grid.at(i), t2 = d.grid.at(j), t3 = d.grid.at(k);
                const double a = std::sin(2 * (t3 - t2)), b = std::sin(2 * (t1 - t3)), c = std::sin(2 * (t2 - t1));
                const double den = a + b + c;
                if (std::abs(den) < 1e-12) continue;
                const double w1 = 2 * a / den, w2 = 2 * b / den, w3 = 2 * c / den;
                if (w1 < 0 || w2 < 0 || w3 < 0) continue;
                best = std::min(best, w1 * g[i] + w2 * g[j] + w3 * g[k]);
            }
    return best;
}

double support_value(const CostDensity& d, const TiltedSupport& s) { return integral_value(d, build_povm(s)); }

void expect_support(const TiltedSupport& s, const std::vector<double>& expect, double tol) {
    ASSERT_EQ(s.support.size(), expect.size());
    for (std::size_t i = 0; i < expect.size(); ++i) EXPECT_NEAR(s.support[i], expect[i], tol) << "angle " << i;
}

const double kQuadNorm = 24.0 / (kPi * kPi * kPi);

double quad(double t) { return kQuadNorm * (t - kPi / 2) * (t - kPi / 2); }
double minus_example(double t) { return (2 + std::sin(4 * t) - std::sin(6 * t)) / kPi; }
double plus_example(double t) { return (2 + std::sin(4 * t) + std::sin(6 * t)) / kPi; }

}  // namespace

TEST(Condition2Weights, TrineIsUniform) {
    const auto w = condition2_weights(0.0, kPi / 3, 2 * kPi / 3);
    for (double x : w) EXPECT_NEAR(x, 2.0 / 3.0, 1e-14);
}

TEST(Condition2Weights, SatisfyConstraints) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    int checked = 0;
    while (checked < 200) {
        std::array<double, 3> t{u(rng) * kPi, u(rng) * kPi, u(rng) * kPi};
        std::sort(t.begin(), t.end());
        if (!(t[1] - t[0] < kPi / 2 && t[2] - t[1] < kPi / 2 && t[0] + kPi - t[2] < kPi / 2)) continue;
        const auto w = condition2_weights(t[0], t[1], t[2]);
        double s0 = 0, sc = 0, ss = 0;
        for (int i = 0; i < 3; ++i) {
            EXPECT_GT(w[i], 0.0);
            s0 += w[i];
            sc += w[i] * std::cos(2 * t[i]);
            ss += w[i] * std::sin(2 * t[i]);
        }
        EXPECT_NEAR(s0, 2.0, 1e-12);
        EXPECT_NEAR(sc, 0.0, 1e-12);
        EXPECT_NEAR(ss, 0.0, 1e-12);
        TiltedSupport sup;
        sup.condition = SupportCondition::Condition2;
        sup.support = {t[0], t[1], t[2]};
        EXPECT_LT(completeness_residual(build_povm(sup)), kCompletenessTol);
        ++checked;
    }
}

TEST(BuildPovm, RejectsMalformedSupport) {
    TiltedSupport s;
    s.condition = SupportCondition::Condition2;
    s.support = {0.1, 0.2};
    EXPECT_THROW(build_povm(s), InvalidSupport);
    s.condition = SupportCondition::Condition1;
    s.support = {0.1};
    EXPECT_THROW(build_povm(s), InvalidSupport);
}

TEST(CostDensity, RejectsBadInput) {
    const ThetaGrid grid(181);
    EXPECT_THROW(CostDensity(grid, std::vector<double>(10, 0.0)), DomainError);
    std::vector<double> v(grid.size(), 0.0);
    v[3] = std::nan("");
    EXPECT_THROW(CostDensity(grid, v), DomainError);
}

TEST(MinimizerNodes, RunAcrossWrapPoint) {
    std::vector<double> h(20, 1.0);
    h[19] = h[0] = h[1] = 0.0;
    h[10] = 0.0;
    double hmin = 0;
    const auto s = detail::minimizer_nodes(h, 1e-9, hmin);
    // run {19, 0, 1} is represented by its ends; 10 is a single node.
    EXPECT_EQ(s, (std::vector<int>{1, 10, 19}));
}

TEST(TiltSearch, FlatDensity) {
    const ThetaGrid grid(181);
    const auto s = find_optimal_support(sample(grid, [](double) { return 0.7; }));
    EXPECT_EQ(s.condition, SupportCondition::Condition1);
    EXPECT_NEAR(s.support[1] - s.support[0], kPi / 2, 1e-12);
}

struct WorkedExample {
    const char* name;
    double (*g)(double);
    SupportCondition condition;
    std::vector<double> angles;
};

class WorkedExamples : public ::testing::TestWithParam<WorkedExample> {};

TEST_P(WorkedExamples, TiltSearchFindsSupport) {
    const auto& ex = GetParam();
    const ThetaGrid grid(1801);
    const CostDensity d = sample(grid, ex.g);
    const auto t0 = std::chrono::steady_clock::now();
    const TiltedSupport s = find_optimal_support(d);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    EXPECT_LT(secs, 1.0);
    EXPECT_EQ(s.condition, ex.condition);
    expect_support(s, ex.angles, 2 * grid.step());
}

TEST_P(WorkedExamples, SimplexAgreesWithTiltSearch) {
    const auto& ex = GetParam();
    const ThetaGrid grid(1801);
    const CostDensity d = sample(grid, ex.g);
    const TiltedSupport a = find_optimal_support(d);
    const TiltedSupport b = find_optimal_support_simplex(d);
    EXPECT_EQ(a.condition, b.condition);
    expect_support(b, ex.angles, 2 * grid.step());
    EXPECT_NEAR(support_value(d, a), support_value(d, b), 1e-8);
}

INSTANTIATE_TEST_SUITE_P(
    Search, WorkedExamples,
    ::testing::Values(WorkedExample{"quadratic", quad, SupportCondition::Condition1, {kPi / 4, 3 * kPi / 4}},
                      WorkedExample{"minus", minus_example, SupportCondition::Condition2, {0.163, 1.236, 2.528}},
                      WorkedExample{"plus", plus_example, SupportCondition::Condition2, {0.957, 1.734, 2.807}}),
    [](const auto& info) { return std::string(info.param.name); });

TEST(TiltSearch, QuadraticValue) {
    // f = delta(pi/4) + delta(3pi/4): 2 * (24/pi^3) (pi/4)^2 = 3/pi.
    const ThetaGrid grid(1801);
    const CostDensity d = sample(grid, quad);
    EXPECT_NEAR(support_value(d, find_optimal_support(d)), 3.0 / kPi, 1e-9);
}

TEST(TiltSearch, TiltCertifiesSupport) {
    const ThetaGrid grid(1801);
    for (auto g : {quad, minus_example, plus_example}) {
        const CostDensity d = sample(grid, g);
        const TiltedSupport s = find_optimal_support(d);
        std::vector<double> h;
        detail::tilted(d.values, grid, s.tilt_a, s.tilt_b, h);
        const double hmin = *std::min_element(h.begin(), h.end());
        for (double t : s.support) EXPECT_NEAR(h[grid.nearest(t)], hmin, 1e-8);
    }
}

class RandomDensities : public ::testing::Test {
protected:
    std::mt19937_64 rng{99};
    std::normal_distribution<double> normal{0.0, 1.0};

    // Random trigonometric polynomial in 2theta up to order 4, plus an offset.
    std::function<double(double)> density() {
        std::array<double, 9> c;
        for (auto& x : c) x = normal(rng);
        return [c](double t) {
            double v = 3.0 + c[0];
            for (int k = 1; k <= 4; ++k) v += (c[2 * k - 1] * std::cos(2 * k * t) + c[2 * k] * std::sin(2 * k * t)) / k;
            return v;
        };
    }
};

TEST_F(RandomDensities, MatchBruteForceOracle) {
    const ThetaGrid grid(121);
    for (int i = 0; i < 25; ++i) {
        const CostDensity d = sample(grid, density());
        const double oracle = brute_force_minimum(d);
        EXPECT_NEAR(support_value(d, find_optimal_support(d)), oracle, 1e-7) << "case " << i;
        EXPECT_NEAR(support_value(d, find_optimal_support_simplex(d)), oracle, 1e-9) << "case " << i;
    }
}

TEST_F(RandomDensities, WarmStartGivesSameValue) {
    const ThetaGrid grid(1801);
    SimplexBasis warm;
    auto base = density();
    for (int i = 0; i < 20; ++i) {
        const double shift = 0.01 * i;
        const CostDensity d = sample(grid, [&](double t) { return base(t + shift); });
        const double cold = support_value(d, find_optimal_support_simplex(d));
        EXPECT_NEAR(support_value(d, find_optimal_support_simplex(d, &warm)), cold, 1e-10);
    }
}

TEST_F(RandomDensities, OptimalityCertificate) {
    // The returned support must beat 1000 random feasible f on the same grid.
    const ThetaGrid grid(1801);
    const int n = grid.size();
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int rep = 0; rep < 5; ++rep) {
        const CostDensity d = sample(grid, density());
        const double best = support_value(d, find_optimal_support(d));
        for (int trial = 0; trial < 200; ++trial) {
            double value = 0.0;
            if (trial % 2 == 0) {
                // Convex mixture of projective pairs.
                std::array<double, 4> w;
                double tw = 0;
                for (auto& x : w) tw += (x = u(rng));
                for (double x : w) {
                    const int j = static_cast<int>(u(rng) * (n / 2));
                    value += x / tw * (d.values[j] + d.values[j + n / 2]);
                }
            } else {
                // Smooth density 2/pi (1 + sum of higher harmonics), nonnegative.
                std::array<double, 4> c;
                double tc = 0;
                for (auto& x : c) tc += std::abs(x = normal(rng));
                for (int j = 0; j < n; ++j) {
                    const double t = grid.at(j);
                    const double f = 2.0 / kPi * (1.0 + (c[0] * std::cos(4 * t) + c[1] * std::sin(4 * t) +
                                                         c[2] * std::cos(6 * t) + c[3] * std::sin(6 * t)) / tc);
                    value += f * d.values[j] * grid.step();
                }
            }
            EXPECT_GE(value, best - 1e-9);
        }
    }
}

TEST(TiltSearch, IterationCapRaisesSearchFailure) {
    const ThetaGrid grid(1801);
    try {
        find_optimal_support(sample(grid, minus_example), kDefaultSupportTol, 1);
        FAIL() << "expected SearchFailure";
    } catch (const SearchFailure& e) {
        EXPECT_TRUE(std::isfinite(e.tilt_a));
        EXPECT_FALSE(e.last_support.empty());
    }
}
