#include <gtest/gtest.h>

#include <random>

#include "goa/analytic.hpp"
#include "goa/povm_search.hpp"

using namespace goa;
using namespace goa::analytic;

namespace {

// Posterior of rho0 after the rank-one outcome |theta><theta| (states at +-x/2).
double outcome_posterior(double theta, double q, double x) {
    return q * overlap2(theta, x / 2) / mixture_trace(theta, q, x);
}

double wrap_pi(double t) {
    t = std::fmod(t, kPi);
    return t < 0 ? t + kPi : t;
}

double angle_distance(double a, double b) {
    const double d = wrap_pi(a - b);
    return std::min(d, kPi - d);
}

}  // namespace

TEST(Analytic, CriticalPrior) {
    EXPECT_NEAR(critical_q(kPi / 6), 3.0 / 7.0, 1e-15);
    EXPECT_NEAR(critical_q(kPi / 2), 0.0, 1e-15);
    EXPECT_NEAR(critical_q(1e-8), 0.5, 1e-12);
}

TEST(Analytic, BalancedPriorHasThetaTwoAtZero) {
    for (double x : {kPi / 12, kPi / 6, kPi / 4})
        for (double eps : {0.0, 0.01, 0.05}) {
            const GoalAngles a = goal_angles(0.5, x, eps);
            EXPECT_EQ(a.kind, Case::Balanced);
            EXPECT_NEAR(angle_distance(a.theta2, 0.0), 0.0, 1e-9);
        }
}

TEST(Analytic, ZeroEpsilonExcludesEachState) {
    for (double x : {kPi / 12, kPi / 6, kPi / 4}) {
        for (double q : {critical_q(x) + 1e-3, 0.45, 0.5}) {
            const GoalAngles a = goal_angles(q, x, 0.0);
            EXPECT_NEAR(angle_distance(a.theta0, x / 2 + kPi / 2), 0.0, 1e-7);
            EXPECT_NEAR(angle_distance(a.theta1, -x / 2 + kPi / 2), 0.0, 1e-7);
        }
        const GoalAngles p = goal_angles(0.5 * critical_q(x), x, 0.0);
        EXPECT_EQ(p.kind, Case::Projective);
        EXPECT_NEAR(angle_distance(p.theta0, x / 2 + kPi / 2), 0.0, 1e-7);
        EXPECT_NEAR(angle_distance(p.theta4, x / 2), 0.0, 1e-7);
    }
}

TEST(Analytic, OutcomesLandOnTheirTargets) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> ux(0.1, 1.4), ue(0.0, 0.1);
    for (int trial = 0; trial < 200; ++trial) {
        const double x = ux(rng), eps = ue(rng);
        const double lo = one_shot_edge(x, eps);
        if (lo >= 0.5 - 1e-6) continue;
        const double q = std::uniform_real_distribution<double>(lo + 1e-6, 0.5)(rng);
        const GoalAngles a = goal_angles(q, x, eps);
        EXPECT_NEAR(outcome_posterior(a.theta0, q, x), eps, 1e-8);
        if (a.kind == Case::ThreeElement || a.kind == Case::Balanced) {
            EXPECT_NEAR(outcome_posterior(a.theta1, q, x), 1 - eps, 1e-8);
            EXPECT_NEAR(outcome_posterior(a.theta2, q, x), 0.5, 1e-8);
            EXPECT_GE(a.lambda, -1e-12);
            EXPECT_LE(a.lambda, 2.0 + 1e-12);
        }
    }
}

TEST(Analytic, LambdaIsTheThetaTwoWeight) {
    const GoalAngles a = goal_angles(0.5, kPi / 6, 0.01);
    const auto w = condition2_weights(a.theta0, a.theta1, a.theta2);
    EXPECT_NEAR(w[2], a.lambda, 1e-12);
}

TEST(Analytic, MirrorSymmetry) {
    for (double q : {0.02, 0.1, 0.3, 0.45}) {
        EXPECT_NEAR(n_goal(q, kPi / 6, 0.01), n_goal(1 - q, kPi / 6, 0.01), 1e-12);
        const GoalAngles lo = goal_angles(q, kPi / 6, 0.01), hi = goal_angles(1 - q, kPi / 6, 0.01);
        EXPECT_EQ(hi.kind, Case::Mirrored);
        EXPECT_NEAR(angle_distance(hi.theta0, kPi - lo.theta0), 0.0, 1e-12);
    }
    for (int n = 1; n <= 10; ++n) EXPECT_NEAR(p_n_col(0.2, 0.7, n), p_n_col(0.8, 0.7, n), 1e-15);
    EXPECT_NEAR(lower_bound(0.2, 0.7), lower_bound(0.8, 0.7), 1e-12);
}

TEST(Analytic, StopAndOneShotRegions) {
    EXPECT_EQ(n_goal(0.01, kPi / 6, 0.01), 0.0);
    EXPECT_EQ(n_goal(0.0, kPi / 6, 0.01), 0.0);
    const double edge = one_shot_edge(kPi / 6, 0.05);
    EXPECT_EQ(n_goal(0.5 * (0.05 + edge), kPi / 6, 0.05), 1.0);
    EXPECT_EQ(n_goal(edge, kPi / 6, 0.05), 1.0);
    EXPECT_GT(n_goal(edge + 1e-3, kPi / 6, 0.05), 1.0);
    EXPECT_THROW(goal_angles(0.005, kPi / 6, 0.01), DomainError);
    EXPECT_THROW(n_goal(0.3, kPi / 2, 0.01), DomainError);
}

TEST(Analytic, ZeroEpsilonMatchesLowerBound) {
    for (double x : {kPi / 12, kPi / 6, kPi / 4})
        for (double q : {0.01, 0.1, 0.3, 0.45, 0.5, 0.8}) EXPECT_NEAR(n_goal(q, x, 0.0), lower_bound(q, x), 1e-9);
    EXPECT_NEAR(lower_bound(0.5, kPi / 6), 1.0 / (1.0 - std::cos(kPi / 6)), 1e-9);
}

TEST(Analytic, FailureProbability) {
    for (int n = 1; n <= 20; ++n) {
        EXPECT_NEAR(p_n_col(0.5, kPi / 5, n), std::pow(std::cos(kPi / 5), n), 1e-15);
        EXPECT_NEAR(p_n_col(0.3, kPi / 2, n), 0.0, 1e-15);
    }
    EXPECT_THROW(p_n_col(0.5, 0.3, 0), DomainError);
}

TEST(Analytic, FailureProbabilityIsMultiplicative) {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> uq(0.001, 0.999), ux(0.05, 1.5);
    for (int trial = 0; trial < 200; ++trial) {
        const double q = uq(rng), x = ux(rng);
        const double r = std::min(q, 1 - q), big = std::max(q, 1 - q);
        for (int n = 2; n <= 50; ++n) {
            const double c = std::pow(std::cos(x), 2 * n - 2);
            const double qn = std::min(r / (big * c + r), 0.5);
            EXPECT_NEAR(p_n_col(q, x, n), p_n_col(q, x, n - 1) * p_n_col(qn, x, 1), 1e-12);
        }
    }
}

TEST(Analytic, LowerBoundSeries) {
    EXPECT_NEAR(lower_bound(0.3, kPi / 2), 1.0, 1e-15);
    for (double q : {0.05, 0.3, 0.5})
        for (double x : {kPi / 12, kPi / 4}) {
            double direct = 1.0;
            for (int n = 1; n < 20000; ++n) direct += p_n_col(q, x, n);
            EXPECT_NEAR(lower_bound(q, x), direct, 1e-9);
        }
    // Decreasing towards the edges: 1/sin^2 x as q -> 0.
    EXPECT_NEAR(lower_bound(1e-9, kPi / 6), 1.0 / std::pow(std::sin(kPi / 6), 2), 1e-6);
}

TEST(Analytic, BalancedAnglesAreCertifiedByTheCostDensity) {
    // g(theta) = tr(P_theta rho) N(q_theta) with N the closed form; the closed-form
    // POVM must attain the minimum of int f g over feasible f.
    const double x = kPi / 6, eps = 0.01;
    const ThetaGrid grid(1801);
    std::vector<double> g(grid.size());
    for (int j = 0; j < grid.size(); ++j) {
        const double t = grid.at(j), p = mixture_trace(t, 0.5, x);
        g[j] = p < 1e-300 ? 0.0 : p * n_goal(outcome_posterior(t, 0.5, x), x, eps);
    }
    const CostDensity d(grid, g);
    auto exact_g = [&](double t) {
        const double p = mixture_trace(t, 0.5, x);
        return p * n_goal(outcome_posterior(t, 0.5, x), x, eps);
    };
    const GoalAngles a = goal_angles(0.5, x, eps);
    const double analytic = a.lambda * exact_g(a.theta2);
    EXPECT_NEAR(1.0 + analytic, balanced_value(x, eps), 1e-9);

    const TiltedSupport s = find_optimal_support_simplex(d);
    const double lp = integral_value(d, build_povm(s));
    EXPECT_NEAR(lp, analytic, 2e-3 * balanced_value(x, eps));

    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> ut(0.0, kPi);
    int checked = 0;
    while (checked < 1000) {
        std::array<double, 3> t{ut(rng), ut(rng), ut(rng)};
        std::sort(t.begin(), t.end());
        const auto w = condition2_weights(t[0], t[1], t[2]);
        if (w[0] < 0 || w[1] < 0 || w[2] < 0) continue;
        double v = 0.0;
        for (int k = 0; k < 3; ++k) v += w[k] * exact_g(t[k]);
        EXPECT_GE(v, analytic - 1e-9);
        ++checked;
    }
}
