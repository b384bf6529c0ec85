#include <gtest/gtest.h>

#include <random>

#include "goa/baselines.hpp"

using namespace goa;

namespace {

// Plain fixed-point iteration of the repeated-measurement recursion.
ValueFunction iterate_fixed(const Problem& p, const Measurement& m, const QGrid& grid, int sweeps) {
    const OutcomeModel model = outcome_model(m, p);
    ValueFunction v(grid, 0.0), next(grid, 0.0);
    for (int it = 0; it < sweeps; ++it) {
        for (int i = 0; i < grid.size(); ++i) {
            const double q = grid.q_at(i);
            double n = model.copy_cost;
            for (int k = 0; k < model.count; ++k) {
                const double pk = q * model.p0[k] + (1 - q) * model.p1[k];
                if (pk <= 0.0) continue;
                n += pk * v.at(q * model.p0[k] / pk);
            }
            next.values[i] = n;
        }
        std::swap(v, next);
    }
    return v;
}

double two_outcome_divergence(double p, double r) { return p * std::log(p / r) + (1 - p) * std::log((1 - p) / (1 - r)); }

}  // namespace

TEST(FixedValue, OrthogonalStates) {
    const Problem p = make_problem(0.0, 0.0, kPi / 2, 0.0, 0.01);
    const QGrid grid(101, p.epsilon);
    for (double v : fixed_value(p, projective(0.0), grid).values) EXPECT_NEAR(v, 1.0, 1e-12);
    for (double v : fixed_value(p, collective(0.0), grid).values) EXPECT_NEAR(v, 2.0, 1e-12);
}

TEST(FixedValue, UninformativeMeasurementIsInfeasible) {
    const Problem p = pure_problem(kPi / 6, 0.01);
    EXPECT_THROW(fixed_value(p, projective(0.0), QGrid(101, p.epsilon)), InfeasibleError);
    const Problem mixed = mixture_problem(0.05, 0.0);
    EXPECT_THROW(fixed_value(mixed, projective(0.3), QGrid(101, 0.0)), InfeasibleError);
}

TEST(FixedValue, AgreesWithIteratedRecursion) {
    for (const Problem& p : {figure1_problem(), mixture_problem(0.05, 1e-3), pure_problem(kPi / 4, 0.02)}) {
        const QGrid grid(201, p.epsilon);
        for (const Measurement& m : {projective(0.3), projective(1.2), collective(degrees(-5.0))}) {
            const ValueFunction direct = fixed_value(p, m, grid);
            const ValueFunction iterated = iterate_fixed(p, m, grid, 20000);
            EXPECT_LT(direct.sup_distance(iterated), 1e-6) << p.name << " theta=" << m.angles[0];
        }
    }
}

TEST(FixedValue, RelabelingMirrorsThePrior) {
    const Problem p = make_problem(0.2, 0.02, -0.3, 0.005, 0.01);
    const Problem swapped = make_problem(-0.3, 0.005, 0.2, 0.02, 0.01);
    const QGrid grid(401, 0.01);
    const ValueFunction a = fixed_value(p, projective(0.7), grid), b = fixed_value(swapped, projective(0.7), grid);
    for (double q : {0.05, 0.2, 0.5, 0.77}) EXPECT_NEAR(a.at(q), b.at(1 - q), 1e-9);
}

TEST(FixedStrategy, RefinementBeatsTheScan) {
    const Problem p = mixture_problem(0.05, 1e-3);
    const QGrid grid(401, p.epsilon);
    const FixedStrategyResult r = optimize_fixed(p, FixedFamily::LocalProjective, grid, 0.5, 1);
    ASSERT_FALSE(r.scan_value.empty());
    for (double v : r.scan_value) EXPECT_LE(r.consumption_at(0.5), v + 1e-9);
    EXPECT_EQ(r.measurement().kind, MeasurementKind::LocalProjective);
    EXPECT_THROW(optimize_fixed(p, FixedFamily::LocalProjective, grid, 1e-4, 1), DomainError);
}

TEST(FixedStrategy, ThreadCountDoesNotMatter) {
    const Problem p = figure1_problem();
    const QGrid grid(201, p.epsilon);
    const auto a = optimize_fixed(p, FixedFamily::Collective, grid, 0.3, 1);
    const auto b = optimize_fixed(p, FixedFamily::Collective, grid, 0.3, 3);
    EXPECT_EQ(a.best_theta, b.best_theta);
    EXPECT_EQ(a.scan_value, b.scan_value);
}

TEST(EntropyRates, TwoOutcomeFormula) {
    const Problem p = pure_problem(kPi / 5, 0.01);
    for (double t : {0.4, 1.0, 2.2}) {
        const EntropyRates e = entropy_rates(p.rho0, p.rho1, projective(t));
        const double a = std::pow(std::cos(t - kPi / 10), 2), b = std::pow(std::cos(t + kPi / 10), 2);
        EXPECT_NEAR(e.e0, two_outcome_divergence(a, b), 1e-12);
        EXPECT_NEAR(e.e1, two_outcome_divergence(b, a), 1e-12);
    }
}

TEST(EntropyRates, ProductMeasurementIsAdditive) {
    const Problem p = mixture_problem(0.05, 1e-3);
    for (double t : {0.2, 0.9}) {
        const Measurement single = projective(t);
        std::vector<MatX> elems;
        for (const auto& a : single.elements)
            for (const auto& b : single.elements) elems.push_back(Eigen::kroneckerProduct(a, b).eval());
        const Measurement pair = custom_measurement(elems, 2);
        const EntropyRates r1 = entropy_rates(p.rho0, p.rho1, single), r2 = entropy_rates(p.rho0, p.rho1, pair);
        EXPECT_NEAR(r1.e0, r2.e0, 1e-12);
        EXPECT_NEAR(r1.e1, r2.e1, 1e-12);
    }
}

TEST(EntropyRates, ExclusionGivesInfiniteRate) {
    // |1><1| never fires on rho1 = |0><0|.
    MatX e0 = MatX::Zero(2, 2), e1 = MatX::Zero(2, 2);
    e0(0, 0) = 1.0;
    e1(1, 1) = 1.0;
    const EntropyRates e = entropy_rates(make_state(0.3, 0.0), make_state(0.0, 0.0), custom_measurement({e0, e1}, 1));
    EXPECT_TRUE(e.e0_infinite());
    EXPECT_FALSE(e.e1_infinite());
}

TEST(Eta, LinearInThePrior) {
    EXPECT_NEAR(eta_from_rates(0.3, 0.5, 0.25), 0.3 / 0.5 + 0.7 / 0.25, 1e-15);
    const double a = eta_from_rates(0.2, 0.4, 0.7), b = eta_from_rates(0.6, 0.4, 0.7), c = eta_from_rates(0.4, 0.4, 0.7);
    EXPECT_NEAR(c, 0.5 * (a + b), 1e-15);
    EXPECT_EQ(eta_from_rates(0.5, std::numeric_limits<double>::infinity(), 0.5), 1.0);
    EXPECT_TRUE(std::isinf(eta_from_rates(0.5, 0.0, 0.5)));
}

TEST(Eta, AdaptiveNeverExceedsFixed) {
    for (double s : {0.01, 0.05, 0.08}) {
        const Problem p = mixture_problem(s, 1e-3);
        const auto local = family_members(FixedFamily::LocalProjective, default_range(FixedFamily::LocalProjective));
        EXPECT_LE(eta_ratio(0.5, p.rho0, p.rho1, local).eta, eta_fixed(0.5, p.rho0, p.rho1, local).eta + 1e-12);
        auto all = local;
        for (auto& m : family_members(FixedFamily::Collective, default_range(FixedFamily::Collective))) all.push_back(m);
        EXPECT_LE(eta_ratio(0.5, p.rho0, p.rho1, all).eta, eta_ratio(0.5, p.rho0, p.rho1, local).eta + 1e-12);
    }
    EXPECT_THROW(eta_ratio(0.0, make_state(0, 0.1), make_state(1, 0.1), {projective(0)}), DomainError);
}
