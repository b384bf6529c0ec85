#pragma once

// Fixed-measurement baselines (one measurement repeated with Bayesian
// stopping) and the small-epsilon efficiency ratio eta.

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "goa/errors.hpp"
#include "goa/grid.hpp"
#include "goa/parallel.hpp"
#include "goa/problem.hpp"
#include "goa/quantum.hpp"

namespace goa {

inline constexpr double kDivergenceCap = 1e7;

/// Exact fixed point of N(q) = n + sum_k P_k N(q_k), N = 0 on the stop
/// region, on `grid` with the solver's interpolation rule. The system is
/// sparse (two stencil entries per outcome) and solved directly.
inline ValueFunction fixed_value(const Problem& problem, const OutcomeModel& model, const QGrid& grid) {
    bool informative = false;
    for (int k = 0; k < model.count; ++k)
        informative = informative || std::abs(model.p0[k] - model.p1[k]) > 1e-14;
    if (!informative) throw InfeasibleError("fixed measurement is uninformative");
    if (problem.epsilon == 0.0 && !problem.pure()) throw InfeasibleError("epsilon = 0 is unreachable for mixed states");

    const int n = grid.size();
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(n) * (1 + 2 * model.count));
    Eigen::VectorXd rhs = Eigen::VectorXd::Constant(n, model.copy_cost);
    for (int i = 0; i < n; ++i) {
        trip.emplace_back(i, i, 1.0);
        const double c = grid.coord(i), q = grid.q_at(i);
        for (int k = 0; k < model.count; ++k) {
            const double p = q * model.p0[k] + (1.0 - q) * model.p1[k];
            if (p <= 0.0) continue;
            const double ck = next_coord(grid, c, q, model.p0[k], model.p1[k], model.llr[k]);
            if (grid.stops(ck)) continue;
            int j;
            double w;
            grid.stencil(ck, j, w);
            trip.emplace_back(i, j, -p * (1.0 - w));
            if (w != 0.0) trip.emplace_back(i, j + 1, -p * w);
        }
    }
    Eigen::SparseMatrix<double> a(n, n);
    a.setFromTriplets(trip.begin(), trip.end());
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(a);
    if (lu.info() != Eigen::Success) throw InfeasibleError("fixed measurement never reaches the stop region");
    const Eigen::VectorXd x = lu.solve(rhs);
    if (lu.info() != Eigen::Success || !x.allFinite() || x.maxCoeff() > kDivergenceCap ||
        x.minCoeff() < model.copy_cost - 1e-6)
        throw InfeasibleError("fixed measurement consumption diverges");
    ValueFunction v(grid);
    for (int i = 0; i < n; ++i) v.values[i] = x(i);
    return v;
}

inline ValueFunction fixed_value(const Problem& problem, const Measurement& m, const QGrid& grid) {
    validate(m);
    return fixed_value(problem, outcome_model(m, problem), grid);
}

enum class FixedFamily { LocalProjective, Collective };

inline const char* to_string(FixedFamily f) { return f == FixedFamily::LocalProjective ? "gofl" : "gofc"; }

struct FamilyRange {
    double lo = 0.0;
    double hi = degrees(89.75);
    double step = degrees(0.25);
};

/// Local projective angles cover [0, 90 deg); collective [-5, 20] deg.
inline FamilyRange default_range(FixedFamily f) {
    if (f == FixedFamily::LocalProjective) return {};
    return {degrees(-5.0), degrees(20.0), degrees(0.25)};
}

inline Measurement family_member(FixedFamily f, double theta) {
    return f == FixedFamily::LocalProjective ? projective(theta) : collective(theta);
}

struct FixedStrategyResult {
    FixedFamily family = FixedFamily::LocalProjective;
    double best_theta = 0.0;
    double query_q = 0.5;
    ValueFunction value_fn;
    std::vector<double> scan_theta;  // scanned angles, infeasible ones omitted
    std::vector<double> scan_value;  // N(query_q) per scanned angle

    double consumption_at(double q) const { return value_fn.at(q); }
    Measurement measurement() const { return family_member(family, best_theta); }
};

/// Best single repeated measurement from `family` for initial prior q: scan
/// the angle range, then golden-section refine around the best scan point.
inline FixedStrategyResult optimize_fixed(const Problem& problem, FixedFamily family, const QGrid& grid, double q,
                                          FamilyRange range, int threads = 1) {
    if (in_stop_region(q, problem.epsilon)) throw DomainError("query prior lies in the stop region");
    const std::vector<double> angles = angle_range(range.lo, range.hi, range.step);
    const int m = static_cast<int>(angles.size());
    std::vector<double> values(m, std::numeric_limits<double>::infinity());
    auto eval = [&](double theta) {
        try {
            return fixed_value(problem, family_member(family, theta), grid).at(q);
        } catch (const InfeasibleError&) {
            return std::numeric_limits<double>::infinity();
        }
    };
    parallel_for(m, resolve_threads(threads), [&](int b, int e) {
        for (int j = b; j < e; ++j) values[j] = eval(angles[j]);
    });
    FixedStrategyResult r;
    r.family = family;
    r.query_q = q;
    int best = -1;
    for (int j = 0; j < m; ++j) {
        if (!std::isfinite(values[j])) continue;
        r.scan_theta.push_back(angles[j]);
        r.scan_value.push_back(values[j]);
        if (best < 0 || values[j] < values[best]) best = j;
    }
    if (best < 0) throw InfeasibleError("every fixed measurement in the family diverges");

    // Golden-section refinement on [theta* - step, theta* + step], clipped to the range.
    double a = std::max(range.lo, angles[best] - range.step), b = std::min(range.hi, angles[best] + range.step);
    const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = b - phi * (b - a), x2 = a + phi * (b - a);
    double f1 = eval(x1), f2 = eval(x2);
    for (int it = 0; it < 30 && b - a > 1e-7; ++it) {
        if (f1 < f2) {
            b = x2, x2 = x1, f2 = f1;
            x1 = b - phi * (b - a), f1 = eval(x1);
        } else {
            a = x1, x1 = x2, f1 = f2;
            x2 = a + phi * (b - a), f2 = eval(x2);
        }
    }
    r.best_theta = angles[best];
    if (std::min(f1, f2) < values[best]) r.best_theta = f1 < f2 ? x1 : x2;
    r.value_fn = fixed_value(problem, family_member(family, r.best_theta), grid);
    return r;
}

inline FixedStrategyResult optimize_fixed(const Problem& problem, FixedFamily family, const QGrid& grid, double q,
                                          int threads = 1) {
    return optimize_fixed(problem, family, grid, q, default_range(family), threads);
}

// ---------------------------------------------------------------------------
// Relative-entropy rates and eta
// ---------------------------------------------------------------------------

struct EntropyRates {
    double e0 = 0.0;  // nats per copy, D(P0 || P1) / n
    double e1 = 0.0;  // D(P1 || P0) / n
    int copy_cost = 1;
    bool e0_infinite() const { return std::isinf(e0); }
    bool e1_infinite() const { return std::isinf(e1); }
};

inline double relative_entropy_term(double a, double b) {
    if (a <= 0.0) return 0.0;
    if (b <= 0.0) return std::numeric_limits<double>::infinity();
    return a * std::log(a / b);
}

inline EntropyRates entropy_rates(const QubitState& rho0, const QubitState& rho1, const Measurement& m) {
    const OutcomeLikelihoods l = likelihoods(m, rho0, rho1);
    EntropyRates r;
    r.copy_cost = m.copy_cost;
    for (int k = 0; k < l.count; ++k) {
        r.e0 += relative_entropy_term(l.p0[k], l.p1[k]);
        r.e1 += relative_entropy_term(l.p1[k], l.p0[k]);
    }
    // Rounding can leave -1e-17 for identical distributions.
    r.e0 = std::max(0.0, r.e0) / m.copy_cost;
    r.e1 = std::max(0.0, r.e1) / m.copy_cost;
    return r;
}

/// Measurements on an angle grid from one family.
inline std::vector<Measurement> family_members(FixedFamily f, FamilyRange range) {
    std::vector<Measurement> out;
    for (double t : angle_range(range.lo, range.hi, range.step)) out.push_back(family_member(f, t));
    return out;
}

struct EtaResult {
    double eta = 0.0;
    double max_e0 = 0.0;
    double max_e1 = 0.0;
    double theta_e0 = 0.0;  // maximisers (angles[0] of the measurement)
    double theta_e1 = 0.0;
    bool infinite = false;  // a maximal rate is zero
};

inline double eta_from_rates(double q, double e0, double e1) {
    const double a = std::isinf(e0) ? 0.0 : (e0 > 0.0 ? q / e0 : std::numeric_limits<double>::infinity());
    const double b = std::isinf(e1) ? 0.0 : (e1 > 0.0 ? (1.0 - q) / e1 : std::numeric_limits<double>::infinity());
    return a + b;
}

/// Adaptive eta: E0 and E1 maximised independently over the family.
inline EtaResult eta_ratio(double q, const QubitState& rho0, const QubitState& rho1, const std::vector<Measurement>& family) {
    if (!(q > 0.0 && q < 1.0)) throw DomainError("eta needs q in (0,1)");
    if (family.empty()) throw DomainError("empty measurement family");
    EtaResult r;
    r.max_e0 = r.max_e1 = -1.0;
    for (const auto& m : family) {
        const EntropyRates e = entropy_rates(rho0, rho1, m);
        if (e.e0 > r.max_e0) r.max_e0 = e.e0, r.theta_e0 = m.angles[0];
        if (e.e1 > r.max_e1) r.max_e1 = e.e1, r.theta_e1 = m.angles[0];
    }
    r.eta = eta_from_rates(q, r.max_e0, r.max_e1);
    r.infinite = std::isinf(r.eta);
    return r;
}

/// Fixed eta: one measurement supplies both rates; minimised over the family.
inline EtaResult eta_fixed(double q, const QubitState& rho0, const QubitState& rho1, const std::vector<Measurement>& family) {
    if (!(q > 0.0 && q < 1.0)) throw DomainError("eta needs q in (0,1)");
    EtaResult r;
    r.eta = std::numeric_limits<double>::infinity();
    r.infinite = true;
    for (const auto& m : family) {
        const EntropyRates e = entropy_rates(rho0, rho1, m);
        const double v = eta_from_rates(q, e.e0, e.e1);
        if (v < r.eta) {
            r.eta = v;
            r.max_e0 = e.e0;
            r.max_e1 = e.e1;
            r.theta_e0 = r.theta_e1 = m.angles[0];
            r.infinite = false;
        }
    }
    return r;
}

}  // namespace goa
