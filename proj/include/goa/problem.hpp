#pragma once

// Discrimination problems and the per-measurement outcome data the Bellman
// operator, the baselines and the simulator share.

#include <array>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "goa/errors.hpp"
#include "goa/grid.hpp"
#include "goa/quantum.hpp"

namespace goa {

struct Problem {
    std::string name = "custom";
    QubitState rho0;
    QubitState rho1;
    double epsilon = 0.01;
    double mixture_s = -1.0;  // >= 0 for the two-component mixture family
    // Pure components of the mixture family: rho0 = (1-s)|c0><c0| + s|c1><c1|,
    // rho1 = (1-s)|c1><c1| + s|c0><c0|.
    std::array<double, 2> components{};

    bool pure() const { return rho0.is_pure() && rho1.is_pure(); }
    /// Two real qubit states with equal purity are exchanged by a reflection,
    /// which maps N(q) to N(1-q).
    bool symmetric(double tol = 1e-12) const { return std::abs(rho0.depolarization - rho1.depolarization) <= tol; }
};

inline void check_epsilon(double eps) {
    if (!(eps >= 0.0 && eps < 0.5)) throw DomainError("epsilon must lie in [0, 0.5)");
}

inline Problem make_problem(double x0, double d0, double x1, double d1, double epsilon) {
    check_epsilon(epsilon);
    Problem p;
    p.rho0 = make_state(x0, d0);
    p.rho1 = make_state(x1, d1);
    p.epsilon = epsilon;
    return p;
}

/// Depolarized pair at +-pi/12 with d0 = 0.01, d1 = 0.001.
inline Problem figure1_problem(double epsilon = 0.01) {
    Problem p = make_problem(kPi / 12, 0.01, -kPi / 12, 0.001, epsilon);
    p.name = "fig1";
    return p;
}

/// rho0 = (1-s)|0><0| + s|phi><phi|, rho1 = (1-s)|phi><phi| + s|0><0|, phi at `angle`.
inline Problem mixture_problem(double s, double epsilon, double angle = kPi / 12) {
    check_epsilon(epsilon);
    Problem p;
    p.name = "mixture";
    p.rho0 = mixture_state(s, 0.0, angle);
    p.rho1 = mixture_state(s, angle, 0.0);
    p.epsilon = epsilon;
    p.mixture_s = s;
    p.components = {0.0, angle};
    return p;
}

/// Pure kets at +-x/2, overlap cos x.
inline Problem pure_problem(double x, double epsilon) {
    if (!(x > 0.0 && x <= kPi / 2)) throw DomainError("pure-state angle x must lie in (0, pi/2]");
    Problem p = make_problem(x / 2, 0.0, -x / 2, 0.0, epsilon);
    p.name = "pure";
    return p;
}

/// Per-outcome likelihoods of one measurement plus log-likelihood ratios, so a
/// posterior in log-odds is a single addition.
struct OutcomeModel {
    int count = 0;
    int copy_cost = 1;
    std::array<double, 4> p0{};
    std::array<double, 4> p1{};
    std::array<double, 4> llr{};
};

inline double log_ratio(double t0, double t1) {
    if (t0 <= 0.0 && t1 <= 0.0) return 0.0;
    if (t0 <= 0.0) return -std::numeric_limits<double>::infinity();
    if (t1 <= 0.0) return std::numeric_limits<double>::infinity();
    return std::log(t0) - std::log(t1);
}

inline OutcomeModel outcome_model(const OutcomeLikelihoods& l) {
    OutcomeModel m;
    m.count = l.count;
    m.copy_cost = l.copy_cost;
    for (int k = 0; k < l.count; ++k) {
        m.p0[k] = l.p0[k];
        m.p1[k] = l.p1[k];
        m.llr[k] = log_ratio(l.p0[k], l.p1[k]);
    }
    return m;
}

inline OutcomeModel outcome_model(const Measurement& m, const Problem& p) {
    return outcome_model(likelihoods(m, p.rho0, p.rho1));
}

/// Posterior grid coordinate from node coordinate c (prior q) for one outcome.
inline double next_coord(const QGrid& grid, double c, double q, double t0, double t1, double llr) {
    if (grid.kind() == GridKind::LogOdds) return c + llr;
    const double p = q * t0 + (1.0 - q) * t1;
    return p > 0.0 ? q * t0 / p : q;
}

/// n + sum_k P_k N(q_k) at grid node i for a fixed measurement.
inline double continuation(const ValueFunction& v, int i, const OutcomeModel& m) {
    const QGrid& g = v.grid;
    const double c = g.coord(i), q = g.q_at(i);
    double total = m.copy_cost;
    for (int k = 0; k < m.count; ++k) {
        const double p = q * m.p0[k] + (1.0 - q) * m.p1[k];
        if (p <= 0.0) continue;
        total += p * v.at_coord(next_coord(g, c, q, m.p0[k], m.p1[k], m.llr[k]));
    }
    return total;
}

/// Rank-one likelihoods tr(|theta><theta| rho) on a theta grid.
struct ThetaTable {
    ThetaGrid grid;
    std::vector<double> t0, t1, llr;

    ThetaTable(ThetaGrid g, const Problem& p) : grid(std::move(g)) {
        const int n = grid.size();
        t0.resize(n);
        t1.resize(n);
        llr.resize(n);
        for (int j = 0; j < n; ++j) {
            const Mat2 e = projector(grid.at(j));
            t0[j] = std::max(0.0, born_probability(e, p.rho0.matrix));
            t1[j] = std::max(0.0, born_probability(e, p.rho1.matrix));
            llr[j] = log_ratio(t0[j], t1[j]);
        }
    }
};

/// Angles lo, lo + step, ... up to hi (inclusive within rounding).
inline std::vector<double> angle_range(double lo, double hi, double step) {
    if (!(step > 0.0) || hi < lo) throw DomainError("invalid angle range");
    std::vector<double> out;
    const int n = static_cast<int>(std::floor((hi - lo) / step + 1e-9));
    for (int j = 0; j <= n; ++j) out.push_back(lo + j * step);
    return out;
}

inline double degrees(double deg) { return deg * kPi / 180.0; }

}  // namespace goa
