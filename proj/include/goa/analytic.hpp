#pragma once

// Closed-form local strategy for two pure states cos(x/2)|0> +- sin(x/2)|1>
// and the eps = 0 perfect-discrimination lower bound.

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "goa/errors.hpp"
#include "goa/grid.hpp"
#include "goa/quantum.hpp"

namespace goa::analytic {

enum class Case { Stop = 0, Balanced = 1, ThreeElement = 2, Projective = 3, OneShot = 4, Mirrored = 5 };

struct GoalAngles {
    double theta0 = 0.0;  // outcome concludes rho1 (posterior -> eps)
    double theta1 = 0.0;  // outcome concludes rho0 (posterior -> 1 - eps)
    double theta2 = 0.0;  // outcome returns the posterior to 1/2
    double theta4 = 0.0;  // theta0 - pi/2, the continuing projective outcome
    Case kind = Case::Balanced;
    double lambda = 0.0;  // POVM weight on theta2
};

inline void check(double x, double eps) {
    if (!(x > 0.0 && x < kPi / 2)) throw DomainError("x must lie in (0, pi/2)");
    if (!(eps >= 0.0 && eps < 0.5)) throw DomainError("epsilon must lie in [0, 0.5)");
}

/// arcsin with arguments up to 1e-12 outside [-1, 1] clamped.
inline double safe_asin(double v) {
    if (std::abs(v) > 1.0 + 1e-12) throw DomainError("arcsin argument outside [-1, 1]");
    return std::asin(std::clamp(v, -1.0, 1.0));
}

inline double critical_q(double x) {
    const double c2 = std::cos(x) * std::cos(x);
    return c2 / (1.0 + c2);
}

/// Upper edge of the region where a single Helstrom measurement already meets eps.
inline double one_shot_edge(double x, double eps) {
    const double c2 = std::cos(x) * std::cos(x);
    const double r = 1.0 - 4.0 * eps * (1.0 - eps) / c2;
    return r <= 0.0 ? 0.5 : 0.5 * (1.0 - std::sqrt(r));
}

/// Squared overlap of |theta> with the state at angle a.
inline double overlap2(double theta, double a) {
    const double c = std::cos(theta - a);
    return c * c;
}

/// tr(|theta><theta| rho) for rho = q psi0 + (1-q) psi1.
inline double mixture_trace(double theta, double q, double x) {
    return q * overlap2(theta, x / 2) + (1.0 - q) * overlap2(theta, -x / 2);
}

namespace detail {

inline GoalAngles lower_half_angles(double q, double x, double eps) {
    const double c2x = std::cos(2 * x), s2x = std::sin(2 * x);
    GoalAngles a;
    const double d0 = std::hypot(c2x * eps * (1 - q) - (1 - eps) * q, eps * (1 - q) * s2x);
    a.theta0 = kPi - 0.5 * safe_asin((q - eps) / d0) - 0.5 * safe_asin(((1 - eps) * q - c2x * eps * (1 - q)) / d0) + x / 2;
    const double d1 = std::hypot((1 - eps) * (1 - q) - eps * q * c2x, eps * q * s2x);
    a.theta1 = -x / 2 + 0.5 * safe_asin(((1 - eps) * (1 - q) - eps * q * c2x) / d1) + 0.5 * safe_asin((1 - eps - q) / d1);
    const double cx2 = std::cos(x) * std::cos(x);
    const double d2 = std::sqrt(q * q * cx2 + 0.25 - q * cx2);
    a.theta2 = 0.5 * safe_asin((0.5 - q) / d2) + 0.5 * safe_asin((0.5 - q) * std::cos(x) / d2);
    a.theta4 = a.theta0 - kPi / 2;
    const double s10 = std::sin(2 * (a.theta1 - a.theta0)), s21 = std::sin(2 * (a.theta2 - a.theta1)),
                 s02 = std::sin(2 * (a.theta0 - a.theta2));
    a.lambda = 2 * s10 / (s10 + s21 + s02);
    if (std::abs(q - 0.5) < 1e-15)
        a.kind = Case::Balanced;
    else if (q <= one_shot_edge(x, eps))
        a.kind = Case::OneShot;
    else
        a.kind = a.theta0 - kPi / 2 > a.theta2 ? Case::ThreeElement : Case::Projective;
    return a;
}

}  // namespace detail

/// Measurement angles at prior q (eps < q < 1 - eps). Priors above 1/2 use
/// the mirror image theta -> pi - theta of the strategy at 1 - q.
inline GoalAngles goal_angles(double q, double x, double eps) {
    check(x, eps);
    if (!(q > eps && q < 1 - eps)) throw DomainError("prior lies in the stop region");
    if (q <= 0.5) return detail::lower_half_angles(q, x, eps);
    GoalAngles a = detail::lower_half_angles(1 - q, x, eps);
    a.theta0 = kPi - a.theta0;
    a.theta1 = kPi - a.theta1;
    a.theta2 = kPi - a.theta2;
    a.theta4 = kPi - a.theta4;
    a.kind = Case::Mirrored;
    return a;
}

/// N(1/2): the theta2 outcome keeps q = 1/2, the other two stop.
inline double balanced_value(double x, double eps) {
    const GoalAngles a = detail::lower_half_angles(0.5, x, eps);
    return 1.0 / (1.0 - a.lambda * mixture_trace(a.theta2, 0.5, x));
}

/// Expected copies of the closed-form strategy, following projective rounds
/// until the posterior reaches the three-element or one-shot regime.
inline double n_goal(double q, double x, double eps, long max_depth = 1000000) {
    check(x, eps);
    if (!(q >= 0.0 && q <= 1.0)) throw DomainError("prior must lie in [0,1]");
    const double n_half = balanced_value(x, eps);
    double total = 0.0, weight = 1.0;
    for (long depth = 0; depth < max_depth; ++depth) {
        const double r = std::min(q, 1.0 - q);
        if (in_stop_region(r, eps)) return total;
        if (std::abs(r - 0.5) < 1e-15) return total + weight * n_half;
        if (r <= one_shot_edge(x, eps)) return total + weight;
        const GoalAngles a = detail::lower_half_angles(r, x, eps);
        if (a.kind == Case::ThreeElement) return total + weight * (1.0 + a.lambda * mixture_trace(a.theta2, r, x) * n_half);
        // projective round: theta0 stops, theta4 continues at the rho0 posterior
        const double p4 = mixture_trace(a.theta4, r, x);
        total += weight;
        weight *= p4;
        q = r * overlap2(a.theta4, x / 2) / p4;
        if (weight < 1e-300) return total;
    }
    throw std::runtime_error("closed-form recursion made no progress");
}

/// Minimum failure probability of perfect discrimination from n copies.
inline double p_n_col(double q, double x, int n) {
    if (n < 1) throw DomainError("n must be >= 1");
    const double c = std::pow(std::cos(x), n);
    const double c2 = c * c;
    const double qc = c2 / (1.0 + c2);
    if (q >= qc && q <= 1.0 - qc) return 2.0 * std::sqrt(q * (1.0 - q)) * c;
    return std::min(q, 1.0 - q) + std::max(q, 1.0 - q) * c2;
}

/// 1 + sum_n P_{n,col}: the eps = 0 consumption no strategy can beat.
inline double lower_bound(double q, double x) {
    if (!(x > 0.0 && x <= kPi / 2)) throw DomainError("x must lie in (0, pi/2]");
    if (!(q > 0.0 && q < 1.0)) throw DomainError("lower bound needs q in (0,1)");
    const double cx = std::cos(x);
    double sum = 1.0, term = 1.0;
    int n = 1;
    for (; n < 100000; ++n) {
        term = p_n_col(q, x, n);
        sum += term;
        if (term < 1e-12) break;
    }
    // Once q sits inside [q_c(n), 1 - q_c(n)] the terms are geometric in cos x.
    if (cx < 1.0) sum += term * cx / (1.0 - cx);
    return sum;
}

}  // namespace goa::analytic
