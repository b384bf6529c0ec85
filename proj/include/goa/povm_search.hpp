#pragma once

// Inner minimisation of the local Bellman update: given g(theta) on a theta
// grid, find a density f >= 0 with
//     int f = 2,  int f cos 2theta = 0,  int f sin 2theta = 0
// minimising int f g. Optimal f are delta-supported on two antipodal points
// (projective measurement) or three points (three-element POVM), certified by
// a tilt (a, b) such that g + a cos 2theta + b sin 2theta attains its minimum
// exactly on the support.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "goa/errors.hpp"
#include "goa/grid.hpp"
#include "goa/quantum.hpp"

namespace goa {

struct CostDensity {
    ThetaGrid grid;
    std::vector<double> values;

    CostDensity(ThetaGrid g, std::vector<double> v) : grid(std::move(g)), values(std::move(v)) {
        if (static_cast<int>(values.size()) != grid.size()) throw DomainError("cost density size does not match grid");
        for (double x : values)
            if (!std::isfinite(x)) throw DomainError("cost density has non-finite values");
    }

    /// Periodic linear interpolation (period pi).
    double at(double theta) const {
        const int n = grid.size();
        double t = std::fmod(theta, kPi);
        if (t < 0) t += kPi;
        const double x = t / grid.step();
        int j = static_cast<int>(x);
        const double w = x - j;
        j %= n;
        return values[j] + w * (values[(j + 1) % n] - values[j]);
    }
};

enum class SupportCondition { Condition1, Condition2 };

struct TiltedSupport {
    double tilt_a = 0.0;
    double tilt_b = 0.0;
    std::vector<double> support;  // sorted ascending, 2 or 3 angles
    SupportCondition condition = SupportCondition::Condition1;
    int iterations = 0;
};

enum class SearchMode { TiltSteps, Simplex };

inline constexpr double kDefaultSupportTol = 1e-9;

/// g(theta_j) = P_theta N(q_theta) for the rank-one element |theta><theta|.
inline CostDensity build_cost_density(double q, const QubitState& rho0, const QubitState& rho1, const ValueFunction& value_fn,
                                      const ThetaGrid& grid) {
    std::vector<double> v(grid.size());
    for (int j = 0; j < grid.size(); ++j) {
        const Mat2 e = projector(grid.at(j));
        const double t0 = born_probability(e, rho0.matrix);
        const double t1 = born_probability(e, rho1.matrix);
        const PosteriorUpdate u = bayes_update(q, t0, t1);
        v[j] = u.zero_probability ? 0.0 : u.outcome_probability * value_fn.at(u.posterior_q);
    }
    return CostDensity(grid, std::move(v));
}

namespace detail {

inline double support_slack(const ThetaGrid& grid) { return 0.5 * grid.step() * (1.0 + 1e-9); }

/// Representatives of near-minimal runs of h (periodic): each run contributes
/// its first node, last node and argmin. Sorted ascending.
inline std::vector<int> minimizer_nodes(std::span<const double> h, double tol, double& hmin) {
    const int n = static_cast<int>(h.size());
    hmin = *std::min_element(h.begin(), h.end());
    const double thr = hmin + tol;
    std::vector<char> mark(n);
    int marked = 0;
    for (int j = 0; j < n; ++j) marked += (mark[j] = h[j] <= thr);
    std::vector<int> out;
    if (marked == n) {
        out = {0, n / 2};
        return out;
    }
    int start = 0;
    while (!(mark[start] && !mark[(start + n - 1) % n])) ++start;
    for (int step = 0; step < n;) {
        const int j = (start + step) % n;
        if (!mark[j]) {
            ++step;
            continue;
        }
        int first = j, last = j, best = j;
        while (step < n && mark[(start + step) % n]) {
            const int k = (start + step) % n;
            last = k;
            if (h[k] < h[best]) best = k;
            ++step;
        }
        out.push_back(first);
        out.push_back(last);
        out.push_back(best);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

struct ConditionHit {
    SupportCondition condition;
    std::vector<int> nodes;
};

inline std::optional<ConditionHit> check_conditions(const std::vector<int>& s, const ThetaGrid& grid) {
    const double slack = support_slack(grid);
    const double half = kPi / 2;
    const int n = static_cast<int>(s.size());
    // Condition 1: an (almost) orthogonal pair; prefer the closest to pi/2.
    int bi = -1, bj = -1;
    double bdev = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            const double dev = std::abs(grid.at(s[j]) - grid.at(s[i]) - half);
            if (dev <= slack && dev < bdev) {
                bdev = dev;
                bi = s[i];
                bj = s[j];
            }
        }
    if (bi >= 0) return ConditionHit{SupportCondition::Condition1, {bi, bj}};
    // Condition 2: three points whose doubled angles surround the origin.
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            for (int k = j + 1; k < n; ++k) {
                const double t1 = grid.at(s[i]), t2 = grid.at(s[j]), t3 = grid.at(s[k]);
                if (t2 - t1 < half - slack && t3 - t2 < half - slack && t1 + kPi - t3 < half - slack)
                    return ConditionHit{SupportCondition::Condition2, {s[i], s[j], s[k]}};
            }
    return std::nullopt;
}

/// Pair selection: among pairs further apart than pi/2 take the closest;
/// otherwise take the widest pair. Ties go to the smallest angle.
inline std::pair<int, int> select_pair(const std::vector<int>& s, const ThetaGrid& grid) {
    const double slack = support_slack(grid);
    const int n = static_cast<int>(s.size());
    std::pair<int, int> wide{-1, -1}, widest{s.front(), s.back()};
    double wide_gap = std::numeric_limits<double>::infinity(), widest_gap = -1.0;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            const double gap = grid.at(s[j]) - grid.at(s[i]);
            if (gap > kPi / 2 + slack && gap < wide_gap) {
                wide_gap = gap;
                wide = {s[i], s[j]};
            }
            if (gap > widest_gap) {
                widest_gap = gap;
                widest = {s[i], s[j]};
            }
        }
    return wide.first >= 0 ? wide : widest;
}

inline void tilted(std::span<const double> g, const ThetaGrid& grid, double a, double b, std::vector<double>& h) {
    const auto c = grid.cos2();
    const auto s = grid.sin2();
    h.resize(g.size());
    for (std::size_t j = 0; j < g.size(); ++j) h[j] = g[j] + a * c[j] + b * s[j];
}

inline TiltedSupport make_support(const ConditionHit& hit, const ThetaGrid& grid, double a, double b, int iterations) {
    TiltedSupport t;
    t.tilt_a = a;
    t.tilt_b = b;
    t.condition = hit.condition;
    t.iterations = iterations;
    for (int j : hit.nodes) t.support.push_back(grid.at(j));
    return t;
}

}  // namespace detail

/// Tilt search: balance g(0) and g(pi/2) with a cos tilt, bisect a sin tilt
/// until minimizers straddle pi/2, then widen (gap < pi/2) or narrow
/// (gap > pi/2) the selected pair with a cos[2(theta - mid)] tilt until the
/// minimizers satisfy Condition 1 or 2.
inline TiltedSupport find_optimal_support(const CostDensity& density, double tol = kDefaultSupportTol, int max_iterations = 0) {
    const ThetaGrid& grid = density.grid;
    const std::span<const double> g = density.values;
    const int n = grid.size();
    if (max_iterations <= 0) max_iterations = 4 * n;
    const auto [gmin_it, gmax_it] = std::minmax_element(g.begin(), g.end());
    const double range = *gmax_it - *gmin_it;
    if (range < 1e-12) {
        TiltedSupport t;
        t.support = {0.0, kPi / 2};
        t.condition = SupportCondition::Condition1;
        return t;
    }
    const double scale = std::max({1.0, std::abs(*gmin_it), std::abs(*gmax_it)});
    const double vtol = tol * scale;
    const auto c2 = grid.cos2();
    const auto s2 = grid.sin2();

    // Step 1.
    const int jh = grid.nearest(kPi / 2);
    double a = 0.5 * (g[jh] - g[0]);
    std::vector<double> h0(n);
    for (int j = 0; j < n; ++j) h0[j] = g[j] + a * c2[j];
    auto half_minima = [&](double b, int& il, int& ir) {
        double ml = std::numeric_limits<double>::infinity(), mr = ml;
        il = ir = -1;
        for (int j = 0; j < n; ++j) {
            const double v = h0[j] + b * s2[j];
            if (j < jh) {
                if (v < ml) ml = v, il = j;
            } else if (v < mr) {
                mr = v, ir = j;
            }
        }
        return ml - mr;
    };
    int il = 0, ir = 0;
    double bound = scale;
    for (int k = 0; k < 200 && (half_minima(-bound, il, ir) > 0 || half_minima(bound, il, ir) < 0); ++k) bound *= 2;
    double lo = -bound, hi = bound;
    for (int k = 0; k < 200 && hi - lo > 1e-14 * bound; ++k) {
        const double mid = 0.5 * (lo + hi);
        (half_minima(mid, il, ir) < 0 ? lo : hi) = mid;
    }
    double b = hi;
    half_minima(b, il, ir);
    if (s2[il] - s2[ir] > 1e-300) b = (h0[ir] - h0[il]) / (s2[il] - s2[ir]);

    // Steps 2-4.
    std::vector<double> h;
    std::vector<int> last;
    for (int it = 0; it < max_iterations; ++it) {
        detail::tilted(g, grid, a, b, h);
        double hmin = 0.0;
        const std::vector<int> s = detail::minimizer_nodes(h, vtol, hmin);
        last = s;
        if (auto hit = detail::check_conditions(s, grid)) return detail::make_support(*hit, grid, a, b, it);
        if (s.size() < 2) break;
        const auto [j1, j2] = detail::select_pair(s, grid);
        const double t1 = grid.at(j1), t2 = grid.at(j2);
        const double gap = t2 - t1, mid = 0.5 * (t1 + t2), cg = std::cos(gap);
        const bool widen = gap < kPi / 2;
        double amp = std::numeric_limits<double>::infinity();
        for (int j = 0; j < n; ++j) {
            const bool inside = j > j1 && j < j2;
            if (inside == widen || j == j1 || j == j2) continue;
            const double cj = std::cos(2.0 * (grid.at(j) - mid));
            const double den = widen ? cg - cj : cj - cg;
            if (den <= 1e-15) continue;
            amp = std::min(amp, (h[j] - hmin) / den);
        }
        if (!std::isfinite(amp)) break;
        const double sign = widen ? 1.0 : -1.0;
        a += sign * amp * std::cos(2.0 * mid);
        b += sign * amp * std::sin(2.0 * mid);
    }
    std::vector<double> angles;
    for (int j : last) angles.push_back(grid.at(j));
    throw SearchFailure("tilt search did not reach Condition 1 or 2", a, b, angles);
}

/// Warm-start state for the simplex search: the basis nodes of a previous solve.
struct SimplexBasis {
    std::array<int, 3> nodes{-1, -1, -1};
    bool valid() const { return nodes[0] >= 0; }
};

/// Revised simplex on the discretised primal (3 equality rows). Exact on the grid.
inline TiltedSupport find_optimal_support_simplex(const CostDensity& density, SimplexBasis* warm = nullptr,
                                                  double tol = kDefaultSupportTol) {
    const ThetaGrid& grid = density.grid;
    const std::span<const double> g = density.values;
    const int n = grid.size();
    const auto c2 = grid.cos2();
    const auto s2 = grid.sin2();
    const auto [gmin_it, gmax_it] = std::minmax_element(g.begin(), g.end());
    if (*gmax_it - *gmin_it < 1e-12) {
        TiltedSupport t;
        t.support = {0.0, kPi / 2};
        return t;
    }
    const double rtol = tol * std::max({1.0, std::abs(*gmin_it), std::abs(*gmax_it)});

    std::array<int, 3> basis{0, n / 3, (2 * n) / 3};
    if (warm && warm->valid()) basis = warm->nodes;
    auto column = [&](int j) { return Eigen::Vector3d(1.0, c2[j], s2[j]); };
    const Eigen::Vector3d rhs(2.0, 0.0, 0.0);

    Eigen::Matrix3d B;
    Eigen::Vector3d x = Eigen::Vector3d::Zero(), y = Eigen::Vector3d::Zero();
    auto factor = [&]() {
        for (int i = 0; i < 3; ++i) B.col(i) = column(basis[i]);
        Eigen::FullPivLU<Eigen::Matrix3d> lu(B);
        if (!lu.isInvertible()) return false;
        x = lu.solve(rhs);
        return (x.array() >= -1e-12).all();
    };
    if (!factor()) {
        basis = {0, n / 3, (2 * n) / 3};
        if (!factor()) throw SearchFailure("simplex: no feasible starting basis", 0, 0, {});
    }

    int degenerate = 0;
    const int cap = 20 * n;
    int it = 0;
    for (; it < cap; ++it) {
        const Eigen::Vector3d gb(g[basis[0]], g[basis[1]], g[basis[2]]);
        y = B.transpose().fullPivLu().solve(gb);
        int enter = -1;
        double best = -rtol;
        const bool bland = degenerate > 50;
        for (int j = 0; j < n; ++j) {
            const double r = g[j] - (y(0) + y(1) * c2[j] + y(2) * s2[j]);
            if (r < best) {
                enter = j;
                if (bland) break;
                best = r;
            }
        }
        if (enter < 0) break;
        const Eigen::Vector3d d = B.fullPivLu().solve(column(enter));
        int leave = -1;
        double ratio = std::numeric_limits<double>::infinity();
        for (int i = 0; i < 3; ++i)
            if (d(i) > 1e-12) {
                const double r = std::max(0.0, x(i)) / d(i);
                if (r < ratio - 1e-15 || (bland && r <= ratio + 1e-15 && leave >= 0 && basis[i] < basis[leave])) {
                    ratio = r;
                    leave = i;
                }
            }
        if (leave < 0) throw SearchFailure("simplex: unbounded direction", -y(1), -y(2), {});
        degenerate = ratio <= 1e-15 ? degenerate + 1 : 0;
        basis[leave] = enter;
        if (!factor()) throw SearchFailure("simplex: singular basis", -y(1), -y(2), {});
    }
    if (it == cap) throw SearchFailure("simplex: iteration cap", -y(1), -y(2), {});
    if (warm) warm->nodes = basis;

    TiltedSupport t;
    t.tilt_a = -y(1);
    t.tilt_b = -y(2);
    t.iterations = it;
    std::vector<int> nodes;
    for (int i = 0; i < 3; ++i)
        if (x(i) > 1e-12) nodes.push_back(basis[i]);
    std::sort(nodes.begin(), nodes.end());
    for (int j : nodes) t.support.push_back(grid.at(j));
    t.condition = nodes.size() == 2 ? SupportCondition::Condition1 : SupportCondition::Condition2;
    return t;
}

/// Delta weights of the optimal f on a Condition 2 support, in support order.
inline std::array<double, 3> condition2_weights(double t1, double t2, double t3) {
    const double w3 = std::sin(2.0 * (t2 - t1));
    const double w1 = std::sin(2.0 * (t3 - t2));
    const double w2 = std::sin(2.0 * (t1 - t3));
    const double den = w1 + w2 + w3;
    return {2.0 * w1 / den, 2.0 * w2 / den, 2.0 * w3 / den};
}

inline Measurement build_povm(const TiltedSupport& support) {
    if (support.condition == SupportCondition::Condition1) {
        if (support.support.size() != 2) throw InvalidSupport("Condition 1 support needs two angles");
        return projective(support.support[0]);
    }
    if (support.support.size() != 3) throw InvalidSupport("Condition 2 support needs three angles");
    const auto& s = support.support;
    const auto w = condition2_weights(s[0], s[1], s[2]);
    for (double x : w)
        if (x < -1e-10) throw InvalidSupport("negative POVM weight");
    return three_element_povm({s[0], s[1], s[2]}, {std::max(0.0, w[0]), std::max(0.0, w[1]), std::max(0.0, w[2])});
}

/// int f g for the delta-supported f of a one-copy rank-one measurement.
inline double integral_value(const CostDensity& g, const Measurement& m) {
    if (m.copy_cost != 1) throw DomainError("integral_value needs a one-copy measurement");
    switch (m.kind) {
        case MeasurementKind::LocalProjective: return g.at(m.angles[0]) + g.at(m.angles[0] + kPi / 2);
        case MeasurementKind::ThreeElementPovm: {
            double v = 0.0;
            for (int i = 0; i < 3; ++i) v += m.weights[i] * g.at(m.angles[i]);
            return v;
        }
        default: throw DomainError("integral_value needs rank-one local elements");
    }
}

}  // namespace goa
