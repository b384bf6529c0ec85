#pragma once

// Value iteration for the minimum expected copy consumption N(q):
//   N(q) = 0                                    if min(q, 1-q) <= eps
//   N(q) = min_M [ n_M + sum_k P_k N(q_k) ]     otherwise
// over local one-copy POVMs (GOAL) or local projective plus two-copy
// collective measurements (GOAC).

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "goa/baselines.hpp"
#include "goa/errors.hpp"
#include "goa/grid.hpp"
#include "goa/parallel.hpp"
#include "goa/povm_search.hpp"
#include "goa/problem.hpp"
#include "goa/quantum.hpp"

namespace goa {

enum class Arm : std::uint8_t { Stop, Local, Collective };

inline const char* to_string(Arm a) {
    switch (a) {
        case Arm::Stop: return "stop";
        case Arm::Local: return "local";
        case Arm::Collective: return "collective";
    }
    return "?";
}

/// Compact description of the measurement chosen at one grid node.
struct PolicyEntry {
    Arm arm = Arm::Stop;
    MeasurementKind kind = MeasurementKind::LocalProjective;
    std::array<double, 3> angles{};
    std::array<double, 3> weights{};

    int copy_cost() const { return arm == Arm::Collective ? 2 : 1; }

    int elements() const {
        switch (kind) {
            case MeasurementKind::LocalProjective: return 2;
            case MeasurementKind::ThreeElementPovm: return 3;
            case MeasurementKind::CollectiveEntangled: return 4;
            default: return 0;
        }
    }

    Measurement measurement() const {
        if (arm == Arm::Stop) throw DomainError("stop entries have no measurement");
        switch (kind) {
            case MeasurementKind::LocalProjective: return projective(angles[0]);
            case MeasurementKind::ThreeElementPovm: return three_element_povm(angles, weights);
            case MeasurementKind::CollectiveEntangled: return collective(angles[0]);
            default: throw DomainError("policy entry has no measurement kind");
        }
    }

    bool operator==(const PolicyEntry&) const = default;
};

inline PolicyEntry local_projective_entry(double theta) {
    PolicyEntry e;
    e.arm = Arm::Local;
    e.kind = MeasurementKind::LocalProjective;
    e.angles = {theta, 0.0, 0.0};
    e.weights = {1.0, 1.0, 0.0};
    return e;
}

inline PolicyEntry collective_entry(double theta) {
    PolicyEntry e;
    e.arm = Arm::Collective;
    e.kind = MeasurementKind::CollectiveEntangled;
    e.angles = {theta, 0.0, 0.0};
    return e;
}

struct Policy {
    QGrid grid;
    double epsilon = 0.0;
    std::vector<PolicyEntry> entries;  // one per grid node

    /// Nearest-node lookup; Stop in the stop region.
    const PolicyEntry& at(double q) const {
        static const PolicyEntry stop{};
        if (in_stop_region(q, epsilon)) return stop;
        return entries[grid.nearest(grid.to_coord(q))];
    }

    int max_elements() const {
        int m = 0;
        for (const auto& e : entries) m = std::max(m, e.elements());
        return m;
    }

    /// Priors (midpoints between neighbouring nodes) where the arm changes.
    std::vector<double> arm_transitions() const {
        std::vector<double> out;
        for (std::size_t i = 1; i < entries.size(); ++i)
            if (entries[i].arm != entries[i - 1].arm) {
                const int j = static_cast<int>(i);
                out.push_back(grid.to_q(0.5 * (grid.coord(j - 1) + grid.coord(j))));
            }
        return out;
    }
};

/// Outermost and innermost arm changes on each side of q = 1/2, in increasing order.
/// Narrow flicker bands near the stop region collapse to their outer edge.
inline std::vector<double> principal_transitions(const std::vector<double>& t) {
    std::vector<double> lo, hi;
    for (double q : t) (q < 0.5 ? lo : hi).push_back(q);
    std::vector<double> out;
    if (!lo.empty()) {
        out.push_back(lo.front());
        if (lo.size() > 1) out.push_back(lo.back());
    }
    if (!hi.empty()) {
        if (hi.size() > 1) out.push_back(hi.front());
        out.push_back(hi.back());
    }
    return out;
}

struct SolveReport {
    int iterations = 0;
    std::vector<double> sup_norm_history;
    bool converged = false;
    bool monotone = true;  // every sweep was pointwise non-increasing (1e-9 slack)
    double wall_time = 0.0;
    int max_copies_per_round = 2;  // collective arms are limited to n <= 2
};

struct SolveOptions {
    int q_points = 2001;
    int theta_points = 1801;
    GridKind grid_kind = GridKind::LogOdds;
    double tol = 1e-4;
    int max_iter = 500;
    SearchMode search = SearchMode::Simplex;
    int threads = 0;
    // GOAC arms
    double local_step = degrees(0.1);      // projective angles over [0, 90 deg)
    double collective_lo = degrees(-5.0);
    double collective_hi = degrees(20.0);
    double collective_step = degrees(0.25);
    bool collective = true;  // false restricts GOAC to its local projective arm
    // Lookup grid of the returned policy; 0 keeps the solver grid. A finer
    // lookup is extracted by one extra sweep of the converged value.
    int policy_points = 0;
};

struct Solution {
    ValueFunction value;
    Policy policy;
    SolveReport report;
};

inline QGrid make_qgrid(const Problem& p, const SolveOptions& o) { return QGrid(o.q_points, p.epsilon, o.grid_kind); }

inline double round_to_step(double theta, double step) { return std::round(theta / step) * step; }

/// Measurement whose fixed-measurement consumption seeds value iteration:
/// the q = 1/2 Helstrom basis, or for eps = 0 with pure states the
/// three-element POVM orthogonal to each state plus their bisector (the
/// Helstrom basis never excludes a state exactly). Angles are snapped to
/// multiples of `angle_step` so the start lies in the searched family.
inline Measurement initial_measurement(const Problem& problem, double angle_step) {
    if (problem.epsilon == 0.0) {
        if (!problem.pure()) throw InfeasibleError("epsilon = 0 has no realizable start for mixed states");
        const double a0 = problem.rho0.bloch_angle, a1 = problem.rho1.bloch_angle;
        auto wrap = [&](double t) {
            t = round_to_step(std::fmod(t, kPi), angle_step);
            return t < 0 ? t + kPi : t;
        };
        std::array<double, 3> t{wrap(a0 + kPi / 2), wrap(a1 + kPi / 2), wrap(0.5 * (a0 + a1))};
        std::sort(t.begin(), t.end());
        TiltedSupport s;
        s.condition = SupportCondition::Condition2;
        s.support = {t[0], t[1], t[2]};
        return build_povm(s);
    }
    const Measurement h = helstrom(0.5, problem.rho0, problem.rho1);
    double theta = std::fmod(h.angles[0], kPi / 2);
    if (theta < 0) theta += kPi / 2;
    return projective(round_to_step(theta, angle_step));
}

/// Consumption of the repeated initial measurement; an upper bound on N.
inline ValueFunction initial_value(const Problem& problem, const QGrid& grid, double angle_step = kPi / 1800) {
    return fixed_value(problem, initial_measurement(problem, angle_step), grid);
}

namespace detail {

inline void check_realizable(const ValueFunction& v) {
    for (double x : v.values)
        if (!(x >= 1.0 - 1e-12) || !std::isfinite(x))
            throw DomainError("value function is not realizable (needs N >= 1 on the undecided region)");
}

}  // namespace detail

/// GOAL Bellman operator: per node, optimal one-copy POVM by support search.
class GoalOperator {
public:
    GoalOperator(const Problem& problem, const QGrid& grid, ThetaGrid theta, SearchMode mode = SearchMode::Simplex,
                 int threads = 0)
        : grid_(grid), table_(std::move(theta), problem), mode_(mode), threads_(resolve_threads(threads)),
          warm_(grid.size()) {}

    const ThetaTable& table() const { return table_; }

    /// One sweep; writes the argmin measurement per node when policy != nullptr.
    void sweep(const ValueFunction& in, ValueFunction& out, std::vector<PolicyEntry>* policy = nullptr) {
        detail::check_realizable(in);
        if (!(in.grid == grid_)) throw DomainError("value function grid does not match the operator");
        out = ValueFunction(grid_);
        if (policy) policy->assign(grid_.size(), PolicyEntry{});
        const int n = table_.grid.size();
        parallel_for(grid_.size(), threads_, [&](int b, int e) {
            std::vector<double> g(n);
            for (int i = b; i < e; ++i) {
                const double c = grid_.coord(i), q = grid_.q_at(i);
                for (int j = 0; j < n; ++j) {
                    const double p = q * table_.t0[j] + (1.0 - q) * table_.t1[j];
                    g[j] = p > 0.0 ? p * in.at_coord(next_coord(grid_, c, q, table_.t0[j], table_.t1[j], table_.llr[j])) : 0.0;
                }
                CostDensity d(table_.grid, std::move(g));
                TiltedSupport s;
                try {
                    s = mode_ == SearchMode::Simplex ? find_optimal_support_simplex(d, &warm_[i]) : find_optimal_support(d);
                } catch (const SearchFailure& err) {
                    throw SearchFailure(std::string(err.what()) + " at q=" + std::to_string(q), err.tilt_a, err.tilt_b,
                                        err.last_support);
                }
                PolicyEntry entry = support_entry(s);
                double v = 1.0;
                for (int k = 0; k < entry.elements(); ++k) {
                    const double angle = entry.kind == MeasurementKind::LocalProjective ? entry.angles[0] + k * kPi / 2
                                                                                          : entry.angles[k];
                    v += entry.weights[k] * d.values[table_.grid.nearest(angle)];
                }
                out.values[i] = v;
                if (policy) (*policy)[i] = entry;
                g = std::move(d.values);
            }
        });
    }

    static PolicyEntry support_entry(const TiltedSupport& s) {
        if (s.condition == SupportCondition::Condition1) return local_projective_entry(s.support[0]);
        PolicyEntry e;
        e.arm = Arm::Local;
        e.kind = MeasurementKind::ThreeElementPovm;
        e.angles = {s.support[0], s.support[1], s.support[2]};
        e.weights = condition2_weights(s.support[0], s.support[1], s.support[2]);
        for (double& w : e.weights) w = std::max(0.0, w);
        return e;
    }

private:
    QGrid grid_;
    ThetaTable table_;
    SearchMode mode_;
    int threads_;
    std::vector<SimplexBasis> warm_;
};

/// GOAC Bellman operator: local projective arm (cost 1) against the
/// collective arm (cost 2) on their angle grids. Ties go to the local arm.
class GoacOperator {
public:
    GoacOperator(const Problem& problem, const QGrid& grid, const SolveOptions& o)
        : grid_(grid), threads_(resolve_threads(o.threads)) {
        for (double t : angle_range(0.0, kPi / 2 - 0.5 * o.local_step, o.local_step)) {
            local_angles_.push_back(t);
            local_.push_back(outcome_model(projective(t), problem));
        }
        if (o.collective)
            for (double t : angle_range(o.collective_lo, o.collective_hi, o.collective_step)) {
                collective_angles_.push_back(t);
                collective_.push_back(outcome_model(collective(t), problem));
            }
    }

    void sweep(const ValueFunction& in, ValueFunction& out, std::vector<PolicyEntry>* policy = nullptr) const {
        detail::check_realizable(in);
        if (!(in.grid == grid_)) throw DomainError("value function grid does not match the operator");
        out = ValueFunction(grid_);
        if (policy) policy->assign(grid_.size(), PolicyEntry{});
        parallel_for(grid_.size(), threads_, [&](int b, int e) {
            for (int i = b; i < e; ++i) {
                double best = std::numeric_limits<double>::infinity();
                int arg = 0;
                for (std::size_t j = 0; j < local_.size(); ++j) {
                    const double v = continuation(in, i, local_[j]);
                    if (v < best) best = v, arg = static_cast<int>(j);
                }
                PolicyEntry entry = local_projective_entry(local_angles_[arg]);
                for (std::size_t j = 0; j < collective_.size(); ++j) {
                    const double v = continuation(in, i, collective_[j]);
                    if (v < best) {
                        best = v;
                        entry = collective_entry(collective_angles_[j]);
                    }
                }
                out.values[i] = best;
                if (policy) (*policy)[i] = entry;
            }
        });
    }

private:
    QGrid grid_;
    int threads_;
    std::vector<double> local_angles_;
    std::vector<OutcomeModel> local_;
    std::vector<double> collective_angles_;
    std::vector<OutcomeModel> collective_;
};

/// Iterate op.sweep from `start` until the sup-norm change drops below tol.
template <class Operator>
Solution value_iteration(Operator& op, const ValueFunction& start, double epsilon, double tol, int max_iter) {
    const auto t0 = std::chrono::steady_clock::now();
    Solution sol;
    sol.policy.grid = start.grid;
    sol.policy.epsilon = epsilon;
    ValueFunction cur = start, next;
    for (int it = 0; it < max_iter; ++it) {
        op.sweep(cur, next, &sol.policy.entries);
        double d = 0.0;
        for (std::size_t i = 0; i < cur.values.size(); ++i) {
            d = std::max(d, std::abs(next.values[i] - cur.values[i]));
            if (next.values[i] > cur.values[i] + 1e-9) sol.report.monotone = false;
        }
        sol.report.sup_norm_history.push_back(d);
        sol.report.iterations = it + 1;
        std::swap(cur, next);
        if (d < tol) {
            sol.report.converged = true;
            break;
        }
    }
    sol.value = std::move(cur);
    sol.report.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return sol;
}

/// Linear resampling onto another grid over the same undecided interval.
inline ValueFunction resample(const ValueFunction& v, const QGrid& grid) {
    ValueFunction out(grid);
    for (int i = 0; i < grid.size(); ++i) out.values[i] = v.at(grid.q_at(i));
    return out;
}

/// Argmin measurements of one Bellman sweep of the converged value on a finer
/// lookup grid. The simulator executes nearest-node measurements, and a finer
/// lookup shrinks the gap between a cell's prior and the node it was optimised for.
template <class MakeOperator>
Policy refine_policy(const ValueFunction& v, double epsilon, int points, MakeOperator&& make) {
    const QGrid fine(points, v.grid.epsilon(), v.grid.kind());
    const ValueFunction in = resample(v, fine);
    auto op = make(fine);
    Policy p;
    p.grid = fine;
    p.epsilon = epsilon;
    ValueFunction out;
    op.sweep(in, out, &p.entries);
    return p;
}

inline Policy refine_goal_policy(const Problem& problem, const ValueFunction& v, int points, const SolveOptions& o = {}) {
    return refine_policy(v, problem.epsilon, points, [&](const QGrid& g) {
        return GoalOperator(problem, g, ThetaGrid(o.theta_points), o.search, o.threads);
    });
}

inline Policy refine_goac_policy(const Problem& problem, const ValueFunction& v, int points, const SolveOptions& o = {}) {
    return refine_policy(v, problem.epsilon, points, [&](const QGrid& g) { return GoacOperator(problem, g, o); });
}

inline ValueFunction bellman_sweep_local(const ValueFunction& v, const Problem& problem, const ThetaGrid& theta,
                                         SearchMode mode = SearchMode::Simplex, int threads = 0) {
    GoalOperator op(problem, v.grid, theta, mode, threads);
    ValueFunction out;
    op.sweep(v, out);
    return out;
}

inline ValueFunction bellman_sweep_goac(const ValueFunction& v, const Problem& problem, const SolveOptions& o = {}) {
    GoacOperator op(problem, v.grid, o);
    ValueFunction out;
    op.sweep(v, out);
    return out;
}

inline Solution solve_goal(const Problem& problem, const SolveOptions& o = {}) {
    const QGrid grid = make_qgrid(problem, o);
    const ThetaGrid theta(o.theta_points);
    GoalOperator op(problem, grid, theta, o.search, o.threads);
    Solution s = value_iteration(op, initial_value(problem, grid, theta.step()), problem.epsilon, o.tol, o.max_iter);
    if (o.policy_points > o.q_points) s.policy = refine_goal_policy(problem, s.value, o.policy_points, o);
    return s;
}

inline Solution solve_goac(const Problem& problem, const SolveOptions& o = {}) {
    if (problem.epsilon == 0.0) throw InfeasibleError("GOAC needs epsilon > 0");
    const QGrid grid = make_qgrid(problem, o);
    GoacOperator op(problem, grid, o);
    Solution s = value_iteration(op, initial_value(problem, grid, o.local_step), problem.epsilon, o.tol, o.max_iter);
    if (o.policy_points > o.q_points) s.policy = refine_goac_policy(problem, s.value, o.policy_points, o);
    return s;
}

}  // namespace goa
