#pragma once

// Monte Carlo execution of a solved policy against a hidden true state.

#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <mutex>
#include <vector>

#include "goa/errors.hpp"
#include "goa/grid.hpp"
#include "goa/parallel.hpp"
#include "goa/problem.hpp"
#include "goa/rng.hpp"
#include "goa/solver.hpp"

namespace goa {

/// Outcome: one categorical draw from the true mixed state per round.
/// Components: draw the pure component of every copy with weights (1-s, s),
/// then the outcome from that pure product state (mixture family only).
enum class SamplingMode { Outcome, Components };

struct SimulationOptions {
    int threads = 0;
    SamplingMode sampling = SamplingMode::Outcome;
    long copy_cap = 1000000;
    int trace_trials = 0;  // keep outcome traces for the first k trials
};

struct TraceStep {
    int node = 0;  // policy grid node that chose the measurement
    int outcome = 0;
    double posterior = 0.0;
};

struct TrialRecord {
    int truth = 0;  // 0 = rho0, 1 = rho1
    long copies = 0;
    int decision = 0;
    bool correct = true;
    double final_posterior = 0.0;
    std::vector<TraceStep> trace;
};

struct SimulationSummary {
    long trials = 0;
    double q0 = 0.5;
    std::uint64_t seed = 0;
    double mean_copies = 0.0;
    double stderr_copies = std::numeric_limits<double>::quiet_NaN();
    bool stderr_defined = false;  // needs at least two trials
    long errors = 0;
    double empirical_error = 0.0;
    std::map<long, long> histogram;  // copies -> trials
    std::vector<TrialRecord> traces;

    double error_stderr(double eps) const { return std::sqrt(eps * (1.0 - eps) / static_cast<double>(trials)); }
    bool error_within(double eps, double k = 3.0) const { return empirical_error <= eps + k * error_stderr(eps); }
};

class Simulator {
public:
    Simulator(const Policy& policy, const Problem& problem, SimulationOptions options = {})
        : policy_(policy), problem_(problem), options_(options) {
        if (options_.sampling == SamplingMode::Components && problem.mixture_s < 0.0)
            throw DomainError("component sampling needs a mixture-family problem");
        for (const auto& e : policy_.entries) {
            if (e.arm == Arm::Stop) throw DomainError("policy has a stop entry on the undecided region");
            const Measurement m = e.measurement();
            models_.push_back(outcome_model(m, problem));
            if (options_.sampling == SamplingMode::Components) component_tables(m);
        }
    }

    TrialRecord run_trial(int truth, double q0, CounterRng& rng, bool keep_trace = false) const {
        TrialRecord r;
        r.truth = truth;
        double l = logit(q0);
        double q = q0;
        const QGrid& g = policy_.grid;
        while (!in_stop_region(q, problem_.epsilon)) {
            const int node = g.nearest(g.kind() == GridKind::LogOdds ? l : q);
            const OutcomeModel& m = models_[node];
            const int k = options_.sampling == SamplingMode::Outcome ? draw_outcome(m, truth, rng)
                                                                      : draw_component_outcome(node, m, truth, rng);
            r.copies += m.copy_cost;
            l += m.llr[k];
            q = logistic(l);
            if (keep_trace) r.trace.push_back({node, k, q});
            if (r.copies > options_.copy_cap) throw RunawayTrial("trial exceeded the copy cap");
        }
        r.final_posterior = q;
        r.decision = q >= 0.5 ? 0 : 1;
        r.correct = r.decision == truth;
        return r;
    }

    SimulationSummary monte_carlo(double q0, long trials, std::uint64_t seed) const {
        if (trials < 1) throw DomainError("trials must be >= 1");
        if (!(q0 >= 0.0 && q0 <= 1.0)) throw DomainError("prior must lie in [0,1]");
        SimulationSummary s;
        s.trials = trials;
        s.q0 = q0;
        s.seed = seed;
        s.traces.resize(std::min<long>(trials, options_.trace_trials));
        // Integer accumulators make the merge order irrelevant.
        std::uint64_t sum = 0;
        unsigned __int128 sumsq = 0;
        std::mutex m;
        const int chunks = static_cast<int>(std::min<long>(trials, 4096));
        parallel_for(chunks, resolve_threads(options_.threads), [&](int b, int e) {
            std::uint64_t ls = 0;
            unsigned __int128 lsq = 0;
            long lerr = 0;
            std::map<long, long> hist;
            for (int c = b; c < e; ++c)
                for (long i = trials * c / chunks; i < trials * (c + 1) / chunks; ++i) {
                    CounterRng rng(seed, static_cast<std::uint64_t>(i));
                    const int truth = rng.uniform() < q0 ? 0 : 1;
                    const bool trace = i < static_cast<long>(s.traces.size());
                    TrialRecord r = run_trial(truth, q0, rng, trace);
                    ls += r.copies;
                    lsq += static_cast<unsigned __int128>(r.copies) * r.copies;
                    lerr += !r.correct;
                    ++hist[r.copies];
                    if (trace) s.traces[i] = std::move(r);
                }
            std::lock_guard<std::mutex> lock(m);
            sum += ls;
            sumsq += lsq;
            s.errors += lerr;
            for (const auto& [k, v] : hist) s.histogram[k] += v;
        });
        const double n = static_cast<double>(trials);
        s.mean_copies = static_cast<double>(sum) / n;
        s.empirical_error = static_cast<double>(s.errors) / n;
        if (trials > 1) {
            // n * sumsq - sum^2 is exact in 128 bits for any realistic run.
            const unsigned __int128 num = static_cast<unsigned __int128>(trials) * sumsq -
                                          static_cast<unsigned __int128>(sum) * sum;
            const double var = static_cast<double>(num) / (n * (n - 1.0));
            s.stderr_copies = std::sqrt(var / n);
            s.stderr_defined = true;
        }
        return s;
    }

private:
    static int draw_from(const double* p, int count, double u) {
        int last = 0;
        for (int k = 0; k < count; ++k) {
            if (p[k] <= 0.0) continue;
            last = k;
            if (u < p[k]) return k;
            u -= p[k];
        }
        return last;  // rounding left u just above the total
    }

    static int draw_outcome(const OutcomeModel& m, int truth, CounterRng& rng) {
        return draw_from(truth == 0 ? m.p0.data() : m.p1.data(), m.count, rng.uniform());
    }

    int draw_component_outcome(int node, const OutcomeModel& m, int truth, CounterRng& rng) const {
        // Component index per copy: the state's main component with weight 1 - s.
        const double s = problem_.mixture_s;
        int combo = 0;
        for (int c = 0; c < m.copy_cost; ++c) {
            const int main = truth;  // rho0 is mostly components[0], rho1 mostly components[1]
            const int comp = rng.uniform() < s ? 1 - main : main;
            combo = combo * 2 + comp;
        }
        const auto& p = component_probs_[node][combo];
        return draw_from(p.data(), m.count, rng.uniform());
    }

    void component_tables(const Measurement& m) {
        std::vector<std::array<double, 4>> probs;
        const int combos = m.copy_cost == 1 ? 2 : 4;
        for (int combo = 0; combo < combos; ++combo) {
            MatX rho;
            if (m.copy_cost == 1) {
                rho = projector(problem_.components[combo]);
            } else {
                const Vec2 a = ket(problem_.components[combo >> 1]), b = ket(problem_.components[combo & 1]);
                const Vec4 v = Eigen::kroneckerProduct(a, b);
                rho = v * v.transpose();
            }
            std::array<double, 4> p{};
            for (std::size_t k = 0; k < m.size(); ++k) p[k] = std::max(0.0, born_probability(m.elements[k], rho));
            probs.push_back(p);
        }
        component_probs_.push_back(std::move(probs));
    }

    const Policy& policy_;
    Problem problem_;
    SimulationOptions options_;
    std::vector<OutcomeModel> models_;
    std::vector<std::vector<std::array<double, 4>>> component_probs_;
};

inline TrialRecord run_trial(const Policy& policy, const Problem& problem, int truth, double q0, CounterRng& rng,
                             bool keep_trace = false) {
    return Simulator(policy, problem).run_trial(truth, q0, rng, keep_trace);
}

inline SimulationSummary monte_carlo(const Policy& policy, const Problem& problem, double q0, long trials,
                                     std::uint64_t seed, SimulationOptions options = {}) {
    return Simulator(policy, problem, options).monte_carlo(q0, trials, seed);
}

struct ConsistencyRow {
    double q0 = 0.0;
    double expected = 0.0;
    double mean = 0.0;
    double stderr_copies = 0.0;
    double residual = 0.0;
    double tolerance = 0.0;
    bool pass = false;
};

struct ConsistencyReport {
    std::vector<ConsistencyRow> rows;
    bool all_pass() const {
        for (const auto& r : rows)
            if (!r.pass) return false;
        return true;
    }
};

/// |simulated mean - N(q0)| <= k stderr + slack at each sampled prior.
inline ConsistencyReport consumption_consistency(const Policy& policy, const ValueFunction& value, const Problem& problem,
                                                 const std::vector<double>& q_samples, long trials, std::uint64_t seed,
                                                 double slack = 0.0, double k = 3.0, SimulationOptions options = {}) {
    const Simulator sim(policy, problem, options);
    ConsistencyReport rep;
    for (double q0 : q_samples) {
        const SimulationSummary s = sim.monte_carlo(q0, trials, seed);
        ConsistencyRow row;
        row.q0 = q0;
        row.expected = value.at(q0);
        row.mean = s.mean_copies;
        row.stderr_copies = s.stderr_defined ? s.stderr_copies : 0.0;
        row.residual = s.mean_copies - row.expected;
        row.tolerance = k * row.stderr_copies + slack;
        row.pass = std::abs(row.residual) <= row.tolerance;
        rep.rows.push_back(row);
    }
    return rep;
}

}  // namespace goa
