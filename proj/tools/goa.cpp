// goa: solve, simulate and tabulate adaptive discrimination strategies.

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "goa/analytic.hpp"
#include "goa/baselines.hpp"
#include "goa/config.hpp"
#include "goa/io.hpp"
#include "goa/simulator.hpp"
#include "goa/solver.hpp"

namespace fs = std::filesystem;
using namespace goa;

namespace {

enum Exit { kOk = 0, kInternal = 1, kParse = 2, kInfeasible = 3, kNotConverged = 4, kConsistency = 5 };

/// Mismatch between a policy file and the run configuration.
struct ConsistencyFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Common {
    std::string preset;
    std::string config_file;
    std::vector<std::string> overrides;
    int threads = 0;
    std::string out = ".";
};

std::string preset_dir() {
    if (const char* env = std::getenv("GOA_PRESET_DIR")) return env;
    return GOA_DEFAULT_PRESET_DIR;
}

std::string preset_path(std::string name) {
    if (name == "fig2") name = "fig2c";
    const fs::path p = fs::path(preset_dir()) / (name + ".cfg");
    if (!fs::exists(p)) throw ConfigError("--preset", "no preset named '" + name + "' in " + preset_dir());
    return p.string();
}

bool has_config(const Common& c) { return !c.preset.empty() || !c.config_file.empty(); }

Config load(const Common& c) {
    if (!c.preset.empty() && !c.config_file.empty()) throw ConfigError("--preset", "give either --preset or --config");
    Config cfg;
    if (!c.preset.empty()) cfg = load_config(preset_path(c.preset));
    else if (!c.config_file.empty()) cfg = load_config(c.config_file);
    for (const auto& o : c.overrides) {
        const auto eq = o.find('=');
        if (eq == std::string::npos) throw ConfigError(o, "--set expects section.key=value");
        set_value(cfg, detail::trim(o.substr(0, eq)), o.substr(eq + 1));
    }
    validate(cfg);
    return cfg;
}

int threads_for(const Common& c, const Config& cfg) {
    return c.threads > 0 ? c.threads : static_cast<int>(cfg.threads);
}

std::string out_path(const Common& c, const std::string& file) {
    fs::create_directories(c.out);
    return (fs::path(c.out) / file).string();
}

std::string fmt(double v, int digits = 6) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

std::string upper(std::string s) {
    for (char& ch : s) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
    return s;
}

double deg(double rad) { return rad * 180.0 / kPi; }

void check_prior(double q, const char* flag) {
    if (!(q > 0.0 && q < 1.0)) throw ConfigError(flag, "prior must lie in (0, 1)");
}

// ---------------------------------------------------------------------------

int cmd_solve(const Common& common, const std::string& mode, std::vector<double> at) {
    const Config cfg = load(common);
    const Problem problem = make_problem(cfg);
    const SolveOptions opts = solve_options(cfg, threads_for(common, cfg));
    if (at.empty()) at = cfg.at;
    for (double q : at) check_prior(q, "--at");

    const Solution sol = mode == "goal" ? solve_goal(problem, opts) : solve_goac(problem, opts);
    const StoredSolution stored{mode, config_hash(cfg), cfg, sol.value, sol.policy, sol.report};
    const std::string stem = cfg.name + "_" + mode;
    save_solution(out_path(common, stem + ".goa"), stored);

    CsvTable value(cfg, {"q", "value", "arm", "kind", "theta0_deg", "theta1_deg", "theta2_deg", "w0", "w1", "w2"});
    for (int i = 0; i < sol.value.grid.size(); ++i) {
        const double q = sol.value.grid.q_at(i);
        const PolicyEntry& e = sol.policy.at(q);
        value.row(q, sol.value.values[i], to_string(e.arm), to_string(e.kind), deg(e.angles[0]), deg(e.angles[1]),
                  deg(e.angles[2]), e.weights[0], e.weights[1], e.weights[2]);
    }
    value.save(out_path(common, stem + "_value.csv"));
    CsvTable history(cfg, {"sweep", "sup_norm"});
    for (std::size_t i = 0; i < sol.report.sup_norm_history.size(); ++i)
        history.row(static_cast<long>(i + 1), sol.report.sup_norm_history[i]);
    history.save(out_path(common, stem + "_history.csv"));
    nlohmann::ordered_json report = report_json(sol.report);
    report["config_hash"] = stored.config_hash;
    report["mode"] = mode;
    for (double q : at) report["values"][fmt(q, 6)] = sol.value.at(q);
    if (mode == "goac") {
        report["arm_transitions"] = sol.policy.arm_transitions();
        report["principal_transitions"] = principal_transitions(sol.policy.arm_transitions());
    }
    detail::write_file(out_path(common, stem + "_report.json"), report.dump(1) + "\n");

    std::cout << "config_hash " << stored.config_hash << "  sweeps " << sol.report.iterations << "  converged "
              << (sol.report.converged ? "yes" : "no") << "  monotone " << (sol.report.monotone ? "yes" : "no") << "  "
              << fmt(sol.report.wall_time, 2) << " s\n";
    for (double q : at) std::cout << "N_" << upper(mode) << "(" << q << ") = " << fmt(sol.value.at(q), 4) << "\n";
    if (mode == "goac") {
        const auto all = sol.policy.arm_transitions();
        std::cout << "arm transitions (outer/inner):";
        for (double t : principal_transitions(all)) std::cout << " " << fmt(t, 5);
        std::cout << "  (" << all.size() << " arm changes in total, listed in the report)\n";
    }
    std::cout << "wrote " << out_path(common, stem + ".goa") << " (+ .json, _value.csv, _history.csv, _report.json)\n";
    if (!sol.report.converged) {
        std::cerr << "value iteration did not reach tol " << cfg.tol << " in " << cfg.max_iter << " sweeps\n";
        return kNotConverged;
    }
    return kOk;
}

int cmd_simulate(const Common& common, const std::string& policy_file, std::optional<double> q0_opt,
                 std::optional<long> trials_opt, std::optional<std::uint64_t> seed_opt, int trace, const std::string& sampling,
                 bool check) {
    const StoredSolution stored = load_solution(policy_file);
    Config cfg = stored.config;
    if (has_config(common)) {
        const Config given = load(common);
        if (config_hash(given) != stored.config_hash)
            throw ConsistencyFailure("policy/config hash mismatch: policy " + stored.config_hash + ", config " +
                                     config_hash(given) + "; refusing to run");
        cfg = given;
    }
    const long trials = trials_opt.value_or(cfg.trials);
    if (trials < 1) throw ConfigError("--trials", "must be >= 1");
    const double q0 = q0_opt.value_or(cfg.at.empty() ? 0.5 : cfg.at.front());
    check_prior(q0, "--q0");
    const std::uint64_t seed = seed_opt.value_or(cfg.seed);

    const Problem problem = make_problem(cfg);
    SimulationOptions so;
    so.threads = threads_for(common, cfg);
    so.trace_trials = trace;
    so.sampling = sampling == "components" ? SamplingMode::Components : SamplingMode::Outcome;
    const SimulationSummary s = Simulator(stored.policy, problem, so).monte_carlo(q0, trials, seed);
    const double expected = stored.value.at(q0);

    const std::string stem = fs::path(policy_file).stem().string() + "_sim_q" + fmt(q0, 4) + "_seed" + std::to_string(seed);
    nlohmann::ordered_json summary = summary_json(s, expected, cfg.epsilon);
    summary["config_hash"] = stored.config_hash;
    summary["mode"] = stored.mode;
    summary["sampling"] = sampling;
    detail::write_file(out_path(common, stem + "_summary.json"), summary.dump(1) + "\n");
    CsvTable hist(cfg, {"copies", "trials", "fraction"});
    for (const auto& [copies, n] : s.histogram) hist.row(copies, n, static_cast<double>(n) / static_cast<double>(trials));
    hist.save(out_path(common, stem + "_hist.csv"));
    if (trace > 0) detail::write_file(out_path(common, stem + "_traces.ndjson"), traces_ndjson(s));

    std::cout << "trials " << trials << "  q0 " << q0 << "  seed " << seed << "\n";
    std::cout << "mean copies " << fmt(s.mean_copies, 4);
    if (s.stderr_defined) std::cout << " +- " << fmt(s.stderr_copies, 4);
    else std::cout << " (stderr undefined for one trial)";
    std::cout << "  solver value " << fmt(expected, 4) << "\n";
    std::cout << "error rate " << s.empirical_error << " (" << s.errors << " errors, bound "
              << cfg.epsilon + 3 * s.error_stderr(cfg.epsilon) << ")\n";
    std::cout << "wrote " << out_path(common, stem + "_summary.json") << " (+ _hist.csv"
              << (trace > 0 ? ", _traces.ndjson" : "") << ")\n";
    if (check) {
        const bool mean_ok = s.stderr_defined && std::abs(s.mean_copies - expected) <= 3 * s.stderr_copies;
        if (!mean_ok || !s.error_within(cfg.epsilon)) {
            std::cerr << "simulation is inconsistent with the stored solution\n";
            return kConsistency;
        }
    }
    return kOk;
}

int cmd_baseline(const Common& common, const std::string& family_name, std::vector<double> at) {
    const Config cfg = load(common);
    const Problem problem = make_problem(cfg);
    const FixedFamily family = family_name == "gofl" ? FixedFamily::LocalProjective : FixedFamily::Collective;
    const SolveOptions opts = solve_options(cfg);
    const QGrid grid = make_qgrid(problem, opts);
    if (at.empty()) at = cfg.at;
    CsvTable table(cfg, {"q", "family", "theta_deg", "value"});
    CsvTable scan(cfg, {"q", "theta_deg", "value"});
    for (double q : at) {
        check_prior(q, "--at");
        const FixedStrategyResult r = optimize_fixed(problem, family, grid, q, fixed_range(cfg, family), threads_for(common, cfg));
        table.row(q, family_name, deg(r.best_theta), r.consumption_at(q));
        for (std::size_t k = 0; k < r.scan_theta.size(); ++k) scan.row(q, deg(r.scan_theta[k]), r.scan_value[k]);
        std::cout << "N_" << upper(family_name) << "(" << q << ") = " << fmt(r.consumption_at(q), 4) << "  at theta = "
                  << fmt(deg(r.best_theta), 3) << " deg\n";
    }
    const std::string stem = cfg.name + "_" + family_name;
    table.save(out_path(common, stem + ".csv"));
    scan.save(out_path(common, stem + "_scan.csv"));
    std::cout << "wrote " << out_path(common, stem + ".csv") << " (+ _scan.csv)\n";
    return kOk;
}

int cmd_eta(const Common& common, std::optional<double> q_opt, std::vector<double> s_values) {
    const Config cfg = load(common);
    if (cfg.family != "mixture") throw ConfigError("problem.family", "eta sweeps need the mixture family");
    const double q = q_opt.value_or(cfg.at.empty() ? 0.5 : cfg.at.front());
    check_prior(q, "--q");
    if (s_values.empty()) s_values = cfg.s_values.empty() ? std::vector<double>{cfg.s} : cfg.s_values;
    const FamilyRange lr{0.0, kPi / 2 - degrees(cfg.local_step_deg), degrees(cfg.local_step_deg)};
    const FamilyRange cr{degrees(cfg.collective_lo_deg), degrees(cfg.collective_hi_deg), degrees(cfg.collective_step_deg)};
    const auto local = family_members(FixedFamily::LocalProjective, lr);
    const auto coll = family_members(FixedFamily::Collective, cr);
    auto both = local;
    both.insert(both.end(), coll.begin(), coll.end());

    CsvTable table(cfg, {"s", "q", "eta_collective_adaptive", "eta_goal", "eta_gofl", "eta_gofc", "ordered"});
    bool all_ordered = true;
    std::cout << "       s        q   collective-adaptive        GOAL        GOFL        GOFC\n";
    for (double s : s_values) {
        Config c = cfg;
        c.s = s;
        validate(c);
        const Problem p = make_problem(c);
        const double ca = eta_ratio(q, p.rho0, p.rho1, both).eta;
        const double ga = eta_ratio(q, p.rho0, p.rho1, local).eta;
        const double fl = eta_fixed(q, p.rho0, p.rho1, local).eta;
        const double fc = eta_fixed(q, p.rho0, p.rho1, coll).eta;
        const bool ordered = ca < ga && ga < fl;
        all_ordered = all_ordered && ordered;
        table.row(s, q, ca, ga, fl, fc, ordered ? 1 : 0);
        std::printf("%8.4f %8.4f %21.6f %11.6f %11.6f %11.6f%s\n", s, q, ca, ga, fl, fc, ordered ? "" : "  (order violated)");
    }
    const std::string path = out_path(common, cfg.name + "_eta.csv");
    table.save(path);
    std::cout << "wrote " << path << "\n";
    return all_ordered ? kOk : kConsistency;
}

int cmd_analytic(const Common& common, const std::string& x_text, double eps, std::vector<double> qs) {
    const double x = parse_real(x_text, "--x");
    analytic::check(x, eps);
    if (qs.empty()) qs = {0.5};
    Config cfg;
    cfg.family = "pure";
    cfg.x = x;
    cfg.epsilon = eps;
    cfg.name = "analytic";
    validate(cfg);
    std::cout << "x = " << fmt(x, 6) << " rad, eps = " << eps << ", critical q = " << fmt(analytic::critical_q(x), 6)
              << ", one-shot edge = " << fmt(analytic::one_shot_edge(x, eps), 6) << "\n";
    CsvTable table(cfg, {"q", "case", "theta0_deg", "theta1_deg", "theta2_deg", "lambda", "n_goal", "lower_bound"});
    bool consistent = true;
    for (double q : qs) {
        check_prior(q, "--q");
        const double n = analytic::n_goal(q, x, eps);
        const double lb = analytic::lower_bound(q, x);
        if (in_stop_region(q, eps)) {
            table.row(q, "stop", 0.0, 0.0, 0.0, 0.0, n, lb);
            std::cout << "q = " << q << ": stop region, N = 0\n";
            continue;
        }
        const analytic::GoalAngles a = analytic::goal_angles(q, x, eps);
        table.row(q, static_cast<int>(a.kind), deg(a.theta0), deg(a.theta1), deg(a.theta2), a.lambda, n, lb);
        std::cout << "q = " << q << ": case " << static_cast<int>(a.kind) << ", theta0 " << fmt(deg(a.theta0), 3)
                  << " deg, theta1 " << fmt(deg(a.theta1), 3) << " deg, theta2 " << fmt(deg(a.theta2), 3)
                  << " deg, lambda " << fmt(a.lambda, 6) << "\n";
        std::cout << "  N_GOAL = " << fmt(n, 6) << "   eps=0 lower bound = " << fmt(lb, 6);
        if (eps == 0.0) {
            const bool match = std::abs(n - lb) <= 1e-6 * lb;
            consistent = consistent && match;
            std::cout << (match ? "   (equal)" : "   (MISMATCH)");
        }
        std::cout << "\n";
    }
    std::cout << "reference values for eps = 0: 1/(1-cos x) = " << fmt(1 / (1 - std::cos(x)), 4)
              << ", 2/sin^2 x = " << fmt(2 / std::pow(std::sin(x), 2), 4)
              << "; bound as q -> 0 (q = 1e-9): " << fmt(analytic::lower_bound(1e-9, x), 4) << "\n";
    const std::string path = out_path(common, "analytic.csv");
    table.save(path);
    std::cout << "wrote " << path << "\n";
    return consistent ? kOk : kConsistency;
}

int cmd_config(const Common& common, bool json) {
    const Config cfg = load(common);
    if (json) std::cout << to_json(cfg).dump(2) << "\n";
    else std::cout << emit_config(cfg);
    std::cerr << "config_hash " << config_hash(cfg) << "\n";
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Adaptive two-state discrimination: value iteration, baselines, Monte Carlo."};
    app.require_subcommand(1);
    app.fallthrough();
    Common common;
    app.add_option("--preset", common.preset, "Named config in the presets directory (fig1, fig2c, fig3)");
    app.add_option("--config", common.config_file, "Config file (key = value sections, or .json)");
    app.add_option("--set", common.overrides, "Override one entry, e.g. --set problem.epsilon=0.02");
    app.add_option("--threads", common.threads, "Worker threads (default: $GOA_THREADS, else all cores)")
        ->check(CLI::NonNegativeNumber);
    app.add_option("--out", common.out, "Output directory")->capture_default_str();

    std::function<int()> run;

    auto* solve = app.add_subcommand("solve", "Value iteration for GOAL or GOAC");
    std::string mode;
    std::vector<double> solve_at;
    solve->add_option("--mode", mode, "goal or goac")->required()->check(CLI::IsMember({"goal", "goac"}));
    solve->add_option("--at", solve_at, "Priors to report (repeatable)");
    solve->callback([&] { run = [&] { return cmd_solve(common, mode, solve_at); }; });

    auto* sim = app.add_subcommand("simulate", "Monte Carlo run of a stored policy");
    std::string policy_file, sampling = "outcome";
    std::optional<double> q0;
    std::optional<long> trials;
    std::optional<std::uint64_t> seed;
    int trace = 0;
    bool check = false;
    sim->add_option("--policy", policy_file, "Policy container written by solve")->required();
    sim->add_option("--q0", q0, "Initial prior");
    sim->add_option("--trials", trials, "Number of trials");
    sim->add_option("--seed", seed, "RNG seed");
    sim->add_option("--trace", trace, "Write outcome traces of the first N trials as NDJSON")->check(CLI::NonNegativeNumber);
    sim->add_option("--sampling", sampling, "outcome or components")->check(CLI::IsMember({"outcome", "components"}));
    sim->add_flag("--check", check, "Exit 5 unless mean and error rate agree with the stored solution");
    sim->callback([&] { run = [&] { return cmd_simulate(common, policy_file, q0, trials, seed, trace, sampling, check); }; });

    auto* base = app.add_subcommand("baseline", "Best repeated fixed measurement (gofl or gofc)");
    std::string family;
    std::vector<double> base_at;
    base->add_option("family", family, "gofl or gofc")->required()->check(CLI::IsMember({"gofl", "gofc"}));
    base->add_option("--at", base_at, "Initial priors (repeatable)");
    base->callback([&] { run = [&] { return cmd_baseline(common, family, base_at); }; });

    auto* eta = app.add_subcommand("eta", "Small-error efficiency ratio over a sweep of s");
    std::optional<double> eta_q;
    std::vector<double> eta_s;
    eta->add_option("--q", eta_q, "Prior");
    eta->add_option("--s", eta_s, "Mixture weights (repeatable)");
    eta->callback([&] { run = [&] { return cmd_eta(common, eta_q, eta_s); }; });

    auto* an = app.add_subcommand("analytic", "Closed-form strategy for two pure states");
    std::string x_text;
    double an_eps = 0.0;
    std::vector<double> an_q;
    an->add_option("--x", x_text, "Overlap angle, e.g. pi/6")->required();
    an->add_option("--eps", an_eps, "Error rate")->required();
    an->add_option("--q", an_q, "Priors (repeatable)");
    an->callback([&] { run = [&] { return cmd_analytic(common, x_text, an_eps, an_q); }; });

    auto* cfgcmd = app.add_subcommand("config", "Print the resolved config in canonical form");
    bool as_json = false;
    cfgcmd->add_flag("--json", as_json, "Print JSON instead of key = value text");
    cfgcmd->callback([&] { run = [&] { return cmd_config(common, as_json); }; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kParse;
    }
    try {
        return run();
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kParse;
    } catch (const FormatError& e) {
        std::cerr << "file error: " << e.what() << "\n";
        return kParse;
    } catch (const InfeasibleError& e) {
        std::cerr << "infeasible: " << e.what() << "\n";
        return kInfeasible;
    } catch (const ConsistencyFailure& e) {
        std::cerr << e.what() << "\n";
        return kConsistency;
    } catch (const DomainError& e) {
        std::cerr << "invalid argument: " << e.what() << "\n";
        return kParse;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kInternal;
    }
}
