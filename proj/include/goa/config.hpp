#pragma once

// Run configuration: an INI-like key = value text format with [sections] and
// an equivalent JSON form. Emitting and re-parsing gives back the same Config.

#include <nlohmann/json.hpp>

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <regex>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "goa/baselines.hpp"
#include "goa/errors.hpp"
#include "goa/problem.hpp"
#include "goa/solver.hpp"

namespace goa {

struct Config {
    // [problem]
    std::string family = "depolarized";  // depolarized | mixture | pure
    double x0 = kPi / 12;
    double d0 = 0.01;
    double x1 = -kPi / 12;
    double d1 = 0.001;
    double s = 0.05;       // mixture weight
    double angle = kPi / 12;  // mixture component angle
    double x = kPi / 6;    // pure pair at +-x/2
    double epsilon = 0.01;
    // [grid]
    long q_points = 2001;
    long theta_points = 1801;
    std::string q_grid = "logodds";  // logodds | uniform
    long policy_points = 0;
    // [solver]
    double tol = 1e-4;
    long max_iter = 500;
    std::string search = "simplex";  // simplex | tilt
    double local_step_deg = 0.1;
    double collective_lo_deg = -5.0;
    double collective_hi_deg = 20.0;
    double collective_step_deg = 0.25;
    // [baseline]
    double fixed_step_deg = 0.25;
    // [run]
    std::string name = "custom";
    std::vector<double> at{0.5};
    std::vector<double> s_values;
    std::uint64_t seed = 1;
    long trials = 1000000;
    long threads = 0;

    bool operator==(const Config&) const = default;
};

namespace detail {

using FieldPtr = std::variant<double*, long*, std::uint64_t*, std::string*, std::vector<double>*>;

struct Field {
    const char* section;
    const char* key;
    FieldPtr ptr;
};

inline std::vector<Field> fields(Config& c) {
    return {
        {"problem", "family", &c.family},
        {"problem", "x0", &c.x0},
        {"problem", "d0", &c.d0},
        {"problem", "x1", &c.x1},
        {"problem", "d1", &c.d1},
        {"problem", "s", &c.s},
        {"problem", "angle", &c.angle},
        {"problem", "x", &c.x},
        {"problem", "epsilon", &c.epsilon},
        {"grid", "q_points", &c.q_points},
        {"grid", "theta_points", &c.theta_points},
        {"grid", "q_grid", &c.q_grid},
        {"grid", "policy_points", &c.policy_points},
        {"solver", "tol", &c.tol},
        {"solver", "max_iter", &c.max_iter},
        {"solver", "search", &c.search},
        {"solver", "local_step_deg", &c.local_step_deg},
        {"solver", "collective_lo_deg", &c.collective_lo_deg},
        {"solver", "collective_hi_deg", &c.collective_hi_deg},
        {"solver", "collective_step_deg", &c.collective_step_deg},
        {"baseline", "fixed_step_deg", &c.fixed_step_deg},
        {"run", "name", &c.name},
        {"run", "at", &c.at},
        {"run", "s_values", &c.s_values},
        {"run", "seed", &c.seed},
        {"run", "trials", &c.trials},
        {"run", "threads", &c.threads},
    };
}

inline const char* const kSections[] = {"problem", "grid", "solver", "baseline", "run"};

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    return s.substr(b, s.find_last_not_of(" \t\r\n") - b + 1);
}

inline std::string format_real(double v) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

}  // namespace detail

/// Real number, or a multiple of pi ("pi/12", "-2*pi/3"), or degrees ("15deg").
inline double parse_real(const std::string& text, const std::string& key) {
    const std::string t = detail::trim(text);
    if (t.empty()) throw ConfigError(key, "empty value");
    double v = 0.0;
    const auto r = std::from_chars(t.data(), t.data() + t.size(), v);
    if (r.ec == std::errc() && r.ptr == t.data() + t.size()) {
        if (!std::isfinite(v)) throw ConfigError(key, "value must be finite");
        return v;
    }
    static const std::regex pi_form(R"(^([+-])?(?:(\d+(?:\.\d*)?)\s*\*?\s*)?pi(?:\s*/\s*(\d+(?:\.\d*)?))?$)");
    static const std::regex deg_form(R"(^([+-]?\d+(?:\.\d*)?(?:[eE][+-]?\d+)?)\s*deg$)");
    std::smatch m;
    if (std::regex_match(t, m, pi_form)) {
        v = kPi;
        if (m[2].matched) v *= std::stod(m[2]);
        if (m[3].matched) {
            const double den = std::stod(m[3]);
            if (den == 0.0) throw ConfigError(key, "division by zero in '" + t + "'");
            v /= den;
        }
        return m[1] == "-" ? -v : v;
    }
    if (std::regex_match(t, m, deg_form)) return degrees(std::stod(m[1]));
    throw ConfigError(key, "not a number: '" + t + "'");
}

inline long parse_integer(const std::string& text, const std::string& key) {
    const double v = parse_real(text, key);
    if (v != std::floor(v) || std::abs(v) > 9e15) throw ConfigError(key, "expected an integer, got '" + text + "'");
    return static_cast<long>(v);
}

inline std::vector<double> parse_list(const std::string& text, const std::string& key) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (detail::trim(item).empty()) continue;
        out.push_back(parse_real(item, key));
    }
    return out;
}

/// Range checks; the error names the offending key as section.key.
inline void validate(const Config& c) {
    auto need = [](bool ok, const char* key, const std::string& what) {
        if (!ok) throw ConfigError(key, what);
    };
    need(c.family == "depolarized" || c.family == "mixture" || c.family == "pure", "problem.family",
         "must be depolarized, mixture or pure");
    need(c.d0 >= 0.0 && c.d0 <= 1.0, "problem.d0", "must lie in [0, 1]");
    need(c.d1 >= 0.0 && c.d1 <= 1.0, "problem.d1", "must lie in [0, 1]");
    need(c.s >= 0.0 && c.s < 0.5, "problem.s", "must lie in [0, 0.5)");
    need(c.x > 0.0 && c.x <= kPi / 2, "problem.x", "must lie in (0, pi/2]");
    need(c.epsilon >= 0.0 && c.epsilon < 0.5, "problem.epsilon", "must lie in [0, 0.5)");
    need(c.q_points >= 3 && c.q_points <= 10000000, "grid.q_points", "must lie in [3, 1e7]");
    need(c.theta_points >= 5 && c.theta_points <= 1000000, "grid.theta_points", "must lie in [5, 1e6]");
    need(c.q_grid == "logodds" || c.q_grid == "uniform", "grid.q_grid", "must be logodds or uniform");
    need(c.policy_points == 0 || c.policy_points >= c.q_points, "grid.policy_points", "must be 0 or >= q_points");
    need(c.tol > 0.0, "solver.tol", "must be positive");
    need(c.max_iter >= 1, "solver.max_iter", "must be >= 1");
    need(c.search == "simplex" || c.search == "tilt", "solver.search", "must be simplex or tilt");
    need(c.local_step_deg > 0.0 && c.local_step_deg <= 45.0, "solver.local_step_deg", "must lie in (0, 45]");
    need(c.collective_step_deg > 0.0, "solver.collective_step_deg", "must be positive");
    need(c.collective_hi_deg >= c.collective_lo_deg, "solver.collective_hi_deg", "must be >= collective_lo_deg");
    need(c.fixed_step_deg > 0.0 && c.fixed_step_deg <= 45.0, "baseline.fixed_step_deg", "must lie in (0, 45]");
    for (double q : c.at) need(q > 0.0 && q < 1.0, "run.at", "priors must lie in (0, 1)");
    for (double s : c.s_values) need(s >= 0.0 && s < 0.5, "run.s_values", "must lie in [0, 0.5)");
    need(c.trials >= 1, "run.trials", "must be >= 1");
    need(c.threads >= 0, "run.threads", "must be >= 0");
}

/// Sets one entry from its text form. `key` is "section.key".
inline void set_value(Config& c, const std::string& key, const std::string& value) {
    for (auto& f : detail::fields(c)) {
        if (key != std::string(f.section) + "." + f.key) continue;
        std::visit(
            [&](auto* p) {
                using T = std::remove_pointer_t<decltype(p)>;
                if constexpr (std::is_same_v<T, double>) *p = parse_real(value, key);
                else if constexpr (std::is_same_v<T, long>) *p = parse_integer(value, key);
                else if constexpr (std::is_same_v<T, std::uint64_t>) {
                    const long v = parse_integer(value, key);
                    if (v < 0) throw ConfigError(key, "must be non-negative");
                    *p = static_cast<std::uint64_t>(v);
                } else if constexpr (std::is_same_v<T, std::string>) *p = detail::trim(value);
                else *p = parse_list(value, key);
            },
            f.ptr);
        return;
    }
    throw ConfigError(key, "unknown key");
}

/// Parses the key = value form. '#' and ';' start comments.
inline Config parse_config(const std::string& text) {
    Config c;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find_first_of("#;");
        if (hash != std::string::npos) line.resize(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError("line " + std::to_string(lineno), "unterminated section header");
            section = detail::trim(line.substr(1, line.size() - 2));
            bool known = false;
            for (const char* s : detail::kSections) known = known || section == s;
            if (!known) throw ConfigError(section, "unknown section");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno), "expected key = value");
        const std::string key = detail::trim(line.substr(0, eq));
        if (section.empty()) throw ConfigError(key, "key outside a section");
        set_value(c, section + "." + key, line.substr(eq + 1));
    }
    validate(c);
    return c;
}

/// Canonical text form. Sections appear in a fixed order; `with_run` false
/// drops [run], which does not affect solver output.
inline std::string emit_config(const Config& cfg, bool with_run = true) {
    Config c = cfg;
    std::ostringstream out;
    std::string section;
    for (const auto& f : detail::fields(c)) {
        if (!with_run && std::string(f.section) == "run") continue;
        if (section != f.section) {
            if (!section.empty()) out << "\n";
            section = f.section;
            out << "[" << section << "]\n";
        }
        out << f.key << " = ";
        std::visit(
            [&](auto* p) {
                using T = std::remove_pointer_t<decltype(p)>;
                if constexpr (std::is_same_v<T, double>) out << detail::format_real(*p);
                else if constexpr (std::is_same_v<T, std::vector<double>>) {
                    for (std::size_t i = 0; i < p->size(); ++i) out << (i ? ", " : "") << detail::format_real((*p)[i]);
                } else out << *p;
            },
            f.ptr);
        out << "\n";
    }
    return out.str();
}

inline nlohmann::ordered_json to_json(const Config& cfg) {
    Config c = cfg;
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    for (const auto& f : detail::fields(c))
        std::visit([&](auto* p) { j[f.section][f.key] = *p; }, f.ptr);
    return j;
}

/// Numbers may also be given as strings in any form parse_real accepts.
inline Config from_json(const nlohmann::ordered_json& j) {
    if (!j.is_object()) throw ConfigError("", "JSON config must be an object");
    Config c;
    auto fs = detail::fields(c);
    for (const auto& [section, body] : j.items()) {
        if (!body.is_object()) throw ConfigError(section, "section must be an object");
        for (const auto& [key, value] : body.items()) {
            const std::string full = section + "." + key;
            bool found = false;
            for (auto& f : fs) found = found || full == std::string(f.section) + "." + f.key;
            if (!found) throw ConfigError(full, "unknown key");
            if (value.is_string()) {
                set_value(c, full, value.get<std::string>());
            } else if (value.is_array()) {
                std::string joined;
                for (const auto& v : value) joined += (v.is_string() ? v.get<std::string>() : v.dump()) + ",";
                set_value(c, full, joined);
            } else if (value.is_number()) {
                set_value(c, full, value.dump());
            } else {
                throw ConfigError(full, "unsupported JSON value");
            }
        }
    }
    validate(c);
    return c;
}

inline Config load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError(path, "cannot open config file");
    std::stringstream ss;
    ss << f.rdbuf();
    if (path.size() >= 5 && path.substr(path.size() - 5) == ".json") {
        try {
            return from_json(nlohmann::ordered_json::parse(ss.str()));
        } catch (const nlohmann::json::parse_error& e) {
            throw ConfigError(path, e.what());
        }
    }
    return parse_config(ss.str());
}

/// FNV-1a 64 of the canonical text without [run], as 16 hex digits.
inline std::string config_hash(const Config& c) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : emit_config(c, false)) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

inline Problem make_problem(const Config& c) {
    Problem p;
    if (c.family == "depolarized") p = make_problem(c.x0, c.d0, c.x1, c.d1, c.epsilon);
    else if (c.family == "mixture") p = mixture_problem(c.s, c.epsilon, c.angle);
    else p = pure_problem(c.x, c.epsilon);
    p.name = c.name;
    return p;
}

inline SolveOptions solve_options(const Config& c, int threads = 0) {
    SolveOptions o;
    o.q_points = static_cast<int>(c.q_points);
    o.theta_points = static_cast<int>(c.theta_points);
    o.grid_kind = c.q_grid == "uniform" ? GridKind::Uniform : GridKind::LogOdds;
    o.tol = c.tol;
    o.max_iter = static_cast<int>(c.max_iter);
    o.search = c.search == "tilt" ? SearchMode::TiltSteps : SearchMode::Simplex;
    o.threads = threads > 0 ? threads : static_cast<int>(c.threads);
    o.local_step = degrees(c.local_step_deg);
    o.collective_lo = degrees(c.collective_lo_deg);
    o.collective_hi = degrees(c.collective_hi_deg);
    o.collective_step = degrees(c.collective_step_deg);
    o.policy_points = static_cast<int>(c.policy_points);
    return o;
}

/// Scan range of a fixed-strategy family with the configured step.
inline FamilyRange fixed_range(const Config& c, FixedFamily f) {
    FamilyRange r = default_range(f);
    r.step = degrees(c.fixed_step_deg);
    if (f == FixedFamily::LocalProjective) r.hi = kPi / 2 - r.step;
    return r;
}

}  // namespace goa
