#pragma once

// Artifact files: binary value/policy container with a JSON sidecar, CSV
// tables with a provenance header line, JSON summaries and NDJSON traces.
// The binary layout is little-endian; big-endian hosts are rejected at compile time.

#include <nlohmann/json.hpp>

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "goa/config.hpp"
#include "goa/errors.hpp"
#include "goa/simulator.hpp"
#include "goa/solver.hpp"

namespace goa {

inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr char kContainerMagic[8] = {'G', 'O', 'A', 'V', 'P', 'O', 'L', '\n'};
inline constexpr std::uint32_t kContainerVersion = 1;
static_assert(std::endian::native == std::endian::little, "container fields are stored in host order");

/// Contents of a value/policy container.
struct StoredSolution {
    std::string mode;  // goal | goac
    std::string config_hash;
    Config config;
    ValueFunction value;
    Policy policy;
    SolveReport report;
};

namespace detail {

inline std::uint64_t fnv1a(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

class Writer {
public:
    template <class T>
    void put(T v) {
        char buf[sizeof(T)];
        std::memcpy(buf, &v, sizeof(T));
        out_.append(buf, sizeof(T));
    }
    void put_string(const std::string& s) {
        put<std::uint32_t>(static_cast<std::uint32_t>(s.size()));
        out_ += s;
    }
    void put_grid(const QGrid& g) {
        put<std::uint8_t>(g.kind() == GridKind::LogOdds ? 0 : 1);
        put<std::uint32_t>(static_cast<std::uint32_t>(g.size()));
        put<double>(g.epsilon());
    }
    std::string& bytes() { return out_; }

private:
    std::string out_;
};

class Reader {
public:
    explicit Reader(const std::string& in) : in_(in) {}

    template <class T>
    T get() {
        if (pos_ + sizeof(T) > in_.size()) throw FormatError("container is truncated");
        T v;
        std::memcpy(&v, in_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return v;
    }
    std::string get_string() {
        const auto n = get<std::uint32_t>();
        if (pos_ + n > in_.size()) throw FormatError("container is truncated");
        std::string s = in_.substr(pos_, n);
        pos_ += n;
        return s;
    }
    QGrid get_grid() {
        const auto kind = get<std::uint8_t>();
        const auto points = get<std::uint32_t>();
        const double eps = get<double>();
        if (kind > 1 || points < 1) throw FormatError("container has an invalid grid");
        return QGrid(static_cast<int>(points), eps, kind == 0 ? GridKind::LogOdds : GridKind::Uniform);
    }
    std::size_t pos() const { return pos_; }

private:
    const std::string& in_;
    std::size_t pos_ = 0;
};

inline std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw FormatError("cannot open " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

inline void write_file(const std::string& path, const std::string& bytes, bool binary = false) {
    std::ofstream f(path, binary ? std::ios::binary : std::ios::out);
    if (!f) throw FormatError("cannot write " + path);
    f << bytes;
    if (!f) throw FormatError("write failed: " + path);
}

}  // namespace detail

/// Layout: magic, u32 version, mode, config hash, canonical config text,
/// value grid + values, policy grid + entries, report, u64 FNV-1a of all
/// preceding bytes.
inline std::string encode_solution(const StoredSolution& s) {
    detail::Writer w;
    w.bytes().append(kContainerMagic, sizeof kContainerMagic);
    w.put<std::uint32_t>(kContainerVersion);
    w.put_string(s.mode);
    w.put_string(s.config_hash);
    w.put_string(emit_config(s.config));
    w.put_grid(s.value.grid);
    for (double v : s.value.values) w.put<double>(v);
    w.put_grid(s.policy.grid);
    w.put<double>(s.policy.epsilon);
    for (const auto& e : s.policy.entries) {
        w.put<std::uint8_t>(static_cast<std::uint8_t>(e.arm));
        w.put<std::uint8_t>(static_cast<std::uint8_t>(e.kind));
        for (double a : e.angles) w.put<double>(a);
        for (double x : e.weights) w.put<double>(x);
    }
    w.put<std::int32_t>(s.report.iterations);
    w.put<std::uint8_t>(s.report.converged);
    w.put<std::uint8_t>(s.report.monotone);
    w.put<double>(s.report.wall_time);
    w.put<std::uint32_t>(static_cast<std::uint32_t>(s.report.sup_norm_history.size()));
    for (double d : s.report.sup_norm_history) w.put<double>(d);
    w.put<std::uint64_t>(detail::fnv1a(w.bytes()));
    return w.bytes();
}

inline StoredSolution decode_solution(const std::string& bytes) {
    if (bytes.size() < sizeof kContainerMagic + 12 || std::memcmp(bytes.data(), kContainerMagic, sizeof kContainerMagic) != 0)
        throw FormatError("not a value/policy container");
    std::uint64_t stored;
    std::memcpy(&stored, bytes.data() + bytes.size() - 8, 8);
    if (stored != detail::fnv1a(bytes.substr(0, bytes.size() - 8))) throw FormatError("container checksum mismatch");
    detail::Reader r(bytes);
    for (std::size_t i = 0; i < sizeof kContainerMagic; ++i) r.get<char>();
    const auto version = r.get<std::uint32_t>();
    if (version != kContainerVersion) throw FormatError("unsupported container version " + std::to_string(version));
    StoredSolution s;
    s.mode = r.get_string();
    s.config_hash = r.get_string();
    s.config = parse_config(r.get_string());
    if (config_hash(s.config) != s.config_hash) throw FormatError("embedded config does not match its hash");
    s.value = ValueFunction(r.get_grid());
    for (double& v : s.value.values) v = r.get<double>();
    s.policy.grid = r.get_grid();
    s.policy.epsilon = r.get<double>();
    s.policy.entries.resize(s.policy.grid.size());
    for (auto& e : s.policy.entries) {
        const auto arm = r.get<std::uint8_t>(), kind = r.get<std::uint8_t>();
        if (arm > 2 || kind > 3) throw FormatError("container has an invalid policy entry");
        e.arm = static_cast<Arm>(arm);
        e.kind = static_cast<MeasurementKind>(kind);
        for (double& a : e.angles) a = r.get<double>();
        for (double& x : e.weights) x = r.get<double>();
    }
    s.report.iterations = r.get<std::int32_t>();
    s.report.converged = r.get<std::uint8_t>();
    s.report.monotone = r.get<std::uint8_t>();
    s.report.wall_time = r.get<double>();
    s.report.sup_norm_history.resize(r.get<std::uint32_t>());
    for (double& d : s.report.sup_norm_history) d = r.get<double>();
    if (r.pos() != bytes.size() - 8) throw FormatError("container has trailing bytes");
    return s;
}

inline nlohmann::ordered_json entry_json(const PolicyEntry& e) {
    nlohmann::ordered_json j;
    j["arm"] = to_string(e.arm);
    if (e.arm == Arm::Stop) return j;
    j["kind"] = to_string(e.kind);
    const int n = e.kind == MeasurementKind::ThreeElementPovm ? 3 : 1;
    j["theta"] = std::vector<double>(e.angles.begin(), e.angles.begin() + n);
    if (e.kind == MeasurementKind::ThreeElementPovm) j["weights"] = e.weights;
    return j;
}

inline nlohmann::ordered_json report_json(const SolveReport& r) {
    nlohmann::ordered_json j;
    j["iterations"] = r.iterations;
    j["converged"] = r.converged;
    j["monotone"] = r.monotone;
    j["wall_time_s"] = r.wall_time;
    j["max_copies_per_round"] = r.max_copies_per_round;
    j["sup_norm_history"] = r.sup_norm_history;
    return j;
}

/// Human-readable companion of the container, one point per value-grid node.
inline nlohmann::ordered_json sidecar_json(const StoredSolution& s) {
    nlohmann::ordered_json j;
    j["format"] = "goa-value-policy";
    j["container_version"] = kContainerVersion;
    j["tool_version"] = kToolVersion;
    j["mode"] = s.mode;
    j["config_hash"] = s.config_hash;
    j["config"] = to_json(s.config);
    j["epsilon"] = s.value.epsilon();
    const Problem p = make_problem(s.config);
    for (const auto& [name, st] : {std::pair{"rho0", p.rho0}, std::pair{"rho1", p.rho1}})
        j["problem"][name] = {{"bloch_angle", st.bloch_angle}, {"depolarization", st.depolarization}};
    j["value_grid"] = {{"points", s.value.grid.size()}, {"kind", to_string(s.value.grid.kind())}};
    j["policy_grid"] = {{"points", s.policy.grid.size()}, {"kind", to_string(s.policy.grid.kind())}};
    j["report"] = report_json(s.report);
    auto& pts = j["points"] = nlohmann::ordered_json::array();
    for (int i = 0; i < s.value.grid.size(); ++i) {
        const double q = s.value.grid.q_at(i);
        nlohmann::ordered_json pt;
        pt["q"] = q;
        pt["value"] = s.value.values[i];
        const nlohmann::ordered_json entry = entry_json(s.policy.at(q));
        for (const auto& [k, v] : entry.items()) pt[k] = v;
        pts.push_back(pt);
    }
    return j;
}

inline void save_solution(const std::string& path, const StoredSolution& s) {
    detail::write_file(path, encode_solution(s), true);
    detail::write_file(path + ".json", sidecar_json(s).dump(1) + "\n");
}

inline StoredSolution load_solution(const std::string& path) { return decode_solution(detail::read_file(path)); }

/// Comma-separated table. The first line is a '#' header carrying the tool
/// version, config hash and grid sizes; the second holds column names.
class CsvTable {
public:
    CsvTable(const Config& c, std::vector<std::string> columns) : columns_(std::move(columns)) {
        out_ << "# goa " << kToolVersion << " config_hash=" << config_hash(c) << " q_points=" << c.q_points
             << " theta_points=" << c.theta_points << "\n";
        for (std::size_t i = 0; i < columns_.size(); ++i) out_ << (i ? "," : "") << columns_[i];
        out_ << "\n";
    }

    static std::string cell(double v) {
        std::ostringstream s;
        s << std::setprecision(12) << v;
        return s.str();
    }
    static std::string cell(const std::string& v) { return v; }
    static std::string cell(const char* v) { return v; }
    static std::string cell(long v) { return std::to_string(v); }
    static std::string cell(int v) { return std::to_string(v); }

    template <class... T>
    void row(const T&... v) {
        if (sizeof...(T) != columns_.size()) throw DomainError("row width does not match the table header");
        std::string sep;
        ((out_ << sep << cell(v), sep = ","), ...);
        out_ << "\n";
    }

    std::string str() const { return out_.str(); }
    void save(const std::string& path) const { detail::write_file(path, str()); }

private:
    std::vector<std::string> columns_;
    std::ostringstream out_;
};

inline nlohmann::ordered_json summary_json(const SimulationSummary& s, double expected, double epsilon) {
    nlohmann::ordered_json j;
    j["tool_version"] = kToolVersion;
    j["trials"] = s.trials;
    j["q0"] = s.q0;
    j["seed"] = s.seed;
    j["mean_copies"] = s.mean_copies;
    if (s.stderr_defined) j["stderr_copies"] = s.stderr_copies;
    else j["stderr_copies"] = nullptr;
    j["expected_copies"] = expected;
    j["errors"] = s.errors;
    j["empirical_error"] = s.empirical_error;
    j["error_bound"] = epsilon + 3.0 * s.error_stderr(epsilon);
    return j;
}

/// One JSON object per traced trial.
inline std::string traces_ndjson(const SimulationSummary& s) {
    std::string out;
    for (std::size_t i = 0; i < s.traces.size(); ++i) {
        const TrialRecord& t = s.traces[i];
        nlohmann::ordered_json j;
        j["trial"] = i;
        j["truth"] = t.truth;
        j["copies"] = t.copies;
        j["decision"] = t.decision;
        j["correct"] = t.correct;
        j["final_q"] = t.final_posterior;
        auto& steps = j["steps"] = nlohmann::ordered_json::array();
        for (const auto& st : t.trace) steps.push_back({st.node, st.outcome, st.posterior});
        out += j.dump() + "\n";
    }
    return out;
}

}  // namespace goa
