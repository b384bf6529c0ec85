#pragma once

// Real-valued state and measurement algebra for discriminating two qubit
// hypotheses rho0 / rho1 from one or two copies at a time.

#include <Eigen/Dense>
#include <unsupported/Eigen/KroneckerProduct>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "goa/errors.hpp"

namespace goa {

using Mat2 = Eigen::Matrix2d;
using Mat4 = Eigen::Matrix4d;
using MatX = Eigen::MatrixXd;
using Vec2 = Eigen::Vector2d;
using Vec4 = Eigen::Vector4d;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kCompletenessTol = 1e-10;

/// cos(t)|0> + sin(t)|1>
inline Vec2 ket(double t) { return Vec2(std::cos(t), std::sin(t)); }

/// sin(t)|0> - cos(t)|1>, the printed |theta_-> convention.
inline Vec2 ket_minus(double t) { return Vec2(std::sin(t), -std::cos(t)); }

inline Mat2 projector(double t) {
    const Vec2 v = ket(t);
    return v * v.transpose();
}

// ---------------------------------------------------------------------------
// States
// ---------------------------------------------------------------------------

/// Real qubit density matrix (1-d)|v><v| + (d/2) I with |v> = ket(bloch_angle).
/// Any real 2x2 density matrix has this form, so mixtures of two pure states are
/// represented by recovering (angle, d) from the matrix.
struct QubitState {
    double bloch_angle = 0.0;
    double depolarization = 0.0;
    Mat2 matrix = Mat2::Identity() / 2.0;

    bool is_pure(double tol = 1e-12) const { return depolarization <= tol; }
};

namespace detail {

inline void check_density(const MatX& m, double tol = 1e-12) {
    if ((m - m.transpose()).cwiseAbs().maxCoeff() > tol)
        throw DomainError("density matrix is not symmetric");
    if (std::abs(m.trace() - 1.0) > tol)
        throw DomainError("density matrix trace differs from 1");
    Eigen::SelfAdjointEigenSolver<MatX> es(m);
    if (es.eigenvalues().minCoeff() < -tol)
        throw DomainError("density matrix is not positive semidefinite");
}

}  // namespace detail

inline QubitState make_state(double bloch_angle, double depolarization) {
    if (!(depolarization >= 0.0 && depolarization <= 1.0))
        throw DomainError("depolarization must lie in [0,1]");
    QubitState s;
    s.bloch_angle = bloch_angle;
    s.depolarization = depolarization;
    s.matrix = (1.0 - depolarization) * projector(bloch_angle) + 0.5 * depolarization * Mat2::Identity();
    return s;
}

/// Recover the (angle, depolarization) parameterisation of a real density matrix.
inline QubitState state_from_matrix(const Mat2& m) {
    detail::check_density(m);
    const Mat2 sym = 0.5 * (m + m.transpose());
    const double rz = sym(0, 0) - sym(1, 1);
    const double rx = 2.0 * sym(0, 1);
    const double r = std::hypot(rz, rx);
    QubitState s;
    s.matrix = sym;
    s.depolarization = std::clamp(1.0 - r, 0.0, 1.0);
    s.bloch_angle = r > 0.0 ? 0.5 * std::atan2(rx, rz) : 0.0;
    return s;
}

/// (1-s)|a><a| + s|b><b| for kets at angles a and b.
inline QubitState mixture_state(double s, double angle_a, double angle_b) {
    if (!(s >= 0.0 && s <= 1.0)) throw DomainError("mixture weight must lie in [0,1]");
    return state_from_matrix((1.0 - s) * projector(angle_a) + s * projector(angle_b));
}

struct TwoCopyState {
    Mat4 matrix = Mat4::Identity() / 4.0;
    double mixture_weight_s = 0.0;
};

/// rho^{(x)n} for n in {1,2}.
inline MatX tensor_power(const QubitState& state, int n) {
    if (n == 1) return state.matrix;
    if (n == 2) return Eigen::kroneckerProduct(state.matrix, state.matrix).eval();
    throw UnsupportedArity("tensor power supports n in {1,2}, got " + std::to_string(n));
}

inline TwoCopyState two_copy(const QubitState& state, double s = 0.0) {
    TwoCopyState t;
    t.matrix = tensor_power(state, 2);
    t.mixture_weight_s = s;
    return t;
}

// ---------------------------------------------------------------------------
// Measurements
// ---------------------------------------------------------------------------

enum class MeasurementKind { LocalProjective, ThreeElementPovm, CollectiveEntangled, Custom };

inline const char* to_string(MeasurementKind k) {
    switch (k) {
        case MeasurementKind::LocalProjective: return "projective";
        case MeasurementKind::ThreeElementPovm: return "povm3";
        case MeasurementKind::CollectiveEntangled: return "collective";
        case MeasurementKind::Custom: return "custom";
    }
    return "?";
}

struct Measurement {
    MeasurementKind kind = MeasurementKind::Custom;
    // LocalProjective: angles[0] (the pair is theta, theta + pi/2).
    // ThreeElementPovm: angles[0..2] with delta weights[0..2] (sum 2).
    // CollectiveEntangled: angles[0].
    std::array<double, 3> angles{};
    std::array<double, 3> weights{};
    int copy_cost = 1;
    std::vector<MatX> elements;
    std::vector<std::string> labels;

    std::size_t size() const { return elements.size(); }
    int dimension() const { return copy_cost == 1 ? 2 : 4; }
};

/// The four entangled basis vectors |psi_1..4> built from |theta_+>, |theta_->.
inline std::array<Vec4, 4> collective_bases(double theta) {
    const Vec2 p = ket(theta);
    const Vec2 m = ket_minus(theta);
    const Vec4 pp = Eigen::kroneckerProduct(p, p);
    const Vec4 pm = Eigen::kroneckerProduct(p, m);
    const Vec4 mp = Eigen::kroneckerProduct(m, p);
    const Vec4 mm = Eigen::kroneckerProduct(m, m);
    const double r = 1.0 / std::sqrt(2.0);
    return {pp, r * (pm + mp), r * (pm - mp), mm};
}

inline Measurement projective(double theta) {
    Measurement m;
    m.kind = MeasurementKind::LocalProjective;
    m.angles = {theta, theta + kPi / 2, 0.0};
    m.weights = {1.0, 1.0, 0.0};
    m.copy_cost = 1;
    m.elements = {projector(theta), projector(theta + kPi / 2)};
    m.labels = {"phi1", "phi2"};
    return m;
}

/// Rank-one elements w_i |psi_theta_i><psi_theta_i|. Completeness is the caller's
/// responsibility; validate() checks it.
inline Measurement three_element_povm(const std::array<double, 3>& angles, const std::array<double, 3>& weights) {
    Measurement m;
    m.kind = MeasurementKind::ThreeElementPovm;
    m.angles = angles;
    m.weights = weights;
    m.copy_cost = 1;
    for (int i = 0; i < 3; ++i) {
        m.elements.push_back(weights[i] * projector(angles[i]));
        m.labels.push_back("theta" + std::to_string(i));
    }
    return m;
}

inline Measurement collective(double theta) {
    Measurement m;
    m.kind = MeasurementKind::CollectiveEntangled;
    m.angles = {theta, 0.0, 0.0};
    m.copy_cost = 2;
    const auto basis = collective_bases(theta);
    for (int k = 0; k < 4; ++k) {
        m.elements.push_back(basis[k] * basis[k].transpose());
        m.labels.push_back("psi" + std::to_string(k + 1));
    }
    return m;
}

inline Measurement custom_measurement(std::vector<MatX> elements, int copy_cost) {
    if (copy_cost != 1 && copy_cost != 2) throw UnsupportedArity("copy cost must be 1 or 2");
    Measurement m;
    m.kind = MeasurementKind::Custom;
    m.copy_cost = copy_cost;
    m.elements = std::move(elements);
    for (std::size_t k = 0; k < m.elements.size(); ++k) m.labels.push_back("m" + std::to_string(k));
    return m;
}

inline double completeness_residual(const Measurement& m) {
    const int d = m.dimension();
    MatX sum = MatX::Zero(d, d);
    for (const auto& e : m.elements) {
        if (e.rows() != d || e.cols() != d) return std::numeric_limits<double>::infinity();
        sum += e;
    }
    return (sum - MatX::Identity(d, d)).cwiseAbs().maxCoeff();
}

/// Throws DomainError unless every element is PSD and the elements sum to I.
inline void validate(const Measurement& m) {
    if (m.elements.empty()) throw DomainError("measurement has no elements");
    if (completeness_residual(m) > kCompletenessTol) throw DomainError("measurement elements do not sum to identity");
    for (const auto& e : m.elements) {
        Eigen::SelfAdjointEigenSolver<MatX> es(0.5 * (e + e.transpose()));
        if (es.eigenvalues().minCoeff() < -1e-12) throw DomainError("measurement element is not PSD");
    }
}

// ---------------------------------------------------------------------------
// Probabilities and Bayesian updates
// ---------------------------------------------------------------------------

/// tr(M rho), snapped to [0,1] only when within 1e-10 of the boundary.
inline double born_probability(const MatX& element, const MatX& rho) {
    if (element.rows() != rho.rows() || element.cols() != rho.cols())
        throw DomainError("born_probability: dimension mismatch");
    double p = (element.cwiseProduct(rho.transpose())).sum();
    if (p < 0.0 && p > -1e-10) p = 0.0;
    if (p > 1.0 && p < 1.0 + 1e-10) p = 1.0;
    return p;
}

struct PosteriorUpdate {
    double prior_q = 0.0;
    double outcome_probability = 0.0;
    double posterior_q = 0.0;
    bool zero_probability = false;  // excluded from expectation sums
};

/// Likelihoods of each outcome under the two hypotheses, the only data the
/// Bellman operator and the simulator need from a measurement.
struct OutcomeLikelihoods {
    int count = 0;
    int copy_cost = 1;
    std::array<double, 4> p0{};
    std::array<double, 4> p1{};
};

inline OutcomeLikelihoods likelihoods(const Measurement& m, const QubitState& rho0, const QubitState& rho1) {
    if (m.size() > 4) throw DomainError("at most four outcomes supported");
    const MatX r0 = tensor_power(rho0, m.copy_cost);
    const MatX r1 = tensor_power(rho1, m.copy_cost);
    OutcomeLikelihoods l;
    l.count = static_cast<int>(m.size());
    l.copy_cost = m.copy_cost;
    for (int k = 0; k < l.count; ++k) {
        l.p0[k] = std::max(0.0, born_probability(m.elements[k], r0));
        l.p1[k] = std::max(0.0, born_probability(m.elements[k], r1));
    }
    return l;
}

inline PosteriorUpdate bayes_update(double q, double t0, double t1) {
    PosteriorUpdate u;
    u.prior_q = q;
    const double p = q * t0 + (1.0 - q) * t1;
    u.outcome_probability = p;
    if (p > 0.0) {
        u.posterior_q = std::clamp(q * t0 / p, 0.0, 1.0);
    } else {
        u.zero_probability = true;
        u.posterior_q = q;
    }
    return u;
}

/// One update per outcome of m for prior q.
inline std::vector<PosteriorUpdate> posterior(double q, const QubitState& rho0, const QubitState& rho1, const Measurement& m) {
    if (!(q >= 0.0 && q <= 1.0)) throw DomainError("prior must lie in [0,1]");
    const OutcomeLikelihoods l = likelihoods(m, rho0, rho1);
    std::vector<PosteriorUpdate> out;
    out.reserve(l.count);
    for (int k = 0; k < l.count; ++k) out.push_back(bayes_update(q, l.p0[k], l.p1[k]));
    return out;
}

/// Eigenbasis of q rho0 - (1-q) rho1 as a projective measurement. The returned
/// angle is that of the eigenvector with the larger eigenvalue (votes rho0).
inline Measurement helstrom(double q, const QubitState& rho0, const QubitState& rho1) {
    const Mat2 gamma = q * rho0.matrix - (1.0 - q) * rho1.matrix;
    Eigen::SelfAdjointEigenSolver<Mat2> es(gamma);
    const Vec2 v = es.eigenvectors().col(1);
    return projective(std::atan2(v(1), v(0)));
}

}  // namespace goa
