#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <span>
#include <vector>

#include "goa/errors.hpp"
#include "goa/quantum.hpp"

namespace goa {

/// Slack added to epsilon when testing the stop region. Exact exclusions
/// evaluated in floating point leave posteriors around 1e-33, not 0.
inline constexpr double kStopSlack = 1e-12;

inline bool in_stop_region(double q, double epsilon) {
    return std::min(q, 1.0 - q) <= epsilon + kStopSlack;
}

inline double logit(double q) { return std::log(q) - std::log1p(-q); }
inline double logistic(double l) { return l >= 0 ? 1.0 / (1.0 + std::exp(-l)) : std::exp(l) / (1.0 + std::exp(l)); }

/// Uniform grid over [0, pi] where pi is identified with 0: `points` counts the
/// closed interval, so 1801 points is a 0.1 degree step with 1800 distinct nodes.
class ThetaGrid {
public:
    explicit ThetaGrid(int points = 1801) : points_(points) {
        if (points < 5) throw DomainError("theta grid needs at least 5 points");
        const int n = size();
        auto c = std::make_shared<std::vector<double>>(n);
        auto s = std::make_shared<std::vector<double>>(n);
        for (int j = 0; j < n; ++j) {
            (*c)[j] = std::cos(2.0 * at(j));
            (*s)[j] = std::sin(2.0 * at(j));
        }
        cos2_ = std::move(c);
        sin2_ = std::move(s);
    }

    int points() const { return points_; }
    int size() const { return points_ - 1; }
    double step() const { return kPi / size(); }
    double at(int j) const { return j * kPi / size(); }
    /// Nearest node index for an angle, wrapped into [0, pi).
    int nearest(double theta) const {
        double t = std::fmod(theta, kPi);
        if (t < 0) t += kPi;
        int j = static_cast<int>(std::lround(t / step()));
        return j % size();
    }
    std::span<const double> cos2() const { return *cos2_; }
    std::span<const double> sin2() const { return *sin2_; }

private:
    int points_;
    // shared so copies (one per cost density) stay cheap
    std::shared_ptr<const std::vector<double>> cos2_;
    std::shared_ptr<const std::vector<double>> sin2_;
};

enum class GridKind { LogOdds, Uniform };

inline const char* to_string(GridKind k) { return k == GridKind::LogOdds ? "logodds" : "uniform"; }

/// Cell-centred grid over the undecided interval (epsilon, 1 - epsilon), either
/// uniform in q or uniform in log-odds. The stop region itself is never
/// interpolated: values there are exactly zero.
class QGrid {
public:
    QGrid() : QGrid(2001, 0.01) {}

    QGrid(int points, double epsilon, GridKind kind = GridKind::LogOdds) : points_(points), epsilon_(epsilon), kind_(kind) {
        if (points < 3) throw DomainError("q grid needs at least 3 points");
        if (!(epsilon >= 0.0 && epsilon < 0.5)) throw DomainError("epsilon must lie in [0, 0.5)");
        const double edge = epsilon + kStopSlack;
        if (kind_ == GridKind::LogOdds) {
            hi_ = std::log1p(-edge) - std::log(edge);
            lo_ = -hi_;
        } else {
            lo_ = edge;
            hi_ = 1.0 - edge;
        }
        step_ = (hi_ - lo_) / points_;
    }

    int size() const { return points_; }
    double epsilon() const { return epsilon_; }
    GridKind kind() const { return kind_; }
    double lo() const { return lo_; }
    double hi() const { return hi_; }
    double step() const { return step_; }

    /// Grid coordinate of node j.
    double coord(int j) const { return lo_ + (j + 0.5) * step_; }
    double q_at(int j) const { return to_q(coord(j)); }

    double to_coord(double q) const { return kind_ == GridKind::LogOdds ? logit(q) : q; }
    double to_q(double c) const { return kind_ == GridKind::LogOdds ? logistic(c) : c; }

    /// True when the coordinate lies in the stop region.
    bool stops(double c) const { return c <= lo_ || c >= hi_; }

    int nearest(double c) const {
        const double x = (c - lo_) / step_ - 0.5;
        return static_cast<int>(std::clamp(std::lround(x), 0L, static_cast<long>(points_ - 1)));
    }

    /// Interpolation stencil at coordinate c (outside the stop region): the
    /// value is (1-w) v[j] + w v[j+1]. Beyond the outermost nodes the edge
    /// value is held (w = 0).
    void stencil(double c, int& j, double& w) const {
        const double x = (c - lo_) / step_ - 0.5;
        if (x <= 0.0) {
            j = 0;
            w = 0.0;
        } else if (x >= points_ - 1) {
            j = points_ - 1;
            w = 0.0;
        } else {
            j = static_cast<int>(x);
            w = x - j;
        }
    }

    double interpolate(std::span<const double> values, double c) const {
        int j;
        double w;
        stencil(c, j, w);
        return w == 0.0 ? values[j] : values[j] + w * (values[j + 1] - values[j]);
    }

    bool operator==(const QGrid& o) const {
        return points_ == o.points_ && epsilon_ == o.epsilon_ && kind_ == o.kind_;
    }

private:
    int points_;
    double epsilon_;
    GridKind kind_;
    double lo_ = 0.0;
    double hi_ = 1.0;
    double step_ = 0.0;
};

/// N(q) sampled on a QGrid; zero on the stop region, linear in the grid
/// coordinate elsewhere.
struct ValueFunction {
    QGrid grid;
    std::vector<double> values;

    ValueFunction() = default;
    explicit ValueFunction(QGrid g, double fill = 0.0) : grid(g), values(g.size(), fill) {}

    double epsilon() const { return grid.epsilon(); }

    double at(double q) const {
        if (!(q >= 0.0 && q <= 1.0)) throw DomainError("value function queried outside [0,1]");
        if (in_stop_region(q, grid.epsilon())) return 0.0;
        return grid.interpolate(values, grid.to_coord(q));
    }

    double at_coord(double c) const {
        if (grid.stops(c)) return 0.0;
        return grid.interpolate(values, c);
    }

    double sup_distance(const ValueFunction& o) const {
        double d = 0.0;
        for (std::size_t i = 0; i < values.size(); ++i) d = std::max(d, std::abs(values[i] - o.values[i]));
        return d;
    }
};

/// Posterior coordinate after an outcome with likelihoods (t0, t1) from a prior
/// at coordinate c. Exact exclusions map to +-infinity, which stops().
inline double posterior_coord(const QGrid& grid, double c, double q, double t0, double t1) {
    if (grid.kind() == GridKind::LogOdds) {
        if (t0 <= 0.0) return -std::numeric_limits<double>::infinity();
        if (t1 <= 0.0) return std::numeric_limits<double>::infinity();
        return c + (std::log(t0) - std::log(t1));
    }
    const double p = q * t0 + (1.0 - q) * t1;
    return p > 0.0 ? q * t0 / p : q;
}

}  // namespace goa
