#include "pfdiff/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pfdiff {

NoiseSchedule NoiseSchedule::vp_linear(int steps, double beta_min, double beta_max) {
    if (steps < 2) {
        throw std::invalid_argument("vp_linear: need at least 2 steps, got " + std::to_string(steps));
    }
    if (!(beta_min > 0.0) || !(beta_min <= beta_max) || !(beta_max < 1.0)) {
        throw std::invalid_argument("vp_linear: require 0 < beta_min <= beta_max < 1");
    }

    NoiseSchedule s;
    s.beta_min_ = beta_min;
    s.beta_max_ = beta_max;
    s.beta_.resize(steps);
    s.alpha_bar_.resize(steps);
    s.lambda_.resize(steps);

    double cum = 1.0;
    for (int i = 0; i < steps; ++i) {
        s.beta_[i] = beta_min + static_cast<double>(i) * (beta_max - beta_min) / (steps - 1);
        cum *= 1.0 - s.beta_[i];
        s.alpha_bar_[i] = cum;
        s.lambda_[i] = 0.5 * std::log(cum / (1.0 - cum));
    }
    return s;
}

int NoiseSchedule::check_index(int t) const {
    if (t < 0 || t >= steps()) {
        throw std::out_of_range("schedule index " + std::to_string(t) + " outside [0, " +
                                std::to_string(steps() - 1) + "]");
    }
    return t;
}

double NoiseSchedule::alpha(int t) const { return std::sqrt(alpha_bar_[check_index(t)]); }

double NoiseSchedule::sigma(int t) const { return std::sqrt(1.0 - alpha_bar_[check_index(t)]); }

double NoiseSchedule::lambda_at(double t) const {
    if (!(t >= 0.0) || !(t <= steps() - 1)) {
        throw std::out_of_range("lambda_at: t outside schedule range");
    }
    const int lo = static_cast<int>(std::floor(t));
    if (lo == steps() - 1) return lambda_.back();
    const double frac = t - lo;
    return lambda_[lo] + frac * (lambda_[lo + 1] - lambda_[lo]);
}

double NoiseSchedule::alpha_at(double t) const {
    // alpha^2 = sigmoid(2*lambda); exact at integer knots.
    const double lam = lambda_at(t);
    return std::sqrt(1.0 / (1.0 + std::exp(-2.0 * lam)));
}

double NoiseSchedule::sigma_at(double t) const {
    const double lam = lambda_at(t);
    return std::sqrt(1.0 / (1.0 + std::exp(2.0 * lam)));
}

double NoiseSchedule::time_of_lambda(double lam) const {
    // lambda_ is strictly decreasing in t.
    if (lam >= lambda_.front()) return 0.0;
    if (lam <= lambda_.back()) return static_cast<double>(steps() - 1);
    int lo = 0;
    int hi = steps() - 1;
    while (hi - lo > 1) {
        const int mid = (lo + hi) / 2;
        if (lambda_[mid] > lam) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    const double frac = (lam - lambda_[lo]) / (lambda_[hi] - lambda_[lo]);
    return lo + frac;
}

std::string to_string(GridKind kind) {
    return kind == GridKind::Uniform ? "uniform" : "quadratic";
}

GridKind grid_kind_from_string(const std::string& s) {
    if (s == "uniform") return GridKind::Uniform;
    if (s == "quadratic") return GridKind::Quadratic;
    throw std::invalid_argument("unknown grid kind '" + s + "' (expected uniform|quadratic)");
}

TimeGrid TimeGrid::make(GridKind kind, int intervals, int steps) {
    if (intervals < 1 || intervals > steps - 1) {
        throw std::invalid_argument("grid: require 1 <= intervals <= steps-1, got intervals=" +
                                    std::to_string(intervals) + " steps=" + std::to_string(steps));
    }

    TimeGrid g;
    g.kind = kind;
    g.points.resize(intervals + 1);
    const double top = steps - 1;
    for (int i = 0; i <= intervals; ++i) {
        const double u = 1.0 - static_cast<double>(i) / intervals;
        const double v = kind == GridKind::Uniform ? u : u * u;
        g.points[i] = static_cast<int>(std::llround(top * v));
    }
    g.points.front() = steps - 1;
    g.points.back() = 0;

    // Rounding can merge neighbours on dense quadratic tails. Decrement the
    // later entry, but never below the floor M-i that keeps a strictly
    // decreasing completion down to 0 feasible.
    for (int i = 1; i <= intervals; ++i) {
        const int ceiling = g.points[i - 1] - 1;
        const int floor_i = intervals - i;
        g.points[i] = std::clamp(std::min(g.points[i], ceiling), floor_i, ceiling);
    }
    if (g.points.back() != 0 || g.points.front() != steps - 1) {
        throw std::runtime_error("grid collision: strict descent could not be restored");
    }
    return g;
}

}  // namespace pfdiff
