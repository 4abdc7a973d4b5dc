#pragma once

#include <string>
#include <vector>

namespace pfdiff {

/// Discrete variance-preserving noise schedule over T forward steps.
/// alpha(t)^2 + sigma(t)^2 = 1 at every index; alpha_bar and lambda are
/// strictly decreasing in t. Immutable after construction, safe for
/// unrestricted concurrent reads.
class NoiseSchedule {
public:
    static NoiseSchedule vp_linear(int steps, double beta_min, double beta_max);

    int steps() const { return static_cast<int>(beta_.size()); }
    double beta(int t) const { return beta_[check_index(t)]; }
    double alpha_bar(int t) const { return alpha_bar_[check_index(t)]; }
    double alpha(int t) const;
    double sigma(int t) const;
    double lambda(int t) const { return lambda_[check_index(t)]; }

    // Continuous access between integer indices, linear in lambda and exact
    // at the knots. Exponential-integrator solvers place their internal
    // nodes at lambda fractions that rarely coincide with integer indices.
    double lambda_at(double t) const;
    double alpha_at(double t) const;
    double sigma_at(double t) const;
    /// Inverse of lambda_at; lam must lie within [lambda(T-1), lambda(0)].
    double time_of_lambda(double lam) const;

    double beta_min() const { return beta_min_; }
    double beta_max() const { return beta_max_; }

private:
    NoiseSchedule() = default;
    int check_index(int t) const;

    std::vector<double> beta_;
    std::vector<double> alpha_bar_;
    std::vector<double> lambda_;
    double beta_min_ = 0.0;
    double beta_max_ = 0.0;
};

enum class GridKind { Uniform, Quadratic };

std::string to_string(GridKind kind);
GridKind grid_kind_from_string(const std::string& s);

/// Strictly decreasing integer time indices from T-1 down to 0.
struct TimeGrid {
    GridKind kind = GridKind::Uniform;
    std::vector<int> points;

    /// points[i] = round((T-1)*(1 - i/M)) for uniform,
    /// round((T-1)*(1 - i/M)^2) for quadratic; strict descent restored by
    /// decrementing colliding entries against a feasibility floor.
    static TimeGrid make(GridKind kind, int intervals, int steps);

    int intervals() const { return static_cast<int>(points.size()) - 1; }
};

}  // namespace pfdiff
