#pragma once

#include <random>
#include <vector>

#include <Eigen/Dense>

#include "pfdiff/schedule.hpp"
#include "pfdiff/score.hpp"

namespace pfdiff {

/// Single-slot buffer of the p scores a solver step evaluated, tagged with
/// the descending interval (t_start, t_end) they were computed over. The
/// slot is overwritten, never appended.
struct ScoreBuffer {
    std::vector<Eigen::VectorXd> scores;
    int t_start = 0;
    int t_end = 0;

    int order() const { return static_cast<int>(scores.size()); }
};

/// One DDIM update from t_from down to t_to with interpolation parameter
/// eta in [0,1]; eta = 0 is the deterministic ODE path, eta = 1 matches
/// ancestral-sampling variance. noise must be a standard-normal draw and is
/// only consumed when eta > 0.
Eigen::VectorXd ddim_step(const NoiseSchedule& sched, const Eigen::VectorXd& x,
                          const Eigen::VectorXd& eps, int t_from, int t_to, double eta = 0.0,
                          const Eigen::VectorXd* noise = nullptr);

/// First-order parameterization x_next = x_bar - gamma * eps + xi * noise;
/// for the DDIM ODE path xi = 0 and the identity with ddim_step is exact.
struct FirstOrderParam {
    Eigen::VectorXd x_bar;
    double gamma = 0.0;
    double xi = 0.0;
};
FirstOrderParam first_order_param(const NoiseSchedule& sched, const Eigen::VectorXd& x,
                                  int t_from, int t_to);

enum class SolverFamily { DdimEta, DpmSolver };

std::string to_string(SolverFamily family);
SolverFamily solver_family_from_string(const std::string& s);

/// A p-order step function phi. step() evaluates the model at its p nodes
/// and reports them; replay() consumes p externally supplied scores verbatim
/// and performs no model evaluations.
class SolverStep {
public:
    SolverStep(SolverFamily family, int order, double eta = 0.0);

    SolverFamily family() const { return family_; }
    int order() const { return order_; }
    double eta() const { return eta_; }

    Eigen::VectorXd step(const EpsModel& model, const Eigen::VectorXd& x, int t_from, int t_to,
                         ScoreBuffer* out = nullptr, std::mt19937_64* rng = nullptr) const;

    Eigen::VectorXd replay(const ScoreBuffer& q, const NoiseSchedule& sched,
                           const Eigen::VectorXd& x, int t_from, int t_to,
                           std::mt19937_64* rng = nullptr) const;

private:
    Eigen::VectorXd dpm_combine(const NoiseSchedule& sched, const Eigen::VectorXd& x,
                                int t_from, int t_to, const std::vector<Eigen::VectorXd>& eps) const;

    SolverFamily family_;
    int order_;
    double eta_;
};

/// Recorded solve: descending time indices, the state at each of them, and
/// (optionally) the noise prediction evaluated at each recorded state.
struct Trajectory {
    std::vector<int> times;
    std::vector<Eigen::VectorXd> states;
    std::vector<Eigen::VectorXd> scores;

    const Eigen::VectorXd& endpoint() const { return states.back(); }
};

/// Ground-truth integrator: DDIM eta = 0 along a uniform grid of n_ref
/// intervals (capped at T-1), recorded at every grid point. Deterministic.
Trajectory reference_solve(const EpsModel& model, const NoiseSchedule& sched,
                           const Eigen::VectorXd& x_T, int n_ref = 1000, bool log_scores = false);

/// DDIM eta-family solve over an explicit grid, recording every point.
Trajectory ddim_solve(const EpsModel& model, const NoiseSchedule& sched, const TimeGrid& grid,
                      const Eigen::VectorXd& x_T, double eta = 0.0,
                      std::mt19937_64* rng = nullptr);

/// Baseline solve with an arbitrary step function: for order p the solver
/// anchors on every p-th grid point, evaluating fresh scores at each step.
/// The grid interval count must be divisible by p.
Trajectory solve_on_grid(const EpsModel& model, const NoiseSchedule& sched, const TimeGrid& grid,
                         const SolverStep& phi, const Eigen::VectorXd& x_T,
                         std::mt19937_64* rng = nullptr);

}  // namespace pfdiff
