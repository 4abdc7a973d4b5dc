#include "pfdiff/solvers.hpp"

#include <cmath>
#include <stdexcept>

namespace pfdiff {

namespace {

Eigen::VectorXd draw_normal(int dim, std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::VectorXd z(dim);
    for (int i = 0; i < dim; ++i) z[i] = normal(rng);
    return z;
}

}  // namespace

Eigen::VectorXd ddim_step(const NoiseSchedule& sched, const Eigen::VectorXd& x,
                          const Eigen::VectorXd& eps, int t_from, int t_to, double eta,
                          const Eigen::VectorXd* noise) {
    if (t_to > t_from) throw std::invalid_argument("ddim_step: t_to must not exceed t_from");
    if (eta < 0.0 || eta > 1.0) throw std::invalid_argument("ddim_step: eta outside [0,1]");
    if (t_to == t_from) return x;

    const double ab_f = sched.alpha_bar(t_from);
    const double ab_t = sched.alpha_bar(t_to);

    double sigma_bar = 0.0;
    if (eta > 0.0) {
        sigma_bar = eta * std::sqrt((1.0 - ab_t) / (1.0 - ab_f)) * std::sqrt(1.0 - ab_f / ab_t);
    }
    const double dir_sq = 1.0 - ab_t - sigma_bar * sigma_bar;
    if (dir_sq < 0.0) {
        throw std::domain_error("ddim_step: 1 - alpha_bar(t_to) - sigma_bar^2 negative");
    }

    Eigen::VectorXd out = std::sqrt(ab_t) * (x - std::sqrt(1.0 - ab_f) * eps) / std::sqrt(ab_f) +
                          std::sqrt(dir_sq) * eps;
    if (sigma_bar > 0.0) {
        if (noise == nullptr) throw std::invalid_argument("ddim_step: eta > 0 needs a noise draw");
        out += sigma_bar * (*noise);
    }
    return out;
}

FirstOrderParam first_order_param(const NoiseSchedule& sched, const Eigen::VectorXd& x,
                                  int t_from, int t_to) {
    if (t_to > t_from) throw std::invalid_argument("first_order_param: t_to must not exceed t_from");
    const double ab_f = sched.alpha_bar(t_from);
    const double ab_t = sched.alpha_bar(t_to);
    FirstOrderParam p;
    p.x_bar = std::sqrt(ab_t / ab_f) * x;
    p.gamma = std::sqrt(ab_t / ab_f - ab_t) - std::sqrt(1.0 - ab_t);
    p.xi = 0.0;
    return p;
}

std::string to_string(SolverFamily family) {
    return family == SolverFamily::DdimEta ? "ddim" : "dpm-solver";
}

SolverFamily solver_family_from_string(const std::string& s) {
    if (s == "ddim" || s == "ddim-eta") return SolverFamily::DdimEta;
    if (s == "dpm-solver" || s == "dpm") return SolverFamily::DpmSolver;
    throw std::invalid_argument("unknown solver family '" + s + "' (expected ddim|dpm-solver)");
}

SolverStep::SolverStep(SolverFamily family, int order, double eta)
    : family_(family), order_(order), eta_(eta) {
    if (family == SolverFamily::DdimEta && order != 1) {
        throw std::invalid_argument("ddim family is first order");
    }
    if (family == SolverFamily::DpmSolver && (order < 1 || order > 3)) {
        throw std::invalid_argument("dpm-solver order must be 1, 2 or 3");
    }
    if (family == SolverFamily::DpmSolver && eta != 0.0) {
        throw std::invalid_argument("dpm-solver runs the deterministic ODE path (eta = 0)");
    }
    if (eta < 0.0 || eta > 1.0) throw std::invalid_argument("eta outside [0,1]");
}

Eigen::VectorXd SolverStep::step(const EpsModel& model, const Eigen::VectorXd& x, int t_from,
                                 int t_to, ScoreBuffer* out, std::mt19937_64* rng) const {
    const NoiseSchedule& sched = model.schedule();
    if (t_to > t_from) throw std::invalid_argument("solver step: t_to must not exceed t_from");

    std::vector<Eigen::VectorXd> eps;
    eps.reserve(order_);
    Eigen::VectorXd next;

    if (family_ == SolverFamily::DdimEta) {
        eps.push_back(model.eps(x, t_from));
        if (eta_ > 0.0 && t_to < t_from) {
            if (rng == nullptr) throw std::invalid_argument("eta > 0 needs an rng");
            const Eigen::VectorXd z = draw_normal(static_cast<int>(x.size()), *rng);
            next = ddim_step(sched, x, eps.front(), t_from, t_to, eta_, &z);
        } else {
            next = ddim_step(sched, x, eps.front(), t_from, t_to, 0.0, nullptr);
        }
    } else {
        if (t_to == t_from) {
            // Identity gap still reports the scores a real step would buffer.
            eps.push_back(model.eps(x, t_from));
            for (int n = 1; n < order_; ++n) eps.push_back(eps.front());
            next = x;
        } else {
            const double lam_a = sched.lambda(t_from);
            const double lam_b = sched.lambda(t_to);
            const double h = lam_b - lam_a;
            const double alpha_a = sched.alpha(t_from);

            eps.push_back(model.eps(x, t_from));
            if (order_ >= 2) {
                const double r1 = order_ == 2 ? 0.5 : 1.0 / 3.0;
                const double lam_s1 = lam_a + r1 * h;
                const double s1 = sched.time_of_lambda(lam_s1);
                const double alpha_s1 = sched.alpha_at(s1);
                const double sigma_s1 = sched.sigma_at(s1);
                const Eigen::VectorXd u1 = (alpha_s1 / alpha_a) * x -
                                           sigma_s1 * std::expm1(r1 * h) * eps[0];
                eps.push_back(model.eps(u1, s1));
            }
            if (order_ == 3) {
                const double r1 = 1.0 / 3.0;
                const double r2 = 2.0 / 3.0;
                const double lam_s2 = lam_a + r2 * h;
                const double s2 = sched.time_of_lambda(lam_s2);
                const double alpha_s2 = sched.alpha_at(s2);
                const double sigma_s2 = sched.sigma_at(s2);
                const Eigen::VectorXd d1 = eps[1] - eps[0];
                const Eigen::VectorXd u2 =
                    (alpha_s2 / alpha_a) * x - sigma_s2 * std::expm1(r2 * h) * eps[0] -
                    (sigma_s2 * r2 / r1) * (std::expm1(r2 * h) / (r2 * h) - 1.0) * d1;
                eps.push_back(model.eps(u2, s2));
            }
            next = dpm_combine(sched, x, t_from, t_to, eps);
        }
    }

    if (out != nullptr) {
        out->scores = eps;
        out->t_start = t_from;
        out->t_end = t_to;
    }
    return next;
}

Eigen::VectorXd SolverStep::replay(const ScoreBuffer& q, const NoiseSchedule& sched,
                                   const Eigen::VectorXd& x, int t_from, int t_to,
                                   std::mt19937_64* rng) const {
    if (q.order() != order_) {
        throw std::invalid_argument("replay: buffer holds " + std::to_string(q.order()) +
                                    " scores, solver order is " + std::to_string(order_));
    }
    if (t_to > t_from) throw std::invalid_argument("replay: t_to must not exceed t_from");

    if (family_ == SolverFamily::DdimEta) {
        if (eta_ > 0.0 && t_to < t_from) {
            if (rng == nullptr) throw std::invalid_argument("eta > 0 needs an rng");
            const Eigen::VectorXd z = draw_normal(static_cast<int>(x.size()), *rng);
            return ddim_step(sched, x, q.scores.front(), t_from, t_to, eta_, &z);
        }
        return ddim_step(sched, x, q.scores.front(), t_from, t_to, 0.0, nullptr);
    }
    if (t_to == t_from) return x;
    return dpm_combine(sched, x, t_from, t_to, q.scores);
}

Eigen::VectorXd SolverStep::dpm_combine(const NoiseSchedule& sched, const Eigen::VectorXd& x,
                                        int t_from, int t_to,
                                        const std::vector<Eigen::VectorXd>& eps) const {
    const double lam_a = sched.lambda(t_from);
    const double lam_b = sched.lambda(t_to);
    const double h = lam_b - lam_a;
    const double alpha_a = sched.alpha(t_from);
    const double alpha_b = sched.alpha(t_to);
    const double sigma_b = sched.sigma(t_to);
    const double em1 = std::expm1(h);

    Eigen::VectorXd out = (alpha_b / alpha_a) * x - sigma_b * em1 * eps[0];
    if (order_ == 2) {
        const double r1 = 0.5;
        out -= (sigma_b / (2.0 * r1)) * em1 * (eps[1] - eps[0]);
    } else if (order_ == 3) {
        const double r2 = 2.0 / 3.0;
        out -= (sigma_b / r2) * (em1 / h - 1.0) * (eps[2] - eps[0]);
    }
    return out;
}

Trajectory reference_solve(const EpsModel& model, const NoiseSchedule& sched,
                           const Eigen::VectorXd& x_T, int n_ref, bool log_scores) {
    if (n_ref < 100) throw std::invalid_argument("reference_solve: n_ref must be >= 100");
    const int intervals = std::min(n_ref, sched.steps() - 1);
    const TimeGrid grid = TimeGrid::make(GridKind::Uniform, intervals, sched.steps());

    Trajectory traj;
    traj.times = grid.points;
    traj.states.reserve(grid.points.size());
    if (log_scores) traj.scores.reserve(grid.points.size());

    Eigen::VectorXd x = x_T;
    for (size_t i = 0; i + 1 < grid.points.size(); ++i) {
        traj.states.push_back(x);
        const Eigen::VectorXd eps = model.eps(x, grid.points[i]);
        if (log_scores) traj.scores.push_back(eps);
        x = ddim_step(sched, x, eps, grid.points[i], grid.points[i + 1]);
    }
    traj.states.push_back(x);
    if (log_scores) traj.scores.push_back(model.eps(x, grid.points.back()));
    return traj;
}

Trajectory ddim_solve(const EpsModel& model, const NoiseSchedule& sched, const TimeGrid& grid,
                      const Eigen::VectorXd& x_T, double eta, std::mt19937_64* rng) {
    const SolverStep phi(SolverFamily::DdimEta, 1, eta);
    return solve_on_grid(model, sched, grid, phi, x_T, rng);
}

Trajectory solve_on_grid(const EpsModel& model, const NoiseSchedule& sched, const TimeGrid& grid,
                         const SolverStep& phi, const Eigen::VectorXd& x_T,
                         std::mt19937_64* rng) {
    const int stride = phi.order();
    if (grid.intervals() % stride != 0) {
        throw std::invalid_argument("solve_on_grid: grid intervals not divisible by solver order");
    }
    const int anchors = grid.intervals() / stride;
    Trajectory traj;
    Eigen::VectorXd x = x_T;
    for (int j = 0; j < anchors; ++j) {
        traj.times.push_back(grid.points[static_cast<size_t>(j) * stride]);
        traj.states.push_back(x);
        x = phi.step(model, x, grid.points[static_cast<size_t>(j) * stride],
                     grid.points[static_cast<size_t>(j + 1) * stride], nullptr, rng);
    }
    traj.times.push_back(grid.points.back());
    traj.states.push_back(x);
    return traj;
}

}  // namespace pfdiff
