#include "pfdiff/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace pfdiff {

std::vector<MseDtRow> mse_vs_dt(const EpsModel& model, const NoiseSchedule& sched, int n_chains,
                                const std::vector<int>& dt_list, std::uint64_t seed, int threads) {
    if (n_chains < 1) throw std::invalid_argument("mse_vs_dt: need at least one chain");
    const int top = sched.steps() - 1;
    for (int dt : dt_list) {
        if (dt < 0 || dt > top) throw std::invalid_argument("mse_vs_dt: dt outside [0, T-1]");
    }

    // Dense reference trajectories visit every integer index, so the score
    // at time t lives at slot T-1-t.
    std::vector<std::vector<Eigen::VectorXd>> scores(n_chains);
    parallel_for(n_chains, threads, [&](int c) {
        auto rng = chain_rng(seed, static_cast<std::uint64_t>(c));
        const Eigen::VectorXd x_T = standard_normal(model.dim(), rng);
        scores[c] = reference_solve(model, sched, x_T, top, true).scores;
    });

    std::vector<MseDtRow> out;
    out.reserve(dt_list.size());
    for (int dt : dt_list) {
        double acc = 0.0;
        const int terms = sched.steps() - dt;
        for (int c = 0; c < n_chains; ++c) {
            for (int t = 0; t + dt <= top; ++t) {
                acc += (scores[c][static_cast<size_t>(top - t)] -
                        scores[c][static_cast<size_t>(top - t - dt)])
                           .squaredNorm();
            }
        }
        out.push_back({dt, acc / (static_cast<double>(n_chains) * terms)});
    }
    return out;
}

std::vector<SpringFutureRow> springboard_vs_future(const EpsModel& model,
                                                   const NoiseSchedule& sched,
                                                   const PfdiffConfig& config, GridKind kind,
                                                   int n_chains, std::uint64_t seed, int threads) {
    config.validate();
    const SolverStep phi(SolverFamily::DdimEta, 1, config.eta);
    const TimeGrid grid = TimeGrid::make(kind, config.grid_intervals(), sched.steps());

    struct ChainRows {
        std::vector<int> t;
        std::vector<double> spring;
        std::vector<double> future;
    };
    std::vector<ChainRows> per_chain(n_chains);

    parallel_for(n_chains, threads, [&](int c) {
        auto rng = chain_rng(seed, static_cast<std::uint64_t>(c));
        const Eigen::VectorXd x_T = standard_normal(model.dim(), rng);
        const Trajectory ref = reference_solve(model, sched, x_T, sched.steps() - 1);
        const int top = sched.steps() - 1;
        auto& rows = per_chain[c];
        const SkipObserver obs = [&](const SkipRecord& rec) {
            const Eigen::VectorXd& gt = ref.states[static_cast<size_t>(top - rec.t_target)];
            rows.t.push_back(rec.t_target);
            rows.spring.push_back((rec.x_via_springboard - gt).squaredNorm());
            rows.future.push_back((rec.x_via_future - gt).squaredNorm());
        };
        pfdiff_sample(config, phi, model, sched, grid, x_T, rng, obs);
    });

    std::vector<SpringFutureRow> out;
    if (per_chain.empty()) return out;
    const size_t iters = per_chain.front().t.size();
    out.resize(iters);
    for (size_t i = 0; i < iters; ++i) {
        out[i].t = per_chain.front().t[i];
        for (int c = 0; c < n_chains; ++c) {
            out[i].mse_springboard += per_chain[c].spring[i];
            out[i].mse_future += per_chain[c].future[i];
        }
        out[i].mse_springboard /= n_chains;
        out[i].mse_future /= n_chains;
    }
    return out;
}

std::vector<TruncationRow> accumulated_truncation(const std::vector<Trajectory>& trajs,
                                                  const std::vector<Trajectory>& refs) {
    if (trajs.empty() || trajs.size() != refs.size()) {
        throw std::invalid_argument("accumulated_truncation: chains must pair up");
    }

    // Shared times, taken from the first pair; alignment is by exact grid
    // point match.
    std::vector<int> shared;
    {
        const auto& rt = refs.front().times;
        for (int t : trajs.front().times) {
            if (std::find(rt.begin(), rt.end(), t) != rt.end()) shared.push_back(t);
        }
    }
    if (shared.empty()) {
        throw std::invalid_argument("accumulated_truncation: grids share no points");
    }

    std::vector<TruncationRow> out;
    out.reserve(shared.size());
    const int n = static_cast<int>(trajs.size());
    for (int t : shared) {
        double mean = 0.0;
        double m2 = 0.0;
        std::vector<double> vals(n);
        for (int c = 0; c < n; ++c) {
            const auto& traj = trajs[c];
            const auto& ref = refs[c];
            const auto it = std::find(traj.times.begin(), traj.times.end(), t);
            const auto ir = std::find(ref.times.begin(), ref.times.end(), t);
            if (it == traj.times.end() || ir == ref.times.end()) {
                throw std::invalid_argument("accumulated_truncation: chains disagree on grids");
            }
            vals[c] = (traj.states[it - traj.times.begin()] - ref.states[ir - ref.times.begin()])
                          .squaredNorm();
            mean += vals[c];
        }
        mean /= n;
        for (double v : vals) m2 += (v - mean) * (v - mean);
        out.push_back({t, mean, n > 1 ? std::sqrt(m2 / (n - 1)) : 0.0});
    }
    return out;
}

std::vector<Prop1Row> prop1_check(double t_prev, double t_cur, double expansion_point, int n_max) {
    if (!(t_prev < expansion_point && expansion_point < t_cur)) {
        throw std::domain_error("prop1_check: expansion point must lie strictly inside "
                                "(t_prev, t_cur)");
    }
    if (n_max < 2) throw std::invalid_argument("prop1_check: n_max must be >= 2");

    std::vector<Prop1Row> out;
    out.reserve(n_max - 1);
    double factorial = 1.0;
    for (int n = 2; n <= n_max; ++n) {
        factorial = 1.0;
        for (int i = 2; i <= n; ++i) factorial *= i;
        const double lhs =
            std::abs((std::pow(t_cur - expansion_point, n) - std::pow(t_prev - expansion_point, n)) /
                     factorial);
        const double rhs = std::abs(std::pow(t_cur - t_prev, n) / factorial);
        out.push_back({n, lhs, rhs, lhs < rhs});
    }
    return out;
}

double trajectory_planarity(const Trajectory& traj) {
    const int m = static_cast<int>(traj.states.size());
    if (m < 3) throw std::invalid_argument("trajectory_planarity: need at least 3 states");
    const int d = static_cast<int>(traj.states.front().size());
    if (d < 2) throw std::invalid_argument("trajectory_planarity: need dimension >= 2");

    Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
    for (const auto& s : traj.states) mean += s;
    mean /= m;

    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
    for (const auto& s : traj.states) {
        const Eigen::VectorXd c = s - mean;
        cov += c * c.transpose();
    }
    const double total = cov.trace();
    if (total <= 1e-300) return 1.0;  // all states equal

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
    const auto& ev = eig.eigenvalues();  // ascending
    return (ev[d - 1] + ev[d - 2]) / total;
}

std::vector<EtaSweepRow> eta_sweep(const EpsModel& model, const NoiseSchedule& sched,
                                   const std::vector<int>& nfe_list,
                                   const std::vector<double>& eta_list, int k, int h,
                                   GridKind kind, int n_chains, std::uint64_t seed, int threads) {
    for (double eta : eta_list) {
        if (eta < 0.0 || eta > 1.0) throw std::invalid_argument("eta_sweep: eta outside [0,1]");
    }

    std::vector<Eigen::VectorXd> starts(n_chains);
    std::vector<Eigen::VectorXd> refs(n_chains);
    parallel_for(n_chains, threads, [&](int c) {
        auto rng = chain_rng(seed, static_cast<std::uint64_t>(c));
        starts[c] = standard_normal(model.dim(), rng);
        refs[c] = reference_solve(model, sched, starts[c]).endpoint();
    });

    std::vector<EtaSweepRow> out;
    for (int nfe : nfe_list) {
        for (double eta : eta_list) {
            PfdiffConfig cfg;
            cfg.k = k;
            cfg.h = h;
            cfg.nfe = nfe;
            cfg.eta = eta;
            cfg.validate();
            const SolverStep phi(SolverFamily::DdimEta, 1, eta);
            const TimeGrid pf_grid = TimeGrid::make(kind, cfg.grid_intervals(), sched.steps());
            const TimeGrid base_grid = TimeGrid::make(kind, nfe, sched.steps());

            std::vector<double> pf_err(n_chains);
            std::vector<double> base_err(n_chains);
            parallel_for(n_chains, threads, [&](int c) {
                auto rng = chain_rng(seed, static_cast<std::uint64_t>(c));
                standard_normal(model.dim(), rng);
                const auto res = pfdiff_sample(cfg, phi, model, sched, pf_grid, starts[c], rng);
                pf_err[c] = (res.trajectory.endpoint() - refs[c]).squaredNorm();

                auto rng2 = chain_rng(seed ^ 0x5bd1e995u, static_cast<std::uint64_t>(c));
                const Trajectory base =
                    ddim_solve(model, sched, base_grid, starts[c], eta, &rng2);
                base_err[c] = (base.endpoint() - refs[c]).squaredNorm();
            });

            EtaSweepRow row;
            row.nfe = nfe;
            row.eta = eta;
            for (int c = 0; c < n_chains; ++c) {
                row.pfdiff_mse += pf_err[c];
                row.baseline_mse += base_err[c];
            }
            row.pfdiff_mse /= n_chains;
            row.baseline_mse /= n_chains;
            out.push_back(row);
        }
    }
    return out;
}

}  // namespace pfdiff
