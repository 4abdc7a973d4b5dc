#pragma once

#include <cstdint>
#include <vector>

#include "pfdiff/driver.hpp"
#include "pfdiff/solvers.hpp"

namespace pfdiff {

struct MseDtRow {
    int dt = 0;
    double mse = 0.0;
};

/// Score-similarity curve: mean over chains and valid t of
/// ||eps(x_t, t) - eps(x_{t+dt}, t+dt)||^2 along full-resolution reference
/// trajectories with logged scores.
std::vector<MseDtRow> mse_vs_dt(const EpsModel& model, const NoiseSchedule& sched, int n_chains,
                                const std::vector<int>& dt_list, std::uint64_t seed,
                                int threads = 0);

struct SpringFutureRow {
    int t = 0;  // skip-iteration target time
    double mse_springboard = 0.0;
    double mse_future = 0.0;
};

/// Per skip iteration, the MSE against the reference trajectory of the
/// target state updated through the springboard state versus anchored at the
/// current state with the future score. Both candidates share the same
/// fresh score batch.
std::vector<SpringFutureRow> springboard_vs_future(const EpsModel& model,
                                                   const NoiseSchedule& sched,
                                                   const PfdiffConfig& config, GridKind kind,
                                                   int n_chains, std::uint64_t seed,
                                                   int threads = 0);

struct TruncationRow {
    int t = 0;
    double mean = 0.0;
    double stddev = 0.0;
};

/// Running squared deviation from the reference along shared grid points,
/// aggregated across paired chains. Throws if the grids share no points.
std::vector<TruncationRow> accumulated_truncation(const std::vector<Trajectory>& trajs,
                                                  const std::vector<Trajectory>& refs);

struct Prop1Row {
    int n = 0;
    double lhs = 0.0;
    double rhs = 0.0;
    bool ok = false;
};

/// Coefficient comparison for the higher-order terms of the local Taylor
/// error: |((t_cur-e)^n - (t_prev-e)^n)/n!| < |(t_cur-t_prev)^n/n!| for an
/// interior expansion point e, n = 2..n_max.
std::vector<Prop1Row> prop1_check(double t_prev, double t_cur, double expansion_point, int n_max);

/// Fraction of total variance of the centered states captured by the top
/// two principal components. Degenerate trajectories report 1 by convention.
double trajectory_planarity(const Trajectory& traj);

struct EtaSweepRow {
    int nfe = 0;
    double eta = 0.0;
    double pfdiff_mse = 0.0;
    double baseline_mse = 0.0;
};

/// Endpoint error of PFDiff-k_h and of the plain eta-solver baseline at
/// equal evaluation budget, against the deterministic reference.
std::vector<EtaSweepRow> eta_sweep(const EpsModel& model, const NoiseSchedule& sched,
                                   const std::vector<int>& nfe_list,
                                   const std::vector<double>& eta_list, int k, int h,
                                   GridKind kind, int n_chains, std::uint64_t seed,
                                   int threads = 0);

}  // namespace pfdiff
