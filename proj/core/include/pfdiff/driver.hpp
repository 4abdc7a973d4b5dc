#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pfdiff/solvers.hpp"

namespace pfdiff {

enum class PfdiffMode { Full, PastOnly, FutureOnly };

std::string to_string(PfdiffMode mode);
PfdiffMode pfdiff_mode_from_string(const std::string& s);

/// Strict: tag mismatches on buffer consumption are hard errors.
/// Warn: report on stderr and continue (release-style exploratory sweeps).
enum class BufferPolicy { Strict, Warn };

BufferPolicy default_buffer_policy();

struct StaleBufferError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// PFDiff-k_h driver configuration. nfe is the score-evaluation budget N
/// (point evaluations); for order p > 1 each batch evaluates p points, so
/// the driver performs nfe/p buffer fills. The grid the driver walks must
/// have exactly (k+1)N - kp intervals.
struct PfdiffConfig {
    int k = 2;
    int h = 1;
    int order = 1;
    int nfe = 10;
    PfdiffMode mode = PfdiffMode::Full;
    double eta = 0.0;
    BufferPolicy buffer_policy = default_buffer_policy();

    int grid_intervals() const { return (k + 1) * nfe - k * order; }
    void validate() const;
};

/// Springboard update: reuse the p past scores in q verbatim to move from
/// t_from down to t_to with zero model evaluations. The buffer must have
/// been computed over an interval ending at t_from.
Eigen::VectorXd springboard_step(const SolverStep& phi, const ScoreBuffer& q,
                                 const NoiseSchedule& sched, const Eigen::VectorXd& x,
                                 int t_from, int t_to,
                                 BufferPolicy policy = BufferPolicy::Strict,
                                 std::mt19937_64* rng = nullptr);

/// Foresight update: consume a buffer computed at the springboard and tagged
/// (t_springboard, t_to). For first-order phi the jump is anchored at the
/// current state (t_from = current time); for higher orders the composition
/// starts from the springboard itself (t_from = q.t_start).
Eigen::VectorXd future_update(const SolverStep& phi, const ScoreBuffer& q_future,
                              const NoiseSchedule& sched, const Eigen::VectorXd& x_anchor,
                              int t_from, int t_to,
                              BufferPolicy policy = BufferPolicy::Strict,
                              std::mt19937_64* rng = nullptr);

/// Per skip-iteration observation: both candidate updates of the target
/// state, computed from the same fresh buffer (no extra model calls).
struct SkipRecord {
    int t_current = 0;
    int t_springboard = 0;
    int t_target = 0;
    Eigen::VectorXd x_current;
    Eigen::VectorXd x_springboard;
    Eigen::VectorXd x_via_springboard;
    Eigen::VectorXd x_via_future;
};
using SkipObserver = std::function<void(const SkipRecord&)>;

struct SampleResult {
    Trajectory trajectory;
    std::uint64_t nfe_batches = 0;
    std::uint64_t nfe_points = 0;
};

/// Run one PFDiff chain along the grid. The grid must have exactly
/// config.grid_intervals() intervals; the driver consumes exactly
/// config.nfe point evaluations in every mode.
SampleResult pfdiff_sample(const PfdiffConfig& config, const SolverStep& phi,
                           const EpsModel& model, const NoiseSchedule& sched,
                           const TimeGrid& grid, const Eigen::VectorXd& x_T,
                           std::mt19937_64& rng, const SkipObserver& observer = nullptr);

struct SearchCandidate {
    int k = 1;
    int h = 1;
};

struct SearchResult {
    SearchCandidate chosen;
    // Mean endpoint MSE against the reference solve, one row per candidate.
    std::vector<std::pair<SearchCandidate, double>> table;
};

/// Truncation-error warmup: run every candidate over `warmup` seeded chains
/// and pick the (k,h) with the smallest mean endpoint MSE against the
/// 1000-NFE reference. Ties break toward smaller k, then smaller h.
SearchResult auto_search_kh(const std::vector<SearchCandidate>& candidates,
                            const EpsModel& model, const NoiseSchedule& sched, GridKind kind,
                            int nfe, int warmup, std::uint64_t seed, int threads = 0);

/// Deterministic per-chain stream: the same (seed, chain) pair yields the
/// same generator regardless of thread schedule.
std::mt19937_64 chain_rng(std::uint64_t seed, std::uint64_t chain);

Eigen::VectorXd standard_normal(int dim, std::mt19937_64& rng);

/// Deterministic parallel map: fn(i) for i in [0, n), results ordered by i.
void parallel_for(int n, int threads, const std::function<void(int)>& fn);

}  // namespace pfdiff
