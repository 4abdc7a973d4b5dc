#include "pfdiff/driver.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <stdexcept>
#include <thread>

namespace pfdiff {

std::string to_string(PfdiffMode mode) {
    switch (mode) {
        case PfdiffMode::Full: return "full";
        case PfdiffMode::PastOnly: return "past-only";
        case PfdiffMode::FutureOnly: return "future-only";
    }
    return "full";
}

PfdiffMode pfdiff_mode_from_string(const std::string& s) {
    if (s == "full") return PfdiffMode::Full;
    if (s == "past-only") return PfdiffMode::PastOnly;
    if (s == "future-only") return PfdiffMode::FutureOnly;
    throw std::invalid_argument("unknown pfdiff mode '" + s +
                                "' (expected full|past-only|future-only)");
}

BufferPolicy default_buffer_policy() {
#ifdef NDEBUG
    return BufferPolicy::Warn;
#else
    return BufferPolicy::Strict;
#endif
}

void PfdiffConfig::validate() const {
    if (k < 1 || k > 3) throw std::invalid_argument("pfdiff: k must be 1, 2 or 3");
    if (h < 1 || h > k) throw std::invalid_argument("pfdiff: require 1 <= h <= k");
    if (order < 1 || order > 3) throw std::invalid_argument("pfdiff: order must be 1, 2 or 3");
    if (nfe < 2 * order || nfe % order != 0) {
        throw std::invalid_argument("pfdiff: nfe must be a multiple of the order and >= 2*order");
    }
    if (eta < 0.0 || eta > 1.0) throw std::invalid_argument("pfdiff: eta outside [0,1]");
    if (mode == PfdiffMode::FutureOnly && order != 1) {
        throw std::invalid_argument("pfdiff: future-only mode is defined for first-order solvers");
    }
    if (grid_intervals() <= 0) throw std::invalid_argument("pfdiff: empty grid");
}

namespace {

void report_mismatch(BufferPolicy policy, const ScoreBuffer& q, int want_start, int want_end,
                     const char* what) {
    char msg[160];
    std::snprintf(msg, sizeof(msg),
                  "%s: buffer tagged (%d, %d) but the algorithm expects (%d, %d)", what, q.t_start,
                  q.t_end, want_start, want_end);
    if (policy == BufferPolicy::Strict) throw StaleBufferError(msg);
    std::fprintf(stderr, "warning: %s\n", msg);
}

}  // namespace

Eigen::VectorXd springboard_step(const SolverStep& phi, const ScoreBuffer& q,
                                 const NoiseSchedule& sched, const Eigen::VectorXd& x,
                                 int t_from, int t_to, BufferPolicy policy, std::mt19937_64* rng) {
    // Past scores: the buffer must have been computed over an interval that
    // ends at the current time.
    if (q.t_end != t_from || q.t_start <= q.t_end) {
        report_mismatch(policy, q, q.t_start, t_from, "springboard_step");
    }
    return phi.replay(q, sched, x, t_from, t_to, rng);
}

Eigen::VectorXd future_update(const SolverStep& phi, const ScoreBuffer& q_future,
                              const NoiseSchedule& sched, const Eigen::VectorXd& x_anchor,
                              int t_from, int t_to, BufferPolicy policy, std::mt19937_64* rng) {
    if (phi.order() == 1) {
        // Anticipatory: anchored at the current state, scores from the
        // springboard interval (t_springboard, t_to).
        if (q_future.t_end != t_to || !(q_future.t_start < t_from && q_future.t_start > t_to)) {
            report_mismatch(policy, q_future, t_from, t_to, "future_update");
        }
    } else {
        // Higher orders compose from the springboard using only past scores.
        if (q_future.t_start != t_from || q_future.t_end != t_to) {
            report_mismatch(policy, q_future, t_from, t_to, "future_update");
        }
    }
    return phi.replay(q_future, sched, x_anchor, t_from, t_to, rng);
}

namespace {

// The past-only composition at p = 1: the jump starts from the springboard
// itself, so the buffer anchor and the step anchor coincide.
Eigen::VectorXd compose_from_springboard(const SolverStep& phi, const ScoreBuffer& q,
                                         const NoiseSchedule& sched, const Eigen::VectorXd& x,
                                         int t_from, int t_to, BufferPolicy policy,
                                         std::mt19937_64* rng) {
    if (q.t_start != t_from || q.t_end != t_to) {
        report_mismatch(policy, q, t_from, t_to, "springboard composition");
    }
    return phi.replay(q, sched, x, t_from, t_to, rng);
}

// Anchor view of the grid: for order p the solver steps span p grid indices.
struct AnchorView {
    const TimeGrid* grid;
    int stride;
    int count;  // anchor intervals

    int operator()(int j) const { return grid->points[static_cast<size_t>(j) * stride]; }
};

SampleResult run_full_or_past(const PfdiffConfig& cfg, const SolverStep& phi,
                              const EpsModel& model, const NoiseSchedule& sched,
                              const AnchorView& at, const Eigen::VectorXd& x_T,
                              std::mt19937_64& rng, const SkipObserver& observer) {
    const int span = cfg.k + 1;
    const bool past_only = cfg.mode == PfdiffMode::PastOnly || phi.order() > 1;
    const SolverStep pure(phi.family(), phi.order(), 0.0);

    SampleResult res;
    res.trajectory.times.push_back(at(0));
    res.trajectory.states.push_back(x_T);

    // Init: fill the buffer over (t_0, t_1) and take one plain step.
    ScoreBuffer q;
    Eigen::VectorXd x = phi.step(model, x_T, at(0), at(1), &q, &rng);
    res.nfe_batches += 1;
    res.trajectory.times.push_back(at(1));
    res.trajectory.states.push_back(x);

    int j = 1;
    while (j + span <= at.count) {
        const int t_cur = at(j);
        const int t_spring = at(j + cfg.h);
        const int t_target = at(j + span);

        const Eigen::VectorXd x_spring =
            springboard_step(phi, q, sched, x, t_cur, t_spring, cfg.buffer_policy, &rng);

        Eigen::VectorXd x_next;
        Eigen::VectorXd via_spring;
        Eigen::VectorXd via_future;
        if (phi.order() == 1) {
            q.scores.assign(1, model.eps(x_spring, t_spring));
            q.t_start = t_spring;
            q.t_end = t_target;
            res.nfe_batches += 1;
            if (past_only) {
                via_spring = compose_from_springboard(phi, q, sched, x_spring, t_spring, t_target,
                                                      cfg.buffer_policy, &rng);
                x_next = via_spring;
                if (observer) via_future = pure.replay(q, sched, x, t_cur, t_target);
            } else {
                via_future =
                    future_update(phi, q, sched, x, t_cur, t_target, cfg.buffer_policy, &rng);
                x_next = via_future;
                if (observer) via_spring = pure.replay(q, sched, x_spring, t_spring, t_target);
            }
        } else {
            // One batch of p fresh scores at the springboard; composition
            // continues from the springboard (past scores only).
            x_next = phi.step(model, x_spring, t_spring, t_target, &q, &rng);
            res.nfe_batches += 1;
            via_spring = x_next;
            via_future = x_next;
        }

        if (observer) {
            observer(SkipRecord{t_cur, t_spring, t_target, x, x_spring, via_spring, via_future});
        }
        if (past_only && phi.order() == 1) {
            res.trajectory.times.push_back(t_spring);
            res.trajectory.states.push_back(x_spring);
        }
        x = x_next;
        res.trajectory.times.push_back(t_target);
        res.trajectory.states.push_back(x);
        j += span;
    }

    res.nfe_points = res.nfe_batches * static_cast<std::uint64_t>(phi.order());
    return res;
}

SampleResult run_future_only(const PfdiffConfig& cfg, const SolverStep& phi,
                             const EpsModel& model, const NoiseSchedule& sched,
                             const AnchorView& at, const Eigen::VectorXd& x_T,
                             std::mt19937_64& rng, const SkipObserver& observer) {
    // No stale reuse anywhere: every springboard is reached with a freshly
    // computed current score, so a skip iteration costs two evaluations and
    // covers 2(k+1) grid steps; an odd budget closes with one plain
    // (k+1)-span step. Exactly nfe evaluations on the prescribed grid.
    const int span = cfg.k + 1;
    const SolverStep pure(phi.family(), 1, 0.0);

    SampleResult res;
    res.trajectory.times.push_back(at(0));
    res.trajectory.states.push_back(x_T);

    ScoreBuffer q;
    Eigen::VectorXd x = phi.step(model, x_T, at(0), at(1), &q, &rng);
    int evals = 1;
    res.trajectory.times.push_back(at(1));
    res.trajectory.states.push_back(x);

    int j = 1;
    while (evals + 2 <= cfg.nfe && j + 2 * span <= at.count) {
        const int t_cur = at(j);
        const int t_look = at(j + 2 * cfg.h);
        const int t_target = at(j + 2 * span);

        ScoreBuffer q_cur;
        q_cur.scores.assign(1, model.eps(x, t_cur));
        q_cur.t_start = t_cur;
        q_cur.t_end = t_look;
        const Eigen::VectorXd x_look = phi.replay(q_cur, sched, x, t_cur, t_look, &rng);

        ScoreBuffer q_future;
        q_future.scores.assign(1, model.eps(x_look, t_look));
        q_future.t_start = t_look;
        q_future.t_end = t_target;
        const Eigen::VectorXd x_next =
            future_update(phi, q_future, sched, x, t_cur, t_target, cfg.buffer_policy, &rng);

        if (observer) {
            const Eigen::VectorXd via_look = pure.replay(q_future, sched, x_look, t_look, t_target);
            observer(SkipRecord{t_cur, t_look, t_target, x, x_look, via_look, x_next});
        }
        x = x_next;
        evals += 2;
        j += 2 * span;
        res.trajectory.times.push_back(t_target);
        res.trajectory.states.push_back(x);
    }
    if (j < at.count) {
        const int t_cur = at(j);
        const int t_target = at(j + span);
        ScoreBuffer q_cur;
        q_cur.scores.assign(1, model.eps(x, t_cur));
        q_cur.t_start = t_cur;
        q_cur.t_end = t_target;
        x = phi.replay(q_cur, sched, x, t_cur, t_target, &rng);
        evals += 1;
        j += span;
        res.trajectory.times.push_back(t_target);
        res.trajectory.states.push_back(x);
    }
    if (j != at.count || evals != cfg.nfe) {
        throw std::logic_error("future-only driver lost budget/grid alignment");
    }
    res.nfe_batches = static_cast<std::uint64_t>(evals);
    res.nfe_points = res.nfe_batches;
    return res;
}

}  // namespace

SampleResult pfdiff_sample(const PfdiffConfig& config, const SolverStep& phi,
                           const EpsModel& model, const NoiseSchedule& sched,
                           const TimeGrid& grid, const Eigen::VectorXd& x_T, std::mt19937_64& rng,
                           const SkipObserver& observer) {
    config.validate();
    if (phi.order() != config.order) {
        throw std::invalid_argument("pfdiff: solver order differs from config order");
    }
    if (grid.intervals() != config.grid_intervals()) {
        throw std::invalid_argument("pfdiff: grid has " + std::to_string(grid.intervals()) +
                                    " intervals, config requires " +
                                    std::to_string(config.grid_intervals()));
    }

    const AnchorView at{&grid, config.order, grid.intervals() / config.order};
    if (config.mode == PfdiffMode::FutureOnly) {
        return run_future_only(config, phi, model, sched, at, x_T, rng, observer);
    }
    return run_full_or_past(config, phi, model, sched, at, x_T, rng, observer);
}

SearchResult auto_search_kh(const std::vector<SearchCandidate>& candidates,
                            const EpsModel& model, const NoiseSchedule& sched, GridKind kind,
                            int nfe, int warmup, std::uint64_t seed, int threads) {
    if (candidates.empty()) throw std::invalid_argument("auto_search_kh: no candidates");
    if (warmup < 16) throw std::invalid_argument("auto_search_kh: warmup must be >= 16");

    const SolverStep phi(SolverFamily::DdimEta, 1);
    const int dim = model.dim();

    // One reference endpoint per chain, shared across candidates.
    std::vector<Eigen::VectorXd> starts(warmup);
    std::vector<Eigen::VectorXd> refs(warmup);
    parallel_for(warmup, threads, [&](int c) {
        auto rng = chain_rng(seed, static_cast<std::uint64_t>(c));
        starts[c] = standard_normal(dim, rng);
        refs[c] = reference_solve(model, sched, starts[c]).endpoint();
    });

    SearchResult out;
    out.table.reserve(candidates.size());
    for (const auto& cand : candidates) {
        PfdiffConfig cfg;
        cfg.k = cand.k;
        cfg.h = cand.h;
        cfg.nfe = nfe;
        cfg.validate();
        const TimeGrid grid = TimeGrid::make(kind, cfg.grid_intervals(), sched.steps());
        std::vector<double> errs(warmup);
        parallel_for(warmup, threads, [&](int c) {
            auto rng = chain_rng(seed, static_cast<std::uint64_t>(c));
            standard_normal(dim, rng);  // keep stream aligned with the reference pass
            const auto res = pfdiff_sample(cfg, phi, model, sched, grid, starts[c], rng);
            errs[c] = (res.trajectory.endpoint() - refs[c]).squaredNorm();
        });
        double mean = 0.0;
        for (double e : errs) mean += e;
        out.table.emplace_back(cand, mean / warmup);
    }

    size_t best = 0;
    for (size_t i = 1; i < out.table.size(); ++i) {
        const auto& [ci, ei] = out.table[i];
        const auto& [cb, eb] = out.table[best];
        if (ei < eb || (ei == eb && (ci.k < cb.k || (ci.k == cb.k && ci.h < cb.h)))) best = i;
    }
    out.chosen = out.table[best].first;
    return out;
}

std::mt19937_64 chain_rng(std::uint64_t seed, std::uint64_t chain) {
    // splitmix64 of the pair; decorrelates chains regardless of seed choice.
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (chain + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    z = z ^ (z >> 31);
    return std::mt19937_64(z);
}

Eigen::VectorXd standard_normal(int dim, std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::VectorXd z(dim);
    for (int i = 0; i < dim; ++i) z[i] = normal(rng);
    return z;
}

void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
    if (threads <= 0) threads = static_cast<int>(std::thread::hardware_concurrency());
    threads = std::max(1, std::min(threads, n));
    if (threads == 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(threads);
    std::atomic<int> next{0};
    for (int t = 0; t < threads; ++t) {
        pool.emplace_back([&]() {
            for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
        });
    }
    for (auto& th : pool) th.join();
}

}  // namespace pfdiff
