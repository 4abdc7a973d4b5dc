#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <random>

#include "pfdiff/driver.hpp"

using namespace pfdiff;

namespace {

const NoiseSchedule& default_schedule() {
    static const NoiseSchedule sched = NoiseSchedule::vp_linear(1000, 1e-4, 0.02);
    return sched;
}

/// eps(x, t) = c for every input; every buffer replacement is then exact and
/// the driver must reproduce the plain solver on the same grid.
class ConstantEpsModel : public EpsModel {
public:
    ConstantEpsModel(Eigen::VectorXd c, const NoiseSchedule& sched)
        : c_(std::move(c)), sched_(&sched) {}
    int dim() const override { return static_cast<int>(c_.size()); }
    const NoiseSchedule& schedule() const override { return *sched_; }

protected:
    Eigen::VectorXd eps_impl(const Eigen::VectorXd&, double) const override { return c_; }

private:
    Eigen::VectorXd c_;
    const NoiseSchedule* sched_;
};

PfdiffConfig make_config(int k, int h, int nfe, PfdiffMode mode = PfdiffMode::Full,
                         int order = 1) {
    PfdiffConfig cfg;
    cfg.k = k;
    cfg.h = h;
    cfg.nfe = nfe;
    cfg.mode = mode;
    cfg.order = order;
    cfg.buffer_policy = BufferPolicy::Strict;
    return cfg;
}

const std::vector<SearchCandidate> kAllCandidates = {{1, 1}, {2, 1}, {2, 2},
                                                     {3, 1}, {3, 2}, {3, 3}};

}  // namespace

TEST_CASE("nfe accounting: exactly N batches and the stated grid size at p=1") {
    const auto& sched = default_schedule();
    const ScoreModel model(mixture_preset("bimodal-2d"), sched);
    const SolverStep phi(SolverFamily::DdimEta, 1);

    for (const auto& cand : kAllCandidates) {
        for (int nfe : {4, 6, 10, 20}) {
            const auto cfg = make_config(cand.k, cand.h, nfe);
            const int m = cfg.grid_intervals();
            CHECK(m == (cand.k + 1) * nfe - cand.k);
            const TimeGrid grid = TimeGrid::make(GridKind::Uniform, m, sched.steps());
            CHECK(static_cast<int>(grid.points.size()) == (cand.k + 1) * nfe - cand.k + 1);

            model.reset_calls();
            auto rng = chain_rng(42, 0);
            const Eigen::VectorXd x_T = standard_normal(2, rng);
            const auto res = pfdiff_sample(cfg, phi, model, sched, grid, x_T, rng);
            CHECK(res.nfe_batches == static_cast<std::uint64_t>(nfe));
            CHECK(res.nfe_points == static_cast<std::uint64_t>(nfe));
            CHECK(model.call_count() == static_cast<std::uint64_t>(nfe));
            CHECK(res.trajectory.times.back() == 0);
            CHECK(res.trajectory.times.front() == sched.steps() - 1);
        }
    }
}

TEST_CASE("nfe accounting for higher orders: N points in N/p batches") {
    const auto& sched = default_schedule();
    const ScoreModel model(mixture_preset("bimodal-2d"), sched);
    for (int order : {2, 3}) {
        const SolverStep phi(SolverFamily::DpmSolver, order);
        const auto cfg = make_config(2, 1, 6 * order, PfdiffMode::Full, order);
        const TimeGrid grid =
            TimeGrid::make(GridKind::Uniform, cfg.grid_intervals(), sched.steps());
        model.reset_calls();
        auto rng = chain_rng(7, 0);
        const Eigen::VectorXd x_T = standard_normal(2, rng);
        const auto res = pfdiff_sample(cfg, phi, model, sched, grid, x_T, rng);
        CHECK(res.nfe_points == static_cast<std::uint64_t>(6 * order));
        CHECK(res.nfe_batches == 6);
        CHECK(model.call_count() == static_cast<std::uint64_t>(6 * order));
        CHECK(res.trajectory.times.back() == 0);
    }
}

TEST_CASE("every mode consumes exactly N evaluations across budgets") {
    const auto& sched = default_schedule();
    const ScoreModel model(mixture_preset("bimodal-2d"), sched);
    const SolverStep phi(SolverFamily::DdimEta, 1);
    for (auto mode : {PfdiffMode::Full, PfdiffMode::PastOnly, PfdiffMode::FutureOnly}) {
        for (int nfe = 2; nfe <= 20; ++nfe) {
            const auto cfg = make_config(2, 1, nfe, mode);
            const TimeGrid grid =
                TimeGrid::make(GridKind::Uniform, cfg.grid_intervals(), sched.steps());
            model.reset_calls();
            auto rng = chain_rng(1, nfe);
            const Eigen::VectorXd x_T = standard_normal(2, rng);
            const auto res = pfdiff_sample(cfg, phi, model, sched, grid, x_T, rng);
            CHECK(model.call_count() == static_cast<std::uint64_t>(nfe));
            CHECK(res.nfe_points == static_cast<std::uint64_t>(nfe));
            CHECK(res.trajectory.times.back() == 0);
        }
    }
}

TEST_CASE("constant scores make every mode and order exact against the baseline") {
    const auto& sched = default_schedule();
    const ConstantEpsModel model(Eigen::Vector2d(0.37, -0.81), sched);
    const Eigen::Vector2d x_T(1.1, -0.4);

    for (const auto& cand : kAllCandidates) {
        for (auto mode : {PfdiffMode::Full, PfdiffMode::PastOnly, PfdiffMode::FutureOnly}) {
            const auto cfg = make_config(cand.k, cand.h, 8, mode);
            const SolverStep phi(SolverFamily::DdimEta, 1);
            const TimeGrid grid =
                TimeGrid::make(GridKind::Quadratic, cfg.grid_intervals(), sched.steps());
            auto rng = chain_rng(3, 1);
            const auto res = pfdiff_sample(cfg, phi, model, sched, grid, x_T, rng);
            const Trajectory base = solve_on_grid(model, sched, grid, phi, x_T);
            CHECK((res.trajectory.endpoint() - base.endpoint()).lpNorm<Eigen::Infinity>() <
                  1e-12);
        }
    }
    for (int order : {2, 3}) {
        const auto cfg = make_config(2, 1, 4 * order, PfdiffMode::Full, order);
        const SolverStep phi(SolverFamily::DpmSolver, order);
        const TimeGrid grid =
            TimeGrid::make(GridKind::Uniform, cfg.grid_intervals(), sched.steps());
        auto rng = chain_rng(3, 2);
        const auto res = pfdiff_sample(cfg, phi, model, sched, grid, x_T, rng);
        const Trajectory base = solve_on_grid(model, sched, grid, phi, x_T);
        CHECK((res.trajectory.endpoint() - base.endpoint()).lpNorm<Eigen::Infinity>() < 1e-12);
    }
}

TEST_CASE("springboard and future update enforce buffer discipline") {
    const auto& sched = default_schedule();
    const SolverStep phi(SolverFamily::DdimEta, 1);
    const Eigen::Vector2d x(0.5, 0.5);
    ScoreBuffer q;
    q.scores.assign(1, Eigen::Vector2d(0.1, 0.1));
    q.t_start = 900;
    q.t_end = 850;

    // Springboard expects a buffer ending at the current time.
    CHECK_NOTHROW(springboard_step(phi, q, sched, x, 850, 800, BufferPolicy::Strict));
    CHECK_THROWS_AS(springboard_step(phi, q, sched, x, 840, 800, BufferPolicy::Strict),
                    StaleBufferError);
    CHECK_NOTHROW(springboard_step(phi, q, sched, x, 840, 800, BufferPolicy::Warn));

    // Future update expects a buffer tagged (springboard, target) strictly
    // inside the jump.
    ScoreBuffer qf;
    qf.scores.assign(1, Eigen::Vector2d(0.1, 0.1));
    qf.t_start = 820;
    qf.t_end = 800;
    CHECK_NOTHROW(future_update(phi, qf, sched, x, 850, 800, BufferPolicy::Strict));
    CHECK_THROWS_AS(future_update(phi, qf, sched, x, 810, 800, BufferPolicy::Strict),
                    StaleBufferError);
    CHECK_THROWS_AS(future_update(phi, qf, sched, x, 850, 790, BufferPolicy::Strict),
                    StaleBufferError);
}

TEST_CASE("grid-size law: mismatched grids are rejected") {
    const auto& sched = default_schedule();
    const ScoreModel model(mixture_preset("std-normal-2d"), sched);
    const SolverStep phi(SolverFamily::DdimEta, 1);
    const auto cfg = make_config(1, 1, 4);  // wants 7 intervals
    const TimeGrid wrong = TimeGrid::make(GridKind::Uniform, 8, sched.steps());
    auto rng = chain_rng(0, 0);
    const Eigen::VectorXd x_T = standard_normal(2, rng);
    CHECK_THROWS_AS(pfdiff_sample(cfg, phi, model, sched, wrong, x_T, rng),
                    std::invalid_argument);
}

TEST_CASE("config invariants are validated") {
    CHECK_THROWS_AS(make_config(4, 1, 8).validate(), std::invalid_argument);
    CHECK_THROWS_AS(make_config(2, 3, 8).validate(), std::invalid_argument);
    CHECK_THROWS_AS(make_config(2, 1, 3, PfdiffMode::Full, 2).validate(), std::invalid_argument);
    CHECK_THROWS_AS(make_config(2, 1, 8, PfdiffMode::FutureOnly, 2).validate(),
                    std::invalid_argument);
    auto bad_eta = make_config(1, 1, 8);
    bad_eta.eta = 1.5;
    CHECK_THROWS_AS(bad_eta.validate(), std::invalid_argument);
}

TEST_CASE("past-only equals the springboard composition applied at p=1") {
    const auto& sched = default_schedule();
    const ScoreModel model(mixture_preset("bimodal-2d"), sched);
    const SolverStep phi(SolverFamily::DdimEta, 1);
    const auto cfg = make_config(2, 1, 6, PfdiffMode::PastOnly);
    const TimeGrid grid = TimeGrid::make(GridKind::Uniform, cfg.grid_intervals(), sched.steps());

    auto rng = chain_rng(9, 4);
    const Eigen::VectorXd x_T = standard_normal(2, rng);
    const auto res = pfdiff_sample(cfg, phi, model, sched, grid, x_T, rng);

    // Hand trace: plain first step, then springboard + fresh step from the
    // springboard, repeated.
    auto at = [&](int j) { return grid.points[static_cast<size_t>(j)]; };
    ScoreBuffer q;
    q.scores.assign(1, model.eps(x_T, at(0)));
    q.t_start = at(0);
    q.t_end = at(1);
    Eigen::VectorXd x = ddim_step(sched, x_T, q.scores[0], at(0), at(1));
    int j = 1;
    while (j + cfg.k + 1 <= grid.intervals()) {
        const Eigen::VectorXd x_spring = ddim_step(sched, x, q.scores[0], at(j), at(j + cfg.h));
        q.scores.assign(1, model.eps(x_spring, at(j + cfg.h)));
        q.t_start = at(j + cfg.h);
        q.t_end = at(j + cfg.k + 1);
        x = ddim_step(sched, x_spring, q.scores[0], at(j + cfg.h), at(j + cfg.k + 1));
        j += cfg.k + 1;
    }
    CHECK((res.trajectory.endpoint() - x).lpNorm<Eigen::Infinity>() < 1e-13);
}

TEST_CASE("fixed seeds give bit-identical trajectories across repeats and threads") {
    const auto& sched = default_schedule();
    const ScoreModel model(mixture_preset("bimodal-2d"), sched);
    const SolverStep phi(SolverFamily::DdimEta, 1, 0.35);
    auto cfg = make_config(2, 1, 8);
    cfg.eta = 0.35;
    const TimeGrid grid = TimeGrid::make(GridKind::Uniform, cfg.grid_intervals(), sched.steps());

    auto run_chain = [&](int chain) {
        auto rng = chain_rng(77, static_cast<std::uint64_t>(chain));
        const Eigen::VectorXd x_T = standard_normal(2, rng);
        return pfdiff_sample(cfg, phi, model, sched, grid, x_T, rng).trajectory;
    };

    const int chains = 16;
    std::vector<Trajectory> serial(chains);
    for (int c = 0; c < chains; ++c) serial[c] = run_chain(c);

    std::vector<Trajectory> threaded(chains);
    parallel_for(chains, 8, [&](int c) { threaded[c] = run_chain(c); });

    for (int c = 0; c < chains; ++c) {
        REQUIRE(serial[c].states.size() == threaded[c].states.size());
        for (size_t i = 0; i < serial[c].states.size(); ++i) {
            CHECK((serial[c].states[i] - threaded[c].states[i]).norm() == 0.0);
        }
    }
}

TEST_CASE("pfdiff beats the plain baseline at equal budget on the bimodal testbed") {
    const auto& sched = default_schedule();
    const ScoreModel model(mixture_preset("bimodal-2d"), sched);
    const SolverStep phi(SolverFamily::DdimEta, 1);
    const int nfe = 10;
    const int chains = 200;

    const auto cfg = make_config(1, 1, nfe);
    const TimeGrid pf_grid = TimeGrid::make(GridKind::Uniform, cfg.grid_intervals(), sched.steps());
    const TimeGrid base_grid = TimeGrid::make(GridKind::Uniform, nfe, sched.steps());

    double pf_err = 0.0;
    double base_err = 0.0;
    for (int c = 0; c < chains; ++c) {
        auto rng = chain_rng(123, static_cast<std::uint64_t>(c));
        const Eigen::VectorXd x_T = standard_normal(2, rng);
        const Eigen::VectorXd ref = reference_solve(model, sched, x_T).endpoint();
        auto rng2 = rng;
        const auto pf = pfdiff_sample(cfg, phi, model, sched, pf_grid, x_T, rng2);
        pf_err += (pf.trajectory.endpoint() - ref).squaredNorm();
        base_err += (ddim_solve(model, sched, base_grid, x_T).endpoint() - ref).squaredNorm();
    }
    CHECK(pf_err / chains < base_err / chains);
}

TEST_CASE("auto search returns the single candidate and breaks ties toward small k,h") {
    const auto& sched = default_schedule();
    const ScoreModel model(mixture_preset("bimodal-2d"), sched);
    const auto single =
        auto_search_kh({{3, 2}}, model, sched, GridKind::Uniform, 6, 32, 5);
    CHECK(single.chosen.k == 3);
    CHECK(single.chosen.h == 2);

    const ConstantEpsModel constant(Eigen::Vector2d(0.2, 0.3), sched);
    const auto tie =
        auto_search_kh(kAllCandidates, constant, sched, GridKind::Uniform, 6, 32, 5);
    CHECK(tie.chosen.k == 1);
    CHECK(tie.chosen.h == 1);
    for (const auto& [cand, err] : tie.table) CHECK(err < 1e-20);

    CHECK_THROWS_AS(auto_search_kh({}, model, sched, GridKind::Uniform, 6, 32, 5),
                    std::invalid_argument);
    CHECK_THROWS_AS(auto_search_kh({{1, 1}}, model, sched, GridKind::Uniform, 6, 8, 5),
                    std::invalid_argument);
}

TEST_CASE("256-sample warmup matches the large-sample argmin on the bimodal testbed") {
    const auto& sched = default_schedule();
    const ScoreModel model(mixture_preset("bimodal-2d"), sched);
    const auto warm =
        auto_search_kh(kAllCandidates, model, sched, GridKind::Uniform, 6, 256, 11);
    const auto big =
        auto_search_kh(kAllCandidates, model, sched, GridKind::Uniform, 6, 2048, 11);
    CHECK(warm.chosen.k == big.chosen.k);
    CHECK(warm.chosen.h == big.chosen.h);
}
