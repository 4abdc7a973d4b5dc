#pragma once

#include <atomic>
#include <cstdint>

#include <Eigen/Dense>

#include "pfdiff/mixture.hpp"
#include "pfdiff/schedule.hpp"

namespace pfdiff {

/// Noise-prediction model interface consumed by solvers and drivers.
/// Evaluations are counted per point through an atomic cell, so concurrent
/// batches count exactly.
class EpsModel {
public:
    virtual ~EpsModel() = default;

    virtual int dim() const = 0;
    virtual const NoiseSchedule& schedule() const = 0;

    Eigen::VectorXd eps(const Eigen::VectorXd& x, double t) const {
        calls_.fetch_add(1, std::memory_order_relaxed);
        return eps_impl(x, t);
    }

    std::uint64_t call_count() const { return calls_.load(std::memory_order_relaxed); }
    void reset_calls() const { calls_.store(0, std::memory_order_relaxed); }

protected:
    virtual Eigen::VectorXd eps_impl(const Eigen::VectorXd& x, double t) const = 0;

private:
    mutable std::atomic<std::uint64_t> calls_{0};
};

/// Closed-form score oracle for a Gaussian-mixture data distribution under a
/// VP schedule. The forward marginal at t is itself a mixture with component
/// j mapped to N(alpha_t mu_j, alpha_t^2 Sigma_j + sigma_t^2 I); score and
/// noise prediction follow from log-space responsibilities with max
/// subtraction, so far-tail states stay finite.
///
/// Model state is read-only after construction; concurrent evaluation is safe.
class ScoreModel : public EpsModel {
public:
    ScoreModel(GaussianMixture q0, const NoiseSchedule& schedule);

    const GaussianMixture& data_distribution() const { return q0_; }
    const NoiseSchedule& schedule() const override { return *schedule_; }
    int dim() const override { return q0_.dim(); }

    /// Exact forward marginal q_t. Integer t uses the tabulated schedule;
    /// fractional t (solver-internal nodes) interpolates in lambda.
    GaussianMixture marginal_at(double t) const;

    /// Gradient of log q_t at x. Does not touch the eps counter.
    Eigen::VectorXd score_at(const Eigen::VectorXd& x, double t) const;

protected:
    /// eps = -sigma_t * score.
    Eigen::VectorXd eps_impl(const Eigen::VectorXd& x, double t) const override;

private:
    struct ComponentAt {
        Eigen::VectorXd mean;
        Eigen::LLT<Eigen::MatrixXd> llt;
        double log_norm;  // -log det L - D/2 log(2 pi)
    };

    std::vector<ComponentAt> components_at(double alpha, double sigma) const;
    Eigen::VectorXd score_with(const std::vector<ComponentAt>& comps,
                               const Eigen::VectorXd& x) const;

    GaussianMixture q0_;
    const NoiseSchedule* schedule_;
    // Factorizations for every integer index, built once up front; the
    // sampling loops hit the same indices millions of times.
    std::vector<std::vector<ComponentAt>> table_;
};

}  // namespace pfdiff
