#include "pfdiff/score.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace pfdiff {

ScoreModel::ScoreModel(GaussianMixture q0, const NoiseSchedule& schedule)
    : q0_(std::move(q0)), schedule_(&schedule) {
    q0_.validate();
    table_.reserve(schedule.steps());
    for (int t = 0; t < schedule.steps(); ++t) {
        table_.push_back(components_at(schedule.alpha(t), schedule.sigma(t)));
    }
}

std::vector<ScoreModel::ComponentAt> ScoreModel::components_at(double alpha, double sigma) const {
    const int d = q0_.dim();
    const Eigen::MatrixXd noise = sigma * sigma * Eigen::MatrixXd::Identity(d, d);
    std::vector<ComponentAt> comps;
    comps.reserve(q0_.components());
    for (int j = 0; j < q0_.components(); ++j) {
        ComponentAt c;
        c.mean = alpha * q0_.means[j];
        c.llt.compute(alpha * alpha * q0_.covariances[j] + noise);
        if (c.llt.info() != Eigen::Success) {
            throw std::runtime_error("marginal covariance factorization failed");
        }
        double log_det = 0.0;
        const auto& l = c.llt.matrixL();
        for (int i = 0; i < d; ++i) log_det += std::log(l(i, i));
        c.log_norm = -log_det - 0.5 * d * std::log(2.0 * std::numbers::pi);
        comps.push_back(std::move(c));
    }
    return comps;
}

GaussianMixture ScoreModel::marginal_at(double t) const {
    const double alpha = schedule_->alpha_at(t);
    const double sigma = schedule_->sigma_at(t);
    const int d = q0_.dim();
    GaussianMixture m;
    m.weights = q0_.weights;
    for (int j = 0; j < q0_.components(); ++j) {
        m.means.push_back(alpha * q0_.means[j]);
        m.covariances.push_back(alpha * alpha * q0_.covariances[j] +
                                sigma * sigma * Eigen::MatrixXd::Identity(d, d));
    }
    return m;
}

Eigen::VectorXd ScoreModel::score_with(const std::vector<ComponentAt>& comps,
                                       const Eigen::VectorXd& x) const {
    const size_t n = comps.size();
    double max_term = -std::numeric_limits<double>::infinity();
    std::vector<double> log_terms(n);
    std::vector<Eigen::VectorXd> grads(n);
    for (size_t j = 0; j < n; ++j) {
        const Eigen::VectorXd diff = x - comps[j].mean;
        const Eigen::VectorXd z = comps[j].llt.matrixL().solve(diff);
        log_terms[j] = std::log(q0_.weights[j]) + comps[j].log_norm - 0.5 * z.squaredNorm();
        grads[j] = -comps[j].llt.solve(diff);
        max_term = std::max(max_term, log_terms[j]);
    }
    double denom = 0.0;
    Eigen::VectorXd out = Eigen::VectorXd::Zero(x.size());
    for (size_t j = 0; j < n; ++j) {
        const double r = std::exp(log_terms[j] - max_term);
        denom += r;
        out += r * grads[j];
    }
    return out / denom;
}

Eigen::VectorXd ScoreModel::score_at(const Eigen::VectorXd& x, double t) const {
    if (!x.allFinite()) throw std::invalid_argument("score_at: non-finite state");
    const double rounded = std::round(t);
    if (std::abs(t - rounded) < 1e-12 && rounded >= 0.0 &&
        rounded < static_cast<double>(table_.size())) {
        return score_with(table_[static_cast<size_t>(rounded)], x);
    }
    return score_with(components_at(schedule_->alpha_at(t), schedule_->sigma_at(t)), x);
}

Eigen::VectorXd ScoreModel::eps_impl(const Eigen::VectorXd& x, double t) const {
    return -schedule_->sigma_at(t) * score_at(x, t);
}

}  // namespace pfdiff
