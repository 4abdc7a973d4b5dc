#pragma once

#include <Eigen/Dense>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace pfdiff {

/// Finite Gaussian mixture: weights sum to 1, every covariance symmetric
/// positive-definite. Serves as the data distribution q0 and, pushed
/// forward through the schedule, as every marginal q_t.
struct GaussianMixture {
    std::vector<double> weights;
    std::vector<Eigen::VectorXd> means;
    std::vector<Eigen::MatrixXd> covariances;

    int dim() const { return means.empty() ? 0 : static_cast<int>(means.front().size()); }
    int components() const { return static_cast<int>(weights.size()); }

    /// Throws std::invalid_argument on inconsistent shapes, weights that do
    /// not sum to 1 within 1e-12, or a covariance whose Cholesky fails.
    void validate() const;

    double log_density(const Eigen::VectorXd& x) const;
    Eigen::VectorXd score(const Eigen::VectorXd& x) const;
    Eigen::VectorXd sample(std::mt19937_64& rng) const;

    /// First two moments of the mixture (exact).
    Eigen::VectorXd mean() const;
    Eigen::MatrixXd covariance() const;

    static GaussianMixture from_json(const nlohmann::json& doc);
    nlohmann::json to_json() const;
};

/// Named testbeds: "std-normal-2d", "bimodal-2d", "ring-8".
GaussianMixture mixture_preset(const std::string& name);
std::vector<std::string> mixture_preset_names();

}  // namespace pfdiff
