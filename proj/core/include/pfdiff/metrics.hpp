#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace pfdiff {

struct SampleSet {
    std::vector<Eigen::VectorXd> points;
    std::string provenance;  // manifest reference of the producing run

    int dim() const { return points.empty() ? 0 : static_cast<int>(points.front().size()); }

    Eigen::VectorXd mean() const;
    Eigen::MatrixXd covariance() const;
};

/// Closed-form Wasserstein-2 between Gaussians:
/// sqrt(||m1-m2||^2 + tr(C1 + C2 - 2 (C2^{1/2} C1 C2^{1/2})^{1/2})).
double gaussian_w2(const Eigen::VectorXd& mean1, const Eigen::MatrixXd& cov1,
                   const Eigen::VectorXd& mean2, const Eigen::MatrixXd& cov2);

/// Mean over seeded random unit directions of the exact 1D W2 between the
/// projected, sorted samples. Sets must be nonempty, equal in size and
/// dimension.
double sliced_wasserstein(const SampleSet& a, const SampleSet& b, int n_proj, std::uint64_t seed);

/// Per-chain squared endpoint distance statistics; sets are paired by index
/// (chain seed order).
struct EndpointMse {
    double mean = 0.0;
    double stddev = 0.0;
};
EndpointMse endpoint_mse(const SampleSet& traj_set, const SampleSet& ref_set);

}  // namespace pfdiff
