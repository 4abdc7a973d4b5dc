#include "pfdiff/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace pfdiff {

Eigen::VectorXd SampleSet::mean() const {
    if (points.empty()) throw std::invalid_argument("sample set is empty");
    Eigen::VectorXd m = Eigen::VectorXd::Zero(dim());
    for (const auto& p : points) m += p;
    return m / static_cast<double>(points.size());
}

Eigen::MatrixXd SampleSet::covariance() const {
    const Eigen::VectorXd m = mean();
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(dim(), dim());
    for (const auto& p : points) {
        const Eigen::VectorXd d = p - m;
        c += d * d.transpose();
    }
    const auto n = points.size();
    return c / static_cast<double>(n > 1 ? n - 1 : 1);
}

namespace {

Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m, const char* what) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m);
    if (eig.info() != Eigen::Success) throw std::invalid_argument(std::string(what) + ": eigendecomposition failed");
    Eigen::VectorXd ev = eig.eigenvalues();
    const double scale = std::max(1.0, std::abs(ev[ev.size() - 1]));
    for (int i = 0; i < ev.size(); ++i) {
        if (ev[i] < -1e-9 * scale) {
            throw std::invalid_argument(std::string(what) + ": covariance is not PSD");
        }
        ev[i] = std::sqrt(std::max(ev[i], 0.0));
    }
    return eig.eigenvectors() * ev.asDiagonal() * eig.eigenvectors().transpose();
}

}  // namespace

double gaussian_w2(const Eigen::VectorXd& mean1, const Eigen::MatrixXd& cov1,
                   const Eigen::VectorXd& mean2, const Eigen::MatrixXd& cov2) {
    if (mean1.size() != mean2.size() || cov1.rows() != cov2.rows()) {
        throw std::invalid_argument("gaussian_w2: dimension mismatch");
    }
    if (!cov1.isApprox(cov1.transpose(), 1e-9) || !cov2.isApprox(cov2.transpose(), 1e-9)) {
        throw std::invalid_argument("gaussian_w2: covariance not symmetric");
    }
    const Eigen::MatrixXd root2 = psd_sqrt(cov2, "gaussian_w2");
    const Eigen::MatrixXd cross = psd_sqrt(root2 * cov1 * root2, "gaussian_w2");
    const double sq =
        (mean1 - mean2).squaredNorm() + (cov1 + cov2 - 2.0 * cross).trace();
    return std::sqrt(std::max(sq, 0.0));
}

double sliced_wasserstein(const SampleSet& a, const SampleSet& b, int n_proj, std::uint64_t seed) {
    if (a.points.empty() || b.points.empty()) {
        throw std::invalid_argument("sliced_wasserstein: empty sample set");
    }
    if (a.dim() != b.dim()) throw std::invalid_argument("sliced_wasserstein: dimension mismatch");
    if (a.points.size() != b.points.size()) {
        throw std::invalid_argument("sliced_wasserstein: sorted-sample formula needs equal sizes");
    }
    if (n_proj < 1) throw std::invalid_argument("sliced_wasserstein: n_proj must be >= 1");

    const int d = a.dim();
    const size_t n = a.points.size();
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);

    std::vector<double> pa(n), pb(n);
    double acc = 0.0;
    for (int p = 0; p < n_proj; ++p) {
        Eigen::VectorXd dir(d);
        do {
            for (int i = 0; i < d; ++i) dir[i] = normal(rng);
        } while (dir.norm() < 1e-12);
        dir.normalize();

        for (size_t i = 0; i < n; ++i) {
            pa[i] = dir.dot(a.points[i]);
            pb[i] = dir.dot(b.points[i]);
        }
        std::sort(pa.begin(), pa.end());
        std::sort(pb.begin(), pb.end());
        double sq = 0.0;
        for (size_t i = 0; i < n; ++i) sq += (pa[i] - pb[i]) * (pa[i] - pb[i]);
        acc += std::sqrt(sq / static_cast<double>(n));
    }
    return acc / n_proj;
}

EndpointMse endpoint_mse(const SampleSet& traj_set, const SampleSet& ref_set) {
    if (traj_set.points.size() != ref_set.points.size() || traj_set.points.empty()) {
        throw std::invalid_argument("endpoint_mse: pairing mismatch");
    }
    const size_t n = traj_set.points.size();
    std::vector<double> sq(n);
    double mean = 0.0;
    for (size_t i = 0; i < n; ++i) {
        sq[i] = (traj_set.points[i] - ref_set.points[i]).squaredNorm();
        mean += sq[i];
    }
    mean /= static_cast<double>(n);
    double m2 = 0.0;
    for (double v : sq) m2 += (v - mean) * (v - mean);
    EndpointMse out;
    out.mean = mean;
    out.stddev = n > 1 ? std::sqrt(m2 / static_cast<double>(n - 1)) : 0.0;
    return out;
}

}  // namespace pfdiff
