#include "pfdiff/mixture.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace pfdiff {

namespace {

// log N(x | mu, chol(L)) given the lower Cholesky factor of the covariance.
double log_gaussian(const Eigen::VectorXd& x, const Eigen::VectorXd& mu,
                    const Eigen::LLT<Eigen::MatrixXd>& llt) {
    const Eigen::VectorXd d = x - mu;
    const Eigen::VectorXd z = llt.matrixL().solve(d);
    double log_det = 0.0;
    const auto& l = llt.matrixL();
    for (int i = 0; i < d.size(); ++i) log_det += std::log(l(i, i));
    const double dim = static_cast<double>(d.size());
    return -0.5 * z.squaredNorm() - log_det - 0.5 * dim * std::log(2.0 * std::numbers::pi);
}

}  // namespace

void GaussianMixture::validate() const {
    if (weights.empty() || weights.size() != means.size() || weights.size() != covariances.size()) {
        throw std::invalid_argument("mixture: weights/means/covariances sizes differ or empty");
    }
    const int d = dim();
    double total = 0.0;
    for (size_t j = 0; j < weights.size(); ++j) {
        if (!(weights[j] > 0.0)) throw std::invalid_argument("mixture: weights must be positive");
        total += weights[j];
        if (means[j].size() != d) throw std::invalid_argument("mixture: mean dimension mismatch");
        if (covariances[j].rows() != d || covariances[j].cols() != d) {
            throw std::invalid_argument("mixture: covariance shape mismatch");
        }
        if (!covariances[j].isApprox(covariances[j].transpose(), 1e-10)) {
            throw std::invalid_argument("mixture: covariance not symmetric");
        }
        Eigen::LLT<Eigen::MatrixXd> llt(covariances[j]);
        if (llt.info() != Eigen::Success) {
            throw std::invalid_argument("mixture: covariance not positive definite (component " +
                                        std::to_string(j) + ")");
        }
    }
    if (std::abs(total - 1.0) > 1e-12) {
        throw std::invalid_argument("mixture: weights sum to " + std::to_string(total) + ", not 1");
    }
}

double GaussianMixture::log_density(const Eigen::VectorXd& x) const {
    double max_term = -std::numeric_limits<double>::infinity();
    std::vector<double> terms(weights.size());
    for (size_t j = 0; j < weights.size(); ++j) {
        Eigen::LLT<Eigen::MatrixXd> llt(covariances[j]);
        terms[j] = std::log(weights[j]) + log_gaussian(x, means[j], llt);
        max_term = std::max(max_term, terms[j]);
    }
    double acc = 0.0;
    for (double t : terms) acc += std::exp(t - max_term);
    return max_term + std::log(acc);
}

Eigen::VectorXd GaussianMixture::score(const Eigen::VectorXd& x) const {
    // Responsibilities in log space with max subtraction; the gradient of
    // log density is the responsibility-weighted sum of -Sigma^{-1}(x - mu).
    const size_t n = weights.size();
    std::vector<double> log_terms(n);
    std::vector<Eigen::VectorXd> grads(n);
    double max_term = -std::numeric_limits<double>::infinity();
    for (size_t j = 0; j < n; ++j) {
        Eigen::LLT<Eigen::MatrixXd> llt(covariances[j]);
        log_terms[j] = std::log(weights[j]) + log_gaussian(x, means[j], llt);
        grads[j] = -llt.solve(x - means[j]);
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

Eigen::VectorXd GaussianMixture::sample(std::mt19937_64& rng) const {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    double u = unif(rng);
    size_t pick = weights.size() - 1;
    for (size_t j = 0; j < weights.size(); ++j) {
        if (u < weights[j]) {
            pick = j;
            break;
        }
        u -= weights[j];
    }
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::VectorXd z(dim());
    for (int i = 0; i < z.size(); ++i) z[i] = normal(rng);
    Eigen::LLT<Eigen::MatrixXd> llt(covariances[pick]);
    return means[pick] + llt.matrixL() * z;
}

Eigen::VectorXd GaussianMixture::mean() const {
    Eigen::VectorXd m = Eigen::VectorXd::Zero(dim());
    for (size_t j = 0; j < weights.size(); ++j) m += weights[j] * means[j];
    return m;
}

Eigen::MatrixXd GaussianMixture::covariance() const {
    const Eigen::VectorXd m = mean();
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(dim(), dim());
    for (size_t j = 0; j < weights.size(); ++j) {
        const Eigen::VectorXd d = means[j] - m;
        c += weights[j] * (covariances[j] + d * d.transpose());
    }
    return c;
}

GaussianMixture GaussianMixture::from_json(const nlohmann::json& doc) {
    for (const char* key : {"weights", "means", "covariances"}) {
        if (!doc.contains(key)) {
            throw std::invalid_argument(std::string("mixture json: missing field '") + key + "'");
        }
    }
    GaussianMixture m;
    m.weights = doc.at("weights").get<std::vector<double>>();
    for (const auto& mean : doc.at("means")) {
        const auto v = mean.get<std::vector<double>>();
        m.means.emplace_back(Eigen::Map<const Eigen::VectorXd>(v.data(), v.size()));
    }
    for (const auto& cov : doc.at("covariances")) {
        const auto rows = cov.get<std::vector<std::vector<double>>>();
        Eigen::MatrixXd c(rows.size(), rows.empty() ? 0 : rows.front().size());
        for (size_t r = 0; r < rows.size(); ++r) {
            for (size_t cidx = 0; cidx < rows[r].size(); ++cidx) c(r, cidx) = rows[r][cidx];
        }
        m.covariances.push_back(std::move(c));
    }
    m.validate();
    return m;
}

nlohmann::json GaussianMixture::to_json() const {
    nlohmann::json doc;
    doc["weights"] = weights;
    for (const auto& mu : means) {
        doc["means"].push_back(std::vector<double>(mu.data(), mu.data() + mu.size()));
    }
    for (const auto& c : covariances) {
        nlohmann::json rows = nlohmann::json::array();
        for (int r = 0; r < c.rows(); ++r) {
            rows.push_back(std::vector<double>(c.row(r).begin(), c.row(r).end()));
        }
        doc["covariances"].push_back(rows);
    }
    return doc;
}

GaussianMixture mixture_preset(const std::string& name) {
    GaussianMixture m;
    if (name == "std-normal-2d") {
        m.weights = {1.0};
        m.means = {Eigen::Vector2d(0.0, 0.0)};
        m.covariances = {Eigen::Matrix2d::Identity()};
    } else if (name == "bimodal-2d") {
        m.weights = {0.5, 0.5};
        m.means = {Eigen::Vector2d(2.0, 2.0), Eigen::Vector2d(-2.0, -2.0)};
        m.covariances = {0.25 * Eigen::Matrix2d::Identity(), 0.25 * Eigen::Matrix2d::Identity()};
    } else if (name == "ring-8") {
        const int n = 8;
        for (int j = 0; j < n; ++j) {
            const double angle = 2.0 * std::numbers::pi * j / n;
            m.weights.push_back(1.0 / n);
            m.means.push_back(Eigen::Vector2d(4.0 * std::cos(angle), 4.0 * std::sin(angle)));
            m.covariances.push_back(0.09 * Eigen::Matrix2d::Identity());
        }
    } else {
        throw std::invalid_argument("unknown mixture preset '" + name +
                                    "' (expected std-normal-2d|bimodal-2d|ring-8)");
    }
    m.validate();
    return m;
}

std::vector<std::string> mixture_preset_names() {
    return {"std-normal-2d", "bimodal-2d", "ring-8"};
}

}  // namespace pfdiff
