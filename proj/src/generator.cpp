#include "grtm/generator.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "grtm/errors.hpp"

namespace grtm {

void GenConfig::validate() const
{
    if (num_users < 1) {
        throw ContractError("generator: need at least one user");
    }
    if (images_min < 0 || images_max < images_min) {
        throw ContractError("generator: images per user range must satisfy 0 <= min <= max");
    }
    if (num_topics < 1 || feature_dim < 1) {
        throw ContractError("generator: topics and feature dimension must be positive");
    }
    if (!(alpha > 0.0)) {
        throw ContractError("generator: alpha must be positive");
    }
    if (!(separation > 0.0) || !(sigma > 0.0)) {
        throw ContractError("generator: separation and sigma must be positive");
    }
    if (eta_true.size() != num_topics) {
        throw ContractError("generator: eta has " + std::to_string(eta_true.size()) + " entries for " +
                            std::to_string(num_topics) + " topics");
    }
    if (!eta_true.allFinite() || !std::isfinite(nu_true)) {
        throw ContractError("generator: link parameters must be finite");
    }
}

Vector dirichlet_sample(const Vector& alpha, std::mt19937_64& rng)
{
    const auto k = alpha.size();
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    Vector log_g(k);
    for (Eigen::Index j = 0; j < k; ++j) {
        if (!(alpha[j] > 0.0)) {
            throw ContractError("dirichlet_sample: concentration must be positive");
        }
        // Gamma(a) = Gamma(a + 1) * U^(1/a)
        std::gamma_distribution<double> gamma(alpha[j] + 1.0, 1.0);
        double u = unif(rng);
        while (u <= 0.0) {
            u = unif(rng);
        }
        log_g[j] = std::log(gamma(rng)) + std::log(u) / alpha[j];
    }
    const double norm = log_sum_exp(log_g);
    Vector theta = (log_g.array() - norm).exp().matrix();
    theta /= theta.sum();
    return theta;
}

namespace {

std::vector<Vector> planted_means(const GenConfig& cfg, std::mt19937_64& rng)
{
    const double spacing = cfg.separation * cfg.sigma;
    std::vector<Vector> means;
    if (cfg.num_topics <= cfg.feature_dim) {
        for (int k = 0; k < cfg.num_topics; ++k) {
            means.push_back(Vector::Unit(cfg.feature_dim, k) * (spacing / std::sqrt(2.0)));
        }
        return means;
    }
    std::normal_distribution<double> normal(0.0, 1.0);
    double spread = spacing;
    int failures = 0;
    while (static_cast<int>(means.size()) < cfg.num_topics) {
        Vector candidate(cfg.feature_dim);
        for (auto& c : candidate) {
            c = spread * normal(rng);
        }
        const bool far_enough = std::all_of(means.begin(), means.end(), [&](const Vector& m) {
            return (m - candidate).norm() >= spacing;
        });
        if (far_enough) {
            means.push_back(std::move(candidate));
        } else if (++failures % 1000 == 0) {
            spread *= 1.5;
        }
    }
    return means;
}

} // namespace

Sample sample_corpus(const GenConfig& cfg)
{
    cfg.validate();
    std::mt19937_64 rng(cfg.seed);
    const int k = cfg.num_topics;
    const int d = cfg.feature_dim;

    Sample s;
    s.truth.topics.means = planted_means(cfg, rng);
    const Covariance planted_cov = Covariance::diagonal(Vector::Constant(d, cfg.sigma * cfg.sigma));
    s.truth.topics.covariances.assign(static_cast<std::size_t>(k), planted_cov);
    s.truth.link.eta = cfg.eta_true;
    s.truth.link.nu = cfg.nu_true;

    s.corpus.feature_dim = d;
    s.truth.theta.resize(cfg.num_users, k);
    std::uniform_int_distribution<int> count(cfg.images_min, cfg.images_max);
    std::normal_distribution<double> normal(0.0, 1.0);
    const Vector alpha = Vector::Constant(k, cfg.alpha);
    std::vector<Vector> zbar;

    for (int u = 0; u < cfg.num_users; ++u) {
        const Vector theta = dirichlet_sample(alpha, rng);
        s.truth.theta.row(u) = theta.transpose();
        std::discrete_distribution<int> topic(theta.data(), theta.data() + k);

        UserCollection user;
        user.user_id = u;
        std::vector<int> z;
        const int n_images = count(rng);
        Vector freq = Vector::Zero(k);
        for (int n = 0; n < n_images; ++n) {
            const int t = topic(rng);
            Vector x = s.truth.topics.means[t];
            for (auto& xi : x) {
                xi += cfg.sigma * normal(rng);
            }
            z.push_back(t);
            user.images.push_back(std::move(x));
            freq[t] += 1.0;
        }
        zbar.push_back(n_images > 0 ? Vector(freq / n_images) : Vector::Constant(k, 1.0 / k));
        s.truth.z.push_back(std::move(z));
        s.corpus.users.push_back(std::move(user));
    }

    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int u = 0; u < cfg.num_users; ++u) {
        for (int v = u + 1; v < cfg.num_users; ++v) {
            const double p = std::min(1.0, std::exp(cfg.eta_true.dot(zbar[u].cwiseProduct(zbar[v])) + cfg.nu_true));
            if (unif(rng) < p) {
                s.links.insert(u, v);
            }
        }
    }
    return s;
}

} // namespace grtm
