#pragma once

#include <atomic>
#include <cmath>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "grtm/eval.hpp"
#include "grtm/inference.hpp"
#include "grtm/model.hpp"

namespace grtm::testing {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir()
    {
        static std::atomic<int> counter{0};
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() /
                ("grtm_test_" + std::to_string(rd()) + "_" + std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir()
    {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline Vector vec(std::initializer_list<double> v)
{
    Vector out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) {
        out[i++] = x;
    }
    return out;
}

inline Corpus make_corpus(const std::vector<std::vector<Vector>>& images)
{
    Corpus c;
    c.feature_dim = images.empty() || images[0].empty() ? 0 : static_cast<int>(images[0][0].size());
    for (std::size_t u = 0; u < images.size(); ++u) {
        c.users.push_back({static_cast<int>(u), images[u]});
    }
    return c;
}

inline Vector random_simplex(int k, std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> unif(0.05, 1.0);
    Vector p(k);
    for (int i = 0; i < k; ++i) {
        p[i] = unif(rng);
    }
    return p / p.sum();
}

/*
 * Fixed small instance: user 0 has two images, user 1 one image, D = 2,
 * K = 2, one training link between them. Numbers are arbitrary but chosen so
 * that no responsibility is close to 0 or 1.
 */
struct TinyInstance {
    Corpus corpus;
    VariationalState state;
    TopicParams topics;
    LinkModel link;
    LinkSet train;
    double alpha = 1.5;
    double rho = 1.0;
};

inline TinyInstance tiny_instance()
{
    TinyInstance t;
    t.corpus = make_corpus({{vec({0.2, -0.4}), vec({1.1, 0.9})}, {vec({0.7, 0.3})}});
    Matrix phi0(2, 2);
    phi0 << 0.7, 0.3, 0.25, 0.75;
    Matrix phi1(1, 2);
    phi1 << 0.4, 0.6;
    t.state.phi = {phi0, phi1};
    t.state.gamma = {vec({2.2, 2.3}), vec({1.9, 2.1})};
    t.topics.means = {vec({0.1, -0.2}), vec({1.0, 0.8})};
    t.topics.covariances = {Covariance::diagonal(vec({0.5, 0.8})), Covariance::diagonal(vec({1.2, 0.6}))};
    t.link.eta = vec({0.8, -0.3});
    t.link.nu = -1.2;
    t.train.insert(0, 1);
    return t;
}

} // namespace grtm::testing

namespace grtm::testing {

// Reference digamma for oracles: shift above 30, then six asymptotic terms.
inline double oracle_digamma(double x)
{
    double acc = 0.0;
    while (x < 30.0) {
        acc -= 1.0 / x;
        x += 1.0;
    }
    const double t = 1.0 / (x * x);
    return acc + std::log(x) - 0.5 / x -
           t * (1.0 / 12 - t * (1.0 / 120 - t * (1.0 / 252 - t * (1.0 / 240 - t * (1.0 / 132 - t * 691.0 / 32760)))));
}

// Diagonal Gaussian log density written out term by term.
inline double oracle_log_density(const Vector& x, const Vector& mean, const Vector& var)
{
    double s = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double r = x[i] - mean[i];
        s += -0.5 * std::log(2.0 * 3.14159265358979323846 * var[i]) - 0.5 * r * r / var[i];
    }
    return s;
}

} // namespace grtm::testing


namespace grtm::testing {

// Probability that a random positive outscores a random negative, ties counting one half.
inline double concordance(const std::vector<ScoredPair>& scores, const LinkSet& positives)
{
    double hits = 0.0, pairs = 0.0;
    for (const auto& p : scores) {
        if (!positives.contains(p.pair.first, p.pair.second)) {
            continue;
        }
        for (const auto& n : scores) {
            if (positives.contains(n.pair.first, n.pair.second)) {
                continue;
            }
            hits += p.score > n.score ? 1.0 : (p.score == n.score ? 0.5 : 0.0);
            pairs += 1.0;
        }
    }
    return hits / pairs;
}

// Random scored pairs over distinct user pairs; scores drawn from a small
// grid so that ties are common. At least one positive and one negative.
inline std::pair<std::vector<ScoredPair>, LinkSet> random_labelled_scores(int size, std::mt19937_64& rng)
{
    std::uniform_int_distribution<int> grid(0, 12);
    std::bernoulli_distribution label(0.35);
    std::vector<ScoredPair> scores;
    LinkSet positives;
    for (int i = 0; i < size; ++i) {
        const Edge e{i, i + 1000};
        scores.push_back({e, grid(rng) * 0.25 - 1.0});
        if (i == 0 || (i > 1 && label(rng))) {
            positives.insert(e.first, e.second);
        }
    }
    return {scores, positives};
}

// Responsibilities of user u on the tiny instance, written out for two topics
// and the single link between the two users.
inline Matrix oracle_phi(const TinyInstance& t, int u)
{
    const auto& images = t.corpus.users[u].images;
    const int v = 1 - u; // the single training link joins the two users
    const double nbr0 = t.state.phi[v].col(0).mean();
    const double nbr1 = t.state.phi[v].col(1).mean();
    const double n_u = static_cast<double>(images.size());
    const double psi_total = oracle_digamma(t.state.gamma[u][0] + t.state.gamma[u][1]);
    const double drive0 = oracle_digamma(t.state.gamma[u][0]) - psi_total + t.link.eta[0] * nbr0 / n_u;
    const double drive1 = oracle_digamma(t.state.gamma[u][1]) - psi_total + t.link.eta[1] * nbr1 / n_u;

    Matrix phi(images.size(), 2);
    for (std::size_t n = 0; n < images.size(); ++n) {
        const double a = oracle_log_density(images[n], t.topics.means[0], t.topics.covariances[0].variances()) + drive0;
        const double b = oracle_log_density(images[n], t.topics.means[1], t.topics.covariances[1].variances()) + drive1;
        phi(n, 0) = std::exp(a) / (std::exp(a) + std::exp(b));
        phi(n, 1) = std::exp(b) / (std::exp(a) + std::exp(b));
    }
    return phi;
}

// Topic means and diagonal variances by explicit summation over every image.
inline TopicParams oracle_topics(const TinyInstance& t)
{
    TopicParams out;
    for (int k = 0; k < 2; ++k) {
        double mass = 0.0;
        Vector sum = Vector::Zero(2);
        for (int u = 0; u < 2; ++u) {
            for (std::size_t n = 0; n < t.corpus.users[u].images.size(); ++n) {
                mass += t.state.phi[u](n, k);
                sum += t.state.phi[u](n, k) * t.corpus.users[u].images[n];
            }
        }
        const Vector mean = sum / mass;
        Vector var = Vector::Zero(2);
        for (int u = 0; u < 2; ++u) {
            for (std::size_t n = 0; n < t.corpus.users[u].images.size(); ++n) {
                const Vector r = t.corpus.users[u].images[n] - mean;
                var += t.state.phi[u](n, k) * r.cwiseAbs2();
            }
        }
        out.means.push_back(mean);
        out.covariances.push_back(Covariance::diagonal(var / mass));
    }
    return out;
}

// Link parameters for the single training link of the tiny instance.
inline LinkModel oracle_link(const TinyInstance& t, bool offset_inside)
{
    const Vector a = t.state.phi[0].colwise().mean().transpose();
    const Vector b = t.state.phi[1].colwise().mean().transpose();
    const double p0 = a[0] * b[0], p1 = a[1] * b[1];
    const double slack = 1.0 - p0 - p1;
    LinkModel lm;
    lm.nu = std::log(slack) - std::log(t.rho * 0.5 + slack);
    lm.eta.resize(2);
    if (offset_inside) {
        lm.eta << std::log(p0) - std::log(p0 + t.rho / 4 - lm.nu), std::log(p1) - std::log(p1 + t.rho / 4 - lm.nu);
    } else {
        lm.eta << std::log(p0) - std::log(p0 + t.rho / 4) - lm.nu, std::log(p1) - std::log(p1 + t.rho / 4) - lm.nu;
    }
    return lm;
}

} // namespace grtm::testing
