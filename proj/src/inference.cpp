#include "grtm/inference.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <iostream>
#include <limits>
#include <optional>
#include <random>
#include <sstream>
#include <string>

#include "grtm/errors.hpp"
#include "grtm/kmeans.hpp"
#include "grtm/linkpredict.hpp"
#include "grtm/parallel.hpp"

namespace grtm {

namespace {

constexpr double kEmptyTopicMass = 1e-8;
constexpr int kInitLloydIters = 50;
constexpr int kInitRestarts = 10;

std::ostream& diag_stream(const FitConfig& cfg)
{
    return cfg.log ? *cfg.log : std::clog;
}

Vector global_mean(const Corpus& corpus)
{
    Vector sum = Vector::Zero(corpus.feature_dim);
    double count = 0.0;
    for (const auto& user : corpus.users) {
        for (const auto& x : user.images) {
            sum += x;
            count += 1.0;
        }
    }
    return count > 0.0 ? Vector(sum / count) : sum;
}

Covariance global_covariance(const Corpus& corpus, CovKind kind)
{
    const Vector mean = global_mean(corpus);
    const auto d = corpus.feature_dim;
    double count = 0.0;
    if (kind == CovKind::diagonal) {
        Vector var = Vector::Zero(d);
        for (const auto& user : corpus.users) {
            for (const auto& x : user.images) {
                var += (x - mean).cwiseAbs2();
                count += 1.0;
            }
        }
        return Covariance::diagonal(count > 0.0 ? Vector(var / count) : Vector::Ones(d));
    }
    Matrix cov = Matrix::Zero(d, d);
    for (const auto& user : corpus.users) {
        for (const auto& x : user.images) {
            const Vector r = x - mean;
            cov.noalias() += r * r.transpose();
            count += 1.0;
        }
    }
    if (count == 0.0) {
        return Covariance::identity(d, CovKind::full);
    }
    cov /= count;
    try {
        return Covariance::full(cov);
    } catch (const NumericError&) {
        return Covariance::full(cov + kVarianceFloor * Matrix::Identity(d, d));
    }
}

// 0.9 on the chosen topic, the remaining 0.1 spread evenly over the others.
Eigen::RowVectorXd softened_one_hot(int chosen, int k)
{
    if (k == 1) {
        return Eigen::RowVectorXd::Ones(1);
    }
    Eigen::RowVectorXd row = Eigen::RowVectorXd::Constant(k, 0.1 / (k - 1));
    row[chosen] = 0.9;
    return row;
}

VariationalState state_from_labels(const Corpus& corpus, const std::vector<int>& labels, int k, double alpha)
{
    VariationalState state;
    std::size_t flat = 0;
    for (const auto& user : corpus.users) {
        Matrix phi(user.size(), k);
        for (int n = 0; n < user.size(); ++n) {
            phi.row(n) = softened_one_hot(labels[flat++], k);
        }
        state.phi.push_back(std::move(phi));
    }
    for (int u = 0; u < corpus.num_users(); ++u) {
        state.gamma.push_back(Vector::Constant(k, alpha));
        state.gamma[u] = update_gamma(state, alpha, u);
    }
    return state;
}

InitResult init_random(const Corpus& corpus, const FitConfig& cfg, std::mt19937_64& rng)
{
    const auto& hp = cfg.hyperparams;
    std::uniform_int_distribution<int> pick(0, hp.num_topics - 1);
    std::vector<int> labels(static_cast<std::size_t>(corpus.total_images()));
    for (auto& l : labels) {
        l = pick(rng);
    }
    InitResult init;
    init.state = state_from_labels(corpus, labels, hp.num_topics, hp.alpha);
    init.topics = update_topics(corpus, init.state, hp.cov_kind);
    return init;
}

// log(1 - exp(x)) for x < 0.
double log1m_exp(double x)
{
    if (x >= 0.0) {
        return -std::numeric_limits<double>::infinity();
    }
    return x > -0.693147180559945 ? std::log(-std::expm1(x)) : std::log1p(-std::exp(x));
}

} // namespace

InitResult init_state(const Corpus& corpus, const FitConfig& cfg)
{
    const auto& hp = cfg.hyperparams;
    hp.validate();
    std::mt19937_64 rng(hp.seed);
    const int total = corpus.total_images();

    if (cfg.init_strategy == InitStrategy::random_assign) {
        return init_random(corpus, cfg, rng);
    }
    if (hp.num_topics > total) {
        diag_stream(cfg) << "warning: " << hp.num_topics << " topics exceed " << total
                         << " images; falling back to random assignment initialization\n";
        return init_random(corpus, cfg, rng);
    }

    const Matrix points = corpus.stacked();
    // Best of several seeded runs; a single k-means++ draw occasionally merges two clusters.
    KMeansResult km;
    for (int restart = 0; restart < kInitRestarts; ++restart) {
        KMeansResult run = lloyd(points, kmeans_pp_seed(points, hp.num_topics, rng), kInitLloydIters);
        if (restart == 0 || run.inertia.back() < km.inertia.back()) {
            km = std::move(run);
        }
    }

    InitResult init;
    const Covariance shared = global_covariance(corpus, hp.cov_kind);
    for (int k = 0; k < hp.num_topics; ++k) {
        init.topics.means.push_back(km.centroids.col(k));
        init.topics.covariances.push_back(shared);
    }
    init.state = state_from_labels(corpus, nearest_centroid(points, km.centroids), hp.num_topics, hp.alpha);
    return init;
}

Matrix update_phi(const UserCollection& user, const Vector& gamma_u, const TopicParams& topics,
                  const LinkModel& link, const std::vector<int>& neighbours, const std::vector<Vector>& usage)
{
    const int k = topics.num_topics();
    if (gamma_u.size() != k) {
        throw ContractError("update_phi: gamma has " + std::to_string(gamma_u.size()) + " entries for " +
                            std::to_string(k) + " topics");
    }
    const int n_images = user.size();
    if (n_images == 0) {
        return Matrix(0, k);
    }

    const double digamma_total = digamma(gamma_u.sum());
    Vector drive(k);
    for (int j = 0; j < k; ++j) {
        drive[j] = digamma(gamma_u[j]) - digamma_total;
    }
    if (!neighbours.empty()) {
        if (link.eta.size() != k) {
            throw ContractError("update_phi: eta has " + std::to_string(link.eta.size()) + " entries for " +
                                std::to_string(k) + " topics");
        }
        Vector neighbour_usage = Vector::Zero(k);
        for (int v : neighbours) {
            neighbour_usage += usage.at(v);
        }
        drive += link.eta.cwiseProduct(neighbour_usage) / static_cast<double>(n_images);
    }

    Matrix phi(n_images, k);
    Vector log_w(k);
    for (int n = 0; n < n_images; ++n) {
        for (int j = 0; j < k; ++j) {
            log_w[j] = gaussian_log_density(user.images[n], topics.means[j], topics.covariances[j]) + drive[j];
        }
        const double norm = log_sum_exp(log_w);
        phi.row(n) = (log_w.array() - norm).exp().matrix().transpose();
    }
    return phi;
}

Matrix update_phi(const Corpus& corpus, const VariationalState& state, const TopicParams& topics,
                  const LinkModel& link, const LinkSet& train_links, int u)
{
    const auto adjacency = train_links.adjacency(corpus.num_users());
    return update_phi(corpus.users.at(u), state.gamma.at(u), topics, link, adjacency[u], user_topic_means(state));
}

Vector update_gamma(const VariationalState& state, double alpha, int u)
{
    const Matrix& phi = state.phi.at(u);
    const auto k = state.gamma.at(u).size();
    Vector gamma = Vector::Constant(k, alpha);
    if (phi.rows() > 0) {
        gamma += phi.colwise().sum().transpose();
    }
    return gamma;
}

TopicParams update_topics(const Corpus& corpus, const VariationalState& state, CovKind cov_kind,
                          const TopicParams* previous)
{
    if (state.phi.empty()) {
        throw ContractError("update_topics: state has no responsibilities");
    }
    const auto k = state.gamma.front().size();
    const auto d = corpus.feature_dim;
    if (cov_kind == CovKind::full && d > kMaxFullCovarianceDim) {
        throw ContractError("full covariance needs feature dimension <= " + std::to_string(kMaxFullCovarianceDim) +
                            ", got " + std::to_string(d));
    }

    Vector mass = Vector::Zero(k);
    Matrix weighted_sum = Matrix::Zero(d, k);
    for (int u = 0; u < corpus.num_users(); ++u) {
        const auto& user = corpus.users[u];
        const Matrix& phi = state.phi[u];
        for (int n = 0; n < user.size(); ++n) {
            mass += phi.row(n).transpose();
            weighted_sum.noalias() += user.images[n] * phi.row(n);
        }
    }

    TopicParams topics;
    std::optional<Covariance> fallback;
    for (Eigen::Index j = 0; j < k; ++j) {
        if (mass[j] < kEmptyTopicMass) {
            if (!fallback) {
                fallback = global_covariance(corpus, cov_kind);
            }
            topics.means.push_back(previous && previous->num_topics() == k ? previous->means[j] : global_mean(corpus));
            topics.covariances.push_back(*fallback);
            continue;
        }
        const Vector mean = weighted_sum.col(j) / mass[j];
        if (cov_kind == CovKind::diagonal) {
            Vector var = Vector::Zero(d);
            for (int u = 0; u < corpus.num_users(); ++u) {
                const auto& user = corpus.users[u];
                for (int n = 0; n < user.size(); ++n) {
                    var += state.phi[u](n, j) * (user.images[n] - mean).cwiseAbs2();
                }
            }
            topics.covariances.push_back(Covariance::diagonal(var / mass[j]));
        } else {
            Matrix cov = Matrix::Zero(d, d);
            for (int u = 0; u < corpus.num_users(); ++u) {
                const auto& user = corpus.users[u];
                for (int n = 0; n < user.size(); ++n) {
                    const Vector r = user.images[n] - mean;
                    cov.noalias() += state.phi[u](n, j) * (r * r.transpose());
                }
            }
            cov /= mass[j];
            try {
                topics.covariances.push_back(Covariance::full(cov));
            } catch (const NumericError&) {
                try {
                    topics.covariances.push_back(Covariance::full(cov + kVarianceFloor * Matrix::Identity(d, d)));
                } catch (const NumericError& e) {
                    throw NumericError("topic " + std::to_string(j) + ": " + e.what());
                }
            }
        }
        topics.means.push_back(mean);
    }
    return topics;
}

LinkModel update_link_params(const std::vector<Vector>& usage, const LinkSet& train_links, double rho,
                             int num_topics, EtaOffset offset)
{
    if (train_links.empty()) {
        throw ContractError("update_link_params: at least one training link is required");
    }
    const double k = static_cast<double>(num_topics);
    const double m = static_cast<double>(train_links.size());
    Vector pair_sum = Vector::Zero(num_topics);
    for (const auto& [u, v] : train_links) {
        pair_sum += pair_pi(usage.at(u), usage.at(v));
    }
    const double slack = m - pair_sum.sum();
    // One topic: every link is fully explained, only eta + nu is identified, so nu is pinned at 0.
    if (num_topics == 1) {
        LinkModel link;
        link.nu = 0.0;
        link.eta = Vector::Constant(1, std::log(m) - std::log(m + rho));
        return link;
    }
    if (!(slack > 0.0)) {
        std::ostringstream msg;
        msg << std::setprecision(17) << "update_link_params: degenerate responsibilities, M - 1'P = " << slack
            << " (M = " << m << ")";
        throw NumericError(msg.str());
    }
    for (int j = 0; j < num_topics; ++j) {
        if (!(pair_sum[j] > 0.0)) {
            std::ostringstream msg;
            msg << "update_link_params: degenerate responsibilities, summed pair usage of topic " << j
                << " is " << pair_sum[j];
            throw NumericError(msg.str());
        }
    }

    LinkModel link;
    link.nu = std::log(slack) - std::log(rho * (1.0 - 1.0 / k) + slack);
    const double pseudo = rho / (k * k);
    link.eta.resize(num_topics);
    for (int j = 0; j < num_topics; ++j) {
        if (offset == EtaOffset::inside_log) {
            link.eta[j] = std::log(pair_sum[j]) - std::log(pair_sum[j] + pseudo - link.nu);
        } else {
            link.eta[j] = std::log(pair_sum[j]) - std::log(pair_sum[j] + pseudo) - link.nu;
        }
    }
    return link;
}

LinkModel update_link_params(const VariationalState& state, const LinkSet& train_links, double rho,
                             int num_topics, EtaOffset offset)
{
    return update_link_params(user_topic_means(state), train_links, rho, num_topics, offset);
}

ElboTerms elbo_terms(const Corpus& corpus, const VariationalState& state, const TopicParams& topics,
                     const LinkModel& link, double alpha, const LinkSet& train_links, double rho)
{
    ElboTerms t;
    const int k = topics.num_topics();
    const double kd = static_cast<double>(k);
    const double log_norm_prior = std::lgamma(kd * alpha) - kd * std::lgamma(alpha);

    for (int u = 0; u < corpus.num_users(); ++u) {
        const auto& user = corpus.users[u];
        const Matrix& phi = state.phi[u];
        const Vector& gamma = state.gamma[u];
        const double gamma_total = gamma.sum();
        const double digamma_total = digamma(gamma_total);
        Vector e_log_theta(k);
        for (int j = 0; j < k; ++j) {
            e_log_theta[j] = digamma(gamma[j]) - digamma_total;
        }

        for (int n = 0; n < user.size(); ++n) {
            for (int j = 0; j < k; ++j) {
                const double p = phi(n, j);
                if (p <= 0.0) {
                    continue;
                }
                t.likelihood += p * gaussian_log_density(user.images[n], topics.means[j], topics.covariances[j]);
                t.assignment += p * e_log_theta[j];
                t.z_entropy -= p * std::log(p);
            }
        }

        t.prior += log_norm_prior + (alpha - 1.0) * e_log_theta.sum();
        double log_norm_q = std::lgamma(gamma_total);
        double q_body = 0.0;
        for (int j = 0; j < k; ++j) {
            log_norm_q -= std::lgamma(gamma[j]);
            q_body += (gamma[j] - 1.0) * e_log_theta[j];
        }
        t.theta_entropy -= log_norm_q + q_body;
    }

    if (!train_links.empty()) {
        const auto usage = user_topic_means(state);
        for (const auto& [u, v] : train_links) {
            t.links += link_log_score(usage.at(u), usage.at(v), link);
        }
    }
    if (rho > 0.0) {
        double shared = 0.0;
        for (int j = 0; j < k; ++j) {
            shared += log1m_exp(link.eta[j] + link.nu);
        }
        t.links += rho / (kd * kd) * shared;
        if (k > 1) {
            t.links += rho * (1.0 - 1.0 / kd) * log1m_exp(link.nu);
        }
    }
    return t;
}

double elbo(const Corpus& corpus, const VariationalState& state, const TopicParams& topics,
            const LinkModel& link, double alpha, const LinkSet& train_links, double rho)
{
    return elbo_terms(corpus, state, topics, link, alpha, train_links, rho).total();
}

FittedModel fit(const Corpus& corpus, const LinkSet& train_links, const FitConfig& cfg)
{
    const auto& hp = cfg.hyperparams;
    hp.validate();
    if (const auto violations = validate(corpus, train_links); !violations.empty()) {
        std::string msg = "fit: invalid inputs:";
        for (const auto& v : violations) {
            msg += "\n  " + v;
        }
        throw ContractError(msg);
    }
    if (train_links.empty()) {
        throw ContractError("fit: at least one training link is required");
    }
    if (hp.cov_kind == CovKind::full && corpus.feature_dim > kMaxFullCovarianceDim) {
        throw ContractError("fit: full covariance needs feature dimension <= " +
                            std::to_string(kMaxFullCovarianceDim));
    }

    const int n_users = corpus.num_users();
    const int threads = cfg.threads > 0 ? cfg.threads : worker_count();
    const auto adjacency = train_links.adjacency(n_users);

    InitResult init = init_state(corpus, cfg);
    FittedModel model;
    model.hyperparams = hp;
    model.state = std::move(init.state);
    model.topics = std::move(init.topics);

    auto& state = model.state;
    auto& topics = model.topics;
    auto& link = model.link;
    try {
        link = update_link_params(state, train_links, hp.rho, hp.num_topics, cfg.eta_offset);
    } catch (const NumericError& e) {
        throw NumericError(std::string("initialization: ") + e.what());
    }
    model.elbo_trace.push_back(elbo(corpus, state, topics, link, hp.alpha, train_links, hp.rho));

    std::ostream& log = diag_stream(cfg);
    for (int iter = 1; iter <= hp.max_iters; ++iter) {
        double value = 0.0;
        try {
            const std::vector<Vector> snapshot = user_topic_means(state);
            parallel_for(n_users, threads, [&](int u) {
                state.phi[u] = update_phi(corpus.users[u], state.gamma[u], topics, link, adjacency[u], snapshot);
                state.gamma[u] = update_gamma(state, hp.alpha, u);
            });
            topics = update_topics(corpus, state, hp.cov_kind, &topics);
            link = update_link_params(state, train_links, hp.rho, hp.num_topics, cfg.eta_offset);
            value = elbo(corpus, state, topics, link, hp.alpha, train_links, hp.rho);
        } catch (const NumericError& e) {
            throw NumericError("iteration " + std::to_string(iter) + ": " + e.what());
        }
        if (!std::isfinite(value)) {
            throw NumericError("iteration " + std::to_string(iter) + ": bound is not finite");
        }

        const double previous = model.elbo_trace.back();
        model.elbo_trace.push_back(value);
        const double delta = value - previous;
        if (cfg.on_iteration) {
            cfg.on_iteration(IterationView {iter, state, topics, link, value});
        }
        if (cfg.log_every > 0 && iter % cfg.log_every == 0) {
            log << "iter " << iter << " elbo " << std::setprecision(12) << value << " delta " << delta << '\n';
        }
        if (hp.elbo_rel_tol > 0.0 && std::abs(delta) < hp.elbo_rel_tol * std::max(std::abs(previous), 1e-300)) {
            break;
        }
    }
    model.usage = user_topic_means(state);
    return model;
}

} // namespace grtm
