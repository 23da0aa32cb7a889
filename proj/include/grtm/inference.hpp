#pragma once

#include <functional>
#include <iosfwd>
#include <vector>

#include "grtm/model.hpp"

namespace grtm {

enum class InitStrategy { kmeans_pp, random_assign };

/**
 * Placement of the offset nu in the closed-form eta update.
 *
 * inside_log:  eta_k = log(P_k) - log(P_k + rho/K^2 - nu)
 * outside_log: eta_k = log(P_k) - log(P_k + rho/K^2) - nu
 *
 * where P is the summed pair usage over training links. The outside_log form
 * is the joint maximizer of the link part of the bound (see elbo_terms);
 * the inside_log form is kept for comparison.
 */
enum class EtaOffset { inside_log, outside_log };

struct IterationView {
    int iteration = 0;
    const VariationalState& state;
    const TopicParams& topics;
    const LinkModel& link;
    double elbo = 0.0;
};

struct FitConfig {
    Hyperparams hyperparams;
    InitStrategy init_strategy = InitStrategy::kmeans_pp;
    EtaOffset eta_offset = EtaOffset::outside_log;
    int log_every = 0;               // progress line every n iterations; 0 disables
    std::ostream* log = nullptr;     // diagnostic stream, std::clog when null
    int threads = 0;                 // 0: worker_count()
    std::function<void(const IterationView&)> on_iteration;
};

struct InitResult {
    VariationalState state;
    TopicParams topics;
};

/// Initial responsibilities and topics, deterministic given the seed.
///
/// kmeans_pp seeds the topic means with greedy k-means++ and refines them with
/// Lloyd iterations, keeping the lowest-inertia result of ten seeded runs; every topic starts from the global per-dimension variance
/// and each image gets 0.9 on its nearest mean with 0.1 spread over the rest.
/// random_assign draws a topic per image and estimates topics from it. When K
/// exceeds the number of images kmeans_pp falls back to random_assign.
InitResult init_state(const Corpus& corpus, const FitConfig& cfg);

// Responsibilities for user u given its Dirichlet parameters, the topics, and
// the mean usage of every user linked to u in training.
Matrix update_phi(const UserCollection& user, const Vector& gamma_u, const TopicParams& topics,
                  const LinkModel& link, const std::vector<int>& neighbours, const std::vector<Vector>& usage);
Matrix update_phi(const Corpus& corpus, const VariationalState& state, const TopicParams& topics,
                  const LinkModel& link, const LinkSet& train_links, int u);

Vector update_gamma(const VariationalState& state, double alpha, int u);

// Responsibility-weighted means and covariances. A topic whose total
// responsibility is below 1e-8 keeps its previous mean (global mean when there
// is no previous) and takes the global covariance.
TopicParams update_topics(const Corpus& corpus, const VariationalState& state, CovKind cov_kind,
                          const TopicParams* previous = nullptr);

// Closed-form link parameters from the training links. Throws ContractError
// without links and NumericError when the summed usage leaves the log domain.
// With a single topic the offset is fixed at 0 and eta = log(M / (M + rho)).
LinkModel update_link_params(const std::vector<Vector>& usage, const LinkSet& train_links, double rho,
                             int num_topics, EtaOffset offset = EtaOffset::outside_log);
LinkModel update_link_params(const VariationalState& state, const LinkSet& train_links, double rho,
                             int num_topics, EtaOffset offset = EtaOffset::outside_log);

struct ElboTerms {
    double likelihood = 0.0;      // E[log p(x | z, topics)]
    double assignment = 0.0;      // E[log p(z | theta)]
    double prior = 0.0;           // E[log p(theta | alpha)]
    double theta_entropy = 0.0;   // -E[log q(theta | gamma)]
    double z_entropy = 0.0;       // -E[log q(z | phi)]
    double links = 0.0;           // observed links plus rho pseudo-negatives

    double total() const noexcept
    {
        return likelihood + assignment + prior + theta_entropy + z_entropy + links;
    }
};

/**
 * Evidence lower bound, term by term.
 *
 * The link part is sum over training links of (eta . pi_uv + nu) plus rho
 * pseudo-negatives split as rho/K^2 pairs sharing topic k (pi = e_k) for each k
 * and rho(1 - 1/K) pairs sharing none (pi = 0):
 *
 *   rho/K^2 sum_k log(1 - exp(eta_k + nu)) + rho (1 - 1/K) log(1 - exp(nu)).
 */
ElboTerms elbo_terms(const Corpus& corpus, const VariationalState& state, const TopicParams& topics,
                     const LinkModel& link, double alpha, const LinkSet& train_links, double rho);
double elbo(const Corpus& corpus, const VariationalState& state, const TopicParams& topics,
            const LinkModel& link, double alpha, const LinkSet& train_links, double rho);

/// Coordinate ascent: each sweep updates phi then gamma for every user against
/// a snapshot of the previous usage, then topics, then link parameters, and
/// records the bound. Stops on relative bound change below elbo_rel_tol or
/// after max_iters sweeps; a zero tolerance always runs max_iters. elbo_trace[0] is the bound at initialization.
FittedModel fit(const Corpus& corpus, const LinkSet& train_links, const FitConfig& cfg);

} // namespace grtm
