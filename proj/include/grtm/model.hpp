#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "grtm/mathkit.hpp"

namespace grtm {

struct UserCollection {
    int user_id = 0;
    std::vector<Vector> images; // x_{u,n}, each of length D; may be empty

    int size() const noexcept { return static_cast<int>(images.size()); }
};

// Feature vectors of every user's shared images, grouped by user.
struct Corpus {
    int feature_dim = 0;
    std::vector<UserCollection> users; // users[u].user_id == u

    int num_users() const noexcept { return static_cast<int>(users.size()); }
    int total_images() const noexcept;
    // All images as columns of a D x total matrix, user-major order.
    Matrix stacked() const;
};

// Unordered user pair, stored with first < second.
using Edge = std::pair<int, int>;

Edge make_edge(int u, int v);

/// Set of undirected links without self-loops; (u, v) and (v, u) are one edge.
class LinkSet {
public:
    using const_iterator = std::set<Edge>::const_iterator;

    LinkSet() = default;
    LinkSet(std::initializer_list<Edge> edges);

    // Returns false when the edge was already present. Throws ContractError on self-loops.
    bool insert(int u, int v);
    bool contains(int u, int v) const;
    std::size_t size() const noexcept { return edges_.size(); }
    bool empty() const noexcept { return edges_.empty(); }

    const_iterator begin() const noexcept { return edges_.begin(); }
    const_iterator end() const noexcept { return edges_.end(); }

    // Neighbour lists, ascending, for users [0, num_users).
    std::vector<std::vector<int>> adjacency(int num_users) const;

    bool operator==(const LinkSet&) const = default;

private:
    std::set<Edge> edges_;
};

struct Hyperparams {
    double alpha = 2.0;  // symmetric Dirichlet concentration
    int num_topics = 100;
    double rho = 1.0;    // pseudo-count weight for unobserved negatives
    CovKind cov_kind = CovKind::diagonal;
    int max_iters = 500;
    double elbo_rel_tol = 1e-5; // 0 runs all max_iters sweeps
    std::uint64_t seed = 0;

    // Throws ContractError when a field is out of range.
    void validate() const;

    bool operator==(const Hyperparams&) const = default;
};

struct TopicParams {
    std::vector<Vector> means;
    std::vector<Covariance> covariances;

    int num_topics() const noexcept { return static_cast<int>(means.size()); }
};

// Mean-field surrogates: phi[u] is N_u x K, gamma[u] has K entries.
struct VariationalState {
    std::vector<Matrix> phi;
    std::vector<Vector> gamma;

    int num_users() const noexcept { return static_cast<int>(gamma.size()); }
};

struct LinkModel {
    Vector eta;
    double nu = 0.0;
};

struct FittedModel {
    Hyperparams hyperparams;
    TopicParams topics;
    VariationalState state;        // state.phi is empty when loaded without full phi
    std::vector<Vector> usage;     // per-user mean responsibility
    LinkModel link;
    std::vector<double> elbo_trace;

    bool has_phi() const noexcept { return !state.phi.empty(); }
    int num_users() const noexcept { return static_cast<int>(usage.size()); }
    int num_topics() const noexcept { return hyperparams.num_topics; }
};

/// Reports dimension mismatches, non-finite features and out-of-range link
/// endpoints. An empty result means the inputs are consistent.
std::vector<std::string> validate(const Corpus& corpus, const LinkSet& links);

} // namespace grtm
