#include "grtm/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "grtm/errors.hpp"

namespace grtm {

int Corpus::total_images() const noexcept
{
    int total = 0;
    for (const auto& user : users) {
        total += user.size();
    }
    return total;
}

Matrix Corpus::stacked() const
{
    Matrix x(feature_dim, total_images());
    Eigen::Index col = 0;
    for (const auto& user : users) {
        for (const auto& image : user.images) {
            x.col(col++) = image;
        }
    }
    return x;
}

Edge make_edge(int u, int v)
{
    return u < v ? Edge {u, v} : Edge {v, u};
}

LinkSet::LinkSet(std::initializer_list<Edge> edges)
{
    for (const auto& [u, v] : edges) {
        insert(u, v);
    }
}

bool LinkSet::insert(int u, int v)
{
    if (u == v) {
        throw ContractError("LinkSet: self-loop on user " + std::to_string(u));
    }
    if (u < 0 || v < 0) {
        throw ContractError("LinkSet: negative user id");
    }
    return edges_.insert(make_edge(u, v)).second;
}

bool LinkSet::contains(int u, int v) const
{
    return edges_.count(make_edge(u, v)) > 0;
}

std::vector<std::vector<int>> LinkSet::adjacency(int num_users) const
{
    std::vector<std::vector<int>> adj(static_cast<std::size_t>(num_users));
    for (const auto& [u, v] : edges_) {
        if (u >= num_users || v >= num_users) {
            throw ContractError("LinkSet::adjacency: edge (" + std::to_string(u) + ", " + std::to_string(v) +
                                ") outside [0, " + std::to_string(num_users) + ")");
        }
        adj[u].push_back(v);
        adj[v].push_back(u);
    }
    for (auto& list : adj) {
        std::sort(list.begin(), list.end());
    }
    return adj;
}

void Hyperparams::validate() const
{
    if (!(alpha > 0.0) || !std::isfinite(alpha)) {
        throw ContractError("alpha must be positive, got " + std::to_string(alpha));
    }
    if (num_topics < 1) {
        throw ContractError("number of topics must be at least 1, got " + std::to_string(num_topics));
    }
    if (!(rho >= 0.0) || !std::isfinite(rho)) {
        throw ContractError("rho must be nonnegative, got " + std::to_string(rho));
    }
    if (max_iters < 1) {
        throw ContractError("max_iters must be at least 1, got " + std::to_string(max_iters));
    }
    if (!(elbo_rel_tol >= 0.0) || !std::isfinite(elbo_rel_tol)) {
        throw ContractError("elbo_rel_tol must be finite and non-negative");
    }
}

std::vector<std::string> validate(const Corpus& corpus, const LinkSet& links)
{
    std::vector<std::string> violations;
    if (corpus.feature_dim <= 0) {
        violations.push_back("feature dimension must be positive");
    }
    if (corpus.users.empty()) {
        violations.push_back("corpus has no users");
    }
    for (std::size_t u = 0; u < corpus.users.size(); ++u) {
        const auto& user = corpus.users[u];
        if (user.user_id != static_cast<int>(u)) {
            std::ostringstream msg;
            msg << "user at position " << u << " has id " << user.user_id << "; ids must be dense";
            violations.push_back(msg.str());
        }
        for (std::size_t n = 0; n < user.images.size(); ++n) {
            const auto& x = user.images[n];
            if (x.size() != corpus.feature_dim) {
                std::ostringstream msg;
                msg << "user " << u << " image " << n << ": dimension " << x.size()
                    << " != " << corpus.feature_dim;
                violations.push_back(msg.str());
            } else if (!x.allFinite()) {
                std::ostringstream msg;
                msg << "user " << u << " image " << n << ": non-finite feature value";
                violations.push_back(msg.str());
            }
        }
    }
    const int n_users = corpus.num_users();
    for (const auto& [u, v] : links) {
        if (v >= n_users) {
            std::ostringstream msg;
            msg << "link (" << u << ", " << v << "): user id out of range [0, " << n_users << ")";
            violations.push_back(msg.str());
        }
    }
    return violations;
}

} // namespace grtm
