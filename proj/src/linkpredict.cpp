#include "grtm/linkpredict.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "grtm/errors.hpp"

namespace grtm {

Vector user_topic_mean(const Matrix& phi_u, int num_topics)
{
    if (phi_u.rows() == 0) {
        return Vector::Constant(num_topics, 1.0 / num_topics);
    }
    return phi_u.colwise().mean().transpose();
}

Vector user_topic_mean(const VariationalState& state, int u)
{
    const auto k = static_cast<int>(state.gamma.at(u).size());
    return user_topic_mean(state.phi.at(u), k);
}

std::vector<Vector> user_topic_means(const VariationalState& state)
{
    std::vector<Vector> usage;
    usage.reserve(state.phi.size());
    for (int u = 0; u < state.num_users(); ++u) {
        usage.push_back(user_topic_mean(state, u));
    }
    return usage;
}

Vector pair_pi(const Vector& usage_u, const Vector& usage_v)
{
    if (usage_u.size() != usage_v.size()) {
        throw ContractError("pair_pi: length mismatch (" + std::to_string(usage_u.size()) + " vs " +
                            std::to_string(usage_v.size()) + ")");
    }
    return usage_u.cwiseProduct(usage_v);
}

double link_log_score(const Vector& usage_u, const Vector& usage_v, const LinkModel& link)
{
    if (usage_u.size() != link.eta.size()) {
        throw ContractError("predict_link: usage has " + std::to_string(usage_u.size()) +
                            " topics but eta has " + std::to_string(link.eta.size()));
    }
    return link.eta.dot(pair_pi(usage_u, usage_v)) + link.nu;
}

PairScore predict_link(const Vector& usage_u, const Vector& usage_v, const LinkModel& link)
{
    PairScore s;
    s.score = std::exp(link_log_score(usage_u, usage_v, link));
    return s;
}

PairScore predict_link(const FittedModel& model, int u, int v)
{
    PairScore s = predict_link(model.usage.at(u), model.usage.at(v), model.link);
    s.u = u;
    s.v = v;
    return s;
}

std::vector<Candidate> rank_candidates(const FittedModel& model, int u, const LinkSet& exclude, int top_n)
{
    const int n = model.num_users();
    if (u < 0 || u >= n) {
        throw ContractError("rank_candidates: user " + std::to_string(u) + " outside [0, " +
                            std::to_string(n) + ")");
    }
    if (top_n <= 0) {
        return {};
    }
    // Ordered by the linear predictor; nu is shared by every pair, so the
    // order cannot depend on it even after exp rounding.
    struct Keyed {
        int user;
        double key;
    };
    std::vector<Keyed> keyed;
    for (int v = 0; v < n; ++v) {
        if (v == u || exclude.contains(u, v)) {
            continue;
        }
        keyed.push_back({v, model.link.eta.dot(pair_pi(model.usage[u], model.usage[v]))});
    }
    std::sort(keyed.begin(), keyed.end(), [](const Keyed& a, const Keyed& b) {
        if (a.key != b.key) {
            return a.key > b.key;
        }
        return a.user < b.user;
    });
    if (keyed.size() > static_cast<std::size_t>(top_n)) {
        keyed.resize(static_cast<std::size_t>(top_n));
    }
    std::vector<Candidate> out;
    out.reserve(keyed.size());
    for (const auto& k : keyed) {
        out.push_back({k.user, predict_link(model, u, k.user).score});
    }
    return out;
}

} // namespace grtm
