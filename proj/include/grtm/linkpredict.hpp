#pragma once

#include <vector>

#include "grtm/model.hpp"

namespace grtm {

struct PairScore {
    int u = -1;
    int v = -1;
    double score = 0.0; // unnormalized link likelihood, drives ranking

    double probability() const noexcept { return score < 1.0 ? score : 1.0; }
};

struct Candidate {
    int user = 0;
    double score = 0.0;
};

// Mean responsibility of one user's images; uniform 1/K for a user without images.
Vector user_topic_mean(const Matrix& phi_u, int num_topics);
Vector user_topic_mean(const VariationalState& state, int u);
std::vector<Vector> user_topic_means(const VariationalState& state);

// Elementwise product of two users' topic usage.
Vector pair_pi(const Vector& usage_u, const Vector& usage_v);

// eta . (usage_u o usage_v) + nu, the log of the link score.
double link_log_score(const Vector& usage_u, const Vector& usage_v, const LinkModel& link);

// exp(eta . (usage_u o usage_v) + nu)
PairScore predict_link(const Vector& usage_u, const Vector& usage_v, const LinkModel& link);
PairScore predict_link(const FittedModel& model, int u, int v);

/// Every v != u whose pair with u is not in `exclude`, by descending score with
/// ties broken by ascending id, truncated to top_n.
std::vector<Candidate> rank_candidates(const FittedModel& model, int u, const LinkSet& exclude, int top_n);

} // namespace grtm
