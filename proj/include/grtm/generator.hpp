#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "grtm/model.hpp"

namespace grtm {

struct GenConfig {
    int num_users = 60;
    int images_min = 40;
    int images_max = 40;
    int num_topics = 5;
    int feature_dim = 8;
    double alpha = 1.0;
    double separation = 10.0;  // minimum pairwise distance of planted means, in units of sigma
    double sigma = 1.0;        // per-dimension standard deviation of every planted topic
    Vector eta_true;           // K entries
    double nu_true = -5.0;
    std::uint64_t seed = 0;

    // Throws ContractError when a field is out of range.
    void validate() const;
};

struct GroundTruth {
    Matrix theta;                       // N x K, rows on the simplex
    std::vector<std::vector<int>> z;    // per user, per image topic
    TopicParams topics;
    LinkModel link;
};

struct Sample {
    Corpus corpus;
    LinkSet links;
    GroundTruth truth;
};

/// Draws a corpus and link set from the generative process. With K <= D the
/// planted means sit on scaled coordinate axes at exactly `separation` sigma
/// from each other; otherwise they are drawn at random and rejected until every
/// pair is at least that far apart. Each unordered pair is linked with
/// probability min(1, exp(eta . (zbar_u o zbar_v) + nu)), zbar being the
/// empirical topic frequencies of the user's images (uniform when empty).
Sample sample_corpus(const GenConfig& cfg);

// Dirichlet draw via normalized Gamma variates, computed in log space so that
// small concentrations do not underflow.
Vector dirichlet_sample(const Vector& alpha, std::mt19937_64& rng);

} // namespace grtm
