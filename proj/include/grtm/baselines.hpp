#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "grtm/kmeans.hpp"
#include "grtm/linkpredict.hpp"
#include "grtm/model.hpp"

namespace grtm {

enum class ProfileKind { mean, histogram };

struct UserProfile {
    int user_id = 0;
    Vector vector;
    ProfileKind kind = ProfileKind::mean;
};

// Average feature vector of a user's images; a zero vector (with a warning on
// `warn`, when given) for a user without images.
UserProfile mean_profile(const Corpus& corpus, int u, std::ostream* warn = nullptr);

struct ImageClustering {
    std::vector<std::vector<int>> labels; // per user, per image
    Matrix centroids;                     // D x K_c
    std::vector<double> inertia;          // per Lloyd iteration
};

// k-means++ seeding followed by at most 100 Lloyd iterations over all images.
ImageClustering kmeans_cluster(const Corpus& corpus, int num_clusters, std::uint64_t seed);

// Per-cluster counts of the user's image labels.
UserProfile histogram_profile(const std::vector<std::vector<int>>& labels, int u, int num_clusters);

// dot(a, b) / (|a| |b|), or 0 when either vector is zero.
double cosine_similarity(const Vector& a, const Vector& b);

enum class BaselineMethod { mean, boft };

struct BaselineParams {
    int num_clusters = 100;   // BoFT only
    std::uint64_t seed = 0;   // BoFT only
};

/// Cosine similarity of user profiles for every unordered pair u < v, in
/// lexicographic pair order.
std::vector<PairScore> baseline_scores(const Corpus& corpus, BaselineMethod method, const BaselineParams& params,
                                       std::ostream* warn = nullptr);

} // namespace grtm
