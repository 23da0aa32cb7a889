#include "grtm/baselines.hpp"

#include <algorithm>
#include <ostream>
#include <random>
#include <string>

#include "grtm/errors.hpp"

namespace grtm {

namespace {
constexpr int kLloydIters = 100;
}

UserProfile mean_profile(const Corpus& corpus, int u, std::ostream* warn)
{
    const auto& user = corpus.users.at(u);
    UserProfile p;
    p.user_id = u;
    p.kind = ProfileKind::mean;
    p.vector = Vector::Zero(corpus.feature_dim);
    if (user.images.empty()) {
        if (warn) {
            *warn << "warning: user " << u << " has no images; using a zero mean profile\n";
        }
        return p;
    }
    for (const auto& x : user.images) {
        p.vector += x;
    }
    p.vector /= static_cast<double>(user.size());
    return p;
}

ImageClustering kmeans_cluster(const Corpus& corpus, int num_clusters, std::uint64_t seed)
{
    const Matrix points = corpus.stacked();
    if (num_clusters < 1 || num_clusters > points.cols()) {
        throw ContractError("kmeans_cluster: cluster count " + std::to_string(num_clusters) +
                            " must lie in [1, " + std::to_string(points.cols()) + "]");
    }
    std::mt19937_64 rng(seed);
    KMeansResult km = lloyd(points, kmeans_pp_seed(points, num_clusters, rng), kLloydIters);

    ImageClustering out;
    out.centroids = std::move(km.centroids);
    out.inertia = std::move(km.inertia);
    std::size_t flat = 0;
    for (const auto& user : corpus.users) {
        std::vector<int> labels(km.labels.begin() + static_cast<std::ptrdiff_t>(flat),
                                km.labels.begin() + static_cast<std::ptrdiff_t>(flat + user.images.size()));
        flat += user.images.size();
        out.labels.push_back(std::move(labels));
    }
    return out;
}

UserProfile histogram_profile(const std::vector<std::vector<int>>& labels, int u, int num_clusters)
{
    UserProfile p;
    p.user_id = u;
    p.kind = ProfileKind::histogram;
    p.vector = Vector::Zero(num_clusters);
    for (int label : labels.at(u)) {
        if (label < 0 || label >= num_clusters) {
            throw ContractError("histogram_profile: label " + std::to_string(label) + " outside [0, " +
                                std::to_string(num_clusters) + ")");
        }
        p.vector[label] += 1.0;
    }
    return p;
}

double cosine_similarity(const Vector& a, const Vector& b)
{
    if (a.size() != b.size()) {
        throw ContractError("cosine_similarity: length mismatch");
    }
    const double na = a.norm();
    const double nb = b.norm();
    if (na == 0.0 || nb == 0.0) {
        return 0.0;
    }
    return std::clamp(a.dot(b) / (na * nb), -1.0, 1.0);
}

std::vector<PairScore> baseline_scores(const Corpus& corpus, BaselineMethod method, const BaselineParams& params,
                                       std::ostream* warn)
{
    const int n = corpus.num_users();
    std::vector<UserProfile> profiles;
    profiles.reserve(static_cast<std::size_t>(n));
    if (method == BaselineMethod::mean) {
        for (int u = 0; u < n; ++u) {
            profiles.push_back(mean_profile(corpus, u, warn));
        }
    } else {
        const ImageClustering clusters = kmeans_cluster(corpus, params.num_clusters, params.seed);
        for (int u = 0; u < n; ++u) {
            profiles.push_back(histogram_profile(clusters.labels, u, params.num_clusters));
        }
    }

    std::vector<PairScore> scores;
    scores.reserve(static_cast<std::size_t>(n) * static_cast<std::size_t>(n > 0 ? n - 1 : 0) / 2);
    for (int u = 0; u < n; ++u) {
        for (int v = u + 1; v < n; ++v) {
            scores.push_back({u, v, cosine_similarity(profiles[u].vector, profiles[v].vector)});
        }
    }
    return scores;
}

} // namespace grtm
