#include "grtm/kmeans.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "grtm/errors.hpp"

namespace grtm {

namespace {

Eigen::Index sample_weighted(const Vector& weights, double total, std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> unif(0.0, total);
    const double target = unif(rng);
    double acc = 0.0;
    for (Eigen::Index i = 0; i < weights.size(); ++i) {
        acc += weights[i];
        if (acc > target) {
            return i;
        }
    }
    // Rounding left target at the very end; take the last positive weight.
    for (Eigen::Index i = weights.size() - 1; i >= 0; --i) {
        if (weights[i] > 0.0) {
            return i;
        }
    }
    return weights.size() - 1;
}

Vector squared_distances(const Matrix& points, const Vector& centre)
{
    return (points.colwise() - centre).colwise().squaredNorm().transpose();
}

} // namespace

Matrix kmeans_pp_seed(const Matrix& points, int k, std::mt19937_64& rng)
{
    const auto n = points.cols();
    if (k < 1 || k > n) {
        throw ContractError("kmeans_pp_seed: need 1 <= k <= number of points (k=" + std::to_string(k) +
                            ", points=" + std::to_string(n) + ")");
    }
    Matrix centroids(points.rows(), k);
    std::uniform_int_distribution<Eigen::Index> first(0, n - 1);
    centroids.col(0) = points.col(first(rng));
    Vector closest = squared_distances(points, centroids.col(0));

    const int trials = 2 + static_cast<int>(std::log(static_cast<double>(k)));
    for (int c = 1; c < k; ++c) {
        const double potential = closest.sum();
        Eigen::Index best = -1;
        double best_potential = std::numeric_limits<double>::infinity();
        Vector best_closest;
        for (int t = 0; t < trials; ++t) {
            Eigen::Index candidate;
            if (potential > 0.0) {
                candidate = sample_weighted(closest, potential, rng);
            } else {
                candidate = first(rng);
            }
            Vector updated = closest.cwiseMin(squared_distances(points, points.col(candidate)));
            const double p = updated.sum();
            if (p < best_potential) {
                best_potential = p;
                best = candidate;
                best_closest = std::move(updated);
            }
        }
        centroids.col(c) = points.col(best);
        closest = std::move(best_closest);
    }
    return centroids;
}

std::vector<int> nearest_centroid(const Matrix& points, const Matrix& centroids)
{
    std::vector<int> labels(static_cast<std::size_t>(points.cols()));
    for (Eigen::Index i = 0; i < points.cols(); ++i) {
        Eigen::Index best = 0;
        (centroids.colwise() - points.col(i)).colwise().squaredNorm().minCoeff(&best);
        labels[i] = static_cast<int>(best);
    }
    return labels;
}

KMeansResult lloyd(const Matrix& points, Matrix centroids, int max_iters)
{
    KMeansResult result;
    const auto k = centroids.cols();
    std::vector<int> labels = nearest_centroid(points, centroids);
    for (int iter = 0; iter < max_iters; ++iter) {
        Matrix sums = Matrix::Zero(points.rows(), k);
        Vector counts = Vector::Zero(k);
        for (Eigen::Index i = 0; i < points.cols(); ++i) {
            sums.col(labels[i]) += points.col(i);
            counts[labels[i]] += 1.0;
        }
        for (Eigen::Index c = 0; c < k; ++c) {
            if (counts[c] > 0.0) {
                centroids.col(c) = sums.col(c) / counts[c];
            }
        }
        double inertia = 0.0;
        for (Eigen::Index i = 0; i < points.cols(); ++i) {
            inertia += (points.col(i) - centroids.col(labels[i])).squaredNorm();
        }
        result.inertia.push_back(inertia);
        result.iterations = iter + 1;

        std::vector<int> next = nearest_centroid(points, centroids);
        if (next == labels) {
            break;
        }
        labels = std::move(next);
    }
    result.labels = std::move(labels);
    result.centroids = std::move(centroids);
    return result;
}

} // namespace grtm
