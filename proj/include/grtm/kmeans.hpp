#pragma once

#include <random>
#include <vector>

#include "grtm/mathkit.hpp"

namespace grtm {

struct KMeansResult {
    std::vector<int> labels;          // one per column of the input
    Matrix centroids;                 // D x k
    std::vector<double> inertia;      // after each Lloyd iteration
    int iterations = 0;
};

// Greedy k-means++ seeding: each new centre is the best of 2 + floor(ln k)
// D^2-weighted candidates. Points are the columns of `points`.
Matrix kmeans_pp_seed(const Matrix& points, int k, std::mt19937_64& rng);

// Index of the closest centroid for every point; ties go to the lower index.
std::vector<int> nearest_centroid(const Matrix& points, const Matrix& centroids);

// Lloyd iterations until the assignment stops changing or max_iters is hit.
// A cluster that loses all its points keeps its previous centroid.
KMeansResult lloyd(const Matrix& points, Matrix centroids, int max_iters);

} // namespace grtm
