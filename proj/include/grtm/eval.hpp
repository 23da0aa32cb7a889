#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "grtm/model.hpp"

namespace grtm {

struct SplitResult {
    LinkSet train;
    LinkSet test;
};

/// Uniform random partition with round(ratio * |links|) training edges.
SplitResult split_links(const LinkSet& links, double train_ratio, std::uint64_t seed);

/// Every unordered pair u < v over N users that is not a training link, in
/// lexicographic order.
std::vector<Edge> evaluation_universe(int num_users, const LinkSet& train);

struct ScoredPair {
    Edge pair;
    double score = 0.0;
};

struct RocPoint {
    double threshold; // +inf for the origin
    double fpr;
    double tpr;
};

struct PrPoint {
    double threshold;
    double recall;
    double precision;
};

struct RocCurve {
    std::vector<RocPoint> points;
    double auc = 0.0;
};

struct PrCurve {
    std::vector<PrPoint> points;
    double auc = 0.0;
};

// One point per distinct score, swept from the highest; tied pairs enter
// together. AUC by the trapezoidal rule. Needs at least one positive and one
// negative.
RocCurve roc_curve(const std::vector<ScoredPair>& scores, const LinkSet& positives);

// Same sweep as roc_curve. The curve starts at recall 0 with the precision of
// the first threshold; AUC by the trapezoidal rule over recall.
PrCurve pr_curve(const std::vector<ScoredPair>& scores, const LinkSet& positives);

struct PrecisionLookup {
    double precision = 0.0;
    bool beyond_max_recall = false; // r exceeded every achieved recall
};

// Precision at the smallest achieved recall >= r.
PrecisionLookup precision_at_recall(const std::vector<PrPoint>& points, double r);

struct EvalReport {
    std::vector<RocPoint> roc_points;
    std::vector<PrPoint> pr_points;
    double roc_auc = 0.0;
    double pr_auc = 0.0;
    std::map<double, double> precision_at; // recall level -> precision
};

/// Scores restricted to the evaluation universe of the split; the test links
/// are the positives and every other non-training pair a negative.
EvalReport evaluate(const std::vector<ScoredPair>& scores, const SplitResult& split, int num_users);

} // namespace grtm
