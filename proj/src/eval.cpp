#include "grtm/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "grtm/errors.hpp"

namespace grtm {

SplitResult split_links(const LinkSet& links, double train_ratio, std::uint64_t seed)
{
    if (!(train_ratio > 0.0 && train_ratio < 1.0)) {
        throw ContractError("split_links: train ratio must lie in (0, 1)");
    }
    if (links.size() < 2) {
        throw ContractError("split_links: need at least two links, got " + std::to_string(links.size()));
    }
    std::vector<Edge> edges(links.begin(), links.end());
    std::mt19937_64 rng(seed);
    std::shuffle(edges.begin(), edges.end(), rng);
    const auto n_train = static_cast<std::size_t>(std::llround(train_ratio * static_cast<double>(edges.size())));

    SplitResult split;
    for (std::size_t i = 0; i < edges.size(); ++i) {
        auto& target = i < n_train ? split.train : split.test;
        target.insert(edges[i].first, edges[i].second);
    }
    return split;
}

std::vector<Edge> evaluation_universe(int num_users, const LinkSet& train)
{
    std::vector<Edge> universe;
    for (int u = 0; u < num_users; ++u) {
        for (int v = u + 1; v < num_users; ++v) {
            if (!train.contains(u, v)) {
                universe.emplace_back(u, v);
            }
        }
    }
    return universe;
}

namespace {

struct SweepStep {
    double threshold;
    double tp;
    double fp;
};

struct Sweep {
    std::vector<SweepStep> steps; // cumulative counts after each distinct score
    double positives = 0.0;
    double negatives = 0.0;
};

Sweep sweep(const std::vector<ScoredPair>& scores, const LinkSet& positives)
{
    std::vector<std::pair<double, bool>> ranked;
    ranked.reserve(scores.size());
    Sweep s;
    for (const auto& sp : scores) {
        if (std::isnan(sp.score)) {
            throw ContractError("score for pair (" + std::to_string(sp.pair.first) + ", " +
                                std::to_string(sp.pair.second) + ") is NaN");
        }
        const bool is_pos = positives.contains(sp.pair.first, sp.pair.second);
        ranked.emplace_back(sp.score, is_pos);
        (is_pos ? s.positives : s.negatives) += 1.0;
    }
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.first > b.first; });

    double tp = 0.0;
    double fp = 0.0;
    for (std::size_t i = 0; i < ranked.size();) {
        const double threshold = ranked[i].first;
        for (; i < ranked.size() && ranked[i].first == threshold; ++i) {
            (ranked[i].second ? tp : fp) += 1.0;
        }
        s.steps.push_back({threshold, tp, fp});
    }
    return s;
}

} // namespace

RocCurve roc_curve(const std::vector<ScoredPair>& scores, const LinkSet& positives)
{
    const Sweep s = sweep(scores, positives);
    if (s.positives == 0.0 || s.negatives == 0.0) {
        throw ContractError("roc_curve: need at least one positive and one negative (got " +
                            std::to_string(static_cast<long>(s.positives)) + " and " +
                            std::to_string(static_cast<long>(s.negatives)) + ")");
    }
    RocCurve curve;
    curve.points.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});
    for (const auto& step : s.steps) {
        const RocPoint& prev = curve.points.back();
        const RocPoint next {step.threshold, step.fp / s.negatives, step.tp / s.positives};
        curve.auc += (next.fpr - prev.fpr) * (next.tpr + prev.tpr) / 2.0;
        curve.points.push_back(next);
    }
    return curve;
}

PrCurve pr_curve(const std::vector<ScoredPair>& scores, const LinkSet& positives)
{
    const Sweep s = sweep(scores, positives);
    if (s.positives == 0.0) {
        throw ContractError("pr_curve: need at least one positive");
    }
    PrCurve curve;
    for (const auto& step : s.steps) {
        const PrPoint next {step.threshold, step.tp / s.positives, step.tp / (step.tp + step.fp)};
        if (curve.points.empty()) {
            curve.points.push_back({step.threshold, 0.0, next.precision});
        }
        const PrPoint& prev = curve.points.back();
        curve.auc += (next.recall - prev.recall) * (next.precision + prev.precision) / 2.0;
        curve.points.push_back(next);
    }
    return curve;
}

PrecisionLookup precision_at_recall(const std::vector<PrPoint>& points, double r)
{
    if (!(r >= 0.0 && r <= 1.0)) {
        throw ContractError("precision_at_recall: recall level must lie in [0, 1]");
    }
    if (points.empty()) {
        throw ContractError("precision_at_recall: empty curve");
    }
    constexpr double kRecallSlack = 1e-12;
    for (const auto& p : points) {
        if (p.recall >= r - kRecallSlack) {
            return {p.precision, false};
        }
    }
    return {points.back().precision, true};
}

EvalReport evaluate(const std::vector<ScoredPair>& scores, const SplitResult& split, int num_users)
{
    const std::vector<Edge> universe = evaluation_universe(num_users, split.train);
    std::map<Edge, double> by_pair;
    for (const auto& sp : scores) {
        by_pair[make_edge(sp.pair.first, sp.pair.second)] = sp.score;
    }
    std::vector<ScoredPair> restricted;
    restricted.reserve(universe.size());
    for (const auto& e : universe) {
        const auto it = by_pair.find(e);
        if (it == by_pair.end()) {
            throw ContractError("evaluate: no score for pair (" + std::to_string(e.first) + ", " +
                                std::to_string(e.second) + ")");
        }
        restricted.push_back({e, it->second});
    }

    EvalReport report;
    RocCurve roc = roc_curve(restricted, split.test);
    PrCurve pr = pr_curve(restricted, split.test);
    report.roc_points = std::move(roc.points);
    report.roc_auc = roc.auc;
    report.pr_points = std::move(pr.points);
    report.pr_auc = pr.auc;
    report.precision_at[0.1] = precision_at_recall(report.pr_points, 0.1).precision;
    return report;
}

} // namespace grtm
