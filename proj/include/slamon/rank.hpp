#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <set>
#include <stdexcept>
#include <utility>
#include <vector>

#include "slamon/model.hpp"

namespace slamon {

struct RankParams {
    double discount = 0.95;
    double staleness_weight = 1.0;
    double proximity_weight = 1.0;
    std::size_t window = 20;
    double spread_penalty = 0.0;  // beta on the stddev of per-sample closeness

    void validate() const {
        if (!(discount > 0.0 && discount <= 1.0))
            throw std::invalid_argument("rank.discount must be in (0,1]");
        if (staleness_weight < 0.0 || proximity_weight < 0.0)
            throw std::invalid_argument("rank weights must be >= 0");
        if (staleness_weight == 0.0 && proximity_weight == 0.0)
            throw std::invalid_argument("rank weights must not both be zero");
        if (spread_penalty < 0.0)
            throw std::invalid_argument("rank.spread_penalty must be >= 0");
        if (window == 0)
            throw std::invalid_argument("rank.window must be >= 1");
    }
};

struct ScoredDestination {
    DestinationId destination = 0;
    double proximity_raw = 0.0;
    double staleness_raw = 0.0;
    double proximity_norm = 0.0;
    double staleness_norm = 0.0;
    double total = 0.0;
};

using ActivationSet = std::vector<DestinationId>;  // kept sorted ascending

// Closeness of one value to SLO violation, in [0,1]. A value at or past the
// threshold in the violating direction scores 1.
inline double closeness(double value, const Slo& slo) {
    const bool violating = slo.direction == SloDirection::ViolatedAbove
                               ? value >= slo.threshold
                               : value <= slo.threshold;
    if (violating) return 1.0;
    const double rel = std::abs(slo.threshold - value) / std::abs(slo.threshold);
    return 1.0 - std::clamp(rel, 0.0, 1.0);
}

// Discount-weighted mean closeness over the most recent <= window samples
// (any origin), optionally penalized by the weighted stddev of closeness.
// Samples are (round, value); empty input scores 0.
inline double proximity_score(const std::vector<std::pair<Round, double>>& samples,
                              const Slo& slo, Round current_round,
                              const RankParams& params) {
    if (samples.empty()) return 0.0;
    std::size_t begin = samples.size() > params.window ? samples.size() - params.window : 0;
    double wsum = 0.0, mean = 0.0;
    std::vector<std::pair<double, double>> cw;  // (closeness, weight)
    cw.reserve(samples.size() - begin);
    for (std::size_t i = begin; i < samples.size(); ++i) {
        const double age = static_cast<double>(current_round - samples[i].first);
        const double w = std::pow(params.discount, std::max(age, 0.0));
        const double c = closeness(samples[i].second, slo);
        cw.emplace_back(c, w);
        wsum += w;
        mean += w * c;
    }
    if (wsum <= 0.0) return 0.0;
    mean /= wsum;
    if (params.spread_penalty == 0.0) return mean;
    double var = 0.0;
    for (const auto& [c, w] : cw) var += w * (c - mean) * (c - mean);
    var /= wsum;
    return mean - params.spread_penalty * std::sqrt(var);
}

// Rounds since the last local measurement; +inf for never-measured
// destinations so they normalize to 1.
inline double staleness_score(std::optional<Round> last_measured, Round current_round) {
    if (!last_measured) return std::numeric_limits<double>::infinity();
    return static_cast<double>(current_round - *last_measured);
}

// Min-max normalization of one score component. Infinite sentinels map to 1
// and are excluded from the finite min/max; a degenerate finite range maps
// every finite value to 0.5.
inline std::vector<double> normalize(const std::vector<double>& raw) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (double v : raw) {
        if (!std::isfinite(v)) continue;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    std::vector<double> out(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        if (!std::isfinite(raw[i])) {
            out[i] = 1.0;
        } else if (hi == lo) {
            out[i] = 0.5;
        } else {
            out[i] = (raw[i] - lo) / (hi - lo);
        }
    }
    return out;
}

struct RankResult {
    std::vector<ScoredDestination> ranked;  // total descending, id ascending on ties
    ActivationSet activation;               // sorted ascending
};

// The four-phase destination rank: score production, normalization,
// prioritization, constraint satisfaction. `forced` destinations are
// producer-side obligations injected before the budget cut; they consume
// budget slots first.
inline RankResult destination_rank(
    const std::vector<DestinationId>& destinations,
    const std::function<std::vector<std::pair<Round, double>>(DestinationId)>& samples_for,
    const std::function<std::optional<Round>(DestinationId)>& last_measured_for,
    const Slo& slo, Round current_round, const RankParams& params,
    const SessionBudget& budget, const std::set<DestinationId>& forced = {}) {
    if (destinations.empty())
        throw std::invalid_argument("destination set must be non-empty");

    RankResult res;
    std::vector<double> prox_raw, stale_raw;
    std::vector<bool> has_evidence;
    prox_raw.reserve(destinations.size());
    stale_raw.reserve(destinations.size());
    for (DestinationId d : destinations) {
        const auto samples = samples_for(d);
        has_evidence.push_back(!samples.empty());
        prox_raw.push_back(proximity_score(samples, slo, current_round, params));
        stale_raw.push_back(staleness_score(last_measured_for(d), current_round));
    }
    // Destinations without any samples carry no proximity evidence; they sit
    // at the neutral midpoint instead of anchoring the min-max range, so a
    // freshly seen destination cannot inflate every measured one to 1.0.
    std::vector<double> prox_evidence;
    for (std::size_t i = 0; i < prox_raw.size(); ++i)
        if (has_evidence[i]) prox_evidence.push_back(prox_raw[i]);
    const auto evidence_norm = normalize(prox_evidence);
    std::vector<double> prox_norm(prox_raw.size(), 0.5);
    for (std::size_t i = 0, j = 0; i < prox_raw.size(); ++i)
        if (has_evidence[i]) prox_norm[i] = evidence_norm[j++];
    const auto stale_norm = normalize(stale_raw);

    res.ranked.reserve(destinations.size());
    for (std::size_t i = 0; i < destinations.size(); ++i) {
        ScoredDestination s;
        s.destination = destinations[i];
        s.proximity_raw = prox_raw[i];
        s.staleness_raw = stale_raw[i];
        s.proximity_norm = prox_norm[i];
        s.staleness_norm = stale_norm[i];
        s.total = params.proximity_weight * s.proximity_norm +
                  params.staleness_weight * s.staleness_norm;
        res.ranked.push_back(s);
    }
    // Total descending; exact ties go to the staler destination so that
    // never-measured ones cannot be starved by low-id incumbents, then to
    // ascending id for determinism.
    std::sort(res.ranked.begin(), res.ranked.end(),
              [](const ScoredDestination& a, const ScoredDestination& b) {
                  if (a.total != b.total) return a.total > b.total;
                  if (a.staleness_raw != b.staleness_raw)
                      return a.staleness_raw > b.staleness_raw;
                  return a.destination < b.destination;
              });

    for (DestinationId d : forced)
        if (res.activation.size() < budget.local_max) res.activation.push_back(d);
    for (const auto& s : res.ranked) {
        if (res.activation.size() >= budget.local_max) break;
        if (forced.count(s.destination)) continue;
        res.activation.push_back(s.destination);
    }
    std::sort(res.activation.begin(), res.activation.end());
    return res;
}

}  // namespace slamon
