#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <stdexcept>
#include <utility>
#include <vector>

#include "slamon/model.hpp"

namespace slamon {

enum class CorrMethod { Pearson, Spearman };

struct OverlayParams {
    double min_correlation = 0.7;
    std::size_t max_peers = 4;
    std::size_t min_shared_samples = 5;
    CorrMethod method = CorrMethod::Pearson;
    Round topology_period = 10;

    void validate() const {
        if (!(min_correlation > 0.0 && min_correlation <= 1.0))
            throw std::invalid_argument("overlay.min_correlation must be in (0,1]");
        if (max_peers < 1)
            throw std::invalid_argument("overlay.max_peers must be >= 1");
        if (min_shared_samples < 3)
            throw std::invalid_argument("overlay.min_shared_samples must be >= 3");
        if (topology_period < 1)
            throw std::invalid_argument("overlay.topology_period must be >= 1");
    }
};

struct PeerLink {
    DeviceId peer = 0;
    double correlation = 0.0;
    std::size_t shared_destinations = 0;
    Round established_round = 0;
};

// Sample Pearson r. nullopt when either series is constant (no co-variation
// evidence, treated as not comparable).
inline std::optional<double> pearson(const std::vector<double>& xs,
                                     const std::vector<double>& ys) {
    if (xs.size() != ys.size() || xs.size() < 2)
        throw std::invalid_argument("pearson: series must have equal length >= 2");
    const double n = static_cast<double>(xs.size());
    const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
    const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double dx = xs[i] - mx, dy = ys[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) return std::nullopt;
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

// Average ranks, ties share the mean of their rank positions.
inline std::vector<double> average_ranks(const std::vector<double>& xs) {
    std::vector<std::size_t> idx(xs.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(),
              [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
    std::vector<double> ranks(xs.size());
    std::size_t i = 0;
    while (i < idx.size()) {
        std::size_t j = i;
        while (j + 1 < idx.size() && xs[idx[j + 1]] == xs[idx[i]]) ++j;
        const double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = r;
        i = j + 1;
    }
    return ranks;
}

inline std::optional<double> spearman(const std::vector<double>& xs,
                                      const std::vector<double>& ys) {
    if (xs.size() != ys.size() || xs.size() < 2)
        throw std::invalid_argument("spearman: series must have equal length >= 2");
    return pearson(average_ranks(xs), average_ranks(ys));
}

inline std::optional<double> correlate(CorrMethod m, const std::vector<double>& xs,
                                       const std::vector<double>& ys) {
    return m == CorrMethod::Pearson ? pearson(xs, ys) : spearman(xs, ys);
}

using RoundSeries = std::vector<std::pair<Round, double>>;  // ordered by round

// Pair two per-destination series by equal round; unmatched rounds dropped.
inline std::pair<std::vector<double>, std::vector<double>> align_series(
    const RoundSeries& local, const RoundSeries& remote) {
    std::pair<std::vector<double>, std::vector<double>> out;
    std::size_t i = 0, j = 0;
    while (i < local.size() && j < remote.size()) {
        if (local[i].first == remote[j].first) {
            out.first.push_back(local[i].second);
            out.second.push_back(remote[j].second);
            ++i;
            ++j;
        } else if (local[i].first < remote[j].first) {
            ++i;
        } else {
            ++j;
        }
    }
    return out;
}

struct CandidateScore {
    double score = 0.0;
    std::size_t shared_destinations = 0;
    std::size_t total_pairs = 0;
};

// Sample-count-weighted mean of per-destination correlations between the
// local device's series and one candidate's reported series. nullopt when no
// destination yields enough aligned pairs or every aligned series is constant.
inline std::optional<CandidateScore> evaluate_candidate(
    const std::map<DestinationId, RoundSeries>& local,
    const std::map<DestinationId, RoundSeries>& candidate,
    const OverlayParams& params) {
    CandidateScore out;
    double weighted = 0.0;
    for (const auto& [dest, remote_series] : candidate) {
        auto it = local.find(dest);
        if (it == local.end()) continue;
        auto [xs, ys] = align_series(it->second, remote_series);
        if (xs.size() < params.min_shared_samples) continue;
        auto r = correlate(params.method, xs, ys);
        if (!r) continue;
        weighted += static_cast<double>(xs.size()) * *r;
        out.total_pairs += xs.size();
        out.shared_destinations += 1;
    }
    if (out.shared_destinations == 0) return std::nullopt;
    out.score = weighted / static_cast<double>(out.total_pairs);
    return out;
}

// Threshold at min_correlation, sort descending (ties by ascending id),
// truncate to max_peers.
inline std::vector<PeerLink> select_peers(
    const std::map<DeviceId, CandidateScore>& scored, const OverlayParams& params,
    Round now) {
    std::vector<PeerLink> links;
    for (const auto& [id, cs] : scored) {
        if (cs.score < params.min_correlation) continue;
        links.push_back({id, cs.score, cs.shared_destinations, now});
    }
    std::sort(links.begin(), links.end(), [](const PeerLink& a, const PeerLink& b) {
        if (a.correlation != b.correlation) return a.correlation > b.correlation;
        return a.peer < b.peer;
    });
    if (links.size() > params.max_peers) links.resize(params.max_peers);
    return links;
}

}  // namespace slamon
