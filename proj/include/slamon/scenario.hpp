#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "slamon/correlation.hpp"
#include "slamon/model.hpp"
#include "slamon/rank.hpp"

namespace slamon {

enum class StrategyKind { RandomBaseline, Local, LocalRemote, Virtual };

inline const char* strategy_name(StrategyKind k) {
    switch (k) {
        case StrategyKind::RandomBaseline: return "random";
        case StrategyKind::Local: return "local";
        case StrategyKind::LocalRemote: return "local_remote";
        case StrategyKind::Virtual: return "virtual";
    }
    return "?";
}

inline StrategyKind strategy_from_name(const std::string& s) {
    if (s == "random") return StrategyKind::RandomBaseline;
    if (s == "local") return StrategyKind::Local;
    if (s == "local_remote") return StrategyKind::LocalRemote;
    if (s == "virtual") return StrategyKind::Virtual;
    throw std::invalid_argument("unknown strategy: " + s);
}

// Regime-switching violation process shared by every path in a group.
struct GroupProcess {
    double p_enter = 0.0;
    double p_exit = 0.0;
    double offset = 0.0;  // latency added while Violating, ms
    bool start_violating = false;
};

struct PathModel {
    double base_latency = 50.0;  // ms
    double noise_sd = 0.0;       // ms
    std::string group;
    double cross_noise = 0.0;    // per-round probability the pair's regime flips
};

struct ScenarioConfig {
    std::size_t devices = 0;
    Round rounds = 0;
    std::map<DeviceId, std::vector<DestinationId>> destinations;
    std::map<DeviceId, std::vector<DeviceId>> neighbors;
    Slo slo;
    SessionBudget budget;
    RankParams rank;
    OverlayParams overlay;
    std::map<std::string, GroupProcess> groups;
    std::map<std::pair<DeviceId, DestinationId>, PathModel> paths;
    PathModel default_path;  // applies to unlisted pairs; group "" means none
    double message_drop = 0.0;
    std::vector<StrategyKind> strategies;
    std::vector<std::uint64_t> seeds;

    const PathModel& path(DeviceId src, DestinationId dst) const {
        auto it = paths.find({src, dst});
        return it == paths.end() ? default_path : it->second;
    }

    const std::vector<DestinationId>& dests_of(DeviceId d) const {
        static const std::vector<DestinationId> kEmpty;
        auto it = destinations.find(d);
        return it == destinations.end() ? kEmpty : it->second;
    }

    const std::vector<DeviceId>& neighbors_of(DeviceId d) const {
        static const std::vector<DeviceId> kEmpty;
        auto it = neighbors.find(d);
        return it == neighbors.end() ? kEmpty : it->second;
    }

    void validate() const {
        if (devices == 0) throw std::invalid_argument("devices: must be >= 1");
        if (rounds < 1) throw std::invalid_argument("rounds: must be >= 1");
        slo.validate();
        budget.validate();
        rank.validate();
        overlay.validate();
        if (message_drop < 0.0 || message_drop >= 1.0)
            throw std::invalid_argument("message_drop: must be in [0,1)");
        for (const auto& [g, p] : groups) {
            if (p.p_enter < 0 || p.p_enter > 1 || p.p_exit < 0 || p.p_exit > 1)
                throw std::invalid_argument("groups." + g +
                                            ": transition probabilities must be in [0,1]");
        }
        auto check_id = [&](DeviceId id, const std::string& where) {
            if (id >= devices)
                throw std::invalid_argument(where + ": id " + std::to_string(id) +
                                            " out of range (devices=" +
                                            std::to_string(devices) + ")");
        };
        auto check_path = [&](const PathModel& p, const std::string& where) {
            if (p.base_latency <= 0)
                throw std::invalid_argument(where + ".base_latency: must be > 0");
            if (p.noise_sd < 0)
                throw std::invalid_argument(where + ".noise_sd: must be >= 0");
            if (p.cross_noise < 0 || p.cross_noise > 1)
                throw std::invalid_argument(where + ".cross_noise: must be in [0,1]");
            if (!p.group.empty() && !groups.count(p.group))
                throw std::invalid_argument(where + ".group: unknown group '" + p.group + "'");
        };
        for (const auto& [dev, ds] : destinations) {
            check_id(dev, "destinations");
            for (auto d : ds) {
                check_id(d, "destinations[" + std::to_string(dev) + "]");
                if (d == dev)
                    throw std::invalid_argument("destinations[" + std::to_string(dev) +
                                                "]: device cannot target itself");
                const auto& p = path(dev, d);
                const std::string where = "paths[" + std::to_string(dev) + "->" +
                                          std::to_string(d) + "]";
                check_path(p, where);
                if (p.group.empty())
                    throw std::invalid_argument(where + ".group: no group and no usable default_path");
            }
        }
        for (const auto& [dev, ns] : neighbors) {
            check_id(dev, "neighbors");
            for (auto n : ns) {
                check_id(n, "neighbors[" + std::to_string(dev) + "]");
                if (n == dev)
                    throw std::invalid_argument("neighbors[" + std::to_string(dev) +
                                                "]: device cannot neighbor itself");
            }
        }
        for (const auto& [pair, p] : paths)
            check_path(p, "paths[" + std::to_string(pair.first) + "->" +
                              std::to_string(pair.second) + "]");
    }
};

}  // namespace slamon
