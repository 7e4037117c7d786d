#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "slamon/coordination.hpp"
#include "slamon/model.hpp"
#include "slamon/rng.hpp"
#include "slamon/scenario.hpp"
#include "slamon/strategies.hpp"

namespace slamon {

inline bool detect(double value, const Slo& slo) {
    return slo.direction == SloDirection::ViolatedAbove ? value > slo.threshold
                                                        : value < slo.threshold;
}

// Precomputed regime trajectories plus pure per-(pair, round) value streams.
// Everything is a function of (scenario, seed) only; which sessions get
// activated never perturbs any pair's values.
class World {
public:
    World(const ScenarioConfig& cfg, std::uint64_t seed) : cfg_(&cfg), seed_(seed) {
        std::uint32_t gi = 0;
        for (const auto& [name, proc] : cfg.groups) {
            auto rng = make_engine(seed, 0x67726F7570ULL, gi);
            std::uniform_real_distribution<double> u(0.0, 1.0);
            std::vector<bool> series(static_cast<std::size_t>(cfg.rounds));
            bool violating = proc.start_violating;
            for (Round r = 0; r < cfg.rounds; ++r) {
                series[static_cast<std::size_t>(r)] = violating;
                violating = violating ? !(u(rng) < proc.p_exit) : (u(rng) < proc.p_enter);
            }
            regimes_[name] = std::move(series);
            ++gi;
        }
    }

    bool pair_violating_regime(DeviceId src, DestinationId dst, Round r) const {
        const auto& pm = cfg_->path(src, dst);
        bool v = regimes_.at(pm.group)[static_cast<std::size_t>(r)];
        if (pm.cross_noise > 0.0) {
            auto rng = make_engine(seed_, 0x666C6970ULL,
                                   (std::uint64_t(src) << 32) | dst,
                                   static_cast<std::uint64_t>(r));
            std::uniform_real_distribution<double> u(0.0, 1.0);
            if (u(rng) < pm.cross_noise) v = !v;
        }
        return v;
    }

    double value(DeviceId src, DestinationId dst, Round r) const {
        const auto& pm = cfg_->path(src, dst);
        double v = pm.base_latency;
        if (pair_violating_regime(src, dst, r))
            v += cfg_->groups.at(pm.group).offset;
        if (pm.noise_sd > 0.0) {
            auto rng = make_engine(seed_, 0x6E6F697365ULL,
                                   (std::uint64_t(src) << 32) | dst,
                                   static_cast<std::uint64_t>(r));
            std::normal_distribution<double> n(0.0, pm.noise_sd);
            v += n(rng);
        }
        return v;
    }

    // Ground truth: the pair's true value this round breaches the SLO.
    bool ground_truth(DeviceId src, DestinationId dst, Round r) const {
        return detect(value(src, dst, r), cfg_->slo);
    }

private:
    const ScenarioConfig* cfg_;
    std::uint64_t seed_;
    std::map<std::string, std::vector<bool>> regimes_;
};

struct MetricsReport {
    std::string strategy;
    std::uint64_t seed = 0;
    Round rounds = 0;
    std::uint64_t total_violation_rounds = 0;
    std::uint64_t true_detections = 0;
    std::uint64_t missed_violations = 0;
    std::uint64_t false_virtual_detections = 0;
    double detection_ratio = 0.0;
    double mean_detection_lag = -1.0;  // -1 when no violation episode was detected
    double real_sessions_per_device_per_round = 0.0;
    double coverage_per_device_per_round = 0.0;
    MessageCounters messages;

    bool operator==(const MetricsReport&) const = default;
};

struct RunTrace {
    // Indexed by round.
    std::vector<std::map<DeviceId, ActivationSet>> activations;
    std::vector<std::map<DeviceId, std::size_t>> active_virtual;
};

inline MetricsReport run(const ScenarioConfig& cfg, StrategyKind strategy,
                         std::uint64_t seed, RunTrace* trace = nullptr,
                         const std::function<void(const Message&)>& msg_trace = nullptr) {
    cfg.validate();
    World world(cfg, seed);

    std::vector<Device> devices;
    devices.reserve(cfg.devices);
    for (DeviceId id = 0; id < cfg.devices; ++id)
        devices.emplace_back(id, cfg, strategy, seed);

    MessageBus bus(cfg.message_drop, stream_key(seed, 0x64726F70ULL));
    if (msg_trace) bus.set_trace(msg_trace);

    // Per (pair, violating sample round): earliest round the device held a
    // violating result for it. Used for detections and lag.
    std::map<std::tuple<DeviceId, DestinationId, Round>, Round> detected_at;
    std::uint64_t false_virtual = 0;
    std::uint64_t session_rounds = 0;
    std::uint64_t coverage_sum = 0;
    std::size_t monitor_count = 0;
    for (DeviceId id = 0; id < cfg.devices; ++id)
        if (!cfg.dests_of(id).empty()) ++monitor_count;

    for (Round r = 0; r < cfg.rounds; ++r) {
        auto inboxes = bus.deliver();
        std::vector<Device::StepResult> results(cfg.devices);
        for (DeviceId id = 0; id < cfg.devices; ++id) {
            auto it = inboxes.find(id);
            static const std::vector<Message> kEmpty;
            results[id] = devices[id].step(r, it == inboxes.end() ? kEmpty : it->second, bus);
        }

        if (trace) {
            trace->activations.emplace_back();
            trace->active_virtual.emplace_back();
        }

        for (DeviceId id = 0; id < cfg.devices; ++id) {
            auto& res = results[id];
            std::set<DestinationId> covered(res.activation.begin(), res.activation.end());

            // Score virtual results received this round (producer samples from
            // an earlier round, used as the consumer's own).
            for (const auto& s : res.virtual_received) {
                covered.insert(s.destination);
                if (detect(s.value, cfg.slo)) {
                    if (world.ground_truth(id, s.destination, s.round)) {
                        auto key = std::make_tuple(id, s.destination, s.round);
                        auto [it2, inserted] = detected_at.emplace(key, r);
                        if (!inserted) it2->second = std::min(it2->second, r);
                    } else {
                        ++false_virtual;
                    }
                }
            }

            // Execute real sessions.
            std::vector<MeasurementSample> produced;
            for (DestinationId d : res.activation) {
                MeasurementSample s;
                s.source = id;
                s.destination = d;
                s.round = r;
                s.value = world.value(id, d, r);
                s.origin = Origin::local();
                produced.push_back(s);
                if (detect(s.value, cfg.slo)) {
                    auto key = std::make_tuple(id, d, r);
                    auto [it2, inserted] = detected_at.emplace(key, r);
                    if (!inserted) it2->second = std::min(it2->second, r);
                }
            }
            devices[id].record_local_samples(produced, r, bus);

            session_rounds += res.activation.size();
            coverage_sum += covered.size();
            if (trace) {
                trace->activations.back()[id] = res.activation;
                trace->active_virtual.back()[id] = devices[id].active_virtual_count();
            }
        }
    }

    MetricsReport rep;
    rep.strategy = strategy_name(strategy);
    rep.seed = seed;
    rep.rounds = cfg.rounds;

    // Ground-truth totals, detections, and per-episode lag.
    std::uint64_t episodes_detected = 0;
    std::uint64_t lag_sum = 0;
    for (DeviceId id = 0; id < cfg.devices; ++id) {
        for (DestinationId d : cfg.dests_of(id)) {
            Round onset = -1;
            Round episode_first_detection = -1;
            for (Round r = 0; r < cfg.rounds; ++r) {
                const bool v = world.ground_truth(id, d, r);
                if (v) {
                    ++rep.total_violation_rounds;
                    auto it = detected_at.find(std::make_tuple(id, d, r));
                    if (it != detected_at.end()) {
                        ++rep.true_detections;
                        if (onset < 0) onset = r;  // episode started before round 0? no: v && onset<0
                        if (episode_first_detection < 0 ||
                            it->second < episode_first_detection)
                            episode_first_detection = it->second;
                    }
                    if (onset < 0) onset = r;
                } else if (onset >= 0) {
                    if (episode_first_detection >= 0) {
                        ++episodes_detected;
                        lag_sum += static_cast<std::uint64_t>(episode_first_detection - onset);
                    }
                    onset = -1;
                    episode_first_detection = -1;
                }
            }
            if (onset >= 0 && episode_first_detection >= 0) {
                ++episodes_detected;
                lag_sum += static_cast<std::uint64_t>(episode_first_detection - onset);
            }
        }
    }
    rep.missed_violations = rep.total_violation_rounds - rep.true_detections;
    rep.false_virtual_detections = false_virtual;
    rep.detection_ratio =
        rep.total_violation_rounds == 0
            ? 0.0
            : static_cast<double>(rep.true_detections) /
                  static_cast<double>(rep.total_violation_rounds);
    if (episodes_detected > 0)
        rep.mean_detection_lag =
            static_cast<double>(lag_sum) / static_cast<double>(episodes_detected);
    const double denom = static_cast<double>(monitor_count) *
                         static_cast<double>(cfg.rounds);
    if (denom > 0) {
        rep.real_sessions_per_device_per_round = static_cast<double>(session_rounds) / denom;
        rep.coverage_per_device_per_round = static_cast<double>(coverage_sum) / denom;
    }
    rep.messages = bus.counters();
    return rep;
}

}  // namespace slamon
