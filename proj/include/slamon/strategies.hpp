#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <vector>

#include "slamon/coordination.hpp"
#include "slamon/correlation.hpp"
#include "slamon/model.hpp"
#include "slamon/rank.hpp"
#include "slamon/rng.hpp"
#include "slamon/scenario.hpp"

namespace slamon {

// One monitored device: local history, overlay state, virtual-session state,
// and the per-round step for each activation strategy. Devices communicate
// only through the message bus; a step never reads another device's state.
class Device {
public:
    Device(DeviceId id, const ScenarioConfig& cfg, StrategyKind strategy,
           std::uint64_t seed)
        : id_(id),
          cfg_(&cfg),
          strategy_(strategy),
          history_(cfg.rank.window),
          rng_(make_engine(seed, 0x6465766963ULL, id)) {
        for (DeviceId n : cfg.neighbors_of(id))
            if (n != id) candidates_.insert(n);
    }

    struct StepResult {
        ActivationSet activation;
        std::vector<MeasurementSample> virtual_received;
    };

    StepResult step(Round round, const std::vector<Message>& inbox, MessageBus& bus) {
        StepResult res;
        const bool uses_overlay =
            strategy_ == StrategyKind::LocalRemote || strategy_ == StrategyKind::Virtual;

        for (const Message& m : inbox) handle_message(m, round, bus, res);

        if (uses_overlay && round > 0 && round % cfg_->overlay.topology_period == 0)
            update_topology(round, bus);

        const auto& dests = cfg_->dests_of(id_);
        if (dests.empty()) return res;

        switch (strategy_) {
            case StrategyKind::RandomBaseline:
                res.activation = random_activation(dests);
                break;
            case StrategyKind::Local:
            case StrategyKind::LocalRemote:
            case StrategyKind::Virtual: {
                auto rank = ranked_activation(dests, round);
                res.activation = rank.activation;
                if (strategy_ == StrategyKind::Virtual)
                    manage_virtual_sessions(rank, res.activation, round, bus);
                break;
            }
        }
        last_activation_.assign(res.activation.begin(), res.activation.end());
        return res;
    }

    // Called by the world after sessions execute; appends the round's local
    // samples, forwards contracted destinations to consumers, and reports to
    // the overlay.
    void record_local_samples(const std::vector<MeasurementSample>& samples,
                              Round round, MessageBus& bus) {
        for (const auto& s : samples) history_.append(s);

        if (strategy_ == StrategyKind::RandomBaseline || strategy_ == StrategyKind::Local)
            return;

        if (strategy_ == StrategyKind::Virtual) {
            for (const auto& s : samples) {
                auto it = obligations_.find(s.destination);
                if (it == obligations_.end()) continue;
                for (DeviceId consumer : it->second) {
                    Message fwd;
                    fwd.type = MsgType::MeasurementReport;
                    fwd.virtual_forward = true;
                    fwd.src = id_;
                    fwd.dst = consumer;
                    fwd.round = round;
                    fwd.destination = s.destination;
                    fwd.samples = {s};
                    bus.send(std::move(fwd));
                }
            }
        }

        if (samples.empty()) return;
        std::set<DeviceId> recipients = candidates_;
        for (const auto& p : peers_) recipients.insert(p.peer);
        for (DeviceId r : recipients) {
            Message rep;
            rep.type = MsgType::MeasurementReport;
            rep.src = id_;
            rep.dst = r;
            rep.round = round;
            rep.samples = samples;
            bus.send(std::move(rep));
        }
    }

    DeviceId id() const { return id_; }
    const std::vector<PeerLink>& peers() const { return peers_; }
    const MeasurementHistory& history() const { return history_; }
    const ActivationSet& last_activation() const { return last_activation_; }

    std::size_t active_virtual_count() const {
        std::size_t n = 0;
        for (const auto& [d, s] : sessions_)
            if (s.state == VirtualSession::State::Active) ++n;
        return n;
    }
    std::size_t held_virtual_count() const { return sessions_.size(); }

    std::set<DestinationId> forced_destinations() const {
        std::set<DestinationId> out;
        for (const auto& [d, consumers] : obligations_) out.insert(d);
        return out;
    }

    const std::map<DestinationId, VirtualSession>& virtual_sessions() const {
        return sessions_;
    }
    const std::set<DeviceId>& candidates() const { return candidates_; }

private:
    void handle_message(const Message& m, Round round, MessageBus& bus, StepResult& res) {
        switch (m.type) {
            case MsgType::MeasurementReport:
                if (m.virtual_forward) {
                    auto it = sessions_.find(m.destination);
                    if (it == sessions_.end() ||
                        it->second.state != VirtualSession::State::Active ||
                        it->second.producer != m.src)
                        return;  // stale forward after stop
                    for (MeasurementSample s : m.samples) {
                        s.origin = Origin::virt(m.src);
                        const auto& known = history_.samples(s.destination);
                        if (!known.empty() && s.round < known.back().round) continue;
                        history_.append(s);
                        last_virtual_[s.destination] = s.round;
                        res.virtual_received.push_back(s);
                    }
                } else {
                    for (const auto& s : m.samples) {
                        auto& series = remote_store_[m.src][s.destination];
                        if (!series.empty() && s.round <= series.back().first) continue;
                        series.emplace_back(s.round, s.value);
                        if (series.size() > cfg_->rank.window) series.erase(series.begin());
                    }
                }
                break;
            case MsgType::PeerAdvertisement:
                for (DeviceId p : m.peers)
                    if (p != id_) candidates_.insert(p);
                break;
            case MsgType::CoordRequest: {
                Message resp;
                resp.type = MsgType::CoordResponse;
                resp.src = id_;
                resp.dst = m.src;
                resp.round = round;
                resp.destination = m.destination;
                resp.accept = accept_request(m.src, m.destination);
                // Collision: both sides want to consume this destination. The
                // lower id keeps its consumer session and declines; the higher
                // id yields the session and produces instead.
                auto it = sessions_.find(m.destination);
                if (it != sessions_.end() && id_ < m.src) resp.accept = false;
                if (resp.accept) {
                    if (it != sessions_.end()) {
                        if (it->second.state == VirtualSession::State::Active) {
                            Message stop;
                            stop.type = MsgType::StopRequest;
                            stop.src = id_;
                            stop.dst = it->second.producer;
                            stop.round = round;
                            stop.destination = m.destination;
                            bus.send(std::move(stop));
                        }
                        sessions_.erase(it);
                    }
                    obligations_[m.destination].insert(m.src);
                }
                bus.send(std::move(resp));
                break;
            }
            case MsgType::CoordResponse: {
                auto it = sessions_.find(m.destination);
                if (it == sessions_.end() ||
                    it->second.state != VirtualSession::State::Proposed ||
                    it->second.producer != m.src)
                    return;
                if (m.accept) {
                    it->second.state = VirtualSession::State::Active;
                    it->second.established_round = round;
                } else {
                    sessions_.erase(it);  // asked_ remembers the refusal
                }
                break;
            }
            case MsgType::StopRequest:
            case MsgType::StopInform: {
                // Idempotent teardown on either side.
                auto ob = obligations_.find(m.destination);
                if (ob != obligations_.end()) {
                    ob->second.erase(m.src);
                    if (ob->second.empty()) obligations_.erase(ob);
                }
                auto it = sessions_.find(m.destination);
                if (it != sessions_.end() && it->second.producer == m.src)
                    sessions_.erase(it);
                break;
            }
        }
    }

    bool accept_request(DeviceId from, DestinationId dest) const {
        if (!is_peer(from)) return false;
        const auto& dests = cfg_->dests_of(id_);
        if (std::find(dests.begin(), dests.end(), dest) == dests.end()) return false;
        if (obligations_.count(dest)) return true;
        return obligations_.size() < cfg_->budget.local_max;
    }

    bool is_peer(DeviceId d) const {
        for (const auto& p : peers_)
            if (p.peer == d) return true;
        return false;
    }

    std::map<DestinationId, RoundSeries> local_series() const {
        std::map<DestinationId, RoundSeries> out;
        for (DestinationId d : cfg_->dests_of(id_)) {
            RoundSeries s;
            for (const auto& smp : history_.samples(d))
                if (smp.origin.kind == OriginKind::Local)
                    s.emplace_back(smp.round, smp.value);
            if (!s.empty()) out[d] = std::move(s);
        }
        return out;
    }

    void update_topology(Round round, MessageBus& bus) {
        // Current peers stay in the candidate pool for re-evaluation.
        for (const auto& p : peers_) candidates_.insert(p.peer);

        const auto local = local_series();
        std::map<DeviceId, CandidateScore> scored;
        for (DeviceId c : candidates_) {
            auto it = remote_store_.find(c);
            if (it == remote_store_.end()) continue;
            if (auto cs = evaluate_candidate(local, it->second, cfg_->overlay))
                scored[c] = *cs;
        }
        peers_ = select_peers(scored, cfg_->overlay, round);

        for (const auto& p : peers_) {
            Message ad;
            ad.type = MsgType::PeerAdvertisement;
            ad.src = id_;
            ad.dst = p.peer;
            ad.round = round;
            for (const auto& q : peers_)
                if (q.peer != p.peer) ad.peers.push_back(q.peer);
            bus.send(std::move(ad));
        }

        // Drop virtual state tied to devices that are no longer peers.
        for (auto it = sessions_.begin(); it != sessions_.end();) {
            if (!is_peer(it->second.producer)) {
                Message stop;
                stop.type = MsgType::StopRequest;
                stop.src = id_;
                stop.dst = it->second.producer;
                stop.round = round;
                stop.destination = it->first;
                bus.send(std::move(stop));
                it = sessions_.erase(it);
            } else {
                ++it;
            }
        }
        for (auto it = obligations_.begin(); it != obligations_.end();) {
            auto& consumers = it->second;
            for (auto c = consumers.begin(); c != consumers.end();) {
                if (!is_peer(*c)) {
                    Message stop;
                    stop.type = MsgType::StopInform;
                    stop.src = id_;
                    stop.dst = *c;
                    stop.round = round;
                    stop.destination = it->first;
                    bus.send(std::move(stop));
                    c = consumers.erase(c);
                } else {
                    ++c;
                }
            }
            it = consumers.empty() ? obligations_.erase(it) : std::next(it);
        }
        asked_.clear();
    }

    ActivationSet random_activation(const std::vector<DestinationId>& dests) {
        std::vector<DestinationId> pool = dests;
        ActivationSet out;
        const std::size_t k = std::min<std::size_t>(cfg_->budget.local_max, pool.size());
        for (std::size_t i = 0; i < k; ++i) {
            std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
            const std::size_t j = pick(rng_);
            out.push_back(pool[j]);
            pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(j));
        }
        std::sort(out.begin(), out.end());
        return out;
    }

    RankResult ranked_activation(const std::vector<DestinationId>& dests, Round round) {
        const bool pool_remote = strategy_ == StrategyKind::LocalRemote ||
                                 strategy_ == StrategyKind::Virtual;
        const bool use_virtual = strategy_ == StrategyKind::Virtual;

        auto samples_for = [&](DestinationId d) {
            RoundSeries s;
            for (const auto& smp : history_.samples(d)) {
                if (smp.origin.kind == OriginKind::Local ||
                    (use_virtual && smp.origin.kind == OriginKind::Virtual))
                    s.emplace_back(smp.round, smp.value);
            }
            if (pool_remote) {
                for (const auto& p : peers_) {
                    auto it = remote_store_.find(p.peer);
                    if (it == remote_store_.end()) continue;
                    auto jt = it->second.find(d);
                    if (jt == it->second.end()) continue;
                    s.insert(s.end(), jt->second.begin(), jt->second.end());
                }
                std::sort(s.begin(), s.end());
            }
            return s;
        };
        auto last_measured_for = [&](DestinationId d) -> std::optional<Round> {
            auto lm = history_.last_measured(d);
            if (!use_virtual) return lm;
            auto lv = last_virtual_.find(d);
            if (lv == last_virtual_.end()) return lm;
            if (!lm) return lv->second;
            return std::max(*lm, lv->second);
        };

        std::set<DestinationId> forced = use_virtual ? forced_destinations()
                                                     : std::set<DestinationId>{};
        return destination_rank(dests, samples_for, last_measured_for, cfg_->slo, round,
                                cfg_->rank, cfg_->budget, forced);
    }

    void manage_virtual_sessions(const RankResult& rank, const ActivationSet& activation,
                                 Round round, MessageBus& bus) {
        std::set<DestinationId> active(activation.begin(), activation.end());
        // Locally measured destinations no longer need their virtual session.
        for (auto it = sessions_.begin(); it != sessions_.end();) {
            if (it->second.state == VirtualSession::State::Active && active.count(it->first)) {
                Message stop;
                stop.type = MsgType::StopRequest;
                stop.src = id_;
                stop.dst = it->second.producer;
                stop.round = round;
                stop.destination = it->first;
                bus.send(std::move(stop));
                it = sessions_.erase(it);
            } else {
                ++it;
            }
        }
        // Propose for top-ranked destinations excluded by the budget cut, in
        // rank order, one outstanding request per destination.
        for (const auto& s : rank.ranked) {
            if (sessions_.size() >= cfg_->budget.virtual_max) break;
            if (active.count(s.destination)) continue;
            if (sessions_.count(s.destination)) continue;
            const DeviceId* producer = nullptr;
            for (const auto& p : peers_) {  // sorted by correlation descending
                if (!asked_[s.destination].count(p.peer)) {
                    producer = &p.peer;
                    break;
                }
            }
            if (!producer) continue;  // peer exhaustion for this destination
            Message req;
            req.type = MsgType::CoordRequest;
            req.src = id_;
            req.dst = *producer;
            req.round = round;
            req.destination = s.destination;
            bus.send(std::move(req));
            asked_[s.destination].insert(*producer);
            sessions_[s.destination] =
                VirtualSession{id_, *producer, s.destination,
                               VirtualSession::State::Proposed, round};
        }
    }

    DeviceId id_;
    const ScenarioConfig* cfg_;
    StrategyKind strategy_;
    MeasurementHistory history_;
    std::mt19937_64 rng_;

    std::set<DeviceId> candidates_;
    std::vector<PeerLink> peers_;  // correlation descending
    std::map<DeviceId, std::map<DestinationId, RoundSeries>> remote_store_;

    std::map<DestinationId, Round> last_virtual_;
    std::map<DestinationId, VirtualSession> sessions_;          // consumer side
    std::map<DestinationId, std::set<DeviceId>> obligations_;   // producer side
    std::map<DestinationId, std::set<DeviceId>> asked_;
    ActivationSet last_activation_;
};

}  // namespace slamon
