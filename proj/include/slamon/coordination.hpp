#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "slamon/model.hpp"

namespace slamon {

enum class MsgType : std::uint8_t {
    MeasurementReport,
    PeerAdvertisement,
    CoordRequest,
    CoordResponse,
    StopRequest,
    StopInform,
};

inline const char* msg_type_name(MsgType t) {
    switch (t) {
        case MsgType::MeasurementReport: return "report";
        case MsgType::PeerAdvertisement: return "advert";
        case MsgType::CoordRequest: return "coord_request";
        case MsgType::CoordResponse: return "coord_response";
        case MsgType::StopRequest: return "stop_request";
        case MsgType::StopInform: return "stop_inform";
    }
    return "?";
}

struct Message {
    MsgType type = MsgType::MeasurementReport;
    DeviceId src = 0;
    DeviceId dst = 0;
    Round round = 0;  // send round
    std::vector<MeasurementSample> samples;  // MeasurementReport
    bool virtual_forward = false;            // report carries virtual-session results
    std::vector<DeviceId> peers;             // PeerAdvertisement
    DestinationId destination = 0;           // Coord*/Stop*
    bool accept = false;                     // CoordResponse
};

struct VirtualSession {
    DeviceId consumer = 0;
    DeviceId producer = 0;
    DestinationId destination = 0;
    enum class State : std::uint8_t { Proposed, Active, Stopped };
    State state = State::Proposed;
    Round established_round = 0;
};

struct MessageCounters {
    std::uint64_t reports = 0;
    std::uint64_t adverts = 0;
    std::uint64_t coord_requests = 0;
    std::uint64_t coord_responses = 0;
    std::uint64_t stops = 0;
    std::uint64_t dropped = 0;

    std::uint64_t total() const {
        return reports + adverts + coord_requests + coord_responses + stops;
    }

    bool operator==(const MessageCounters&) const = default;
};

// Deterministic store-and-forward bus: a message sent in round r is delivered
// in round r+1, ordered by (src, dst, send sequence). Optional i.i.d. drop.
class MessageBus {
public:
    explicit MessageBus(double drop_probability = 0.0, std::uint64_t drop_seed = 0)
        : drop_probability_(drop_probability), drop_rng_(drop_seed) {}

    void send(Message m) {
        switch (m.type) {
            case MsgType::MeasurementReport: counters_.reports++; break;
            case MsgType::PeerAdvertisement: counters_.adverts++; break;
            case MsgType::CoordRequest: counters_.coord_requests++; break;
            case MsgType::CoordResponse: counters_.coord_responses++; break;
            case MsgType::StopRequest:
            case MsgType::StopInform: counters_.stops++; break;
        }
        if (trace_) trace_(m);
        if (drop_probability_ > 0.0) {
            std::uniform_real_distribution<double> u(0.0, 1.0);
            if (u(drop_rng_) < drop_probability_) {
                counters_.dropped++;
                return;
            }
        }
        in_flight_.push_back(std::move(m));
    }

    // Collects all messages sent in the previous round into per-device
    // inboxes. Call once per round, before device steps.
    std::map<DeviceId, std::vector<Message>> deliver() {
        std::stable_sort(in_flight_.begin(), in_flight_.end(),
                         [](const Message& a, const Message& b) {
                             if (a.src != b.src) return a.src < b.src;
                             return a.dst < b.dst;
                         });
        std::map<DeviceId, std::vector<Message>> inboxes;
        for (auto& m : in_flight_) inboxes[m.dst].push_back(std::move(m));
        in_flight_.clear();
        return inboxes;
    }

    void set_trace(std::function<void(const Message&)> sink) { trace_ = std::move(sink); }
    const MessageCounters& counters() const { return counters_; }

private:
    double drop_probability_;
    std::mt19937_64 drop_rng_;
    std::vector<Message> in_flight_;
    MessageCounters counters_;
    std::function<void(const Message&)> trace_;
};

// One trace line per message: round variant src dst destination.
inline std::string trace_line(const Message& m) {
    return std::to_string(m.round) + " " + msg_type_name(m.type) + " " +
           std::to_string(m.src) + " " + std::to_string(m.dst) + " " +
           std::to_string(m.destination);
}

}  // namespace slamon
