#pragma once

#include <cmath>
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>

namespace slamon {

using DeviceId = std::uint32_t;
using DestinationId = std::uint32_t;
using Round = std::int64_t;

enum class SloDirection { ViolatedAbove, ViolatedBelow };

struct Slo {
    std::string metric_id;
    double threshold = 0.0;
    SloDirection direction = SloDirection::ViolatedAbove;

    void validate() const {
        if (metric_id.empty())
            throw std::invalid_argument("slo.metric_id must be non-empty");
        if (!std::isfinite(threshold))
            throw std::invalid_argument("slo.threshold must be finite");
        if (threshold == 0.0)
            throw std::invalid_argument("slo.threshold must be non-zero");
    }
};

enum class OriginKind : std::uint8_t { Local, Remote, Virtual };

struct Origin {
    OriginKind kind = OriginKind::Local;
    DeviceId peer = 0;  // reporting peer for Remote/Virtual; unused for Local

    static Origin local() { return {OriginKind::Local, 0}; }
    static Origin remote(DeviceId p) { return {OriginKind::Remote, p}; }
    static Origin virt(DeviceId p) { return {OriginKind::Virtual, p}; }

    bool operator==(const Origin&) const = default;
};

struct MeasurementSample {
    DeviceId source = 0;
    DestinationId destination = 0;
    Round round = 0;
    double value = 0.0;
    Origin origin;
};

struct SessionBudget {
    std::size_t local_max = 1;
    std::size_t virtual_max = 0;

    void validate() const {
        if (local_max < 1)
            throw std::invalid_argument("budget.local_max must be >= 1");
    }
};

// Per-destination sliding window of samples. last_measured tracks the newest
// Local-origin sample round only; remote and virtual results never advance it.
class MeasurementHistory {
public:
    explicit MeasurementHistory(std::size_t window) : window_(window) {
        if (window_ == 0) throw std::invalid_argument("window must be >= 1");
    }

    void append(const MeasurementSample& s) {
        if (!std::isfinite(s.value))
            throw std::invalid_argument("sample value must be finite");
        auto& dq = samples_[s.destination];
        if (!dq.empty() && s.round < dq.back().round)
            throw std::invalid_argument("sample round older than newest stored round");
        dq.push_back(s);
        if (dq.size() > window_) dq.pop_front();
        if (s.origin.kind == OriginKind::Local)
            last_measured_[s.destination] = s.round;
    }

    const std::deque<MeasurementSample>& samples(DestinationId d) const {
        static const std::deque<MeasurementSample> kEmpty;
        auto it = samples_.find(d);
        return it == samples_.end() ? kEmpty : it->second;
    }

    std::optional<Round> last_measured(DestinationId d) const {
        auto it = last_measured_.find(d);
        if (it == last_measured_.end()) return std::nullopt;
        return it->second;
    }

    std::size_t window() const { return window_; }

private:
    std::size_t window_;
    std::map<DestinationId, std::deque<MeasurementSample>> samples_;
    std::map<DestinationId, Round> last_measured_;
};

}  // namespace slamon
