#include <catch2/catch_amalgamated.hpp>

#include "scenario_builder.hpp"
#include "slamon/simnet.hpp"

using namespace slamon;
using namespace slamon::testutil;

TEST_CASE("bus: one-round delay and send-order delivery") {
    MessageBus bus;
    Message a;
    a.type = MsgType::CoordRequest;
    a.src = 1;
    a.dst = 2;
    a.round = 0;
    a.destination = 7;
    Message b = a;
    b.destination = 8;
    bus.send(a);
    bus.send(b);

    auto inboxes = bus.deliver();
    REQUIRE(inboxes.size() == 1);
    REQUIRE(inboxes[2].size() == 2);
    REQUIRE(inboxes[2][0].destination == 7);
    REQUIRE(inboxes[2][1].destination == 8);

    REQUIRE(bus.deliver().empty());
}

TEST_CASE("bus: deterministic cross-source ordering and counters") {
    MessageBus bus;
    for (DeviceId src : {3u, 1u, 2u}) {
        Message m;
        m.type = MsgType::StopInform;
        m.src = src;
        m.dst = 0;
        bus.send(m);
    }
    auto inboxes = bus.deliver();
    REQUIRE(inboxes[0][0].src == 1);
    REQUIRE(inboxes[0][1].src == 2);
    REQUIRE(inboxes[0][2].src == 3);
    REQUIRE(bus.counters().stops == 3);
}

TEST_CASE("trace line format") {
    Message m;
    m.type = MsgType::CoordResponse;
    m.src = 4;
    m.dst = 9;
    m.round = 17;
    m.destination = 12;
    REQUIRE(trace_line(m) == "17 coord_response 4 9 12");
}

namespace {
// 2 monitors, 2 sinks, everything in one shared group so the monitors peer
// immediately after the first topology update.
ScenarioConfig coord_scenario(std::size_t local_max, std::size_t virtual_max) {
    auto cfg = monitors_and_sinks(2, 2, local_max, virtual_max, 80);
    shared_group_per_sink(cfg, 2, 2, 0.1, 0.1, 60.0);
    cfg.overlay.topology_period = 10;
    cfg.overlay.min_shared_samples = 5;
    return cfg;
}
}  // namespace

TEST_CASE("virtual contract: accepted request forces producer activation") {
    auto cfg = coord_scenario(1, 2);
    RunTrace trace;
    auto rep = run(cfg, StrategyKind::Virtual, 3, &trace);

    // After the overlay forms, some round must show an activation forced by a
    // peer contract; from then on the producer keeps measuring the contracted
    // destination while the session is active.
    bool saw_virtual = false;
    for (std::size_t r = 0; r < trace.active_virtual.size(); ++r)
        for (const auto& [dev, n] : trace.active_virtual[r])
            if (n > 0) saw_virtual = true;
    REQUIRE(saw_virtual);
    REQUIRE(rep.coverage_per_device_per_round > 1.0);
}

TEST_CASE("virtual budget: held sessions never exceed virtual_max") {
    auto cfg = coord_scenario(1, 1);
    RunTrace trace;
    run(cfg, StrategyKind::Virtual, 7, &trace);
    for (const auto& per_round : trace.active_virtual)
        for (const auto& [dev, n] : per_round) REQUIRE(n <= cfg.budget.virtual_max);
}

TEST_CASE("producer at full budget declines; consumer retries the next peer") {
    // 3 monitors, 3 sinks, budget 1: producers can hold at most one
    // obligation, so some requests are declined and retried. The run must
    // still settle with no device exceeding its budget.
    auto cfg = monitors_and_sinks(3, 3, 1, 2, 100);
    shared_group_per_sink(cfg, 3, 3, 0.1, 0.1, 60.0);
    RunTrace trace;
    auto rep = run(cfg, StrategyKind::Virtual, 11, &trace);
    REQUIRE(rep.messages.coord_requests > 0);
    REQUIRE(rep.messages.coord_responses == rep.messages.coord_requests);
    for (const auto& per_round : trace.activations)
        for (const auto& [dev, acts] : per_round)
            REQUIRE(acts.size() <= cfg.budget.local_max);
}

TEST_CASE("stop handling is idempotent") {
    auto cfg = coord_scenario(1, 2);
    Device producer(0, cfg, StrategyKind::Virtual, 1);
    MessageBus bus;

    Message stop;
    stop.type = MsgType::StopRequest;
    stop.src = 1;
    stop.dst = 0;
    stop.round = 5;
    stop.destination = 2;
    // Stop for a session that never existed: ignored, twice.
    producer.step(5, {stop}, bus);
    producer.step(6, {stop}, bus);
    REQUIRE(producer.forced_destinations().empty());
}

TEST_CASE("request from a non-peer is declined") {
    auto cfg = coord_scenario(2, 2);
    Device producer(0, cfg, StrategyKind::Virtual, 1);
    MessageBus bus;

    Message req;
    req.type = MsgType::CoordRequest;
    req.src = 1;  // no overlay has formed, so 1 is not a peer
    req.dst = 0;
    req.round = 0;
    req.destination = 2;
    producer.step(0, {req}, bus);
    auto inboxes = bus.deliver();
    REQUIRE(inboxes[1].size() == 1);
    REQUIRE(inboxes[1][0].type == MsgType::CoordResponse);
    REQUIRE_FALSE(inboxes[1][0].accept);
    REQUIRE(producer.forced_destinations().empty());
}

TEST_CASE("message drop switch loses messages but keeps the run valid") {
    auto cfg = coord_scenario(1, 2);
    cfg.message_drop = 0.3;
    auto rep = run(cfg, StrategyKind::Virtual, 5);
    REQUIRE(rep.messages.dropped > 0);
}
