// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Scenarios are built programmatically; thresholds are fixed here.

#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "scenario_builder.hpp"
#include "slamon/harness.hpp"
#include "slamon/simnet.hpp"

using namespace slamon;
using namespace slamon::testutil;

namespace {

int g_failures = 0;

void criterion(int number, const std::string& name, const std::function<bool()>& fn) {
    bool ok = false;
    std::string err;
    try {
        ok = fn();
    } catch (const std::exception& e) {
        err = e.what();
    }
    std::printf("criterion %2d [%s] %s%s\n", number, ok ? "PASS" : "FAIL", name.c_str(),
                err.empty() ? "" : (" (exception: " + err + ")").c_str());
    std::fflush(stdout);
    if (!ok) ++g_failures;
}

bool check(bool cond, const char* what) {
    if (!cond) std::printf("    failed: %s\n", what);
    return cond;
}

// --- 1: budget safety -------------------------------------------------------

bool budget_safety() {
    std::mt19937_64 rng(1234);
    const Slo slo{"m", 100.0, SloDirection::ViolatedAbove};
    // 1000+ generated device states through destination_rank.
    for (int trial = 0; trial < 1100; ++trial) {
        const std::size_t n = 1 + rng() % 12;
        std::vector<DestinationId> dests;
        for (std::size_t i = 0; i < n; ++i) dests.push_back(DestinationId(i));
        std::map<DestinationId, std::vector<std::pair<Round, double>>> samples;
        std::map<DestinationId, Round> last;
        for (auto d : dests) {
            const std::size_t k = rng() % 6;
            Round r = 0;
            for (std::size_t i = 0; i < k; ++i) {
                samples[d].push_back({r, double(rng() % 250)});
                r += 1 + Round(rng() % 3);
            }
            if (k > 0 && rng() % 2) last[d] = samples[d].back().first;
        }
        SessionBudget budget{1 + rng() % 5, rng() % 4};
        std::set<DestinationId> forced;
        if (rng() % 3 == 0) forced.insert(DestinationId(rng() % n));
        auto res = destination_rank(
            dests,
            [&](DestinationId d) {
                auto it = samples.find(d);
                return it == samples.end()
                           ? std::vector<std::pair<Round, double>>{}
                           : it->second;
            },
            [&](DestinationId d) -> std::optional<Round> {
                auto it = last.find(d);
                if (it == last.end()) return std::nullopt;
                return it->second;
            },
            slo, 20, RankParams{}, budget, forced);
        if (res.activation.size() > budget.local_max) return false;
    }
    // Full runs: virtual sessions bounded every round.
    auto cfg = monitors_and_sinks(4, 6, 2, 2, 120);
    shared_group_per_sink(cfg, 4, 6, 0.1, 0.2, 60.0);
    for (std::uint64_t seed : {1, 2, 3}) {
        RunTrace trace;
        run(cfg, StrategyKind::Virtual, seed, &trace);
        for (const auto& per_round : trace.activations)
            for (const auto& [dev, acts] : per_round)
                if (acts.size() > cfg.budget.local_max) return false;
        for (const auto& per_round : trace.active_virtual)
            for (const auto& [dev, nv] : per_round)
                if (nv > cfg.budget.virtual_max) return false;
    }
    return true;
}

// --- 2: frequent probing ----------------------------------------------------

bool frequent_probing() {
    // Static 1-device scenario, 10 destinations, budget 2: each destination
    // probed at least once every ceil(10/2)*2 = 10 rounds over 200 rounds.
    auto cfg = monitors_and_sinks(1, 10, 2, 0, 200);
    shared_group_per_sink(cfg, 1, 10, 0.0, 0.0, 60.0);
    RunTrace trace;
    run(cfg, StrategyKind::Local, 1, &trace);
    const Round bound = 10;
    std::map<DestinationId, Round> last_probed;
    for (Round r = 0; r < cfg.rounds; ++r) {
        for (DestinationId d : trace.activations[std::size_t(r)].at(0)) last_probed[d] = r;
        if (r < bound) continue;
        for (DestinationId d : cfg.dests_of(0)) {
            auto it = last_probed.find(d);
            if (it == last_probed.end() || r - it->second > bound) return false;
        }
    }
    return true;
}

// --- 3: correlation oracle --------------------------------------------------

bool correlation_oracle() {
    std::mt19937_64 rng(777);
    std::uniform_real_distribution<double> val(-50.0, 50.0);
    for (int trial = 0; trial < 500; ++trial) {
        const std::size_t n = 3 + rng() % 40;
        std::vector<double> xs(n), ys(n);
        for (std::size_t i = 0; i < n; ++i) {
            xs[i] = val(rng);
            ys[i] = 0.4 * xs[i] + val(rng);
        }
        auto p = pearson(xs, ys);
        auto s = spearman(xs, ys);
        if (!p || !s) return false;
        if (std::abs(*p - oracle::pearson_bruteforce(xs, ys)) > 1e-9) return false;
        if (std::abs(*s - oracle::spearman_bruteforce(xs, ys)) > 1e-9) return false;
        // Monotone-transform invariance, exact at rank level.
        std::vector<double> ys2(n);
        for (std::size_t i = 0; i < n; ++i) ys2[i] = std::exp(ys[i] / 25.0) * 3.0 + 1.0;
        if (average_ranks(ys) != average_ranks(ys2)) return false;
        if (*spearman(xs, ys) != *spearman(xs, ys2)) return false;
    }
    return true;
}

// --- 4: overlay construction validity ---------------------------------------

bool overlay_validity() {
    // Two monitor groups (A: 0-2, B: 3-5) probing 4 sinks; regimes shared
    // within each monitor group per sink, independent across groups.
    const std::size_t monitors = 6, sinks = 4;
    auto cfg = monitors_and_sinks(monitors, sinks, sinks, 0, 40);
    const double offset = 60.0;
    for (std::size_t s = 0; s < sinks; ++s) {
        add_group(cfg, "A" + std::to_string(s), 0.3, 0.3, offset);
        add_group(cfg, "B" + std::to_string(s), 0.3, 0.3, offset);
        for (DeviceId m = 0; m < monitors; ++m) {
            const std::string g = (m < 3 ? "A" : "B") + std::to_string(s);
            set_path(cfg, m, DestinationId(monitors + s), g, 50.0, 0.01 * offset);
        }
    }
    cfg.overlay.min_correlation = 0.7;
    cfg.overlay.topology_period = 30;
    cfg.rank.window = 30;
    auto same_side = [](DeviceId a, DeviceId b) { return (a < 3) == (b < 3); };

    for (std::uint64_t seed = 1; seed <= 30; ++seed) {
        World world(cfg, seed);
        // Reconstruct every device's full local series and score every
        // monitor pair exactly as the devices do (full-budget probing makes
        // the series independent of activation choices).
        std::map<DeviceId, std::map<DestinationId, RoundSeries>> series;
        for (DeviceId m = 0; m < monitors; ++m)
            for (DestinationId d : cfg.dests_of(m)) {
                RoundSeries s;
                for (Round r = 0; r < cfg.rounds; ++r)
                    s.push_back({r, world.value(m, d, r)});
                series[m][d] = std::move(s);
            }
        for (DeviceId a = 0; a < monitors; ++a)
            for (DeviceId b = 0; b < monitors; ++b) {
                if (a == b) continue;
                auto cs = evaluate_candidate(series[a], series[b], cfg.overlay);
                if (!same_side(a, b) && cs && cs->score >= cfg.overlay.min_correlation)
                    return false;
            }
        // End-to-end: run the simulator and check the selected peers.
        RunTrace trace;
        std::vector<Device> probe;  // devices are internal to run(); re-run and
        // use a bespoke loop to inspect peers after the first topology update.
        MessageBus bus;
        std::vector<Device> devs;
        for (DeviceId id = 0; id < cfg.devices; ++id)
            devs.emplace_back(id, cfg, StrategyKind::LocalRemote, seed);
        for (Round r = 0; r < cfg.rounds; ++r) {
            auto inboxes = bus.deliver();
            for (DeviceId id = 0; id < cfg.devices; ++id) {
                static const std::vector<Message> kEmpty;
                auto it = inboxes.find(id);
                auto res = devs[id].step(r, it == inboxes.end() ? kEmpty : it->second, bus);
                std::vector<MeasurementSample> produced;
                for (DestinationId d : res.activation) {
                    MeasurementSample s;
                    s.source = id;
                    s.destination = d;
                    s.round = r;
                    s.value = world.value(id, d, r);
                    produced.push_back(s);
                }
                devs[id].record_local_samples(produced, r, bus);
            }
        }
        for (DeviceId m = 0; m < monitors; ++m) {
            if (devs[m].peers().empty()) return false;  // overlay must form
            for (const auto& p : devs[m].peers())
                if (!same_side(m, p.peer)) return false;
        }
    }
    return true;
}

// --- 5: strategy layering ---------------------------------------------------

bool strategy_layering() {
    auto cfg = monitors_and_sinks(3, 5, 2, 0, 80);
    shared_group_per_sink(cfg, 3, 5, 0.1, 0.2, 60.0, 50.0, 1.0);
    auto no_overlay = cfg;
    no_overlay.neighbors.clear();
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        RunTrace tl, tlr, tlr2, tv;
        run(no_overlay, StrategyKind::Local, seed, &tl);
        run(no_overlay, StrategyKind::LocalRemote, seed, &tlr);
        if (tl.activations != tlr.activations) return false;
        run(cfg, StrategyKind::LocalRemote, seed, &tlr2);
        run(cfg, StrategyKind::Virtual, seed, &tv);  // virtual_max = 0
        if (tlr2.activations != tv.activations) return false;
    }
    return true;
}

// --- 6: local beats random --------------------------------------------------

bool local_beats_random() {
    // 20 destinations, budget 3, 4 persistently violating destinations.
    const std::size_t sinks = 20;
    auto cfg = monitors_and_sinks(1, sinks, 3, 0, 500);
    for (std::size_t s = 0; s < sinks; ++s) {
        const bool violating = s < 4;
        add_group(cfg, "g" + std::to_string(s), 0.0, 0.0, 60.0, violating);
        set_path(cfg, 0, DestinationId(1 + s), "g" + std::to_string(s), 50.0);
    }
    int wins = 0;
    double local_sum = 0, random_sum = 0;
    for (std::uint64_t seed = 1; seed <= 30; ++seed) {
        auto rl = run(cfg, StrategyKind::Local, seed);
        auto rr = run(cfg, StrategyKind::RandomBaseline, seed);
        if (rl.detection_ratio > rr.detection_ratio) ++wins;
        local_sum += rl.detection_ratio;
        random_sum += rr.detection_ratio;
    }
    const double margin = (local_sum - random_sum) / 30.0;
    std::printf("    local mean=%.3f random mean=%.3f margin=%.3f wins=%d/30\n",
                local_sum / 30.0, random_sum / 30.0, margin, wins);
    return check(wins >= 27, "Local > Random on >= 27/30 seeds") &&
           check(margin >= 0.10, "mean margin >= 10 percentage points");
}

// --- 7: remote information improves adaptivity ------------------------------

bool remote_improves_adaptivity() {
    // Violations onset simultaneously across each per-sink group shared by
    // all monitors; remote reports steer peers toward fresh violations.
    const std::size_t monitors = 4, sinks = 12;
    auto cfg = monitors_and_sinks(monitors, sinks, 2, 0, 400);
    shared_group_per_sink(cfg, monitors, sinks, 0.02, 0.06, 60.0, 50.0, 1.0);
    double lag_local = 0, lag_lr = 0;
    for (std::uint64_t seed = 1; seed <= 30; ++seed) {
        auto rl = run(cfg, StrategyKind::Local, seed);
        auto rlr = run(cfg, StrategyKind::LocalRemote, seed);
        lag_local += rl.mean_detection_lag;
        lag_lr += rlr.mean_detection_lag;
    }
    std::printf("    mean lag: local=%.3f local_remote=%.3f\n", lag_local / 30.0,
                lag_lr / 30.0);
    return check(lag_lr < lag_local, "mean detection lag LocalRemote < Local");
}

// --- 8: virtual coverage ----------------------------------------------------

bool virtual_coverage() {
    const std::size_t monitors = 6, sinks = 8;
    auto cfg = monitors_and_sinks(monitors, sinks, 2, 4, 300);
    shared_group_per_sink(cfg, monitors, sinks, 0.1, 0.15, 60.0);
    double cov_v = 0, cov_lr = 0;
    for (std::uint64_t seed = 1; seed <= 30; ++seed) {
        cov_v += run(cfg, StrategyKind::Virtual, seed).coverage_per_device_per_round;
        cov_lr += run(cfg, StrategyKind::LocalRemote, seed).coverage_per_device_per_round;
    }
    cov_v /= 30.0;
    cov_lr /= 30.0;
    std::printf("    coverage: virtual=%.3f local_remote=%.3f budget=2\n", cov_v, cov_lr);
    return check(cov_v > 2.0, "virtual coverage > real-session budget") &&
           check(cov_v > cov_lr, "virtual coverage > local_remote coverage");
}

// --- 9: virtual accuracy cost -----------------------------------------------

bool virtual_accuracy_cost() {
    const std::size_t monitors = 4, sinks = 6;
    auto cfg = monitors_and_sinks(monitors, sinks, 2, 3, 300);
    shared_group_per_sink(cfg, monitors, sinks, 0.15, 0.15, 60.0, 50.0, 0.0, 0.05);
    cfg.overlay.min_correlation = 0.5;
    std::uint64_t fv = 0, flr = 0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        fv += run(cfg, StrategyKind::Virtual, seed).false_virtual_detections;
        flr += run(cfg, StrategyKind::LocalRemote, seed).false_virtual_detections;
    }
    std::printf("    false detections: virtual=%llu local_remote=%llu\n",
                (unsigned long long)fv, (unsigned long long)flr);
    return check(flr == 0, "local_remote records zero false detections") &&
           check(fv > flr, "virtual records strictly more false detections");
}

// --- 10: determinism --------------------------------------------------------

bool determinism() {
    auto cfg = monitors_and_sinks(4, 6, 2, 2, 100);
    shared_group_per_sink(cfg, 4, 6, 0.1, 0.2, 60.0, 50.0, 1.0);
    cfg.strategies = {StrategyKind::RandomBaseline, StrategyKind::Local,
                      StrategyKind::LocalRemote, StrategyKind::Virtual};
    cfg.seeds = {1, 2};
    auto a = run_matrix(cfg, 1);
    auto b = run_matrix(cfg, 4);
    if (to_csv(a) != to_csv(b)) return false;
    if (to_summary_json(a) != to_summary_json(b)) return false;
    for (auto strat : cfg.strategies) {
        std::ostringstream ta, tb;
        run(cfg, strat, 3, nullptr,
            [&ta](const Message& m) { ta << trace_line(m) << "\n"; });
        run(cfg, strat, 3, nullptr,
            [&tb](const Message& m) { tb << trace_line(m) << "\n"; });
        if (ta.str() != tb.str()) return false;
    }
    return true;
}

}  // namespace

int main() {
    criterion(1, "budget safety over randomized states and full runs", budget_safety);
    criterion(2, "frequent probing: every destination within 10 rounds", frequent_probing);
    criterion(3, "pearson/spearman match brute-force oracle within 1e-9",
              correlation_oracle);
    criterion(4, "overlay selects only within-group peers over 30 seeds",
              overlay_validity);
    criterion(5, "strategy layering is bit-exact over 10 seeds", strategy_layering);
    criterion(6, "local beats random detection ratio on >= 27/30 seeds",
              local_beats_random);
    criterion(7, "local_remote lowers mean detection lag vs local",
              remote_improves_adaptivity);
    criterion(8, "virtual coverage exceeds real budget and local_remote",
              virtual_coverage);
    criterion(9, "virtual incurs false detections, local_remote none",
              virtual_accuracy_cost);
    criterion(10, "byte-identical reports and traces on rerun", determinism);

    if (g_failures == 0) {
        std::printf("all criteria passed\n");
        return 0;
    }
    std::printf("%d criteria failed\n", g_failures);
    return 1;
}
