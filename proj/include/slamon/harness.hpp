#pragma once

#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "slamon/scenario.hpp"
#include "slamon/simnet.hpp"

namespace slamon {

namespace detail {

using json = nlohmann::json;

inline void check_keys(const json& obj, const std::string& where,
                       std::initializer_list<const char*> allowed) {
    for (const auto& [key, _] : obj.items()) {
        bool ok = false;
        for (const char* a : allowed)
            if (key == a) ok = true;
        if (!ok)
            throw std::invalid_argument("unknown field '" + where + key + "'");
    }
}

inline PathModel parse_path(const json& j, const std::string& where) {
    check_keys(j, where, {"src", "dst", "base_latency", "noise_sd", "group", "cross_noise"});
    PathModel p;
    p.base_latency = j.value("base_latency", 50.0);
    p.noise_sd = j.value("noise_sd", 0.0);
    p.group = j.value("group", std::string());
    p.cross_noise = j.value("cross_noise", 0.0);
    return p;
}

}  // namespace detail

inline ScenarioConfig parse_scenario(const nlohmann::json& j) {
    using detail::check_keys;
    check_keys(j, "", {"devices", "rounds", "seeds", "strategies", "slo", "budget",
                       "rank", "overlay", "message_drop", "destinations", "neighbors",
                       "groups", "paths", "default_path"});
    ScenarioConfig cfg;
    if (!j.contains("devices")) throw std::invalid_argument("missing field 'devices'");
    cfg.devices = j.at("devices").get<std::size_t>();
    if (!j.contains("rounds")) throw std::invalid_argument("missing field 'rounds'");
    cfg.rounds = j.at("rounds").get<Round>();

    if (!j.contains("slo")) throw std::invalid_argument("missing field 'slo'");
    {
        const auto& s = j.at("slo");
        check_keys(s, "slo.", {"metric_id", "threshold", "direction"});
        cfg.slo.metric_id = s.value("metric_id", std::string("latency_ms"));
        if (!s.contains("threshold"))
            throw std::invalid_argument("missing field 'slo.threshold'");
        cfg.slo.threshold = s.at("threshold").get<double>();
        const std::string dir = s.value("direction", std::string("above"));
        if (dir == "above") cfg.slo.direction = SloDirection::ViolatedAbove;
        else if (dir == "below") cfg.slo.direction = SloDirection::ViolatedBelow;
        else throw std::invalid_argument("slo.direction: must be 'above' or 'below'");
    }
    if (j.contains("budget")) {
        const auto& b = j.at("budget");
        check_keys(b, "budget.", {"local_max", "virtual_max"});
        if (b.contains("local_max") && b.at("local_max").get<long long>() < 1)
            throw std::invalid_argument("budget.local_max: must be >= 1");
        cfg.budget.local_max = b.value("local_max", std::size_t{1});
        cfg.budget.virtual_max = b.value("virtual_max", std::size_t{0});
    }
    if (j.contains("rank")) {
        const auto& rkj = j.at("rank");
        check_keys(rkj, "rank.",
                   {"window", "discount", "proximity_weight", "staleness_weight",
                    "spread_penalty"});
        cfg.rank.window = rkj.value("window", std::size_t{20});
        cfg.rank.discount = rkj.value("discount", 0.95);
        cfg.rank.proximity_weight = rkj.value("proximity_weight", 1.0);
        cfg.rank.staleness_weight = rkj.value("staleness_weight", 1.0);
        cfg.rank.spread_penalty = rkj.value("spread_penalty", 0.0);
    }
    if (j.contains("overlay")) {
        const auto& ov = j.at("overlay");
        check_keys(ov, "overlay.",
                   {"min_correlation", "max_peers", "min_shared_samples", "method",
                    "topology_period"});
        cfg.overlay.min_correlation = ov.value("min_correlation", 0.7);
        cfg.overlay.max_peers = ov.value("max_peers", std::size_t{4});
        cfg.overlay.min_shared_samples = ov.value("min_shared_samples", std::size_t{5});
        cfg.overlay.topology_period = ov.value("topology_period", Round{10});
        const std::string m = ov.value("method", std::string("pearson"));
        if (m == "pearson") cfg.overlay.method = CorrMethod::Pearson;
        else if (m == "spearman") cfg.overlay.method = CorrMethod::Spearman;
        else throw std::invalid_argument("overlay.method: must be 'pearson' or 'spearman'");
    }
    cfg.message_drop = j.value("message_drop", 0.0);

    if (!j.contains("destinations"))
        throw std::invalid_argument("missing field 'destinations'");
    for (const auto& [key, val] : j.at("destinations").items()) {
        const DeviceId dev = static_cast<DeviceId>(std::stoul(key));
        cfg.destinations[dev] = val.get<std::vector<DestinationId>>();
    }
    if (j.contains("neighbors")) {
        for (const auto& [key, val] : j.at("neighbors").items()) {
            const DeviceId dev = static_cast<DeviceId>(std::stoul(key));
            cfg.neighbors[dev] = val.get<std::vector<DeviceId>>();
        }
    }
    if (j.contains("groups")) {
        for (const auto& [name, g] : j.at("groups").items()) {
            detail::check_keys(g, "groups." + name + ".",
                               {"p_enter", "p_exit", "offset", "start_violating"});
            GroupProcess p;
            p.p_enter = g.value("p_enter", 0.0);
            p.p_exit = g.value("p_exit", 0.0);
            p.offset = g.value("offset", 0.0);
            p.start_violating = g.value("start_violating", false);
            cfg.groups[name] = p;
        }
    }
    if (j.contains("paths")) {
        std::size_t i = 0;
        for (const auto& pj : j.at("paths")) {
            const std::string where = "paths[" + std::to_string(i) + "].";
            auto p = detail::parse_path(pj, where);
            if (!pj.contains("src") || !pj.contains("dst"))
                throw std::invalid_argument(where + "src/dst: required");
            cfg.paths[{pj.at("src").get<DeviceId>(), pj.at("dst").get<DestinationId>()}] = p;
            ++i;
        }
    }
    if (j.contains("default_path"))
        cfg.default_path = detail::parse_path(j.at("default_path"), "default_path.");

    if (j.contains("strategies"))
        for (const auto& s : j.at("strategies"))
            cfg.strategies.push_back(strategy_from_name(s.get<std::string>()));
    if (j.contains("seeds"))
        cfg.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();

    cfg.validate();
    return cfg;
}

inline ScenarioConfig load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open scenario file: " + path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw std::invalid_argument(path + ": " + e.what());
    }
    return parse_scenario(j);
}

struct AggregateRow {
    std::string strategy;
    std::string stat;  // "mean" or "sd"
    double true_detections = 0, missed_violations = 0, false_virtual_detections = 0;
    double detection_ratio = 0, mean_detection_lag = 0;
    double real_sessions = 0, coverage = 0, messages_total = 0;
};

struct MatrixResult {
    std::vector<MetricsReport> runs;       // ordered by (strategy, seed)
    std::vector<AggregateRow> aggregates;  // mean + sd per strategy
};

inline std::vector<AggregateRow> aggregate(const std::vector<MetricsReport>& runs,
                                           const std::vector<std::string>& order) {
    std::vector<AggregateRow> out;
    for (const auto& strat : order) {
        std::vector<const MetricsReport*> rs;
        for (const auto& r : runs)
            if (r.strategy == strat) rs.push_back(&r);
        if (rs.empty()) continue;
        auto stat = [&](auto field) {
            double mean = 0, sd = 0;
            for (auto* r : rs) mean += field(*r);
            mean /= static_cast<double>(rs.size());
            for (auto* r : rs) {
                const double d = field(*r) - mean;
                sd += d * d;
            }
            sd = rs.size() > 1 ? std::sqrt(sd / static_cast<double>(rs.size() - 1)) : 0.0;
            return std::pair<double, double>(mean, sd);
        };
        AggregateRow mean{strat, "mean"}, sd{strat, "sd"};
        auto put = [&](double AggregateRow::* m, auto field) {
            auto [a, b] = stat(field);
            mean.*m = a;
            sd.*m = b;
        };
        put(&AggregateRow::true_detections,
            [](const MetricsReport& r) { return double(r.true_detections); });
        put(&AggregateRow::missed_violations,
            [](const MetricsReport& r) { return double(r.missed_violations); });
        put(&AggregateRow::false_virtual_detections,
            [](const MetricsReport& r) { return double(r.false_virtual_detections); });
        put(&AggregateRow::detection_ratio,
            [](const MetricsReport& r) { return r.detection_ratio; });
        put(&AggregateRow::mean_detection_lag,
            [](const MetricsReport& r) { return r.mean_detection_lag; });
        put(&AggregateRow::real_sessions,
            [](const MetricsReport& r) { return r.real_sessions_per_device_per_round; });
        put(&AggregateRow::coverage,
            [](const MetricsReport& r) { return r.coverage_per_device_per_round; });
        put(&AggregateRow::messages_total,
            [](const MetricsReport& r) { return double(r.messages.total()); });
        out.push_back(mean);
        out.push_back(sd);
    }
    return out;
}

// Runs every (strategy, seed) pair of the config. Results are ordered by
// (strategy, seed) regardless of worker completion order.
inline MatrixResult run_matrix(const ScenarioConfig& cfg, std::size_t jobs = 1) {
    cfg.validate();
    if (cfg.strategies.empty())
        throw std::invalid_argument("strategies: must be non-empty");
    if (cfg.seeds.empty())
        throw std::invalid_argument("seeds: must be non-empty");

    struct Task {
        StrategyKind strategy;
        std::uint64_t seed;
    };
    std::vector<Task> tasks;
    for (auto s : cfg.strategies)
        for (auto seed : cfg.seeds) tasks.push_back({s, seed});

    MatrixResult res;
    res.runs.resize(tasks.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= tasks.size()) return;
            res.runs[i] = run(cfg, tasks[i].strategy, tasks[i].seed);
        }
    };
    if (jobs <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t i = 0; i < std::min(jobs, tasks.size()); ++i)
            pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    std::vector<std::string> order;
    for (auto s : cfg.strategies) order.push_back(strategy_name(s));
    res.aggregates = aggregate(res.runs, order);
    return res;
}

inline std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

inline const char* csv_header() {
    return "strategy,seed,rounds,total_violation_rounds,true_detections,"
           "missed_violations,false_virtual_detections,detection_ratio,"
           "mean_detection_lag,real_sessions_per_device_per_round,"
           "coverage_per_device_per_round,msg_reports,msg_adverts,"
           "msg_coord_requests,msg_coord_responses,msg_stops,msg_dropped";
}

inline std::string to_csv(const MatrixResult& res) {
    std::ostringstream out;
    out << csv_header() << "\n";
    for (const auto& r : res.runs) {
        out << r.strategy << ',' << r.seed << ',' << r.rounds << ','
            << r.total_violation_rounds << ',' << r.true_detections << ','
            << r.missed_violations << ',' << r.false_virtual_detections << ','
            << format_double(r.detection_ratio) << ','
            << format_double(r.mean_detection_lag) << ','
            << format_double(r.real_sessions_per_device_per_round) << ','
            << format_double(r.coverage_per_device_per_round) << ','
            << r.messages.reports << ',' << r.messages.adverts << ','
            << r.messages.coord_requests << ',' << r.messages.coord_responses << ','
            << r.messages.stops << ',' << r.messages.dropped << "\n";
    }
    for (const auto& a : res.aggregates) {
        out << a.strategy << ',' << a.stat << ",,," << format_double(a.true_detections)
            << ',' << format_double(a.missed_violations) << ','
            << format_double(a.false_virtual_detections) << ','
            << format_double(a.detection_ratio) << ','
            << format_double(a.mean_detection_lag) << ','
            << format_double(a.real_sessions) << ',' << format_double(a.coverage)
            << ',' << format_double(a.messages_total) << ",,,,,\n";
    }
    return out.str();
}

inline nlohmann::json report_to_json(const MetricsReport& r) {
    return {{"strategy", r.strategy},
            {"seed", r.seed},
            {"rounds", r.rounds},
            {"total_violation_rounds", r.total_violation_rounds},
            {"true_detections", r.true_detections},
            {"missed_violations", r.missed_violations},
            {"false_virtual_detections", r.false_virtual_detections},
            {"detection_ratio", r.detection_ratio},
            {"mean_detection_lag", r.mean_detection_lag},
            {"real_sessions_per_device_per_round", r.real_sessions_per_device_per_round},
            {"coverage_per_device_per_round", r.coverage_per_device_per_round},
            {"messages",
             {{"reports", r.messages.reports},
              {"adverts", r.messages.adverts},
              {"coord_requests", r.messages.coord_requests},
              {"coord_responses", r.messages.coord_responses},
              {"stops", r.messages.stops},
              {"dropped", r.messages.dropped}}}};
}

inline MetricsReport report_from_json(const nlohmann::json& j) {
    MetricsReport r;
    r.strategy = j.at("strategy").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.rounds = j.at("rounds").get<Round>();
    r.total_violation_rounds = j.at("total_violation_rounds").get<std::uint64_t>();
    r.true_detections = j.at("true_detections").get<std::uint64_t>();
    r.missed_violations = j.at("missed_violations").get<std::uint64_t>();
    r.false_virtual_detections = j.at("false_virtual_detections").get<std::uint64_t>();
    r.detection_ratio = j.at("detection_ratio").get<double>();
    r.mean_detection_lag = j.at("mean_detection_lag").get<double>();
    r.real_sessions_per_device_per_round =
        j.at("real_sessions_per_device_per_round").get<double>();
    r.coverage_per_device_per_round = j.at("coverage_per_device_per_round").get<double>();
    const auto& m = j.at("messages");
    r.messages.reports = m.at("reports").get<std::uint64_t>();
    r.messages.adverts = m.at("adverts").get<std::uint64_t>();
    r.messages.coord_requests = m.at("coord_requests").get<std::uint64_t>();
    r.messages.coord_responses = m.at("coord_responses").get<std::uint64_t>();
    r.messages.stops = m.at("stops").get<std::uint64_t>();
    r.messages.dropped = m.at("dropped").get<std::uint64_t>();
    return r;
}

inline std::string to_summary_json(const MatrixResult& res) {
    nlohmann::json j;
    j["runs"] = nlohmann::json::array();
    for (const auto& r : res.runs) j["runs"].push_back(report_to_json(r));
    j["aggregates"] = nlohmann::json::array();
    for (const auto& a : res.aggregates) {
        j["aggregates"].push_back({{"strategy", a.strategy},
                                   {"stat", a.stat},
                                   {"true_detections", a.true_detections},
                                   {"missed_violations", a.missed_violations},
                                   {"false_virtual_detections", a.false_virtual_detections},
                                   {"detection_ratio", a.detection_ratio},
                                   {"mean_detection_lag", a.mean_detection_lag},
                                   {"real_sessions_per_device_per_round", a.real_sessions},
                                   {"coverage_per_device_per_round", a.coverage},
                                   {"messages_total", a.messages_total}});
    }
    return j.dump(2) + "\n";
}

}  // namespace slamon
