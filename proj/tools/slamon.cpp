#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "slamon/harness.hpp"

namespace fs = std::filesystem;
using namespace slamon;

namespace {

void write_file(const fs::path& p, const std::string& content) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    out << content;
}

int cmd_run(const std::string& scenario_path, const std::vector<std::string>& strategies,
            const std::vector<std::uint64_t>& seeds, const std::string& out_dir,
            bool trace, std::size_t jobs) {
    auto cfg = load_scenario(scenario_path);
    if (!strategies.empty()) {
        cfg.strategies.clear();
        for (const auto& s : strategies) cfg.strategies.push_back(strategy_from_name(s));
    }
    if (!seeds.empty()) cfg.seeds = seeds;

    fs::create_directories(out_dir);

    if (trace) {
        // Traced runs are executed serially so each log is self-contained.
        for (auto strat : cfg.strategies) {
            for (auto seed : cfg.seeds) {
                const fs::path log = fs::path(out_dir) /
                                     ("trace_" + std::string(strategy_name(strat)) + "_" +
                                      std::to_string(seed) + ".log");
                std::ofstream tl(log, std::ios::binary);
                slamon::run(cfg, strat, seed, nullptr,
                            [&tl](const Message& m) { tl << trace_line(m) << "\n"; });
            }
        }
    }

    auto res = run_matrix(cfg, jobs);
    write_file(fs::path(out_dir) / "results.csv", to_csv(res));
    write_file(fs::path(out_dir) / "summary.json", to_summary_json(res));
    std::cout << to_csv(res);
    return 0;
}

int cmd_validate(const std::string& scenario_path) {
    load_scenario(scenario_path);
    std::cout << "ok: " << scenario_path << "\n";
    return 0;
}

int cmd_report(const std::vector<std::string>& summaries, const std::string& out_dir) {
    MatrixResult res;
    std::vector<std::string> order;
    for (const auto& path : summaries) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("cannot open " + path);
        auto j = nlohmann::json::parse(in);
        for (const auto& rj : j.at("runs")) {
            auto r = report_from_json(rj);
            if (std::find(order.begin(), order.end(), r.strategy) == order.end())
                order.push_back(r.strategy);
            res.runs.push_back(std::move(r));
        }
    }
    std::stable_sort(res.runs.begin(), res.runs.end(),
                     [&](const MetricsReport& a, const MetricsReport& b) {
                         const auto ia = std::find(order.begin(), order.end(), a.strategy);
                         const auto ib = std::find(order.begin(), order.end(), b.strategy);
                         if (ia != ib) return ia < ib;
                         return a.seed < b.seed;
                     });
    res.aggregates = aggregate(res.runs, order);
    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        write_file(fs::path(out_dir) / "results.csv", to_csv(res));
        write_file(fs::path(out_dir) / "summary.json", to_summary_json(res));
    }
    std::cout << to_csv(res);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"P2P-steered SLA measurement-session activation simulator"};
    app.require_subcommand(1);

    std::string scenario_path, out_dir = "out";
    std::vector<std::string> strategies;
    std::vector<std::uint64_t> seeds;
    bool trace = false;
    std::size_t jobs = 1;

    auto* run_cmd = app.add_subcommand("run", "Run the strategy x seed matrix of a scenario");
    run_cmd->add_option("scenario", scenario_path, "Scenario file (JSON)")->required();
    run_cmd->add_option("--strategy", strategies,
                        "Strategy override (random|local|local_remote|virtual)");
    run_cmd->add_option("--seeds", seeds, "Seed list override");
    run_cmd->add_option("--out-dir", out_dir, "Output directory");
    run_cmd->add_flag("--trace", trace, "Write per-run message trace logs");
    run_cmd->add_option("--jobs", jobs, "Parallel worker count");

    auto* validate_cmd = app.add_subcommand("validate", "Validate a scenario file");
    validate_cmd->add_option("scenario", scenario_path, "Scenario file (JSON)")->required();

    std::vector<std::string> summaries;
    std::string report_out;
    auto* report_cmd = app.add_subcommand("report", "Re-aggregate existing summary files");
    report_cmd->add_option("summaries", summaries, "summary.json files")->required();
    report_cmd->add_option("--out-dir", report_out, "Output directory (optional)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run_cmd->parsed()) return cmd_run(scenario_path, strategies, seeds, out_dir, trace, jobs);
        if (validate_cmd->parsed()) return cmd_validate(scenario_path);
        if (report_cmd->parsed()) return cmd_report(summaries, report_out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
