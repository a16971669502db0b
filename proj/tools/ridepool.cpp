// Command line front end: builds shareability graphs, prices rides, selects
// offers and emits the study reports described in the README.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ridepool/experiment.hpp"
#include "ridepool/reports.hpp"

namespace {

namespace fs = std::filesystem;
using namespace ridepool;

struct CommonOptions {
    std::string config_path;
    std::string requests_path;
    std::string out_dir = ".";
    std::vector<std::string> strategies;
    std::int64_t seed = -1;
    int threads = 0;
};

void add_common(CLI::App* cmd, CommonOptions& opt) {
    cmd->add_option("--config", opt.config_path, "Scenario config file")
        ->required();
    cmd->add_option("--requests", opt.requests_path,
                    "Request CSV (overrides the config demand source)");
    cmd->add_option("--out", opt.out_dir, "Output directory");
    cmd->add_option("--strategy", opt.strategies,
                    "Strategy (personalised | flat:<x> | private); repeatable");
    cmd->add_option("--seed", opt.seed, "Random seed override");
    cmd->add_option("--threads", opt.threads, "Worker threads");
}

ScenarioConfig resolve(const CommonOptions& opt) {
    ScenarioConfig cfg = load_config(opt.config_path);
    if (!opt.requests_path.empty()) {
        cfg.demand.generate = false;
        cfg.demand.path = opt.requests_path;
    }
    if (!opt.strategies.empty()) {
        cfg.strategies.clear();
        for (const auto& s : opt.strategies)
            cfg.strategies.push_back(Strategy::parse(s));
        std::vector<double> anchors;
        for (const auto& s : cfg.strategies)
            if (s.kind == Strategy::Kind::Flat) anchors.push_back(s.flat_level);
        cfg.pricing.anchor_discounts = anchors;
    }
    if (opt.seed >= 0) cfg.seed = static_cast<std::uint64_t>(opt.seed);
    if (opt.threads > 0) cfg.threads = opt.threads;
    return cfg;
}

void write_stage_outputs(const PipelineResult& result,
                         const ScenarioConfig& cfg, const std::string& out_dir,
                         bool rides, bool priced, bool offers, bool reports) {
    fs::create_directories(out_dir);
    if (cfg.demand.generate)
        write_requests((fs::path(out_dir) / "requests.csv").string(),
                       result.requests);
    if (rides)
        write_rides_csv((fs::path(out_dir) / "rides.csv").string(), result.graph);
    if (priced || offers) {
        for (const auto& report : result.reports) {
            const fs::path dir =
                result.reports.size() == 1
                    ? fs::path(out_dir)
                    : fs::path(out_dir) / report.name;
            fs::create_directories(dir);
            if (priced)
                write_priced_csv((dir / "priced.csv").string(), report.priced);
            if (offers)
                write_offer_csv((dir / "offer.csv").string(), report.offer,
                                result.graph, report.priced);
        }
    }
    if (reports) emit_reports(result.reports, out_dir);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Personalised ride-pooling discount optimizer"};
    app.require_subcommand(1);

    CommonOptions opt;
    auto* cmd_graph =
        app.add_subcommand("graph", "Build the shareability graph (rides.csv)");
    auto* cmd_price =
        app.add_subcommand("price", "Price every ride (priced.csv)");
    auto* cmd_match =
        app.add_subcommand("match", "Select the optimal offer (offer.csv)");
    auto* cmd_run =
        app.add_subcommand("run", "Full pipeline: graph, price, match, reports");
    auto* cmd_report =
        app.add_subcommand("report", "Full pipeline, emit report files only");
    for (auto* cmd : {cmd_graph, cmd_price, cmd_match, cmd_run, cmd_report})
        add_common(cmd, opt);

    CLI11_PARSE(app, argc, argv);

    try {
        const ScenarioConfig cfg = resolve(opt);
        if (cmd_graph->parsed()) {
            PipelineResult result;
            result.requests = cfg.demand.generate
                                  ? generate_demand(cfg.demand, cfg.seed)
                                  : load_requests(cfg.demand.path);
            result.graph = build_graph(result.requests, cfg.provider(),
                                       cfg.mixture(), cfg.graph, cfg.pricing.rho);
            write_stage_outputs(result, cfg, opt.out_dir, true, false, false,
                                false);
        } else {
            const PipelineResult result = run_pipeline(cfg);
            if (cmd_price->parsed())
                write_stage_outputs(result, cfg, opt.out_dir, true, true, false,
                                    false);
            else if (cmd_match->parsed())
                write_stage_outputs(result, cfg, opt.out_dir, true, true, true,
                                    false);
            else if (cmd_run->parsed())
                write_stage_outputs(result, cfg, opt.out_dir, true, true, true,
                                    true);
            else
                write_stage_outputs(result, cfg, opt.out_dir, false, false,
                                    false, true);
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
