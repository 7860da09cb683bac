#include <algorithm>
#include <atomic>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "dflab/scenario.hpp"

namespace fs = std::filesystem;

namespace {

struct RunOutcome {
    int exit_code = 2;
    std::string summary;
};

RunOutcome run_one(const std::string& argument, const fs::path& out_root, std::optional<std::uint64_t> seed) {
    RunOutcome outcome;
    std::ostringstream os;
    try {
        const dflab::Json config = dflab::load_config(dflab::resolve_config(argument));
        const std::string name = config.value("name", fs::path(argument).stem().string());
        dflab::ScenarioOptions options;
        options.seed = seed;
        options.out = out_root / name;
        const dflab::ScenarioResult result = dflab::run_scenario(config, options);
        for (const auto& task : result.tasks)
            os << name << ": " << task.name << " [" << task.type << "] verdict " << (task.verdict ? "pass" : "fail")
               << ", expected " << (task.expect_pass ? "pass" : "fail") << (task.ok() ? "" : "  UNEXPECTED") << '\n';
        os << name << ": exit " << result.exit_code << ", report in " << options.out->string() << '\n';
        outcome.exit_code = result.exit_code;
    } catch (const dflab::ConfigError& e) {
        os << argument << ": configuration error: " << e.what() << '\n';
    } catch (const std::exception& e) {
        os << argument << ": runtime error: " << e.what() << '\n';
    }
    outcome.summary = os.str();
    return outcome;
}

int command_run(const std::vector<std::string>& configs, int jobs, const fs::path& out_root,
                std::optional<std::uint64_t> seed) {
    std::vector<RunOutcome> outcomes(configs.size());
    std::atomic<std::size_t> next{0};
    std::mutex print;
    auto worker = [&] {
        for (std::size_t i = next++; i < configs.size(); i = next++) {
            outcomes[i] = run_one(configs[i], out_root, seed);
            std::lock_guard lock(print);
            std::cout << outcomes[i].summary << std::flush;
        }
    };
    const int count = std::clamp<int>(jobs, 1, static_cast<int>(std::max<std::size_t>(configs.size(), 1)));
    std::vector<std::thread> pool;
    for (int i = 0; i < count; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    int code = 0;
    for (const auto& o : outcomes) code = std::max(code, o.exit_code);
    return code;
}

int command_dump(const std::string& argument, bool with_metric) {
    try {
        const dflab::Json config = dflab::load_config(dflab::resolve_config(argument));
        if (!config.contains("model")) throw dflab::ConfigError("config: missing key 'model'");
        const dflab::GraphForm g = dflab::build_model(dflab::parse_model(config.at("model")));
        dflab::write_graph_dump(std::cout, g);
        if (with_metric) {
            if (!config.contains("metric")) throw dflab::ConfigError("config has no metric");
            dflab::write_metric_dump(std::cout, dflab::parse_metric(config.at("metric"), g));
        }
        return 0;
    } catch (const std::exception& e) {
        std::cerr << argument << ": " << e.what() << '\n';
        return 2;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Dirichlet forms on finite graph windows"};
    app.set_version_flag("--version", std::string(dflab::kToolVersion));
    app.require_subcommand(1);

    std::vector<std::string> configs;
    int jobs = 1;
    std::string out = "dflab-out";
    std::optional<std::uint64_t> seed;
    auto* run = app.add_subcommand("run", "Run scenario configs and write reports");
    run->add_option("config", configs, "Config file or bundled scenario name")->required();
    run->add_option("--jobs,-j", jobs, "Scenarios to run in parallel")->check(CLI::PositiveNumber);
    run->add_option("--out,-o", out, "Output directory (one subdirectory per scenario)");
    run->add_option("--seed,-s", seed, "Seed overriding the config seed");

    std::string dump_config;
    bool with_metric = false;
    auto* dump = app.add_subcommand("dump-model", "Print the graph dump of a config's model");
    dump->add_option("config", dump_config, "Config file or bundled scenario name")->required();
    dump->add_flag("--metric", with_metric, "Append the metric as a lower-triangular table");

    auto* list = app.add_subcommand("list-scenarios", "List the bundled scenarios");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    if (*run) return command_run(configs, jobs, out, seed);
    if (*dump) return command_dump(dump_config, with_metric);
    if (*list) {
        for (const auto& path : dflab::bundled_scenarios()) {
            std::string description;
            try {
                description = dflab::load_config(path).value("description", "");
            } catch (const std::exception& e) {
                description = std::string("unreadable: ") + e.what();
            }
            std::cout << path.stem().string() << "\t" << description << '\n';
        }
        return 0;
    }
    return 2;
}
