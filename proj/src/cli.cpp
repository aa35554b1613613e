#include "dmescope/cli.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include <CLI11.hpp>

#include "dmescope/campaign.hpp"
#include "dmescope/errors.hpp"
#include "dmescope/planner.hpp"
#include "dmescope/remote_env.hpp"
#include "dmescope/sim.hpp"

namespace dmescope {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Globals {
    double structure_threshold = 0.2;
    double align_threshold = 100.0;
    std::size_t max_steps = kDefaultMaxSteps;
    bool verbose = false;
};

std::unique_ptr<Environment> open_app(const std::string& app) {
    if (app.rfind("tcp://", 0) == 0) {
        std::string host;
        std::uint16_t port = 0;
        if (!parse_tcp_address(app, host, port)) throw ContractError("bad remote address '" + app + "'");
        return std::make_unique<RemoteEnvironment>(host, port);
    }
    return SimEnvironment::load(app);
}

std::unique_ptr<LlmBackend> open_backend(const std::string& spec) {
    if (spec.empty()) return nullptr;
    if (spec.rfind("script:", 0) == 0) return std::make_unique<ScriptedBackend>(ScriptedBackend::load(spec.substr(7)));
    if (spec == "openai" || spec == "http") {
        auto cfg = HttpBackend::config_from_env();
        if (!cfg) throw ContractError("set DME_LLM_BASE_URL and DME_LLM_MODEL to use the HTTP backend");
        return std::make_unique<HttpBackend>(*cfg);
    }
    throw ContractError("unknown LLM backend '" + spec + "' (use script:<file> or openai)");
}

json read_json(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw LoadError(path, "cannot open file");
    std::stringstream ss;
    ss << in.rdbuf();
    auto j = json::parse(ss.str(), nullptr, false);
    if (j.is_discarded()) throw LoadError(path, "not valid JSON");
    return j;
}

void write_json(const std::string& path, const json& j) {
    if (auto parent = fs::path(path).parent_path(); !parent.empty()) fs::create_directories(parent);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw LoadError(path, "cannot write file");
    out << j.dump(2) << '\n';
}

void print_log(std::ostream& err, const Globals& g, const std::vector<std::string>& log) {
    if (!g.verbose) return;
    for (const auto& l : log) err << l << '\n';
}

std::size_t calibrate_steps(Environment& env, double minutes) {
    const auto id = env.save_snapshot();
    std::mt19937_64 rng(0);
    constexpr int kProbe = 200;
    const auto t0 = std::chrono::steady_clock::now();
    for (int i = 0; i < kProbe; ++i) env.perform(random_event(rng, env.current_snapshot()));
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    env.restore_snapshot(id);
    env.drain_log();
    const double rate = kProbe / std::max(secs, 1e-6);
    return static_cast<std::size_t>(std::max(1.0, rate * minutes * 60.0));
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Finds data manipulation errors in GUI apps.", "dmescope"};
    app.set_config("--config", "", "Read options from a key=value config file");
    app.require_subcommand(1);

    Globals g;
    app.add_option("--structure-threshold", g.structure_threshold, "Max normalised tree edit distance within a DUM")
        ->capture_default_str();
    app.add_option("--align-threshold", g.align_threshold, "Max alignment distance (pixels) within a DUM")
        ->capture_default_str();
    app.add_option("--max-steps", g.max_steps, "Max UI events per DMF instance")->capture_default_str();
    app.add_flag("-v,--verbose", g.verbose, "Print progress logs to stderr");

    std::string app_path, strings_path, out_path, llm, dums_path, dmfs_path, reports_dir, report_path;
    std::size_t explore_budget = 0;
    std::size_t budget = 500;
    double minutes = 0;
    std::uint64_t seed = 7;
    double interleave = 3.0;
    int attempts = 1;
    std::vector<std::string> types;
    int port = 0;
    std::string bind = "127.0.0.1";

    auto* identify = app.add_subcommand("identify-dums", "Find data containers and write dums.json");
    identify->add_option("--app", app_path, "App spec file or tcp://host:port")->required();
    identify->add_option("--strings", strings_path, "String-constant table, one per line");
    identify->add_option("--llm", llm, "Explorer backend: script:<file> or openai");
    identify->add_option("--budget", explore_budget, "Exploration steps after the launch screen")->capture_default_str();
    identify->add_option("--seed", seed, "Seed for random exploration")->envname("DME_SEED");
    identify->add_option("--out", out_path, "Output dums.json")->required();

    auto* collect = app.add_subcommand("collect", "Collect validated DMF instances and write dmfs.json");
    collect->add_option("--app", app_path, "App spec file or tcp://host:port")->required();
    collect->add_option("--dums", dums_path, "dums.json from identify-dums")->required();
    collect->add_option("--llm", llm, "Planner backend: script:<file> or openai")->required();
    collect->add_option("--attempts", attempts, "Attempts per goal")->capture_default_str();
    collect->add_option("--types", types, "Operation types to collect (default: all)")->delimiter(',');
    collect->add_option("--out", out_path, "Output dmfs.json")->required();

    auto* fuzz = app.add_subcommand("fuzz", "Replay DMFs interleaved with random events and report DMEs");
    fuzz->add_option("--app", app_path, "App spec file or tcp://host:port")->required();
    fuzz->add_option("--dmfs", dmfs_path, "dmfs.json from collect")->required();
    fuzz->add_option("--budget", budget, "Total UI events to perform")->capture_default_str();
    fuzz->add_option("--minutes", minutes, "Wall-clock budget, converted to events by calibration");
    fuzz->add_option("--seed", seed, "Random seed")->envname("DME_SEED")->capture_default_str();
    fuzz->add_option("--interleave", interleave, "Mean random events before each DMF")->capture_default_str();
    fuzz->add_option("--llm", llm, "Oracle backend for semantic checks: script:<file> or openai");
    fuzz->add_option("--reports", reports_dir, "Directory for report-NNN.json files")->required();

    auto* replay = app.add_subcommand("replay", "Re-run a bug report and re-judge it");
    replay->add_option("--app", app_path, "App spec file or tcp://host:port")->required();
    replay->add_option("--report", report_path, "A report-NNN.json file")->required();
    replay->add_option("--llm", llm, "Oracle backend: script:<file> or openai");

    auto* serve = app.add_subcommand("serve", "Serve a simulated app over the remote-environment protocol");
    serve->add_option("--app", app_path, "App spec file")->required();
    serve->add_option("--port", port, "TCP port (0 picks one)")->capture_default_str();
    serve->add_option("--bind", bind, "Listen address")->capture_default_str();

    std::vector<std::string> args;
    for (int i = argc - 1; i > 0; --i) args.emplace_back(argv[i]);
    try {
        app.parse(args);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitClean;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitClean;
    } catch (const CLI::ParseError& e) {
        err << "dmescope: " << e.what() << '\n';
        return kExitError;
    }

    DumConfig dum_cfg;
    dum_cfg.structure_threshold = g.structure_threshold;
    dum_cfg.align_threshold = g.align_threshold;

    try {
        if (identify->parsed()) {
            auto env = open_app(app_path);
            auto backend = open_backend(llm);
            ExploreConfig cfg;
            cfg.budget = explore_budget;
            cfg.seed = seed;
            cfg.dum = dum_cfg;
            if (!strings_path.empty()) {
                std::ifstream in(strings_path, std::ios::binary);
                if (!in) throw LoadError(strings_path, "cannot open string table");
                std::stringstream ss;
                ss << in.rdbuf();
                cfg.strings = StringTable::parse(ss.str());
            }
            auto found = explore_for_dums(*env, backend.get(), cfg);
            json arr = json::array();
            for (const auto& r : found) arr.push_back(to_json(r));
            write_json(out_path, arr);
            out << "identified " << found.size() << " data container(s)\n";
            return kExitClean;
        }

        if (collect->parsed()) {
            auto env = open_app(app_path);
            auto backend = open_backend(llm);
            const auto dums = read_json(dums_path);
            if (!dums.is_array()) throw LoadError(dums_path, "expected a JSON array");
            CollectConfig cfg;
            cfg.max_steps = g.max_steps;
            cfg.attempts_per_goal = attempts;
            if (!types.empty()) {
                cfg.types.clear();
                for (const auto& t : types) cfg.types.push_back(dmf_type_from_string(t));
            }
            const SnapshotId launch = env->save_snapshot();
            json arr = json::array();
            std::size_t total = 0;
            for (const auto& dj : dums) {
                auto rec = dum_record_from_json(dj);
                env->restore_snapshot(launch);
                if (!replay_setup(*env, rec.setup)) {
                    err << "dmescope: setup for " << rec.dum.container.describe() << " no longer applies; skipped\n";
                    continue;
                }
                env->drain_log();
                const auto baseline = env->save_snapshot();
                auto res = collect_dmfs(*env, baseline, rec.dum, *backend, cfg, rec.setup);
                print_log(err, g, res.log);
                for (const auto& inst : res.instances) arr.push_back(to_json(inst));
                total += res.instances.size();
            }
            write_json(out_path, arr);
            const auto u = backend->usage();
            out << "collected " << total << " DMF instance(s) using " << u.requests << " model request(s)\n";
            return kExitClean;
        }

        if (fuzz->parsed()) {
            auto env = open_app(app_path);
            auto backend = open_backend(llm);
            const auto dj = read_json(dmfs_path);
            if (!dj.is_array()) throw LoadError(dmfs_path, "expected a JSON array");
            std::vector<DmfInstance> dmfs;
            for (const auto& d : dj) dmfs.push_back(dmf_from_json(d));
            if (dmfs.empty()) {
                out << "no DMF instances to fuzz\n";
                return kExitClean;
            }
            CampaignConfig cfg;
            cfg.budget = minutes > 0 ? calibrate_steps(*env, minutes) : budget;
            cfg.seed = seed;
            cfg.interleave_ratio = interleave;
            auto res = run_campaign(*env, dmfs, backend.get(), cfg);
            print_log(err, g, res.log);

            fs::create_directories(reports_dir);
            for (const auto& entry : fs::directory_iterator(reports_dir)) {
                const auto name = entry.path().filename().string();
                if (name.rfind("report-", 0) == 0 && entry.path().extension() == ".json") fs::remove(entry.path());
            }
            for (std::size_t i = 0; i < res.reports.size(); ++i) {
                char name[32];
                std::snprintf(name, sizeof name, "report-%03zu.json", i + 1);
                write_json((fs::path(reports_dir) / name).string(), to_json(res.reports[i]));
            }
            out << "performed " << res.steps << " event(s) over " << res.trials << " trial(s); " << res.reports.size()
                << " report(s)\n";
            for (const auto& r : res.reports) out << "  " << report_key(r) << '\n';
            if (res.error) {
                err << "dmescope: " << *res.error << '\n';
                return kExitError;
            }
            return res.reports.empty() ? kExitClean : kExitBugs;
        }

        if (replay->parsed()) {
            auto env = open_app(app_path);
            auto backend = open_backend(llm);
            const auto report = bug_report_from_json(read_json(report_path));
            auto outcome = replay_report(*env, report, backend.get());
            out << (outcome.reproduced ? "reproduced" : "not reproduced") << ": " << outcome.detail << '\n';
            return outcome.reproduced ? kExitBugs : kExitClean;
        }

        if (serve->parsed()) {
            auto env = SimEnvironment::load(app_path);
            if (port < 0 || port > 65535) throw ContractError("port out of range");
            EnvironmentServer server(*env, static_cast<std::uint16_t>(port), bind);
            out << "serving " << env->app_name() << " on " << bind << ":" << server.port() << std::endl;
            server.serve_forever();
            return kExitClean;
        }
    } catch (const std::exception& e) {
        err << "dmescope: " << e.what() << '\n';
        return kExitError;
    }
    return kExitError;
}

}  // namespace dmescope
