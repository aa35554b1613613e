// Prints one PASS/FAIL/SKIP line per acceptance criterion; exits non-zero on any FAIL.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

#include "dmescope/campaign.hpp"
#include "dmescope/cli.hpp"
#include "dmescope/dum.hpp"
#include "dmescope/oracle.hpp"
#include "dmescope/sim.hpp"
#include "support.hpp"

using namespace dmescope;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

enum class Status { Pass, Fail, Skip };

struct Result {
    Status status;
    std::string detail;
};

Result fail(std::string d) { return {Status::Fail, std::move(d)}; }
Result verdict(bool ok, std::string d) { return {ok ? Status::Pass : Status::Fail, std::move(d)}; }

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

int cli(std::vector<std::string> args, std::string* out = nullptr) {
    args.insert(args.begin(), "dmescope");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream o, e;
    const int code = run_cli(static_cast<int>(argv.size()), argv.data(), o, e);
    if (out) *out = o.str() + e.str();
    return code;
}

fs::path scratch_dir() {
    std::random_device rd;
    auto p = fs::temp_directory_path() / ("dmescope-acceptance-" + std::to_string(rd()));
    fs::create_directories(p);
    return p;
}

std::string join_types(const std::vector<DmfType>& types) {
    std::string s;
    for (auto t : types) s += (s.empty() ? "" : ",") + std::string(to_string(t));
    return s;
}

// ---- criteria ----------------------------------------------------------------

Result edit_distance_equivalence() {
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(20240501);
    int agree = 0;
    for (int i = 0; i < 500; ++i) {
        auto a = test::random_tree(rng, 1 + rng() % 8, 1 + rng() % 4);
        auto b = test::random_tree(rng, 1 + rng() % 8, 1 + rng() % 4);
        agree += tree_edit_distance(a, b) == test::brute_force_edit_distance(a, b);
    }
    const double secs = seconds_since(t0);
    std::ostringstream d;
    d << agree << "/500 agree in " << secs << " s";
    return verdict(agree == 500 && secs < 60.0, d.str());
}

Result spot_values() {
    const double s = sim_structure(test::node("Linear", {test::node("Text")}),
                                   test::node("Linear", {test::node("Text"), test::node("Image")}));
    const double a1 = sim_align(test::node_at("A", {0, 150, 1080, 250}), test::node_at("A", {0, 270, 1080, 370}));
    const double a2 = sim_align(test::node_at("A", {0, 150, 200, 250}), test::node_at("A", {250, 425, 550, 575}));
    const bool ok = std::abs(s - 1.0 / 3.0) <= 1e-9 && std::abs(a1) <= 1e-9 && std::abs(a2 - 325.0) <= 1e-9;
    std::ostringstream d;
    d << "structure " << s << ", align " << a1 << " and " << a2;
    return verdict(ok, d.str());
}

Result dum_corpus() {
    std::size_t tp = 0, fp = 0, fn = 0, screens = 0;
    std::vector<std::string> misses;
    for (const auto& entry : test::read_json_file(test::fixture("dum_corpus.json"))) {
        UiSnapshot snap;
        StringTable strings;
        if (entry.contains("snapshot")) {
            snap = parse_snapshot(test::read_file(test::fixture(entry.at("snapshot"))));
            strings = StringTable::parse(test::read_file(test::fixture(entry.at("strings"))));
        } else {
            auto env = SimEnvironment::load(test::fixture(entry.at("app")));
            if (!test::perform_steps(*env, entry.at("steps"))) {
                misses.push_back(entry.at("name").get<std::string>() + " (steps failed)");
                ++fn;
                continue;
            }
            snap = env->current_snapshot();
            strings = *env->string_table();
        }
        ++screens;
        std::set<std::string> expected;
        for (const auto& r : entry.at("expected")) expected.insert(r.get<std::string>());
        std::set<std::string> found;
        for (const auto& d : identify_dums(snap, strings)) found.insert(d.container.resource_id);
        for (const auto& f : found) expected.count(f) ? ++tp : (misses.push_back(entry.at("name").get<std::string>()), ++fp);
        for (const auto& e : expected)
            if (!found.count(e)) misses.push_back(entry.at("name").get<std::string>()), ++fn;
    }
    std::ostringstream d;
    d << screens << " screens, tp " << tp << " fp " << fp << " fn " << fn;
    for (const auto& m : misses) d << "; miss: " << m;
    return verdict(fp == 0 && fn == 0 && screens >= 6, d.str());
}

Result collection_determinism() {
    const std::vector<DmfType> all{kAllDmfTypes.begin(), kAllDmfTypes.end()};
    std::vector<json> runs;
    for (int i = 0; i < 3; ++i) {
        json arr = json::array();
        for (const auto& inst : test::collect_app(test::fixture("apps/notes.app.json"),
                                                  test::fixture("scripts/notes.script.json"), all))
            arr.push_back(to_json(inst));
        runs.push_back(std::move(arr));
    }
    const auto instances = test::collect_app(test::fixture("apps/notes.app.json"),
                                             test::fixture("scripts/notes.script.json"), all);
    std::set<DmfType> types;
    bool short_and_distinct = true;
    for (const auto& inst : instances) {
        types.insert(inst.dmf_type);
        short_and_distinct = short_and_distinct && inst.events.size() <= 10;
        for (std::size_t i = 0; i < inst.events.size(); ++i)
            for (std::size_t k = i + 1; k < inst.events.size(); ++k)
                short_and_distinct = short_and_distinct && !(inst.events[i] == inst.events[k]);
    }
    const bool identical = runs[0] == runs[1] && runs[1] == runs[2];
    std::ostringstream d;
    d << instances.size() << " instances, " << types.size() << " types, identical " << (identical ? "yes" : "no");
    return verdict(instances.size() == 5 && types.size() == 5 && identical && short_and_distinct, d.str());
}

struct FaultRun {
    std::string name;
    std::string faulty;
    std::string llm;
    std::vector<fs::path> reports;
};

/// Report key a fault of this kind should produce.
std::string expected_key_prefix(const std::string& fault) {
    if (fault == "skip_refresh_after_create") return "Logical|Create|";
    if (fault == "skip_refresh_after_delete") return "Logical|Delete|";
    if (fault == "wrong_field_on_update") return "Logical|Update|";
    if (fault == "stale_search_results") return "Logical|Search|";
    return "Crash|";
}

/// Runs identify, collect and fuzz through the CLI for every corpus pair.
Result fault_recall(const fs::path& work, std::vector<FaultRun>& runs) {
    std::ostringstream d;
    bool ok = true;
    std::set<std::string> kinds;
    std::size_t found = 0, false_positives = 0;
    const auto corpus = test::fault_corpus();
    for (const auto& c : corpus) {
        const auto name = fs::path(c.twin).stem().stem().string();
        const auto dir = work / name;
        const auto llm = "script:" + c.script;
        kinds.insert(c.fault);
        std::string out;
        if (cli({"identify-dums", "--app", c.twin, "--out", (dir / "dums.json").string()}, &out) != kExitClean ||
            cli({"collect", "--app", c.twin, "--dums", (dir / "dums.json").string(), "--llm", llm, "--types",
                 join_types(c.types), "--out", (dir / "dmfs.json").string()},
                &out) != kExitClean) {
            d << name << ": pipeline failed (" << out << "); ";
            ok = false;
            continue;
        }
        const auto fuzz = [&](const std::string& app, const fs::path& reports) {
            return cli({"fuzz", "--app", app, "--dmfs", (dir / "dmfs.json").string(), "--llm", llm, "--budget", "500",
                        "--seed", "7", "--reports", reports.string()});
        };
        const int twin_code = fuzz(c.twin, dir / "twin");
        const int faulty_code = fuzz(c.faulty, dir / "faulty");
        FaultRun run{name, c.faulty, llm, {}};
        if (fs::exists(dir / "faulty"))
            for (const auto& e : fs::directory_iterator(dir / "faulty")) run.reports.push_back(e.path());
        std::size_t twin_reports = 0;
        if (fs::exists(dir / "twin")) twin_reports = std::distance(fs::directory_iterator(dir / "twin"), {});
        false_positives += twin_reports;
        const bool matches = run.reports.size() == 1 &&
                             report_key(bug_report_from_json(test::read_json_file(run.reports[0].string())))
                                     .rfind(expected_key_prefix(c.fault), 0) == 0;
        found += matches;
        const bool this_ok = twin_code == kExitClean && faulty_code == kExitBugs && matches && twin_reports == 0;
        if (!this_ok) d << name << ": " << run.reports.size() << " report(s), twin " << twin_reports << "; ";
        ok = ok && this_ok;
        runs.push_back(std::move(run));
    }
    d << found << "/" << corpus.size() << " faults reported once, " << false_positives << " false positive(s), "
      << kinds.size() << " fault kinds";
    return verdict(ok && corpus.size() >= 5 && kinds.size() == 5, d.str());
}

Result majority_vote() {
    int right = 0;
    for (int mask = 0; mask < 8; ++mask) {
        std::vector<Verdict> v;
        int bugs = 0;
        for (int i = 0; i < 3; ++i) {
            const bool bug = (mask >> i) & 1;
            bugs += bug;
            v.push_back({bug ? Outcome::Bug : Outcome::NoBug, ""});
        }
        right += majority_bug(v) == (bugs >= 2);
    }
    return verdict(right == 8, std::to_string(right) + "/8 triples");
}

Result postconditions() {
    std::mt19937_64 rng(777);
    const std::vector<std::string> words{"a", "b", "c", "d", "new"};
    auto random_item = [&] {
        std::vector<std::string> texts;
        const auto n = 1 + rng() % 3;
        for (std::size_t i = 0; i < n; ++i) texts.push_back(words[rng() % words.size()]);
        return texts;
    };
    int agree = 0, total = 0;
    for (int i = 0; i < 1000; ++i) {
        std::vector<std::vector<std::string>> b;
        const auto n = rng() % 8;
        for (std::size_t k = 0; k < n; ++k) b.push_back(random_item());
        auto a = b;
        switch (rng() % 5) {
            case 0: a.insert(a.begin() + static_cast<long>(rng() % (a.size() + 1)), random_item()); break;
            case 1:
                if (!a.empty()) a.erase(a.begin() + static_cast<long>(rng() % a.size()));
                break;
            case 2:
                if (!a.empty()) a[rng() % a.size()] = random_item();
                break;
            case 3: a.push_back(random_item()), a.push_back(random_item()); break;
            default: break;
        }
        const auto before = test::state_of(b);
        const auto after = test::state_of(a);
        const std::optional<DataItem> target =
            DataItem{!b.empty() && rng() % 4 ? b[rng() % b.size()] : random_item(), Locator{}};
        std::vector<std::string> inputs;
        if (rng() % 3) inputs.push_back(words[rng() % words.size()]);
        for (auto t : {DmfType::Create, DmfType::Update, DmfType::Delete}) {
            ++total;
            agree += structural_postcondition(t, before, after, target, inputs).outcome ==
                     test::multiset_oracle(t, before, after, target, inputs);
        }
    }
    return verdict(agree == total, std::to_string(agree) + "/" + std::to_string(total) + " checks agree");
}

Result snapshot_round_trip() {
    auto env = SimEnvironment::load(test::fixture("apps/notes.app.json"));
    std::mt19937_64 rng(8);
    int same = 0;
    for (int i = 0; i < 100; ++i) {
        const auto prefix = rng() % 20;
        for (std::size_t k = 0; k < prefix; ++k) env->perform(random_event(rng, env->current_snapshot()));
        const auto id = env->save_snapshot();
        const auto saved = canonical_content(env->current_snapshot());
        const auto perturb = 1 + rng() % 30;
        for (std::size_t k = 0; k < perturb; ++k) env->perform(random_event(rng, env->current_snapshot()));
        env->restore_snapshot(id);
        same += canonical_content(env->current_snapshot()) == saved;
    }
    return verdict(same == 100, std::to_string(same) + "/100 sequences");
}

Result replay_fidelity(const std::vector<FaultRun>& runs) {
    std::size_t total = 0, reproduced = 0;
    std::ostringstream d;
    for (const auto& r : runs) {
        for (const auto& report : r.reports) {
            ++total;
            std::string out;
            const int code = cli({"replay", "--app", r.faulty, "--report", report.string(), "--llm", r.llm}, &out);
            if (code == kExitBugs) ++reproduced;
            else d << r.name << ": " << out << "; ";
        }
    }
    d << reproduced << "/" << total << " reports reproduced";
    return verdict(total > 0 && reproduced == total, d.str());
}

Result live_backend(const fs::path& work) {
    if (!std::getenv("DME_LLM_BASE_URL") || !std::getenv("DME_LLM_MODEL"))
        return {Status::Skip, "DME_LLM_BASE_URL and DME_LLM_MODEL not set"};
    const auto app = test::fixture("apps/notes.app.json");
    const auto dir = work / "live";
    std::string out;
    if (cli({"identify-dums", "--app", app, "--out", (dir / "dums.json").string()}, &out) != kExitClean)
        return fail("identify-dums failed: " + out);
    const int code =
        cli({"collect", "--app", app, "--dums", (dir / "dums.json").string(), "--llm", "openai", "--out",
             (dir / "dmfs.json").string()},
            &out);
    if (code != kExitClean) return fail("collect failed: " + out);
    const auto n = test::read_json_file((dir / "dmfs.json").string()).size();
    return verdict(n >= 1, std::to_string(n) + " validated instance(s)");
}

}  // namespace

int main() {
    const auto work = scratch_dir();
    std::vector<FaultRun> fault_runs;
    const std::vector<std::function<Result()>> criteria{
        edit_distance_equivalence,
        spot_values,
        dum_corpus,
        collection_determinism,
        [&] { return fault_recall(work, fault_runs); },
        majority_vote,
        postconditions,
        snapshot_round_trip,
        [&] { return replay_fidelity(fault_runs); },
        [&] { return live_backend(work); },
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Result r;
        try {
            r = criteria[i]();
        } catch (const std::exception& e) {
            r = fail(std::string("threw: ") + e.what());
        }
        const char* label = r.status == Status::Pass ? "PASS" : r.status == Status::Fail ? "FAIL" : "SKIP";
        failures += r.status == Status::Fail;
        std::cout << "criterion " << (i + 1) << ": " << label << " (" << r.detail << ")" << std::endl;
    }
    fs::remove_all(work);
    return failures == 0 ? 0 : 1;
}
