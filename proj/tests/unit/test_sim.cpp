#include <doctest.h>

#include <cmath>
#include <map>

#include "dmescope/dum.hpp"
#include "dmescope/errors.hpp"
#include "dmescope/oracle.hpp"
#include "dmescope/sim.hpp"
#include "support.hpp"

using namespace dmescope;
using nlohmann::json;

namespace {

std::unique_ptr<SimEnvironment> app(const std::string& name) {
    return SimEnvironment::load(test::fixture("apps/" + name + ".app.json"));
}

std::vector<std::string> titles(const SimEnvironment& env) {
    std::vector<std::string> out;
    for (const auto& r : env.store_records("notes")) out.push_back(r.at("title"));
    return out;
}

std::vector<std::string> shown(SimEnvironment& env, const Dum& dum) {
    std::vector<std::string> out;
    for (const auto& item : extract_dum_state(env.current_snapshot(), dum).items) out.push_back(item.texts.empty() ? std::string{} : item.texts.front());
    return out;
}

}  // namespace

TEST_CASE("loading reports the offending location") {
    CHECK_THROWS_AS(SimEnvironment::load("/nonexistent.app.json"), LoadError);
    CHECK_THROWS_AS(SimEnvironment::from_json(json::parse(R"({"spec_version": 2})")), LoadError);
    try {
        SimEnvironment::from_json(json::parse(R"({"spec_version": 1, "app": "x", "initial_screen": "nowhere",
                                                  "screens": {"home": {"root": {"class": "FrameLayout"}}},
                                                  "transitions": []})"));
        FAIL("expected LoadError");
    } catch (const LoadError& e) {
        CHECK(e.path() == "$.initial_screen");
    }
}

TEST_CASE("an app without stores renders and ignores Back") {
    auto env = app("empty");
    auto s = env->current_snapshot();
    CHECK(s.screen_id == "home");
    CHECK(env->app_name() == "empty");
    CHECK(env->string_table()->contains("Welcome"));
    auto r = env->perform(UiEvent::back());
    CHECK(r.valid);
    CHECK(canonical_content(env->current_snapshot()) == canonical_content(s));
    CHECK_THROWS_AS(env->store_records("notes"), LookupError);
}

TEST_CASE("clicking Add opens the create screen") {
    auto env = app("notes");
    REQUIRE(test::perform_steps(*env, json::parse(R"([{"type": "Click", "target": "add_btn"}])")));
    CHECK(env->current_snapshot().screen_id == "create");
    CHECK_FALSE(env->perform(UiEvent{EventType::Click, Locator{{}, "nope", "Button", ""}, ""}).valid);
}

TEST_CASE("creating a note updates store and list") {
    auto env = app("notes");
    REQUIRE(test::perform_steps(*env, json::parse(R"([
        {"type": "Click", "target": "add_btn"},
        {"type": "InputText", "target": "title_input", "text": "Note D"},
        {"type": "Click", "target": "ok_btn"}])")));
    auto dum = identify_dums(env->current_snapshot(), *env->string_table()).at(0);
    CHECK(titles(*env) == std::vector<std::string>{"Note A", "Note B", "Note C", "Note D"});
    CHECK(shown(*env, dum) == titles(*env));
}

TEST_CASE("skip-refresh fault leaves the list stale") {
    auto env = app("notes_delete_fault");
    auto dum = identify_dums(env->current_snapshot(), *env->string_table()).at(0);
    REQUIRE(test::perform_steps(*env, json::parse(R"([
        {"type": "Click", "target": "Note C"},
        {"type": "Click", "target": "delete_btn"},
        {"type": "Click", "target": "confirm_ok"}])")));
    CHECK(titles(*env).size() == 2);
    CHECK(shown(*env, dum).size() == 3);
    CHECK(env->faults().at(0).kind == FaultKind::SkipRefreshAfterDelete);
}

TEST_CASE("crash faults log a signature and relaunch") {
    auto env = app("bookmarks_crash_fault");
    env->drain_log();
    REQUIRE(test::perform_steps(*env, json::parse(R"([{"type": "Click", "target": "settings_btn"}])")));
    auto r = env->perform(UiEvent{EventType::Click, Locator{{}, "clear_cache", "LinearLayout", ""}, ""});
    CHECK(r.crashed);
    CHECK(env->current_snapshot().screen_id == "list");
    CHECK(detect_crash(env->drain_log()) == std::optional<std::string>("NullDeref at clear_cache_handler"));

    auto twin = app("bookmarks");
    REQUIRE(test::perform_steps(*twin, json::parse(R"([{"type": "Click", "target": "settings_btn"}])")));
    CHECK_FALSE(twin->perform(UiEvent{EventType::Click, Locator{{}, "clear_cache", "LinearLayout", ""}, ""}).crashed);
    CHECK_FALSE(detect_crash(twin->drain_log()));
}

TEST_CASE("snapshots restore state and are reusable") {
    auto env = app("notes");
    const auto a = env->save_snapshot();
    const auto b = env->save_snapshot();
    CHECK(b > a);
    const auto before = canonical_content(env->current_snapshot());
    test::perform_steps(*env, json::parse(R"([{"type": "Click", "target": "Note A"}])"));
    CHECK(canonical_content(env->current_snapshot()) != before);
    env->restore_snapshot(a);
    CHECK(canonical_content(env->current_snapshot()) == before);
    env->restore_snapshot(a);
    CHECK(canonical_content(env->current_snapshot()) == before);
    CHECK_THROWS_AS(env->restore_snapshot(9999), LookupError);
}

TEST_CASE("random event sequences round-trip through snapshots") {
    std::mt19937_64 rng(11);
    for (const char* name : {"notes", "files", "contacts", "recipes", "bookmarks_crash_fault"}) {
        auto env = app(name);
        for (int k = 0; k < 10; ++k) {
            const auto id = env->save_snapshot();
            const auto saved = canonical_content(env->current_snapshot());
            const auto records = env->store_records(env->app_name());
            for (int i = 0; i < 15; ++i) env->perform(random_event(rng, env->current_snapshot()));
            env->restore_snapshot(id);
            CAPTURE(name);
            CHECK(canonical_content(env->current_snapshot()) == saved);
            CHECK(env->store_records(env->app_name()) == records);
            for (int i = 0; i < 5; ++i) env->perform(random_event(rng, env->current_snapshot()));
        }
    }
}

TEST_CASE("random events are deterministic per seed") {
    auto run = [](std::uint64_t seed) {
        auto env = app("notes");
        std::mt19937_64 rng(seed);
        std::vector<std::string> trace;
        for (int i = 0; i < 200; ++i) {
            auto e = random_event(rng, env->current_snapshot());
            env->perform(e);
            trace.push_back(describe(e) + "|" + canonical_content(env->current_snapshot()));
        }
        return trace;
    };
    CHECK(run(3) == run(3));
    CHECK(run(3) != run(4));
}

TEST_CASE("a screen without actions only offers Back") {
    UiSnapshot s;
    s.root = test::node_at("FrameLayout", {0, 0, 1080, 1920});
    std::mt19937_64 rng(1);
    for (int i = 0; i < 20; ++i) CHECK(random_event(rng, s).type == EventType::Back);
}

TEST_CASE("random events are uniform over offered actions") {
    auto env = app("notes");
    const auto s = env->current_snapshot();
    const auto actions = enumerate_actions(s, {});
    REQUIRE(actions.size() > 2);
    std::map<std::string, int> counts;
    std::mt19937_64 rng(42);
    const int n = 10000;
    for (int i = 0; i < n; ++i) ++counts[describe(random_event(rng, s))];
    CHECK(counts.size() == actions.size());
    const double p = 1.0 / static_cast<double>(actions.size());
    const double se = std::sqrt(n * p * (1 - p));
    for (const auto& [label, c] : counts) {
        CAPTURE(label);
        CHECK(std::abs(c - n * p) <= 5 * se);
    }
}

TEST_CASE("the fault-free list always mirrors the store") {
    auto env = app("notes");
    auto dum = identify_dums(env->current_snapshot(), *env->string_table()).at(0);
    std::mt19937_64 rng(77);
    int checked = 0;
    for (int i = 0; i < 600; ++i) {
        env->perform(random_event(rng, env->current_snapshot()));
        if (env->current_snapshot().screen_id != "list") continue;
        ++checked;
        CHECK(shown(*env, dum) == titles(*env));
    }
    CHECK(checked > 20);
}
