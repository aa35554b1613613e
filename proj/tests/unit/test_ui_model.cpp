#include <doctest.h>

#include <algorithm>
#include <set>

#include "dmescope/errors.hpp"
#include "dmescope/ui_model.hpp"
#include "support.hpp"

using namespace dmescope;
using dmescope::test::fixture;
using dmescope::test::read_file;

namespace {

UiSnapshot load(const std::string& rel) { return parse_snapshot(read_file(fixture(rel))); }

const Widget& item_list(const UiSnapshot& s) { return s.root.children.at(1); }

}  // namespace

TEST_CASE("single-node XML parses to one widget") {
    auto s = parse_snapshot(R"(<node class="FrameLayout" bounds="[0,0][1080,1920]"/>)");
    CHECK(s.root.widget_class == "FrameLayout");
    CHECK(s.root.children.empty());
    CHECK(s.root.bounds == Bounds{0, 0, 1080, 1920});
}

TEST_CASE("notes list dump holds three structurally identical rows") {
    auto s = load("snapshots/notes_list.xml");
    CHECK(s.screen_id == "list");
    const auto& list = item_list(s);
    CHECK(list.resource_id == "item_list");
    REQUIRE(list.children.size() == 3);
    CHECK(list.flags.has(WidgetFlag::Scrollable));
    for (const auto& row : list.children) {
        CHECK(row.widget_class == list.children[0].widget_class);
        REQUIRE(row.children.size() == 1);
        CHECK(row.children[0].widget_class == "TextView");
    }
    CHECK(list.children[1].children[0].text == "Note B");
}

TEST_CASE("malformed documents report a byte offset") {
    const std::string truncated = R"(<hierarchy><node class="A" bounds="[0,0][1,1]">)";
    try {
        parse_snapshot(truncated);
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.offset() <= truncated.size());
        CHECK(std::string(e.what()).find("byte") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_snapshot(R"(<node class="A" bounds="[0,0][1080]"/>)"), ParseError);
    CHECK_THROWS_AS(parse_snapshot(R"(<node class="A" bounds="[9,9][1,1]"/>)"), ParseError);
    CHECK_THROWS_AS(parse_snapshot("{\"root\": 3"), ParseError);
}

TEST_CASE("unknown attributes are ignored") {
    auto s = parse_snapshot(R"(<node class="A" bounds="[0,0][1,1]" password="false" foo="bar"/>)");
    CHECK(s.root.widget_class == "A");
}

TEST_CASE("serialize round-trips every snapshot fixture") {
    for (const char* rel : {"snapshots/notes_list.xml", "snapshots/notes_list_added.xml", "snapshots/notes_detail.xml",
                            "snapshots/shopping_list.xml"}) {
        CAPTURE(rel);
        auto s = load(rel);
        const auto once = serialize_snapshot(s);
        auto again = parse_snapshot(once);
        CHECK(again == s);
        CHECK(serialize_snapshot(again) == once);
    }
}

TEST_CASE("canonical JSON has sorted keys") {
    auto s = parse_snapshot(R"(<node class="A" text="t" resource-id="r" bounds="[0,0][1,1]"/>)");
    const auto j = nlohmann::json::parse(serialize_snapshot(s));
    std::vector<std::string> keys;
    for (auto it = j.begin(); it != j.end(); ++it) keys.push_back(it.key());
    CHECK(std::is_sorted(keys.begin(), keys.end()));
    CHECK(j.at("root").at("bounds") == nlohmann::json::array({0, 0, 1, 1}));
}

TEST_CASE("one clickable button gives Click then Back") {
    auto s = parse_snapshot(
        R"(<node class="FrameLayout" bounds="[0,0][100,100]"><node class="Button" resource-id="b" text="Go" clickable="true" bounds="[0,0][50,50]"/></node>)");
    auto actions = enumerate_actions(s, {});
    REQUIRE(actions.size() == 2);
    CHECK(actions[0].type == EventType::Click);
    CHECK(actions[0].target->resource_id == "b");
    CHECK(actions[1].type == EventType::Back);

    std::vector<UiEvent> history{actions[0]};
    auto rest = enumerate_actions(s, history);
    REQUIRE(rest.size() == 1);
    CHECK(rest[0].type == EventType::Back);
}

TEST_CASE("editable field and scrollable list offer InputText and Scroll") {
    auto list = load("snapshots/notes_list.xml");
    auto actions = enumerate_actions(list, {});
    auto count = [&](EventType t) {
        return std::count_if(actions.begin(), actions.end(), [&](const UiEvent& e) { return e.type == t; });
    };
    CHECK(count(EventType::Scroll) == 2);
    CHECK(count(EventType::Back) == 1);
    CHECK(actions.back().type == EventType::Back);

    auto form = parse_snapshot(
        R"(<node class="LinearLayout" bounds="[0,0][100,100]"><node class="android.widget.EditText" resource-id="name" bounds="[0,0][100,50]"/></node>)");
    auto fa = enumerate_actions(form, {});
    REQUIRE(fa.size() == 2);
    CHECK(fa[0].type == EventType::InputText);
    CHECK(fa[0].payload.empty());

    // A typed InputText on the same field counts as already executed.
    UiEvent typed = fa[0];
    typed.payload = "hello";
    std::vector<UiEvent> history{typed};
    CHECK(enumerate_actions(form, history).size() == 1);
}

TEST_CASE("enumerated actions are distinct") {
    for (const char* rel : {"snapshots/notes_list.xml", "snapshots/shopping_list.xml", "snapshots/notes_detail.xml"}) {
        auto actions = enumerate_actions(load(rel), {});
        std::set<std::string> seen;
        for (const auto& a : actions) CHECK(seen.insert(nlohmann::json(to_json(a)).dump()).second);
    }
}

TEST_CASE("event descriptions") {
    auto s = load("snapshots/notes_list.xml");
    auto actions = enumerate_actions(s, {});
    CHECK(describe(actions[0]) == R"(Click [add_btn] Button "Add")");
    CHECK(describe(UiEvent::back()) == "Back");
}

TEST_CASE("locators survive list growth") {
    auto before = load("snapshots/notes_list.xml");
    auto after = load("snapshots/notes_list_added.xml");
    const auto loc = make_locator(before.root, {1, 2});
    CHECK(loc.text == "Note C");
    auto path = resolve(after, loc);
    REQUIRE(path);
    CHECK(find_widget(after.root, *path)->children[0].text == "Note C");
}

TEST_CASE("diff of identical snapshots is empty") {
    auto s = load("snapshots/notes_list.xml");
    CHECK(diff_snapshots(s, s).empty());
    auto later = s;
    later.capture_seq += 5;
    CHECK(diff_snapshots(s, later).empty());
}

TEST_CASE("diff of an added row") {
    auto before = load("snapshots/notes_list.xml");
    auto after = load("snapshots/notes_list_added.xml");
    auto d = diff_snapshots(before, after);
    REQUIRE(d.added.size() == 1);
    CHECK(d.added[0].signature.find("Note D") != std::string::npos);
    CHECK(d.removed.empty());
    CHECK_FALSE(d.screen_transition);

    auto back = diff_snapshots(after, before);
    REQUIRE(back.removed.size() == 1);
    CHECK(back.removed[0].signature == d.added[0].signature);
    CHECK(back.added.empty());
}

TEST_CASE("screen label change sets the transition") {
    auto a = parse_snapshot(R"(<hierarchy screen="MainActivity"><node class="A" bounds="[0,0][1,1]"/></hierarchy>)");
    auto b = parse_snapshot(R"(<hierarchy screen="EditActivity"><node class="A" bounds="[0,0][1,1]"/></hierarchy>)");
    auto d = diff_snapshots(a, b);
    REQUIRE(d.screen_transition);
    CHECK(d.screen_transition->from == "MainActivity");
    CHECK(d.screen_transition->to == "EditActivity");
}

TEST_CASE("text edits show up as text changes") {
    auto a = parse_snapshot(R"(<node class="A" bounds="[0,0][9,9]"><node class="T" resource-id="t" text="old" bounds="[0,0][9,9]"/></node>)");
    auto b = parse_snapshot(R"(<node class="A" bounds="[0,0][9,9]"><node class="T" resource-id="t" text="new" bounds="[0,0][9,9]"/></node>)");
    auto d = diff_snapshots(a, b);
    REQUIRE(d.text_changed.size() == 1);
    CHECK(d.text_changed[0].old_text == "old");
    CHECK(d.text_changed[0].new_text == "new");
    CHECK(render_diff(d).find("old") != std::string::npos);
}

TEST_CASE("screen description lists widgets with ids and flags") {
    auto text = screen_description(load("snapshots/notes_list.xml"));
    CHECK(text.rfind("Screen: list\n", 0) == 0);
    CHECK(text.find(R"(Button[add_btn] "Add" (clickable))") != std::string::npos);
}
