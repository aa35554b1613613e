#include <doctest.h>

#include <random>

#include "dmescope/dum.hpp"
#include "dmescope/errors.hpp"
#include "dmescope/sim.hpp"
#include "support.hpp"

using namespace dmescope;
using dmescope::test::node;
using dmescope::test::node_at;

namespace {

Widget row(const std::string& a, const std::string& b, int y) {
    Widget r = node_at("LinearLayout", {0, y, 1080, y + 120},
                       {node_at("TextView", {0, y, 540, y + 120}), node_at("TextView", {540, y, 1080, y + 120})});
    r.children[0].text = a;
    r.children[1].text = b;
    return r;
}

UiSnapshot list_of_rows() {
    UiSnapshot s;
    s.screen_id = "main";
    s.root = node_at("LinearLayout", {0, 0, 1080, 1920});
    Widget list = node_at("ListView", {0, 0, 1080, 360});
    list.resource_id = "rows";
    list.children = {row("Alice", "09:00", 0), row("Bob", "10:30", 120), row("Carol", "12:15", 240)};
    s.root.children.push_back(list);
    return s;
}

Widget button(const std::string& text, Bounds b) {
    Widget w = node_at("Button", b);
    w.text = text;
    w.flags.set(WidgetFlag::Clickable);
    return w;
}

}  // namespace

TEST_CASE("edit distance examples") {
    CHECK(tree_edit_distance(node("Text"), node("Text")) == 0);
    CHECK(tree_edit_distance(node("Linear", {node("Text")}), node("Linear", {node("Text"), node("Image")})) == 1);
    CHECK(tree_edit_distance(node("Linear", {node("Text")}), node("Frame", {node("Image")})) == 2);
}

TEST_CASE("edit distance agrees with exhaustive mapping search") {
    std::mt19937_64 rng(1234);
    for (int i = 0; i < 150; ++i) {
        auto a = test::random_tree(rng, 1 + rng() % 7, 4);
        auto b = test::random_tree(rng, 1 + rng() % 7, 4);
        REQUIRE(tree_edit_distance(a, b) == test::brute_force_edit_distance(a, b));
    }
}

TEST_CASE("edit distance is a metric on small trees") {
    std::mt19937_64 rng(99);
    for (int i = 0; i < 100; ++i) {
        auto a = test::random_tree(rng, 1 + rng() % 6, 3);
        auto b = test::random_tree(rng, 1 + rng() % 6, 3);
        auto c = test::random_tree(rng, 1 + rng() % 6, 3);
        const auto ab = tree_edit_distance(a, b);
        CHECK(ab == tree_edit_distance(b, a));
        CHECK((ab == 0) == (class_shape(a) == class_shape(b)));
        CHECK(tree_edit_distance(a, c) <= ab + tree_edit_distance(b, c));
        CHECK(tree_edit_distance(a, a) == 0);
    }
}

TEST_CASE("structure similarity examples") {
    CHECK(sim_structure(node("Linear", {node("Text")}), node("Linear", {node("Text")})) == 0.0);
    CHECK(sim_structure(node("Linear", {node("Text")}), node("Linear", {node("Text"), node("Image")})) ==
          doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(sim_structure(node("Linear", {node("Text")}), node("Frame", {node("Image")})) == 1.0);

    std::mt19937_64 rng(5);
    for (int i = 0; i < 100; ++i) {
        auto a = test::random_tree(rng, 1 + rng() % 6, 3);
        auto b = test::random_tree(rng, 1 + rng() % 6, 3);
        const double s = sim_structure(a, b);
        CHECK(s >= 0.0);
        CHECK(s <= 1.0);
        CHECK(s == sim_structure(b, a));
        CHECK((s == 0.0) == (tree_edit_distance(a, b) == 0));
    }
}

TEST_CASE("alignment examples") {
    const Bounds same{10, 20, 110, 220};
    CHECK(sim_align(node_at("A", same), node_at("B", same)) == 0.0);
    // Rows centred at (540,200) and (540,320), both 1080x100.
    CHECK(sim_align(node_at("A", {0, 150, 1080, 250}), node_at("A", {0, 270, 1080, 370})) == 0.0);
    // Centres (100,200)/(400,500), sizes 200x100/300x150.
    const Widget a = node_at("A", {0, 150, 200, 250});
    const Widget b = node_at("A", {250, 425, 550, 575});
    CHECK(sim_align(a, b) == doctest::Approx(325.0).epsilon(1e-12));
    CHECK(sim_align(b, a) == sim_align(a, b));
}

TEST_CASE("three aligned rows form one container") {
    auto dums = identify_dums(list_of_rows(), StringTable{});
    REQUIRE(dums.size() == 1);
    CHECK(dums[0].container.resource_id == "rows");
    CHECK(dums[0].members.size() == 3);
    CHECK(dums[0].screen_id == "main");
}

TEST_CASE("constant OK/Cancel buttons are not a container") {
    UiSnapshot s;
    s.root = node_at("LinearLayout", {0, 0, 1080, 200},
                     {button("Cancel", {0, 0, 540, 200}), button("OK", {540, 0, 1080, 200})});
    StringTable strings;
    strings.constants = {"OK", "Cancel"};
    CHECK(identify_dums(s, strings).empty());
    // Without the string table the same pair looks like data.
    CHECK(identify_dums(s, StringTable{}).size() == 1);
}

TEST_CASE("empty hierarchy has no containers") {
    UiSnapshot s;
    s.root = node_at("FrameLayout", {0, 0, 1080, 1920});
    CHECK(identify_dums(s, StringTable{}).empty());
}

TEST_CASE("string table parsing skips comments and blanks") {
    auto t = StringTable::parse("# labels\nOK\n\nCancel\r\n");
    CHECK(t.contains("OK"));
    CHECK(t.contains("Cancel"));
    CHECK(t.constants.size() == 2);
}

TEST_CASE("clusters are chain-linked, disjoint and not all constant") {
    auto s = list_of_rows();
    Widget extra = node_at("LinearLayout", {0, 400, 1080, 600},
                           {button("Cancel", {0, 400, 540, 600}), button("OK", {540, 400, 1080, 600})});
    s.root.children.push_back(extra);
    StringTable strings;
    strings.constants = {"OK", "Cancel"};
    auto dums = identify_dums(s, strings);
    std::set<WidgetPath> seen;
    for (const auto& d : dums) {
        CHECK(d.members.size() >= 2);
        bool any_data = false;
        for (const auto& m : d.members) {
            CHECK(seen.insert(m.path).second);
            const Widget* w = find_widget(s.root, m.path);
            REQUIRE(w);
            for (const auto& t : collect_texts(*w)) any_data = any_data || !strings.contains(t);
            bool linked = false;
            for (const auto& o : d.members) {
                if (o.path == m.path) continue;
                const Widget* v = find_widget(s.root, o.path);
                linked = linked || (sim_structure(*w, *v) <= 0.2 && sim_align(*w, *v) <= 100.0);
            }
            CHECK(linked);
        }
        CHECK(any_data);
    }
}

TEST_CASE("notes list state and matching") {
    auto env = SimEnvironment::load(test::fixture("apps/notes.app.json"));
    auto s = env->current_snapshot();
    auto dums = identify_dums(s, *env->string_table());
    REQUIRE(dums.size() == 1);
    const auto& dum = dums[0];

    auto state = extract_dum_state(s, dum);
    REQUIRE(state.items.size() == 3);
    CHECK(state.items[0].texts == std::vector<std::string>{"Note A"});
    CHECK(state.items[1].texts == std::vector<std::string>{"Note B"});
    CHECK(state.items[2].texts == std::vector<std::string>{"Note C"});

    auto grown = parse_snapshot(test::read_file(test::fixture("snapshots/notes_list_added.xml")));
    auto m = match_dum(grown, dum);
    REQUIRE(m);
    CHECK(m->members.size() == 4);

    auto detail = parse_snapshot(test::read_file(test::fixture("snapshots/notes_detail.xml")));
    CHECK_FALSE(match_dum(detail, dum));
    CHECK_THROWS_AS(extract_dum_state(detail, dum), LookupError);
}

TEST_CASE("an emptied container still matches by its locator") {
    auto s = list_of_rows();
    auto dum = identify_dums(s, StringTable{}).at(0);
    s.root.children[0].children.clear();
    auto m = match_dum(s, dum);
    REQUIRE(m);
    CHECK(m->members.empty());
    CHECK(extract_dum_state(s, dum).items.empty());
}

TEST_CASE("dum JSON round trip") {
    auto dum = identify_dums(list_of_rows(), StringTable{}).at(0);
    CHECK(dum_from_json(to_json(dum)) == dum);
}
