#!/usr/bin/env python3
"""Regenerates the scripted-backend answer tables for the fixture apps.

Each flow is a list of steps (screen, reply, history marker, next general step).
Plan entries are keyed on the goal, the current screen and the markers of the
earlier steps taken on that screen; progress entries on the latest marker.
Entries are emitted most-advanced first because the first match wins.
"""
import json
import pathlib

HERE = pathlib.Path(__file__).resolve().parent

GOALS = {
    "Create": "Create a new data item in the data container",
    "Update": "Modify an existing data item in the data container",
    "Delete": "Delete a data item from the data container",
    "Read": "View the details of a data item in the data container",
    "Search": "Search for a data item in the data container",
}


def click(rid_or_text):
    return {"action": "Click", "target": rid_or_text}


def type_into(rid, text):
    return {"action": "InputText", "target": rid, "text": text}


def row(text):
    return {"action": "Click", "target": text, "row": True}


def step(screen, reply, next_step, done=False):
    marker = None if reply.pop("row", False) else f". {reply['action']} [{reply['target']}]"
    return {"screen": screen, "reply": reply, "marker": marker, "next": next_step, "done": done}


def row_marker(row_rid):
    return f". Click [{row_rid}]"


def flow_entries(dmf_type, goal, steps):
    plan, progress = [], []
    for i in reversed(range(len(steps))):
        s = steps[i]
        earlier = [p["marker"] for p in steps[:i] if p["screen"] == s["screen"]]
        plan.append({"tag": "plan",
                     "match": [f"Goal ({dmf_type}): {goal}", f"Screen: {s['screen']}\n"] + earlier,
                     "response": s["reply"]})
        progress.append({"tag": "progress",
                         "match": [f"tracking a {dmf_type} task", f"Goal: {goal}\n", s["marker"]],
                         "response": {"next_step": s["next"], "done": s["done"]}})
    return plan, progress


def with_row_markers(steps, row_rid):
    for s in steps:
        if s["marker"] is None:
            s["marker"] = row_marker(row_rid)
    return steps


def build(flows, oracle, siblings=None):
    entries_plan, entries_progress = [], []
    for dmf_type, goal, steps in flows:
        plan, progress = flow_entries(dmf_type, goal, steps)
        entries_plan += plan
        entries_progress += progress
    sibling = []
    for match, goals in (siblings or []):
        sibling.append({"tag": "sibling", "match": match, "response": {"goals": goals}})
    sibling.append({"tag": "sibling", "match": "", "response": {"goals": []}})
    return entries_plan + entries_progress + sibling + oracle


def oracle_search(keyword):
    hit = json.dumps([keyword])
    return [
        {"tag": "oracle", "match": ["Operation type: Search", f"DUM after manipulation:\n1. {hit}\n"],
         "response": {"bug": False, "reason": "the results show the matching item"}},
        {"tag": "oracle", "match": ["Operation type: Search", f". {hit}\n"],
         "response": {"bug": True, "reason": "search results omit an item matching the keyword"}},
        {"tag": "oracle", "match": "Operation type: Search",
         "response": {"bug": False, "reason": "no stored item matches the keyword"}},
    ]


ORACLE_READ = [{"tag": "oracle", "match": "Operation type: Read",
                "response": {"bug": False, "reason": "the detail page shows the selected item"}}]
ORACLE_UPDATE = [{"tag": "oracle", "match": "Operation type: Update",
                  "response": {"bug": False, "reason": "the edited item is shown as modified"}}]


def notes():
    row_rid = "note_row"
    flows = [
        ("Create", GOALS["Create"], [
            step("list", click("add_btn"), 3),
            step("create", type_into("title_input", "Note D"), 4),
            step("create", click("ok_btn"), 5, True)]),
        ("Update", GOALS["Update"], with_row_markers([
            step("list", row("Note B"), 2),
            step("detail", click("edit_btn"), 3),
            step("edit", type_into("edit_title", "Note B edited"), 4),
            step("edit", click("save_btn"), 5, True)], row_rid)),
        ("Delete", GOALS["Delete"], with_row_markers([
            step("list", row("Note C"), 2),
            step("detail", click("delete_btn"), 3),
            step("confirm", click("confirm_ok"), 4, True)], row_rid)),
        ("Read", GOALS["Read"], with_row_markers([
            step("list", row("Note A"), 3, True)], row_rid)),
        ("Search", GOALS["Search"], [
            step("list", click("search_btn"), 2),
            step("search", type_into("search_input", "Note B"), 3),
            step("search", click("go_btn"), 3, True)]),
    ]
    return build(flows, ORACLE_READ + ORACLE_UPDATE + oracle_search("Note B"))


def files():
    row_rid = "item_row"
    folder_goal = "Create a new folder in the data container"
    flows = [
        ("Create", folder_goal, [
            step("list", click("add_btn"), 2),
            step("choose_type", click("folder_type"), 3),
            step("create_folder", type_into("folder_input", "Photos"), 4),
            step("create_folder", click("folder_ok"), 5, True)]),
        ("Create", GOALS["Create"], [
            step("list", click("add_btn"), 2),
            step("choose_type", click("file_type"), 3),
            step("create_file", type_into("title_input", "notes.md"), 4),
            step("create_file", click("ok_btn"), 5, True)]),
        ("Read", GOALS["Read"], with_row_markers([
            step("list", row("report.pdf"), 3, True)], row_rid)),
    ]
    siblings = [(["Create", ". Click [file_type]", "Goals already attempted:\n- Create a new data item"],
                 [folder_goal])]
    return build(flows, ORACLE_READ, siblings)


def contacts():
    row_rid = "item_row"
    flows = [
        ("Create", GOALS["Create"], [
            step("list", click("add_btn"), 3),
            step("create", type_into("title_input", "Edsger Dijkstra"), 4),
            step("create", type_into("phone_input", "555-0104"), 4),
            step("create", click("ok_btn"), 5, True)]),
        ("Update", GOALS["Update"], with_row_markers([
            step("list", row("Alan Turing | 555-0102"), 2),
            step("detail", click("edit_btn"), 3),
            step("edit", type_into("edit_title", "Alan M. Turing"), 4),
            step("edit", click("save_btn"), 5, True)], row_rid)),
        ("Delete", GOALS["Delete"], with_row_markers([
            step("list", row("Grace Hopper | 555-0103"), 2),
            step("detail", click("delete_btn"), 3),
            step("confirm", click("confirm_ok"), 4, True)], row_rid)),
        ("Read", GOALS["Read"], with_row_markers([
            step("list", row("Ada Lovelace | 555-0101"), 3, True)], row_rid)),
    ]
    return build(flows, ORACLE_READ + ORACLE_UPDATE)


def recipes():
    row_rid = "item_row"
    flows = [
        ("Create", GOALS["Create"], [
            step("list", click("add_btn"), 3),
            step("create", type_into("title_input", "Tacos"), 4),
            step("create", type_into("cuisine_input", "Mexican"), 4),
            step("create", click("ok_btn"), 5, True)]),
        ("Read", GOALS["Read"], with_row_markers([
            step("list", row("Ramen"), 3, True)], row_rid)),
        ("Search", GOALS["Search"], [
            step("list", click("search_btn"), 2),
            step("search", type_into("search_input", "Pancakes"), 3),
            step("search", click("go_btn"), 3, True)]),
    ]
    return build(flows, ORACLE_READ + oracle_search("Pancakes"))


def bookmarks():
    row_rid = "item_row"
    flows = [
        ("Create", GOALS["Create"], [
            step("list", click("add_btn"), 3),
            step("create", type_into("title_input", "Docs"), 4),
            step("create", type_into("url_input", "https://docs.example.org"), 4),
            step("create", click("ok_btn"), 5, True)]),
        ("Delete", GOALS["Delete"], with_row_markers([
            step("list", row("Weather | https://weather.example.org"), 2),
            step("detail", click("delete_btn"), 3),
            step("confirm", click("confirm_ok"), 4, True)], row_rid)),
        ("Read", GOALS["Read"], with_row_markers([
            step("list", row("News | https://news.example.org"), 3, True)], row_rid)),
    ]
    return build(flows, ORACLE_READ)


def main():
    for name, fn in [("notes", notes), ("files", files), ("contacts", contacts), ("recipes", recipes),
                     ("bookmarks", bookmarks)]:
        (HERE / f"{name}.script.json").write_text(json.dumps(fn(), indent=2) + "\n")


if __name__ == "__main__":
    main()
