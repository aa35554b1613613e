#!/usr/bin/env python3
"""Regenerates the simulator app specs in this directory.

notes.app.json is hand-written; every other spec is built here so that the
fault-injected variants differ from their fault-free twins only in `faults`.
"""
import copy
import json
import pathlib

HERE = pathlib.Path(__file__).resolve().parent
RECYCLER = "androidx.recyclerview.widget.RecyclerView"


def button(rid, text, size=None):
    b = {"class": "Button", "id": rid, "text": text, "flags": ["clickable"]}
    if size:
        b["size"] = size
    return b


def toolbar(title, *buttons):
    children = [{"class": "TextView", "id": "app_title", "text": title,
                 "size": 1080 - 240 * len(buttons)}]
    children += [button(rid, text, 240) for rid, text in buttons]
    return {"class": "LinearLayout", "id": "toolbar", "layout": "horizontal", "size": 160,
            "children": children}


def header(title):
    return {"class": "LinearLayout", "id": "toolbar", "size": 160, "children": [
        {"class": "TextView", "id": "screen_title", "text": title}]}


def button_row(*buttons):
    return {"class": "LinearLayout", "id": "buttons", "layout": "horizontal", "size": 160,
            "children": [button(rid, text) for rid, text in buttons]}


def screen(*children):
    return {"root": {"class": "LinearLayout", "id": "root",
                     "children": list(children) + [{"class": "View", "id": "spacer"}]}}


def bound_list(rid, store, item, query=None):
    bind = {"store": store, "item": item}
    if query:
        bind["query"] = True
        bind["query_field"] = query
    return {"class": RECYCLER, "id": rid, "flags": ["scrollable"], "bind": bind}


def edit(rid, size, text=None):
    e = {"class": "EditText", "id": rid, "size": size}
    if text:
        e["text"] = text
    return e


def nav(tid, scr, target, to):
    return {"id": tid, "screen": scr, "on": {"type": "Click", "target": target},
            "effects": [{"kind": "navigate", "to": to}]}


def spec(app, strings, stores, screens, transitions):
    return {"spec_version": 1, "app": app, "initial_screen": "list", "string_table": strings,
            "stores": stores, "screens": screens, "transitions": transitions}


def files_app():
    row = {"class": "LinearLayout", "id": "item_row", "layout": "horizontal", "flags": ["clickable"],
           "size": 140, "children": [
               {"class": "ImageView", "id": "kind_icon", "size": 140},
               {"class": "TextView", "id": "item_name", "text": "{name}"}]}
    screens = {
        "list": screen(toolbar("Files", ("add_btn", "New")), bound_list("item_list", "files", row)),
        "choose_type": screen(header("Create new"),
                              button("file_type", "File", 160), button("folder_type", "Folder", 200),
                              button_row(("cancel_btn", "Cancel"))),
        "create_file": screen(header("New file"), edit("title_input", 160),
                              button_row(("cancel_file", "Cancel"), ("ok_btn", "OK"))),
        "create_folder": screen(header("New folder"), edit("folder_input", 160),
                                button_row(("cancel_folder", "Cancel"), ("folder_ok", "OK"))),
        "detail": screen({"class": "TextView", "id": "detail_name", "text": "{selected.name}", "size": 200},
                         {"class": "TextView", "id": "detail_kind", "text": "{selected.kind}", "size": 600}),
    }
    transitions = [
        nav("open_create", "list", "add_btn", "choose_type"),
        nav("choose_file", "choose_type", "file_type", "create_file"),
        nav("choose_folder", "choose_type", "folder_type", "create_folder"),
        nav("cancel_choose", "choose_type", "cancel_btn", "list"),
        {"id": "create_file_ok", "screen": "create_file", "on": {"type": "Click", "target": "ok_btn"},
         "effects": [{"kind": "store_insert", "store": "files",
                      "values": {"name": "{input:title_input}", "kind": "file"}},
                     {"kind": "navigate", "to": "list"}]},
        nav("cancel_file", "create_file", "cancel_file", "list"),
        {"id": "create_folder_ok", "screen": "create_folder", "on": {"type": "Click", "target": "folder_ok"},
         "effects": [{"kind": "store_insert", "store": "files",
                      "values": {"name": "{input:folder_input}", "kind": "folder"}},
                     {"kind": "navigate", "to": "list"}]},
        nav("cancel_folder", "create_folder", "cancel_folder", "list"),
        nav("open_item", "list", "item_row", "detail"),
    ]
    stores = {"files": {"fields": ["name", "kind"], "records": [
        {"name": "Documents", "kind": "folder"},
        {"name": "report.pdf", "kind": "file"},
        {"name": "todo.txt", "kind": "file"}]}}
    strings = ["Files", "New", "Create new", "File", "Folder", "Cancel", "New file", "New folder", "OK",
               "file", "folder"]
    return spec("files", strings, stores, screens, transitions)


def contacts_app():
    row = {"class": "LinearLayout", "id": "item_row", "flags": ["clickable"], "size": 160, "children": [
        {"class": "TextView", "id": "contact_name", "text": "{name}", "size": 90},
        {"class": "TextView", "id": "contact_phone", "text": "{phone}"}]}
    screens = {
        "list": screen(toolbar("Contacts", ("add_btn", "Add")), bound_list("item_list", "contacts", row)),
        "create": screen(header("New contact"), edit("title_input", 160), edit("phone_input", 420),
                         button_row(("cancel_btn", "Cancel"), ("ok_btn", "OK"))),
        "detail": screen({"class": "TextView", "id": "detail_name", "text": "{selected.name}", "size": 200},
                         {"class": "TextView", "id": "detail_phone", "text": "{selected.phone}", "size": 450},
                         {"class": "TextView", "id": "detail_notes", "text": "{selected.notes}", "size": 800},
                         button_row(("edit_btn", "Edit"), ("delete_btn", "Delete"))),
        "edit": screen(header("Edit contact"), edit("edit_title", 160, "{selected.name}"),
                       edit("edit_phone", 420, "{selected.phone}"),
                       button_row(("cancel_edit", "Cancel"), ("save_btn", "Save"))),
        "confirm": screen(header("Delete this contact?"),
                          button_row(("cancel_delete", "Cancel"), ("confirm_ok", "OK"))),
    }
    transitions = [
        nav("open_create", "list", "add_btn", "create"),
        {"id": "create_ok", "screen": "create", "on": {"type": "Click", "target": "ok_btn"},
         "effects": [{"kind": "store_insert", "store": "contacts",
                      "values": {"name": "{input:title_input}", "phone": "{input:phone_input}"}},
                     {"kind": "navigate", "to": "@back"}]},
        nav("create_cancel", "create", "cancel_btn", "@back"),
        nav("open_item", "list", "item_row", "detail"),
        nav("open_edit", "detail", "edit_btn", "edit"),
        {"id": "save_edit", "screen": "edit", "on": {"type": "Click", "target": "save_btn"},
         "effects": [{"kind": "store_update", "store": "contacts",
                      "values": {"name": "{input:edit_title}", "phone": "{input:edit_phone}"}},
                     {"kind": "navigate", "to": "list"}]},
        nav("cancel_edit", "edit", "cancel_edit", "@back"),
        nav("ask_delete", "detail", "delete_btn", "confirm"),
        {"id": "confirm_delete", "screen": "confirm", "on": {"type": "Click", "target": "confirm_ok"},
         "effects": [{"kind": "store_delete", "store": "contacts"}, {"kind": "navigate", "to": "list"}]},
        nav("cancel_delete", "confirm", "cancel_delete", "@back"),
    ]
    stores = {"contacts": {"fields": ["name", "phone", "notes"], "records": [
        {"name": "Ada Lovelace", "phone": "555-0101", "notes": "met at the conference"},
        {"name": "Alan Turing", "phone": "555-0102", "notes": ""},
        {"name": "Grace Hopper", "phone": "555-0103", "notes": "prefers email"}]}}
    strings = ["Contacts", "Add", "New contact", "Cancel", "OK", "Edit", "Delete", "Edit contact", "Save",
               "Delete this contact?"]
    return spec("contacts", strings, stores, screens, transitions)


def recipes_app():
    row = {"class": "LinearLayout", "id": "item_row", "flags": ["clickable"], "size": 150, "children": [
        {"class": "TextView", "id": "recipe_title", "text": "{title}"}]}
    result = copy.deepcopy(row)
    result["id"] = "result_row"
    result["flags"] = []
    screens = {
        "list": screen(toolbar("Recipes", ("add_btn", "Add"), ("search_btn", "Search")),
                       bound_list("item_list", "recipes", row)),
        "create": screen(header("New recipe"), edit("title_input", 160), edit("cuisine_input", 420),
                         button_row(("cancel_btn", "Cancel"), ("ok_btn", "OK"))),
        "detail": screen({"class": "TextView", "id": "detail_title", "text": "{selected.title}", "size": 200},
                         {"class": "TextView", "id": "detail_cuisine", "text": "{selected.cuisine}",
                          "size": 500}),
        "search": screen(header("Search recipes"), edit("search_input", 160), button("go_btn", "Go", 120),
                         bound_list("result_list", "recipes", result, query="title")),
    }
    transitions = [
        nav("open_create", "list", "add_btn", "create"),
        {"id": "create_ok", "screen": "create", "on": {"type": "Click", "target": "ok_btn"},
         "effects": [{"kind": "store_insert", "store": "recipes",
                      "values": {"title": "{input:title_input}", "cuisine": "{input:cuisine_input}"}},
                     {"kind": "navigate", "to": "@back"}]},
        nav("create_cancel", "create", "cancel_btn", "@back"),
        nav("open_item", "list", "item_row", "detail"),
        nav("open_search", "list", "search_btn", "search"),
        {"id": "run_search", "screen": "search", "on": {"type": "Click", "target": "go_btn"},
         "effects": [{"kind": "store_query", "container": "result_list", "input": "search_input"}]},
    ]
    stores = {"recipes": {"fields": ["title", "cuisine"], "records": [
        {"title": "Pancakes", "cuisine": "American"},
        {"title": "Ramen", "cuisine": "Japanese"},
        {"title": "Risotto", "cuisine": "Italian"}]}}
    strings = ["Recipes", "Add", "Search", "New recipe", "Cancel", "OK", "Search recipes", "Go"]
    return spec("recipes", strings, stores, screens, transitions)


def bookmarks_app():
    row = {"class": "LinearLayout", "id": "item_row", "flags": ["clickable"], "size": 160, "children": [
        {"class": "TextView", "id": "bookmark_title", "text": "{title}", "size": 90},
        {"class": "TextView", "id": "bookmark_url", "text": "{url}"}]}
    setting = {"class": "LinearLayout", "layout": "horizontal", "size": 140, "flags": ["clickable"]}
    settings_list = {"class": "LinearLayout", "id": "settings_list", "size": 420, "children": [
        dict(setting, id="clear_cache", children=[{"class": "TextView", "text": "Clear cache"}]),
        dict(setting, id="export", children=[{"class": "TextView", "text": "Export bookmarks"}]),
        dict(setting, id="about", children=[{"class": "TextView", "text": "About"}]),
    ]}
    screens = {
        "list": screen(toolbar("Bookmarks", ("add_btn", "Add"), ("settings_btn", "Settings")),
                       bound_list("item_list", "bookmarks", row)),
        "create": screen(header("New bookmark"), edit("title_input", 160), edit("url_input", 420),
                         button_row(("cancel_btn", "Cancel"), ("ok_btn", "OK"))),
        "detail": screen({"class": "TextView", "id": "detail_title", "text": "{selected.title}", "size": 200},
                         {"class": "TextView", "id": "detail_url", "text": "{selected.url}", "size": 500},
                         button_row(("delete_btn", "Delete"))),
        "confirm": screen(header("Delete this bookmark?"),
                          button_row(("cancel_delete", "Cancel"), ("confirm_ok", "OK"))),
        "settings": screen(header("Settings"), settings_list),
    }
    transitions = [
        nav("open_create", "list", "add_btn", "create"),
        {"id": "create_ok", "screen": "create", "on": {"type": "Click", "target": "ok_btn"},
         "effects": [{"kind": "store_insert", "store": "bookmarks",
                      "values": {"title": "{input:title_input}", "url": "{input:url_input}"}},
                     {"kind": "navigate", "to": "@back"}]},
        nav("create_cancel", "create", "cancel_btn", "@back"),
        nav("open_item", "list", "item_row", "detail"),
        nav("ask_delete", "detail", "delete_btn", "confirm"),
        {"id": "confirm_delete", "screen": "confirm", "on": {"type": "Click", "target": "confirm_ok"},
         "effects": [{"kind": "store_delete", "store": "bookmarks"}, {"kind": "navigate", "to": "list"}]},
        nav("cancel_delete", "confirm", "cancel_delete", "@back"),
        nav("open_settings", "list", "settings_btn", "settings"),
        {"id": "clear_cache", "screen": "settings", "on": {"type": "Click", "target": "clear_cache"},
         "effects": [{"kind": "navigate", "to": "@back"}]},
        {"id": "export", "screen": "settings", "on": {"type": "Click", "target": "export"},
         "effects": [{"kind": "none"}]},
        {"id": "about", "screen": "settings", "on": {"type": "Click", "target": "about"},
         "effects": [{"kind": "none"}]},
    ]
    stores = {"bookmarks": {"fields": ["title", "url"], "records": [
        {"title": "News", "url": "https://news.example.org"},
        {"title": "Weather", "url": "https://weather.example.org"},
        {"title": "Maps", "url": "https://maps.example.org"}]}}
    strings = ["Bookmarks", "Add", "Settings", "New bookmark", "Cancel", "OK", "Delete", "Delete this bookmark?",
               "Clear cache", "Export bookmarks", "About"]
    return spec("bookmarks", strings, stores, screens, transitions)


def dashboard_app():
    card = {"class": "LinearLayout", "id": "fav_card", "flags": ["clickable"], "size": 300, "children": [
        {"class": "ImageView", "id": "fav_icon", "size": 200},
        {"class": "TextView", "id": "fav_label", "text": "{name}"}]}
    recent = {"class": "LinearLayout", "id": "recent_row", "layout": "horizontal", "flags": ["clickable"],
              "size": 130, "children": [
                  {"class": "TextView", "id": "recent_title", "text": "{title}", "size": 760},
                  {"class": "TextView", "id": "recent_when", "text": "{when}"}]}
    favorites = bound_list("favorites", "places", card)
    favorites.update({"layout": "horizontal", "size": 420, "flags": ["h_scrollable"]})
    screens = {"list": screen(toolbar("Dashboard"),
                              {"class": "TextView", "id": "fav_header", "text": "Favorites", "size": 100},
                              favorites,
                              {"class": "TextView", "id": "recent_header", "text": "Recent", "size": 100},
                              bound_list("recent", "visits", recent),
                              button_row(("cancel_btn", "Cancel"), ("ok_btn", "OK")))}
    stores = {"places": {"fields": ["name"], "records": [{"name": "Home"}, {"name": "Work"}, {"name": "Gym"}]},
              "visits": {"fields": ["title", "when"], "records": [
                  {"title": "Cafe Luna", "when": "today"}, {"title": "Library", "when": "yesterday"}]}}
    return spec("dashboard", ["Dashboard", "Favorites", "Recent", "Cancel", "OK"], stores, screens, [])


FAULTS = {
    "notes": {"kind": "skip_refresh_after_delete", "anchor": "confirm_delete"},
    "files": {"kind": "skip_refresh_after_create", "anchor": "create_file_ok"},
    "contacts": {"kind": "wrong_field_on_update", "anchor": "save_edit", "field": "notes"},
    "recipes": {"kind": "stale_search_results", "anchor": "run_search"},
    "bookmarks": {"kind": "crash_on_effect", "anchor": "clear_cache", "error": "NullDeref",
                  "handler": "clear_cache_handler"},
}

FAULTY_NAMES = {
    "notes": "notes_delete_fault",
    "files": "files_create_fault",
    "contacts": "contacts_update_fault",
    "recipes": "recipes_search_fault",
    "bookmarks": "bookmarks_crash_fault",
}


def write(name, data):
    path = HERE / f"{name}.app.json"
    path.write_text(json.dumps(data, indent=2) + "\n")


def main():
    apps = {
        "notes": json.loads((HERE / "notes.app.json").read_text()),
        "files": files_app(),
        "contacts": contacts_app(),
        "recipes": recipes_app(),
        "bookmarks": bookmarks_app(),
    }
    for name, data in apps.items():
        if name != "notes":
            write(name, data)
        faulty = copy.deepcopy(data)
        faulty["faults"] = [FAULTS[name]]
        write(FAULTY_NAMES[name], faulty)
    write("dashboard", dashboard_app())
    write("empty", {"spec_version": 1, "app": "empty", "initial_screen": "home",
                    "string_table": ["Welcome"],
                    "screens": {"home": {"root": {"class": "FrameLayout", "id": "root", "children": [
                        {"class": "TextView", "id": "welcome", "text": "Welcome"}]}}},
                    "transitions": []})


if __name__ == "__main__":
    main()
