#include <sstream>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "dmescope/campaign.hpp"
#include "dmescope/cli.hpp"
#include "dmescope/dum.hpp"
#include "dmescope/errors.hpp"
#include "dmescope/planner.hpp"
#include "dmescope/sim.hpp"

namespace py = pybind11;
using namespace dmescope;
using nlohmann::json;

// Structured values cross the boundary as JSON text; the Python package
// decodes them into dicts and lists.

namespace {

json parse(const std::string& text) { return json::parse(text); }

std::unique_ptr<LlmBackend> scripted(const std::string& path) {
    if (path.empty()) return nullptr;
    return std::make_unique<ScriptedBackend>(ScriptedBackend::load(path));
}

std::string explore(const std::string& app, std::size_t budget, std::uint64_t seed) {
    auto env = SimEnvironment::load(app);
    ExploreConfig cfg;
    cfg.budget = budget;
    cfg.seed = seed;
    json out = json::array();
    for (const auto& r : explore_for_dums(*env, nullptr, cfg)) out.push_back(to_json(r));
    return out.dump();
}

std::string collect(const std::string& app, const std::string& dums, const std::string& script,
                    const std::vector<std::string>& types) {
    auto env = SimEnvironment::load(app);
    auto backend = ScriptedBackend::load(script);
    CollectConfig cfg;
    if (!types.empty()) {
        cfg.types.clear();
        for (const auto& t : types) cfg.types.push_back(dmf_type_from_string(t));
    }
    const auto launch = env->save_snapshot();
    json out = json::array();
    for (const auto& j : parse(dums)) {
        const auto rec = dum_record_from_json(j);
        env->restore_snapshot(launch);
        if (!replay_setup(*env, rec.setup)) continue;
        env->drain_log();
        const auto baseline = env->save_snapshot();
        for (const auto& inst : collect_dmfs(*env, baseline, rec.dum, backend, cfg, rec.setup).instances)
            out.push_back(to_json(inst));
    }
    return out.dump();
}

std::string fuzz(const std::string& app, const std::string& dmfs, const std::string& script, std::size_t budget,
                 std::uint64_t seed) {
    auto env = SimEnvironment::load(app);
    auto backend = scripted(script);
    std::vector<DmfInstance> instances;
    for (const auto& j : parse(dmfs)) instances.push_back(dmf_from_json(j));
    CampaignConfig cfg;
    cfg.budget = budget;
    cfg.seed = seed;
    const auto res = run_campaign(*env, instances, backend.get(), cfg);
    json reports = json::array();
    for (const auto& r : res.reports) reports.push_back(to_json(r));
    json out{{"reports", reports}, {"steps", res.steps}, {"trials", res.trials}, {"aborted", res.aborted}};
    if (res.error) out["error"] = *res.error;
    return out.dump();
}

std::string replay(const std::string& app, const std::string& report, const std::string& script) {
    auto env = SimEnvironment::load(app);
    auto backend = scripted(script);
    const auto outcome = replay_report(*env, bug_report_from_json(parse(report)), backend.get());
    json out{{"reproduced", outcome.reproduced}, {"detail", outcome.detail}};
    if (outcome.report) out["report"] = to_json(*outcome.report);
    return out.dump();
}

py::tuple run_cli_captured(std::vector<std::string> args) {
    args.insert(args.begin(), "dmescope");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return py::make_tuple(code, out.str(), err.str());
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Native core of dmescope";
    py::register_exception<Error>(m, "Error", PyExc_RuntimeError);

    m.def("tree_edit_distance", [](const std::string& a, const std::string& b) {
        return tree_edit_distance(widget_from_json(parse(a)), widget_from_json(parse(b)));
    });
    m.def("sim_structure", [](const std::string& a, const std::string& b) {
        return sim_structure(widget_from_json(parse(a)), widget_from_json(parse(b)));
    });
    m.def(
        "sim_align",
        [](const std::string& a, const std::string& b, double lambda) {
            return sim_align(widget_from_json(parse(a)), widget_from_json(parse(b)), lambda);
        },
        py::arg("a"), py::arg("b"), py::arg("lambda_") = 0.5);
    m.def("parse_snapshot", [](const std::string& xml) { return to_json(parse_snapshot(xml)).dump(); });
    m.def("serialize_snapshot", [](const std::string& s) { return serialize_snapshot(snapshot_from_json(parse(s))); });
    m.def(
        "identify_dums",
        [](const std::string& snapshot, const std::vector<std::string>& strings, double structure, double align) {
            StringTable table;
            table.constants.insert(strings.begin(), strings.end());
            DumConfig cfg;
            cfg.structure_threshold = structure;
            cfg.align_threshold = align;
            json out = json::array();
            for (const auto& d : identify_dums(snapshot_from_json(parse(snapshot)), table, cfg)) out.push_back(to_json(d));
            return out.dump();
        },
        py::arg("snapshot"), py::arg("strings"), py::arg("structure_threshold") = 0.2,
        py::arg("align_threshold") = 100.0);

    py::class_<SimEnvironment>(m, "SimApp")
        .def(py::init([](const std::string& path) { return SimEnvironment::load(path); }))
        .def_property_readonly("name", &SimEnvironment::app_name)
        .def("snapshot", [](SimEnvironment& e) { return to_json(e.current_snapshot()).dump(); })
        .def("actions",
             [](SimEnvironment& e) { return to_json(std::span<const UiEvent>(enumerate_actions(e.current_snapshot(), {}))).dump(); })
        .def("perform",
             [](SimEnvironment& e, const std::string& event) {
                 const auto r = e.perform(event_from_json(parse(event)));
                 return py::make_tuple(r.valid, r.crashed, r.message);
             })
        .def("save", &SimEnvironment::save_snapshot)
        .def("restore", &SimEnvironment::restore_snapshot)
        .def("drain_log", &SimEnvironment::drain_log)
        .def("describe", &SimEnvironment::screen_description)
        .def("records", &SimEnvironment::store_records);

    m.def("explore", &explore, py::arg("app"), py::arg("budget") = 0, py::arg("seed") = 0);
    m.def("collect", &collect, py::arg("app"), py::arg("dums"), py::arg("script"),
          py::arg("types") = std::vector<std::string>{});
    m.def("fuzz", &fuzz, py::arg("app"), py::arg("dmfs"), py::arg("script") = "", py::arg("budget") = 500,
          py::arg("seed") = 7);
    m.def("replay", &replay, py::arg("app"), py::arg("report"), py::arg("script") = "");
    m.def("run_cli", &run_cli_captured);
}
