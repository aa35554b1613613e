#include <doctest.h>

#include <filesystem>
#include <random>
#include <sstream>

#include "dmescope/cli.hpp"
#include "support.hpp"

using namespace dmescope;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run cli(std::vector<std::string> args) {
    args.insert(args.begin(), "dmescope");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

struct TempDir {
    fs::path path;
    TempDir() {
        std::random_device rd;
        path = fs::temp_directory_path() / ("dmescope-cli-" + std::to_string(rd()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string operator/(const std::string& name) const { return (path / name).string(); }
};

std::vector<fs::path> files_in(const fs::path& dir) {
    std::vector<fs::path> out;
    if (!fs::exists(dir)) return out;
    for (const auto& e : fs::directory_iterator(dir)) out.push_back(e.path());
    return out;
}

}  // namespace

TEST_CASE("help and usage errors") {
    auto help = cli({"--help"});
    CHECK(help.code == kExitClean);
    CHECK(help.out.find("identify-dums") != std::string::npos);
    CHECK(cli({"fuzz", "--bogus"}).code == kExitError);
    CHECK(cli({}).code == kExitError);
}

TEST_CASE("identify-dums on an app without containers") {
    TempDir tmp;
    auto r = cli({"identify-dums", "--app", test::fixture("apps/empty.app.json"), "--out", tmp / "dums.json"});
    CHECK(r.code == kExitClean);
    CHECK(test::read_json_file(tmp / "dums.json") == nlohmann::json::array());
}

TEST_CASE("missing inputs are errors") {
    TempDir tmp;
    auto r = cli({"identify-dums", "--app", tmp / "nope.app.json", "--out", tmp / "dums.json"});
    CHECK(r.code == kExitError);
    CHECK(r.err.find("nope.app.json") != std::string::npos);
    CHECK(cli({"replay", "--app", test::fixture("apps/notes.app.json"), "--report", tmp / "missing.json"}).code ==
          kExitError);
    CHECK(cli({"collect", "--app", test::fixture("apps/notes.app.json"), "--dums", tmp / "x.json", "--llm", "magic",
               "--out", tmp / "d.json"})
              .code == kExitError);
}

TEST_CASE("the full pipeline finds and replays the delete fault") {
    TempDir tmp;
    const auto twin = test::fixture("apps/notes.app.json");
    const auto faulty = test::fixture("apps/notes_delete_fault.app.json");
    const auto llm = "script:" + test::fixture("scripts/notes.script.json");

    REQUIRE(cli({"identify-dums", "--app", twin, "--out", tmp / "dums.json"}).code == kExitClean);
    REQUIRE(test::read_json_file(tmp / "dums.json").size() == 1);
    auto collected =
        cli({"collect", "--app", twin, "--dums", tmp / "dums.json", "--llm", llm, "--out", tmp / "dmfs.json"});
    REQUIRE(collected.code == kExitClean);
    CHECK(test::read_json_file(tmp / "dmfs.json").size() == 5);

    auto clean = cli({"fuzz", "--app", twin, "--dmfs", tmp / "dmfs.json", "--llm", llm, "--budget", "200", "--seed",
                      "7", "--reports", tmp / "twin"});
    CHECK(clean.code == kExitClean);
    CHECK(files_in(tmp.path / "twin").empty());

    auto fuzz = cli({"fuzz", "--app", faulty, "--dmfs", tmp / "dmfs.json", "--llm", llm, "--budget", "200", "--seed",
                     "7", "--reports", tmp / "reports"});
    CHECK(fuzz.code == kExitBugs);
    auto reports = files_in(tmp.path / "reports");
    REQUIRE(reports.size() == 1);
    CHECK(reports[0].filename() == "report-001.json");

    auto replay = cli({"replay", "--app", faulty, "--report", reports[0].string(), "--llm", llm});
    CHECK(replay.code == kExitBugs);
    CHECK(replay.out.rfind("reproduced", 0) == 0);
    CHECK(cli({"replay", "--app", twin, "--report", reports[0].string(), "--llm", llm}).code == kExitClean);
}
