#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <json.hpp>

#include "shlab/error.hpp"
#include "shlab/experiments.hpp"

using namespace shlab;
using json = nlohmann::ordered_json;

namespace {

const char* kernel_config = R"({
  "schema_version": 1, "experiment": "kernel",
  "grid": {"dim": 1, "points": 64},
  "time": {"horizon": 0.05},
  "potential": {"kind": "zero"},
  "ladder": {"upper": [1, 10, 100]},
  "kernel": {}
})";

json patched(const char* base, const std::function<void(json&)>& edit) {
    json j = json::parse(base);
    edit(j);
    return j;
}

std::filesystem::path scratch(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("shlab_test_" + name);
    std::filesystem::remove_all(dir);
    return dir;
}

} // namespace

TEST_CASE("catalog") {
    const auto& c = experiment_catalog();
    CHECK(c.size() >= 6);
    for (const char* label : {"Thm 2.1", "Thm 2.2", "Def 3.1", "Thm 4.1"}) {
        const bool found = std::any_of(c.begin(), c.end(), [&](const CatalogEntry& e) { return e.label == label; });
        CHECK_MESSAGE(found, label);
    }
    for (const auto& e : c) CHECK_FALSE(e.blocks.empty());
    CHECK(catalog_text().find("blocks: grid") != std::string::npos);
}

TEST_CASE("defaults are filled in and dt divides the horizon") {
    const json r = json::parse(resolve_config(kernel_config));
    CHECK(r["grid"]["boundary"] == "dirichlet_zero");
    CHECK(r["grid"]["half_width"] == 1.0);
    CHECK(r["ladder"]["lower"].size() == 3);
    const double dt = r["time"]["dt"];
    const double steps = 0.05 / dt;
    CHECK(steps == doctest::Approx(std::round(steps)));
    CHECK(r["output"]["prefix"] == "kernel");
    // A resolved config resolves to itself.
    CHECK(resolve_config(r.dump()) == r.dump(2));
}

TEST_CASE("schema violations") {
    auto rejects = [](const json& j) { CHECK_THROWS_AS(resolve_config(j.dump()), ValidationError); };
    rejects(patched(kernel_config, [](json& j) { j.erase("grid"); }));
    rejects(patched(kernel_config, [](json& j) { j["grid"]["typo"] = 1; }));
    rejects(patched(kernel_config, [](json& j) { j["grid"]["points"] = -4; }));
    rejects(patched(kernel_config, [](json& j) { j["time"]["horizon"] = 0; }));
    rejects(patched(kernel_config, [](json& j) { j["schema_version"] = 2; }));
    rejects(patched(kernel_config, [](json& j) { j["experiment"] = "nonsense"; }));
    rejects(patched(kernel_config, [](json& j) { j["nse"] = json::object(); }));
    rejects(patched(kernel_config, [](json& j) { j["extra"] = 1; }));
    rejects(patched(kernel_config, [](json& j) { j["potential"]["kind"] = "inverse_square"; }));
    rejects(patched(kernel_config, [](json& j) { j["ladder"]["upper"] = {3, 2, 1}; }));
    CHECK_THROWS_AS(resolve_config("{not json"), ValidationError);
}

TEST_CASE("random flows need a seed") {
    const json j = json::parse(R"({"schema_version": 1, "experiment": "nse",
        "grid": {"points": 16, "boundary": "periodic"}, "nse": {"family": "random_solenoidal"}})");
    CHECK_THROWS_AS(resolve_config(j.dump()), ValidationError);
    json k = j;
    k["nse"]["seed"] = 4;
    CHECK_NOTHROW(resolve_config(k.dump()));
}

TEST_CASE("kernel run writes artifacts and is deterministic") {
    const auto dir = scratch("kernel");
    const RunOutput a = run_experiment(kernel_config, dir.string());
    CHECK(a.artifacts.size() == 2);
    for (const auto& p : a.artifacts) CHECK(std::filesystem::exists(p));
    const json report = json::parse(a.json);
    CHECK(report["status"] == "ok");
    CHECK(report["config"]["grid"]["points"] == 64);
    CHECK(report["result"]["estimate"]["converged"] == true);
    const RunOutput b = run_experiment(kernel_config, dir.string());
    CHECK(a.json == b.json);
    std::filesystem::remove_all(dir);
}

TEST_CASE("output formats") {
    const auto dir = scratch("formats");
    const json j = patched(kernel_config, [](json& c) { c["output"] = {{"prefix", "only"}, {"formats", {"json"}}}; });
    const RunOutput r = run_experiment(j.dump(), dir.string());
    REQUIRE(r.artifacts.size() == 1);
    CHECK(std::filesystem::path(r.artifacts[0]).filename() == "only.json");
    std::filesystem::remove_all(dir);
}

TEST_CASE("required convergence turns divergence into a numerical error") {
    const json j = json::parse(R"({"schema_version": 1, "experiment": "kernel",
        "grid": {"dim": 3, "points": 16},
        "time": {"horizon": 0.1},
        "potential": {"kind": "inverse_square", "a": 1.0, "support_radius": 0.5},
        "ladder": {"upper": [4, 8, 16, 32]},
        "kernel": {"source": [0.2, 0.0667, 0.0667], "require_convergence": true},
        "output": {"formats": []}})");
    CHECK_THROWS_AS(run_experiment(j.dump(), scratch("diverge").string()), NumericalError);
}
