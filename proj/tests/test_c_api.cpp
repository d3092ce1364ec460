#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <string>

#include "shlab/shlab.h"

namespace {

const char* config = R"({"schema_version": 1, "experiment": "kernel",
  "grid": {"dim": 1, "points": 32}, "time": {"horizon": 0.05},
  "potential": {"kind": "zero"}, "ladder": {"upper": [1, 10, 100]}, "kernel": {}})";

} // namespace

TEST_CASE("version and catalog") {
    CHECK(std::strlen(shlab_version()) > 0);
    CHECK(shlab_catalog_size() >= 6);
    CHECK(std::string(shlab_catalog()).find("Thm 4.1") != std::string::npos);
    CHECK(shlab_catalog_name(shlab_catalog_size()) == nullptr);
    CHECK(std::string(shlab_catalog_label(0)).size() > 0);
}

TEST_CASE("successful run") {
    const auto dir = std::filesystem::temp_directory_path() / "shlab_capi";
    std::filesystem::remove_all(dir);
    CHECK(shlab_set_threads(1) == SHLAB_OK);
    shlab_report* r = nullptr;
    REQUIRE(shlab_run(config, dir.c_str(), &r) == SHLAB_OK);
    CHECK(shlab_report_status(r) == SHLAB_OK);
    CHECK(std::string(shlab_report_json(r)).find("\"schema_version\"") != std::string::npos);
    CHECK(shlab_report_artifact_count(r) == 2);
    CHECK(std::filesystem::exists(shlab_report_artifact(r, 0)));
    CHECK(shlab_report_artifact(r, 2) == nullptr);
    shlab_report_free(r);
    std::filesystem::remove_all(dir);
}

TEST_CASE("failures carry a status and a reason") {
    shlab_report* r = nullptr;
    CHECK(shlab_run("{\"schema_version\": 1, \"experiment\": \"kernel\"}", nullptr, &r) == SHLAB_ERR_VALIDATION);
    CHECK(std::string(shlab_report_message(r)).find("grid") != std::string::npos);
    CHECK(std::string(shlab_report_json(r)).empty());
    shlab_report_free(r);
    CHECK(shlab_run(config, nullptr, nullptr) == SHLAB_ERR_VALIDATION);
    CHECK(shlab_set_threads(-2) == SHLAB_ERR_VALIDATION);
    shlab_report_free(nullptr);
}

TEST_CASE("resolve") {
    shlab_report* r = nullptr;
    REQUIRE(shlab_resolve(config, &r) == SHLAB_OK);
    CHECK(std::string(shlab_report_json(r)).find("dt_per_h2") != std::string::npos);
    shlab_report_free(r);
}
