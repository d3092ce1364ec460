#pragma once

#include <string>
#include <vector>

namespace shlab {

struct CatalogEntry {
    std::string name;    // experiment or experiment/mode
    std::string label;   // theorem / definition the experiment instantiates
    std::string summary;
    std::vector<std::string> blocks;  // required config blocks
};

const std::vector<CatalogEntry>& experiment_catalog();
std::string catalog_text();

inline constexpr int config_schema_version = 1;

// Parses and validates a JSON config, filling defaults. Returns the resolved
// config as JSON text. Throws ValidationError on any schema problem.
std::string resolve_config(const std::string& text);

struct RunOutput {
    std::string json;                    // report, with the resolved config embedded
    std::vector<std::string> artifacts;  // files written
    std::string summary;                 // a few human-readable lines
};

// Runs one experiment and writes its artifacts under output_dir.
RunOutput run_experiment(const std::string& config_text, const std::string& output_dir);

} // namespace shlab
