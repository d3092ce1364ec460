#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "shlab/shlab.h"

namespace {

int run(const std::string& config_path, int threads, const std::string& output_dir) {
    std::ifstream in(config_path);
    if (!in) {
        std::cerr << "error: cannot read config " << config_path << "\n";
        return SHLAB_ERR_VALIDATION;
    }
    std::stringstream text;
    text << in.rdbuf();

    if (shlab_set_threads(threads) != SHLAB_OK) {
        std::cerr << "error: --threads must be non-negative\n";
        return SHLAB_ERR_VALIDATION;
    }
    shlab_report* report = nullptr;
    const shlab_status status = shlab_run(text.str().c_str(), output_dir.c_str(), &report);
    if (status == SHLAB_OK) {
        std::cout << shlab_report_message(report) << "\n";
        for (size_t i = 0; i < shlab_report_artifact_count(report); ++i)
            std::cout << "wrote " << shlab_report_artifact(report, i) << "\n";
    } else {
        std::cerr << "error: " << (report ? shlab_report_message(report) : "out of memory") << "\n";
    }
    shlab_report_free(report);
    return status;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Numerical lab for heat equations with singular potentials"};
    app.set_version_flag("--version", std::string(shlab_version()));
    app.require_subcommand(1);

    std::string config_path;
    std::string output_dir = ".";
    int threads = 0;
    CLI::App* run_cmd = app.add_subcommand("run", "Run one experiment from a JSON config");
    run_cmd->add_option("--config", config_path, "Experiment config (JSON)")->required();
    run_cmd->add_option("--threads", threads, "Worker threads (0: machine parallelism)")->check(CLI::NonNegativeNumber);
    run_cmd->add_option("--output", output_dir, "Directory for artifacts");

    CLI::App* list_cmd = app.add_subcommand("list", "List experiments with their required config blocks");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : SHLAB_ERR_VALIDATION;
    }

    if (list_cmd->parsed()) {
        std::cout << shlab_catalog();
        return 0;
    }
    return run(config_path, threads, output_dir);
}
