#include "shlab/shlab.h"

#include <exception>
#include <new>
#include <string>
#include <vector>

#include "shlab/error.hpp"
#include "shlab/experiments.hpp"
#include "shlab/parallel.hpp"

struct shlab_report {
    shlab_status status = SHLAB_OK;
    std::string json;
    std::string message;
    std::vector<std::string> artifacts;
};

namespace {

template <class Fn>
shlab_status guarded(shlab_report* r, Fn&& fn) {
    try {
        fn();
        r->status = SHLAB_OK;
    } catch (const shlab::ValidationError& e) {
        r->status = SHLAB_ERR_VALIDATION;
        r->message = e.what();
    } catch (const shlab::NumericalError& e) {
        r->status = SHLAB_ERR_NUMERICAL;
        r->message = e.what();
    } catch (const shlab::HypothesisError& e) {
        r->status = SHLAB_ERR_HYPOTHESIS;
        r->message = e.what();
    } catch (const std::exception& e) {
        r->status = SHLAB_ERR_INTERNAL;
        r->message = std::string("internal error: ") + e.what();
    } catch (...) {
        r->status = SHLAB_ERR_INTERNAL;
        r->message = "internal error";
    }
    if (r->status != SHLAB_OK) r->json.clear();
    return r->status;
}

shlab_status start(shlab_report** out, shlab_report*& r) {
    if (!out) return SHLAB_ERR_VALIDATION;
    r = new (std::nothrow) shlab_report;
    *out = r;
    return r ? SHLAB_OK : SHLAB_ERR_INTERNAL;
}

} // namespace

extern "C" {

const char* shlab_version(void) { return "0.1.0"; }

shlab_status shlab_set_threads(int threads) {
    if (threads < 0) return SHLAB_ERR_VALIDATION;
    shlab::set_thread_count(threads);
    return SHLAB_OK;
}

const char* shlab_catalog(void) {
    static const std::string text = shlab::catalog_text();
    return text.c_str();
}

size_t shlab_catalog_size(void) { return shlab::experiment_catalog().size(); }

const char* shlab_catalog_name(size_t index) {
    const auto& c = shlab::experiment_catalog();
    return index < c.size() ? c[index].name.c_str() : nullptr;
}

const char* shlab_catalog_label(size_t index) {
    const auto& c = shlab::experiment_catalog();
    return index < c.size() ? c[index].label.c_str() : nullptr;
}

shlab_status shlab_run(const char* config_json, const char* output_dir, shlab_report** report) {
    shlab_report* r = nullptr;
    if (shlab_status s = start(report, r); s != SHLAB_OK) return s;
    return guarded(r, [&] {
        if (!config_json) throw shlab::ValidationError("config text is null");
        shlab::RunOutput out = shlab::run_experiment(config_json, output_dir ? output_dir : "");
        r->json = std::move(out.json);
        r->message = std::move(out.summary);
        r->artifacts = std::move(out.artifacts);
    });
}

shlab_status shlab_resolve(const char* config_json, shlab_report** report) {
    shlab_report* r = nullptr;
    if (shlab_status s = start(report, r); s != SHLAB_OK) return s;
    return guarded(r, [&] {
        if (!config_json) throw shlab::ValidationError("config text is null");
        r->json = shlab::resolve_config(config_json);
        r->message = "config is valid";
    });
}

shlab_status shlab_report_status(const shlab_report* report) { return report ? report->status : SHLAB_ERR_VALIDATION; }

const char* shlab_report_json(const shlab_report* report) { return report ? report->json.c_str() : ""; }

const char* shlab_report_message(const shlab_report* report) { return report ? report->message.c_str() : ""; }

size_t shlab_report_artifact_count(const shlab_report* report) { return report ? report->artifacts.size() : 0; }

const char* shlab_report_artifact(const shlab_report* report, size_t index) {
    if (!report || index >= report->artifacts.size()) return nullptr;
    return report->artifacts[index].c_str();
}

void shlab_report_free(shlab_report* report) { delete report; }

} // extern "C"
