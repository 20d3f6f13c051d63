#pragma once

// File formats of the application layer: the expert registry file, feedback
// template files, grid specs and the service config.
//
// Registry file:
//   {"preprocess": {"stopwords_file": "stopwords.txt", "mask_person": false, ...},
//    "dimensions": [{"dimension_id": "d01", "display_name": "Clarity",
//                    "weight": "1", "model": "d01", "templates": "templates/d01.json"}]}
// "model" is relative to the models directory (a directory picks its newest
// artifact); "templates" and "stopwords_file" are relative to the registry file.

#include "rubric/corpus.hpp"
#include "rubric/experts.hpp"
#include "rubric/serialization.hpp"
#include "rubric/store/model_artifact.hpp"

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace rubric::app {

namespace fs = std::filesystem;

inline json read_json_file(const fs::path& path) {
    const auto text = store::read_text_file(path);
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error(Errc::ParseError, path.string() + ": " + e.what());
    }
}

inline std::vector<RawEssay> load_corpus(const fs::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(Errc::IoFailure, "cannot open " + path.string());
    }
    return read_corpus(in, path.string());
}

inline std::vector<EssayLabels> load_labels(const fs::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(Errc::IoFailure, "cannot open " + path.string());
    }
    return read_labels(in, path.string());
}

inline FeedbackTemplateSet load_template_set(const fs::path& path) {
    try {
        return read_json_file(path).get<FeedbackTemplateSet>();
    } catch (const json::exception& e) {
        throw Error(Errc::ParseError, path.string() + ": " + e.what());
    } catch (const Error& e) {
        throw Error(e.code(), path.string() + ": " + e.message(), e.dimension_id());
    }
}

inline GridSearchSpec load_grid_spec(const fs::path& path) {
    try {
        auto spec = read_json_file(path).get<GridSearchSpec>();
        return spec;
    } catch (const json::exception& e) {
        throw Error(Errc::ParseError, path.string() + ": " + e.what());
    } catch (const Error& e) {
        throw Error(e.code(), path.string() + ": " + e.message(), e.dimension_id());
    }
}

struct RegistryFile {
    fs::path path;
    std::vector<ExpertDescriptor> dimensions;
    PreprocessConfig preprocess;

    fs::path template_path(const ExpertDescriptor& d) const {
        const fs::path p(d.template_set_ref);
        return p.is_absolute() ? p : path.parent_path() / p;
    }
};

inline RegistryFile load_registry_file(const fs::path& path) {
    const auto j = read_json_file(path);
    RegistryFile r;
    r.path = path;
    const auto where = path.string() + ": ";
    try {
        if (j.contains("preprocess")) {
            const auto& p = j.at("preprocess");
            apply_preprocess_json(p, r.preprocess);
            if (p.contains("stopwords_file")) {
                const fs::path sw(p.at("stopwords_file").get<std::string>());
                r.preprocess.stopwords = load_stopwords(sw.is_absolute() ? sw : path.parent_path() / sw);
            }
            r.preprocess.validate();
        }
        const auto dims = detail::required<json>(j, "dimensions");
        if (!dims.is_array()) {
            throw Error(Errc::ParseError, "'dimensions' must be an array");
        }
        for (const auto& d : dims) {
            ExpertDescriptor e;
            e.dimension_id = detail::required<std::string>(d, "dimension_id");
            e.display_name = detail::optional_field<std::string>(d, "display_name", e.dimension_id);
            e.weight = d.contains("weight") ? rational_from_json(d.at("weight")) : Rational(1);
            e.model_ref = detail::optional_field<std::string>(d, "model", e.dimension_id);
            e.template_set_ref = detail::required<std::string>(d, "templates");
            r.dimensions.push_back(std::move(e));
        }
    } catch (const json::exception& e) {
        throw Error(Errc::ParseError, where + e.what());
    } catch (const Error& e) {
        throw Error(e.code(), where + e.message(), e.dimension_id());
    }
    return r;
}

// Loads artifacts from `models_dir` and templates next to the registry file.
// A loaded model or template set must belong to the descriptor's dimension.
inline ExpertResolver file_resolver(const RegistryFile& file, const fs::path& models_dir) {
    ExpertResolver r;
    r.model = [models_dir](const ExpertDescriptor& d) {
        auto bundle = std::make_shared<ModelBundle>(store::load_model(store::resolve_model_path(models_dir, d.model_ref)));
        if (bundle->dimension_id != d.dimension_id) {
            throw Error(Errc::UnresolvableModel,
                        "artifact belongs to '" + bundle->dimension_id + "', not '" + d.dimension_id + "'", d.dimension_id);
        }
        return std::shared_ptr<const ModelBundle>(std::move(bundle));
    };
    r.templates = [file](const ExpertDescriptor& d) {
        auto set = std::make_shared<FeedbackTemplateSet>(load_template_set(file.template_path(d)));
        if (set->dimension_id != d.dimension_id) {
            throw Error(Errc::TemplateMissing,
                        "template set belongs to '" + set->dimension_id + "', not '" + d.dimension_id + "'", d.dimension_id);
        }
        return std::shared_ptr<const FeedbackTemplateSet>(std::move(set));
    };
    return r;
}

struct LoadedRegistry {
    ExpertRegistry registry;
    PreprocessConfig preprocess;
};

inline LoadedRegistry load_registry(const fs::path& registry_path, const fs::path& models_dir) {
    const auto file = load_registry_file(registry_path);
    return {register_experts(file.dimensions, file_resolver(file, models_dir)), file.preprocess};
}

// Service config file (paths relative to the file):
//   {"host": "127.0.0.1", "port": 8080, "models_dir": "models", "store_dir": "store",
//    "registry": "registry.json", "sync_timeout_budget": 30, "worker_count": 2,
//    "report": {"print_command": "wkhtmltopdf - -"}}
// RUBRIC_PORT, RUBRIC_STORE and RUBRIC_MODELS override the file.
struct ServiceConfig {
    std::string host = "127.0.0.1";
    int port = 8080;  // 0 binds an ephemeral port
    fs::path models_dir = "models";
    fs::path store_dir = "store";
    fs::path registry_path = "registry.json";
    std::chrono::seconds sync_timeout_budget{30};
    int worker_count = 2;
    std::string print_command;

    void validate() const {
        if (port < 0 || port > 65535) {
            throw Error(Errc::InvalidInput, "port must be in [0, 65535]");
        }
        if (worker_count < 1) {
            throw Error(Errc::InvalidInput, "worker_count must be at least 1");
        }
        if (sync_timeout_budget.count() < 1) {
            throw Error(Errc::InvalidInput, "sync_timeout_budget must be at least 1 second");
        }
        if (!fs::is_directory(models_dir)) {
            throw Error(Errc::InvalidInput, "models directory not found: " + models_dir.string());
        }
        if (!fs::is_regular_file(registry_path)) {
            throw Error(Errc::InvalidInput, "registry file not found: " + registry_path.string());
        }
    }
};

using EnvLookup = std::function<std::optional<std::string>(const char*)>;

inline std::optional<std::string> process_env(const char* name) {
    const char* v = std::getenv(name);
    return v ? std::optional<std::string>(v) : std::nullopt;
}

inline void apply_env_overrides(ServiceConfig& c, const EnvLookup& env = process_env) {
    if (const auto port = env("RUBRIC_PORT")) {
        try {
            std::size_t used = 0;
            c.port = std::stoi(*port, &used);
            if (used != port->size()) {
                throw std::invalid_argument("trailing characters");
            }
        } catch (const std::exception&) {
            throw Error(Errc::InvalidInput, "RUBRIC_PORT is not a number: '" + *port + "'");
        }
    }
    if (const auto store_dir = env("RUBRIC_STORE")) {
        c.store_dir = *store_dir;
    }
    if (const auto models = env("RUBRIC_MODELS")) {
        c.models_dir = *models;
    }
}

inline ServiceConfig load_service_config(const fs::path& path, const EnvLookup& env = process_env) {
    const auto j = read_json_file(path);
    const auto base = path.parent_path();
    auto rel = [&](const std::string& p) { return fs::path(p).is_absolute() ? fs::path(p) : base / p; };
    ServiceConfig c;
    try {
        c.host = detail::optional_field<std::string>(j, "host", c.host);
        c.port = detail::optional_field<int>(j, "port", c.port);
        c.models_dir = rel(detail::optional_field<std::string>(j, "models_dir", "models"));
        c.store_dir = rel(detail::optional_field<std::string>(j, "store_dir", "store"));
        c.registry_path = rel(detail::optional_field<std::string>(j, "registry", "registry.json"));
        c.sync_timeout_budget = std::chrono::seconds(detail::optional_field<int>(j, "sync_timeout_budget", 30));
        c.worker_count = detail::optional_field<int>(j, "worker_count", c.worker_count);
        if (j.contains("report")) {
            c.print_command = detail::optional_field<std::string>(j.at("report"), "print_command", "");
        }
    } catch (const Error& e) {
        throw Error(e.code(), path.string() + ": " + e.message());
    }
    apply_env_overrides(c, env);
    c.validate();
    return c;
}

}  // namespace rubric::app
