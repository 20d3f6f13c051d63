#pragma once

#include "rubric/app/training.hpp"
#include "rubric/rubric.hpp"

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace rubric::testing {

namespace fs = std::filesystem;

inline const fs::path kDataDir = RUBRIC_DATA_DIR;
inline const fs::path kGoldenDir = RUBRIC_GOLDEN_DIR;
inline const fs::path kCliPath = RUBRIC_CLI_PATH;
inline const fs::path kRegistryPath = kDataDir / "registry.json";

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir() {
        std::string tmpl = (fs::temp_directory_path() / "rubric-test-XXXXXX").string();
        if (::mkdtemp(tmpl.data()) == nullptr) {
            throw std::runtime_error("mkdtemp failed");
        }
        m_path = tmpl;
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(m_path, ec);
    }

    const fs::path& path() const { return m_path; }
    fs::path operator/(const std::string& name) const { return m_path / name; }

private:
    fs::path m_path;
};

// Normalized essay made of plain word tokens.
inline NormalizedEssay words(std::vector<std::string> tokens, std::string id = "doc") {
    NormalizedEssay e;
    e.essay_id = std::move(id);
    for (auto& t : tokens) {
        e.tokens.push_back({std::move(t), TokenKind::Word});
    }
    e.original_char_count = 1;
    return e;
}

// Error code thrown by `f`, or nullopt when it returns normally.
template <typename F>
std::optional<Errc> code_of(F&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    return std::nullopt;
}

inline GridSearchSpec single_cell_grid(std::uint64_t seed = 7) {
    GridSearchSpec spec;
    spec.feature_configs = {FeatureConfig{1, 1, 1.0, Weighting::Counts}};
    spec.nb_alphas = {0.1};
    spec.folds = 3;
    spec.seed = seed;
    return spec;
}

inline Timestamp fixed_time() { return Timestamp::parse("2024-03-01T09:00:00Z"); }

// 13 small NB models trained on a generated corpus, published to a temp
// models directory. Built once per process.
struct ModelFixture {
    TempDir dir;
    fs::path models;
    SyntheticCorpus corpus;
    std::vector<app::DimensionTraining> trained;
};

inline const ModelFixture& model_fixture() {
    static const std::unique_ptr<ModelFixture> fixture = [] {
        auto f = std::make_unique<ModelFixture>();
        f->models = f->dir / "models";
        GeneratorSpec spec;
        spec.seed = 7;
        spec.essay_count = 240;
        spec.label_noise = 0.0;
        f->corpus = generate(spec);
        const auto ids = app::labeled_dimensions(f->corpus.labels);
        f->trained = app::train_dimensions(f->corpus.essays, f->corpus.labels, ids, single_cell_grid(),
                                           app::load_registry_file(kRegistryPath).preprocess, f->models, fixed_time());
        return f;
    }();
    return *fixture;
}

inline app::LoadedRegistry fixture_registry() { return app::load_registry(kRegistryPath, model_fixture().models); }

struct CommandResult {
    int exit_code = -1;
    std::string output;  // stdout and stderr
};

// Runs the CLI with the given shell-quoted argument string.
inline CommandResult run_cli(const std::string& args) {
    const std::string cmd = "'" + kCliPath.string() + "' " + args + " 2>&1";
    CommandResult r;
    FILE* pipe = ::popen(cmd.c_str(), "r");
    if (pipe == nullptr) {
        return r;
    }
    std::array<char, 4096> buf{};
    std::size_t n = 0;
    while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) {
        r.output.append(buf.data(), n);
    }
    const int status = ::pclose(pipe);
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

inline std::string quote(const fs::path& p) { return "'" + p.string() + "'"; }

// MasterObject document with produced_at removed.
inline json without_produced_at(json j) {
    j.erase("produced_at");
    return j;
}

}  // namespace rubric::testing
