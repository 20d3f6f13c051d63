#pragma once

// Per-dimension training: grid search, refit of the winning cell on the full
// corpus, and publication of the artifact.

#include "rubric/app/formats.hpp"
#include "rubric/classifiers/grid_search.hpp"
#include "rubric/store/model_artifact.hpp"

#include <functional>
#include <set>
#include <string>
#include <vector>

namespace rubric::app {

struct DimensionTraining {
    std::string dimension_id;
    GridSearchResult cv;
    ModelBundle bundle;
    fs::path artifact;  // empty when not published
};

inline std::vector<NormalizedEssay> normalize_corpus(const std::vector<RawEssay>& essays, const PreprocessConfig& config) {
    std::vector<NormalizedEssay> out;
    out.reserve(essays.size());
    for (const auto& e : essays) {
        out.push_back(normalize(e, config));
    }
    return out;
}

// Sorted union of the dimension ids present in `labels`.
inline std::vector<std::string> labeled_dimensions(const std::vector<EssayLabels>& labels) {
    std::set<std::string> ids;
    for (const auto& l : labels) {
        for (const auto& [id, s] : l.scores) {
            ids.insert(id);
        }
    }
    return {ids.begin(), ids.end()};
}

inline DimensionTraining train_dimension(std::span<const NormalizedEssay> corpus,
                                         std::span<const int> labels,
                                         const std::string& dimension_id,
                                         const GridSearchSpec& spec,
                                         Timestamp created_at,
                                         const GridSearchOptions& options = {}) {
    DimensionTraining out;
    out.dimension_id = dimension_id;
    try {
        out.cv = grid_search(corpus, labels, spec, options);
        auto fitted = train_cell(corpus, labels, out.cv.best().cell, spec.seed);
        out.bundle = ModelBundle{dimension_id, "", created_at, std::move(fitted.vocabulary), std::move(fitted.model),
                                 fitted.training_report};
        out.bundle.model_version = store::derive_model_version(out.bundle);
    } catch (const Error& e) {
        throw Error(e.code(), dimension_id + ": " + e.message(), dimension_id);
    }
    return out;
}

// Trains each requested dimension in turn and publishes it under models_dir.
// `on_done` sees every result as soon as it is published.
inline std::vector<DimensionTraining> train_dimensions(const std::vector<RawEssay>& essays,
                                                       const std::vector<EssayLabels>& labels,
                                                       const std::vector<std::string>& dimension_ids,
                                                       const GridSearchSpec& spec,
                                                       const PreprocessConfig& config,
                                                       const fs::path& models_dir,
                                                       Timestamp created_at,
                                                       const std::function<void(const DimensionTraining&)>& on_done = {}) {
    const auto corpus = normalize_corpus(essays, config);
    std::vector<DimensionTraining> out;
    for (const auto& id : dimension_ids) {
        const auto y = labels_for(essays, labels, id);
        auto result = train_dimension(corpus, y, id, spec, created_at);
        result.artifact = store::publish_model(result.bundle, models_dir);
        if (on_done) {
            on_done(result);
        }
        out.push_back(std::move(result));
    }
    return out;
}

}  // namespace rubric::app
