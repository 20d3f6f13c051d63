#pragma once

// JSON mapping for the domain types. nlohmann::json objects keep keys sorted,
// so dump() output is canonical and byte-comparable.

#include "rubric/classifiers/grid_search.hpp"
#include "rubric/experts.hpp"
#include "rubric/feedback.hpp"
#include "rubric/rational.hpp"
#include "rubric/text_preprocess.hpp"
#include "rubric/timestamp.hpp"

#include <nlohmann/json.hpp>

#include <string>

namespace rubric {

using json = nlohmann::json;

// Canonical document text: sorted keys, two-space indent, trailing newline.
inline std::string canonical_dump(const json& j) { return j.dump(2, ' ', false, json::error_handler_t::strict) + "\n"; }

namespace detail {

template <typename T>
T required(const json& j, const char* key) {
    if (!j.is_object() || !j.contains(key)) {
        throw Error(Errc::ParseError, std::string("missing field '") + key + "'");
    }
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw Error(Errc::ParseError, std::string("field '") + key + "': " + e.what());
    }
}

template <typename T>
T optional_field(const json& j, const char* key, T fallback) {
    if (!j.is_object() || !j.contains(key) || j.at(key).is_null()) {
        return fallback;
    }
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw Error(Errc::ParseError, std::string("field '") + key + "': " + e.what());
    }
}

}  // namespace detail

inline json rational_to_json(const Rational& r) { return to_string(r); }

// Rationals are written as strings ("5/4"); numbers are accepted on input.
inline Rational rational_from_json(const json& j) {
    if (j.is_string()) {
        return parse_rational(j.get<std::string>());
    }
    if (j.is_number_integer()) {
        return Rational(j.get<std::int64_t>());
    }
    if (j.is_number()) {
        return parse_rational(j.dump());
    }
    throw Error(Errc::ParseError, "expected a rational number");
}

inline void to_json(json& j, const Timestamp& t) { j = t.to_string(); }
inline void from_json(const json& j, Timestamp& t) { t = Timestamp::parse(j.get<std::string>()); }

inline void to_json(json& j, const RawEssay& e) {
    j = json{{"essay_id", e.essay_id},
             {"customer_name", e.customer_name},
             {"submitted_at", e.submitted_at},
             {"body", e.body}};
}

inline void from_json(const json& j, RawEssay& e) {
    e.essay_id = detail::required<std::string>(j, "essay_id");
    e.customer_name = detail::optional_field<std::string>(j, "customer_name", "");
    e.submitted_at = Timestamp::parse(detail::required<std::string>(j, "submitted_at"));
    e.body = detail::required<std::string>(j, "body");
    if (e.essay_id.empty()) {
        throw Error(Errc::ParseError, "essay_id is empty");
    }
}

inline void to_json(json& j, const DimensionResult& r) {
    j = json{{"dimension_id", r.dimension_id},
             {"score", r.score},
             {"confidence", r.confidence},
             {"feedback_text", r.feedback_text},
             {"model_version", r.model_version}};
}

inline void from_json(const json& j, DimensionResult& r) {
    r.dimension_id = detail::required<std::string>(j, "dimension_id");
    r.score = detail::required<int>(j, "score");
    check_label(r.score);
    r.confidence = detail::required<double>(j, "confidence");
    r.feedback_text = detail::required<std::string>(j, "feedback_text");
    r.model_version = detail::required<std::string>(j, "model_version");
}

inline void to_json(json& j, const MasterObject& m) {
    json manifest = json::array();
    for (const auto& [dim, version] : m.model_manifest) {
        manifest.push_back({{"dimension_id", dim}, {"model_version", version}});
    }
    json results = json::object();
    for (const auto& [id, r] : m.results) {
        results[id] = r;
    }
    j = json{{"essay_id", m.essay_id},
             {"results", results},
             {"final_score", rational_to_json(m.final_score)},
             {"produced_at", m.produced_at},
             {"model_manifest", manifest}};
}

inline void from_json(const json& j, MasterObject& m) {
    m.essay_id = detail::required<std::string>(j, "essay_id");
    m.results.clear();
    const auto results = detail::required<json>(j, "results");
    for (const auto& [id, r] : results.items()) {
        m.results.emplace(id, r.get<DimensionResult>());
    }
    m.final_score = rational_from_json(detail::required<json>(j, "final_score"));
    m.produced_at = Timestamp::parse(detail::required<std::string>(j, "produced_at"));
    m.model_manifest.clear();
    for (const auto& e : detail::required<json>(j, "model_manifest")) {
        m.model_manifest.emplace_back(detail::required<std::string>(e, "dimension_id"),
                                      detail::required<std::string>(e, "model_version"));
    }
}

inline void to_json(json& j, const FeedbackTemplateSet& s) {
    j = json{{"dimension_id", s.dimension_id},
             {"score_0", s.templates[0]},
             {"score_1", s.templates[1]},
             {"score_2", s.templates[2]}};
}

// Missing score keys load as empty lists so validation can report them.
inline void from_json(const json& j, FeedbackTemplateSet& s) {
    s.dimension_id = detail::required<std::string>(j, "dimension_id");
    for (int score = 0; score < kNumClasses; ++score) {
        const auto key = "score_" + std::to_string(score);
        s.templates[static_cast<std::size_t>(score)] =
                detail::optional_field<std::vector<std::string>>(j, key.c_str(), {});
    }
}

inline void to_json(json& j, const FeatureConfig& c) {
    j = json{{"weighting", std::string(to_string(c.weighting))},
             {"ngram_max", c.ngram_max},
             {"min_df", c.min_df},
             {"max_df_ratio", c.max_df_ratio}};
}

inline void from_json(const json& j, FeatureConfig& c) {
    const auto w = detail::optional_field<std::string>(j, "weighting", "counts");
    if (w == "counts") {
        c.weighting = Weighting::Counts;
    } else if (w == "tfidf") {
        c.weighting = Weighting::TfIdf;
    } else {
        throw Error(Errc::ParseError, "weighting must be 'counts' or 'tfidf'");
    }
    c.ngram_max = detail::optional_field<int>(j, "ngram_max", 1);
    c.min_df = detail::optional_field<std::uint32_t>(j, "min_df", 1);
    c.max_df_ratio = detail::optional_field<double>(j, "max_df_ratio", 1.0);
    c.validate();
}

inline void to_json(json& j, const GridCell& cell) {
    j = json{{"features", cell.features}};
    if (const auto* nb = std::get_if<NbParams>(&cell.model)) {
        j["model"] = {{"kind", "nb"}, {"alpha", nb->alpha}};
    } else {
        const auto& svm = std::get<SvmParams>(cell.model);
        j["model"] = {{"kind", "svm"}, {"lambda", svm.lambda}, {"epochs", svm.epochs}};
    }
}

inline Metric metric_from_string(const std::string& s) {
    if (s == "accuracy") {
        return Metric::Accuracy;
    }
    if (s == "macro_f1") {
        return Metric::MacroF1;
    }
    if (s == "macro_precision") {
        return Metric::MacroPrecision;
    }
    throw Error(Errc::ParseError, "metric must be accuracy, macro_f1 or macro_precision");
}

// Grid spec document:
// {"feature_configs": [FeatureConfig...], "nb_alphas": [..],
//  "svm": [{"lambda": .., "epochs": ..}], "folds": 5, "seed": 42, "metric": "macro_f1"}
inline void to_json(json& j, const GridSearchSpec& s) {
    json svm = json::array();
    for (const auto& p : s.svm_params) {
        svm.push_back({{"lambda", p.lambda}, {"epochs", p.epochs}});
    }
    j = json{{"feature_configs", s.feature_configs},
             {"nb_alphas", s.nb_alphas},
             {"svm", svm},
             {"folds", s.folds},
             {"seed", s.seed},
             {"metric", std::string(to_string(s.metric))}};
}

inline void from_json(const json& j, GridSearchSpec& s) {
    s = GridSearchSpec{};
    s.feature_configs = detail::required<std::vector<FeatureConfig>>(j, "feature_configs");
    s.nb_alphas = detail::optional_field<std::vector<double>>(j, "nb_alphas", {});
    for (const auto& p : detail::optional_field<json>(j, "svm", json::array())) {
        s.svm_params.push_back({detail::required<double>(p, "lambda"), detail::required<int>(p, "epochs")});
    }
    s.folds = detail::optional_field<int>(j, "folds", 5);
    s.seed = detail::optional_field<std::uint64_t>(j, "seed", 42);
    s.metric = metric_from_string(detail::optional_field<std::string>(j, "metric", "macro_f1"));
}

inline json eval_report_to_json(const EvalReport& r) {
    return json{{"accuracy", r.accuracy},
                {"precision", r.precision},
                {"recall", r.recall},
                {"f1", r.f1},
                {"macro_precision", r.macro_precision},
                {"macro_f1", r.macro_f1},
                {"confusion", r.confusion}};
}

inline json cv_table_to_json(const GridSearchResult& r) {
    json rows = json::array();
    for (const auto& row : r.table) {
        rows.push_back({{"cell", row.cell}, {"fold_scores", row.fold_scores}, {"mean", row.mean}});
    }
    return json{{"metric", std::string(to_string(r.metric))}, {"best_index", r.best_index}, {"rows", rows}};
}

inline json preprocess_config_to_json(const PreprocessConfig& c) {
    json j{{"mask_email", c.mask_email},
           {"mask_url", c.mask_url},
           {"mask_number", c.mask_number},
           {"mask_person", c.mask_person}};
    if (c.person_gazetteer) {
        j["person_gazetteer"] = *c.person_gazetteer;
    }
    return j;
}

// Reads mask switches and gazetteer; stopwords are resolved by the caller.
inline void apply_preprocess_json(const json& j, PreprocessConfig& c) {
    c.mask_email = detail::optional_field<bool>(j, "mask_email", c.mask_email);
    c.mask_url = detail::optional_field<bool>(j, "mask_url", c.mask_url);
    c.mask_number = detail::optional_field<bool>(j, "mask_number", c.mask_number);
    c.mask_person = detail::optional_field<bool>(j, "mask_person", c.mask_person);
    if (j.contains("person_gazetteer")) {
        c.person_gazetteer = j.at("person_gazetteer").get<std::set<std::string>>();
    }
}

}  // namespace rubric
