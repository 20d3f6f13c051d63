#pragma once

#include "rubric/classifiers/model.hpp"
#include "rubric/feedback.hpp"
#include "rubric/rational.hpp"
#include "rubric/text_preprocess.hpp"

#include <exception>
#include <functional>
#include <map>
#include <memory>
#include <set>
#include <span>
#include <string>
#include <thread>
#include <utility>
#include <vector>

namespace rubric {

struct ExpertDescriptor {
    std::string dimension_id;
    std::string display_name;
    Rational weight{1};
    std::string model_ref;
    std::string template_set_ref;
};

// A descriptor with its model and feedback templates loaded.
struct ResolvedExpert {
    ExpertDescriptor descriptor;
    std::shared_ptr<const ModelBundle> model;
    std::shared_ptr<const FeedbackTemplateSet> templates;
};

struct ExpertResolver {
    std::function<std::shared_ptr<const ModelBundle>(const ExpertDescriptor&)> model;
    std::function<std::shared_ptr<const FeedbackTemplateSet>(const ExpertDescriptor&)> templates;
};

// Immutable set of experts; its dimension ids define what a complete
// MasterObject must contain.
class ExpertRegistry {
public:
    explicit ExpertRegistry(std::vector<ResolvedExpert> experts) : m_experts(std::move(experts)) {
        if (m_experts.empty()) {
            throw Error(Errc::InvalidInput, "expert registry is empty");
        }
        std::set<std::string> seen;
        Rational total{0};
        for (const auto& e : m_experts) {
            const auto& id = e.descriptor.dimension_id;
            if (id.empty()) {
                throw Error(Errc::InvalidInput, "expert with empty dimension id");
            }
            if (!seen.insert(id).second) {
                throw Error(Errc::DuplicateDimension, "dimension '" + id + "' registered twice", id);
            }
            if (e.descriptor.weight < 0) {
                throw Error(Errc::InvalidInput, "negative weight for dimension '" + id + "'", id);
            }
            if (!e.model) {
                throw Error(Errc::UnresolvableModel, "no model for dimension '" + id + "'", id);
            }
            if (!e.templates) {
                throw Error(Errc::TemplateMissing, "no feedback templates for dimension '" + id + "'", id);
            }
            const auto problems = validate_template_set(*e.templates);
            if (!problems.empty()) {
                throw Error(Errc::TemplateMissing, "templates for '" + id + "': " + problems.front(), id);
            }
            total += e.descriptor.weight;
        }
        if (total == 0) {
            throw Error(Errc::AllZeroWeights, "all dimension weights are zero");
        }
    }

    const std::vector<ResolvedExpert>& experts() const { return m_experts; }
    std::size_t size() const { return m_experts.size(); }

    const ResolvedExpert* find(std::string_view dimension_id) const {
        for (const auto& e : m_experts) {
            if (e.descriptor.dimension_id == dimension_id) {
                return &e;
            }
        }
        return nullptr;
    }

    std::map<std::string, Rational> weights() const {
        std::map<std::string, Rational> w;
        for (const auto& e : m_experts) {
            w.emplace(e.descriptor.dimension_id, e.descriptor.weight);
        }
        return w;
    }

private:
    std::vector<ResolvedExpert> m_experts;
};

// Resolves every descriptor through `resolver`. Resolver failures surface as
// UnresolvableModel (model) or TemplateMissing (templates) naming the dimension.
inline ExpertRegistry register_experts(const std::vector<ExpertDescriptor>& descriptors, const ExpertResolver& resolver) {
    if (descriptors.empty()) {
        throw Error(Errc::InvalidInput, "no expert descriptors");
    }
    std::set<std::string> seen;
    for (const auto& d : descriptors) {
        if (!seen.insert(d.dimension_id).second) {
            throw Error(Errc::DuplicateDimension, "dimension '" + d.dimension_id + "' registered twice", d.dimension_id);
        }
    }
    std::vector<ResolvedExpert> resolved;
    resolved.reserve(descriptors.size());
    for (const auto& d : descriptors) {
        ResolvedExpert e{d, nullptr, nullptr};
        try {
            e.model = resolver.model(d);
        } catch (const std::exception& ex) {
            throw Error(Errc::UnresolvableModel, "model '" + d.model_ref + "' for '" + d.dimension_id + "': " + ex.what(),
                        d.dimension_id);
        }
        try {
            e.templates = resolver.templates(d);
        } catch (const std::exception& ex) {
            throw Error(Errc::TemplateMissing,
                        "templates '" + d.template_set_ref + "' for '" + d.dimension_id + "': " + ex.what(), d.dimension_id);
        }
        resolved.push_back(std::move(e));
    }
    return ExpertRegistry(std::move(resolved));
}

struct DimensionResult {
    std::string dimension_id;
    int score = 0;
    double confidence = 0.0;
    std::string feedback_text;
    std::string model_version;

    friend bool operator==(const DimensionResult&, const DimensionResult&) = default;
};

struct MasterObject {
    std::string essay_id;
    std::map<std::string, DimensionResult> results;
    Rational final_score{0};
    Timestamp produced_at;
    std::vector<std::pair<std::string, std::string>> model_manifest;  // (dimension_id, model_version), sorted

    friend bool operator==(const MasterObject&, const MasterObject&) = default;
};

inline DimensionResult assess(const ResolvedExpert& expert, const NormalizedEssay& essay, std::string_view customer_name) {
    const auto& d = expert.descriptor;
    const auto prediction = expert.model->predict(essay);
    DimensionResult r;
    r.dimension_id = d.dimension_id;
    r.score = prediction.label;
    r.confidence = prediction.confidence;
    r.model_version = expert.model->model_version;
    r.feedback_text = render_feedback(*expert.templates, prediction.label,
                                      {std::string(customer_name), d.display_name}, essay.essay_id);
    return r;
}

// Exact weighted mean sum(w_i s_i) / sum(w_i).
inline Rational weighted_mean(std::span<const std::pair<Rational, int>> weighted_scores) {
    Rational num{0};
    Rational den{0};
    for (const auto& [w, s] : weighted_scores) {
        check_label(s);
        num += w * s;
        den += w;
    }
    if (den == 0) {
        throw Error(Errc::AllZeroWeights, "all dimension weights are zero");
    }
    return num / den;
}

// Weighted final score over exactly the registry's dimensions.
inline Rational aggregate(const std::map<std::string, int>& scores, const std::map<std::string, Rational>& weights) {
    std::string missing;
    for (const auto& [id, w] : weights) {
        if (!scores.contains(id)) {
            missing += (missing.empty() ? "" : ", ") + id;
        }
    }
    if (!missing.empty()) {
        throw Error(Errc::IncompleteResults, "missing results for: " + missing);
    }
    std::vector<std::pair<Rational, int>> pairs;
    pairs.reserve(weights.size());
    for (const auto& [id, s] : scores) {
        const auto it = weights.find(id);
        if (it == weights.end()) {
            throw Error(Errc::IncompleteResults, "result for unregistered dimension '" + id + "'", id);
        }
        pairs.emplace_back(it->second, s);
    }
    return weighted_mean(pairs);
}

inline Rational aggregate(const std::map<std::string, int>& scores, const ExpertRegistry& registry) {
    return aggregate(scores, registry.weights());
}

inline Rational aggregate(const std::map<std::string, DimensionResult>& results, const ExpertRegistry& registry) {
    std::map<std::string, int> scores;
    for (const auto& [id, r] : results) {
        scores.emplace(id, r.score);
    }
    return aggregate(scores, registry);
}

// Runs every task and returns once all have finished. Tasks never throw.
using ExpertScheduler = std::function<void(std::span<const std::function<void()>> tasks)>;

// One thread per expert.
inline void concurrent_scheduler(std::span<const std::function<void()>> tasks) {
    std::vector<std::jthread> threads;
    threads.reserve(tasks.size());
    for (const auto& t : tasks) {
        threads.emplace_back(t);
    }
}

struct PipelineOptions {
    ExpertScheduler scheduler = concurrent_scheduler;
    std::function<Timestamp()> clock = [] { return Timestamp::now(); };
};

// Normalizes once, fans the essay out to every expert, and reduces the
// results by dimension id. Any expert failure fails the whole run with an
// ExpertFailure naming the (lexicographically first) failing dimension.
inline MasterObject run_pipeline(const RawEssay& raw,
                                 const ExpertRegistry& registry,
                                 const PreprocessConfig& config,
                                 const PipelineOptions& options = {}) {
    const NormalizedEssay essay = normalize(raw, config);
    const auto& experts = registry.experts();

    std::vector<std::optional<DimensionResult>> slots(experts.size());
    std::vector<std::exception_ptr> errors(experts.size());
    std::vector<std::function<void()>> tasks;
    tasks.reserve(experts.size());
    for (std::size_t i = 0; i < experts.size(); ++i) {
        tasks.emplace_back([&, i] {
            try {
                slots[i] = assess(experts[i], essay, raw.customer_name);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        });
    }
    options.scheduler(tasks);

    std::map<std::string, std::size_t> failed;
    for (std::size_t i = 0; i < experts.size(); ++i) {
        if (errors[i] || !slots[i]) {
            failed.emplace(experts[i].descriptor.dimension_id, i);
        }
    }
    if (!failed.empty()) {
        const auto& [id, i] = *failed.begin();
        std::string cause = "expert did not run";
        if (errors[i]) {
            try {
                std::rethrow_exception(errors[i]);
            } catch (const std::exception& e) {
                cause = e.what();
            } catch (...) {
                cause = "unknown error";
            }
        }
        throw Error(Errc::ExpertFailure, "dimension '" + id + "' failed: " + cause, id);
    }

    MasterObject master;
    master.essay_id = raw.essay_id;
    for (auto& slot : slots) {
        master.model_manifest.emplace_back(slot->dimension_id, slot->model_version);
        master.results.emplace(slot->dimension_id, std::move(*slot));
    }
    std::sort(master.model_manifest.begin(), master.model_manifest.end());
    master.final_score = aggregate(master.results, registry);
    master.produced_at = options.clock();
    return master;
}

}  // namespace rubric
