#pragma once

#include "rubric/classifiers/linear_svm.hpp"
#include "rubric/classifiers/metrics.hpp"
#include "rubric/classifiers/naive_bayes.hpp"
#include "rubric/timestamp.hpp"

#include <string>
#include <variant>
#include <vector>

namespace rubric {

enum class ClassifierKind : std::uint8_t { NaiveBayes = 0, LinearSvm = 1 };

inline std::string_view to_string(ClassifierKind k) { return k == ClassifierKind::NaiveBayes ? "nb" : "svm"; }

using TrainedModel = std::variant<NaiveBayesModel, LinearSvmModel>;

inline ClassifierKind kind_of(const TrainedModel& m) {
    return std::holds_alternative<NaiveBayesModel>(m) ? ClassifierKind::NaiveBayes : ClassifierKind::LinearSvm;
}

inline std::uint64_t vocab_fingerprint(const TrainedModel& m) {
    return std::visit([](const auto& x) { return x.vocab_fingerprint; }, m);
}

inline Prediction predict(const TrainedModel& m, const FeatureVector& fv) {
    return std::visit(
            [&fv](const auto& x) -> Prediction {
                if constexpr (std::is_same_v<std::decay_t<decltype(x)>, NaiveBayesModel>) {
                    return predict_nb(x, fv);
                } else {
                    return predict_svm(x, fv);
                }
            },
            m);
}

inline EvalReport evaluate(const TrainedModel& m, std::span<const LabeledExample> testset) {
    std::vector<int> truth;
    std::vector<int> predicted;
    truth.reserve(testset.size());
    predicted.reserve(testset.size());
    for (const auto& ex : testset) {
        truth.push_back(ex.label);
        predicted.push_back(predict(m, ex.features).label);
    }
    return evaluate_predictions(truth, predicted);
}

// A trained classifier together with the feature space it was trained on.
// This is what gets written to and read from a model artifact.
struct ModelBundle {
    std::string dimension_id;
    std::string model_version;
    Timestamp created_at;
    Vocabulary vocabulary;
    TrainedModel model;
    EvalReport training_report;

    ClassifierKind kind() const { return kind_of(model); }

    Prediction predict(const NormalizedEssay& essay) const { return rubric::predict(model, vectorize(essay, vocabulary)); }
};

}  // namespace rubric
