#pragma once

#include "rubric/classifiers/common.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace rubric {

// Multinomial naive Bayes with additive (Laplace/Lidstone) smoothing.
struct NaiveBayesModel {
    ClassScores class_log_prior{};                          // ln(N_c / N); -inf for absent classes
    std::array<std::vector<double>, kNumClasses> term_log_likelihood;  // ln((n_wc + a) / (n_c + a V))
    double alpha = 1.0;
    std::uint64_t vocab_fingerprint = 0;

    std::size_t dimensionality() const { return term_log_likelihood[0].size(); }

    friend bool operator==(const NaiveBayesModel&, const NaiveBayesModel&) = default;
};

inline NaiveBayesModel train_nb(std::span<const LabeledExample> data, double alpha) {
    detail::check_training_set(data);
    if (!(alpha > 0.0) || !std::isfinite(alpha)) {
        throw Error(Errc::InvalidInput, "alpha must be positive");
    }
    const std::size_t vocab_size = data.front().features.dimensionality;
    if (vocab_size == 0) {
        throw Error(Errc::InvalidFeatures, "feature space is empty");
    }

    std::array<std::size_t, kNumClasses> docs_per_class{};
    std::array<std::vector<double>, kNumClasses> counts;
    std::array<double, kNumClasses> totals{};
    for (auto& c : counts) {
        c.assign(vocab_size, 0.0);
    }
    for (const auto& ex : data) {
        const auto c = static_cast<std::size_t>(ex.label);
        ++docs_per_class[c];
        for (const auto& [i, w] : ex.features.entries) {
            if (w != std::floor(w) || w < 0.0) {
                throw Error(Errc::InvalidFeatures, "multinomial naive Bayes needs integer term counts");
            }
            counts[c][i] += w;
            totals[c] += w;
        }
    }

    NaiveBayesModel model;
    model.alpha = alpha;
    model.vocab_fingerprint = data.front().features.vocab_fingerprint;
    const double n = static_cast<double>(data.size());
    for (std::size_t c = 0; c < kNumClasses; ++c) {
        model.class_log_prior[c] = docs_per_class[c] == 0 ? -std::numeric_limits<double>::infinity()
                                                          : std::log(static_cast<double>(docs_per_class[c]) / n);
        const double denom = totals[c] + alpha * static_cast<double>(vocab_size);
        auto& ll = model.term_log_likelihood[c];
        ll.resize(vocab_size);
        for (std::size_t i = 0; i < vocab_size; ++i) {
            ll[i] = std::log((counts[c][i] + alpha) / denom);
        }
    }
    return model;
}

// Softmax of the top log-posterior, i.e. the normalized posterior of the label.
inline double nb_confidence(const ClassScores& log_posterior) {
    const double top = *std::max_element(log_posterior.begin(), log_posterior.end());
    double z = 0.0;
    for (double s : log_posterior) {
        z += std::exp(s - top);
    }
    return 1.0 / z;
}

inline Prediction predict_nb(const NaiveBayesModel& model, const FeatureVector& fv) {
    if (fv.vocab_fingerprint != model.vocab_fingerprint || fv.dimensionality != model.dimensionality()) {
        throw Error(Errc::VocabMismatch, "feature vector does not belong to the model's vocabulary");
    }
    Prediction p;
    for (std::size_t c = 0; c < kNumClasses; ++c) {
        double score = model.class_log_prior[c];
        if (std::isfinite(score)) {
            const auto& ll = model.term_log_likelihood[c];
            for (const auto& [i, w] : fv.entries) {
                score += w * ll[i];
            }
        }
        p.scores[c] = score;
    }
    p.label = argmax(p.scores);
    p.confidence = nb_confidence(p.scores);
    return p;
}

}  // namespace rubric
