#pragma once

#include "rubric/error.hpp"
#include "rubric/features.hpp"

#include <array>
#include <cstddef>
#include <span>
#include <string>

namespace rubric {

// Rubric scores: 0 unsatisfactory, 1 improvements needed, 2 satisfactory.
inline constexpr int kNumClasses = 3;
using ClassScores = std::array<double, kNumClasses>;

inline void check_label(int label) {
    if (label < 0 || label >= kNumClasses) {
        throw Error(Errc::InvalidInput, "label must be 0, 1 or 2, got " + std::to_string(label));
    }
}

struct LabeledExample {
    FeatureVector features;
    int label = 0;
};

struct Prediction {
    int label = 0;
    ClassScores scores{};  // log-posteriors (NB) or margins (SVM)
    double confidence = 0.0;

    friend bool operator==(const Prediction&, const Prediction&) = default;
};

// argmax with ties going to the smallest class index.
inline int argmax(const ClassScores& s) {
    int best = 0;
    for (int c = 1; c < kNumClasses; ++c) {
        if (s[static_cast<std::size_t>(c)] > s[static_cast<std::size_t>(best)]) {
            best = c;
        }
    }
    return best;
}

namespace detail {

// Shared checks for a training set: non-empty, valid labels, one feature space.
inline void check_training_set(std::span<const LabeledExample> data) {
    if (data.empty()) {
        throw Error(Errc::InvalidInput, "training set is empty");
    }
    const auto& first = data.front().features;
    for (const auto& ex : data) {
        check_label(ex.label);
        if (ex.features.dimensionality != first.dimensionality ||
            ex.features.vocab_fingerprint != first.vocab_fingerprint) {
            throw Error(Errc::VocabMismatch, "training examples come from different feature spaces");
        }
    }
}

}  // namespace detail

}  // namespace rubric
