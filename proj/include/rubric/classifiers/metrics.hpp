#pragma once

#include "rubric/classifiers/common.hpp"

#include <array>
#include <cstdint>
#include <span>

namespace rubric {

struct EvalReport {
    double accuracy = 0.0;
    ClassScores precision{};
    ClassScores recall{};
    ClassScores f1{};
    double macro_precision = 0.0;
    double macro_f1 = 0.0;
    // confusion[true][predicted]
    std::array<std::array<std::uint64_t, kNumClasses>, kNumClasses> confusion{};

    std::uint64_t total() const {
        std::uint64_t n = 0;
        for (const auto& row : confusion) {
            for (auto v : row) {
                n += v;
            }
        }
        return n;
    }

    friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

// Macro averages run over all three classes. A class never predicted has
// precision 0; a class absent from the truth has recall 0; F1 is 0 when
// precision + recall is 0.
inline EvalReport evaluate_predictions(std::span<const int> truth, std::span<const int> predicted) {
    if (truth.size() != predicted.size()) {
        throw Error(Errc::InvalidInput, "truth and prediction lists differ in length");
    }
    if (truth.empty()) {
        throw Error(Errc::InvalidInput, "cannot evaluate on an empty test set");
    }
    EvalReport r;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        check_label(truth[i]);
        check_label(predicted[i]);
        ++r.confusion[static_cast<std::size_t>(truth[i])][static_cast<std::size_t>(predicted[i])];
    }
    std::uint64_t correct = 0;
    for (std::size_t c = 0; c < kNumClasses; ++c) {
        correct += r.confusion[c][c];
        std::uint64_t predicted_c = 0;
        std::uint64_t support_c = 0;
        for (std::size_t k = 0; k < kNumClasses; ++k) {
            predicted_c += r.confusion[k][c];
            support_c += r.confusion[c][k];
        }
        const double tp = static_cast<double>(r.confusion[c][c]);
        r.precision[c] = predicted_c == 0 ? 0.0 : tp / static_cast<double>(predicted_c);
        r.recall[c] = support_c == 0 ? 0.0 : tp / static_cast<double>(support_c);
        const double pr = r.precision[c] + r.recall[c];
        r.f1[c] = pr == 0.0 ? 0.0 : 2.0 * r.precision[c] * r.recall[c] / pr;
        r.macro_precision += r.precision[c] / kNumClasses;
        r.macro_f1 += r.f1[c] / kNumClasses;
    }
    r.accuracy = static_cast<double>(correct) / static_cast<double>(truth.size());
    return r;
}

}  // namespace rubric
