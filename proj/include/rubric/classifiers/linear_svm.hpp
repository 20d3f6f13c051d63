#pragma once

#include "rubric/classifiers/common.hpp"
#include "rubric/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace rubric {

// One-vs-rest linear SVM: one weight vector and unregularized bias per class.
struct LinearSvmModel {
    std::array<std::vector<double>, kNumClasses> weights;
    ClassScores bias{};
    double lambda = 1e-3;
    int epochs = 10;
    std::uint64_t seed = 0;
    std::uint64_t vocab_fingerprint = 0;

    std::size_t dimensionality() const { return weights[0].size(); }

    friend bool operator==(const LinearSvmModel&, const LinearSvmModel&) = default;
};

namespace detail {

inline double sparse_dot(const std::vector<double>& w, const FeatureVector& x) {
    double s = 0.0;
    for (const auto& [i, v] : x.entries) {
        s += w[i] * v;
    }
    return s;
}

}  // namespace detail

inline ClassScores svm_margins(const LinearSvmModel& model, const FeatureVector& fv) {
    ClassScores m{};
    for (std::size_t c = 0; c < kNumClasses; ++c) {
        m[c] = detail::sparse_dot(model.weights[c], fv) + model.bias[c];
    }
    return m;
}

// Primal objective summed over the one-vs-rest problems:
// sum_c [ lambda/2 |w_c|^2 + (1/n) sum_i max(0, 1 - y_ic (w_c.x_i + b_c)) ].
// The all-zero model scores exactly 3.
inline double svm_objective(const LinearSvmModel& model, std::span<const LabeledExample> data) {
    double total = 0.0;
    for (std::size_t c = 0; c < kNumClasses; ++c) {
        const auto& w = model.weights[c];
        const double reg = 0.5 * model.lambda * std::inner_product(w.begin(), w.end(), w.begin(), 0.0);
        double hinge = 0.0;
        for (const auto& ex : data) {
            const double y = static_cast<std::size_t>(ex.label) == c ? 1.0 : -1.0;
            hinge += std::max(0.0, 1.0 - y * (detail::sparse_dot(w, ex.features) + model.bias[c]));
        }
        total += reg + hinge / static_cast<double>(data.size());
    }
    return total;
}

namespace detail {

// Exact minimizer of sum_i max(0, 1 - y_i (s_i + b)) over b. The function is
// convex and piecewise linear with a kink at y_i - s_i per example; its slope
// is -#positives at -inf and rises by 1 at every kink. The minimizers form an
// interval [lo, hi] between kinks; the point of it closest to 0 is returned.
inline double optimal_bias(std::span<const double> s, std::span<const double> y) {
    const std::size_t n = s.size();
    std::vector<double> kinks(n);
    double slope = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        kinks[i] = y[i] - s[i];
        slope -= y[i] > 0.0 ? 1.0 : 0.0;
    }
    std::sort(kinks.begin(), kinks.end());
    kinks.erase(std::unique(kinks.begin(), kinks.end()), kinks.end());
    std::vector<std::size_t> at_kink(kinks.size(), 0);
    for (std::size_t i = 0; i < n; ++i) {
        ++at_kink[static_cast<std::size_t>(std::lower_bound(kinks.begin(), kinks.end(), y[i] - s[i]) - kinks.begin())];
    }
    // Without positives everything left of the first kink is optimal.
    const bool open_left = slope == 0.0;
    // The final slope is #negatives >= 0, so the scan stops at some kink k:
    // the slope is negative left of it and non-negative right of it.
    std::size_t k = 0;
    slope += static_cast<double>(at_kink[0]);
    while (slope < 0.0) {
        slope += static_cast<double>(at_kink[++k]);
    }
    const double lo = open_left ? -std::numeric_limits<double>::infinity() : kinks[k];
    // Zero slope right of kink k: flat until the next kink.
    const double hi = slope == 0.0 && k + 1 < kinks.size() ? kinks[k + 1]
                      : slope == 0.0                       ? std::numeric_limits<double>::infinity()
                                                           : kinks[k];
    return std::clamp(0.0, lo, hi);
}

}  // namespace detail

// Pegasos-style stochastic subgradient descent on w with step 1/(lambda t)
// and projection onto the ball of radius 1/sqrt(lambda). Examples are visited
// in a fresh seeded shuffle each epoch; the same order drives all three
// binary problems. The bias is not regularized: it is held fixed within an
// epoch and refit exactly at the end of each epoch. Each class keeps the
// epoch-end iterate with the lowest objective, starting from the all-zero
// model, so training never ends above its starting objective. w is kept as
// scale * v so each step costs O(nnz(x)).
inline LinearSvmModel train_svm(std::span<const LabeledExample> data, double lambda, int epochs, std::uint64_t seed) {
    detail::check_training_set(data);
    if (!(lambda > 0.0) || !std::isfinite(lambda)) {
        throw Error(Errc::InvalidInput, "lambda must be positive");
    }
    if (epochs < 1) {
        throw Error(Errc::InvalidInput, "epochs must be at least 1");
    }
    bool two_labels = false;
    for (const auto& ex : data) {
        two_labels = two_labels || ex.label != data.front().label;
    }
    if (!two_labels) {
        throw Error(Errc::DegenerateData, "SVM training needs at least two distinct labels");
    }

    const std::size_t vocab_size = data.front().features.dimensionality;
    const std::size_t n = data.size();
    const double radius2 = 1.0 / lambda;
    LinearSvmModel model;
    model.lambda = lambda;
    model.epochs = epochs;
    model.seed = seed;
    model.vocab_fingerprint = data.front().features.vocab_fingerprint;

    struct State {
        std::vector<double> v;
        double scale = 1.0;
        double v_norm2 = 0.0;  // |v|^2
        double bias = 0.0;
    };
    std::array<State, kNumClasses> st;
    std::array<double, kNumClasses> best_objective{};
    for (std::size_t c = 0; c < kNumClasses; ++c) {
        st[c].v.assign(vocab_size, 0.0);
        model.weights[c].assign(vocab_size, 0.0);
        best_objective[c] = 1.0;  // all-zero model: every hinge is 1
    }

    std::vector<double> ys(n);
    std::vector<double> scores(n);
    auto renormalize = [](State& s) {
        for (auto& e : s.v) {
            e *= s.scale;
        }
        s.v_norm2 = std::inner_product(s.v.begin(), s.v.end(), s.v.begin(), 0.0);
        s.scale = 1.0;
    };

    Xoshiro256 rng(seed);
    std::vector<std::size_t> order(n);
    std::uint64_t t = 0;
    for (int epoch = 0; epoch < epochs; ++epoch) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        shuffle(order, rng);
        for (const auto idx : order) {
            ++t;
            const auto& ex = data[idx];
            const double eta = 1.0 / (lambda * static_cast<double>(t));
            for (std::size_t c = 0; c < kNumClasses; ++c) {
                auto& s = st[c];
                const double y = static_cast<std::size_t>(ex.label) == c ? 1.0 : -1.0;
                const double margin = y * (s.scale * detail::sparse_dot(s.v, ex.features) + s.bias);
                const double shrink = 1.0 - eta * lambda;  // == 1 - 1/t
                if (shrink <= 0.0) {
                    // First step: w is zeroed before the gradient step.
                    std::fill(s.v.begin(), s.v.end(), 0.0);
                    s.v_norm2 = 0.0;
                    s.scale = 1.0;
                } else {
                    s.scale *= shrink;
                }
                if (margin < 1.0) {
                    const double step = eta * y / s.scale;
                    for (const auto& [i, x] : ex.features.entries) {
                        const double d = step * x;
                        s.v_norm2 += d * (2.0 * s.v[i] + d);
                        s.v[i] += d;
                    }
                }
                const double w_norm2 = s.scale * s.scale * std::max(0.0, s.v_norm2);
                if (w_norm2 > radius2) {
                    s.scale *= std::sqrt(radius2 / w_norm2);
                }
                if (s.scale < 1e-9) {
                    renormalize(s);
                }
            }
        }
        for (std::size_t c = 0; c < kNumClasses; ++c) {
            auto& s = st[c];
            renormalize(s);
            for (std::size_t i = 0; i < n; ++i) {
                ys[i] = static_cast<std::size_t>(data[i].label) == c ? 1.0 : -1.0;
                scores[i] = detail::sparse_dot(s.v, data[i].features);
            }
            s.bias = detail::optimal_bias(scores, ys);
            double hinge = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                hinge += std::max(0.0, 1.0 - ys[i] * (scores[i] + s.bias));
            }
            const double objective = 0.5 * lambda * s.v_norm2 + hinge / static_cast<double>(n);
            if (objective < best_objective[c]) {
                best_objective[c] = objective;
                model.weights[c] = s.v;
                model.bias[c] = s.bias;
            }
        }
    }
    return model;
}

// Logistic of the gap between the best and second-best margins.
inline double svm_confidence(const ClassScores& margins) {
    ClassScores sorted = margins;
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    return 1.0 / (1.0 + std::exp(-(sorted[0] - sorted[1])));
}

inline Prediction predict_svm(const LinearSvmModel& model, const FeatureVector& fv) {
    if (fv.vocab_fingerprint != model.vocab_fingerprint || fv.dimensionality != model.dimensionality()) {
        throw Error(Errc::VocabMismatch, "feature vector does not belong to the model's vocabulary");
    }
    Prediction p;
    p.scores = svm_margins(model, fv);
    p.label = argmax(p.scores);
    p.confidence = svm_confidence(p.scores);
    return p;
}

}  // namespace rubric
