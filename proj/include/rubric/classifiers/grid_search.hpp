#pragma once

#include "rubric/classifiers/model.hpp"
#include "rubric/random.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <map>
#include <memory>
#include <sstream>
#include <thread>
#include <tuple>
#include <variant>
#include <vector>

namespace rubric {

struct NbParams {
    double alpha = 1.0;
    friend bool operator==(const NbParams&, const NbParams&) = default;
};

struct SvmParams {
    double lambda = 1e-3;
    int epochs = 10;
    friend bool operator==(const SvmParams&, const SvmParams&) = default;
};

using ModelParams = std::variant<NbParams, SvmParams>;

struct GridCell {
    FeatureConfig features;
    ModelParams model;

    friend bool operator==(const GridCell&, const GridCell&) = default;
};

inline std::string describe(const GridCell& cell) {
    std::ostringstream os;
    os << describe(cell.features) << " ";
    if (const auto* nb = std::get_if<NbParams>(&cell.model)) {
        os << "nb(alpha=" << nb->alpha << ")";
    } else {
        const auto& svm = std::get<SvmParams>(cell.model);
        os << "svm(lambda=" << svm.lambda << ",epochs=" << svm.epochs << ")";
    }
    return os.str();
}

enum class Metric { Accuracy, MacroF1, MacroPrecision };

inline std::string_view to_string(Metric m) {
    switch (m) {
    case Metric::Accuracy: return "accuracy";
    case Metric::MacroF1: return "macro_f1";
    case Metric::MacroPrecision: return "macro_precision";
    }
    return "?";
}

inline double metric_value(const EvalReport& r, Metric m) {
    switch (m) {
    case Metric::Accuracy: return r.accuracy;
    case Metric::MacroF1: return r.macro_f1;
    case Metric::MacroPrecision: return r.macro_precision;
    }
    return 0.0;
}

struct GridSearchSpec {
    std::vector<FeatureConfig> feature_configs;
    std::vector<double> nb_alphas;
    std::vector<SvmParams> svm_params;
    int folds = 5;
    std::uint64_t seed = 42;
    Metric metric = Metric::MacroF1;

    // {counts, tfidf} x {1, 2}-grams x min_df {1, 2}; alpha {0.1, 0.5, 1};
    // lambda {1e-4, 1e-3, 1e-2} x epochs {10, 30}; 5 folds.
    static GridSearchSpec defaults() {
        GridSearchSpec spec;
        for (auto w : {Weighting::Counts, Weighting::TfIdf}) {
            for (int n : {1, 2}) {
                for (std::uint32_t min_df : {1u, 2u}) {
                    spec.feature_configs.push_back({n, min_df, 1.0, w});
                }
            }
        }
        spec.nb_alphas = {0.1, 0.5, 1.0};
        for (double lambda : {1e-4, 1e-3, 1e-2}) {
            for (int epochs : {10, 30}) {
                spec.svm_params.push_back({lambda, epochs});
            }
        }
        return spec;
    }

    void validate() const {
        if (folds < 2) {
            throw Error(Errc::InvalidInput, "grid search needs at least 2 folds");
        }
        if (feature_configs.empty()) {
            throw Error(Errc::InvalidInput, "grid search needs at least one feature config");
        }
        for (const auto& fc : feature_configs) {
            fc.validate();
        }
        for (double a : nb_alphas) {
            if (!(a > 0.0)) {
                throw Error(Errc::InvalidInput, "naive Bayes alpha must be positive");
            }
        }
        for (const auto& p : svm_params) {
            if (!(p.lambda > 0.0) || p.epochs < 1) {
                throw Error(Errc::InvalidInput, "SVM lambda must be positive and epochs >= 1");
            }
        }
        if (cells().empty()) {
            throw Error(Errc::InvalidInput, "grid has no cells (naive Bayes only runs on count features)");
        }
    }

    // Enumeration order: feature configs as listed (outer); within each,
    // naive Bayes cells by ascending alpha, then SVM cells by ascending
    // (lambda, epochs). Naive Bayes cells exist only for count features.
    std::vector<GridCell> cells() const {
        auto alphas = nb_alphas;
        std::sort(alphas.begin(), alphas.end());
        auto svms = svm_params;
        std::sort(svms.begin(), svms.end(), [](const SvmParams& a, const SvmParams& b) {
            return std::tie(a.lambda, a.epochs) < std::tie(b.lambda, b.epochs);
        });
        std::vector<GridCell> out;
        for (const auto& fc : feature_configs) {
            if (fc.weighting == Weighting::Counts) {
                for (double a : alphas) {
                    out.push_back({fc, NbParams{a}});
                }
            }
            for (const auto& s : svms) {
                out.push_back({fc, s});
            }
        }
        return out;
    }
};

struct CvRow {
    GridCell cell;
    std::vector<double> fold_scores;
    double mean = 0.0;

    friend bool operator==(const CvRow&, const CvRow&) = default;
};

struct GridSearchResult {
    Metric metric = Metric::MacroF1;
    std::size_t best_index = 0;
    std::vector<CvRow> table;

    const CvRow& best() const { return table.at(best_index); }
};

struct GridSearchOptions {
    // Leakage diagnostic: score every validation fold against a seeded
    // permutation of its own labels.
    bool permute_validation_labels = false;
    // 0 = std::thread::hardware_concurrency().
    unsigned threads = 0;
};

// Validation index sets for k stratified folds. Each class's examples are
// shuffled with one seeded stream (classes visited 0, 1, 2) and dealt
// round-robin, continuing the deal across classes so fold sizes differ by at
// most one. Every class that occurs must occur at least k times.
inline std::vector<std::vector<std::size_t>> stratified_folds(std::span<const int> labels, int k, std::uint64_t seed) {
    if (k < 2) {
        throw Error(Errc::InvalidInput, "need at least 2 folds");
    }
    std::array<std::vector<std::size_t>, kNumClasses> by_class;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        check_label(labels[i]);
        by_class[static_cast<std::size_t>(labels[i])].push_back(i);
    }
    for (std::size_t c = 0; c < kNumClasses; ++c) {
        if (!by_class[c].empty() && by_class[c].size() < static_cast<std::size_t>(k)) {
            throw Error(Errc::InfeasibleStratification,
                        "class " + std::to_string(c) + " has " + std::to_string(by_class[c].size()) +
                                " examples, fewer than " + std::to_string(k) + " folds");
        }
    }
    Xoshiro256 rng(seed);
    std::vector<std::vector<std::size_t>> folds(static_cast<std::size_t>(k));
    std::size_t dealt = 0;
    for (auto& members : by_class) {
        shuffle(members, rng);
        for (auto idx : members) {
            folds[dealt++ % folds.size()].push_back(idx);
        }
    }
    for (auto& f : folds) {
        std::sort(f.begin(), f.end());
    }
    return folds;
}

namespace detail {

inline TrainedModel train_model(std::span<const LabeledExample> data, const ModelParams& params, std::uint64_t seed) {
    if (const auto* nb = std::get_if<NbParams>(&params)) {
        return train_nb(data, nb->alpha);
    }
    const auto& svm = std::get<SvmParams>(params);
    return train_svm(data, svm.lambda, svm.epochs, seed);
}

// Runs fn(0..count-1) on up to `threads` workers; rethrows the exception of
// the lowest failing job index.
template <typename Fn>
void parallel_for(std::size_t count, unsigned threads, Fn&& fn) {
    if (threads == 0) {
        threads = std::max(1u, std::thread::hardware_concurrency());
    }
    std::vector<std::exception_ptr> errors(count);
    auto run = [&](std::size_t i) {
        try {
            fn(i);
        } catch (...) {
            errors[i] = std::current_exception();
        }
    };
    if (threads <= 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) {
            run(i);
        }
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < std::min<std::size_t>(threads, count); ++t) {
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < count; i = next++) {
                    run(i);
                }
            });
        }
    }
    for (auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
}

}  // namespace detail

// k-fold stratified cross-validation over every grid cell. Vocabularies are
// built from each training fold only. The winner is the cell with the highest
// mean metric; ties go to the earliest cell in enumeration order.
inline GridSearchResult grid_search(std::span<const NormalizedEssay> corpus,
                                    std::span<const int> labels,
                                    const GridSearchSpec& spec,
                                    const GridSearchOptions& options = {}) {
    spec.validate();
    if (corpus.size() != labels.size()) {
        throw Error(Errc::InvalidInput, "corpus and labels differ in length");
    }
    const auto folds = stratified_folds(labels, spec.folds, spec.seed);
    const auto cells = spec.cells();

    std::map<int, std::unique_ptr<TermCorpus>> term_corpora;
    for (const auto& fc : spec.feature_configs) {
        if (!term_corpora.contains(fc.ngram_max)) {
            term_corpora.emplace(fc.ngram_max, std::make_unique<TermCorpus>(corpus, fc.ngram_max));
        }
    }

    GridSearchResult result;
    result.metric = spec.metric;
    result.table.reserve(cells.size());
    for (const auto& c : cells) {
        result.table.push_back({c, std::vector<double>(folds.size(), 0.0), 0.0});
    }

    // One job per (fold, feature config); it scores every model cell that
    // shares the feature config. Results land in fixed slots.
    const std::size_t n_fc = spec.feature_configs.size();
    detail::parallel_for(folds.size() * n_fc, options.threads, [&](std::size_t job) {
        const std::size_t f = job / n_fc;
        const auto& fc = spec.feature_configs[job % n_fc];
        std::vector<char> in_validation(corpus.size(), 0);
        for (auto i : folds[f]) {
            in_validation[i] = 1;
        }
        std::vector<std::size_t> train_idx;
        for (std::size_t i = 0; i < corpus.size(); ++i) {
            if (!in_validation[i]) {
                train_idx.push_back(i);
            }
        }
        const auto space = term_corpora.at(fc.ngram_max)->space(train_idx, fc);
        std::vector<LabeledExample> train;
        train.reserve(train_idx.size());
        for (auto i : train_idx) {
            train.push_back({space.vectorize(i), labels[i]});
        }
        std::vector<FeatureVector> valid;
        std::vector<int> valid_labels;
        for (auto i : folds[f]) {
            valid.push_back(space.vectorize(i));
            valid_labels.push_back(labels[i]);
        }
        if (options.permute_validation_labels) {
            Xoshiro256 rng(spec.seed ^ (0x9E3779B97F4A7C15ULL * (f + 1)));
            shuffle(valid_labels, rng);
        }
        for (std::size_t ci = 0; ci < cells.size(); ++ci) {
            if (!(cells[ci].features == fc)) {
                continue;
            }
            const auto model = detail::train_model(train, cells[ci].model, spec.seed);
            std::vector<int> predicted;
            predicted.reserve(valid.size());
            for (const auto& fv : valid) {
                predicted.push_back(predict(model, fv).label);
            }
            result.table[ci].fold_scores[f] = metric_value(evaluate_predictions(valid_labels, predicted), spec.metric);
        }
    });

    for (std::size_t ci = 0; ci < result.table.size(); ++ci) {
        auto& row = result.table[ci];
        double sum = 0.0;
        for (double s : row.fold_scores) {
            sum += s;
        }
        row.mean = sum / static_cast<double>(row.fold_scores.size());
        if (row.mean > result.table[result.best_index].mean) {
            result.best_index = ci;
        }
    }
    return result;
}

struct TrainedCell {
    Vocabulary vocabulary;
    TrainedModel model;
    EvalReport training_report;
};

// Fits one grid cell on the whole corpus.
inline TrainedCell train_cell(std::span<const NormalizedEssay> corpus,
                              std::span<const int> labels,
                              const GridCell& cell,
                              std::uint64_t seed) {
    if (corpus.size() != labels.size()) {
        throw Error(Errc::InvalidInput, "corpus and labels differ in length");
    }
    TrainedCell out;
    out.vocabulary = build_vocabulary(corpus, cell.features);
    std::vector<LabeledExample> data;
    data.reserve(corpus.size());
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        data.push_back({vectorize(corpus[i], out.vocabulary), labels[i]});
    }
    out.model = detail::train_model(data, cell.model, seed);
    out.training_report = evaluate(out.model, data);
    return out;
}

}  // namespace rubric
