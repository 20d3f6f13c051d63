#pragma once

#include "rubric/error.hpp"
#include "rubric/hashing.hpp"
#include "rubric/text_preprocess.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace rubric {

enum class Weighting : std::uint8_t { Counts = 0, TfIdf = 1 };

inline std::string_view to_string(Weighting w) { return w == Weighting::Counts ? "counts" : "tfidf"; }

struct FeatureConfig {
    int ngram_max = 1;
    std::uint32_t min_df = 1;
    double max_df_ratio = 1.0;
    Weighting weighting = Weighting::Counts;

    void validate() const {
        if (ngram_max != 1 && ngram_max != 2) {
            throw Error(Errc::InvalidInput, "ngram_max must be 1 or 2");
        }
        if (min_df < 1) {
            throw Error(Errc::InvalidInput, "min_df must be at least 1");
        }
        if (!(max_df_ratio > 0.0 && max_df_ratio <= 1.0)) {
            throw Error(Errc::InvalidInput, "max_df_ratio must be in (0, 1]");
        }
    }

    void validate_for_corpus(std::size_t corpus_size) const {
        validate();
        if (min_df > corpus_size) {
            throw Error(Errc::InvalidInput, "min_df exceeds corpus size");
        }
        if (max_df_ratio * static_cast<double>(corpus_size) < static_cast<double>(min_df)) {
            throw Error(Errc::InvalidInput, "max_df_ratio * N is below min_df");
        }
    }

    friend bool operator==(const FeatureConfig&, const FeatureConfig&) = default;
};

inline std::string describe(const FeatureConfig& c) {
    return std::string(to_string(c.weighting)) + ",ngram<=" + std::to_string(c.ngram_max) +
           ",min_df=" + std::to_string(c.min_df) +
           (c.max_df_ratio < 1.0 ? ",max_df=" + std::to_string(c.max_df_ratio) : std::string());
}

// Term occurrences of a document: every n-gram for n = 1..ngram_max, in
// order, bigram parts joined by a single space.
inline std::vector<std::string> document_terms(const NormalizedEssay& essay, int ngram_max) {
    std::vector<std::string> terms;
    const auto& toks = essay.tokens;
    terms.reserve(toks.size() * static_cast<std::size_t>(ngram_max));
    for (std::size_t i = 0; i < toks.size(); ++i) {
        terms.push_back(toks[i].normalized);
        if (ngram_max >= 2 && i + 1 < toks.size()) {
            terms.push_back(toks[i].normalized + ' ' + toks[i + 1].normalized);
        }
    }
    return terms;
}

// Smoothed inverse document frequency: ln((1 + N) / (1 + df)) + 1.
inline double smoothed_idf(std::uint64_t total_docs, std::uint32_t doc_freq) {
    return std::log((1.0 + static_cast<double>(total_docs)) / (1.0 + static_cast<double>(doc_freq))) + 1.0;
}

// Term index of a trained feature space. Indices follow lexicographic
// (byte-wise) term order, so the same term set always maps identically.
class Vocabulary {
public:
    Vocabulary() = default;

    // `terms` must be strictly increasing; `doc_freq` is parallel to it.
    Vocabulary(FeatureConfig config,
               std::uint64_t total_docs,
               std::vector<std::string> terms,
               std::vector<std::uint32_t> doc_freq)
            : m_config(config),
              m_total_docs(total_docs),
              m_terms(std::move(terms)),
              m_doc_freq(std::move(doc_freq)) {
        if (m_terms.size() != m_doc_freq.size()) {
            throw Error(Errc::InvalidInput, "vocabulary terms and document frequencies differ in length");
        }
        for (std::size_t i = 1; i < m_terms.size(); ++i) {
            if (!(m_terms[i - 1] < m_terms[i])) {
                throw Error(Errc::InvalidInput, "vocabulary terms must be unique and sorted");
            }
        }
        m_idf.reserve(m_doc_freq.size());
        for (auto df : m_doc_freq) {
            m_idf.push_back(smoothed_idf(m_total_docs, df));
        }
        m_fingerprint = compute_fingerprint();
    }

    std::size_t size() const { return m_terms.size(); }
    const FeatureConfig& config() const { return m_config; }
    std::uint64_t total_docs() const { return m_total_docs; }
    const std::vector<std::string>& terms() const { return m_terms; }
    const std::vector<std::uint32_t>& doc_freq() const { return m_doc_freq; }
    const std::string& term(std::size_t index) const { return m_terms.at(index); }
    double idf(std::size_t index) const { return m_idf[index]; }
    std::uint64_t fingerprint() const { return m_fingerprint; }

    std::optional<std::uint32_t> index_of(std::string_view term) const {
        const auto it = std::lower_bound(m_terms.begin(), m_terms.end(), term,
                                         [](const std::string& a, std::string_view b) { return a < b; });
        if (it == m_terms.end() || *it != term) {
            return std::nullopt;
        }
        return static_cast<std::uint32_t>(it - m_terms.begin());
    }

    friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
        return a.m_config == b.m_config && a.m_total_docs == b.m_total_docs && a.m_terms == b.m_terms &&
               a.m_doc_freq == b.m_doc_freq;
    }

private:
    // CRC-64 over "rbrk-vocab", the feature config, N, then each term followed
    // by a NUL and its little-endian 32-bit document frequency.
    std::uint64_t compute_fingerprint() const {
        Crc64 crc;
        crc.update(std::string_view("rbrk-vocab"));
        auto put = [&crc](std::uint64_t v, int bytes) {
            for (int i = 0; i < bytes; ++i) {
                const auto b = static_cast<char>((v >> (8 * i)) & 0xFF);
                crc.update(std::string_view(&b, 1));
            }
        };
        put(static_cast<std::uint64_t>(m_config.ngram_max), 1);
        put(m_config.min_df, 4);
        put(std::bit_cast<std::uint64_t>(m_config.max_df_ratio), 8);
        put(static_cast<std::uint64_t>(m_config.weighting), 1);
        put(m_total_docs, 8);
        for (std::size_t i = 0; i < m_terms.size(); ++i) {
            crc.update(m_terms[i]);
            put(0, 1);
            put(m_doc_freq[i], 4);
        }
        return crc.value();
    }

    FeatureConfig m_config;
    std::uint64_t m_total_docs = 0;
    std::vector<std::string> m_terms;
    std::vector<std::uint32_t> m_doc_freq;
    std::vector<double> m_idf;
    std::uint64_t m_fingerprint = 0;
};

// Sparse vector: entries sorted by index, every weight > 0.
struct FeatureVector {
    std::vector<std::pair<std::uint32_t, double>> entries;
    std::size_t dimensionality = 0;
    std::uint64_t vocab_fingerprint = 0;

    bool empty() const { return entries.empty(); }

    double weight(std::uint32_t index) const {
        const auto it = std::lower_bound(entries.begin(), entries.end(), index,
                                         [](const auto& e, std::uint32_t i) { return e.first < i; });
        return it != entries.end() && it->first == index ? it->second : 0.0;
    }

    double l2_norm() const {
        double sum = 0.0;
        for (const auto& [i, w] : entries) {
            sum += w * w;
        }
        return std::sqrt(sum);
    }

    friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
};

namespace detail {

inline bool df_in_band(std::uint32_t df, std::uint64_t total_docs, const FeatureConfig& config) {
    return df >= config.min_df && static_cast<double>(df) <= config.max_df_ratio * static_cast<double>(total_docs);
}

// Turns sorted (index, term count) pairs into final weights.
inline void finish_vector(FeatureVector& fv, const Vocabulary& vocab) {
    if (vocab.config().weighting == Weighting::TfIdf && !fv.entries.empty()) {
        double norm = 0.0;
        for (auto& [i, w] : fv.entries) {
            w *= vocab.idf(i);
            norm += w * w;
        }
        norm = std::sqrt(norm);
        for (auto& e : fv.entries) {
            e.second /= norm;
        }
    }
}

}  // namespace detail

inline Vocabulary build_vocabulary(std::span<const NormalizedEssay> corpus, const FeatureConfig& config) {
    if (corpus.empty()) {
        throw Error(Errc::InvalidInput, "cannot build a vocabulary from an empty corpus");
    }
    config.validate_for_corpus(corpus.size());
    std::map<std::string, std::uint32_t> df;
    for (const auto& essay : corpus) {
        auto terms = document_terms(essay, config.ngram_max);
        std::sort(terms.begin(), terms.end());
        terms.erase(std::unique(terms.begin(), terms.end()), terms.end());
        for (auto& t : terms) {
            ++df[std::move(t)];
        }
    }
    std::vector<std::string> terms;
    std::vector<std::uint32_t> freqs;
    for (auto& [term, count] : df) {
        if (detail::df_in_band(count, corpus.size(), config)) {
            terms.push_back(term);
            freqs.push_back(count);
        }
    }
    if (terms.empty()) {
        throw Error(Errc::EmptyVocabulary, "no term survives document-frequency filtering");
    }
    return Vocabulary(config, corpus.size(), std::move(terms), std::move(freqs));
}

// Out-of-vocabulary terms are dropped.
inline FeatureVector vectorize(const NormalizedEssay& essay, const Vocabulary& vocab) {
    FeatureVector fv;
    fv.dimensionality = vocab.size();
    fv.vocab_fingerprint = vocab.fingerprint();
    std::map<std::uint32_t, double> counts;
    for (const auto& term : document_terms(essay, vocab.config().ngram_max)) {
        if (const auto index = vocab.index_of(term)) {
            counts[*index] += 1.0;
        }
    }
    fv.entries.assign(counts.begin(), counts.end());
    detail::finish_vector(fv, vocab);
    return fv;
}

// A corpus with every term interned once. Global term ids follow
// lexicographic order, so any subset of ids kept in ascending order is
// already in vocabulary index order. Used to build many fold vocabularies
// over the same essays without re-hashing strings.
class TermCorpus {
public:
    TermCorpus(std::span<const NormalizedEssay> corpus, int ngram_max) : m_ngram_max(ngram_max) {
        std::map<std::string, std::uint32_t> ids;
        std::vector<std::vector<std::string>> per_doc;
        per_doc.reserve(corpus.size());
        for (const auto& essay : corpus) {
            auto terms = document_terms(essay, ngram_max);
            for (const auto& t : terms) {
                ids.emplace(t, 0);
            }
            per_doc.push_back(std::move(terms));
        }
        m_terms.reserve(ids.size());
        std::uint32_t next = 0;
        for (auto& [term, id] : ids) {
            id = next++;
            m_terms.push_back(term);
        }
        m_docs.reserve(per_doc.size());
        for (const auto& terms : per_doc) {
            std::map<std::uint32_t, std::uint32_t> counts;
            for (const auto& t : terms) {
                ++counts[ids.at(t)];
            }
            m_docs.emplace_back(counts.begin(), counts.end());
        }
    }

    int ngram_max() const { return m_ngram_max; }
    std::size_t size() const { return m_docs.size(); }
    std::size_t term_count() const { return m_terms.size(); }

    // Fold-local feature space built from the documents in `train_docs`.
    class Space {
    public:
        const Vocabulary& vocabulary() const { return m_vocab; }

        FeatureVector vectorize(std::size_t doc) const {
            FeatureVector fv;
            fv.dimensionality = m_vocab.size();
            fv.vocab_fingerprint = m_vocab.fingerprint();
            for (const auto& [gid, count] : m_corpus->m_docs[doc]) {
                const auto local = m_local[gid];
                if (local >= 0) {
                    fv.entries.emplace_back(static_cast<std::uint32_t>(local), static_cast<double>(count));
                }
            }
            detail::finish_vector(fv, m_vocab);
            return fv;
        }

    private:
        friend class TermCorpus;
        const TermCorpus* m_corpus = nullptr;
        Vocabulary m_vocab;
        std::vector<std::int32_t> m_local;
    };

    Space space(std::span<const std::size_t> train_docs, const FeatureConfig& config) const {
        if (config.ngram_max != m_ngram_max) {
            throw Error(Errc::InvalidInput, "feature config n-gram order differs from term corpus");
        }
        if (train_docs.empty()) {
            throw Error(Errc::InvalidInput, "cannot build a vocabulary from an empty corpus");
        }
        config.validate_for_corpus(train_docs.size());
        std::vector<std::uint32_t> df(m_terms.size(), 0);
        for (auto d : train_docs) {
            for (const auto& [gid, count] : m_docs.at(d)) {
                ++df[gid];
            }
        }
        Space s;
        s.m_corpus = this;
        s.m_local.assign(m_terms.size(), -1);
        std::vector<std::string> terms;
        std::vector<std::uint32_t> freqs;
        for (std::uint32_t gid = 0; gid < m_terms.size(); ++gid) {
            if (df[gid] > 0 && detail::df_in_band(df[gid], train_docs.size(), config)) {
                s.m_local[gid] = static_cast<std::int32_t>(terms.size());
                terms.push_back(m_terms[gid]);
                freqs.push_back(df[gid]);
            }
        }
        if (terms.empty()) {
            throw Error(Errc::EmptyVocabulary, "no term survives document-frequency filtering");
        }
        s.m_vocab = Vocabulary(config, train_docs.size(), std::move(terms), std::move(freqs));
        return s;
    }

private:
    int m_ngram_max;
    std::vector<std::string> m_terms;
    std::vector<std::vector<std::pair<std::uint32_t, std::uint32_t>>> m_docs;
};

}  // namespace rubric
