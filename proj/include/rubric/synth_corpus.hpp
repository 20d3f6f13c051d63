#pragma once

// Deterministic synthetic corpus with planted per-dimension keyword signals.
//
// Density rule: for every essay and every dimension, exactly
// `keywords_per_dimension` tokens are drawn (uniformly, with replacement)
// from the keyword family of that dimension's true score. The remaining
// tokens are filler, so the essay has a total length drawn uniformly from
// [min_tokens, max_tokens] before sentence punctuation is added.
//
// Random draw order per essay (one xoshiro256** stream seeded with `seed`):
//   1. total length
//   2. per dimension, in keyword table order: true score, noise coin, noise redraw,
//      then the keyword picks
//   3. filler picks (one uniform_below per filler slot)
//   4. Fisher-Yates shuffle of all tokens
//   5. sentence lengths in [6, 14]
// The noise coin and redraw are always consumed so the stream is independent
// of label_noise. The recorded label is the redraw when the coin comes up
// (it may equal the true score).

#include "rubric/corpus.hpp"
#include "rubric/random.hpp"

#include <array>
#include <cstdio>
#include <set>
#include <string>
#include <vector>

namespace rubric {

struct DimensionKeywords {
    std::string dimension_id;
    std::array<std::vector<std::string>, kNumClasses> families;
};

inline const std::vector<std::string>& default_filler_words() {
    static const std::vector<std::string> words{
            "the",       "and",       "of",         "to",         "a",         "in",        "is",
            "that",      "for",       "it",         "with",       "as",        "was",       "on",
            "this",      "are",       "be",         "at",         "by",        "we",        "our",
            "have",      "from",      "or",         "an",         "they",      "which",     "their",
            "business",  "customer",  "service",    "product",    "market",    "team",      "plan",
            "growth",    "company",   "strategy",   "value",      "process",   "quality",   "client",
            "project",   "result",    "budget",     "goal",       "idea",      "approach",  "support",
            "training",  "leader",    "change",     "example",    "problem",   "solution",  "office",
            "manager",   "employee",  "report",     "meeting",    "decision",  "progress",  "skill",
            "experience", "community", "industry",  "partner",    "season",    "morning",   "evening",
            "journey",   "question",  "answer",     "window",     "garden",    "river",     "mountain",
            "city",      "village",   "friend",     "family",     "school",    "teacher",   "student",
            "history",   "future",    "picture",    "story",      "letter",    "music",     "language",
            "system",    "network",   "platform",   "channel",    "feature",   "schedule",  "record",
            "balance",   "effort",    "pattern",    "detail",     "level",     "method",    "resource",
            "benefit",   "risk",      "choice",     "outcome",    "moment",    "reason",    "purpose",
            "practice",  "standard",  "priority",   "focus",      "option",    "measure",   "factor",
            "develop",   "build",     "create",     "improve",    "deliver",   "explain",   "describe",
            "consider",  "discuss",   "learn",      "share",      "manage",    "organize",  "review",
            "careful",   "steady",    "simple",     "useful",     "recent",    "general",   "several",
            "important", "different", "possible",   "available",  "personal",  "local",     "regular"};
    return words;
}

// Pseudo-word keyword families: prefix per dimension, infix per score, suffix
// per family member. Every word is unique, so families are disjoint across
// scores and dimensions.
inline std::vector<DimensionKeywords> default_dimension_keywords(std::size_t dimensions = 13, std::size_t family_size = 4) {
    static constexpr std::array<std::string_view, 16> kPrefix{"ka", "lo", "mi", "ne", "pu", "ra", "si", "to",
                                                              "vu", "ze", "bo", "du", "fe", "gi", "ha", "jo"};
    static constexpr std::array<std::string_view, 3> kInfix{"xan", "qor", "wil"};
    static constexpr std::array<std::string_view, 8> kSuffix{"ta", "mo", "ri", "ve", "su", "na", "pe", "lu"};
    if (dimensions == 0 || dimensions > kPrefix.size() * kPrefix.size() || family_size == 0 ||
        family_size > kSuffix.size()) {
        throw Error(Errc::InvalidInput, "unsupported keyword family shape");
    }
    std::vector<DimensionKeywords> out;
    for (std::size_t d = 0; d < dimensions; ++d) {
        char id[8];
        std::snprintf(id, sizeof id, "d%02zu", d + 1);
        DimensionKeywords k{id, {}};
        const std::string prefix = dimensions <= kPrefix.size()
                                           ? std::string(kPrefix[d])
                                           : std::string(kPrefix[d / kPrefix.size()]) + std::string(kPrefix[d % kPrefix.size()]);
        for (std::size_t s = 0; s < kNumClasses; ++s) {
            for (std::size_t m = 0; m < family_size; ++m) {
                k.families[s].push_back(prefix + std::string(kInfix[s]) + std::string(kSuffix[m]));
            }
        }
        out.push_back(std::move(k));
    }
    return out;
}

struct GeneratorSpec {
    std::uint64_t seed = 42;
    std::size_t essay_count = 1000;
    std::vector<DimensionKeywords> dimensions = default_dimension_keywords();
    double label_noise = 0.05;
    std::vector<std::string> filler = default_filler_words();
    std::size_t keywords_per_dimension = 3;
    std::size_t min_tokens = 150;
    std::size_t max_tokens = 400;
    double number_rate = 0.01;  // share of filler slots holding a year

    void validate() const {
        if (essay_count == 0) {
            throw Error(Errc::InvalidInput, "essay_count must be positive");
        }
        if (dimensions.empty()) {
            throw Error(Errc::InvalidInput, "at least one dimension is required");
        }
        if (!(label_noise >= 0.0 && label_noise < 0.5)) {
            throw Error(Errc::InvalidInput, "label_noise must be in [0, 0.5)");
        }
        if (!(number_rate >= 0.0 && number_rate <= 1.0)) {
            throw Error(Errc::InvalidInput, "number_rate must be in [0, 1]");
        }
        if (filler.empty()) {
            throw Error(Errc::InvalidInput, "filler vocabulary is empty");
        }
        if (keywords_per_dimension == 0 || min_tokens > max_tokens ||
            keywords_per_dimension * dimensions.size() > min_tokens) {
            throw Error(Errc::InvalidInput, "token bounds cannot hold the planted keywords");
        }
        std::set<std::string> ids;
        std::set<std::string> filler_set(filler.begin(), filler.end());
        for (const auto& d : dimensions) {
            if (!ids.insert(d.dimension_id).second) {
                throw Error(Errc::DuplicateDimension, "duplicate dimension '" + d.dimension_id + "'", d.dimension_id);
            }
            std::set<std::string> words;
            for (const auto& family : d.families) {
                if (family.empty()) {
                    throw Error(Errc::InvalidInput, "empty keyword family", d.dimension_id);
                }
                for (const auto& w : family) {
                    if (!words.insert(w).second) {
                        throw Error(Errc::InvalidInput, "keyword '" + w + "' appears in two families", d.dimension_id);
                    }
                    if (filler_set.contains(w)) {
                        throw Error(Errc::InvalidInput, "keyword '" + w + "' is also a filler word", d.dimension_id);
                    }
                }
            }
        }
    }
};

struct SyntheticCorpus {
    std::vector<RawEssay> essays;
    std::vector<EssayLabels> labels;      // recorded (possibly noisy) labels
    std::vector<EssayLabels> true_scores;  // scores whose keywords were planted
};

namespace detail {

inline std::string capitalize_ascii(std::string w) {
    if (!w.empty() && w[0] >= 'a' && w[0] <= 'z') {
        w[0] = static_cast<char>(w[0] - 'a' + 'A');
    }
    return w;
}

inline const std::array<std::string_view, 12>& first_names() {
    static constexpr std::array<std::string_view, 12> n{"Ada", "Bruno", "Chen", "Dana", "Elif", "Farah",
                                                        "Goran", "Hana", "Ivo", "Jonas", "Keiko", "Lena"};
    return n;
}

inline const std::array<std::string_view, 12>& last_names() {
    static constexpr std::array<std::string_view, 12> n{"Almeida", "Brandt", "Costa", "Dvorak", "Eriksen", "Fischer",
                                                        "Garcia", "Horvat", "Ito", "Jensen", "Kowalski", "Lind"};
    return n;
}

}  // namespace detail

inline SyntheticCorpus generate(const GeneratorSpec& spec) {
    spec.validate();
    Xoshiro256 rng(spec.seed);
    SyntheticCorpus out;
    out.essays.reserve(spec.essay_count);
    out.labels.reserve(spec.essay_count);
    out.true_scores.reserve(spec.essay_count);
    const auto start = Timestamp::parse("2021-01-01T00:00:00Z");

    for (std::size_t i = 0; i < spec.essay_count; ++i) {
        char id[32];
        std::snprintf(id, sizeof id, "essay-%04zu", i + 1);
        const auto total = static_cast<std::size_t>(rng.uniform_between(spec.min_tokens, spec.max_tokens));

        EssayLabels recorded{id, {}};
        EssayLabels truth{id, {}};
        std::vector<std::string> tokens;
        tokens.reserve(total);
        for (const auto& dim : spec.dimensions) {
            const int score = static_cast<int>(rng.uniform_below(kNumClasses));
            const bool flip = rng.uniform_unit() < spec.label_noise;
            const int redraw = static_cast<int>(rng.uniform_below(kNumClasses));
            truth.scores[dim.dimension_id] = score;
            recorded.scores[dim.dimension_id] = flip ? redraw : score;
            const auto& family = dim.families[static_cast<std::size_t>(score)];
            for (std::size_t k = 0; k < spec.keywords_per_dimension; ++k) {
                tokens.push_back(family[rng.uniform_below(family.size())]);
            }
        }
        while (tokens.size() < total) {
            const double u = rng.uniform_unit();
            if (u < spec.number_rate) {
                tokens.push_back(std::to_string(1990 + rng.uniform_below(35)));
            } else {
                tokens.push_back(spec.filler[rng.uniform_below(spec.filler.size())]);
            }
        }
        shuffle(tokens, rng);

        std::string body;
        std::size_t pos = 0;
        while (pos < tokens.size()) {
            const auto len = std::min<std::size_t>(rng.uniform_between(6, 14), tokens.size() - pos);
            if (!body.empty()) {
                body += ' ';
            }
            for (std::size_t k = 0; k < len; ++k) {
                body += k == 0 ? detail::capitalize_ascii(tokens[pos + k]) : tokens[pos + k];
                body += k + 1 == len ? "." : " ";
            }
            pos += len;
        }

        const auto& fn = detail::first_names();
        const auto& ln = detail::last_names();
        std::string customer = std::string(fn[i % fn.size()]) + " " + std::string(ln[(i / fn.size()) % ln.size()]);
        out.essays.push_back({id, std::move(customer), Timestamp::from_unix(start.unix_seconds() + 3600 * static_cast<std::int64_t>(i)),
                              std::move(body)});
        out.labels.push_back(std::move(recorded));
        out.true_scores.push_back(std::move(truth));
    }
    return out;
}

}  // namespace rubric
