#pragma once

#include "rubric/classifiers/common.hpp"
#include "rubric/error.hpp"
#include "rubric/hashing.hpp"

#include <array>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace rubric {

inline constexpr std::array<std::string_view, 2> kPlaceholders{"customer_name", "dimension_name"};

// Draft feedback sentences for one dimension, one non-empty list per score.
struct FeedbackTemplateSet {
    std::string dimension_id;
    std::array<std::vector<std::string>, kNumClasses> templates;

    friend bool operator==(const FeedbackTemplateSet&, const FeedbackTemplateSet&) = default;
};

struct FeedbackContext {
    std::string customer_name;
    std::string dimension_name;
};

namespace detail {

struct TemplatePiece {
    bool placeholder;
    std::string text;
};

// Splits a template into literal text and {name} placeholders. An unmatched
// brace is reported as an unknown placeholder.
inline std::vector<TemplatePiece> parse_template(std::string_view tmpl) {
    std::vector<TemplatePiece> pieces;
    std::string literal;
    std::size_t i = 0;
    while (i < tmpl.size()) {
        const char c = tmpl[i];
        if (c == '}') {
            throw Error(Errc::UnknownPlaceholder, "unmatched '}' in template");
        }
        if (c != '{') {
            literal += c;
            ++i;
            continue;
        }
        const auto close = tmpl.find('}', i + 1);
        if (close == std::string_view::npos) {
            throw Error(Errc::UnknownPlaceholder, "unterminated placeholder in template");
        }
        std::string name(tmpl.substr(i + 1, close - i - 1));
        bool known = false;
        for (auto p : kPlaceholders) {
            known = known || p == name;
        }
        if (!known) {
            throw Error(Errc::UnknownPlaceholder, "unknown placeholder {" + name + "}");
        }
        if (!literal.empty()) {
            pieces.push_back({false, std::move(literal)});
            literal.clear();
        }
        pieces.push_back({true, std::move(name)});
        i = close + 1;
    }
    if (!literal.empty()) {
        pieces.push_back({false, std::move(literal)});
    }
    return pieces;
}

inline bool is_blank(std::string_view s) { return s.find_first_not_of(" \t\r\n") == std::string_view::npos; }

}  // namespace detail

// Variant index used for (essay, dimension): FNV-1a 64 over the UTF-8 bytes of
// essay_id immediately followed by dimension_id, modulo the variant count.
inline std::size_t feedback_variant(std::string_view essay_id, std::string_view dimension_id, std::size_t variants) {
    std::string key;
    key.reserve(essay_id.size() + dimension_id.size());
    key.append(essay_id).append(dimension_id);
    return static_cast<std::size_t>(fnv1a64(key) % variants);
}

// Substitution is single-pass: substituted values are never re-scanned.
inline std::string render_feedback(const FeedbackTemplateSet& set,
                                   int score,
                                   const FeedbackContext& context,
                                   std::string_view essay_id) {
    check_label(score);
    const auto& variants = set.templates[static_cast<std::size_t>(score)];
    if (variants.empty()) {
        throw Error(Errc::TemplateMissing, "no template for score " + std::to_string(score), set.dimension_id);
    }
    const auto& tmpl = variants[feedback_variant(essay_id, set.dimension_id, variants.size())];
    std::string out;
    for (const auto& piece : detail::parse_template(tmpl)) {
        if (!piece.placeholder) {
            out += piece.text;
        } else if (piece.text == "customer_name") {
            out += context.customer_name;
        } else {
            out += context.dimension_name;
        }
    }
    if (detail::is_blank(out)) {
        throw Error(Errc::TemplateMissing, "template renders to empty text for score " + std::to_string(score),
                    set.dimension_id);
    }
    return out;
}

// Static checks; returns one human-readable diagnostic per problem, empty when
// the set is valid.
inline std::vector<std::string> validate_template_set(const FeedbackTemplateSet& set) {
    std::vector<std::string> diagnostics;
    if (set.dimension_id.empty()) {
        diagnostics.emplace_back("dimension_id is empty");
    }
    for (std::size_t score = 0; score < kNumClasses; ++score) {
        const auto& variants = set.templates[score];
        if (variants.empty()) {
            diagnostics.push_back("score " + std::to_string(score) + " uncovered");
            continue;
        }
        for (std::size_t v = 0; v < variants.size(); ++v) {
            const std::string where = "score " + std::to_string(score) + " template " + std::to_string(v);
            try {
                bool has_literal = false;
                for (const auto& piece : detail::parse_template(variants[v])) {
                    has_literal = has_literal || (!piece.placeholder && !detail::is_blank(piece.text));
                }
                if (!has_literal) {
                    diagnostics.push_back(where + ": template has no literal text");
                }
            } catch (const Error& e) {
                diagnostics.push_back(where + ": " + e.message());
            }
        }
    }
    return diagnostics;
}

}  // namespace rubric
