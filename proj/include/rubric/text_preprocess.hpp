#pragma once

#include "rubric/error.hpp"
#include "rubric/timestamp.hpp"
#include "rubric/unicode.hpp"

#include <algorithm>
#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace rubric {

struct RawEssay {
    std::string essay_id;
    std::string customer_name;
    Timestamp submitted_at;
    std::string body;

    friend bool operator==(const RawEssay&, const RawEssay&) = default;
};

enum class TokenKind : std::uint8_t { Word, EmailMask, UrlMask, NumberMask, PersonMask };

inline constexpr std::string_view kEmailSentinel = "⟨email⟩";
inline constexpr std::string_view kUrlSentinel = "⟨url⟩";
inline constexpr std::string_view kNumberSentinel = "⟨num⟩";
inline constexpr std::string_view kPersonSentinel = "⟨person⟩";

inline constexpr std::array<std::pair<std::string_view, TokenKind>, 4> kSentinels{{
        {kEmailSentinel, TokenKind::EmailMask},
        {kUrlSentinel, TokenKind::UrlMask},
        {kNumberSentinel, TokenKind::NumberMask},
        {kPersonSentinel, TokenKind::PersonMask},
}};

struct Token {
    std::string normalized;
    TokenKind kind = TokenKind::Word;

    friend bool operator==(const Token&, const Token&) = default;
};

struct NormalizedEssay {
    std::string essay_id;
    std::vector<Token> tokens;
    std::size_t original_char_count = 0;

    friend bool operator==(const NormalizedEssay&, const NormalizedEssay&) = default;
};

inline const std::set<std::string>& default_stopwords() {
    static const std::set<std::string> words{
        "a", "about", "above", "after", "again", "against", "all", "am", "an", "and",
        "any", "are", "as", "at", "be", "because", "been", "before", "being", "below",
        "between", "both", "but", "by", "can", "could", "did", "do", "does", "doing",
        "down", "during", "each", "few", "for", "from", "further", "had", "has", "have",
        "having", "he", "her", "here", "hers", "herself", "him", "himself", "his", "how",
        "i", "if", "in", "into", "is", "it", "its", "itself", "just", "me",
        "more", "most", "my", "myself", "no", "nor", "not", "now", "of", "off",
        "on", "once", "only", "or", "other", "our", "ours", "ourselves", "out", "over",
        "own", "same", "she", "should", "so", "some", "such", "than", "that", "the",
        "their", "theirs", "them", "themselves", "then", "there", "these", "they", "this", "those",
        "through", "to", "too", "under", "until", "up", "very", "was", "we", "were",
        "what", "when", "where", "which", "while", "who", "whom", "why", "will", "with",
        "would", "you", "your", "yours", "yourself", "yourselves"    };
    return words;
}

struct PreprocessConfig {
    std::set<std::string> stopwords = default_stopwords();
    bool mask_email = true;
    bool mask_url = true;
    bool mask_number = true;
    // Off by default: sentence-initial capitals make the run heuristic noisy.
    bool mask_person = false;
    std::optional<std::set<std::string>> person_gazetteer;

    void validate() const {
        for (const auto& w : stopwords) {
            if (w.empty()) {
                throw Error(Errc::InvalidInput, "empty stopword");
            }
            for (const auto& d : unicode::decode(w)) {
                if (unicode::is_whitespace(d.cp)) {
                    throw Error(Errc::InvalidInput, "stopword contains whitespace: '" + w + "'");
                }
            }
            if (unicode::to_lower(w) != w) {
                throw Error(Errc::InvalidInput, "stopword is not lowercase: '" + w + "'");
            }
        }
    }
};

// Stopword file: one lowercase term per line, UTF-8; '#' starts a comment.
inline std::set<std::string> parse_stopwords(std::istream& in, std::string_view source = "<stream>") {
    std::set<std::string> words;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) {
            line.erase(hash);
        }
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) {
            continue;
        }
        const auto last = line.find_last_not_of(" \t\r");
        std::string term = line.substr(first, last - first + 1);
        if (term.find_first_of(" \t") != std::string::npos || unicode::to_lower(term) != term) {
            throw Error(Errc::ParseError, std::string(source) + ":" + std::to_string(line_no) +
                                                  ": stopword must be a single lowercase term");
        }
        words.insert(std::move(term));
    }
    return words;
}

inline std::set<std::string> load_stopwords(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(Errc::IoFailure, "cannot open stopword file " + path.string());
    }
    return parse_stopwords(in, path.string());
}

namespace detail {

inline bool is_ascii_alpha(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }
inline bool is_ascii_digit(char c) { return c >= '0' && c <= '9'; }
inline bool is_ascii_alnum(char c) { return is_ascii_alpha(c) || is_ascii_digit(c); }

inline std::optional<TokenKind> sentinel_kind(std::string_view token) {
    for (const auto& [text, kind] : kSentinels) {
        if (token == text) {
            return kind;
        }
    }
    return std::nullopt;
}

// local@domain.tld with an ASCII local part, dot-separated domain labels and
// an alphabetic TLD of at least two letters.
inline bool looks_like_email(std::string_view t) {
    const auto at = t.find('@');
    if (at == std::string_view::npos || at == 0 || t.find('@', at + 1) != std::string_view::npos) {
        return false;
    }
    const auto local = t.substr(0, at);
    for (char c : local) {
        if (!is_ascii_alnum(c) && c != '.' && c != '_' && c != '%' && c != '+' && c != '-') {
            return false;
        }
    }
    const auto domain = t.substr(at + 1);
    const auto last_dot = domain.rfind('.');
    if (last_dot == std::string_view::npos) {
        return false;
    }
    const auto tld = domain.substr(last_dot + 1);
    if (tld.size() < 2 || !std::all_of(tld.begin(), tld.end(), is_ascii_alpha)) {
        return false;
    }
    std::size_t label_len = 0;
    for (char c : domain.substr(0, last_dot + 1)) {
        if (c == '.') {
            if (label_len == 0) {
                return false;
            }
            label_len = 0;
        } else if (is_ascii_alnum(c) || c == '-') {
            ++label_len;
        } else {
            return false;
        }
    }
    return true;
}

// scheme://rest or www.rest (case-insensitive prefix).
inline bool looks_like_url(std::string_view t) {
    if (t.size() > 4) {
        const std::string prefix = unicode::to_lower(t.substr(0, 4));
        if (prefix == "www.") {
            return true;
        }
    }
    const auto sep = t.find("://");
    if (sep == std::string_view::npos || sep == 0 || sep + 3 >= t.size()) {
        return false;
    }
    if (!is_ascii_alpha(t[0])) {
        return false;
    }
    for (char c : t.substr(0, sep)) {
        if (!is_ascii_alnum(c) && c != '+' && c != '.' && c != '-') {
            return false;
        }
    }
    return true;
}

// ASCII digit groups joined by single '.', ',' or '-' separators.
inline bool looks_like_number(std::string_view t) {
    if (t.empty() || !is_ascii_digit(t.front()) || !is_ascii_digit(t.back())) {
        return false;
    }
    char prev = '0';
    for (char c : t) {
        if (is_ascii_digit(c)) {
            prev = c;
            continue;
        }
        if ((c != '.' && c != ',' && c != '-') || !is_ascii_digit(prev)) {
            return false;
        }
        prev = c;
    }
    return true;
}

// All letters (internal apostrophes/hyphens allowed) with an uppercase first letter.
inline bool is_capitalized_word(std::string_view t) {
    const auto cps = unicode::decode(t);
    if (cps.empty() || !unicode::is_letter(cps.front().cp) || !unicode::is_upper(cps.front().cp) ||
        !unicode::is_letter(cps.back().cp)) {
        return false;
    }
    for (const auto& d : cps) {
        if (!unicode::is_letter(d.cp) && !unicode::is_apostrophe(d.cp) && !unicode::is_hyphen(d.cp)) {
            return false;
        }
    }
    return true;
}

inline bool has_alnum(std::string_view t) {
    for (const auto& d : unicode::decode(t)) {
        if (unicode::is_alnum(d.cp)) {
            return true;
        }
    }
    return false;
}

// Splits one whitespace-delimited chunk into its leading punctuation, core
// and trailing punctuation. A chunk that is a mask sentinel wrapped only in
// punctuation keeps the sentinel intact so normalized output re-tokenizes to
// itself.
inline void split_chunk(std::string_view chunk, std::vector<std::string>& out) {
    for (const auto& [sentinel, kind] : kSentinels) {
        const auto pos = chunk.find(sentinel);
        if (pos == std::string_view::npos) {
            continue;
        }
        const auto prefix = chunk.substr(0, pos);
        const auto suffix = chunk.substr(pos + sentinel.size());
        if (has_alnum(prefix) || has_alnum(suffix)) {
            break;
        }
        for (const auto& d : unicode::decode(prefix)) {
            out.emplace_back(prefix.substr(d.offset, d.length));
        }
        out.emplace_back(sentinel);
        for (const auto& d : unicode::decode(suffix)) {
            out.emplace_back(suffix.substr(d.offset, d.length));
        }
        return;
    }

    const auto cps = unicode::decode(chunk);
    std::size_t begin = 0;
    std::size_t end = cps.size();
    while (begin < end && !unicode::is_alnum(cps[begin].cp)) {
        ++begin;
    }
    while (end > begin && !unicode::is_alnum(cps[end - 1].cp)) {
        --end;
    }
    for (std::size_t i = 0; i < begin; ++i) {
        out.emplace_back(chunk.substr(cps[i].offset, cps[i].length));
    }
    if (begin < end) {
        const auto from = cps[begin].offset;
        const auto to = cps[end - 1].offset + cps[end - 1].length;
        out.emplace_back(chunk.substr(from, to - from));
    }
    for (std::size_t i = end; i < cps.size(); ++i) {
        out.emplace_back(chunk.substr(cps[i].offset, cps[i].length));
    }
}

}  // namespace detail

// Splits on Unicode whitespace, then peels leading and trailing non-alphanumeric
// characters off each chunk as one-character tokens. Apostrophes and hyphens
// inside a word stay in it.
inline std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> out;
    const auto cps = unicode::decode(text);
    std::size_t i = 0;
    while (i < cps.size()) {
        while (i < cps.size() && unicode::is_whitespace(cps[i].cp)) {
            ++i;
        }
        if (i == cps.size()) {
            break;
        }
        const std::size_t start = i;
        while (i < cps.size() && !unicode::is_whitespace(cps[i].cp)) {
            ++i;
        }
        const auto from = cps[start].offset;
        const auto to = cps[i - 1].offset + cps[i - 1].length;
        detail::split_chunk(text.substr(from, to - from), out);
    }
    return out;
}

// Replaces e-mail addresses, URLs and numbers with their sentinels and, when
// enabled, collapses person names. Expects original casing.
inline std::vector<Token> mask_entities(const std::vector<std::string>& raw, const PreprocessConfig& config) {
    std::vector<Token> tokens;
    tokens.reserve(raw.size());
    for (const auto& t : raw) {
        if (const auto kind = detail::sentinel_kind(t)) {
            tokens.push_back({t, *kind});
        } else if (config.mask_email && detail::looks_like_email(t)) {
            tokens.push_back({std::string(kEmailSentinel), TokenKind::EmailMask});
        } else if (config.mask_url && detail::looks_like_url(t)) {
            tokens.push_back({std::string(kUrlSentinel), TokenKind::UrlMask});
        } else if (config.mask_number && detail::looks_like_number(t)) {
            tokens.push_back({std::string(kNumberSentinel), TokenKind::NumberMask});
        } else {
            tokens.push_back({t, TokenKind::Word});
        }
    }
    if (!config.mask_person) {
        return tokens;
    }

    // A maximal run of capitalized words and/or gazetteer names collapses to
    // one person mask when it has two or more members or contains a name.
    auto in_gazetteer = [&](const Token& t) {
        return config.person_gazetteer && config.person_gazetteer->contains(t.normalized);
    };
    std::vector<Token> out;
    out.reserve(tokens.size());
    std::size_t i = 0;
    while (i < tokens.size()) {
        const auto candidate = [&](const Token& t) {
            return t.kind == TokenKind::Word && (detail::is_capitalized_word(t.normalized) || in_gazetteer(t));
        };
        if (!candidate(tokens[i])) {
            out.push_back(std::move(tokens[i]));
            ++i;
            continue;
        }
        std::size_t j = i;
        bool named = false;
        while (j < tokens.size() && candidate(tokens[j])) {
            named = named || in_gazetteer(tokens[j]);
            ++j;
        }
        if (j - i >= 2 || named) {
            out.push_back({std::string(kPersonSentinel), TokenKind::PersonMask});
        } else {
            out.push_back(std::move(tokens[i]));
        }
        i = j;
    }
    return out;
}

// NFC -> tokenize -> mask -> drop punctuation -> lowercase -> drop stopwords.
inline NormalizedEssay normalize(const RawEssay& raw, const PreprocessConfig& config) {
    const std::string body = unicode::nfc(raw.body);
    const auto cps = unicode::decode(body);
    if (std::all_of(cps.begin(), cps.end(), [](const auto& d) { return unicode::is_whitespace(d.cp); })) {
        throw Error(Errc::EmptyEssay, "essay '" + raw.essay_id + "' has no text");
    }

    NormalizedEssay essay;
    essay.essay_id = raw.essay_id;
    essay.original_char_count = cps.size();
    for (auto& token : mask_entities(tokenize(body), config)) {
        if (token.kind == TokenKind::Word) {
            if (!detail::has_alnum(token.normalized)) {
                continue;
            }
            token.normalized = unicode::nfc(unicode::to_lower(token.normalized));
        }
        if (config.stopwords.contains(token.normalized)) {
            continue;
        }
        essay.tokens.push_back(std::move(token));
    }
    if (essay.tokens.empty()) {
        throw Error(Errc::EmptyAfterNormalization, "essay '" + raw.essay_id + "' has no gradeable tokens");
    }
    return essay;
}

// Space-joined normalized tokens.
inline std::string join_tokens(const NormalizedEssay& essay) {
    std::string out;
    for (const auto& t : essay.tokens) {
        if (!out.empty()) {
            out += ' ';
        }
        out += t.normalized;
    }
    return out;
}

}  // namespace rubric
