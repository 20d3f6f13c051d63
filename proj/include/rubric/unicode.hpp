#pragma once

#include "rubric/error.hpp"

#include <unicode/locid.h>
#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>
#include <unicode/utf8.h>

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

// Thin layer over ICU for the handful of Unicode operations preprocessing
// needs. Invalid UTF-8 decodes to U+FFFD.
namespace rubric::unicode {

using CodePoint = char32_t;

struct Decoded {
    CodePoint cp;
    std::size_t offset;  // byte offset of the first code unit
    std::size_t length;  // byte length
};

inline std::vector<Decoded> decode(std::string_view text) {
    std::vector<Decoded> out;
    out.reserve(text.size());
    const auto* s = reinterpret_cast<const uint8_t*>(text.data());
    const auto n = static_cast<int32_t>(text.size());
    int32_t i = 0;
    while (i < n) {
        const int32_t start = i;
        UChar32 c = 0;
        U8_NEXT(s, i, n, c);
        if (c < 0) {
            c = 0xFFFD;
        }
        out.push_back({static_cast<CodePoint>(c), static_cast<std::size_t>(start),
                       static_cast<std::size_t>(i - start)});
    }
    return out;
}

inline void append_utf8(std::string& out, CodePoint cp) {
    uint8_t buf[U8_MAX_LENGTH];
    int32_t len = 0;
    UBool error = false;
    U8_APPEND(buf, len, U8_MAX_LENGTH, static_cast<UChar32>(cp), error);
    if (error) {
        append_utf8(out, 0xFFFD);
        return;
    }
    out.append(reinterpret_cast<const char*>(buf), static_cast<std::size_t>(len));
}

inline std::size_t code_point_count(std::string_view text) { return decode(text).size(); }

inline bool is_whitespace(CodePoint cp) { return u_isUWhiteSpace(static_cast<UChar32>(cp)); }

// Letters for tokenization purposes: the Alphabetic property plus all
// combining marks, so decomposed accents and Indic vowel signs stay attached.
inline bool is_letter(CodePoint cp) {
    const auto c = static_cast<UChar32>(cp);
    if (u_hasBinaryProperty(c, UCHAR_ALPHABETIC)) {
        return true;
    }
    return (U_GET_GC_MASK(c) & U_GC_M_MASK) != 0;
}

inline bool is_digit(CodePoint cp) { return u_isdigit(static_cast<UChar32>(cp)); }

inline bool is_alnum(CodePoint cp) { return is_letter(cp) || is_digit(cp); }

inline bool is_apostrophe(CodePoint cp) { return cp == U'\'' || cp == U'’'; }

inline bool is_hyphen(CodePoint cp) { return cp == U'-' || cp == U'‐' || cp == U'‑'; }

// Everything that is not a letter, digit, apostrophe or hyphen.
inline bool is_punctuation(CodePoint cp) { return !is_alnum(cp) && !is_apostrophe(cp) && !is_hyphen(cp); }

inline bool is_upper(CodePoint cp) {
    const auto c = static_cast<UChar32>(cp);
    return u_isupper(c) || u_istitle(c);
}

inline std::string nfc(std::string_view text) {
    UErrorCode status = U_ZERO_ERROR;
    const icu::Normalizer2* normalizer = icu::Normalizer2::getNFCInstance(status);
    if (U_FAILURE(status)) {
        throw Error(Errc::InvalidInput, std::string("ICU NFC unavailable: ") + u_errorName(status));
    }
    const auto input = icu::UnicodeString::fromUTF8(icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
    const icu::UnicodeString normalized = normalizer->normalize(input, status);
    if (U_FAILURE(status)) {
        throw Error(Errc::InvalidInput, std::string("NFC normalization failed: ") + u_errorName(status));
    }
    std::string out;
    normalized.toUTF8String(out);
    return out;
}

inline bool has_upper(std::string_view text) {
    for (const auto& d : decode(text)) {
        if (is_upper(d.cp)) {
            return true;
        }
    }
    return false;
}

// Full Unicode lowercase mapping with the root locale. Code points that are
// uppercase but have no lowercase mapping (e.g. mathematical bold capitals)
// fall back to their NFKC case fold.
inline std::string to_lower(std::string_view text) {
    auto s = icu::UnicodeString::fromUTF8(icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
    s.toLower(icu::Locale::getRoot());
    std::string lowered;
    s.toUTF8String(lowered);
    if (!has_upper(lowered)) {
        return lowered;
    }
    UErrorCode status = U_ZERO_ERROR;
    const icu::Normalizer2* fold = icu::Normalizer2::getNFKCCasefoldInstance(status);
    if (U_FAILURE(status)) {
        return lowered;
    }
    std::string out;
    for (const auto& d : decode(lowered)) {
        if (!is_upper(d.cp)) {
            out.append(lowered, d.offset, d.length);
            continue;
        }
        const icu::UnicodeString folded =
                fold->normalize(icu::UnicodeString(static_cast<UChar32>(d.cp)), status);
        if (U_FAILURE(status)) {
            status = U_ZERO_ERROR;
            out.append(lowered, d.offset, d.length);
            continue;
        }
        folded.toUTF8String(out);
    }
    return out;
}

}  // namespace rubric::unicode
