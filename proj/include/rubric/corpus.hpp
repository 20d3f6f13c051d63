#pragma once

// Line-oriented corpus and label files: one JSON object per line.
//   corpus: {"essay_id","customer_name","submitted_at","body"}
//   labels: {"essay_id","scores":{dimension_id: 0|1|2}}
// Blank lines are skipped. Diagnostics carry "<source>:<line>: ".

#include "rubric/serialization.hpp"

#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <string>
#include <vector>

namespace rubric {

struct EssayLabels {
    std::string essay_id;
    std::map<std::string, int> scores;

    friend bool operator==(const EssayLabels&, const EssayLabels&) = default;
};

inline void to_json(json& j, const EssayLabels& l) { j = json{{"essay_id", l.essay_id}, {"scores", l.scores}}; }

inline void from_json(const json& j, EssayLabels& l) {
    l.essay_id = detail::required<std::string>(j, "essay_id");
    const auto scores = detail::required<json>(j, "scores");
    if (!scores.is_object()) {
        throw Error(Errc::ParseError, "field 'scores' must be an object");
    }
    l.scores.clear();
    for (const auto& [dim, s] : scores.items()) {
        if (!s.is_number_integer() || s.get<int>() < 0 || s.get<int>() >= kNumClasses) {
            throw Error(Errc::ParseError, "score for '" + dim + "' must be 0, 1 or 2", dim);
        }
        l.scores.emplace(dim, s.get<int>());
    }
}

namespace detail {

template <typename T>
std::vector<T> read_json_lines(std::istream& in, const std::string& source) {
    std::vector<T> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        const auto where = source + ":" + std::to_string(line_no) + ": ";
        try {
            out.push_back(json::parse(line).get<T>());
        } catch (const json::exception& e) {
            throw Error(Errc::ParseError, where + e.what());
        } catch (const Error& e) {
            throw Error(Errc::ParseError, where + e.message(), e.dimension_id());
        }
    }
    return out;
}

template <typename T>
void write_json_lines(std::ostream& out, const std::vector<T>& items) {
    for (const auto& item : items) {
        out << json(item).dump(-1, ' ', false, json::error_handler_t::strict) << '\n';
    }
}

}  // namespace detail

inline std::vector<RawEssay> read_corpus(std::istream& in, const std::string& source = "<corpus>") {
    auto essays = detail::read_json_lines<RawEssay>(in, source);
    std::set<std::string> seen;
    for (const auto& e : essays) {
        if (!seen.insert(e.essay_id).second) {
            throw Error(Errc::ParseError, source + ": duplicate essay_id '" + e.essay_id + "'");
        }
    }
    return essays;
}

inline std::vector<EssayLabels> read_labels(std::istream& in, const std::string& source = "<labels>") {
    auto labels = detail::read_json_lines<EssayLabels>(in, source);
    std::set<std::string> seen;
    for (const auto& l : labels) {
        if (!seen.insert(l.essay_id).second) {
            throw Error(Errc::ParseError, source + ": duplicate labels for essay_id '" + l.essay_id + "'");
        }
    }
    return labels;
}

inline void write_corpus(std::ostream& out, const std::vector<RawEssay>& essays) { detail::write_json_lines(out, essays); }

inline void write_labels(std::ostream& out, const std::vector<EssayLabels>& labels) {
    detail::write_json_lines(out, labels);
}

// Labels for `dimension_id`, aligned with `essays`. Every essay must be labeled.
inline std::vector<int> labels_for(const std::vector<RawEssay>& essays,
                                   const std::vector<EssayLabels>& labels,
                                   const std::string& dimension_id) {
    std::map<std::string, const EssayLabels*> by_id;
    for (const auto& l : labels) {
        by_id.emplace(l.essay_id, &l);
    }
    std::vector<int> out;
    out.reserve(essays.size());
    for (const auto& e : essays) {
        const auto it = by_id.find(e.essay_id);
        if (it == by_id.end()) {
            throw Error(Errc::ParseError, "no labels for essay '" + e.essay_id + "'");
        }
        const auto s = it->second->scores.find(dimension_id);
        if (s == it->second->scores.end()) {
            throw Error(Errc::ParseError, "essay '" + e.essay_id + "' has no label for '" + dimension_id + "'",
                        dimension_id);
        }
        out.push_back(s->second);
    }
    return out;
}

}  // namespace rubric
