#pragma once

// Customer report for an approved job. STRUCTURED is a canonical JSON
// document (field reference in docs/REPORT_FORMAT.md); PRINTABLE is one
// self-contained HTML page for an external print engine.

#include "rubric/experts.hpp"
#include "rubric/serialization.hpp"
#include "rubric/store/job_store.hpp"

#include <sys/wait.h>

#include <cstdio>
#include <optional>
#include <string>
#include <vector>

namespace rubric {

inline constexpr std::string_view kReportFormat = "rubric-report/1";

struct ReportRow {
    std::string dimension_id;
    std::string display_name;
    Rational weight{1};
    int score = 0;
    int machine_score = 0;
    std::string feedback;
    bool score_overridden = false;
    bool feedback_overridden = false;

    friend bool operator==(const ReportRow&, const ReportRow&) = default;
};

struct Report {
    std::string job_id;
    std::string essay_id;
    std::string customer_name;
    Timestamp generated_at;
    std::vector<ReportRow> rows;  // registry order
    Rational final_score{0};
    std::vector<std::pair<std::string, std::string>> model_manifest;
    std::optional<std::string> approver_note;

    friend bool operator==(const Report&, const Report&) = default;
};

enum class ReportFormat { Structured, Printable };

// Merges review overrides over the machine results and recomputes the final
// score with the registry weights. generated_at is the approval time, so the
// report is a pure function of (job, registry).
inline Report assemble_report(const store::GradingJob& job, const ExpertRegistry& registry) {
    using store::JobState;
    if (job.state != JobState::Approved && job.state != JobState::Reported) {
        throw Error(Errc::NotApproved, "job '" + job.job_id + "' is " + std::string(store::to_string(job.state)));
    }
    const auto& master = *job.master;
    Report r;
    r.job_id = job.job_id;
    r.essay_id = job.essay.essay_id;
    r.customer_name = job.essay.customer_name;
    r.generated_at = job.updated_at;
    for (const auto& h : job.history) {
        if (h.transition.event == store::JobEvent::Approve) {
            r.generated_at = h.at;
        }
    }
    r.model_manifest = master.model_manifest;
    r.approver_note = job.approver_note;

    const auto scores = store::effective_scores(job);
    for (const auto& e : registry.experts()) {
        const auto& id = e.descriptor.dimension_id;
        const auto it = master.results.find(id);
        if (it == master.results.end()) {
            throw Error(Errc::IncompleteResults, "job has no result for '" + id + "'", id);
        }
        ReportRow row;
        row.dimension_id = id;
        row.display_name = e.descriptor.display_name;
        row.weight = e.descriptor.weight;
        row.machine_score = it->second.score;
        row.score = scores.at(id);
        row.feedback = store::effective_feedback(job, id);
        row.score_overridden = row.score != row.machine_score;
        row.feedback_overridden = row.feedback != it->second.feedback_text;
        r.rows.push_back(std::move(row));
    }
    r.final_score = aggregate(scores, registry);
    return r;
}

inline json report_to_json(const Report& r) {
    json rows = json::array();
    for (const auto& row : r.rows) {
        rows.push_back({{"dimension_id", row.dimension_id},
                        {"display_name", row.display_name},
                        {"weight", rational_to_json(row.weight)},
                        {"score", row.score},
                        {"machine_score", row.machine_score},
                        {"score_overridden", row.score_overridden},
                        {"feedback", row.feedback},
                        {"feedback_overridden", row.feedback_overridden}});
    }
    json manifest = json::array();
    for (const auto& [dim, version] : r.model_manifest) {
        manifest.push_back({{"dimension_id", dim}, {"model_version", version}});
    }
    return json{{"format", kReportFormat},
                {"job_id", r.job_id},
                {"essay_id", r.essay_id},
                {"customer_name", r.customer_name},
                {"generated_at", r.generated_at},
                {"dimensions", rows},
                {"final_score", to_decimal_string(r.final_score, 2)},
                {"final_score_exact", rational_to_json(r.final_score)},
                {"model_manifest", manifest},
                {"approver_note", r.approver_note ? json(*r.approver_note) : json(nullptr)}};
}

inline std::string html_escape(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        case '\'': out += "&#39;"; break;
        default: out += c;
        }
    }
    return out;
}

namespace detail {

inline std::string render_printable(const Report& r) {
    std::string h;
    h += "<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n";
    h += "<title>Essay report " + html_escape(r.essay_id) + "</title>\n";
    h += "<style>\n"
         "@page { size: A4; margin: 18mm; }\n"
         "body { font-family: Helvetica, Arial, sans-serif; font-size: 11pt; color: #222; }\n"
         "h1 { font-size: 18pt; margin: 0 0 4mm 0; }\n"
         "table { width: 100%; border-collapse: collapse; margin-top: 6mm; }\n"
         "th, td { border-bottom: 1px solid #bbb; padding: 2mm; text-align: left; vertical-align: top; }\n"
         "td.score { width: 14mm; text-align: center; font-weight: bold; }\n"
         ".final { margin-top: 6mm; font-size: 14pt; }\n"
         ".meta { color: #555; }\n"
         "</style>\n</head>\n<body>\n";
    h += "<h1>Essay assessment</h1>\n";
    h += "<p class=\"meta\">Customer: " + html_escape(r.customer_name) + "<br>Essay: " + html_escape(r.essay_id) +
         "<br>Date: " + html_escape(r.generated_at.to_string()) + "</p>\n";
    h += "<table>\n<thead><tr><th>Dimension</th><th>Score</th><th>Feedback</th></tr></thead>\n<tbody>\n";
    for (const auto& row : r.rows) {
        h += "<tr><td>" + html_escape(row.display_name) + "</td><td class=\"score\">" + std::to_string(row.score) +
             "</td><td>" + html_escape(row.feedback) + "</td></tr>\n";
    }
    h += "</tbody>\n</table>\n";
    h += "<p class=\"final\">Final score: <strong>" + to_decimal_string(r.final_score, 2) + "</strong> / 2.00</p>\n";
    if (r.approver_note && !r.approver_note->empty()) {
        h += "<p class=\"note\">Assessor note: " + html_escape(*r.approver_note) + "</p>\n";
    }
    h += "</body>\n</html>\n";
    return h;
}

}  // namespace detail

inline std::string render_report(const Report& r, ReportFormat format) {
    if (r.rows.empty()) {
        throw Error(Errc::RenderFailure, "report has no dimension rows");
    }
    try {
        return format == ReportFormat::Structured ? canonical_dump(report_to_json(r)) : detail::render_printable(r);
    } catch (const json::exception& e) {
        throw Error(Errc::RenderFailure, std::string("cannot render report: ") + e.what());
    }
}

// Runs `command` through /bin/sh with `page` on stdin and returns its stdout.
inline std::string print_to_pdf(const std::string& page, const std::string& command) {
    if (command.empty()) {
        throw Error(Errc::RenderFailure, "no print command configured");
    }
    const auto dir = store::fs::temp_directory_path();
    const auto stem = "rubric-print-" + std::to_string(::getpid()) + "-" +
                      std::to_string(std::chrono::steady_clock::now().time_since_epoch().count());
    const auto in_path = dir / (stem + ".html");
    const auto out_path = dir / (stem + ".pdf");
    struct Cleanup {
        store::fs::path a, b;
        ~Cleanup() {
            std::error_code ec;
            store::fs::remove(a, ec);
            store::fs::remove(b, ec);
        }
    } cleanup{in_path, out_path};
    store::atomic_write(in_path, page, {});

    const pid_t pid = ::fork();
    if (pid < 0) {
        throw Error(Errc::RenderFailure, "fork failed");
    }
    if (pid == 0) {
        const int in = ::open(in_path.c_str(), O_RDONLY);
        const int out = ::open(out_path.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0600);
        if (in < 0 || out < 0 || ::dup2(in, 0) < 0 || ::dup2(out, 1) < 0) {
            ::_exit(127);
        }
        ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
        ::_exit(127);
    }
    int status = 0;
    while (::waitpid(pid, &status, 0) < 0) {
        if (errno != EINTR) {
            throw Error(Errc::RenderFailure, "waitpid failed");
        }
    }
    if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
        throw Error(Errc::RenderFailure, "print command failed: " + command);
    }
    auto bytes = store::read_text_file(out_path);
    if (bytes.empty()) {
        throw Error(Errc::RenderFailure, "print command produced no output");
    }
    return bytes;
}

}  // namespace rubric
