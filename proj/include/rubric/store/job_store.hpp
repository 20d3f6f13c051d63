#pragma once

#include "rubric/serialization.hpp"
#include "rubric/store/files.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <chrono>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace rubric::store {

// RECEIVED -> SCORING -> AWAITING_REVIEW -> APPROVED -> REPORTED, plus
// review edits within AWAITING_REVIEW and FAILED from any other state.
enum class JobState { Received, Scoring, AwaitingReview, Approved, Reported, Failed };

enum class JobEvent { StartScoring, CompleteScoring, EditReview, Approve, MarkReported, Fail };

inline constexpr std::array<JobState, 6> kAllJobStates{JobState::Received, JobState::Scoring,
                                                       JobState::AwaitingReview, JobState::Approved,
                                                       JobState::Reported, JobState::Failed};
inline constexpr std::array<JobEvent, 6> kAllJobEvents{JobEvent::StartScoring, JobEvent::CompleteScoring,
                                                       JobEvent::EditReview, JobEvent::Approve,
                                                       JobEvent::MarkReported, JobEvent::Fail};

inline std::string_view to_string(JobState s) {
    switch (s) {
    case JobState::Received: return "received";
    case JobState::Scoring: return "scoring";
    case JobState::AwaitingReview: return "awaiting_review";
    case JobState::Approved: return "approved";
    case JobState::Reported: return "reported";
    case JobState::Failed: return "failed";
    }
    return "?";
}

// Accepts the canonical lowercase name in any ASCII case.
inline JobState job_state_from_string(std::string_view s) {
    std::string lower(s);
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    for (auto state : kAllJobStates) {
        if (to_string(state) == lower) {
            return state;
        }
    }
    throw Error(Errc::ParseError, "unknown job state '" + std::string(s) + "'");
}

inline std::string_view to_string(JobEvent e) {
    switch (e) {
    case JobEvent::StartScoring: return "start_scoring";
    case JobEvent::CompleteScoring: return "scoring_complete";
    case JobEvent::EditReview: return "edit_review";
    case JobEvent::Approve: return "approve";
    case JobEvent::MarkReported: return "mark_reported";
    case JobEvent::Fail: return "fail";
    }
    return "?";
}

inline JobEvent job_event_from_string(std::string_view s) {
    for (auto e : kAllJobEvents) {
        if (to_string(e) == s) {
            return e;
        }
    }
    throw Error(Errc::ParseError, "unknown job event '" + std::string(s) + "'");
}

// The target state of `event` from `state`, or nullopt when illegal.
inline std::optional<JobState> next_state(JobState state, JobEvent event) {
    switch (event) {
    case JobEvent::StartScoring:
        return state == JobState::Received ? std::optional(JobState::Scoring) : std::nullopt;
    case JobEvent::CompleteScoring:
        return state == JobState::Scoring ? std::optional(JobState::AwaitingReview) : std::nullopt;
    case JobEvent::EditReview:
        return state == JobState::AwaitingReview ? std::optional(JobState::AwaitingReview) : std::nullopt;
    case JobEvent::Approve:
        return state == JobState::AwaitingReview ? std::optional(JobState::Approved) : std::nullopt;
    case JobEvent::MarkReported:
        return state == JobState::Approved ? std::optional(JobState::Reported) : std::nullopt;
    case JobEvent::Fail:
        return state == JobState::Failed ? std::nullopt : std::optional(JobState::Failed);
    }
    return std::nullopt;
}

struct ReviewEdit {
    std::optional<int> score_override;
    std::optional<std::string> feedback_override;

    friend bool operator==(const ReviewEdit&, const ReviewEdit&) = default;
};

using ReviewEdits = std::map<std::string, ReviewEdit>;

struct JobTransition {
    JobEvent event = JobEvent::StartScoring;
    std::optional<MasterObject> master;    // scoring_complete
    ReviewEdits edits;                     // edit_review
    std::optional<Rational> final_score;   // approve
    std::string note;                      // approve: approver note; fail: cause

    static JobTransition start_scoring() { return {JobEvent::StartScoring, {}, {}, {}, {}}; }
    static JobTransition complete_scoring(MasterObject m) { return {JobEvent::CompleteScoring, std::move(m), {}, {}, {}}; }
    static JobTransition edit(ReviewEdits e) { return {JobEvent::EditReview, {}, std::move(e), {}, {}}; }
    static JobTransition approve(Rational final_score, std::string note = {}) {
        return {JobEvent::Approve, {}, {}, std::move(final_score), std::move(note)};
    }
    static JobTransition reported() { return {JobEvent::MarkReported, {}, {}, {}, {}}; }
    static JobTransition fail(std::string cause) { return {JobEvent::Fail, {}, {}, {}, std::move(cause)}; }

    friend bool operator==(const JobTransition&, const JobTransition&) = default;
};

struct HistoryEntry {
    JobTransition transition;
    JobState from = JobState::Received;
    JobState to = JobState::Received;
    Timestamp at;

    friend bool operator==(const HistoryEntry&, const HistoryEntry&) = default;
};

struct GradingJob {
    std::string job_id;
    RawEssay essay;
    JobState state = JobState::Received;
    Timestamp created_at;
    Timestamp updated_at;
    std::optional<MasterObject> master;
    ReviewEdits review_edits;
    std::optional<Rational> approved_final_score;
    std::optional<std::string> approver_note;
    std::optional<std::string> failure_cause;
    std::vector<HistoryEntry> history;

    friend bool operator==(const GradingJob&, const GradingJob&) = default;
};

// Machine scores with review overrides applied.
inline std::map<std::string, int> effective_scores(const GradingJob& job) {
    std::map<std::string, int> scores;
    if (!job.master) {
        return scores;
    }
    for (const auto& [id, r] : job.master->results) {
        scores[id] = r.score;
    }
    for (const auto& [id, edit] : job.review_edits) {
        if (edit.score_override) {
            scores[id] = *edit.score_override;
        }
    }
    return scores;
}

inline std::string effective_feedback(const GradingJob& job, const std::string& dimension_id) {
    if (const auto it = job.review_edits.find(dimension_id); it != job.review_edits.end() && it->second.feedback_override) {
        return *it->second.feedback_override;
    }
    return job.master->results.at(dimension_id).feedback_text;
}

// Pure state-machine step; the store persists its result.
inline GradingJob apply_transition(GradingJob job, const JobTransition& t, Timestamp at) {
    const auto target = next_state(job.state, t.event);
    if (!target) {
        throw Error(Errc::IllegalTransition,
                    std::string(to_string(t.event)) + " is not allowed in state " + std::string(to_string(job.state)));
    }
    switch (t.event) {
    case JobEvent::StartScoring:
    case JobEvent::MarkReported:
        break;
    case JobEvent::CompleteScoring:
        if (!t.master) {
            throw Error(Errc::InvalidInput, "scoring_complete needs a MasterObject");
        }
        if (t.master->essay_id != job.essay.essay_id) {
            throw Error(Errc::InvalidInput, "MasterObject belongs to a different essay");
        }
        job.master = t.master;
        break;
    case JobEvent::EditReview:
        for (const auto& [id, edit] : t.edits) {
            if (!job.master->results.contains(id)) {
                throw Error(Errc::InvalidEdit, "no dimension '" + id + "' in this job", id);
            }
            if (edit.score_override && (*edit.score_override < 0 || *edit.score_override >= kNumClasses)) {
                throw Error(Errc::InvalidEdit, "score override must be 0, 1 or 2", id);
            }
            if (edit.feedback_override && ::rubric::detail::is_blank(*edit.feedback_override)) {
                throw Error(Errc::InvalidEdit, "feedback override is empty", id);
            }
        }
        for (const auto& [id, edit] : t.edits) {
            auto& merged = job.review_edits[id];
            if (edit.score_override) {
                merged.score_override = edit.score_override;
            }
            if (edit.feedback_override) {
                merged.feedback_override = edit.feedback_override;
            }
        }
        break;
    case JobEvent::Approve:
        if (!t.final_score) {
            throw Error(Errc::InvalidInput, "approve needs the recomputed final score");
        }
        job.approved_final_score = t.final_score;
        if (!t.note.empty()) {
            job.approver_note = t.note;
        }
        break;
    case JobEvent::Fail:
        job.failure_cause = t.note;
        break;
    }
    job.history.push_back({t, job.state, *target, at});
    job.state = *target;
    job.updated_at = at;
    return job;
}

// Rebuilds a job record by folding its history from a fresh RECEIVED job.
inline GradingJob replay(const std::string& job_id,
                         const RawEssay& essay,
                         Timestamp created_at,
                         std::span<const HistoryEntry> history) {
    GradingJob job;
    job.job_id = job_id;
    job.essay = essay;
    job.created_at = created_at;
    job.updated_at = created_at;
    for (const auto& h : history) {
        job = apply_transition(std::move(job), h.transition, h.at);
    }
    return job;
}

inline void to_json(json& j, const ReviewEdit& e) {
    j = json::object();
    j["score_override"] = e.score_override ? json(*e.score_override) : json(nullptr);
    j["feedback_override"] = e.feedback_override ? json(*e.feedback_override) : json(nullptr);
}

inline void from_json(const json& j, ReviewEdit& e) {
    if (!j.is_object()) {
        throw Error(Errc::ParseError, "review edit must be an object");
    }
    e.score_override.reset();
    e.feedback_override.reset();
    if (j.contains("score_override") && !j["score_override"].is_null()) {
        if (!j["score_override"].is_number_integer()) {
            throw Error(Errc::InvalidEdit, "score_override must be an integer");
        }
        e.score_override = j["score_override"].get<int>();
    }
    if (j.contains("feedback_override") && !j["feedback_override"].is_null()) {
        if (!j["feedback_override"].is_string()) {
            throw Error(Errc::InvalidEdit, "feedback_override must be a string");
        }
        e.feedback_override = j["feedback_override"].get<std::string>();
    }
}

inline json transition_payload(const JobTransition& t) {
    switch (t.event) {
    case JobEvent::CompleteScoring: return json{{"master", *t.master}};
    case JobEvent::EditReview: return json{{"edits", t.edits}};
    case JobEvent::Approve:
        return json{{"final_score", rational_to_json(*t.final_score)}, {"note", t.note}};
    case JobEvent::Fail: return json{{"cause", t.note}};
    default: return json::object();
    }
}

inline JobTransition transition_from_json(JobEvent event, const json& payload) {
    JobTransition t;
    t.event = event;
    switch (event) {
    case JobEvent::CompleteScoring: t.master = payload.at("master").get<MasterObject>(); break;
    case JobEvent::EditReview: t.edits = payload.at("edits").get<ReviewEdits>(); break;
    case JobEvent::Approve:
        t.final_score = rational_from_json(payload.at("final_score"));
        t.note = payload.value("note", "");
        break;
    case JobEvent::Fail: t.note = payload.value("cause", ""); break;
    default: break;
    }
    return t;
}

inline void to_json(json& j, const GradingJob& job) {
    json history = json::array();
    for (const auto& h : job.history) {
        history.push_back({{"event", std::string(to_string(h.transition.event))},
                           {"from", std::string(to_string(h.from))},
                           {"to", std::string(to_string(h.to))},
                           {"at", h.at},
                           {"payload", transition_payload(h.transition)}});
    }
    j = json{{"job_id", job.job_id},
             {"essay", job.essay},
             {"state", std::string(to_string(job.state))},
             {"created_at", job.created_at},
             {"updated_at", job.updated_at},
             {"master", job.master ? json(*job.master) : json(nullptr)},
             {"review_edits", job.review_edits},
             {"approved_final_score", job.approved_final_score ? rational_to_json(*job.approved_final_score) : json(nullptr)},
             {"approver_note", job.approver_note ? json(*job.approver_note) : json(nullptr)},
             {"failure_cause", job.failure_cause ? json(*job.failure_cause) : json(nullptr)},
             {"history", history}};
}

inline void from_json(const json& j, GradingJob& job) {
    job.job_id = j.at("job_id").get<std::string>();
    job.essay = j.at("essay").get<RawEssay>();
    job.state = job_state_from_string(j.at("state").get<std::string>());
    job.created_at = j.at("created_at").get<Timestamp>();
    job.updated_at = j.at("updated_at").get<Timestamp>();
    job.master = j.at("master").is_null() ? std::nullopt : std::optional(j.at("master").get<MasterObject>());
    job.review_edits = j.at("review_edits").get<ReviewEdits>();
    const auto& score = j.at("approved_final_score");
    job.approved_final_score = score.is_null() ? std::nullopt : std::optional(rational_from_json(score));
    const auto& note = j.at("approver_note");
    job.approver_note = note.is_null() ? std::nullopt : std::optional(note.get<std::string>());
    const auto& cause = j.at("failure_cause");
    job.failure_cause = cause.is_null() ? std::nullopt : std::optional(cause.get<std::string>());
    job.history.clear();
    for (const auto& h : j.at("history")) {
        const auto event = job_event_from_string(h.at("event").get<std::string>());
        job.history.push_back({transition_from_json(event, h.at("payload")),
                               job_state_from_string(h.at("from").get<std::string>()),
                               job_state_from_string(h.at("to").get<std::string>()), h.at("at").get<Timestamp>()});
    }
}

struct JobStoreOptions {
    std::function<Timestamp()> clock = [] { return Timestamp::now(); };
    std::function<std::string()> id_generator;  // default: "job-" + 16 random hex digits
    FaultHook fault_hook;
    std::chrono::milliseconds lock_timeout{30000};
};

// File-backed job store:
//   <root>/jobs/<job_id>/record.json   canonical record incl. transition log
//   <root>/jobs/<job_id>/.lock         advisory single-writer lock
//   <root>/essays/<fnv1a64(essay_id)>  essay_id uniqueness marker
class JobStore {
public:
    explicit JobStore(fs::path root, JobStoreOptions options = {})
            : m_root(std::move(root)), m_options(std::move(options)) {
        fs::create_directories(m_root / "jobs");
        fs::create_directories(m_root / "essays");
        if (!m_options.id_generator) {
            m_options.id_generator = [] {
                std::random_device rd;
                const std::uint64_t v = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
                char buf[24];
                std::snprintf(buf, sizeof buf, "job-%016llx", static_cast<unsigned long long>(v));
                return std::string(buf);
            };
        }
    }

    const fs::path& root() const { return m_root; }
    void set_fault_hook(FaultHook hook) { m_options.fault_hook = std::move(hook); }

    fs::path record_path(const std::string& job_id) const { return m_root / "jobs" / job_id / "record.json"; }

    GradingJob create_job(const RawEssay& essay) {
        if (essay.essay_id.empty()) {
            throw Error(Errc::InvalidInput, "essay_id is empty");
        }
        if (::rubric::detail::is_blank(essay.body)) {
            throw Error(Errc::EmptyEssay, "essay '" + essay.essay_id + "' has no text");
        }
        GradingJob job;
        job.job_id = m_options.id_generator();
        check_job_id(job.job_id);
        job.essay = essay;
        job.created_at = m_options.clock();
        job.updated_at = job.created_at;

        const fs::path marker = m_root / "essays" / hex_key(essay.essay_id);
        const int fd = ::open(marker.c_str(), O_WRONLY | O_CREAT | O_EXCL | O_CLOEXEC, 0644);
        if (fd < 0) {
            if (errno == EEXIST) {
                throw Error(Errc::DuplicateEssay, "essay '" + essay.essay_id + "' was already submitted");
            }
            throw Error(Errc::IoFailure, "cannot create " + marker.string());
        }
        ::close(fd);
        try {
            fs::create_directories(record_path(job.job_id).parent_path());
            FileLock lock(lock_path(job.job_id), m_options.lock_timeout);
            write(job);
        } catch (...) {
            // Reported failures release the essay id; a crash here leaves it taken.
            std::error_code ec;
            fs::remove(marker, ec);
            throw;
        }
        atomic_write(marker, job.job_id, {});
        return job;
    }

    GradingJob get_job(const std::string& job_id) const {
        check_job_id(job_id);
        const auto path = record_path(job_id);
        if (!fs::exists(path)) {
            throw Error(Errc::UnknownJob, "no job '" + job_id + "'");
        }
        try {
            return json::parse(read_text_file(path)).get<GradingJob>();
        } catch (const json::exception& e) {
            throw Error(Errc::ParseError, "corrupt job record " + path.string() + ": " + e.what());
        }
    }

    // Newest first (created_at, then job_id, descending).
    std::vector<GradingJob> list_jobs(std::optional<JobState> state = std::nullopt) const {
        std::vector<GradingJob> jobs;
        for (const auto& entry : fs::directory_iterator(m_root / "jobs")) {
            if (!entry.is_directory() || !fs::exists(entry.path() / "record.json")) {
                continue;
            }
            auto job = get_job(entry.path().filename().string());
            if (!state || job.state == *state) {
                jobs.push_back(std::move(job));
            }
        }
        std::sort(jobs.begin(), jobs.end(), [](const GradingJob& a, const GradingJob& b) {
            return std::tie(a.created_at, a.job_id) > std::tie(b.created_at, b.job_id);
        });
        return jobs;
    }

    // Read-modify-write under the job's lock; the new record (with the
    // appended log entry) replaces the old one atomically.
    GradingJob transition(const std::string& job_id, const JobTransition& t) {
        check_job_id(job_id);
        if (!fs::exists(record_path(job_id))) {
            throw Error(Errc::UnknownJob, "no job '" + job_id + "'");
        }
        FileLock lock(lock_path(job_id), m_options.lock_timeout);
        auto job = apply_transition(get_job(job_id), t, m_options.clock());
        write(job);
        return job;
    }

    // As transition(), with the event derived from the record read under the lock.
    GradingJob transition_with(const std::string& job_id, const std::function<JobTransition(const GradingJob&)>& make) {
        check_job_id(job_id);
        if (!fs::exists(record_path(job_id))) {
            throw Error(Errc::UnknownJob, "no job '" + job_id + "'");
        }
        FileLock lock(lock_path(job_id), m_options.lock_timeout);
        auto current = get_job(job_id);
        const auto t = make(current);
        auto job = apply_transition(std::move(current), t, m_options.clock());
        write(job);
        return job;
    }

private:
    static std::string hex_key(std::string_view s) {
        char buf[17];
        std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(s)));
        return buf;
    }

    static void check_job_id(const std::string& id) {
        const bool ok = !id.empty() && id.size() <= 128 && std::all_of(id.begin(), id.end(), [](char c) {
            return ::rubric::detail::is_ascii_alnum(c) || c == '-' || c == '_';
        });
        if (!ok) {
            throw Error(Errc::UnknownJob, "invalid job id '" + id + "'");
        }
    }

    fs::path lock_path(const std::string& job_id) const { return m_root / "jobs" / job_id / ".lock"; }

    void write(const GradingJob& job) const {
        atomic_write(record_path(job.job_id), canonical_dump(json(job)), m_options.fault_hook);
    }

    fs::path m_root;
    JobStoreOptions m_options;
};

}  // namespace rubric::store
