#pragma once

// HTTP grading service. Every request is answered from the job store; scoring
// runs on a bounded worker pool, never on a request thread. The endpoint
// reference is docs/API.md.

#include "rubric/app/formats.hpp"
#include "rubric/reporting.hpp"
#include "rubric/store/job_store.hpp"

#include <httplib.h>

#include <algorithm>
#include <condition_variable>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace rubric::app {

struct ServiceHooks {
    std::function<Timestamp()> clock = [] { return Timestamp::now(); };
    // Runs on the worker after SCORING is recorded and before the pipeline.
    std::function<void(const std::string& job_id)> before_scoring;
    ExpertScheduler scheduler = concurrent_scheduler;
};

inline int http_status(Errc code) {
    switch (code) {
    case Errc::UnknownJob: return 404;
    case Errc::IllegalTransition:
    case Errc::NotApproved:
    case Errc::DuplicateEssay: return 409;
    case Errc::ParseError:
    case Errc::InvalidInput:
    case Errc::InvalidEdit:
    case Errc::EmptyEssay:
    case Errc::EmptyAfterNormalization: return 400;
    case Errc::LockTimeout: return 503;
    default: return 500;
    }
}

inline json error_body(const Error& e) {
    json j{{"code", std::string(to_string(e.code()))}, {"message", e.message()}};
    if (!e.dimension_id().empty()) {
        j["dimension_id"] = e.dimension_id();
    }
    return j;
}

inline json job_summary(const store::GradingJob& job) {
    return json{{"job_id", job.job_id},
                {"essay_id", job.essay.essay_id},
                {"customer_name", job.essay.customer_name},
                {"state", std::string(store::to_string(job.state))},
                {"created_at", job.created_at},
                {"updated_at", job.updated_at}};
}

class GradingService {
public:
    explicit GradingService(ServiceConfig config, ServiceHooks hooks = {})
            : m_config(std::move(config)),
              m_hooks(std::move(hooks)),
              m_loaded(std::make_shared<LoadedRegistry>(load_registry(m_config.registry_path, m_config.models_dir))),
              m_store(m_config.store_dir,
                      store::JobStoreOptions{m_hooks.clock, {}, {}, std::chrono::milliseconds(m_config.sync_timeout_budget)}) {
        m_config.validate();
        route();
    }

    GradingService(const GradingService&) = delete;
    GradingService& operator=(const GradingService&) = delete;

    ~GradingService() { stop(); }

    // Binds, recovers unfinished jobs, starts workers and the listener.
    // Returns the bound port.
    int start() {
        if (m_config.port == 0) {
            m_port = m_server.bind_to_any_port(m_config.host);
        } else {
            m_port = m_server.bind_to_port(m_config.host, m_config.port) ? m_config.port : -1;
        }
        if (m_port < 0) {
            throw Error(Errc::IoFailure, "cannot bind " + m_config.host + ":" + std::to_string(m_config.port));
        }
        recover();
        for (int i = 0; i < m_config.worker_count; ++i) {
            m_workers.emplace_back([this] { work(); });
        }
        m_listener = std::thread([this] { m_server.listen_after_bind(); });
        m_server.wait_until_ready();
        return m_port;
    }

    // Stops accepting requests and joins the workers; queued jobs stay
    // RECEIVED on disk and are picked up by the next start().
    void stop() {
        {
            std::lock_guard lock(m_mutex);
            if (m_stopping) {
                return;
            }
            m_stopping = true;
        }
        m_cv.notify_all();
        m_server.stop();
        if (m_listener.joinable()) {
            m_listener.join();
        }
        m_workers.clear();
    }

    int port() const { return m_port; }
    store::JobStore& job_store() { return m_store; }
    const LoadedRegistry& registry() const { return *m_loaded; }
    const ServiceConfig& config() const { return m_config; }

    // One scoring run; used by the workers.
    void score(const std::string& job_id) {
        try {
            m_store.transition(job_id, store::JobTransition::start_scoring());
        } catch (const Error&) {
            return;  // no longer RECEIVED
        }
        try {
            if (m_hooks.before_scoring) {
                m_hooks.before_scoring(job_id);
            }
            const auto job = m_store.get_job(job_id);
            auto master = run_pipeline(job.essay, m_loaded->registry, m_loaded->preprocess,
                                       PipelineOptions{m_hooks.scheduler, m_hooks.clock});
            m_store.transition(job_id, store::JobTransition::complete_scoring(std::move(master)));
        } catch (const std::exception& e) {
            try {
                m_store.transition(job_id, store::JobTransition::fail(e.what()));
            } catch (const std::exception&) {
                // Another writer already moved the job on.
            }
        }
    }

private:
    void enqueue(std::string job_id) {
        {
            std::lock_guard lock(m_mutex);
            m_queue.push_back(std::move(job_id));
        }
        m_cv.notify_one();
    }

    void work() {
        for (;;) {
            std::string job_id;
            {
                std::unique_lock lock(m_mutex);
                m_cv.wait(lock, [this] { return m_stopping || !m_queue.empty(); });
                if (m_stopping) {
                    return;
                }
                job_id = std::move(m_queue.front());
                m_queue.pop_front();
            }
            score(job_id);
        }
    }

    void recover() {
        auto jobs = m_store.list_jobs();
        std::reverse(jobs.begin(), jobs.end());  // oldest first
        for (const auto& job : jobs) {
            if (job.state == store::JobState::Received) {
                enqueue(job.job_id);
            } else if (job.state == store::JobState::Scoring) {
                m_store.transition(job.job_id, store::JobTransition::fail("scoring interrupted by a service restart"));
            }
        }
    }

    static void reply(httplib::Response& res, int status, const json& body) {
        res.status = status;
        res.set_content(canonical_dump(body), "application/json");
    }

    template <typename Fn>
    static void guarded(httplib::Response& res, Fn&& fn) {
        try {
            fn();
        } catch (const Error& e) {
            reply(res, http_status(e.code()), error_body(e));
        } catch (const json::exception& e) {
            reply(res, 400, error_body(Error(Errc::ParseError, e.what())));
        } catch (const std::exception& e) {
            reply(res, 500, error_body(Error(Errc::IoFailure, e.what())));
        }
    }

    static json parse_body(const httplib::Request& req) {
        if (req.body.empty()) {
            return json::object();
        }
        try {
            return json::parse(req.body);
        } catch (const json::parse_error& e) {
            throw Error(Errc::ParseError, std::string("request body is not valid JSON: ") + e.what());
        }
    }

    json job_view(const store::GradingJob& job) const {
        json j = job;
        json dims = json::array();
        for (const auto& e : m_loaded->registry.experts()) {
            dims.push_back({{"dimension_id", e.descriptor.dimension_id},
                            {"display_name", e.descriptor.display_name},
                            {"weight", rational_to_json(e.descriptor.weight)}});
        }
        j["dimensions"] = dims;
        if (job.master) {
            const auto current = aggregate(store::effective_scores(job), m_loaded->registry);
            j["current_final_score"] = rational_to_json(current);
            j["current_final_score_display"] = to_decimal_string(current, 2);
        }
        return j;
    }

    void route() {
        const auto budget = static_cast<time_t>(m_config.sync_timeout_budget.count());
        m_server.set_read_timeout(budget);
        m_server.set_write_timeout(budget);
        m_server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                                      {"Access-Control-Allow-Methods", "GET, POST, PUT, OPTIONS"},
                                      {"Access-Control-Allow-Headers", "Content-Type"}});
        m_server.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

        m_server.Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
            reply(res, 200, json{{"status", "ok"}});
        });

        m_server.Post("/v1/essays", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                auto body = parse_body(req);
                if (!body.is_object()) {
                    throw Error(Errc::ParseError, "request body must be an object");
                }
                if (!body.contains("submitted_at")) {
                    body["submitted_at"] = m_hooks.clock();
                }
                const auto job = m_store.create_job(body.get<RawEssay>());
                enqueue(job.job_id);
                reply(res, 202, json{{"job_id", job.job_id}, {"state", std::string(store::to_string(job.state))}});
            });
        });

        m_server.Get("/v1/jobs", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                std::optional<store::JobState> filter;
                if (req.has_param("state")) {
                    try {
                        filter = store::job_state_from_string(req.get_param_value("state"));
                    } catch (const Error& e) {
                        throw Error(Errc::InvalidInput, e.message());
                    }
                }
                const auto offset = query_size(req, "offset", 0);
                const auto limit = query_size(req, "limit", 50);
                const auto jobs = m_store.list_jobs(filter);
                json page = json::array();
                for (std::size_t i = offset; i < jobs.size() && i < offset + limit; ++i) {
                    page.push_back(job_summary(jobs[i]));
                }
                reply(res, 200, json{{"jobs", page}, {"total", jobs.size()}, {"offset", offset}, {"limit", limit}});
            });
        });

        m_server.Get(R"(/v1/jobs/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] { reply(res, 200, job_view(m_store.get_job(req.matches[1]))); });
        });

        m_server.Put(R"(/v1/jobs/([^/]+)/review)", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                const auto body = parse_body(req);
                if (!body.contains("edits") || !body.at("edits").is_object()) {
                    throw Error(Errc::InvalidEdit, "body must contain an 'edits' object");
                }
                store::ReviewEdits edits;
                for (const auto& [dim, e] : body.at("edits").items()) {
                    try {
                        edits.emplace(dim, e.get<store::ReviewEdit>());
                    } catch (const Error& err) {
                        throw Error(err.code(), err.message(), dim);
                    }
                }
                reply(res, 200, job_view(m_store.transition(req.matches[1], store::JobTransition::edit(std::move(edits)))));
            });
        });

        m_server.Post(R"(/v1/jobs/([^/]+)/approve)", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                const auto body = parse_body(req);
                const auto note = detail::optional_field<std::string>(body, "note", "");
                const auto job = m_store.transition_with(req.matches[1], [&](const store::GradingJob& current) {
                    if (current.state != store::JobState::AwaitingReview) {
                        return store::JobTransition::approve(Rational(0), note);  // rejected by the state machine
                    }
                    return store::JobTransition::approve(aggregate(store::effective_scores(current), m_loaded->registry),
                                                         note);
                });
                reply(res, 200, job_view(job));
            });
        });

        m_server.Get(R"(/v1/jobs/([^/]+)/report)", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                const std::string job_id = req.matches[1];
                const auto format = req.has_param("format") ? req.get_param_value("format") : "structured";
                if (format != "structured" && format != "printable" && format != "pdf") {
                    throw Error(Errc::InvalidInput, "format must be structured, printable or pdf");
                }
                const auto job = m_store.get_job(job_id);
                const auto report = assemble_report(job, m_loaded->registry);
                std::string bytes;
                std::string content_type;
                if (format == "structured") {
                    bytes = render_report(report, ReportFormat::Structured);
                    content_type = "application/json";
                } else if (format == "printable") {
                    bytes = render_report(report, ReportFormat::Printable);
                    content_type = "text/html; charset=utf-8";
                } else {
                    bytes = print_to_pdf(render_report(report, ReportFormat::Printable), m_config.print_command);
                    content_type = "application/pdf";
                }
                if (job.state == store::JobState::Approved) {
                    try {
                        m_store.transition(job_id, store::JobTransition::reported());
                    } catch (const Error& e) {
                        if (e.code() != Errc::IllegalTransition) {
                            throw;
                        }
                    }
                }
                res.status = 200;
                res.set_content(bytes, content_type);
            });
        });
    }

    static std::size_t query_size(const httplib::Request& req, const char* name, std::size_t fallback) {
        if (!req.has_param(name)) {
            return fallback;
        }
        // Digits only: stoull would accept "-1" and wrap it.
        const auto v = req.get_param_value(name);
        if (!v.empty() && std::all_of(v.begin(), v.end(), [](char c) { return c >= '0' && c <= '9'; })) {
            try {
                return static_cast<std::size_t>(std::stoull(v));
            } catch (const std::out_of_range&) {
            }
        }
        throw Error(Errc::InvalidInput, std::string("query parameter '") + name + "' must be a non-negative integer");
    }

    ServiceConfig m_config;
    ServiceHooks m_hooks;
    std::shared_ptr<const LoadedRegistry> m_loaded;
    store::JobStore m_store;
    httplib::Server m_server;
    int m_port = -1;

    std::mutex m_mutex;
    std::condition_variable m_cv;
    std::deque<std::string> m_queue;
    bool m_stopping = false;
    std::vector<std::jthread> m_workers;
    std::thread m_listener;
};

}  // namespace rubric::app
