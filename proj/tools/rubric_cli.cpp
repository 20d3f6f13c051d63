// rubric: command-line front end for training, grading, evaluation and the
// HTTP service.
//
// Exit codes: 0 ok, 1 failure, 2 parse error or unknown id, 3 infeasible
// grid, 4 an expert could not run.

#include "rubric/app/service.hpp"
#include "rubric/app/training.hpp"
#include "rubric/rubric.hpp"

#include <CLI11.hpp>

#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

namespace {

using namespace rubric;
namespace fs = std::filesystem;

constexpr int kExitFailure = 1;
constexpr int kExitParse = 2;
constexpr int kExitInfeasible = 3;
constexpr int kExitExpert = 4;

int exit_code_for(Errc code) {
    switch (code) {
    case Errc::ParseError: return kExitParse;
    case Errc::InfeasibleStratification:
    case Errc::DegenerateData: return kExitInfeasible;
    case Errc::ExpertFailure:
    case Errc::UnresolvableModel:
    case Errc::TemplateMissing: return kExitExpert;
    default: return kExitFailure;
    }
}

void write_output(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        std::cout.flush();
        return;
    }
    const fs::path p(path);
    if (p.has_parent_path()) {
        fs::create_directories(p.parent_path());
    }
    store::atomic_write(p, text, {});
}

PreprocessConfig preprocess_from(const std::string& registry) {
    return registry.empty() ? PreprocessConfig{} : app::load_registry_file(registry).preprocess;
}

// ---- synth ---------------------------------------------------------------

struct SynthArgs {
    std::uint64_t seed = 42;
    std::size_t count = 1000;
    double label_noise = 0.05;
    std::string out_dir = ".";
};

int run_synth(const SynthArgs& a) {
    GeneratorSpec spec;
    spec.seed = a.seed;
    spec.essay_count = a.count;
    spec.label_noise = a.label_noise;
    const auto corpus = generate(spec);
    std::ostringstream essays, labels;
    write_corpus(essays, corpus.essays);
    write_labels(labels, corpus.labels);
    const fs::path dir(a.out_dir);
    fs::create_directories(dir);
    store::atomic_write(dir / "corpus.jsonl", essays.str(), {});
    store::atomic_write(dir / "labels.jsonl", labels.str(), {});
    std::cout << "wrote " << corpus.essays.size() << " essays to " << (dir / "corpus.jsonl").string() << " and "
              << (dir / "labels.jsonl").string() << "\n";
    return 0;
}

// ---- train ---------------------------------------------------------------

struct TrainArgs {
    std::string corpus;
    std::string labels;
    std::string dimension = "all";
    std::string grid;
    std::optional<std::uint64_t> seed;
    std::string out = "models";
    std::string registry;
};

std::string format_cv_table(const GridSearchResult& r) {
    std::ostringstream out;
    char line[160];
    std::snprintf(line, sizeof line, "  %-4s %-52s %8s\n", "#", "cell", to_string(r.metric).data());
    out << line;
    for (std::size_t i = 0; i < r.table.size(); ++i) {
        std::snprintf(line, sizeof line, "  %-4zu %-52s %8.4f%s\n", i, describe(r.table[i].cell).c_str(),
                      r.table[i].mean, i == r.best_index ? "  *" : "");
        out << line;
    }
    return out.str();
}

int run_train(const TrainArgs& a) {
    const auto essays = app::load_corpus(a.corpus);
    const auto labels = app::load_labels(a.labels);
    auto spec = a.grid.empty() ? GridSearchSpec::defaults() : app::load_grid_spec(a.grid);
    if (a.seed) {
        spec.seed = *a.seed;
    }
    try {
        spec.validate();
    } catch (const Error& e) {
        std::cerr << "error: grid: " << e.message() << "\n";
        return kExitInfeasible;
    }

    const auto known = app::labeled_dimensions(labels);
    std::vector<std::string> ids;
    if (a.dimension == "all") {
        ids = known;
    } else {
        std::stringstream ss(a.dimension);
        for (std::string id; std::getline(ss, id, ',');) {
            if (std::find(known.begin(), known.end(), id) == known.end()) {
                std::cerr << "error: unknown dimension '" << id << "'\n";
                return kExitParse;
            }
            ids.push_back(id);
        }
    }
    if (ids.empty()) {
        std::cerr << "error: labels name no dimensions\n";
        return kExitParse;
    }

    const fs::path out(a.out);
    fs::create_directories(out / "cv");
    app::train_dimensions(essays, labels, ids, spec, preprocess_from(a.registry), out, Timestamp::now(),
                          [&](const app::DimensionTraining& t) {
                              json doc = cv_table_to_json(t.cv);
                              doc["dimension_id"] = t.dimension_id;
                              doc["model_version"] = t.bundle.model_version;
                              doc["training_report"] = eval_report_to_json(t.bundle.training_report);
                              store::atomic_write(out / "cv" / (t.dimension_id + ".json"), canonical_dump(doc), {});
                              std::cout << t.dimension_id << ": winner " << describe(t.cv.best().cell) << " ("
                                        << to_string(t.cv.metric) << " " << t.cv.best().mean << ") -> "
                                        << t.artifact.string() << "\n"
                                        << format_cv_table(t.cv);
                              std::cout.flush();
                          });
    return 0;
}

// ---- grade ---------------------------------------------------------------

struct GradeArgs {
    std::string essay;
    std::string models = "models";
    std::string registry;
    std::string out;
    std::string format = "json";
    std::string produced_at;
    std::string essay_id;
    std::string customer;
};

RawEssay read_essay(const GradeArgs& a) {
    const auto text = store::read_text_file(a.essay);
    if (fs::path(a.essay).extension() == ".json") {
        try {
            return json::parse(text).get<RawEssay>();
        } catch (const json::exception& e) {
            throw Error(Errc::ParseError, a.essay + ": " + e.what());
        } catch (const Error& e) {
            throw Error(Errc::ParseError, a.essay + ": " + e.message());
        }
    }
    RawEssay raw;
    raw.essay_id = a.essay_id.empty() ? fs::path(a.essay).stem().string() : a.essay_id;
    raw.customer_name = a.customer;
    raw.submitted_at = Timestamp::now();
    raw.body = text;
    return raw;
}

std::string format_master_text(const MasterObject& m, const ExpertRegistry& registry) {
    std::ostringstream out;
    out << "essay " << m.essay_id << "\n";
    char line[512];
    std::snprintf(line, sizeof line, "%-6s %-28s %5s %10s  %s\n", "dim", "name", "score", "confidence", "feedback");
    out << line;
    for (const auto& e : registry.experts()) {
        const auto& r = m.results.at(e.descriptor.dimension_id);
        std::snprintf(line, sizeof line, "%-6s %-28s %5d %10.4f  ", r.dimension_id.c_str(),
                      e.descriptor.display_name.c_str(), r.score, r.confidence);
        out << line << r.feedback_text << "\n";
    }
    out << "final score: " << to_decimal_string(m.final_score, 2) << "\n";
    return out.str();
}

int run_grade(const GradeArgs& a) {
    const auto raw = read_essay(a);
    const auto loaded = app::load_registry(a.registry, a.models);
    PipelineOptions options;
    if (!a.produced_at.empty()) {
        const auto fixed = Timestamp::parse(a.produced_at);
        options.clock = [fixed] { return fixed; };
    }
    const auto master = run_pipeline(raw, loaded.registry, loaded.preprocess, options);
    write_output(a.out, a.format == "text" ? format_master_text(master, loaded.registry) : canonical_dump(json(master)));
    return 0;
}

// ---- serve ---------------------------------------------------------------

int run_serve(const std::string& config_path) {
    auto config = app::load_service_config(config_path);
    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGINT);
    sigaddset(&signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &signals, nullptr);  // inherited by every service thread

    app::GradingService service(std::move(config));
    const int port = service.start();
    std::cout << "listening on " << service.config().host << ":" << port << " with " << service.config().worker_count
              << " workers" << std::endl;
    int sig = 0;
    sigwait(&signals, &sig);
    std::cout << "shutting down" << std::endl;
    service.stop();
    return 0;
}

// ---- evaluate ------------------------------------------------------------

struct EvaluateArgs {
    std::string corpus;
    std::string labels;
    std::string models = "models";
    std::string dimension = "all";
    std::string registry;
    std::string out;
};

int run_evaluate(const EvaluateArgs& a) {
    const auto essays = app::load_corpus(a.corpus);
    const auto labels = app::load_labels(a.labels);
    const auto corpus = app::normalize_corpus(essays, preprocess_from(a.registry));
    const auto known = app::labeled_dimensions(labels);
    std::vector<std::string> ids;
    if (a.dimension == "all") {
        ids = known;
    } else {
        if (std::find(known.begin(), known.end(), a.dimension) == known.end()) {
            std::cerr << "error: unknown dimension '" << a.dimension << "'\n";
            return kExitParse;
        }
        ids.push_back(a.dimension);
    }
    json report = json::object();
    for (const auto& id : ids) {
        const auto bundle = store::load_model(store::resolve_model_path(a.models, id));
        const auto y = labels_for(essays, labels, id);
        std::vector<int> predicted;
        predicted.reserve(corpus.size());
        for (const auto& essay : corpus) {
            predicted.push_back(bundle.predict(essay).label);
        }
        const auto r = evaluate_predictions(y, predicted);
        auto entry = eval_report_to_json(r);
        entry["model_version"] = bundle.model_version;
        report[id] = entry;
        std::printf("%s accuracy %.4f macro_f1 %.4f\n", id.c_str(), r.accuracy, r.macro_f1);
    }
    std::fflush(stdout);
    if (!a.out.empty()) {
        write_output(a.out, canonical_dump(report));
    }
    return 0;
}

// ---- lint-templates ------------------------------------------------------

int run_lint(const std::vector<std::string>& files, const std::string& registry) {
    std::vector<fs::path> paths(files.begin(), files.end());
    if (!registry.empty()) {
        const auto file = app::load_registry_file(registry);
        for (const auto& d : file.dimensions) {
            paths.push_back(file.template_path(d));
        }
    }
    if (paths.empty()) {
        std::cerr << "error: no template files given\n";
        return kExitParse;
    }
    std::size_t problems = 0;
    for (const auto& p : paths) {
        std::vector<std::string> diagnostics;
        try {
            diagnostics = validate_template_set(app::load_template_set(p));
        } catch (const Error& e) {
            diagnostics.push_back(e.message());
        }
        for (const auto& d : diagnostics) {
            std::cout << p.string() << ": " << d << "\n";
        }
        problems += diagnostics.size();
    }
    std::cout << paths.size() << " template set(s), " << problems << " problem(s)\n";
    return problems == 0 ? 0 : kExitFailure;
}

// ---- report --------------------------------------------------------------

struct ReportArgs {
    std::string store_dir = "store";
    std::string job;
    std::string registry;
    std::string models = "models";
    std::string format = "structured";
    std::string out;
    std::string print_command;
};

int run_report(const ReportArgs& a) {
    store::JobStore store(a.store_dir);
    const auto job = store.get_job(a.job);
    const auto loaded = app::load_registry(a.registry, a.models);
    const auto report = assemble_report(job, loaded.registry);
    if (a.format == "pdf") {
        write_output(a.out, print_to_pdf(render_report(report, ReportFormat::Printable), a.print_command));
    } else {
        write_output(a.out,
                     render_report(report, a.format == "printable" ? ReportFormat::Printable : ReportFormat::Structured));
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App cli{"Rubric essay scoring: train, grade, evaluate and serve"};
    cli.require_subcommand(1);
    cli.set_version_flag("--version", "rubric 1.0.0");

    SynthArgs synth;
    auto* synth_cmd = cli.add_subcommand("synth", "Generate a synthetic labeled corpus");
    synth_cmd->add_option("--seed", synth.seed, "Generator seed")->capture_default_str();
    synth_cmd->add_option("--count", synth.count, "Number of essays")->capture_default_str()->check(CLI::PositiveNumber);
    synth_cmd->add_option("--label-noise", synth.label_noise, "Share of re-drawn labels")
            ->capture_default_str()
            ->check(CLI::Range(0.0, 0.4999));
    synth_cmd->add_option("--out-dir", synth.out_dir, "Directory for corpus.jsonl and labels.jsonl")->capture_default_str();

    TrainArgs train;
    auto* train_cmd = cli.add_subcommand("train", "Grid-search, fit and publish one model per dimension");
    train_cmd->add_option("--corpus", train.corpus, "Corpus file (JSON lines)")->required();
    train_cmd->add_option("--labels", train.labels, "Labels file (JSON lines)")->required();
    train_cmd->add_option("--dimension", train.dimension, "Dimension id, comma list, or 'all'")->capture_default_str();
    train_cmd->add_option("--grid", train.grid, "Grid spec file (default grid when omitted)");
    train_cmd->add_option("--seed", train.seed, "Overrides the grid seed");
    train_cmd->add_option("--out", train.out, "Models directory")->capture_default_str();
    train_cmd->add_option("--registry", train.registry, "Registry file supplying preprocessing settings");

    GradeArgs grade;
    auto* grade_cmd = cli.add_subcommand("grade", "Score one essay with every registered expert");
    grade_cmd->add_option("--essay", grade.essay, "Essay file (.json RawEssay, otherwise plain text)")->required();
    grade_cmd->add_option("--models", grade.models, "Models directory")->capture_default_str();
    grade_cmd->add_option("--registry", grade.registry, "Registry file")->required();
    grade_cmd->add_option("--out", grade.out, "Output file (stdout when omitted)");
    grade_cmd->add_option("--format", grade.format, "json or text")
            ->capture_default_str()
            ->check(CLI::IsMember({"json", "text"}));
    grade_cmd->add_option("--produced-at", grade.produced_at, "Fixed produced_at timestamp");
    grade_cmd->add_option("--essay-id", grade.essay_id, "Essay id for plain-text input");
    grade_cmd->add_option("--customer", grade.customer, "Customer name for plain-text input");

    std::string serve_config;
    auto* serve_cmd = cli.add_subcommand("serve", "Run the HTTP grading service");
    serve_cmd->add_option("--config", serve_config, "Service config file")->required();

    EvaluateArgs evaluate;
    auto* eval_cmd = cli.add_subcommand("evaluate", "Score stored models against a labeled corpus");
    eval_cmd->add_option("--corpus", evaluate.corpus, "Corpus file")->required();
    eval_cmd->add_option("--labels", evaluate.labels, "Labels file")->required();
    eval_cmd->add_option("--models", evaluate.models, "Models directory")->capture_default_str();
    eval_cmd->add_option("--dimension", evaluate.dimension, "Dimension id or 'all'")->capture_default_str();
    eval_cmd->add_option("--registry", evaluate.registry, "Registry file supplying preprocessing settings");
    eval_cmd->add_option("--out", evaluate.out, "Write per-dimension metrics as JSON to this file");

    std::vector<std::string> lint_files;
    std::string lint_registry;
    auto* lint_cmd = cli.add_subcommand("lint-templates", "Check feedback template sets");
    lint_cmd->add_option("files", lint_files, "Template set files");
    lint_cmd->add_option("--registry", lint_registry, "Check every template set named by this registry");

    ReportArgs report;
    auto* report_cmd = cli.add_subcommand("report", "Render the report of an approved job");
    report_cmd->add_option("--store", report.store_dir, "Job store directory")->capture_default_str();
    report_cmd->add_option("--job", report.job, "Job id")->required();
    report_cmd->add_option("--registry", report.registry, "Registry file")->required();
    report_cmd->add_option("--models", report.models, "Models directory")->capture_default_str();
    report_cmd->add_option("--format", report.format, "structured, printable or pdf")
            ->capture_default_str()
            ->check(CLI::IsMember({"structured", "printable", "pdf"}));
    report_cmd->add_option("--out", report.out, "Output file (stdout when omitted)");
    report_cmd->add_option("--print-command", report.print_command, "PDF print command (stdin html, stdout pdf)");

    try {
        cli.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = cli.exit(e);
        return code == 0 ? 0 : kExitParse;
    }

    try {
        if (*synth_cmd) {
            return run_synth(synth);
        }
        if (*train_cmd) {
            return run_train(train);
        }
        if (*grade_cmd) {
            return run_grade(grade);
        }
        if (*serve_cmd) {
            return run_serve(serve_config);
        }
        if (*eval_cmd) {
            return run_evaluate(evaluate);
        }
        if (*lint_cmd) {
            return run_lint(lint_files, lint_registry);
        }
        if (*report_cmd) {
            return run_report(report);
        }
    } catch (const Error& e) {
        std::cerr << "error: " << to_string(e.code()) << ": " << e.message();
        if (!e.dimension_id().empty()) {
            std::cerr << " [dimension " << e.dimension_id() << "]";
        }
        std::cerr << "\n";
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFailure;
    }
    return kExitFailure;
}
