#include "test_support.hpp"

#include <gtest/gtest.h>

#include <fstream>

using namespace rubric;
using namespace rubric::testing;

namespace {

void write_file(const fs::path& p, const std::string& text) {
    fs::create_directories(p.parent_path());
    std::ofstream(p) << text;
}

// Writes the first `count` fixture essays and their labels.
void write_fixture_corpus(const TempDir& dir, std::size_t count) {
    const auto& c = model_fixture().corpus;
    std::ofstream essays(dir / "corpus.jsonl");
    std::ofstream labels(dir / "labels.jsonl");
    write_corpus(essays, {c.essays.begin(), c.essays.begin() + static_cast<std::ptrdiff_t>(count)});
    write_labels(labels, {c.labels.begin(), c.labels.begin() + static_cast<std::ptrdiff_t>(count)});
}

fs::path write_fixture_essay(const TempDir& dir) {
    const auto path = dir / "essay.json";
    write_file(path, json(model_fixture().corpus.essays.at(3)).dump());
    return path;
}

std::string grade_args(const fs::path& essay, const fs::path& models, const std::string& extra = "") {
    return "grade --essay " + quote(essay) + " --models " + quote(models) + " --registry " + quote(kRegistryPath) +
           " --produced-at 2024-03-01T09:00:00Z " + extra;
}

}  // namespace

TEST(Cli, SynthIsDeterministic) {
    TempDir dir;
    ASSERT_EQ(run_cli("synth --seed 42 --count 200 --out-dir " + quote(dir / "a")).exit_code, 0);
    ASSERT_EQ(run_cli("synth --seed 42 --count 200 --out-dir " + quote(dir / "b")).exit_code, 0);
    for (const auto* name : {"corpus.jsonl", "labels.jsonl"}) {
        const auto a = store::read_text_file(dir / "a" / name);
        EXPECT_FALSE(a.empty());
        EXPECT_EQ(a, store::read_text_file(dir / "b" / name)) << name;
    }
    std::ifstream in(dir / "a" / "corpus.jsonl");
    EXPECT_EQ(read_corpus(in).size(), 200u);
    // The CLI writes exactly what the library generates.
    GeneratorSpec spec;
    spec.essay_count = 200;
    std::ostringstream expected;
    write_corpus(expected, generate(spec).essays);
    EXPECT_EQ(store::read_text_file(dir / "a" / "corpus.jsonl"), expected.str());
}

TEST(Cli, SynthRejectsBadArguments) {
    TempDir dir;
    EXPECT_EQ(run_cli("synth --count 0 --out-dir " + quote(dir.path())).exit_code, 2);
    EXPECT_EQ(run_cli("synth --label-noise 0.7 --out-dir " + quote(dir.path())).exit_code, 2);
    EXPECT_EQ(run_cli("frobnicate").exit_code, 2);
    EXPECT_EQ(run_cli("").exit_code, 2);
}

TEST(Cli, TrainWithOneCellGridPicksThatCell) {
    TempDir dir;
    write_fixture_corpus(dir, 90);
    write_file(dir / "grid.json", json(single_cell_grid()).dump());
    const auto r = run_cli("train --corpus " + quote(dir / "corpus.jsonl") + " --labels " + quote(dir / "labels.jsonl") +
                           " --dimension d02,d03 --grid " + quote(dir / "grid.json") + " --out " + quote(dir / "models") +
                           " --registry " + quote(kRegistryPath));
    ASSERT_EQ(r.exit_code, 0) << r.output;
    for (const auto* id : {"d02", "d03"}) {
        const auto cv = json::parse(store::read_text_file(dir / "models" / "cv" / (std::string(id) + ".json")));
        EXPECT_EQ(cv.at("rows").size(), 1u);
        EXPECT_EQ(cv.at("best_index"), 0);
        EXPECT_EQ(cv.at("rows").at(0).at("cell"), json(single_cell_grid().cells().at(0)));
        const auto bundle = store::load_model(store::resolve_model_path(dir / "models", id));
        EXPECT_EQ(bundle.dimension_id, id);
        EXPECT_EQ(bundle.vocabulary.config(), single_cell_grid().feature_configs.at(0));
        EXPECT_EQ(bundle.kind(), ClassifierKind::NaiveBayes);
    }
    EXPECT_FALSE(fs::exists(dir / "models" / "d01"));
    EXPECT_NE(r.output.find("d02: winner"), std::string::npos) << r.output;
}

TEST(Cli, TrainRejectsUnknownDimension) {
    TempDir dir;
    write_fixture_corpus(dir, 30);
    const auto r = run_cli("train --corpus " + quote(dir / "corpus.jsonl") + " --labels " + quote(dir / "labels.jsonl") +
                           " --dimension d99 --out " + quote(dir / "models"));
    EXPECT_EQ(r.exit_code, 2);
    EXPECT_NE(r.output.find("d99"), std::string::npos) << r.output;
}

TEST(Cli, TrainReportsParseErrorsWithLineNumbers) {
    TempDir dir;
    write_fixture_corpus(dir, 5);
    std::ofstream(dir / "corpus.jsonl", std::ios::app) << "{\"essay_id\": \"broken\"\n";
    const auto r = run_cli("train --corpus " + quote(dir / "corpus.jsonl") + " --labels " + quote(dir / "labels.jsonl") +
                           " --out " + quote(dir / "models"));
    EXPECT_EQ(r.exit_code, 2);
    EXPECT_NE(r.output.find("corpus.jsonl:6: "), std::string::npos) << r.output;
}

TEST(Cli, TrainReportsInfeasibleGrids) {
    TempDir dir;
    write_fixture_corpus(dir, 12);
    auto grid = single_cell_grid();
    grid.folds = 10;  // fewer than 10 essays per class
    write_file(dir / "grid.json", json(grid).dump());
    auto r = run_cli("train --corpus " + quote(dir / "corpus.jsonl") + " --labels " + quote(dir / "labels.jsonl") +
                     " --dimension d01 --grid " + quote(dir / "grid.json") + " --out " + quote(dir / "models"));
    EXPECT_EQ(r.exit_code, 3) << r.output;
    grid.folds = 1;
    write_file(dir / "grid.json", json(grid).dump());
    r = run_cli("train --corpus " + quote(dir / "corpus.jsonl") + " --labels " + quote(dir / "labels.jsonl") +
                " --dimension d01 --grid " + quote(dir / "grid.json") + " --out " + quote(dir / "models"));
    EXPECT_EQ(r.exit_code, 3) << r.output;
}

TEST(Cli, GradeMatchesGoldenFile) {
    TempDir dir;
    const auto essay = write_fixture_essay(dir);
    const auto r = run_cli(grade_args(essay, model_fixture().models, "--out " + quote(dir / "master.json")));
    ASSERT_EQ(r.exit_code, 0) << r.output;
    const auto text = store::read_text_file(dir / "master.json");
    const auto golden = kGoldenDir / "grade_master.json";
    if (std::getenv("RUBRIC_UPDATE_GOLDEN") != nullptr) {
        write_file(golden, text);
    }
    EXPECT_EQ(text, store::read_text_file(golden));
}

TEST(Cli, GradeAgreesWithTheLibraryPipeline) {
    TempDir dir;
    const auto essay = write_fixture_essay(dir);
    const auto r = run_cli(grade_args(essay, model_fixture().models, "--out " + quote(dir / "master.json")));
    ASSERT_EQ(r.exit_code, 0) << r.output;
    const auto reg = fixture_registry();
    PipelineOptions options;
    options.clock = [] { return fixed_time(); };
    const auto expected = run_pipeline(model_fixture().corpus.essays.at(3), reg.registry, reg.preprocess, options);
    EXPECT_EQ(store::read_text_file(dir / "master.json"), canonical_dump(json(expected)));
}

TEST(Cli, TextAndJsonFormatsRenderTheSameScores) {
    TempDir dir;
    const auto essay = write_fixture_essay(dir);
    const auto as_json = run_cli(grade_args(essay, model_fixture().models, "--format json --out " + quote(dir / "m.json")));
    const auto as_text = run_cli(grade_args(essay, model_fixture().models, "--format text --out " + quote(dir / "m.txt")));
    ASSERT_EQ(as_json.exit_code, 0);
    ASSERT_EQ(as_text.exit_code, 0);
    const auto master = json::parse(store::read_text_file(dir / "m.json")).get<MasterObject>();
    std::istringstream text(store::read_text_file(dir / "m.txt"));
    std::string line;
    std::map<std::string, int> scores;
    std::string final_line;
    while (std::getline(text, line)) {
        std::istringstream fields(line);
        std::string id;
        fields >> id;
        if (master.results.contains(id)) {
            // Display names contain spaces: the score is the first integer
            // token after the name, followed by the confidence.
            std::vector<std::string> tokens;
            for (std::string t; fields >> t;) {
                tokens.push_back(t);
            }
            for (std::size_t i = 0; i + 1 < tokens.size(); ++i) {
                if ((tokens[i] == "0" || tokens[i] == "1" || tokens[i] == "2") &&
                    tokens[i + 1].find('.') != std::string::npos) {
                    scores[id] = std::stoi(tokens[i]);
                    break;
                }
            }
        } else if (line.rfind("final score: ", 0) == 0) {
            final_line = line;
        }
    }
    ASSERT_EQ(scores.size(), 13u);
    for (const auto& [id, r] : master.results) {
        EXPECT_EQ(scores.at(id), r.score) << id;
    }
    EXPECT_EQ(final_line, "final score: " + to_decimal_string(master.final_score, 2));
}

TEST(Cli, GradeWithMissingModelExits4NamingTheDimension) {
    TempDir dir;
    fs::copy(model_fixture().models, dir / "models", fs::copy_options::recursive);
    fs::remove_all(dir / "models" / "d07");
    const auto essay = write_fixture_essay(dir);
    const auto r = run_cli(grade_args(essay, dir / "models"));
    EXPECT_EQ(r.exit_code, 4);
    EXPECT_NE(r.output.find("d07"), std::string::npos) << r.output;
}

TEST(Cli, GradeAcceptsPlainText) {
    TempDir dir;
    write_file(dir / "my-essay.txt", model_fixture().corpus.essays.at(3).body);
    const auto r = run_cli(grade_args(dir / "my-essay.txt", model_fixture().models, "--customer 'Sam Lee'"));
    ASSERT_EQ(r.exit_code, 0) << r.output;
    const auto master = json::parse(r.output);
    EXPECT_EQ(master.at("essay_id"), "my-essay");
    // Same body, so the same scores as the JSON input.
    const auto reg = fixture_registry();
    const auto expected = run_pipeline(model_fixture().corpus.essays.at(3), reg.registry, reg.preprocess);
    for (const auto& [id, res] : expected.results) {
        EXPECT_EQ(master.at("results").at(id).at("score"), res.score) << id;
    }
}

TEST(Cli, EvaluatePrintsPerfectAccuracyOnSeparableTrainingData) {
    TempDir dir;
    write_fixture_corpus(dir, model_fixture().corpus.essays.size());
    const auto r = run_cli("evaluate --corpus " + quote(dir / "corpus.jsonl") + " --labels " + quote(dir / "labels.jsonl") +
                           " --models " + quote(model_fixture().models) + " --registry " + quote(kRegistryPath) +
                           " --out " + quote(dir / "eval.json"));
    ASSERT_EQ(r.exit_code, 0) << r.output;
    EXPECT_NE(r.output.find("d01 accuracy 1.0000"), std::string::npos) << r.output;
    const auto doc = json::parse(store::read_text_file(dir / "eval.json"));
    ASSERT_EQ(doc.size(), 13u);
    for (const auto& [id, entry] : doc.items()) {
        EXPECT_EQ(entry.at("accuracy"), 1.0) << id;
    }
    const auto unknown = run_cli("evaluate --corpus " + quote(dir / "corpus.jsonl") + " --labels " +
                                 quote(dir / "labels.jsonl") + " --models " + quote(model_fixture().models) +
                                 " --dimension d42");
    EXPECT_EQ(unknown.exit_code, 2);
}

TEST(Cli, LintTemplates) {
    TempDir dir;
    auto r = run_cli("lint-templates --registry " + quote(kRegistryPath));
    EXPECT_EQ(r.exit_code, 0) << r.output;
    EXPECT_NE(r.output.find("13 template set(s), 0 problem(s)"), std::string::npos) << r.output;

    write_file(dir / "broken.json",
               R"({"dimension_id": "d01", "score_0": ["{customer_name}"], "score_1": ["Hi {nmae}."], "score_2": []})");
    r = run_cli("lint-templates " + quote(dir / "broken.json"));
    EXPECT_NE(r.exit_code, 0);
    EXPECT_NE(r.output.find("score 2 uncovered"), std::string::npos) << r.output;
    EXPECT_NE(r.output.find("nmae"), std::string::npos) << r.output;
    EXPECT_NE(r.output.find("no literal text"), std::string::npos) << r.output;
}

TEST(Cli, ReportRendersApprovedJobs) {
    TempDir dir;
    const auto reg = fixture_registry();
    std::string approved_id;
    std::string pending_id;
    {
        store::JobStore s(dir / "store");
        const auto& essays = model_fixture().corpus.essays;
        approved_id = s.create_job(essays.at(0)).job_id;
        s.transition(approved_id, store::JobTransition::start_scoring());
        s.transition(approved_id, store::JobTransition::complete_scoring(
                                          run_pipeline(essays.at(0), reg.registry, reg.preprocess)));
        const auto job = s.get_job(approved_id);
        s.transition(approved_id, store::JobTransition::approve(aggregate(store::effective_scores(job), reg.registry)));
        pending_id = s.create_job(essays.at(1)).job_id;
    }
    const std::string common = " --store " + quote(dir / "store") + " --registry " + quote(kRegistryPath) + " --models " +
                               quote(model_fixture().models);
    auto r = run_cli("report --job " + approved_id + common);
    ASSERT_EQ(r.exit_code, 0) << r.output;
    const store::JobStore s(dir / "store");
    EXPECT_EQ(r.output, render_report(assemble_report(s.get_job(approved_id), reg.registry), ReportFormat::Structured));
    r = run_cli("report --format pdf --print-command cat --job " + approved_id + common);
    ASSERT_EQ(r.exit_code, 0) << r.output;
    EXPECT_EQ(r.output, render_report(assemble_report(s.get_job(approved_id), reg.registry), ReportFormat::Printable));
    r = run_cli("report --job " + pending_id + common);
    EXPECT_NE(r.exit_code, 0);
    EXPECT_NE(r.output.find("NotApproved"), std::string::npos) << r.output;
    EXPECT_NE(run_cli("report --job job-ffffffffffffffff" + common).exit_code, 0);
}
