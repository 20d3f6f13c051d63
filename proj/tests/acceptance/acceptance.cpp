// Acceptance run: one PASS/FAIL line per criterion, exit status 0 only when
// all pass. Every expected value comes from an oracle written here, not from
// the code under test.

#include "test_support.hpp"

#include "rubric/app/service.hpp"

#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <sstream>
#include <thread>

using namespace rubric;
using namespace rubric::testing;
using namespace std::chrono_literals;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;

    // Records the first failure; later checks keep the original message.
    void expect(bool ok, const std::string& what) {
        if (!ok && pass) {
            pass = false;
            detail = what;
        }
    }
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(double v, int places = 3) {
    std::ostringstream s;
    s.setf(std::ios::fixed);
    s.precision(places);
    s << v;
    return s.str();
}

FeatureVector sparse(std::size_t dim, std::vector<std::pair<std::uint32_t, double>> entries, std::uint64_t fp) {
    FeatureVector v;
    v.entries = std::move(entries);
    v.dimensionality = dim;
    v.vocab_fingerprint = fp;
    return v;
}

void write_file(const fs::path& p, const std::string& text) {
    fs::create_directories(p.parent_path());
    std::ofstream(p) << text;
}

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

bool same_prediction_bits(const Prediction& a, const Prediction& b) {
    bool same = a.label == b.label && same_bits(a.confidence, b.confidence);
    for (std::size_t c = 0; c < kNumClasses; ++c) {
        same = same && same_bits(a.scores[c], b.scores[c]);
    }
    return same;
}

// 1. Posteriors recomputed from raw counts in long double.
Outcome nb_oracle() {
    Outcome o;
    const auto t0 = Clock::now();
    Xoshiro256 rng(31337);
    std::size_t queries = 0;
    for (int corpus = 0; corpus < 20 && o.pass; ++corpus) {
        const std::size_t v = 1 + rng.uniform_below(5);
        const std::size_t n = 1 + rng.uniform_below(8);
        const double alpha = 0.05 + rng.uniform_unit() * 2.0;
        std::vector<std::vector<int>> dense(n, std::vector<int>(v));
        std::vector<LabeledExample> data;
        for (std::size_t d = 0; d < n; ++d) {
            std::vector<std::pair<std::uint32_t, double>> entries;
            for (std::size_t i = 0; i < v; ++i) {
                dense[d][i] = static_cast<int>(rng.uniform_below(5));
                if (dense[d][i] > 0) {
                    entries.emplace_back(static_cast<std::uint32_t>(i), dense[d][i]);
                }
            }
            data.push_back({sparse(v, entries, 99), static_cast<int>(rng.uniform_below(3))});
        }
        const auto model = train_nb(data, alpha);
        for (int q = 0; q < 25 && o.pass; ++q, ++queries) {
            std::vector<int> query(v);
            std::vector<std::pair<std::uint32_t, double>> entries;
            for (std::size_t i = 0; i < v; ++i) {
                query[i] = static_cast<int>(rng.uniform_below(4));
                if (query[i] > 0) {
                    entries.emplace_back(static_cast<std::uint32_t>(i), query[i]);
                }
            }
            const auto p = predict_nb(model, sparse(v, entries, 99));
            std::array<long double, 3> log_joint{};
            std::array<bool, 3> present{};
            for (int c = 0; c < 3; ++c) {
                long double docs = 0;
                long double total = 0;
                std::vector<long double> count(v, 0);
                for (std::size_t d = 0; d < n; ++d) {
                    if (data[d].label == c) {
                        docs += 1;
                        for (std::size_t i = 0; i < v; ++i) {
                            count[i] += dense[d][i];
                            total += dense[d][i];
                        }
                    }
                }
                present[c] = docs > 0;
                if (!present[c]) {
                    o.expect(std::isinf(p.scores[c]) && p.scores[c] < 0, "absent class must score -inf");
                    continue;
                }
                long double s = std::log(docs / static_cast<long double>(n));
                for (std::size_t i = 0; i < v; ++i) {
                    s += query[i] * std::log((count[i] + alpha) / (total + alpha * static_cast<long double>(v)));
                }
                log_joint[c] = s;
                o.expect(std::fabs(static_cast<long double>(p.scores[c]) - s) < 1e-9,
                         "log-posterior differs from oracle in corpus " + std::to_string(corpus));
            }
            // Normalized posterior of the predicted label.
            long double z = 0;
            for (int c = 0; c < 3; ++c) {
                if (present[c]) {
                    z += std::exp(log_joint[c] - log_joint[p.label]);
                }
            }
            o.expect(present[p.label] && std::fabs(static_cast<long double>(p.confidence) - 1 / z) < 1e-9,
                     "posterior probability differs from oracle in corpus " + std::to_string(corpus));
        }
    }
    const double secs = seconds_since(t0);
    o.expect(secs < 5.0, "runtime " + fmt(secs) + " s");
    if (o.pass) {
        o.detail = "20 corpora, " + std::to_string(queries) + " queries within 1e-9 in " + fmt(secs) + " s";
    }
    return o;
}

// 2. Three one-hot classes, ten copies each.
Outcome svm_separability() {
    Outcome o;
    const auto t0 = Clock::now();
    std::vector<LabeledExample> data;
    for (int i = 0; i < 10; ++i) {
        data.push_back({sparse(3, {{0, 1.0}}, 5), 2});
        data.push_back({sparse(3, {{1, 1.0}}, 5), 0});
        data.push_back({sparse(3, {{2, 1.0}}, 5), 1});
    }
    constexpr int kSeeds = 50;
    for (int seed = 0; seed < kSeeds; ++seed) {
        const auto m = train_svm(data, 1e-3, 30, static_cast<std::uint64_t>(seed) * 7919u);
        for (const auto& ex : data) {
            o.expect(predict_svm(m, ex.features).label == ex.label, "misclassified with seed " + std::to_string(seed));
        }
    }
    const double secs = seconds_since(t0);
    o.expect(secs < 1.0, "runtime " + fmt(secs) + " s");
    if (o.pass) {
        o.detail = "100% training accuracy for " + std::to_string(kSeeds) + " seeds in " + fmt(secs) + " s";
    }
    return o;
}

// 3. Full-scale run through the command-line tool.
Outcome full_scale() {
    Outcome o;
    TempDir dir;
    auto r = run_cli("synth --seed 42 --count 1000 --label-noise 0.05 --out-dir " + quote(dir / "train"));
    o.expect(r.exit_code == 0, "synth failed: " + r.output);
    r = run_cli("synth --seed 4242 --count 300 --label-noise 0.05 --out-dir " + quote(dir / "held"));
    o.expect(r.exit_code == 0, "synth failed: " + r.output);
    if (!o.pass) {
        return o;
    }

    const auto t0 = Clock::now();
    r = run_cli("train --dimension all --corpus " + quote(dir / "train/corpus.jsonl") + " --labels " +
                quote(dir / "train/labels.jsonl") + " --out " + quote(dir / "models") + " --registry " +
                quote(kRegistryPath));
    const double train_secs = seconds_since(t0);
    o.expect(r.exit_code == 0, "train failed: " + r.output.substr(0, 400));
    o.expect(train_secs < 600.0, "training took " + fmt(train_secs, 1) + " s");
    if (r.exit_code != 0) {
        return o;
    }

    r = run_cli("evaluate --corpus " + quote(dir / "held/corpus.jsonl") + " --labels " + quote(dir / "held/labels.jsonl") +
                " --models " + quote(dir / "models") + " --registry " + quote(kRegistryPath) + " --out " +
                quote(dir / "eval.json"));
    o.expect(r.exit_code == 0, "evaluate failed: " + r.output);
    double worst = 1.0;
    std::string worst_dim;
    if (r.exit_code == 0) {
        const auto eval = json::parse(store::read_text_file(dir / "eval.json"));
        o.expect(eval.size() == 13, "expected 13 evaluated dimensions, got " + std::to_string(eval.size()));
        for (const auto& [dim, e] : eval.items()) {
            // Macro-F1 recomputed from the confusion matrix.
            const auto cm = e.at("confusion").get<std::vector<std::vector<long>>>();
            double f1_sum = 0.0;
            for (std::size_t k = 0; k < 3; ++k) {
                long tp = cm[k][k];
                long predicted = 0;
                long actual = 0;
                for (std::size_t j = 0; j < 3; ++j) {
                    predicted += cm[j][k];
                    actual += cm[k][j];
                }
                const double p = predicted == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(predicted);
                const double rc = actual == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(actual);
                f1_sum += p + rc == 0.0 ? 0.0 : 2 * p * rc / (p + rc);
            }
            const double macro_f1 = f1_sum / 3.0;
            o.expect(std::fabs(macro_f1 - e.at("macro_f1").get<double>()) < 1e-12, "reported macro-F1 disagrees for " + dim);
            if (macro_f1 < worst) {
                worst = macro_f1;
                worst_dim = dim;
            }
        }
        o.expect(worst >= 0.90, "held-out macro-F1 " + fmt(worst) + " for " + worst_dim);
    }

    std::ifstream held(dir / "held/corpus.jsonl");
    const auto essay = read_corpus(held).at(0);
    write_file(dir / "essay.json", json(essay).dump());
    const auto g0 = Clock::now();
    r = run_cli("grade --essay " + quote(dir / "essay.json") + " --models " + quote(dir / "models") + " --registry " +
                quote(kRegistryPath) + " --out " + quote(dir / "master.json"));
    const double grade_secs = seconds_since(g0);
    o.expect(r.exit_code == 0, "grade failed: " + r.output);
    o.expect(grade_secs < 1.0, "grading took " + fmt(grade_secs) + " s");
    if (r.exit_code == 0) {
        const auto master = json::parse(store::read_text_file(dir / "master.json"));
        o.expect(master.at("results").size() == 13, "grade produced fewer than 13 results");
    }
    if (o.pass) {
        o.detail = "train " + fmt(train_secs, 1) + " s, worst held-out macro-F1 " + fmt(worst) + " (" + worst_dim +
                   "), grade " + fmt(grade_secs) + " s";
    }
    return o;
}

// 4. Leakage diagnostic and determinism on the default grid.
Outcome grid_sanity() {
    Outcome o;
    GeneratorSpec gen;
    gen.seed = 4;
    gen.essay_count = 1000;
    const auto corpus = generate(gen);
    const auto docs = app::normalize_corpus(corpus.essays, PreprocessConfig{});
    const auto labels = labels_for(corpus.essays, corpus.labels, "d05");
    const auto spec = GridSearchSpec::defaults();
    const auto honest = grid_search(docs, labels, spec);
    const auto again = grid_search(docs, labels, spec);
    const auto permuted = grid_search(docs, labels, spec, {true, 0});
    o.expect(honest.best_index == again.best_index && honest.table == again.table,
             "two runs with the same spec and seed differ");
    o.expect(std::fabs(permuted.best().mean - 1.0 / 3.0) <= 0.1,
             "permuted winner " + fmt(permuted.best().mean) + " is not within 1/3 +- 0.1");
    o.expect(honest.best().mean > 0.9, "honest winner only " + fmt(honest.best().mean));
    if (o.pass) {
        o.detail = std::to_string(spec.cells().size()) + " cells: honest " + fmt(honest.best().mean) + ", permuted " +
                   fmt(permuted.best().mean) + ", repeat identical";
    }
    return o;
}

// 5. Rational aggregation against integer cross-multiplication.
Outcome aggregation() {
    Outcome o;
    Xoshiro256 rng(5150);
    for (int t = 0; t < 1000 && o.pass; ++t) {
        const std::size_t dims = 1 + rng.uniform_below(13);
        std::map<std::string, int> scores;
        std::map<std::string, Rational> weights;
        std::vector<std::int64_t> p(dims);
        std::vector<std::int64_t> q(dims);
        std::vector<int> s(dims);
        for (std::size_t i = 0; i < dims; ++i) {
            p[i] = static_cast<std::int64_t>(rng.uniform_below(10));
            q[i] = 1 + static_cast<std::int64_t>(rng.uniform_below(9));
            s[i] = static_cast<int>(rng.uniform_below(3));
        }
        if (std::all_of(p.begin(), p.end(), [](std::int64_t v) { return v == 0; })) {
            p[0] = 1;
        }
        std::int64_t lcm = 1;
        for (std::size_t i = 0; i < dims; ++i) {
            lcm = std::lcm(lcm, q[i]);
            const auto id = "x" + std::to_string(i);
            scores[id] = s[i];
            weights[id] = Rational(p[i], q[i]);
        }
        std::int64_t num = 0;
        std::int64_t den = 0;
        for (std::size_t i = 0; i < dims; ++i) {
            num += p[i] * (lcm / q[i]) * s[i];
            den += p[i] * (lcm / q[i]);
        }
        const std::int64_t g = std::gcd(num, den);
        const auto expected = std::to_string(num / g) + (den / g == 1 ? "" : "/" + std::to_string(den / g));
        const auto got = aggregate(scores, weights);
        o.expect(to_string(got) == expected, "case " + std::to_string(t) + ": " + to_string(got) + " != " + expected);
        o.expect(got >= 0 && got <= 2, "case " + std::to_string(t) + " out of [0, 2]");
        scores["zero"] = static_cast<int>(rng.uniform_below(3));
        weights["zero"] = Rational(0);
        o.expect(aggregate(scores, weights) == got, "zero-weight dimension changed case " + std::to_string(t));
    }
    if (o.pass) {
        o.detail = "1000 cases exact, within [0, 2], zero weight inert";
    }
    return o;
}

// 6. Sequential schedulers that complete experts in ten different orders.
Outcome scheduling() {
    Outcome o;
    const auto reg = fixture_registry();
    PipelineOptions options;
    options.clock = [] { return fixed_time(); };
    const auto& essay = model_fixture().corpus.essays.at(11);
    const auto reference = canonical_dump(json(run_pipeline(essay, reg.registry, reg.preprocess, options)));
    for (std::uint64_t order = 0; order < 10; ++order) {
        options.scheduler = [order](std::span<const std::function<void()>> tasks) {
            std::vector<std::size_t> idx(tasks.size());
            std::iota(idx.begin(), idx.end(), 0);
            if (order == 1) {
                std::reverse(idx.begin(), idx.end());
            } else if (order > 1) {
                Xoshiro256 rng(order);
                shuffle(idx, rng);
            }
            for (auto i : idx) {
                tasks[i]();
            }
        };
        o.expect(canonical_dump(json(run_pipeline(essay, reg.registry, reg.preprocess, options))) == reference,
                 "order " + std::to_string(order) + " changed the serialization");
    }
    if (o.pass) {
        o.detail = "10 completion orders, byte-identical MasterObject";
    }
    return o;
}

std::vector<FeatureVector> fuzz_vectors(const Vocabulary& vocab, std::uint64_t seed, std::size_t count) {
    Xoshiro256 rng(seed);
    std::vector<FeatureVector> out;
    for (std::size_t k = 0; k < count; ++k) {
        std::map<std::uint32_t, double> entries;
        const std::size_t nnz = rng.uniform_below(25);
        for (std::size_t j = 0; j < nnz; ++j) {
            entries[static_cast<std::uint32_t>(rng.uniform_below(vocab.size()))] += 1 + static_cast<double>(rng.uniform_below(4));
        }
        FeatureVector v = sparse(vocab.size(), {entries.begin(), entries.end()}, vocab.fingerprint());
        if (vocab.config().weighting == Weighting::TfIdf && !v.entries.empty()) {
            double norm = 0.0;
            for (const auto& [i, w] : v.entries) {
                norm += w * w;
            }
            for (auto& [i, w] : v.entries) {
                w /= std::sqrt(norm);
            }
        }
        out.push_back(std::move(v));
    }
    return out;
}

// 7. Every artifact of the fixture models plus one artifact per SVM setup.
Outcome round_trip() {
    Outcome o;
    TempDir dir;
    std::vector<ModelBundle> bundles;
    for (const auto& t : model_fixture().trained) {
        bundles.push_back(t.bundle);
    }
    GeneratorSpec gen;
    gen.seed = 77;
    gen.essay_count = 150;
    const auto corpus = generate(gen);
    const auto docs = app::normalize_corpus(corpus.essays, PreprocessConfig{});
    const auto labels = labels_for(corpus.essays, corpus.labels, "d08");
    for (auto weighting : {Weighting::Counts, Weighting::TfIdf}) {
        const GridCell cell{FeatureConfig{2, 1, 1.0, weighting}, SvmParams{1e-3, 10}};
        auto trained = train_cell(docs, labels, cell, 3);
        ModelBundle b{"d08", "", fixed_time(), trained.vocabulary, trained.model, trained.training_report};
        b.model_version = store::derive_model_version(b);
        bundles.push_back(std::move(b));
    }
    std::size_t corrupted = 0;
    Xoshiro256 rng(8);
    for (std::size_t k = 0; k < bundles.size() && o.pass; ++k) {
        const auto& original = bundles[k];
        const auto path = dir / ("m" + std::to_string(k) + ".rbrk");
        store::save_model(original, path);
        const auto loaded = store::load_model(path);
        for (const auto& v : fuzz_vectors(original.vocabulary, 100 + k, 100)) {
            o.expect(same_prediction_bits(predict(original.model, v), predict(loaded.model, v)),
                     "prediction changed after reload of " + original.model_version);
        }
        const auto bytes = store::read_file(path);
        for (int flip = 0; flip < 8; ++flip) {
            auto bad = bytes;
            const std::size_t at = store::kArtifactMagic.size() + 2 + rng.uniform_below(bad.size() - store::kArtifactMagic.size() - 2);
            bad[at] ^= static_cast<std::uint8_t>(1u << rng.uniform_below(8));
            const auto bad_path = dir / ("bad" + std::to_string(k) + "-" + std::to_string(flip) + ".rbrk");
            store::atomic_write(bad_path, bad);
            o.expect(code_of([&] { store::load_model(bad_path); }) == Errc::ChecksumMismatch,
                     "byte " + std::to_string(at) + " of " + original.model_version + " not rejected");
            ++corrupted;
        }
    }
    if (o.pass) {
        o.detail = std::to_string(bundles.size()) + " artifacts x 100 vectors bit-identical, " + std::to_string(corrupted) +
                   " corruptions rejected";
    }
    return o;
}

// 8. Exhaustive state x event over the persistent store.
Outcome state_machine() {
    using store::JobEvent;
    using store::JobState;
    using store::JobTransition;
    Outcome o;
    TempDir dir;
    store::JobStore js(dir / "store");
    // (from, event) -> to; everything else is illegal.
    const std::map<std::pair<JobState, JobEvent>, JobState> legal{
            {{JobState::Received, JobEvent::StartScoring}, JobState::Scoring},
            {{JobState::Scoring, JobEvent::CompleteScoring}, JobState::AwaitingReview},
            {{JobState::AwaitingReview, JobEvent::EditReview}, JobState::AwaitingReview},
            {{JobState::AwaitingReview, JobEvent::Approve}, JobState::Approved},
            {{JobState::Approved, JobEvent::MarkReported}, JobState::Reported},
            {{JobState::Received, JobEvent::Fail}, JobState::Failed},
            {{JobState::Scoring, JobEvent::Fail}, JobState::Failed},
            {{JobState::AwaitingReview, JobEvent::Fail}, JobState::Failed},
            {{JobState::Approved, JobEvent::Fail}, JobState::Failed},
            {{JobState::Reported, JobEvent::Fail}, JobState::Failed},
    };
    int serial = 0;
    auto master_for = [](const std::string& essay_id) {
        MasterObject m;
        m.essay_id = essay_id;
        m.results.emplace("d01", DimensionResult{"d01", 1, 0.5, "ok", "v"});
        m.final_score = Rational(1);
        m.produced_at = fixed_time();
        m.model_manifest = {{"d01", "v"}};
        return m;
    };
    auto make = [&](JobEvent e, const std::string& essay_id) {
        switch (e) {
        case JobEvent::StartScoring: return JobTransition::start_scoring();
        case JobEvent::CompleteScoring: return JobTransition::complete_scoring(master_for(essay_id));
        case JobEvent::EditReview: return JobTransition::edit({{"d01", {2, std::nullopt}}});
        case JobEvent::Approve: return JobTransition::approve(Rational(2));
        case JobEvent::MarkReported: return JobTransition::reported();
        case JobEvent::Fail: return JobTransition::fail("test");
        }
        return JobTransition::fail("unreachable");
    };
    // Shortest event path from RECEIVED to each state.
    const std::map<JobState, std::vector<JobEvent>> path{
            {JobState::Received, {}},
            {JobState::Scoring, {JobEvent::StartScoring}},
            {JobState::AwaitingReview, {JobEvent::StartScoring, JobEvent::CompleteScoring}},
            {JobState::Approved, {JobEvent::StartScoring, JobEvent::CompleteScoring, JobEvent::Approve}},
            {JobState::Reported,
             {JobEvent::StartScoring, JobEvent::CompleteScoring, JobEvent::Approve, JobEvent::MarkReported}},
            {JobState::Failed, {JobEvent::Fail}},
    };
    int legal_ok = 0;
    int illegal_ok = 0;
    for (auto state : store::kAllJobStates) {
        for (auto event : store::kAllJobEvents) {
            const auto essay_id = "essay-" + std::to_string(serial++);
            RawEssay essay{essay_id, "Pat", fixed_time(), "Text of the essay."};
            const auto id = js.create_job(essay).job_id;
            for (auto e : path.at(state)) {
                js.transition(id, make(e, essay_id));
            }
            const auto before = store::read_text_file(js.record_path(id));
            const auto it = legal.find({state, event});
            try {
                const auto after = js.transition(id, make(event, essay_id));
                o.expect(it != legal.end(), std::string(store::to_string(event)) + " accepted in " +
                                                    std::string(store::to_string(state)));
                o.expect(it == legal.end() || (after.state == it->second && js.get_job(id).state == it->second),
                         "wrong target state");
                legal_ok += it != legal.end() ? 1 : 0;
            } catch (const Error& e) {
                o.expect(it == legal.end() && e.code() == Errc::IllegalTransition,
                         std::string(store::to_string(event)) + " in " + std::string(store::to_string(state)) + ": " +
                                 e.message());
                o.expect(store::read_text_file(js.record_path(id)) == before, "rejected transition modified the record");
                illegal_ok += it == legal.end() ? 1 : 0;
            }
        }
    }

    // Writer killed between the temp-file write and the rename.
    const RawEssay essay{"essay-crash", "Pat", fixed_time(), "Text of the essay."};
    const auto id = js.create_job(essay).job_id;
    js.transition(id, make(JobEvent::StartScoring, essay.essay_id));
    js.transition(id, make(JobEvent::CompleteScoring, essay.essay_id));
    const auto before = store::read_text_file(js.record_path(id));
    const pid_t pid = ::fork();
    if (pid == 0) {
        store::JobStore child(dir / "store");
        child.set_fault_hook([](const fs::path&) { ::_exit(0); });
        try {
            child.transition(id, JobTransition::approve(Rational(1)));
        } catch (...) {
        }
        ::_exit(1);
    }
    int status = 0;
    ::waitpid(pid, &status, 0);
    o.expect(WIFEXITED(status) && WEXITSTATUS(status) == 0, "fault hook did not fire in the writer");
    o.expect(store::read_text_file(js.record_path(id)) == before, "record changed by the killed writer");
    o.expect(js.get_job(id).state == JobState::AwaitingReview, "record unreadable after the crash");
    o.expect(js.transition(id, JobTransition::approve(Rational(1))).state == JobState::Approved,
             "store unusable after the crash");
    if (o.pass) {
        o.detail = std::to_string(legal_ok) + " legal pairs (6 transition kinds) succeed, " + std::to_string(illegal_ok) +
                   " illegal pairs rejected, crash leaves prior record";
    }
    return o;
}

// 9. Async contract with scoring held for longer than the 30 s budget.
Outcome service_contract() {
    Outcome o;
    TempDir dir;
    app::ServiceConfig config;
    config.port = 0;
    config.models_dir = model_fixture().models;
    config.registry_path = kRegistryPath;
    config.store_dir = dir / "store";
    config.sync_timeout_budget = 30s;
    app::ServiceHooks hooks;
    hooks.clock = [] { return fixed_time(); };
    hooks.before_scoring = [](const std::string&) { std::this_thread::sleep_for(31s); };
    app::GradingService service(config, hooks);
    httplib::Client client("127.0.0.1", service.start());
    client.set_read_timeout(5, 0);

    const auto& essay = model_fixture().corpus.essays.at(5);
    const auto t0 = Clock::now();
    const auto res = client.Post("/v1/essays", json(essay).dump(), "application/json");
    const double post_ms = seconds_since(t0) * 1000.0;
    o.expect(res && res->status == 202, "POST did not return 202");
    o.expect(post_ms < 100.0, "POST took " + fmt(post_ms, 1) + " ms");
    if (!res || res->status != 202) {
        return o;
    }
    const auto job_id = json::parse(res->body).at("job_id").get<std::string>();

    double slowest_poll_ms = 0.0;
    json job;
    std::string state;
    const auto deadline = Clock::now() + 90s;
    do {
        std::this_thread::sleep_for(250ms);
        const auto p0 = Clock::now();
        const auto r = client.Get(("/v1/jobs/" + job_id).c_str());
        const auto h = client.Get("/healthz");
        slowest_poll_ms = std::max(slowest_poll_ms, seconds_since(p0) * 1000.0);
        o.expect(r && r->status == 200 && h && h->status == 200, "poll failed");
        if (!r || r->status != 200) {
            return o;
        }
        job = json::parse(r->body);
        state = job.at("state").get<std::string>();
    } while ((state == "received" || state == "scoring") && Clock::now() < deadline);
    const double wait_s = seconds_since(t0);
    o.expect(state == "awaiting_review", "job ended in state " + state);
    o.expect(wait_s > 30.0, "scoring delay was not applied");
    o.expect(slowest_poll_ms < 100.0, "a poll took " + fmt(slowest_poll_ms, 1) + " ms");
    service.stop();
    if (state != "awaiting_review") {
        return o;
    }

    write_file(dir / "essay.json", json(essay).dump());
    const auto r = run_cli("grade --essay " + quote(dir / "essay.json") + " --models " + quote(model_fixture().models) +
                           " --registry " + quote(kRegistryPath) + " --produced-at " + fixed_time().to_string() +
                           " --out " + quote(dir / "cli.json"));
    o.expect(r.exit_code == 0, "CLI grade failed: " + r.output);
    if (r.exit_code == 0) {
        const auto cli = store::read_text_file(dir / "cli.json");
        o.expect(cli == canonical_dump(job.at("master")), "CLI and service MasterObjects differ");
        o.expect(json::parse(cli).get<MasterObject>() == job.at("master").get<MasterObject>(),
                 "CLI and service MasterObjects differ after parsing");
    }
    if (o.pass) {
        o.detail = "POST " + fmt(post_ms, 1) + " ms, reached awaiting_review after " + fmt(wait_s, 1) +
                   " s, slowest poll " + fmt(slowest_poll_ms, 1) + " ms, CLI master identical";
    }
    return o;
}

// 10. Non-uniform weights 1..13 and one score override.
Outcome report_integrity() {
    Outcome o;
    TempDir dir;
    auto file = json::parse(store::read_text_file(kRegistryPath));
    for (std::size_t i = 0; i < file.at("dimensions").size(); ++i) {
        auto& d = file.at("dimensions").at(i);
        d["weight"] = std::to_string(i + 1);
        d["templates"] = (kDataDir / d.at("templates").get<std::string>()).string();
    }
    file.at("preprocess")["stopwords_file"] = (kDataDir / "stopwords.txt").string();
    write_file(dir / "registry.json", file.dump(2));
    const auto reg = app::load_registry(dir / "registry.json", model_fixture().models);

    const auto& essay = model_fixture().corpus.essays.at(8);
    std::string job_id;
    std::map<std::string, int> effective;
    {
        store::JobStore js(dir / "store", store::JobStoreOptions{[] { return fixed_time(); }, {}, {}, 30000ms});
        job_id = js.create_job(essay).job_id;
        js.transition(job_id, store::JobTransition::start_scoring());
        PipelineOptions options;
        options.clock = [] { return fixed_time(); };
        const auto master = run_pipeline(essay, reg.registry, reg.preprocess, options);
        js.transition(job_id, store::JobTransition::complete_scoring(master));
        for (const auto& [id, r] : master.results) {
            effective[id] = r.score;
        }
        const int overridden = (effective.at("d09") + 1) % 3;
        js.transition(job_id, store::JobTransition::edit({{"d09", {overridden, std::nullopt}}}));
        effective["d09"] = overridden;
        const auto job = js.get_job(job_id);
        js.transition(job_id, store::JobTransition::approve(aggregate(store::effective_scores(job), reg.registry)));
    }
    // Hand-computed: weight of dNN is NN.
    long num = 0;
    long den = 0;
    for (const auto& [id, s] : effective) {
        const long w = std::stol(id.substr(1));
        num += w * s;
        den += w;
    }
    const long g = std::gcd(num, den);
    const auto expected = std::to_string(num / g) + (den / g == 1 ? "" : "/" + std::to_string(den / g));

    const store::JobStore js(dir / "store");
    const auto text = render_report(assemble_report(js.get_job(job_id), reg.registry), ReportFormat::Structured);
    const auto doc = json::parse(text);
    o.expect(doc.at("final_score_exact") == expected,
             "final score " + doc.at("final_score_exact").get<std::string>() + " != hand " + expected);
    o.expect(doc.at("dimensions").at(8).at("score_overridden") == true, "override not marked in the report");
    const std::string cli_args = "report --store " + quote(dir / "store") + " --job " + job_id + " --registry " +
                                 quote(dir / "registry.json") + " --models " + quote(model_fixture().models);
    const auto first = run_cli(cli_args);
    const auto second = run_cli(cli_args);
    o.expect(first.exit_code == 0 && second.exit_code == 0, "CLI report failed: " + first.output);
    o.expect(first.output == text && second.output == text, "STRUCTURED rendering differs between runs");
    o.expect(render_report(assemble_report(js.get_job(job_id), reg.registry), ReportFormat::Structured) == text,
             "STRUCTURED rendering differs within a run");
    if (o.pass) {
        o.detail = "final score " + expected + " matches hand computation; 3 renderings byte-identical";
    }
    return o;
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
            {"NB oracle equivalence", nb_oracle},
            {"SVM separability", svm_separability},
            {"Synthetic end-to-end at full scale", full_scale},
            {"Grid-search sanity", grid_sanity},
            {"Aggregation exactness", aggregation},
            {"Pipeline scheduling independence", scheduling},
            {"Model round-trip", round_trip},
            {"Job state machine", state_machine},
            {"Service contract", service_contract},
            {"Report integrity", report_integrity},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto& [name, check] = criteria[i];
        const auto t0 = Clock::now();
        Outcome o;
        try {
            o = check();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("exception: ") + e.what();
        }
        failures += o.pass ? 0 : 1;
        std::cout << (o.pass ? "PASS " : "FAIL ") << (i + 1) << " " << name << ": " << o.detail << " ["
                  << fmt(seconds_since(t0), 1) << " s]" << std::endl;
    }
    return failures == 0 ? 0 : 1;
}
