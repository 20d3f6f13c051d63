#pragma once

// .rbrk model artifact codec. Layout (all integers little-endian, strings are
// a u32 byte length followed by UTF-8 bytes; see docs/ARTIFACT_FORMAT.md):
//
//   magic "RBRK1" (5 bytes) | u16 format_version | u8 kind (0 NB, 1 SVM)
//   str dimension_id | str model_version | str created_at
//   u64 payload_length | payload | u64 CRC-64/XZ of every preceding byte

#include "rubric/classifiers/model.hpp"
#include "rubric/hashing.hpp"
#include "rubric/store/binary_io.hpp"
#include "rubric/store/files.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace rubric::store {

inline constexpr std::string_view kArtifactMagic = "RBRK1";
inline constexpr std::uint16_t kArtifactFormatVersion = 1;
inline constexpr std::string_view kArtifactExtension = ".rbrk";

struct ArtifactHeader {
    std::uint16_t format_version = kArtifactFormatVersion;
    ClassifierKind kind = ClassifierKind::NaiveBayes;
    std::string dimension_id;
    std::string model_version;
    Timestamp created_at;
};

namespace detail {

inline void write_payload(ByteWriter& w, const ModelBundle& b) {
    const auto& vocab = b.vocabulary;
    const auto& cfg = vocab.config();
    w.u8(static_cast<std::uint8_t>(cfg.ngram_max));
    w.u32(cfg.min_df);
    w.f64(cfg.max_df_ratio);
    w.u8(static_cast<std::uint8_t>(cfg.weighting));
    w.u64(vocab.total_docs());
    w.u32(static_cast<std::uint32_t>(vocab.size()));
    for (std::size_t i = 0; i < vocab.size(); ++i) {
        w.str(vocab.term(i));
        w.u32(vocab.doc_freq()[i]);
    }
    w.u64(vocab.fingerprint());

    if (const auto* nb = std::get_if<NaiveBayesModel>(&b.model)) {
        w.f64(nb->alpha);
        for (double p : nb->class_log_prior) {
            w.f64(p);
        }
        for (const auto& row : nb->term_log_likelihood) {
            for (double v : row) {
                w.f64(v);
            }
        }
    } else {
        const auto& svm = std::get<LinearSvmModel>(b.model);
        w.f64(svm.lambda);
        w.u32(static_cast<std::uint32_t>(svm.epochs));
        w.u64(svm.seed);
        for (std::size_t c = 0; c < kNumClasses; ++c) {
            for (double v : svm.weights[c]) {
                w.f64(v);
            }
            w.f64(svm.bias[c]);
        }
    }

    const auto& r = b.training_report;
    w.f64(r.accuracy);
    for (const auto* arr : {&r.precision, &r.recall, &r.f1}) {
        for (double v : *arr) {
            w.f64(v);
        }
    }
    w.f64(r.macro_precision);
    w.f64(r.macro_f1);
    for (const auto& row : r.confusion) {
        for (auto v : row) {
            w.u64(v);
        }
    }
}

inline void read_payload(ByteReader& r, ModelBundle& b, ClassifierKind kind) {
    FeatureConfig cfg;
    cfg.ngram_max = r.u8();
    cfg.min_df = r.u32();
    cfg.max_df_ratio = r.f64();
    const auto weighting = r.u8();
    if (weighting > 1) {
        throw Error(Errc::ParseError, "unknown weighting code");
    }
    cfg.weighting = static_cast<Weighting>(weighting);
    const auto total_docs = r.u64();
    const auto vocab_size = r.u32();
    std::vector<std::string> terms;
    std::vector<std::uint32_t> df;
    terms.reserve(vocab_size);
    df.reserve(vocab_size);
    for (std::uint32_t i = 0; i < vocab_size; ++i) {
        terms.push_back(r.str());
        df.push_back(r.u32());
    }
    b.vocabulary = Vocabulary(cfg, total_docs, std::move(terms), std::move(df));
    const auto fingerprint = r.u64();
    if (fingerprint != b.vocabulary.fingerprint()) {
        throw Error(Errc::VocabMismatch, "stored vocabulary fingerprint does not match the embedded vocabulary");
    }

    if (kind == ClassifierKind::NaiveBayes) {
        NaiveBayesModel nb;
        nb.alpha = r.f64();
        for (double& p : nb.class_log_prior) {
            p = r.f64();
        }
        for (auto& row : nb.term_log_likelihood) {
            row.resize(vocab_size);
            for (double& v : row) {
                v = r.f64();
            }
        }
        nb.vocab_fingerprint = fingerprint;
        b.model = std::move(nb);
    } else {
        LinearSvmModel svm;
        svm.lambda = r.f64();
        svm.epochs = static_cast<int>(r.u32());
        svm.seed = r.u64();
        for (std::size_t c = 0; c < kNumClasses; ++c) {
            svm.weights[c].resize(vocab_size);
            for (double& v : svm.weights[c]) {
                v = r.f64();
            }
            svm.bias[c] = r.f64();
        }
        svm.vocab_fingerprint = fingerprint;
        b.model = std::move(svm);
    }

    auto& rep = b.training_report;
    rep.accuracy = r.f64();
    for (auto* arr : {&rep.precision, &rep.recall, &rep.f1}) {
        for (double& v : *arr) {
            v = r.f64();
        }
    }
    rep.macro_precision = r.f64();
    rep.macro_f1 = r.f64();
    for (auto& row : rep.confusion) {
        for (auto& v : row) {
            v = r.u64();
        }
    }
}

inline std::string hex16(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

// Reads magic, version and header fields; leaves the reader at payload_length.
inline ArtifactHeader read_header(ByteReader& r) {
    const auto magic = r.raw(kArtifactMagic.size());
    if (!std::equal(magic.begin(), magic.end(), kArtifactMagic.begin())) {
        throw Error(Errc::ParseError, "not a model artifact (bad magic)");
    }
    ArtifactHeader h;
    h.format_version = r.u16();
    if (h.format_version != kArtifactFormatVersion) {
        throw Error(Errc::UnsupportedFormatVersion,
                    "artifact format version " + std::to_string(h.format_version) + " is not supported (expected " +
                            std::to_string(kArtifactFormatVersion) + ")");
    }
    const auto kind = r.u8();
    if (kind > 1) {
        throw Error(Errc::ParseError, "unknown classifier kind " + std::to_string(kind));
    }
    h.kind = static_cast<ClassifierKind>(kind);
    h.dimension_id = r.str();
    h.model_version = r.str();
    h.created_at = Timestamp::parse(r.str());
    return h;
}

}  // namespace detail

inline std::vector<std::uint8_t> encode_payload(const ModelBundle& bundle) {
    ByteWriter w;
    detail::write_payload(w, bundle);
    return w.take();
}

// Content-derived version: "<dimension>-<hex CRC-64 of the payload>". The same
// trained parameters always get the same version; any change gets a new one.
inline std::string derive_model_version(const ModelBundle& bundle) {
    return bundle.dimension_id + "-" + detail::hex16(crc64(encode_payload(bundle)));
}

// Serializes with the given format_version (tests write unsupported versions).
inline std::vector<std::uint8_t> encode_artifact(const ModelBundle& bundle,
                                                 std::uint16_t format_version = kArtifactFormatVersion) {
    if (bundle.model_version.empty()) {
        throw Error(Errc::InvalidInput, "model_version is empty");
    }
    if (vocab_fingerprint(bundle.model) != bundle.vocabulary.fingerprint()) {
        throw Error(Errc::VocabMismatch, "model was not trained on the bundled vocabulary");
    }
    const auto payload = encode_payload(bundle);
    ByteWriter w;
    w.raw(kArtifactMagic);
    w.u16(format_version);
    w.u8(static_cast<std::uint8_t>(bundle.kind()));
    w.str(bundle.dimension_id);
    w.str(bundle.model_version);
    w.str(bundle.created_at.to_string());
    w.u64(payload.size());
    w.raw(payload);
    w.u64(crc64(w.bytes()));
    return w.take();
}

// Checks magic and format version first, then the trailing checksum over
// everything before it, and only then parses header and payload.
inline ModelBundle decode_artifact(std::span<const std::uint8_t> bytes) {
    {
        ByteReader probe(bytes);
        const auto magic = probe.raw(kArtifactMagic.size());
        if (!std::equal(magic.begin(), magic.end(), kArtifactMagic.begin())) {
            throw Error(Errc::ParseError, "not a model artifact (bad magic)");
        }
        const auto version = probe.u16();
        if (version != kArtifactFormatVersion) {
            throw Error(Errc::UnsupportedFormatVersion,
                        "artifact format version " + std::to_string(version) + " is not supported (expected " +
                                std::to_string(kArtifactFormatVersion) + ")");
        }
    }
    if (bytes.size() < kArtifactMagic.size() + 2 + 8) {
        throw Error(Errc::ChecksumMismatch, "artifact is truncated");
    }
    const auto body = bytes.first(bytes.size() - 8);
    ByteReader trailer(bytes.last(8));
    if (trailer.u64() != crc64(body)) {
        throw Error(Errc::ChecksumMismatch, "artifact checksum does not verify");
    }

    ByteReader r(body);
    const auto header = detail::read_header(r);
    const auto payload_length = r.u64();
    if (payload_length != r.remaining()) {
        throw Error(Errc::ParseError, "artifact payload length does not match its header");
    }
    ModelBundle bundle;
    bundle.dimension_id = header.dimension_id;
    bundle.model_version = header.model_version;
    bundle.created_at = header.created_at;
    ByteReader payload(r.raw(payload_length));
    detail::read_payload(payload, bundle, header.kind);
    if (payload.remaining() != 0) {
        throw Error(Errc::ParseError, "trailing bytes in artifact payload");
    }
    return bundle;
}

inline ArtifactHeader read_artifact_header(const fs::path& path) {
    const auto bytes = read_file(path);
    ByteReader r(bytes);
    return detail::read_header(r);
}

// Writes the bundle atomically and returns its model version (derived from
// the payload when the bundle has none). An existing artifact is never
// overwritten with different bytes.
inline std::string save_model(ModelBundle bundle, const fs::path& path, const FaultHook& hook = {}) {
    if (bundle.model_version.empty()) {
        bundle.model_version = derive_model_version(bundle);
    }
    const auto bytes = encode_artifact(bundle);
    if (fs::exists(path)) {
        if (read_file(path) == bytes) {
            return bundle.model_version;
        }
        throw Error(Errc::IoFailure, "refusing to overwrite existing artifact " + path.string());
    }
    atomic_write(path, bytes, hook);
    return bundle.model_version;
}

inline ModelBundle load_model(const fs::path& path) { return decode_artifact(read_file(path)); }

// Stores under <models_dir>/<dimension_id>/<model_version>.rbrk. Publishing
// identical parameters again reuses the existing artifact.
inline fs::path publish_model(ModelBundle bundle, const fs::path& models_dir) {
    if (bundle.model_version.empty()) {
        bundle.model_version = derive_model_version(bundle);
    }
    const fs::path path = models_dir / bundle.dimension_id / (bundle.model_version + std::string(kArtifactExtension));
    if (fs::exists(path)) {
        return path;
    }
    save_model(std::move(bundle), path);
    return path;
}

// A model reference is a path relative to models_dir (or absolute). A file
// is used as-is; a directory resolves to its newest artifact by created_at,
// ties broken by file name.
inline fs::path resolve_model_path(const fs::path& models_dir, const std::string& ref) {
    const fs::path p = fs::path(ref).is_absolute() ? fs::path(ref) : models_dir / ref;
    if (fs::is_regular_file(p)) {
        return p;
    }
    if (!fs::is_directory(p)) {
        throw Error(Errc::UnresolvableModel, "no model at " + p.string());
    }
    std::optional<std::pair<Timestamp, fs::path>> best;
    for (const auto& entry : fs::directory_iterator(p)) {
        if (!entry.is_regular_file() || entry.path().extension() != kArtifactExtension) {
            continue;
        }
        const auto header = read_artifact_header(entry.path());
        std::pair<Timestamp, fs::path> key{header.created_at, entry.path()};
        if (!best || key > *best) {
            best = std::move(key);
        }
    }
    if (!best) {
        throw Error(Errc::UnresolvableModel, "no .rbrk artifacts in " + p.string());
    }
    return best->second;
}

}  // namespace rubric::store
