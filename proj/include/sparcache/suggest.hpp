#pragma once

// KNN suggestion model over historical query feature vectors. A trained
// model is immutable; readers may share it freely across threads.

#include <bit>
#include <cstring>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "sparcache/features.hpp"
#include "sparcache/kdtree.hpp"

namespace sparcache {

struct EmptyTrainingSet : std::runtime_error {
    EmptyTrainingSet() : std::runtime_error("no training query survived parsing") {}
};
struct DimensionMismatch : std::runtime_error {
    DimensionMismatch(size_t got, size_t want)
        : std::runtime_error("feature vector has dimension " + std::to_string(got) + ", model expects " +
                             std::to_string(want)) {}
};
struct VersionMismatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct CorruptModel : std::runtime_error {
    using std::runtime_error::runtime_error;
};

class SuggestionModel {
public:
    /// Builds a model from prepared (vector, canonical text) points.
    /// Duplicate texts keep their first occurrence.
    static SuggestionModel fromPoints(std::vector<FeatureVector> vectors,
                                      std::vector<std::string> texts, size_t dimension,
                                      std::string templateSetVersion) {
        SuggestionModel m;
        m.dimension_ = dimension;
        m.templateSetVersion_ = std::move(templateSetVersion);
        std::unordered_set<std::string_view> seen;
        for (size_t i = 0; i < vectors.size(); ++i) {
            if (vectors[i].size() != dimension) throw DimensionMismatch(vectors[i].size(), dimension);
            if (seen.count(texts[i])) continue;
            m.vectors_.push_back(std::move(vectors[i]));
            m.texts_.push_back(std::move(texts[i]));
            seen.insert(m.texts_.back());
        }
        if (m.texts_.empty()) throw EmptyTrainingSet();
        m.buildIndex();
        return m;
    }

    size_t dimension() const { return dimension_; }
    size_t pointCount() const { return texts_.size(); }
    const std::string& templateSetVersion() const { return templateSetVersion_; }
    const std::vector<FeatureVector>& vectors() const { return vectors_; }
    const std::vector<std::string>& texts() const { return texts_; }

    /// The min(k, points) historical queries nearest to `v` in Euclidean
    /// distance, ascending; equal distances break ties by canonical text.
    std::vector<std::string> suggest(const FeatureVector& v, size_t k) const {
        if (v.size() != dimension_) throw DimensionMismatch(v.size(), dimension_);
        if (k == 0) return {};
        std::vector<int> idx = tree_->nearest(v, k);
        std::vector<std::string> out;
        out.reserve(idx.size());
        for (int i : idx) out.push_back(texts_[static_cast<size_t>(i)]);
        return out;
    }

private:
    size_t dimension_ = 0;
    std::string templateSetVersion_;
    std::vector<FeatureVector> vectors_;
    std::vector<std::string> texts_;
    std::shared_ptr<const KdTree> tree_;

    void buildIndex() {
        // tie rank = position in the text-sorted order
        std::vector<int> order(texts_.size());
        for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
        std::sort(order.begin(), order.end(),
                  [&](int a, int b) { return texts_[static_cast<size_t>(a)] < texts_[static_cast<size_t>(b)]; });
        std::vector<int> rank(texts_.size());
        for (size_t pos = 0; pos < order.size(); ++pos) rank[static_cast<size_t>(order[pos])] = static_cast<int>(pos);
        tree_ = std::make_shared<KdTree>(&vectors_, std::move(rank), dimension_);
    }
};

struct TrainStats {
    size_t total = 0;
    size_t skippedUnparseable = 0;
    size_t deduplicated = 0;
};

/// Parses, graph-maps and featurizes each historical query against the
/// template set. Unparseable entries are skipped (counted in stats).
inline SuggestionModel trainModel(const std::vector<std::string>& history, const TemplateSet& t,
                                  TrainStats* stats = nullptr) {
    std::vector<FeatureVector> vectors;
    std::vector<std::string> texts;
    TrainStats local;
    local.total = history.size();
    std::unordered_set<std::string> seen;
    for (const auto& raw : history) {
        ParsedQuery q;
        try {
            q = parse(raw);
        } catch (const ParseError&) {
            local.skippedUnparseable++;
            continue;
        }
        std::string canon = serializeCanonical(q);
        if (!seen.insert(canon).second) {
            local.deduplicated++;
            continue;
        }
        vectors.push_back(featurize(buildGraph(q), t));
        texts.push_back(std::move(canon));
    }
    if (stats) *stats = local;
    if (texts.empty()) throw EmptyTrainingSet();
    return SuggestionModel::fromPoints(std::move(vectors), std::move(texts), t.size(), t.version);
}

// ---------------------------------------------------------------------------
// Model file format v1 (little-endian):
//   magic "SQCM" | u32 formatVersion | u32 dimension |
//   u32 versionLen | version bytes | u64 pointCount |
//   per point: dimension f64 values | u32 textLen | text bytes

namespace modelio {

inline void putU32(std::string& out, uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}
inline void putU64(std::string& out, uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}
inline void putF64(std::string& out, double d) { putU64(out, std::bit_cast<uint64_t>(d)); }

struct Reader {
    std::string_view data;
    size_t pos = 0;
    void need(size_t n) const {
        if (pos + n > data.size()) throw CorruptModel("model file truncated");
    }
    uint32_t u32() {
        need(4);
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(static_cast<unsigned char>(data[pos + static_cast<size_t>(i)])) << (8 * i);
        pos += 4;
        return v;
    }
    uint64_t u64() {
        need(8);
        uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(static_cast<unsigned char>(data[pos + static_cast<size_t>(i)])) << (8 * i);
        pos += 8;
        return v;
    }
    double f64() { return std::bit_cast<double>(u64()); }
    std::string bytes(size_t n) {
        need(n);
        std::string s(data.substr(pos, n));
        pos += n;
        return s;
    }
};

}  // namespace modelio

inline constexpr uint32_t kModelFormatVersion = 1;

/// Deterministic byte serialization: identical models produce identical bytes.
inline std::string saveModel(const SuggestionModel& m) {
    std::string out = "SQCM";
    modelio::putU32(out, kModelFormatVersion);
    modelio::putU32(out, static_cast<uint32_t>(m.dimension()));
    modelio::putU32(out, static_cast<uint32_t>(m.templateSetVersion().size()));
    out += m.templateSetVersion();
    modelio::putU64(out, m.pointCount());
    for (size_t i = 0; i < m.pointCount(); ++i) {
        for (double v : m.vectors()[i]) modelio::putF64(out, v);
        modelio::putU32(out, static_cast<uint32_t>(m.texts()[i].size()));
        out += m.texts()[i];
    }
    return out;
}

/// Rebuilds a model from bytes. When `expectTemplateVersion` is given, a
/// stored version that differs raises VersionMismatch (a stale model must not
/// be used against a different template set).
inline SuggestionModel loadModel(std::string_view bytes,
                                 const std::optional<std::string>& expectTemplateVersion = {}) {
    modelio::Reader r{bytes};
    if (r.bytes(4) != "SQCM") throw CorruptModel("bad model magic");
    uint32_t format = r.u32();
    if (format != kModelFormatVersion)
        throw VersionMismatch("unsupported model format version " + std::to_string(format));
    uint32_t dim = r.u32();
    std::string version = r.bytes(r.u32());
    if (expectTemplateVersion && version != *expectTemplateVersion)
        throw VersionMismatch("model was trained against template set '" + version +
                              "', expected '" + *expectTemplateVersion + "'");
    uint64_t count = r.u64();
    std::vector<FeatureVector> vectors;
    std::vector<std::string> texts;
    vectors.reserve(count);
    texts.reserve(count);
    for (uint64_t i = 0; i < count; ++i) {
        FeatureVector v(dim);
        for (uint32_t d = 0; d < dim; ++d) v[d] = r.f64();
        uint32_t len = r.u32();
        texts.push_back(r.bytes(len));
        vectors.push_back(std::move(v));
    }
    if (r.pos != bytes.size()) throw CorruptModel("trailing bytes after model payload");
    if (count == 0) throw CorruptModel("model contains no points");
    return SuggestionModel::fromPoints(std::move(vectors), std::move(texts), dim, version);
}

}  // namespace sparcache
