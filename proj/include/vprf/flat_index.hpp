#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "vprf/embeddings.hpp"

namespace vprf {

struct ScoredHit {
    std::string doc_id;
    double score = 0.0;  // cosine similarity
    int rank = 0;        // 1-based

    friend bool operator==(const ScoredHit&, const ScoredHit&) = default;
};

// Exact brute-force cosine index. Vectors are stored raw (f32) with
// Euclidean norms precomputed at build; dot products accumulate in f64.
// Immutable after build and safe for concurrent searches.
class FlatIndex {
public:
    // pre_normalize rescales stored vectors to unit norm (ablation knob;
    // cosine ranking is unaffected, stored vectors change).
    static FlatIndex build(const EmbeddingCorpus& passages,
                           bool pre_normalize = false);

    std::uint32_t dimension() const { return dim_; }
    std::size_t size() const { return ids_.size(); }
    const std::string& id_at(std::size_t row) const { return ids_[row]; }
    std::span<const float> vector_at(std::size_t row) const;
    double norm_at(std::size_t row) const { return norms_[row]; }
    std::optional<std::size_t> row_of(std::string_view doc_id) const;

    // Exact top-k by descending cosine(q, d); ties broken by ascending doc
    // id byte order. Returns min(k, size()) hits. Throws on dimension
    // mismatch or a query with non-positive norm.
    std::vector<ScoredHit> search(std::span<const float> query, int k) const;

    // Per-query results identical to search(); queries may be evaluated in
    // parallel.
    std::map<std::string, std::vector<ScoredHit>> batch_search(
        const EmbeddingCorpus& queries, int k, int threads = 1) const;

    // Corpus block followed by a version-tagged norms block.
    void save(const std::string& path) const;
    static FlatIndex load(const std::string& path);

private:
    FlatIndex() = default;

    std::uint32_t dim_ = 0;
    std::vector<float> vectors_;  // row-major, size() x dim_
    std::vector<double> norms_;
    std::vector<std::string> ids_;
    std::unordered_map<std::string, std::size_t> row_by_id_;
};

// f64-accumulated helpers shared by the index and the feedback operators.
double dot_f64(std::span<const float> a, std::span<const float> b);
double l2_norm(std::span<const float> v);

} // namespace vprf
