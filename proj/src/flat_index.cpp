#include "vprf/flat_index.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <thread>

#include "vprf/detail/io.hpp"

namespace vprf {

double dot_f64(std::span<const float> a, std::span<const float> b) {
    double acc = 0.0;
    const float* x = a.data();
    const float* y = b.data();
    const std::size_t n = a.size();
#pragma omp simd reduction(+ : acc)
    for (std::size_t i = 0; i < n; ++i)
        acc += static_cast<double>(x[i]) * static_cast<double>(y[i]);
    return acc;
}

double l2_norm(std::span<const float> v) {
    double acc = 0.0;
    const float* x = v.data();
    const std::size_t n = v.size();
#pragma omp simd reduction(+ : acc)
    for (std::size_t i = 0; i < n; ++i)
        acc += static_cast<double>(x[i]) * static_cast<double>(x[i]);
    return std::sqrt(acc);
}

FlatIndex FlatIndex::build(const EmbeddingCorpus& passages, bool pre_normalize) {
    validate_corpus(passages);
    if (passages.kind != CorpusKind::passages)
        throw std::invalid_argument("index must be built from a passage corpus");

    FlatIndex index;
    index.dim_ = passages.dimension;
    const std::size_t n = passages.size();
    index.vectors_.resize(n * std::size_t(index.dim_));
    index.norms_.resize(n);
    index.ids_.reserve(n);
    index.row_by_id_.reserve(n);

    for (std::size_t row = 0; row < n; ++row) {
        const auto& rec = passages.records[row];
        float* dst = index.vectors_.data() + row * index.dim_;
        std::copy(rec.vector.begin(), rec.vector.end(), dst);
        double norm = l2_norm(rec.vector);
        if (!(norm > 0.0))
            throw std::runtime_error("zero-norm vector for id '" + rec.id + "'");
        if (pre_normalize) {
            const float inv = static_cast<float>(1.0 / norm);
            for (std::uint32_t d = 0; d < index.dim_; ++d) dst[d] *= inv;
            norm = l2_norm(std::span<const float>(dst, index.dim_));
        }
        index.norms_[row] = norm;
        index.ids_.push_back(rec.id);
        index.row_by_id_.emplace(rec.id, row);
    }
    return index;
}

std::span<const float> FlatIndex::vector_at(std::size_t row) const {
    return {vectors_.data() + row * dim_, dim_};
}

std::optional<std::size_t> FlatIndex::row_of(std::string_view doc_id) const {
    auto it = row_by_id_.find(std::string(doc_id));
    if (it == row_by_id_.end()) return std::nullopt;
    return it->second;
}

std::vector<ScoredHit> FlatIndex::search(std::span<const float> query, int k) const {
    if (query.size() != dim_)
        throw std::invalid_argument("query dimension " + std::to_string(query.size()) +
                                    " does not match index dimension " +
                                    std::to_string(dim_));
    if (k < 1) throw std::invalid_argument("k must be >= 1");
    const double query_norm = l2_norm(query);
    if (!(query_norm > 0.0))
        throw std::invalid_argument("query vector has non-positive norm");

    const std::size_t n = ids_.size();
    std::vector<double> scores(n);
    for (std::size_t row = 0; row < n; ++row)
        scores[row] = dot_f64(vector_at(row), query) / (query_norm * norms_[row]);

    const std::size_t take = std::min<std::size_t>(k, n);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    auto better = [&](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return ids_[a] < ids_[b];
    };
    std::partial_sort(order.begin(), order.begin() + take, order.end(), better);

    std::vector<ScoredHit> hits;
    hits.reserve(take);
    for (std::size_t i = 0; i < take; ++i)
        hits.push_back({ids_[order[i]], scores[order[i]], static_cast<int>(i + 1)});
    return hits;
}

std::map<std::string, std::vector<ScoredHit>> FlatIndex::batch_search(
    const EmbeddingCorpus& queries, int k, int threads) const {
    validate_corpus(queries);
    const std::size_t nq = queries.size();
    std::vector<std::vector<ScoredHit>> per_query(nq);
    std::vector<std::string> errors(nq);

    auto run_range = [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            try {
                per_query[i] = search(queries.records[i].vector, k);
            } catch (const std::exception& e) {
                errors[i] = e.what();
            }
        }
    };

    const std::size_t workers =
        std::min<std::size_t>(std::max(threads, 1), std::max<std::size_t>(nq, 1));
    if (workers <= 1) {
        run_range(0, nq);
    } else {
        std::vector<std::thread> pool;
        const std::size_t chunk = (nq + workers - 1) / workers;
        for (std::size_t w = 0; w < workers; ++w) {
            const std::size_t begin = w * chunk;
            if (begin >= nq) break;
            pool.emplace_back(run_range, begin, std::min(begin + chunk, nq));
        }
        for (auto& t : pool) t.join();
    }

    for (std::size_t i = 0; i < nq; ++i)
        if (!errors[i].empty())
            throw std::runtime_error("query '" + queries.records[i].id +
                                     "': " + errors[i]);

    std::map<std::string, std::vector<ScoredHit>> out;
    for (std::size_t i = 0; i < nq; ++i)
        out.emplace(queries.records[i].id, std::move(per_query[i]));
    return out;
}

namespace {

constexpr char kNormsMagic[4] = {'V', 'N', 'R', 'M'};
constexpr std::uint32_t kNormsVersion = 1;

} // namespace

void FlatIndex::save(const std::string& path) const {
    EmbeddingCorpus corpus;
    corpus.dimension = dim_;
    corpus.kind = CorpusKind::passages;
    corpus.records.reserve(ids_.size());
    for (std::size_t row = 0; row < ids_.size(); ++row) {
        auto view = vector_at(row);
        corpus.records.push_back(
            {ids_[row], std::vector<float>(view.begin(), view.end())});
    }
    detail::atomic_write(
        path,
        [&](std::ostream& out) {
            detail::write_corpus(out, corpus);
            out.write(kNormsMagic, sizeof(kNormsMagic));
            out.write(reinterpret_cast<const char*>(&kNormsVersion),
                      sizeof(kNormsVersion));
            const std::uint64_t count = norms_.size();
            out.write(reinterpret_cast<const char*>(&count), sizeof(count));
            out.write(reinterpret_cast<const char*>(norms_.data()),
                      static_cast<std::streamsize>(norms_.size() * sizeof(double)));
        },
        /*binary=*/true);
}

FlatIndex FlatIndex::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    EmbeddingCorpus corpus = detail::read_corpus(in, CorpusKind::passages, path);

    char magic[4];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kNormsMagic, sizeof(magic)) != 0)
        throw std::runtime_error(path + ": missing norms block");
    std::uint32_t version = 0;
    in.read(reinterpret_cast<char*>(&version), sizeof(version));
    if (!in || version != kNormsVersion)
        throw std::runtime_error(path + ": unsupported norms block version");
    std::uint64_t count = 0;
    in.read(reinterpret_cast<char*>(&count), sizeof(count));
    if (!in || count != corpus.records.size())
        throw std::runtime_error(path + ": norms block count mismatch");
    std::vector<double> norms(count);
    in.read(reinterpret_cast<char*>(norms.data()),
            static_cast<std::streamsize>(count * sizeof(double)));
    if (!in) throw std::runtime_error(path + ": truncated norms block");

    FlatIndex index = build(corpus);
    for (std::size_t i = 0; i < count; ++i) {
        if (!std::isfinite(norms[i]) || !(norms[i] > 0.0))
            throw std::runtime_error(path + ": invalid stored norm at row " +
                                     std::to_string(i));
        index.norms_[i] = norms[i];
    }
    return index;
}

} // namespace vprf
