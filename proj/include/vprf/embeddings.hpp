#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "vprf/eval.hpp"

namespace vprf {

enum class CorpusKind { queries, passages };
enum class FileFormat { binary, line_record };

struct EmbeddingRecord {
    std::string id;
    std::vector<float> vector;

    friend bool operator==(const EmbeddingRecord&, const EmbeddingRecord&) = default;
};

// Id-addressed collection of fixed-dimension f32 vectors. Valid corpora are
// non-empty, ids unique, every record matches `dimension`, all components
// finite. Immutable once loaded; safe to share across readers.
struct EmbeddingCorpus {
    std::uint32_t dimension = 0;
    CorpusKind kind = CorpusKind::passages;
    std::vector<EmbeddingRecord> records;

    std::size_t size() const { return records.size(); }
    const EmbeddingRecord* find(std::string_view id) const;
};

// Throws naming the first violated invariant and its record index.
void validate_corpus(const EmbeddingCorpus& corpus);

/* Binary layout (little-endian):
 *   magic "VPRF" | u32 version=1 | u32 dimension | u64 record count
 *   per record:   u16 id byte length | id UTF-8 bytes | dimension x f32
 *
 * Line format: one record per line, `<id>\t<f0> <f1> ...` with the floats
 * space separated; lines starting with '#' are ignored.
 */
EmbeddingCorpus load_embeddings(const std::string& path, FileFormat format,
                                CorpusKind kind = CorpusKind::passages);
void save_embeddings(const EmbeddingCorpus& corpus, const std::string& path,
                     FileFormat format);

FileFormat parse_file_format(std::string_view name);  // "binary" | "line"

struct SynthDataset {
    EmbeddingCorpus passages;
    EmbeddingCorpus queries;
    Qrels qrels;
};

// Clustered Gaussian corpus for desk-scale experiments: one centroid per
// cluster; passages and one query per cluster are centroid + noise_scale *
// N(0, I) with independent draws. Qrels mark exactly the cluster's passages
// relevant (grade 1) for the cluster's query. Pure function of its
// arguments.
SynthDataset synth_corpus(int n_clusters, int docs_per_cluster, int dimension,
                          float noise_scale, std::uint64_t seed);

namespace detail {
// Stream-level corpus block I/O, reused by the index persistence format.
void write_corpus(std::ostream& out, const EmbeddingCorpus& corpus);
EmbeddingCorpus read_corpus(std::istream& in, CorpusKind kind,
                            const std::string& context);
} // namespace detail

} // namespace vprf
