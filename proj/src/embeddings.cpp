#include "vprf/embeddings.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <unordered_set>

#include "vprf/detail/io.hpp"
#include "vprf/detail/text.hpp"

namespace vprf {

namespace {

constexpr char kMagic[4] = {'V', 'P', 'R', 'F'};
constexpr std::uint32_t kFormatVersion = 1;

template <typename T>
void write_pod(std::ostream& out, T value) {
    out.write(reinterpret_cast<const char*>(&value), sizeof(value));
}

template <typename T>
bool read_pod(std::istream& in, T& value) {
    in.read(reinterpret_cast<char*>(&value), sizeof(value));
    return static_cast<bool>(in);
}

[[noreturn]] void fail(const std::string& context, const std::string& message) {
    throw std::runtime_error(context + ": " + message);
}

std::string at_record(std::size_t index) {
    return "at record " + std::to_string(index);
}

} // namespace

const EmbeddingRecord* EmbeddingCorpus::find(std::string_view id) const {
    for (const auto& r : records)
        if (r.id == id) return &r;
    return nullptr;
}

void validate_corpus(const EmbeddingCorpus& corpus) {
    if (corpus.records.empty()) throw std::runtime_error("corpus is empty");
    if (corpus.dimension == 0) throw std::runtime_error("corpus dimension is zero");
    std::unordered_set<std::string_view> seen;
    seen.reserve(corpus.records.size());
    for (std::size_t i = 0; i < corpus.records.size(); ++i) {
        const auto& rec = corpus.records[i];
        if (rec.id.empty())
            throw std::runtime_error("empty id " + at_record(i));
        if (rec.vector.size() != corpus.dimension)
            throw std::runtime_error("dimension mismatch " + at_record(i) + ": got " +
                                     std::to_string(rec.vector.size()) + ", expected " +
                                     std::to_string(corpus.dimension));
        for (float v : rec.vector)
            if (!std::isfinite(v))
                throw std::runtime_error("non-finite component " + at_record(i) +
                                         " (id '" + rec.id + "')");
        if (!seen.insert(rec.id).second)
            throw std::runtime_error("duplicate id '" + rec.id + "' " + at_record(i));
    }
}

namespace detail {

void write_corpus(std::ostream& out, const EmbeddingCorpus& corpus) {
    out.write(kMagic, sizeof(kMagic));
    write_pod(out, kFormatVersion);
    write_pod(out, corpus.dimension);
    write_pod(out, static_cast<std::uint64_t>(corpus.records.size()));
    for (const auto& rec : corpus.records) {
        if (rec.id.size() > 0xffff)
            throw std::runtime_error("id '" + rec.id.substr(0, 32) +
                                     "...' exceeds the 65535-byte limit");
        write_pod(out, static_cast<std::uint16_t>(rec.id.size()));
        out.write(rec.id.data(), static_cast<std::streamsize>(rec.id.size()));
        out.write(reinterpret_cast<const char*>(rec.vector.data()),
                  static_cast<std::streamsize>(rec.vector.size() * sizeof(float)));
    }
}

EmbeddingCorpus read_corpus(std::istream& in, CorpusKind kind,
                            const std::string& context) {
    char magic[4];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(magic)) != 0)
        fail(context, "bad magic bytes");
    std::uint32_t version = 0;
    if (!read_pod(in, version)) fail(context, "truncated header");
    if (version != kFormatVersion)
        fail(context, "unsupported format version " + std::to_string(version));
    std::uint32_t dim = 0;
    std::uint64_t count = 0;
    if (!read_pod(in, dim) || !read_pod(in, count)) fail(context, "truncated header");

    EmbeddingCorpus corpus;
    corpus.dimension = dim;
    corpus.kind = kind;
    // do not trust a corrupt header with the whole allocation up front
    corpus.records.reserve(std::min<std::uint64_t>(count, 1u << 20));
    for (std::uint64_t i = 0; i < count; ++i) {
        std::uint16_t id_len = 0;
        if (!read_pod(in, id_len))
            fail(context, "truncated file " + at_record(i));
        EmbeddingRecord rec;
        rec.id.resize(id_len);
        in.read(rec.id.data(), id_len);
        rec.vector.resize(dim);
        in.read(reinterpret_cast<char*>(rec.vector.data()),
                static_cast<std::streamsize>(std::size_t(dim) * sizeof(float)));
        if (!in) fail(context, "truncated file " + at_record(i));
        corpus.records.push_back(std::move(rec));
    }
    return corpus;
}

} // namespace detail

namespace {

EmbeddingCorpus load_line_records(std::istream& in, CorpusKind kind,
                                  const std::string& context) {
    EmbeddingCorpus corpus;
    corpus.kind = kind;
    std::string line;
    std::size_t record_index = 0;
    while (std::getline(in, line)) {
        std::string_view view = detail::strip_cr(line);
        if (view.empty() || view.front() == '#' || detail::blank(view)) continue;
        std::size_t tab = view.find('\t');
        if (tab == std::string_view::npos)
            fail(context, "missing tab separator " + at_record(record_index));
        std::string_view id = view.substr(0, tab);
        if (id.empty()) fail(context, "empty id " + at_record(record_index));
        EmbeddingRecord rec;
        rec.id.assign(id);
        for (std::string_view tok : detail::tokens(view.substr(tab + 1)))
            rec.vector.push_back(
                detail::parse_float(tok, context + " " + at_record(record_index)));
        if (rec.vector.empty())
            fail(context, "no vector components " + at_record(record_index));
        if (corpus.records.empty()) {
            corpus.dimension = static_cast<std::uint32_t>(rec.vector.size());
        } else if (rec.vector.size() != corpus.dimension) {
            fail(context, "dimension mismatch " + at_record(record_index) + ": got " +
                              std::to_string(rec.vector.size()) + ", expected " +
                              std::to_string(corpus.dimension));
        }
        corpus.records.push_back(std::move(rec));
        ++record_index;
    }
    return corpus;
}

void save_line_records(std::ostream& out, const EmbeddingCorpus& corpus) {
    for (const auto& rec : corpus.records) {
        out << rec.id << '\t';
        for (std::size_t i = 0; i < rec.vector.size(); ++i) {
            if (i) out << ' ';
            out << detail::repr(rec.vector[i]);
        }
        out << '\n';
    }
}

} // namespace

EmbeddingCorpus load_embeddings(const std::string& path, FileFormat format,
                                CorpusKind kind) {
    std::ifstream in(path, format == FileFormat::binary ? std::ios::binary
                                                        : std::ios::in);
    if (!in) throw std::runtime_error("cannot open " + path);
    EmbeddingCorpus corpus;
    if (format == FileFormat::binary) {
        corpus = detail::read_corpus(in, kind, path);
        in.peek();
        if (!in.eof()) fail(path, "trailing bytes after last record");
    } else {
        corpus = load_line_records(in, kind, path);
    }
    try {
        validate_corpus(corpus);
    } catch (const std::exception& e) {
        fail(path, e.what());
    }
    return corpus;
}

void save_embeddings(const EmbeddingCorpus& corpus, const std::string& path,
                     FileFormat format) {
    validate_corpus(corpus);
    detail::atomic_write(
        path,
        [&](std::ostream& out) {
            if (format == FileFormat::binary)
                detail::write_corpus(out, corpus);
            else
                save_line_records(out, corpus);
        },
        format == FileFormat::binary);
}

FileFormat parse_file_format(std::string_view name) {
    if (name == "binary") return FileFormat::binary;
    if (name == "line" || name == "line_record") return FileFormat::line_record;
    throw std::invalid_argument("unknown embedding format '" + std::string(name) +
                                "' (expected binary|line)");
}

namespace {

// Deterministic standard normal draws: Box-Muller over mt19937_64, so the
// stream does not depend on the standard library's distribution internals.
class GaussianStream {
public:
    explicit GaussianStream(std::uint64_t seed) : rng_(seed) {}

    double next() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform01();
        double u2 = uniform01();
        double radius = std::sqrt(-2.0 * std::log(u1));
        double angle = 2.0 * M_PI * u2;
        spare_ = radius * std::sin(angle);
        has_spare_ = true;
        return radius * std::cos(angle);
    }

private:
    double uniform01() {
        // (0, 1]: keeps log() finite.
        return (static_cast<double>(rng_() >> 11) + 1.0) * 0x1.0p-53;
    }

    std::mt19937_64 rng_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

std::string synth_doc_id(int cluster, int doc) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "c%04d_d%05d", cluster, doc);
    return buf;
}

std::string synth_query_id(int cluster) {
    char buf[24];
    std::snprintf(buf, sizeof(buf), "q%04d", cluster);
    return buf;
}

} // namespace

SynthDataset synth_corpus(int n_clusters, int docs_per_cluster, int dimension,
                          float noise_scale, std::uint64_t seed) {
    if (n_clusters <= 0 || docs_per_cluster <= 0 || dimension <= 0)
        throw std::invalid_argument("synth_corpus: counts must be positive");
    if (noise_scale < 0.0f)
        throw std::invalid_argument("synth_corpus: noise_scale must be >= 0");

    GaussianStream gauss(seed);
    SynthDataset out;
    out.passages.dimension = static_cast<std::uint32_t>(dimension);
    out.passages.kind = CorpusKind::passages;
    out.queries.dimension = static_cast<std::uint32_t>(dimension);
    out.queries.kind = CorpusKind::queries;
    out.passages.records.reserve(std::size_t(n_clusters) * docs_per_cluster);
    out.queries.records.reserve(n_clusters);

    std::vector<double> centroid(dimension);
    for (int c = 0; c < n_clusters; ++c) {
        // Unit-norm centroids keep noise_scale meaningful relative to the
        // signal: per-component noise competes with components of size
        // ~1/sqrt(dim).
        double norm_sq = 0.0;
        do {
            norm_sq = 0.0;
            for (int d = 0; d < dimension; ++d) {
                centroid[d] = gauss.next();
                norm_sq += centroid[d] * centroid[d];
            }
        } while (norm_sq == 0.0);
        const double inv_norm = 1.0 / std::sqrt(norm_sq);
        for (int d = 0; d < dimension; ++d) centroid[d] *= inv_norm;

        std::string query_id = synth_query_id(c);
        auto& judged = out.qrels.judgments[query_id];
        for (int j = 0; j < docs_per_cluster; ++j) {
            EmbeddingRecord rec;
            rec.id = synth_doc_id(c, j);
            rec.vector.resize(dimension);
            for (int d = 0; d < dimension; ++d)
                rec.vector[d] =
                    static_cast<float>(centroid[d] + noise_scale * gauss.next());
            judged.emplace(rec.id, 1);
            out.passages.records.push_back(std::move(rec));
        }

        EmbeddingRecord query;
        query.id = query_id;
        query.vector.resize(dimension);
        for (int d = 0; d < dimension; ++d)
            query.vector[d] =
                static_cast<float>(centroid[d] + noise_scale * gauss.next());
        out.queries.records.push_back(std::move(query));
    }
    return out;
}

} // namespace vprf
