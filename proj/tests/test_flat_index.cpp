#include <doctest.h>

#include <fstream>
#include <sstream>

#include "reference.hpp"
#include "vprf/flat_index.hpp"

using namespace vprf;

namespace {

EmbeddingCorpus corpus_from(const std::vector<ref::Doc>& docs) {
    EmbeddingCorpus c;
    c.dimension = static_cast<std::uint32_t>(docs.front().vec.size());
    c.kind = CorpusKind::passages;
    for (const auto& d : docs) c.records.push_back({d.id, d.vec});
    return c;
}

std::vector<std::string> hit_ids(const std::vector<ScoredHit>& hits) {
    std::vector<std::string> ids;
    for (const auto& h : hits) ids.push_back(h.doc_id);
    return ids;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

} // namespace

TEST_CASE("build precomputes the 3-4-5 norm") {
    EmbeddingCorpus c;
    c.dimension = 2;
    c.records = {{"d1", {3.0f, 4.0f}}};
    FlatIndex index = FlatIndex::build(c);
    CHECK(index.size() == 1);
    CHECK(index.norm_at(0) == doctest::Approx(5.0).epsilon(1e-12));
}

TEST_CASE("build rejects zero vectors naming the id") {
    EmbeddingCorpus c;
    c.dimension = 2;
    c.records = {{"ok", {1.0f, 0.0f}}, {"zero", {0.0f, 0.0f}}};
    CHECK_THROWS_WITH_AS(FlatIndex::build(c), doctest::Contains("'zero'"),
                         std::runtime_error);
}

TEST_CASE("build rejects empty and non-passage corpora") {
    EmbeddingCorpus empty;
    empty.dimension = 2;
    CHECK_THROWS_AS(FlatIndex::build(empty), std::runtime_error);

    EmbeddingCorpus queries;
    queries.dimension = 2;
    queries.kind = CorpusKind::queries;
    queries.records = {{"q", {1.0f, 0.0f}}};
    CHECK_THROWS_AS(FlatIndex::build(queries), std::invalid_argument);
}

TEST_CASE("stored norms match an independent recomputation") {
    std::mt19937_64 rng(11);
    auto docs = ref::random_docs(rng, 1000, 64);
    FlatIndex index = FlatIndex::build(corpus_from(docs));
    for (std::size_t i = 0; i < docs.size(); ++i) {
        double expected = ref::norm(docs[i].vec);
        CHECK(std::abs(index.norm_at(i) - expected) <= 1e-6 * expected);
    }
}

TEST_CASE("orthogonal toy example scores exactly") {
    EmbeddingCorpus c;
    c.dimension = 2;
    c.records = {{"d1", {1.0f, 0.0f}}, {"d2", {0.0f, 1.0f}}};
    FlatIndex index = FlatIndex::build(c);
    std::vector<float> q = {1.0f, 0.0f};
    auto hits = index.search(q, 2);
    REQUIRE(hits.size() == 2);
    CHECK(hits[0].doc_id == "d1");
    CHECK(hits[0].score == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(hits[0].rank == 1);
    CHECK(hits[1].doc_id == "d2");
    CHECK(hits[1].score == doctest::Approx(0.0).epsilon(1e-6));
    CHECK(hits[1].rank == 2);
}

TEST_CASE("identical direction puts the doc at rank 1 with score 1") {
    std::mt19937_64 rng(3);
    auto docs = ref::random_docs(rng, 50, 16);
    FlatIndex index = FlatIndex::build(corpus_from(docs));
    auto hits = index.search(docs[31].vec, 1);
    REQUIRE(hits.size() == 1);
    CHECK(hits[0].doc_id == docs[31].id);
    CHECK(hits[0].score == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("search matches the full-sort reference on random corpora") {
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
        std::mt19937_64 rng(900 + seed);
        std::uniform_int_distribution<std::size_t> n_dist(5, 800);
        auto docs = ref::random_docs(rng, n_dist(rng), 64);
        FlatIndex index = FlatIndex::build(corpus_from(docs));
        for (int qi = 0; qi < 10; ++qi) {
            auto q = ref::random_vector(rng, 64);
            for (std::size_t k : {std::size_t(1), std::size_t(10), docs.size()}) {
                auto got = hit_ids(index.search(q, static_cast<int>(k)));
                auto want = ref::topk(docs, q, k);
                REQUIRE(got.size() == want.size());
                for (std::size_t i = 0; i < got.size(); ++i)
                    REQUIRE(got[i] == want[i].id);
            }
        }
    }
}

TEST_CASE("ties break by ascending doc id byte order") {
    EmbeddingCorpus c;
    c.dimension = 2;
    // Identical vectors -> bit-identical scores at any scale.
    c.records = {{"z", {1.0f, 1.0f}},
                 {"a", {1.0f, 1.0f}},
                 {"m", {1.0f, 1.0f}},
                 {"other", {-1.0f, 1.0f}}};
    FlatIndex index = FlatIndex::build(c);
    std::vector<float> q = {2.0f, 2.0f};
    auto ids = hit_ids(index.search(q, 4));
    CHECK(ids == std::vector<std::string>{"a", "m", "z", "other"});
}

TEST_CASE("k greater than corpus size returns all docs") {
    std::mt19937_64 rng(5);
    auto docs = ref::random_docs(rng, 7, 8);
    FlatIndex index = FlatIndex::build(corpus_from(docs));
    auto hits = index.search(docs[0].vec, 1000);
    CHECK(hits.size() == 7);
    CHECK(hits.back().rank == 7);
}

TEST_CASE("ranking is invariant to positive query scaling") {
    std::mt19937_64 rng(17);
    auto docs = ref::random_docs(rng, 300, 32);
    FlatIndex index = FlatIndex::build(corpus_from(docs));
    for (int qi = 0; qi < 20; ++qi) {
        auto q = ref::random_vector(rng, 32);
        auto base = index.search(q, 10);
        for (float c : {1e-3f, 7.0f, 1e3f}) {
            std::vector<float> scaled(q.size());
            for (std::size_t i = 0; i < q.size(); ++i) scaled[i] = c * q[i];
            auto got = index.search(scaled, 10);
            REQUIRE(hit_ids(got) == hit_ids(base));
            for (std::size_t i = 0; i < got.size(); ++i)
                CHECK(got[i].score ==
                      doctest::Approx(base[i].score).epsilon(1e-6));
        }
    }
}

TEST_CASE("search validates its inputs") {
    EmbeddingCorpus c;
    c.dimension = 2;
    c.records = {{"d", {1.0f, 0.0f}}};
    FlatIndex index = FlatIndex::build(c);
    std::vector<float> wrong_dim = {1.0f, 2.0f, 3.0f};
    CHECK_THROWS_AS(index.search(wrong_dim, 1), std::invalid_argument);
    std::vector<float> zero = {0.0f, 0.0f};
    CHECK_THROWS_AS(index.search(zero, 1), std::invalid_argument);
    std::vector<float> ok = {1.0f, 1.0f};
    CHECK_THROWS_AS(index.search(ok, 0), std::invalid_argument);
}

TEST_CASE("batch search equals per-query search and is thread invariant") {
    std::mt19937_64 rng(23);
    auto docs = ref::random_docs(rng, 256, 16);
    FlatIndex index = FlatIndex::build(corpus_from(docs));

    EmbeddingCorpus queries;
    queries.dimension = 16;
    queries.kind = CorpusKind::queries;
    for (int i = 0; i < 12; ++i)
        queries.records.push_back({"q" + std::to_string(i),
                                   ref::random_vector(rng, 16)});
    // Duplicate vector under a different id must rank identically.
    queries.records.push_back({"q_dup", queries.records[0].vector});

    auto sequential = index.batch_search(queries, 10, 1);
    auto parallel = index.batch_search(queries, 10, 4);
    REQUIRE(sequential.size() == queries.size());
    CHECK(sequential == parallel);
    for (const auto& rec : queries.records)
        CHECK(sequential.at(rec.id) == index.search(rec.vector, 10));
    CHECK(hit_ids(sequential.at("q_dup")) == hit_ids(sequential.at("q0")));
}

TEST_CASE("batch search reports the failing query id") {
    EmbeddingCorpus c;
    c.dimension = 2;
    c.records = {{"d", {1.0f, 0.0f}}};
    FlatIndex index = FlatIndex::build(c);
    EmbeddingCorpus queries;
    queries.dimension = 2;
    queries.kind = CorpusKind::queries;
    queries.records = {{"good", {1.0f, 1.0f}}, {"bad", {0.0f, 0.0f}}};
    CHECK_THROWS_WITH_AS(index.batch_search(queries, 1),
                         doctest::Contains("'bad'"), std::runtime_error);
}

TEST_CASE("index save/load round-trips and writes deterministically") {
    std::mt19937_64 rng(31);
    auto docs = ref::random_docs(rng, 100, 12);
    FlatIndex index = FlatIndex::build(corpus_from(docs));
    auto dir = ref::scratch_dir("index");
    auto p1 = (dir / "a.idx").string();
    auto p2 = (dir / "b.idx").string();
    index.save(p1);
    index.save(p2);
    CHECK(slurp(p1) == slurp(p2));

    FlatIndex loaded = FlatIndex::load(p1);
    CHECK(loaded.size() == index.size());
    CHECK(loaded.dimension() == index.dimension());
    auto q = ref::random_vector(rng, 12);
    CHECK(loaded.search(q, 10) == index.search(q, 10));

    auto p3 = (dir / "c.idx").string();
    loaded.save(p3);
    CHECK(slurp(p3) == slurp(p1));
}

TEST_CASE("pre-normalized index keeps rankings and unit norms") {
    std::mt19937_64 rng(41);
    auto docs = ref::random_docs(rng, 64, 8);
    FlatIndex raw = FlatIndex::build(corpus_from(docs));
    FlatIndex unit = FlatIndex::build(corpus_from(docs), /*pre_normalize=*/true);
    for (std::size_t i = 0; i < unit.size(); ++i)
        CHECK(unit.norm_at(i) == doctest::Approx(1.0).epsilon(1e-6));
    for (int qi = 0; qi < 5; ++qi) {
        auto q = ref::random_vector(rng, 8);
        CHECK(hit_ids(raw.search(q, 10)) == hit_ids(unit.search(q, 10)));
    }
}

TEST_CASE("repeated searches are deterministic") {
    std::mt19937_64 rng(53);
    auto docs = ref::random_docs(rng, 128, 8);
    FlatIndex index = FlatIndex::build(corpus_from(docs));
    auto q = ref::random_vector(rng, 8);
    auto first = index.search(q, 20);
    for (int i = 0; i < 5; ++i) CHECK(index.search(q, 20) == first);
}
