#include <doctest.h>

#include <sstream>

#include "reference.hpp"
#include "vprf/sweep.hpp"

using namespace vprf;

namespace {

Dataset synth_dataset(const std::string& name, int clusters, int docs, int dim,
                      float noise, std::uint64_t seed) {
    SynthDataset s = synth_corpus(clusters, docs, dim, noise, seed);
    return {name, std::move(s.passages), std::move(s.queries), std::move(s.qrels)};
}

SweepResult make_result(const std::string& dataset,
                        std::optional<VprfParams> params, double ndcg,
                        double recall) {
    SweepResult r;
    r.dataset = dataset;
    r.params = std::move(params);
    r.metric_values = {{"ndcg@10", ndcg}, {"recall@100", recall}};
    return r;
}

VprfParams rocchio(int kappa, double alpha, double beta) {
    return {FeedbackMethod::rocchio, kappa, alpha, beta, false};
}

} // namespace

TEST_CASE("run_sweep yields one baseline plus one result per config") {
    Dataset data = synth_dataset("toy", 4, 10, 16, 0.3f, 11);
    GridSpec avg;
    avg.variant = GridVariant::average;
    auto grid = param_grid(avg);
    REQUIRE(grid.size() == 5);

    MetricConfig cfg;
    auto results = run_sweep({data}, grid, cfg);
    REQUIRE(results.size() == 6);
    CHECK(!results[0].params.has_value());
    for (std::size_t i = 1; i < results.size(); ++i) {
        CHECK(results[i].params.has_value());
        CHECK(results[i].dataset == "toy");
        CHECK(results[i].metric_values.count("ndcg@10") == 1);
        CHECK(results[i].metric_values.count("recall@100") == 1);
        for (const auto& [name, v] : results[i].metric_values) {
            (void)name;
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
        }
        CHECK(results[i].per_query_time_s >= 0.0);
    }
}

TEST_CASE("identity rocchio config reproduces baseline metrics exactly") {
    Dataset data = synth_dataset("toy", 5, 20, 24, 0.4f, 13);
    std::vector<VprfParams> grid = {rocchio(3, 1.0, 0.0), rocchio(3, 0.5, 0.5)};
    auto results = run_sweep({data}, grid, MetricConfig{});
    REQUIRE(results.size() == 3);
    CHECK(results[1].metric_values == results[0].metric_values);
}

TEST_CASE("sweep is deterministic across runs and thread counts") {
    Dataset data = synth_dataset("toy", 4, 12, 16, 0.5f, 17);
    GridSpec fixed;
    fixed.variant = GridVariant::fixed_alpha_one;
    fixed.kappa_set = {2, 3};
    auto grid = param_grid(fixed);

    auto a = run_sweep({data}, grid, MetricConfig{}, 1);
    auto b = run_sweep({data}, grid, MetricConfig{}, 1);
    auto c = run_sweep({data}, grid, MetricConfig{}, 4);
    REQUIRE(a.size() == b.size());
    REQUIRE(a.size() == c.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].metric_values == b[i].metric_values);
        CHECK(a[i].metric_values == c[i].metric_values);
        CHECK(a[i].params == b[i].params);
    }
}

TEST_CASE("baseline sweep row equals a standalone evaluation") {
    Dataset data = synth_dataset("toy", 6, 15, 16, 0.4f, 23);
    auto results =
        run_sweep({data}, {rocchio(3, 0.4, 0.6)}, MetricConfig{});
    FlatIndex index = FlatIndex::build(data.passages);
    auto hits = index.batch_search(data.queries, 100);
    RankedRun run;
    for (const auto& [qid, list] : hits) {
        auto& entries = run.queries[qid];
        for (const auto& h : list) entries.push_back({h.doc_id, h.score});
    }
    CHECK(results[0].metric_values.at("ndcg@10") ==
          ndcg_at_k(run, data.qrels, 10).mean);
    CHECK(results[0].metric_values.at("recall@100") ==
          recall_at_k(run, data.qrels, 100, 1).mean);
}

TEST_CASE("dataset failures are isolated and reported") {
    Dataset good = synth_dataset("good", 3, 8, 8, 0.3f, 29);
    Dataset bad = good;
    bad.name = "bad";
    bad.passages.records[0].vector.assign(8, 0.0f);  // zero vector
    std::vector<std::string> errors;
    auto results =
        run_sweep({bad, good}, {rocchio(2, 0.5, 0.5)}, MetricConfig{}, 1, &errors);
    REQUIRE(errors.size() == 1);
    CHECK(errors[0].find("bad") != std::string::npos);
    REQUIRE(results.size() == 2);
    CHECK(results[0].dataset == "good");
}

TEST_CASE("best_in_average: degenerate single dataset and hand arithmetic") {
    auto pa = rocchio(1, 0.1, 0.1);
    auto pb = rocchio(1, 0.1, 0.2);

    std::vector<SweepResult> single = {
        make_result("d1", std::nullopt, 0.30, 0.50),
        make_result("d1", pa, 0.40, 0.60),
        make_result("d1", pb, 0.35, 0.70),
    };
    auto best = best_in_average(single, "ndcg@10");
    CHECK(best.params == pa);
    CHECK(best.value == doctest::Approx(0.40));
    // per-metric selection: recall winner differs
    auto best_recall = best_in_average(single, "recall@100");
    CHECK(best_recall.params == pb);

    std::vector<SweepResult> two = {
        make_result("d1", std::nullopt, 0.1, 0.1),
        make_result("d1", pa, 0.5, 0.5),
        make_result("d1", pb, 0.6, 0.6),
        make_result("d2", std::nullopt, 0.1, 0.1),
        make_result("d2", pa, 0.7, 0.7),
        make_result("d2", pb, 0.58, 0.58),
    };
    auto bia = best_in_average(two, "ndcg@10");
    CHECK(bia.params == pa);  // 0.60 vs 0.59
    CHECK(bia.value == doctest::Approx(0.60));
}

TEST_CASE("best_in_average rejects ragged results") {
    auto pa = rocchio(1, 0.1, 0.1);
    std::vector<SweepResult> ragged = {
        make_result("d1", std::nullopt, 0.1, 0.1),
        make_result("d1", pa, 0.5, 0.5),
        make_result("d2", std::nullopt, 0.1, 0.1),
    };
    CHECK_THROWS_WITH_AS(best_in_average(ragged, "ndcg@10"),
                         doctest::Contains("ragged"), std::invalid_argument);
}

TEST_CASE("bia ties keep enumeration order") {
    auto pa = rocchio(1, 0.1, 0.1);
    auto pb = rocchio(1, 0.1, 0.2);
    std::vector<SweepResult> tied = {
        make_result("d1", std::nullopt, 0.2, 0.2),
        make_result("d1", pa, 0.5, 0.5),
        make_result("d1", pb, 0.5, 0.5),
    };
    CHECK(best_in_average(tied, "ndcg@10").params == pa);
}

TEST_CASE("oracle: constant configs and baseline participation") {
    auto pa = rocchio(1, 0.1, 0.1);
    std::vector<SweepResult> constant = {
        make_result("d1", std::nullopt, 0.4, 0.4),
        make_result("d1", pa, 0.4, 0.4),
        make_result("d2", std::nullopt, 0.4, 0.4),
        make_result("d2", pa, 0.4, 0.4),
    };
    auto o = oracle(constant, "ndcg@10");
    CHECK(o.value == doctest::Approx(0.4));
    // equal values: first row (baseline) wins the tie
    CHECK(!o.per_dataset.at("d1").params.has_value());

    std::vector<SweepResult> base_wins = {
        make_result("d1", std::nullopt, 0.9, 0.9),
        make_result("d1", pa, 0.2, 0.2),
    };
    auto ob = oracle(base_wins, "ndcg@10");
    CHECK(ob.value == doctest::Approx(0.9));
    CHECK(!ob.per_dataset.at("d1").params.has_value());
}

TEST_CASE("oracle dominates bia on random result sets") {
    std::mt19937_64 rng(59);
    std::uniform_real_distribution<double> u(0.05, 1.0);
    GridSpec spec;
    spec.variant = GridVariant::fixed_alpha_one;
    spec.kappa_set = {1, 2};
    auto grid = param_grid(spec);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<SweepResult> results;
        for (const auto& dataset : {"a", "b", "c"}) {
            results.push_back(make_result(dataset, std::nullopt, u(rng), u(rng)));
            for (const auto& p : grid)
                results.push_back(make_result(dataset, p, u(rng), u(rng)));
        }
        for (const auto& metric : {"ndcg@10", "recall@100"}) {
            auto bia = best_in_average(results, metric);
            auto orc = oracle(results, metric);
            CHECK(orc.value >= bia.value - 1e-12);
        }
    }
}

TEST_CASE("sweep csv round-trips to structural equality") {
    std::mt19937_64 rng(61);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    GridSpec spec;
    spec.kappa_set = {1, 3};
    spec.variant = GridVariant::alpha_beta_grid;
    auto grid = param_grid(spec);
    GridSpec avg_spec;
    avg_spec.variant = GridVariant::average;
    avg_spec.kappa_set = {2};
    for (const auto& p : param_grid(avg_spec)) grid.push_back(p);

    for (int trial = 0; trial < 10; ++trial) {
        std::vector<SweepResult> results;
        for (const auto& dataset : {"msmarco", "dl19"}) {
            auto base = make_result(dataset, std::nullopt, u(rng), u(rng));
            base.per_query_time_s = u(rng);
            results.push_back(base);
            for (const auto& p : grid) {
                auto r = make_result(dataset, p, u(rng), u(rng));
                r.per_query_time_s = u(rng);
                results.push_back(r);
            }
        }
        std::string csv = sweep_results_to_csv(results);
        auto parsed = sweep_results_from_csv(csv);
        REQUIRE(parsed.size() == results.size());
        for (std::size_t i = 0; i < results.size(); ++i) {
            CHECK(parsed[i].dataset == results[i].dataset);
            CHECK(parsed[i].params == results[i].params);
            CHECK(parsed[i].metric_values == results[i].metric_values);
            CHECK(parsed[i].per_query_time_s == results[i].per_query_time_s);
        }
        CHECK(sweep_results_to_csv(parsed) == csv);
    }
}

TEST_CASE("sweep csv rejects malformed input") {
    CHECK_THROWS_AS(sweep_results_from_csv(""), std::runtime_error);
    CHECK_THROWS_AS(sweep_results_from_csv("not,a,header\n"), std::runtime_error);
    std::string csv =
        "dataset,method,kappa,alpha,beta,metric,value,per_query_time_s\n"
        "d1,baseline,,,,ndcg@10,0.5\n";  // 7 fields
    CHECK_THROWS_WITH_AS(sweep_results_from_csv(csv), doctest::Contains("line 2"),
                         std::runtime_error);
}

TEST_CASE("aggregate report: markdown cells, csv parse-back and determinism") {
    auto pa = rocchio(3, 1.0, 0.4);
    auto pb = rocchio(3, 1.0, 0.8);
    std::vector<SweepResult> results = {
        make_result("d1", std::nullopt, 0.40, 0.60),
        make_result("d1", pa, 0.50, 0.62),
        make_result("d1", pb, 0.45, 0.58),
        make_result("d2", std::nullopt, 0.44, 0.64),
        make_result("d2", pa, 0.46, 0.66),
        make_result("d2", pb, 0.52, 0.60),
    };
    AggregateReport report = aggregate_results(results);
    REQUIRE(report.metrics ==
            std::vector<std::string>{"ndcg@10", "recall@100"});
    const auto& row = report.rows.at("ndcg@10");
    CHECK(row.baseline == doctest::Approx(0.42));
    CHECK(row.bia.value == doctest::Approx(0.485));  // pb: (0.45+0.52)/2
    CHECK(row.bia.params == pb);
    CHECK(row.oracle.value == doctest::Approx(0.51));  // (0.50+0.52)/2

    std::string md = emit_report(report, ReportFormat::markdown);
    CHECK(md.find("| Baseline |") != std::string::npos);
    CHECK(md.find("| BIA |") != std::string::npos);
    CHECK(md.find("| Oracle |") != std::string::npos);
    CHECK(md.find("0.4850(") != std::string::npos);
    CHECK(md.find("**0.5100(21.4%)**") != std::string::npos);
    CHECK(emit_report(report, ReportFormat::markdown) == md);

    std::string csv = emit_report(report, ReportFormat::csv);
    AggregateReport parsed = parse_report_csv(csv);
    REQUIRE(parsed.metrics == report.metrics);
    for (const auto& metric : report.metrics) {
        const auto& a = report.rows.at(metric);
        const auto& b = parsed.rows.at(metric);
        CHECK(a.baseline == b.baseline);
        CHECK(a.bia.value == b.bia.value);
        CHECK(a.bia.params == b.bia.params);
        CHECK(a.oracle.value == b.oracle.value);
        CHECK(a.bia_pct == doctest::Approx(b.bia_pct).epsilon(1e-12));
        CHECK(a.oracle_pct == doctest::Approx(b.oracle_pct).epsilon(1e-12));
        REQUIRE(a.oracle.per_dataset.size() == b.oracle.per_dataset.size());
        for (const auto& [name, choice] : a.oracle.per_dataset) {
            CHECK(b.oracle.per_dataset.at(name).params == choice.params);
            CHECK(b.oracle.per_dataset.at(name).value == choice.value);
        }
    }
    CHECK(emit_report(parsed, ReportFormat::csv) == csv);
}

TEST_CASE("timing: sanity on a tiny corpus") {
    SynthDataset s = synth_corpus(3, 10, 16, 0.3f, 67);
    FlatIndex index = FlatIndex::build(s.passages);
    TimingResult base = time_per_query(index, s.queries, std::nullopt, 10, 0, 1);
    CHECK(base.per_query_s > 0.0);
    CHECK(std::isfinite(base.per_query_s));
    CHECK(base.refine_per_query_s == 0.0);

    VprfParams p{FeedbackMethod::average, 3, 0.0, 0.0, false};
    TimingResult vprf = time_per_query(index, s.queries, p, 10, 1, 3);
    CHECK(vprf.per_query_s > 0.0);
    CHECK(vprf.refine_per_query_s > 0.0);

    // with a single repetition the total is exactly refine + search
    TimingResult one = time_per_query(index, s.queries, p, 10, 0, 1);
    CHECK(one.per_query_s ==
          doctest::Approx(one.refine_per_query_s + one.search_per_query_s));

    std::string table = format_timing_table(
        {{"Baseline", base}, {"VPRF-Average", vprf}});
    CHECK(table.find("| Baseline |") != std::string::npos);
    CHECK(table.find("| VPRF-Average |") != std::string::npos);
    CHECK(table.find("s |") != std::string::npos);
}

TEST_CASE("timing: doubling the corpus roughly doubles per-query time") {
    SynthDataset small = synth_corpus(20, 1000, 128, 0.5f, 73);
    SynthDataset big = synth_corpus(40, 1000, 128, 0.5f, 73);
    EmbeddingCorpus queries;
    queries.dimension = small.queries.dimension;
    queries.kind = CorpusKind::queries;
    queries.records.assign(small.queries.records.begin(),
                           small.queries.records.begin() + 8);

    FlatIndex small_index = FlatIndex::build(small.passages);
    FlatIndex big_index = FlatIndex::build(big.passages);
    TimingResult t_small =
        time_per_query(small_index, queries, std::nullopt, 10, 1, 5);
    TimingResult t_big =
        time_per_query(big_index, queries, std::nullopt, 10, 1, 5);

    const double ratio = t_big.per_query_s / t_small.per_query_s;
    // brute-force scan is linear in corpus size; 2x the docs should land
    // within a 2x band around a 2x slowdown
    CHECK(ratio >= 1.0);
    CHECK(ratio <= 4.0);
}

TEST_CASE("timing validates its arguments") {
    SynthDataset s = synth_corpus(2, 3, 8, 0.2f, 71);
    FlatIndex index = FlatIndex::build(s.passages);
    CHECK_THROWS_AS(time_per_query(index, s.queries, std::nullopt, 5, 0, 0),
                    std::invalid_argument);
    CHECK_THROWS_AS(time_per_query(index, s.queries, std::nullopt, 5, -1, 1),
                    std::invalid_argument);
}
