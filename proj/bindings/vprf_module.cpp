#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "vprf/embeddings.hpp"
#include "vprf/eval.hpp"
#include "vprf/feedback.hpp"
#include "vprf/flat_index.hpp"
#include "vprf/sweep.hpp"

namespace py = pybind11;
using namespace vprf;

namespace {

FeedbackSet feedback_from_vectors(
    const std::vector<std::vector<float>>& vectors) {
    FeedbackSet fb;
    for (std::size_t i = 0; i < vectors.size(); ++i)
        fb.passages.push_back({"p" + std::to_string(i), vectors[i]});
    return fb;
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Vector pseudo relevance feedback over an exact cosine flat index";

    py::class_<EmbeddingRecord>(m, "EmbeddingRecord")
        .def(py::init<>())
        .def(py::init([](std::string id, std::vector<float> vector) {
                 return EmbeddingRecord{std::move(id), std::move(vector)};
             }),
             py::arg("id"), py::arg("vector"))
        .def_readwrite("id", &EmbeddingRecord::id)
        .def_readwrite("vector", &EmbeddingRecord::vector);

    py::class_<EmbeddingCorpus>(m, "EmbeddingCorpus")
        .def(py::init([](std::uint32_t dimension, const std::string& kind) {
                 EmbeddingCorpus c;
                 c.dimension = dimension;
                 c.kind = kind == "queries" ? CorpusKind::queries
                                            : CorpusKind::passages;
                 return c;
             }),
             py::arg("dimension"), py::arg("kind") = "passages")
        .def_readwrite("dimension", &EmbeddingCorpus::dimension)
        .def_readwrite("records", &EmbeddingCorpus::records)
        .def_property(
            "kind",
            [](const EmbeddingCorpus& c) {
                return c.kind == CorpusKind::queries ? "queries" : "passages";
            },
            [](EmbeddingCorpus& c, const std::string& kind) {
                c.kind = kind == "queries" ? CorpusKind::queries
                                           : CorpusKind::passages;
            })
        .def("__len__", [](const EmbeddingCorpus& c) { return c.size(); })
        .def("ids", [](const EmbeddingCorpus& c) {
            std::vector<std::string> ids;
            for (const auto& r : c.records) ids.push_back(r.id);
            return ids;
        });

    m.def(
        "load_embeddings",
        [](const std::string& path, const std::string& format,
           const std::string& kind) {
            return load_embeddings(path, parse_file_format(format),
                                   kind == "queries" ? CorpusKind::queries
                                                     : CorpusKind::passages);
        },
        py::arg("path"), py::arg("format") = "binary",
        py::arg("kind") = "passages");
    m.def(
        "save_embeddings",
        [](const EmbeddingCorpus& corpus, const std::string& path,
           const std::string& format) {
            save_embeddings(corpus, path, parse_file_format(format));
        },
        py::arg("corpus"), py::arg("path"), py::arg("format") = "binary");

    py::class_<Qrels>(m, "Qrels")
        .def(py::init<>())
        .def_readwrite("judgments", &Qrels::judgments)
        .def("grade", &Qrels::grade)
        .def("num_judged", &Qrels::num_judged);
    m.def("load_qrels", &load_qrels, py::arg("path"));
    m.def("save_qrels", &save_qrels, py::arg("qrels"), py::arg("path"));

    py::class_<SynthDataset>(m, "SynthDataset")
        .def_readwrite("passages", &SynthDataset::passages)
        .def_readwrite("queries", &SynthDataset::queries)
        .def_readwrite("qrels", &SynthDataset::qrels);
    m.def("synth_corpus", &synth_corpus, py::arg("n_clusters"),
          py::arg("docs_per_cluster"), py::arg("dimension"),
          py::arg("noise_scale"), py::arg("seed"));

    py::class_<ScoredHit>(m, "ScoredHit")
        .def_readonly("doc_id", &ScoredHit::doc_id)
        .def_readonly("score", &ScoredHit::score)
        .def_readonly("rank", &ScoredHit::rank)
        .def("__repr__", [](const ScoredHit& h) {
            return "ScoredHit(" + h.doc_id + ", " + std::to_string(h.score) +
                   ", rank=" + std::to_string(h.rank) + ")";
        });

    py::class_<FlatIndex>(m, "FlatIndex")
        .def_static("build", &FlatIndex::build, py::arg("passages"),
                    py::arg("pre_normalize") = false)
        .def_static("load", &FlatIndex::load, py::arg("path"))
        .def("save", &FlatIndex::save, py::arg("path"))
        .def_property_readonly("dimension", &FlatIndex::dimension)
        .def("__len__", &FlatIndex::size)
        .def(
            "search",
            [](const FlatIndex& index, const std::vector<float>& query, int k) {
                return index.search(query, k);
            },
            py::arg("query"), py::arg("k"))
        .def("batch_search", &FlatIndex::batch_search, py::arg("queries"),
             py::arg("k"), py::arg("threads") = 1);

    py::class_<VprfParams>(m, "VprfParams")
        .def(py::init([](const std::string& method, int kappa, double alpha,
                         double beta, bool normalize) {
                 return VprfParams{parse_method(method), kappa, alpha, beta,
                                   normalize};
             }),
             py::arg("method") = "rocchio", py::arg("kappa") = 3,
             py::arg("alpha") = 1.0, py::arg("beta") = 0.5,
             py::arg("normalize") = false)
        .def_property(
            "method",
            [](const VprfParams& p) { return method_name(p.method); },
            [](VprfParams& p, const std::string& name) {
                p.method = parse_method(name);
            })
        .def_readwrite("kappa", &VprfParams::kappa)
        .def_readwrite("alpha", &VprfParams::alpha)
        .def_readwrite("beta", &VprfParams::beta)
        .def_readwrite("normalize", &VprfParams::normalize)
        .def("__eq__",
             [](const VprfParams& a, const VprfParams& b) { return a == b; })
        .def("__repr__",
             [](const VprfParams& p) { return params_label(p); });

    m.def(
        "average_feedback",
        [](const std::vector<float>& query,
           const std::vector<std::vector<float>>& feedback) {
            return average_feedback(query, feedback_from_vectors(feedback));
        },
        py::arg("query"), py::arg("feedback"));
    m.def(
        "rocchio_feedback",
        [](const std::vector<float>& query,
           const std::vector<std::vector<float>>& feedback, double alpha,
           double beta) {
            return rocchio_feedback(query, feedback_from_vectors(feedback),
                                    alpha, beta);
        },
        py::arg("query"), py::arg("feedback"), py::arg("alpha"),
        py::arg("beta"));
    m.def("run_vprf", &run_vprf, py::arg("index"), py::arg("query"),
          py::arg("params"), py::arg("k_final"));

    m.def(
        "param_grid",
        [](const std::string& variant, const std::vector<int>& kappas) {
            GridSpec spec;
            spec.variant = parse_grid_variant(variant);
            if (!kappas.empty()) spec.kappa_set = kappas;
            return param_grid(spec);
        },
        py::arg("variant") = "alpha-beta",
        py::arg("kappas") = std::vector<int>{});

    py::class_<RunEntry>(m, "RunEntry")
        .def(py::init([](std::string doc_id, double score) {
                 return RunEntry{std::move(doc_id), score};
             }),
             py::arg("doc_id"), py::arg("score"))
        .def_readwrite("doc_id", &RunEntry::doc_id)
        .def_readwrite("score", &RunEntry::score);

    py::class_<RankedRun>(m, "RankedRun")
        .def(py::init<>())
        .def_readwrite("tag", &RankedRun::tag)
        .def_readwrite("queries", &RankedRun::queries);
    m.def("load_run", &load_run, py::arg("path"));
    m.def("save_run", &save_run, py::arg("run"), py::arg("path"));
    m.def(
        "run_from_hits",
        [](const std::map<std::string, std::vector<ScoredHit>>& hits,
           const std::string& tag) {
            RankedRun run;
            run.tag = tag;
            for (const auto& [qid, list] : hits) {
                auto& entries = run.queries[qid];
                for (const auto& h : list) entries.push_back({h.doc_id, h.score});
            }
            return run;
        },
        py::arg("hits"), py::arg("tag") = "vprf");

    py::class_<MetricReport>(m, "MetricReport")
        .def_readonly("metric", &MetricReport::metric)
        .def_readonly("per_query", &MetricReport::per_query)
        .def_readonly("mean", &MetricReport::mean)
        .def_readonly("unjudged_queries", &MetricReport::unjudged_queries)
        .def_readonly("excluded_queries", &MetricReport::excluded_queries);
    m.def("ndcg_at_k", &ndcg_at_k, py::arg("run"), py::arg("qrels"),
          py::arg("k") = 10);
    m.def("recall_at_k", &recall_at_k, py::arg("run"), py::arg("qrels"),
          py::arg("k") = 100, py::arg("min_grade") = 1);
    m.def("percent_change", &percent_change, py::arg("value"),
          py::arg("baseline"));
    m.def("format_percent", &format_percent, py::arg("pct"));
    m.def("format_metric_cell", &format_metric_cell, py::arg("value"),
          py::arg("pct"));

    py::class_<Dataset>(m, "Dataset")
        .def(py::init([](std::string name, EmbeddingCorpus passages,
                         EmbeddingCorpus queries, Qrels qrels) {
                 return Dataset{std::move(name), std::move(passages),
                                std::move(queries), std::move(qrels)};
             }),
             py::arg("name"), py::arg("passages"), py::arg("queries"),
             py::arg("qrels"))
        .def_readwrite("name", &Dataset::name)
        .def_readwrite("passages", &Dataset::passages)
        .def_readwrite("queries", &Dataset::queries)
        .def_readwrite("qrels", &Dataset::qrels);

    py::class_<MetricConfig>(m, "MetricConfig")
        .def(py::init([](int ndcg_k, int recall_k, int min_grade) {
                 return MetricConfig{ndcg_k, recall_k, min_grade};
             }),
             py::arg("ndcg_k") = 10, py::arg("recall_k") = 100,
             py::arg("min_grade") = 1)
        .def_readwrite("ndcg_k", &MetricConfig::ndcg_k)
        .def_readwrite("recall_k", &MetricConfig::recall_k)
        .def_readwrite("min_grade", &MetricConfig::min_grade);

    py::class_<SweepResult>(m, "SweepResult")
        .def(py::init<>())
        .def_readwrite("dataset", &SweepResult::dataset)
        .def_readwrite("params", &SweepResult::params)
        .def_readwrite("metric_values", &SweepResult::metric_values)
        .def_readwrite("per_query_time_s", &SweepResult::per_query_time_s);

    m.def(
        "run_sweep",
        [](const std::vector<Dataset>& datasets,
           const std::vector<VprfParams>& grid, const MetricConfig& cfg,
           int threads) {
            std::vector<std::string> errors;
            auto results = run_sweep(datasets, grid, cfg, threads, &errors);
            return py::make_tuple(results, errors);
        },
        py::arg("datasets"), py::arg("grid"),
        py::arg("config") = MetricConfig{}, py::arg("threads") = 1);

    py::class_<BiaResult>(m, "BiaResult")
        .def_readonly("params", &BiaResult::params)
        .def_readonly("value", &BiaResult::value);
    py::class_<OracleChoice>(m, "OracleChoice")
        .def_readonly("params", &OracleChoice::params)
        .def_readonly("value", &OracleChoice::value);
    py::class_<OracleResult>(m, "OracleResult")
        .def_readonly("value", &OracleResult::value)
        .def_readonly("per_dataset", &OracleResult::per_dataset);
    m.def("best_in_average", &best_in_average, py::arg("results"),
          py::arg("metric"));
    m.def("oracle", &oracle, py::arg("results"), py::arg("metric"));

    py::class_<AggregateRow>(m, "AggregateRow")
        .def_readonly("baseline", &AggregateRow::baseline)
        .def_readonly("bia", &AggregateRow::bia)
        .def_readonly("oracle", &AggregateRow::oracle)
        .def_readonly("bia_pct", &AggregateRow::bia_pct)
        .def_readonly("oracle_pct", &AggregateRow::oracle_pct);
    py::class_<AggregateReport>(m, "AggregateReport")
        .def_readonly("metrics", &AggregateReport::metrics)
        .def_readonly("rows", &AggregateReport::rows);
    m.def("aggregate_results", &aggregate_results, py::arg("results"));
    m.def(
        "emit_report",
        [](const AggregateReport& report, const std::string& format) {
            return emit_report(report, parse_report_format(format));
        },
        py::arg("report"), py::arg("format") = "markdown");
    m.def("parse_report_csv", &parse_report_csv, py::arg("text"));
    m.def("sweep_results_to_csv", &sweep_results_to_csv, py::arg("results"));
    m.def("sweep_results_from_csv", &sweep_results_from_csv, py::arg("text"));

    py::class_<TimingResult>(m, "TimingResult")
        .def_readonly("per_query_s", &TimingResult::per_query_s)
        .def_readonly("refine_per_query_s", &TimingResult::refine_per_query_s)
        .def_readonly("search_per_query_s", &TimingResult::search_per_query_s);
    m.def("time_per_query", &time_per_query, py::arg("index"),
          py::arg("queries"), py::arg("params"), py::arg("k_final") = 1000,
          py::arg("warmup") = 2, py::arg("repetitions") = 5);

    m.attr("__version__") = "0.1.0";
}
