// Command-line driver: synthetic data generation, index building, baseline
// and VPRF retrieval, run evaluation, parameter sweeps, and aggregate
// reports.
#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "vprf/detail/io.hpp"
#include "vprf/detail/text.hpp"
#include "vprf/embeddings.hpp"
#include "vprf/eval.hpp"
#include "vprf/feedback.hpp"
#include "vprf/flat_index.hpp"
#include "vprf/sweep.hpp"

namespace {

using namespace vprf;

std::string default_vprf_tag(const VprfParams& p) {
    std::string tag = "llm-vprf-" + method_name(p.method) + "-k" +
                      std::to_string(p.kappa);
    if (p.method == FeedbackMethod::rocchio)
        tag += "-a" + detail::repr(p.alpha) + "-b" + detail::repr(p.beta);
    return tag;
}

FlatIndex open_index(const std::string& index_path,
                     const std::string& passages_path, FileFormat format,
                     bool normalize) {
    if (!index_path.empty() && !passages_path.empty())
        throw std::runtime_error("give either --index or --passages, not both");
    if (!index_path.empty()) return FlatIndex::load(index_path);
    if (!passages_path.empty())
        return FlatIndex::build(
            load_embeddings(passages_path, format, CorpusKind::passages),
            normalize);
    throw std::runtime_error("one of --index or --passages is required");
}

RankedRun run_from_batches(
    const std::map<std::string, std::vector<ScoredHit>>& hits,
    const std::string& tag) {
    RankedRun run;
    run.tag = tag;
    for (const auto& [qid, list] : hits) {
        auto& entries = run.queries[qid];
        entries.reserve(list.size());
        for (const auto& h : list) entries.push_back({h.doc_id, h.score});
    }
    return run;
}

std::vector<int> parse_kappas(const std::string& csv) {
    std::vector<int> out;
    for (auto tok : detail::split(csv, ','))
        out.push_back(static_cast<int>(detail::parse_long(tok, "--kappas")));
    if (out.empty()) throw std::runtime_error("--kappas is empty");
    return out;
}

Dataset parse_dataset_spec(const std::string& spec, FileFormat format) {
    auto parts = detail::split(spec, ':');
    if (parts.size() != 4)
        throw std::runtime_error("--dataset expects name:passages:queries:qrels, got '" +
                                 spec + "'");
    Dataset d;
    d.name = std::string(parts[0]);
    d.passages = load_embeddings(std::string(parts[1]), format, CorpusKind::passages);
    d.queries = load_embeddings(std::string(parts[2]), format, CorpusKind::queries);
    d.qrels = load_qrels(std::string(parts[3]));
    return d;
}

struct CommonRetrieval {
    std::string index_path;
    std::string passages_path;
    std::string queries_path;
    std::string format = "binary";
    std::string out;
    std::string tag;
    int k_final = 1000;
    int threads = 1;
};

void add_retrieval_options(CLI::App* cmd, CommonRetrieval& opt) {
    cmd->add_option("--index", opt.index_path, "prebuilt index file");
    cmd->add_option("--passages", opt.passages_path,
                    "passage embeddings (index built in process)");
    cmd->add_option("--queries", opt.queries_path, "query embeddings")->required();
    cmd->add_option("--format", opt.format, "embedding file format: binary|line");
    cmd->add_option("--out", opt.out, "output TREC run file")->required();
    cmd->add_option("--tag", opt.tag, "run tag (last TREC column)");
    cmd->add_option("--k-final", opt.k_final, "hits per query in the run");
    cmd->add_option("--threads", opt.threads, "worker threads");
}

int cmd_synth(int clusters, int docs_per_cluster, int dim, double noise,
              std::uint64_t seed, const std::string& out_dir,
              const std::string& format_name) {
    FileFormat format = parse_file_format(format_name);
    std::filesystem::create_directories(out_dir);
    SynthDataset data = synth_corpus(clusters, docs_per_cluster, dim,
                                     static_cast<float>(noise), seed);
    const std::string ext = format == FileFormat::binary ? ".bin" : ".tsv";
    const auto passages = (std::filesystem::path(out_dir) / ("passages" + ext)).string();
    const auto queries = (std::filesystem::path(out_dir) / ("queries" + ext)).string();
    const auto qrels = (std::filesystem::path(out_dir) / "qrels.txt").string();
    save_embeddings(data.passages, passages, format);
    save_embeddings(data.queries, queries, format);
    save_qrels(data.qrels, qrels);
    std::cout << "wrote " << passages << "\nwrote " << queries << "\nwrote "
              << qrels << "\n";
    return 0;
}

int cmd_index(const std::string& passages_path, const std::string& format_name,
              bool normalize, const std::string& out) {
    FileFormat format = parse_file_format(format_name);
    EmbeddingCorpus passages =
        load_embeddings(passages_path, format, CorpusKind::passages);
    FlatIndex index = FlatIndex::build(passages, normalize);
    index.save(out);
    std::cout << "indexed " << index.size() << " passages (dim "
              << index.dimension() << ") -> " << out << "\n";
    return 0;
}

int cmd_search(const CommonRetrieval& opt) {
    FileFormat format = parse_file_format(opt.format);
    FlatIndex index = open_index(opt.index_path, opt.passages_path, format, false);
    EmbeddingCorpus queries =
        load_embeddings(opt.queries_path, format, CorpusKind::queries);
    auto hits = index.batch_search(queries, opt.k_final, opt.threads);
    RankedRun run = run_from_batches(
        hits, opt.tag.empty() ? std::string("llm-vprf-baseline") : opt.tag);
    save_run(run, opt.out);
    std::cout << "wrote " << opt.out << " (" << run.queries.size()
              << " queries)\n";
    return 0;
}

int cmd_vprf(const CommonRetrieval& opt, const VprfParams& params) {
    FileFormat format = parse_file_format(opt.format);
    FlatIndex index = open_index(opt.index_path, opt.passages_path, format, false);
    EmbeddingCorpus queries =
        load_embeddings(opt.queries_path, format, CorpusKind::queries);

    const std::size_t nq = queries.size();
    std::vector<std::vector<ScoredHit>> per_query(nq);
    std::vector<std::string> failures(nq);
    auto worker = [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            try {
                per_query[i] = run_vprf(index, queries.records[i], params,
                                        opt.k_final);
            } catch (const std::exception& e) {
                failures[i] = e.what();
            }
        }
    };
    const std::size_t workers = std::min<std::size_t>(
        std::max(opt.threads, 1), std::max<std::size_t>(nq, 1));
    if (workers <= 1) {
        worker(0, nq);
    } else {
        std::vector<std::thread> pool;
        const std::size_t chunk = (nq + workers - 1) / workers;
        for (std::size_t w = 0; w < workers; ++w) {
            const std::size_t begin = w * chunk;
            if (begin >= nq) break;
            pool.emplace_back(worker, begin, std::min(begin + chunk, nq));
        }
        for (auto& t : pool) t.join();
    }
    for (std::size_t i = 0; i < nq; ++i)
        if (!failures[i].empty())
            throw std::runtime_error("query '" + queries.records[i].id +
                                     "': " + failures[i]);

    RankedRun run;
    run.tag = opt.tag.empty() ? default_vprf_tag(params) : opt.tag;
    for (std::size_t i = 0; i < nq; ++i) {
        auto& entries = run.queries[queries.records[i].id];
        for (const auto& h : per_query[i]) entries.push_back({h.doc_id, h.score});
    }
    save_run(run, opt.out);
    std::cout << "wrote " << opt.out << " (" << run.queries.size()
              << " queries, " << params_label(params) << ")\n";
    return 0;
}

int cmd_eval(const std::string& run_path, const std::string& qrels_path,
             int ndcg_k, int recall_k, int min_grade, bool per_query,
             const std::string& out) {
    RankedRun run = load_run(run_path);
    Qrels qrels = load_qrels(qrels_path);
    MetricReport ndcg = ndcg_at_k(run, qrels, ndcg_k);
    MetricReport recall = recall_at_k(run, qrels, recall_k, min_grade);

    std::ostringstream text;
    for (const MetricReport* report : {&ndcg, &recall}) {
        if (per_query)
            for (const auto& [qid, v] : report->per_query)
                text << report->metric << '\t' << qid << '\t' << detail::repr(v)
                     << '\n';
        text << report->metric << "\tall\t" << detail::repr(report->mean) << '\n';
    }
    for (const auto& qid : ndcg.unjudged_queries)
        text << "# run query without judgments, skipped: " << qid << '\n';

    std::cout << text.str();
    if (!out.empty())
        detail::atomic_write(out, [&](std::ostream& os) { os << text.str(); });
    return 0;
}

int cmd_sweep(const std::vector<std::string>& dataset_specs,
              const std::string& format_name, const std::string& grid_name,
              const std::string& kappas, int ndcg_k, int recall_k, int min_grade,
              int threads, const std::string& out) {
    FileFormat format = parse_file_format(format_name);
    std::vector<Dataset> datasets;
    for (const auto& spec : dataset_specs)
        datasets.push_back(parse_dataset_spec(spec, format));

    GridSpec spec;
    spec.variant = parse_grid_variant(grid_name);
    if (!kappas.empty()) spec.kappa_set = parse_kappas(kappas);
    auto grid = param_grid(spec);

    MetricConfig cfg{ndcg_k, recall_k, min_grade};
    std::vector<std::string> errors;
    auto results = run_sweep(datasets, grid, cfg, threads, &errors);
    for (const auto& err : errors) std::cerr << "sweep: " << err << "\n";

    const std::string csv = sweep_results_to_csv(results);
    detail::atomic_write(out, [&](std::ostream& os) { os << csv; });
    std::cout << "wrote " << out << " (" << results.size() << " results, "
              << grid.size() << " configs)\n";
    return errors.empty() ? 0 : 1;
}

int cmd_report(const std::vector<std::string>& sweep_csvs,
               const std::string& format_name, const std::string& out) {
    std::vector<SweepResult> results;
    for (const auto& path : sweep_csvs) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("cannot open " + path);
        std::ostringstream buf;
        buf << in.rdbuf();
        for (auto& r : sweep_results_from_csv(buf.str()))
            results.push_back(std::move(r));
    }
    AggregateReport report = aggregate_results(results);
    const std::string text = emit_report(report, parse_report_format(format_name));
    if (out.empty()) {
        std::cout << text;
    } else {
        detail::atomic_write(out, [&](std::ostream& os) { os << text; });
        std::cout << "wrote " << out << "\n";
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"vector pseudo relevance feedback over an exact cosine flat index"};
    app.require_subcommand(1);

    // synth
    auto* synth = app.add_subcommand("synth", "generate a clustered synthetic dataset");
    int clusters = 8, docs_per_cluster = 50, dim = 64;
    double noise = 0.3;
    std::uint64_t seed = 0;
    std::string synth_out_dir, synth_format = "binary";
    synth->add_option("--clusters", clusters, "number of clusters");
    synth->add_option("--docs-per-cluster", docs_per_cluster, "passages per cluster");
    synth->add_option("--dim", dim, "vector dimension");
    synth->add_option("--noise", noise, "gaussian noise scale");
    synth->add_option("--seed", seed, "rng seed");
    synth->add_option("--out-dir", synth_out_dir, "output directory")->required();
    synth->add_option("--format", synth_format, "embedding format: binary|line");

    // index
    auto* index_cmd = app.add_subcommand("index", "build and persist a flat index");
    std::string idx_passages, idx_format = "binary", idx_out;
    bool idx_normalize = false;
    index_cmd->add_option("--passages", idx_passages, "passage embeddings")->required();
    index_cmd->add_option("--format", idx_format, "embedding format: binary|line");
    index_cmd->add_flag("--normalize", idx_normalize, "store unit-norm vectors");
    index_cmd->add_option("--out", idx_out, "index output path")->required();

    // search
    auto* search = app.add_subcommand("search", "single-stage cosine retrieval");
    CommonRetrieval search_opt;
    add_retrieval_options(search, search_opt);

    // vprf
    auto* vprf_cmd = app.add_subcommand("vprf", "two-stage VPRF retrieval");
    CommonRetrieval vprf_opt;
    add_retrieval_options(vprf_cmd, vprf_opt);
    std::string method = "rocchio";
    int kappa = 3;
    double alpha = 1.0, beta = 0.5;
    bool vprf_normalize = false;
    vprf_cmd->add_option("--method", method, "feedback operator: average|rocchio");
    vprf_cmd->add_option("--kappa", kappa, "feedback depth");
    vprf_cmd->add_option("--alpha", alpha, "query weight (rocchio)");
    vprf_cmd->add_option("--beta", beta, "feedback weight (rocchio)");
    vprf_cmd->add_flag("--normalize", vprf_normalize,
                       "L2-normalize vectors before combining");

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "score a TREC run against qrels");
    std::string eval_run, eval_qrels, eval_out;
    int ndcg_k = 10, recall_k = 100, min_grade = 1;
    bool per_query = false;
    eval_cmd->add_option("--run", eval_run, "TREC run file")->required();
    eval_cmd->add_option("--qrels", eval_qrels, "TREC qrels file")->required();
    eval_cmd->add_option("--ndcg-k", ndcg_k, "nDCG cutoff");
    eval_cmd->add_option("--recall-k", recall_k, "recall cutoff");
    eval_cmd->add_option("--min-grade", min_grade, "relevance binarization threshold");
    eval_cmd->add_flag("--per-query", per_query, "print per-query values");
    eval_cmd->add_option("--out", eval_out, "also write the report here");

    // sweep
    auto* sweep_cmd = app.add_subcommand("sweep", "run a parameter grid over datasets");
    std::vector<std::string> dataset_specs;
    std::string sweep_format = "binary", grid_name = "alpha-beta", kappas;
    std::string sweep_out;
    int sweep_ndcg_k = 10, sweep_recall_k = 100, sweep_min_grade = 1, threads = 1;
    sweep_cmd->add_option("--dataset", dataset_specs,
                          "name:passages:queries:qrels (repeatable)")
        ->required();
    sweep_cmd->add_option("--format", sweep_format, "embedding format: binary|line");
    sweep_cmd->add_option("--grid", grid_name,
                          "alpha-beta|fixed-alpha-one|average");
    sweep_cmd->add_option("--kappas", kappas, "comma-separated depths, default 1,2,3,5,10");
    sweep_cmd->add_option("--ndcg-k", sweep_ndcg_k, "nDCG cutoff");
    sweep_cmd->add_option("--recall-k", sweep_recall_k, "recall cutoff");
    sweep_cmd->add_option("--min-grade", sweep_min_grade, "relevance threshold");
    sweep_cmd->add_option("--threads", threads, "worker threads");
    sweep_cmd->add_option("--out", sweep_out, "sweep CSV output")->required();

    // report
    auto* report_cmd =
        app.add_subcommand("report", "aggregate sweep CSVs into BIA/Oracle tables");
    std::vector<std::string> sweep_csvs;
    std::string report_format = "markdown", report_out;
    report_cmd->add_option("--sweep", sweep_csvs, "sweep CSV files (repeatable)")
        ->required();
    report_cmd->add_option("--format", report_format, "csv|markdown");
    report_cmd->add_option("--out", report_out, "output path (stdout when absent)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (synth->parsed())
            return cmd_synth(clusters, docs_per_cluster, dim, noise, seed,
                             synth_out_dir, synth_format);
        if (index_cmd->parsed())
            return cmd_index(idx_passages, idx_format, idx_normalize, idx_out);
        if (search->parsed()) return cmd_search(search_opt);
        if (vprf_cmd->parsed()) {
            VprfParams params{parse_method(method), kappa, alpha, beta,
                              vprf_normalize};
            if (params.kappa < 1) throw std::runtime_error("--kappa must be >= 1");
            return cmd_vprf(vprf_opt, params);
        }
        if (eval_cmd->parsed())
            return cmd_eval(eval_run, eval_qrels, ndcg_k, recall_k, min_grade,
                            per_query, eval_out);
        if (sweep_cmd->parsed())
            return cmd_sweep(dataset_specs, sweep_format, grid_name, kappas,
                             sweep_ndcg_k, sweep_recall_k, sweep_min_grade,
                             threads, sweep_out);
        if (report_cmd->parsed())
            return cmd_report(sweep_csvs, report_format, report_out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
