#include "vprf/sweep.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "vprf/detail/text.hpp"
#include "vprf/flat_index.hpp"

namespace vprf {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string param_key(const std::optional<VprfParams>& params) {
    if (!params) return "baseline";
    const VprfParams& p = *params;
    std::string key = method_name(p.method) + "|" + std::to_string(p.kappa);
    if (p.method == FeedbackMethod::rocchio)
        key += "|" + detail::repr(p.alpha) + "|" + detail::repr(p.beta);
    if (p.normalize) key += "|norm";
    return key;
}

void parallel_for(std::size_t n, int threads,
                  const std::function<void(std::size_t)>& body) {
    const std::size_t workers =
        std::min<std::size_t>(std::max(threads, 1), std::max<std::size_t>(n, 1));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::vector<std::thread> pool;
    const std::size_t chunk = (n + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t begin = w * chunk;
        if (begin >= n) break;
        const std::size_t end = std::min(begin + chunk, n);
        pool.emplace_back([&, begin, end] {
            for (std::size_t i = begin; i < end; ++i) body(i);
        });
    }
    for (auto& t : pool) t.join();
}

std::map<std::string, double> score_hits(
    const std::vector<std::string>& query_ids,
    const std::vector<std::vector<ScoredHit>>& hits, const Qrels& qrels,
    const MetricConfig& cfg, const std::string& tag) {
    RankedRun run;
    run.tag = tag;
    for (std::size_t i = 0; i < query_ids.size(); ++i) {
        auto& entries = run.queries[query_ids[i]];
        entries.reserve(hits[i].size());
        for (const auto& hit : hits[i]) entries.push_back({hit.doc_id, hit.score});
    }
    MetricReport ndcg = ndcg_at_k(run, qrels, cfg.ndcg_k);
    MetricReport recall = recall_at_k(run, qrels, cfg.recall_k, cfg.min_grade);
    return {{ndcg.metric, ndcg.mean}, {recall.metric, recall.mean}};
}

} // namespace

std::vector<std::string> MetricConfig::names() const {
    return {"ndcg@" + std::to_string(ndcg_k), "recall@" + std::to_string(recall_k)};
}

std::vector<SweepResult> run_sweep(const std::vector<Dataset>& datasets,
                                   const std::vector<VprfParams>& grid,
                                   const MetricConfig& cfg, int threads,
                                   std::vector<std::string>* errors) {
    if (grid.empty()) throw std::invalid_argument("run_sweep: empty parameter grid");
    std::vector<SweepResult> results;

    int max_kappa = 1;
    for (const auto& p : grid) max_kappa = std::max(max_kappa, p.kappa);
    const int k_eval = std::max(cfg.ndcg_k, cfg.recall_k);
    const int k_first = std::max(k_eval, max_kappa);

    for (const auto& dataset : datasets) {
        try {
            FlatIndex index = FlatIndex::build(dataset.passages);
            const std::size_t nq = dataset.queries.size();
            std::vector<std::string> query_ids(nq);
            for (std::size_t i = 0; i < nq; ++i)
                query_ids[i] = dataset.queries.records[i].id;

            // Single first pass serves as the baseline ranking and as the
            // feedback pool: its top-kappa prefix equals a depth-kappa search.
            std::vector<std::vector<ScoredHit>> first_pass(nq);
            auto t_base = Clock::now();
            parallel_for(nq, threads, [&](std::size_t i) {
                first_pass[i] =
                    index.search(dataset.queries.records[i].vector, k_first);
            });
            const double base_elapsed = seconds_since(t_base);

            std::vector<std::vector<ScoredHit>> truncated(nq);
            for (std::size_t i = 0; i < nq; ++i) {
                const auto& hits = first_pass[i];
                const std::size_t depth = std::min<std::size_t>(k_eval, hits.size());
                truncated[i].assign(hits.begin(), hits.begin() + depth);
            }
            SweepResult baseline;
            baseline.dataset = dataset.name;
            baseline.metric_values =
                score_hits(query_ids, truncated, dataset.qrels, cfg, "baseline");
            baseline.per_query_time_s = nq ? base_elapsed / double(nq) : 0.0;
            results.push_back(std::move(baseline));

            for (const auto& params : grid) {
                std::vector<std::vector<ScoredHit>> refined_hits(nq);
                auto t0 = Clock::now();
                parallel_for(nq, threads, [&](std::size_t i) {
                    FeedbackSet fb =
                        gather_feedback(index, first_pass[i], params.kappa);
                    std::vector<float> refined = refine_query(
                        dataset.queries.records[i].vector, fb, params);
                    refined_hits[i] = index.search(refined, k_eval);
                });
                const double elapsed = seconds_since(t0);

                SweepResult res;
                res.dataset = dataset.name;
                res.params = params;
                res.metric_values = score_hits(query_ids, refined_hits,
                                               dataset.qrels, cfg, "vprf");
                res.per_query_time_s = nq ? elapsed / double(nq) : 0.0;
                results.push_back(std::move(res));
            }
        } catch (const std::exception& e) {
            if (errors)
                errors->push_back("dataset '" + dataset.name + "': " + e.what());
        }
    }
    return results;
}

namespace {

struct ConfigColumn {
    std::optional<VprfParams> params;
    std::map<std::string, double> value_by_dataset;
};

// Groups results per config in first-appearance order and pulls out the
// requested metric.
std::vector<ConfigColumn> group_by_config(const std::vector<SweepResult>& results,
                                          const std::string& metric,
                                          std::vector<std::string>* dataset_order) {
    std::vector<ConfigColumn> columns;
    std::map<std::string, std::size_t> column_of;
    std::vector<std::string> datasets;
    for (const auto& res : results) {
        auto mv = res.metric_values.find(metric);
        if (mv == res.metric_values.end())
            throw std::invalid_argument("metric '" + metric +
                                        "' missing for dataset '" + res.dataset + "'");
        if (std::find(datasets.begin(), datasets.end(), res.dataset) ==
            datasets.end())
            datasets.push_back(res.dataset);
        const std::string key = param_key(res.params);
        auto [it, inserted] = column_of.emplace(key, columns.size());
        if (inserted) columns.push_back({res.params, {}});
        auto& column = columns[it->second];
        if (!column.value_by_dataset.emplace(res.dataset, mv->second).second)
            throw std::invalid_argument("duplicate result for config '" + key +
                                        "' on dataset '" + res.dataset + "'");
    }
    if (dataset_order) *dataset_order = datasets;
    return columns;
}

} // namespace

BiaResult best_in_average(const std::vector<SweepResult>& results,
                          const std::string& metric) {
    std::vector<std::string> datasets;
    auto columns = group_by_config(results, metric, &datasets);
    bool found = false;
    BiaResult best;
    for (const auto& column : columns) {
        if (!column.params) continue;  // baseline is not a candidate
        if (column.value_by_dataset.size() != datasets.size())
            throw std::invalid_argument(
                "ragged sweep results: config '" + param_key(column.params) +
                "' is missing on some dataset");
        double sum = 0.0;
        for (const auto& [name, v] : column.value_by_dataset) {
            (void)name;
            sum += v;
        }
        const double avg = sum / static_cast<double>(datasets.size());
        if (!found || avg > best.value) {
            best = {*column.params, avg};
            found = true;
        }
    }
    if (!found)
        throw std::invalid_argument("best_in_average: no non-baseline configs");
    return best;
}

OracleResult oracle(const std::vector<SweepResult>& results,
                    const std::string& metric) {
    OracleResult out;
    std::vector<std::string> dataset_order;
    std::map<std::string, OracleChoice> best;
    for (const auto& res : results) {
        auto mv = res.metric_values.find(metric);
        if (mv == res.metric_values.end())
            throw std::invalid_argument("metric '" + metric +
                                        "' missing for dataset '" + res.dataset + "'");
        auto it = best.find(res.dataset);
        if (it == best.end()) {
            dataset_order.push_back(res.dataset);
            best.emplace(res.dataset, OracleChoice{res.params, mv->second});
        } else if (mv->second > it->second.value) {
            it->second = {res.params, mv->second};
        }
    }
    if (best.empty()) throw std::invalid_argument("oracle: no results");
    double sum = 0.0;
    for (const auto& name : dataset_order) sum += best[name].value;
    out.value = sum / static_cast<double>(dataset_order.size());
    out.per_dataset = std::move(best);
    return out;
}

AggregateReport aggregate_results(const std::vector<SweepResult>& results) {
    AggregateReport report;
    for (const auto& res : results)
        for (const auto& [metric, v] : res.metric_values) {
            (void)v;
            if (std::find(report.metrics.begin(), report.metrics.end(), metric) ==
                report.metrics.end())
                report.metrics.push_back(metric);
        }
    if (report.metrics.empty())
        throw std::invalid_argument("aggregate_results: no metrics present");

    for (const auto& metric : report.metrics) {
        AggregateRow row;
        std::map<std::string, double> baseline_by_dataset;
        for (const auto& res : results) {
            if (res.params) continue;
            auto mv = res.metric_values.find(metric);
            if (mv == res.metric_values.end()) continue;
            if (!baseline_by_dataset.emplace(res.dataset, mv->second).second)
                throw std::invalid_argument("duplicate baseline for dataset '" +
                                            res.dataset + "'");
        }
        if (baseline_by_dataset.empty())
            throw std::invalid_argument("aggregate_results: no baseline rows");
        double sum = 0.0;
        for (const auto& [name, v] : baseline_by_dataset) {
            (void)name;
            sum += v;
        }
        row.baseline = sum / static_cast<double>(baseline_by_dataset.size());
        row.bia = best_in_average(results, metric);
        row.oracle = oracle(results, metric);
        row.bia_pct = percent_change(row.bia.value, row.baseline);
        row.oracle_pct = percent_change(row.oracle.value, row.baseline);
        report.rows.emplace(metric, std::move(row));
    }
    return report;
}

ReportFormat parse_report_format(std::string_view name) {
    if (name == "csv") return ReportFormat::csv;
    if (name == "markdown" || name == "md") return ReportFormat::markdown;
    throw std::invalid_argument("unknown report format '" + std::string(name) +
                                "' (expected csv|markdown)");
}

namespace {

void params_to_fields(const std::optional<VprfParams>& params, std::string& method,
                      std::string& kappa, std::string& alpha, std::string& beta) {
    if (!params) {
        method = "baseline";
        kappa = alpha = beta = "";
        return;
    }
    method = method_name(params->method);
    kappa = std::to_string(params->kappa);
    if (params->method == FeedbackMethod::rocchio) {
        alpha = detail::repr(params->alpha);
        beta = detail::repr(params->beta);
    } else {
        alpha = beta = "";
    }
}

std::optional<VprfParams> params_from_fields(std::string_view method,
                                             std::string_view kappa,
                                             std::string_view alpha,
                                             std::string_view beta,
                                             const std::string& where) {
    if (method == "baseline") return std::nullopt;
    VprfParams p;
    p.method = parse_method(method);
    p.kappa = static_cast<int>(detail::parse_long(kappa, where));
    if (p.method == FeedbackMethod::rocchio) {
        p.alpha = detail::parse_double(alpha, where);
        p.beta = detail::parse_double(beta, where);
    } else {
        p.alpha = 0.0;
        p.beta = 0.0;
    }
    p.normalize = false;
    return p;
}

constexpr std::string_view kSweepHeader =
    "dataset,method,kappa,alpha,beta,metric,value,per_query_time_s";

} // namespace

std::string sweep_results_to_csv(const std::vector<SweepResult>& results) {
    std::ostringstream out;
    out << kSweepHeader << '\n';
    for (const auto& res : results) {
        if (res.dataset.find(',') != std::string::npos)
            throw std::invalid_argument("dataset name contains a comma: '" +
                                        res.dataset + "'");
        std::string method, kappa, alpha, beta;
        params_to_fields(res.params, method, kappa, alpha, beta);
        for (const auto& [metric, value] : res.metric_values)
            out << res.dataset << ',' << method << ',' << kappa << ',' << alpha
                << ',' << beta << ',' << metric << ',' << detail::repr(value) << ','
                << detail::repr(res.per_query_time_s) << '\n';
    }
    return out.str();
}

std::vector<SweepResult> sweep_results_from_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    std::vector<SweepResult> results;
    std::map<std::string, std::size_t> index_of;
    bool saw_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view view = detail::strip_cr(line);
        if (detail::blank(view)) continue;
        if (!saw_header) {
            if (view != kSweepHeader)
                throw std::runtime_error("sweep csv line 1: unexpected header '" +
                                         std::string(view) + "'");
            saw_header = true;
            continue;
        }
        const std::string where = "sweep csv line " + std::to_string(line_no);
        auto fields = detail::split(view, ',');
        if (fields.size() != 8)
            throw std::runtime_error(where + ": expected 8 fields, got " +
                                     std::to_string(fields.size()));
        if (fields[0].empty()) throw std::runtime_error(where + ": empty dataset");
        auto params = params_from_fields(fields[1], fields[2], fields[3], fields[4],
                                         where);
        const std::string key = std::string(fields[0]) + "\x1f" + param_key(params);
        auto [it, inserted] = index_of.emplace(key, results.size());
        if (inserted) {
            SweepResult res;
            res.dataset = std::string(fields[0]);
            res.params = params;
            res.per_query_time_s = detail::parse_double(fields[7], where);
            results.push_back(std::move(res));
        }
        auto& res = results[it->second];
        if (!res.metric_values
                 .emplace(std::string(fields[5]),
                          detail::parse_double(fields[6], where))
                 .second)
            throw std::runtime_error(where + ": duplicate metric row");
    }
    if (!saw_header) throw std::runtime_error("sweep csv: empty input");
    return results;
}

namespace {

constexpr std::string_view kOracleLabel = "per-dataset best";

constexpr std::string_view kReportHeader =
    "metric,row,dataset,method,kappa,alpha,beta,value,percent";

std::string report_csv(const AggregateReport& report) {
    std::ostringstream out;
    out << kReportHeader << '\n';
    for (const auto& metric : report.metrics) {
        const AggregateRow& row = report.rows.at(metric);
        out << metric << ",baseline,,,,,," << detail::repr(row.baseline) << ",\n";
        std::string method, kappa, alpha, beta;
        params_to_fields(row.bia.params, method, kappa, alpha, beta);
        out << metric << ",bia,," << method << ',' << kappa << ',' << alpha << ','
            << beta << ',' << detail::repr(row.bia.value) << ','
            << detail::fixed(row.bia_pct, 1) << '\n';
        out << metric << ",oracle,,,,,," << detail::repr(row.oracle.value) << ','
            << detail::fixed(row.oracle_pct, 1) << '\n';
        for (const auto& [dataset, choice] : row.oracle.per_dataset) {
            params_to_fields(choice.params, method, kappa, alpha, beta);
            out << metric << ",oracle_pick," << dataset << ',' << method << ','
                << kappa << ',' << alpha << ',' << beta << ','
                << detail::repr(choice.value) << ",\n";
        }
    }
    return out.str();
}

std::string report_markdown(const AggregateReport& report) {
    std::ostringstream out;
    out << "| Metric | Method | Params | Value |\n";
    out << "| --- | --- | --- | --- |\n";
    for (const auto& metric : report.metrics) {
        const AggregateRow& row = report.rows.at(metric);
        const double best =
            std::max({row.baseline, row.bia.value, row.oracle.value});
        auto cell = [&](double value, const std::string& text) {
            return value == best ? "**" + text + "**" : text;
        };
        out << "| " << metric << " | Baseline |  | "
            << cell(row.baseline, detail::fixed(row.baseline, 4)) << " |\n";
        out << "| " << metric << " | BIA | " << params_label(row.bia.params)
            << " | "
            << cell(row.bia.value, format_metric_cell(row.bia.value, row.bia_pct))
            << " |\n";
        out << "| " << metric << " | Oracle | " << kOracleLabel << " | "
            << cell(row.oracle.value,
                    format_metric_cell(row.oracle.value, row.oracle_pct))
            << " |\n";
    }
    out << "\nOracle picks:\n\n";
    out << "| Metric | Dataset | Params | Value |\n";
    out << "| --- | --- | --- | --- |\n";
    for (const auto& metric : report.metrics) {
        const AggregateRow& row = report.rows.at(metric);
        for (const auto& [dataset, choice] : row.oracle.per_dataset)
            out << "| " << metric << " | " << dataset << " | "
                << (choice.params ? params_label(*choice.params) : "baseline")
                << " | " << detail::fixed(choice.value, 4) << " |\n";
    }
    return out.str();
}

} // namespace

std::string emit_report(const AggregateReport& report, ReportFormat format) {
    return format == ReportFormat::csv ? report_csv(report)
                                       : report_markdown(report);
}

AggregateReport parse_report_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    bool saw_header = false;
    AggregateReport report;
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view view = detail::strip_cr(line);
        if (detail::blank(view)) continue;
        if (!saw_header) {
            if (view != kReportHeader)
                throw std::runtime_error("report csv line 1: unexpected header");
            saw_header = true;
            continue;
        }
        const std::string where = "report csv line " + std::to_string(line_no);
        auto fields = detail::split(view, ',');
        if (fields.size() != 9)
            throw std::runtime_error(where + ": expected 9 fields, got " +
                                     std::to_string(fields.size()));
        const std::string metric(fields[0]);
        const std::string_view kind = fields[1];
        const double value = detail::parse_double(fields[7], where);
        if (kind == "baseline") {
            if (std::find(report.metrics.begin(), report.metrics.end(), metric) ==
                report.metrics.end())
                report.metrics.push_back(metric);
            report.rows[metric].baseline = value;
        } else if (kind == "bia") {
            auto params = params_from_fields(fields[3], fields[4], fields[5],
                                             fields[6], where);
            if (!params) throw std::runtime_error(where + ": bia row lacks params");
            report.rows[metric].bia = {*params, value};
        } else if (kind == "oracle") {
            report.rows[metric].oracle.value = value;
        } else if (kind == "oracle_pick") {
            auto params = params_from_fields(fields[3], fields[4], fields[5],
                                             fields[6], where);
            report.rows[metric].oracle.per_dataset[std::string(fields[2])] = {
                params, value};
        } else {
            throw std::runtime_error(where + ": unknown row kind '" +
                                     std::string(kind) + "'");
        }
    }
    if (!saw_header) throw std::runtime_error("report csv: empty input");
    for (const auto& metric : report.metrics) {
        AggregateRow& row = report.rows.at(metric);
        row.bia_pct = percent_change(row.bia.value, row.baseline);
        row.oracle_pct = percent_change(row.oracle.value, row.baseline);
    }
    return report;
}

namespace {

double median(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    if (n % 2 == 1) return values[n / 2];
    return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

} // namespace

TimingResult time_per_query(const FlatIndex& index,
                            const EmbeddingCorpus& queries,
                            const std::optional<VprfParams>& params, int k_final,
                            int warmup, int repetitions) {
    validate_corpus(queries);
    if (repetitions < 1)
        throw std::invalid_argument("repetitions must be >= 1");
    if (warmup < 0) throw std::invalid_argument("warmup must be >= 0");
    const std::size_t nq = queries.size();

    // Stage 1 is excluded from the measurement: feedback pools are gathered
    // up front.
    std::vector<std::vector<ScoredHit>> first_pass(nq);
    if (params)
        for (std::size_t i = 0; i < nq; ++i)
            first_pass[i] = index.search(queries.records[i].vector, params->kappa);

    volatile double sink = 0.0;
    auto one_pass = [&](double& refine_s, double& search_s) {
        refine_s = 0.0;
        search_s = 0.0;
        for (std::size_t i = 0; i < nq; ++i) {
            const auto& qv = queries.records[i].vector;
            if (params) {
                auto t0 = Clock::now();
                FeedbackSet fb = gather_feedback(index, first_pass[i], params->kappa);
                std::vector<float> refined = refine_query(qv, fb, *params);
                auto t1 = Clock::now();
                auto hits = index.search(refined, k_final);
                auto t2 = Clock::now();
                refine_s += std::chrono::duration<double>(t1 - t0).count();
                search_s += std::chrono::duration<double>(t2 - t1).count();
                sink = sink + hits.front().score;
            } else {
                auto t0 = Clock::now();
                auto hits = index.search(qv, k_final);
                auto t1 = Clock::now();
                search_s += std::chrono::duration<double>(t1 - t0).count();
                sink = sink + hits.front().score;
            }
        }
    };

    double refine_s = 0.0, search_s = 0.0;
    for (int w = 0; w < warmup; ++w) one_pass(refine_s, search_s);

    std::vector<double> totals, refines, searches;
    for (int rep = 0; rep < repetitions; ++rep) {
        one_pass(refine_s, search_s);
        totals.push_back((refine_s + search_s) / double(nq));
        refines.push_back(refine_s / double(nq));
        searches.push_back(search_s / double(nq));
    }
    return {median(totals), median(refines), median(searches)};
}

std::string format_timing_table(const std::vector<TimingRow>& rows) {
    std::ostringstream out;
    out << "| Method | Per-query (s) |\n";
    out << "| --- | --- |\n";
    for (const auto& row : rows)
        out << "| " << row.label << " | " << detail::fixed(row.timing.per_query_s, 4)
            << "s |\n";
    return out.str();
}

} // namespace vprf
