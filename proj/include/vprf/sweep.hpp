#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vprf/embeddings.hpp"
#include "vprf/eval.hpp"
#include "vprf/feedback.hpp"

namespace vprf {

struct Dataset {
    std::string name;
    EmbeddingCorpus passages;
    EmbeddingCorpus queries;
    Qrels qrels;
};

struct MetricConfig {
    int ndcg_k = 10;
    int recall_k = 100;
    int min_grade = 1;

    std::vector<std::string> names() const;  // {"ndcg@10", "recall@100"}
};

struct SweepResult {
    std::string dataset;
    std::optional<VprfParams> params;  // nullopt = baseline
    std::map<std::string, double> metric_values;
    double per_query_time_s = 0.0;  // refine + second stage; single stage for baseline
};

// One baseline result per dataset plus one result per (dataset, config).
// Dataset failures are isolated: reported through `errors` and skipped.
std::vector<SweepResult> run_sweep(const std::vector<Dataset>& datasets,
                                   const std::vector<VprfParams>& grid,
                                   const MetricConfig& cfg, int threads = 1,
                                   std::vector<std::string>* errors = nullptr);

struct BiaResult {
    VprfParams params;
    double value = 0.0;
};

// Best-In-Average: the config maximizing `metric` averaged across datasets.
// Requires every config to appear for every dataset; ties keep the first
// config in enumeration order. Baseline rows are not candidates.
BiaResult best_in_average(const std::vector<SweepResult>& results,
                          const std::string& metric);

struct OracleChoice {
    std::optional<VprfParams> params;  // nullopt when baseline wins
    double value = 0.0;
};

struct OracleResult {
    double value = 0.0;
    std::map<std::string, OracleChoice> per_dataset;
};

// Per-dataset max over all configs and the baseline, then averaged.
OracleResult oracle(const std::vector<SweepResult>& results,
                    const std::string& metric);

struct AggregateRow {
    double baseline = 0.0;
    BiaResult bia;
    OracleResult oracle;
    double bia_pct = 0.0;
    double oracle_pct = 0.0;
};

struct AggregateReport {
    std::vector<std::string> metrics;  // emission order
    std::map<std::string, AggregateRow> rows;
};

AggregateReport aggregate_results(const std::vector<SweepResult>& results);

enum class ReportFormat { csv, markdown };

ReportFormat parse_report_format(std::string_view name);

// Deterministic byte output. Markdown bolds the per-metric best value and
// prints metric cells as "0.6972(1.6%)"; percent changes to one decimal.
std::string emit_report(const AggregateReport& report, ReportFormat format);

// Inverse of emit_report(csv): values restored exactly, percents recomputed.
AggregateReport parse_report_csv(const std::string& text);

// Sweep CSV schema: dataset,method,kappa,alpha,beta,metric,value,per_query_time_s
std::string sweep_results_to_csv(const std::vector<SweepResult>& results);
std::vector<SweepResult> sweep_results_from_csv(const std::string& text);

struct TimingResult {
    double per_query_s = 0.0;  // refine + second-stage search per query
    double refine_per_query_s = 0.0;
    double search_per_query_s = 0.0;
};

// Median over `repetitions` of per-query wall time, after `warmup` unrecorded
// passes. First-stage retrieval is excluded for VPRF configs; baseline
// (nullopt params) measures the single-stage search alone. Runs single
// threaded.
TimingResult time_per_query(const FlatIndex& index,
                            const EmbeddingCorpus& queries,
                            const std::optional<VprfParams>& params,
                            int k_final, int warmup, int repetitions);

struct TimingRow {
    std::string label;
    TimingResult timing;
};

// Markdown table with one per-query seconds row per method.
std::string format_timing_table(const std::vector<TimingRow>& rows);

} // namespace vprf
