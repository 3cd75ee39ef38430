#pragma once

#include <map>
#include <string>
#include <vector>

namespace vprf {

// Relevance judgments: query id -> doc id -> integer grade >= 0.
// At most one judgment per (query, doc) pair.
struct Qrels {
    std::map<std::string, std::map<std::string, int>> judgments;

    // 0 when the pair is unjudged (standard pooling assumption).
    int grade(const std::string& query_id, const std::string& doc_id) const;
    bool has_query(const std::string& query_id) const;
    std::size_t num_judged() const;
};

// TREC 4-column qrels: `query_id iteration doc_id grade`, whitespace separated.
Qrels load_qrels(const std::string& path);
void save_qrels(const Qrels& qrels, const std::string& path);

struct RunEntry {
    std::string doc_id;
    double score = 0.0;

    friend bool operator==(const RunEntry&, const RunEntry&) = default;
};

// Per-query ranked lists, scores non-increasing, ranks implicit 1..n.
// No duplicate doc within a query.
struct RankedRun {
    std::string tag = "vprf";
    std::map<std::string, std::vector<RunEntry>> queries;
};

// Throws on duplicate docs or out-of-order scores.
void validate_run(const RankedRun& run);

// TREC 6-column run format: `query_id Q0 doc_id rank score tag`.
RankedRun load_run(const std::string& path);
void save_run(const RankedRun& run, const std::string& path);

struct MetricReport {
    std::string metric;
    std::map<std::string, double> per_query;    // queries entering the mean
    double mean = 0.0;
    std::vector<std::string> unjudged_queries;  // run queries absent from qrels
    std::vector<std::string> excluded_queries;  // qrels queries with no relevant doc (recall only)
};

// DCG@k with grade / log2(rank + 1) discount, IDCG from grades sorted
// descending; nDCG = 0 when IDCG = 0. Every qrels query enters the mean;
// queries missing from the run score 0.
MetricReport ndcg_at_k(const RankedRun& run, const Qrels& qrels, int k = 10);

// Fraction of docs with grade >= min_grade retrieved in the top k. Queries
// with no relevant docs are excluded from the mean.
MetricReport recall_at_k(const RankedRun& run, const Qrels& qrels, int k = 100,
                         int min_grade = 1);

// 100 * (value - baseline) / baseline. Throws when baseline <= 0.
double percent_change(double value, double baseline);

std::string format_percent(double pct);                    // "1.6%", "-0.4%"
std::string format_metric_cell(double value, double pct);  // "0.6972(1.6%)"

} // namespace vprf
