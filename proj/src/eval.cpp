#include "vprf/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <stdexcept>

#include "vprf/detail/io.hpp"
#include "vprf/detail/text.hpp"

namespace vprf {

int Qrels::grade(const std::string& query_id, const std::string& doc_id) const {
    auto q = judgments.find(query_id);
    if (q == judgments.end()) return 0;
    auto d = q->second.find(doc_id);
    return d == q->second.end() ? 0 : d->second;
}

bool Qrels::has_query(const std::string& query_id) const {
    return judgments.count(query_id) != 0;
}

std::size_t Qrels::num_judged() const {
    std::size_t n = 0;
    for (const auto& [qid, docs] : judgments) { (void)qid; n += docs.size(); }
    return n;
}

Qrels load_qrels(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    Qrels qrels;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view view = detail::strip_cr(line);
        if (detail::blank(view)) continue;
        auto fields = detail::tokens(view);
        const std::string where = path + " line " + std::to_string(line_no);
        if (fields.size() != 4)
            throw std::runtime_error(where + ": expected 4 fields, got " +
                                     std::to_string(fields.size()));
        long grade = detail::parse_long(fields[3], where);
        if (grade < 0)
            throw std::runtime_error(where + ": negative relevance grade");
        auto [it, inserted] = qrels.judgments[std::string(fields[0])].emplace(
            std::string(fields[2]), static_cast<int>(grade));
        (void)it;
        if (!inserted)
            throw std::runtime_error(where + ": duplicate judgment for (" +
                                     std::string(fields[0]) + ", " +
                                     std::string(fields[2]) + ")");
    }
    return qrels;
}

void save_qrels(const Qrels& qrels, const std::string& path) {
    detail::atomic_write(path, [&](std::ostream& out) {
        for (const auto& [qid, docs] : qrels.judgments)
            for (const auto& [did, grade] : docs)
                out << qid << " 0 " << did << ' ' << grade << '\n';
    });
}

void validate_run(const RankedRun& run) {
    for (const auto& [qid, entries] : run.queries) {
        std::map<std::string_view, int> seen;
        for (std::size_t i = 0; i < entries.size(); ++i) {
            if (!seen.emplace(entries[i].doc_id, 1).second)
                throw std::runtime_error("duplicate doc '" + entries[i].doc_id +
                                         "' for query '" + qid + "'");
            if (i > 0 && entries[i].score > entries[i - 1].score)
                throw std::runtime_error("scores increase at rank " +
                                         std::to_string(i + 1) + " for query '" +
                                         qid + "'");
        }
    }
}

RankedRun load_run(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    RankedRun run;
    run.tag.clear();
    std::map<std::string, std::vector<std::pair<long, RunEntry>>> staged;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view view = detail::strip_cr(line);
        if (detail::blank(view)) continue;
        auto fields = detail::tokens(view);
        const std::string where = path + " line " + std::to_string(line_no);
        if (fields.size() != 6)
            throw std::runtime_error(where + ": expected 6 fields, got " +
                                     std::to_string(fields.size()));
        long rank = detail::parse_long(fields[3], where);
        if (rank < 1) throw std::runtime_error(where + ": rank must be >= 1");
        double score = detail::parse_double(fields[4], where);
        staged[std::string(fields[0])].push_back(
            {rank, {std::string(fields[2]), score}});
        if (run.tag.empty()) run.tag = std::string(fields[5]);
    }
    for (auto& [qid, entries] : staged) {
        std::stable_sort(entries.begin(), entries.end(),
                         [](const auto& a, const auto& b) { return a.first < b.first; });
        auto& out = run.queries[qid];
        out.reserve(entries.size());
        for (std::size_t i = 0; i < entries.size(); ++i) {
            if (entries[i].first != static_cast<long>(i + 1))
                throw std::runtime_error(path + ": query '" + qid +
                                         "' ranks are not 1..n");
            out.push_back(std::move(entries[i].second));
        }
    }
    validate_run(run);
    return run;
}

void save_run(const RankedRun& run, const std::string& path) {
    validate_run(run);
    detail::atomic_write(path, [&](std::ostream& out) {
        for (const auto& [qid, entries] : run.queries)
            for (std::size_t i = 0; i < entries.size(); ++i)
                out << qid << " Q0 " << entries[i].doc_id << ' ' << (i + 1) << ' '
                    << detail::repr(entries[i].score) << ' ' << run.tag << '\n';
    });
}

namespace {

double mean_of(const std::map<std::string, double>& per_query) {
    if (per_query.empty()) return 0.0;
    double sum = 0.0;
    for (const auto& [qid, v] : per_query) { (void)qid; sum += v; }
    return sum / static_cast<double>(per_query.size());
}

std::vector<std::string> run_queries_not_in_qrels(const RankedRun& run,
                                                  const Qrels& qrels) {
    std::vector<std::string> out;
    for (const auto& [qid, entries] : run.queries) {
        (void)entries;
        if (!qrels.has_query(qid)) out.push_back(qid);
    }
    return out;
}

} // namespace

MetricReport ndcg_at_k(const RankedRun& run, const Qrels& qrels, int k) {
    if (k < 1) throw std::invalid_argument("k must be >= 1");
    MetricReport report;
    report.metric = "ndcg@" + std::to_string(k);
    for (const auto& [qid, judged] : qrels.judgments) {
        double dcg = 0.0;
        auto it = run.queries.find(qid);
        if (it != run.queries.end()) {
            const auto& entries = it->second;
            const std::size_t depth = std::min<std::size_t>(k, entries.size());
            for (std::size_t i = 0; i < depth; ++i) {
                auto j = judged.find(entries[i].doc_id);
                if (j != judged.end() && j->second > 0)
                    dcg += j->second / std::log2(static_cast<double>(i) + 2.0);
            }
        }
        std::vector<int> grades;
        grades.reserve(judged.size());
        for (const auto& [did, g] : judged) { (void)did; grades.push_back(g); }
        std::sort(grades.begin(), grades.end(), std::greater<int>());
        double idcg = 0.0;
        const std::size_t ideal_depth = std::min<std::size_t>(k, grades.size());
        for (std::size_t i = 0; i < ideal_depth; ++i)
            idcg += grades[i] / std::log2(static_cast<double>(i) + 2.0);
        report.per_query[qid] = idcg > 0.0 ? dcg / idcg : 0.0;
    }
    report.unjudged_queries = run_queries_not_in_qrels(run, qrels);
    report.mean = mean_of(report.per_query);
    return report;
}

MetricReport recall_at_k(const RankedRun& run, const Qrels& qrels, int k,
                         int min_grade) {
    if (k < 1) throw std::invalid_argument("k must be >= 1");
    MetricReport report;
    report.metric = "recall@" + std::to_string(k);
    for (const auto& [qid, judged] : qrels.judgments) {
        std::size_t relevant = 0;
        for (const auto& [did, g] : judged) {
            (void)did;
            if (g >= min_grade) ++relevant;
        }
        if (relevant == 0) {
            report.excluded_queries.push_back(qid);
            continue;
        }
        std::size_t retrieved = 0;
        auto it = run.queries.find(qid);
        if (it != run.queries.end()) {
            const auto& entries = it->second;
            const std::size_t depth = std::min<std::size_t>(k, entries.size());
            for (std::size_t i = 0; i < depth; ++i) {
                auto j = judged.find(entries[i].doc_id);
                if (j != judged.end() && j->second >= min_grade) ++retrieved;
            }
        }
        report.per_query[qid] =
            static_cast<double>(retrieved) / static_cast<double>(relevant);
    }
    report.unjudged_queries = run_queries_not_in_qrels(run, qrels);
    report.mean = mean_of(report.per_query);
    return report;
}

double percent_change(double value, double baseline) {
    if (!(baseline > 0.0))
        throw std::domain_error("percent_change: baseline must be > 0");
    return 100.0 * (value - baseline) / baseline;
}

std::string format_percent(double pct) {
    return detail::fixed(pct, 1) + "%";
}

std::string format_metric_cell(double value, double pct) {
    return detail::fixed(value, 4) + "(" + format_percent(pct) + ")";
}

} // namespace vprf
