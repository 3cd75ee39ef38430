#include "vprf/feedback.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "vprf/detail/text.hpp"

namespace vprf {

std::string method_name(FeedbackMethod m) {
    return m == FeedbackMethod::average ? "average" : "rocchio";
}

FeedbackMethod parse_method(std::string_view name) {
    if (name == "average") return FeedbackMethod::average;
    if (name == "rocchio") return FeedbackMethod::rocchio;
    throw std::invalid_argument("unknown feedback method '" + std::string(name) +
                                "' (expected average|rocchio)");
}

std::string params_label(const VprfParams& p) {
    std::string label = method_name(p.method) + " k=" + std::to_string(p.kappa);
    if (p.method == FeedbackMethod::rocchio)
        label += " a=" + detail::repr(p.alpha) + " b=" + detail::repr(p.beta);
    if (p.normalize) label += " norm";
    return label;
}

FeedbackSet gather_feedback(const FlatIndex& index,
                            std::span<const ScoredHit> first_pass, int kappa) {
    if (kappa < 1) throw std::invalid_argument("kappa must be >= 1");
    const std::size_t take = std::min<std::size_t>(kappa, first_pass.size());
    FeedbackSet fb;
    fb.passages.reserve(take);
    for (std::size_t i = 0; i < take; ++i) {
        const auto& hit = first_pass[i];
        auto row = index.row_of(hit.doc_id);
        if (!row)
            throw std::invalid_argument("feedback doc '" + hit.doc_id +
                                        "' is not in the index");
        auto view = index.vector_at(*row);
        fb.passages.push_back({hit.doc_id, {view.begin(), view.end()}});
    }
    return fb;
}

namespace {

void check_dims(std::span<const float> query, const FeedbackSet& feedback) {
    if (feedback.empty()) throw std::invalid_argument("feedback set is empty");
    for (const auto& p : feedback.passages)
        if (p.vector.size() != query.size())
            throw std::invalid_argument(
                "feedback vector dimension " + std::to_string(p.vector.size()) +
                " does not match query dimension " + std::to_string(query.size()));
}

// Sum of feedback vectors, f64 accumulators.
std::vector<double> feedback_sum(std::span<const float> query,
                                 const FeedbackSet& feedback) {
    std::vector<double> acc(query.size(), 0.0);
    for (const auto& p : feedback.passages)
        for (std::size_t d = 0; d < acc.size(); ++d)
            acc[d] += static_cast<double>(p.vector[d]);
    return acc;
}

std::vector<float> normalized_copy(std::span<const float> v) {
    const double norm = l2_norm(v);
    if (!(norm > 0.0))
        throw std::invalid_argument("cannot normalize a zero-norm vector");
    std::vector<float> out(v.size());
    for (std::size_t d = 0; d < v.size(); ++d)
        out[d] = static_cast<float>(v[d] / norm);
    return out;
}

} // namespace

std::vector<float> average_feedback(std::span<const float> query,
                                    const FeedbackSet& feedback) {
    check_dims(query, feedback);
    std::vector<double> acc = feedback_sum(query, feedback);
    const double terms = static_cast<double>(feedback.size()) + 1.0;
    std::vector<float> out(query.size());
    for (std::size_t d = 0; d < out.size(); ++d)
        out[d] = static_cast<float>((acc[d] + query[d]) / terms);
    return out;
}

std::vector<float> rocchio_feedback(std::span<const float> query,
                                    const FeedbackSet& feedback, double alpha,
                                    double beta) {
    check_dims(query, feedback);
    if (alpha < 0.0 || beta < 0.0)
        throw std::invalid_argument("alpha and beta must be >= 0");
    if (alpha == 0.0 && beta == 0.0)
        throw std::invalid_argument("alpha and beta cannot both be zero");
    std::vector<double> acc = feedback_sum(query, feedback);
    const double inv_count = 1.0 / static_cast<double>(feedback.size());
    std::vector<float> out(query.size());
    for (std::size_t d = 0; d < out.size(); ++d)
        out[d] = static_cast<float>(alpha * query[d] + beta * acc[d] * inv_count);
    return out;
}

std::vector<float> refine_query(std::span<const float> query,
                                const FeedbackSet& feedback,
                                const VprfParams& params) {
    if (!params.normalize) {
        if (params.method == FeedbackMethod::average)
            return average_feedback(query, feedback);
        return rocchio_feedback(query, feedback, params.alpha, params.beta);
    }
    std::vector<float> unit_query = normalized_copy(query);
    FeedbackSet unit_fb;
    unit_fb.passages.reserve(feedback.size());
    for (const auto& p : feedback.passages)
        unit_fb.passages.push_back({p.doc_id, normalized_copy(p.vector)});
    if (params.method == FeedbackMethod::average)
        return average_feedback(unit_query, unit_fb);
    return rocchio_feedback(unit_query, unit_fb, params.alpha, params.beta);
}

std::vector<ScoredHit> run_vprf(const FlatIndex& index,
                                const EmbeddingRecord& query,
                                const VprfParams& params, int k_final) {
    if (k_final < 1) throw std::invalid_argument("k_final must be >= 1");
    std::vector<ScoredHit> first_pass = index.search(query.vector, params.kappa);
    FeedbackSet fb = gather_feedback(index, first_pass, params.kappa);
    std::vector<float> refined = refine_query(query.vector, fb, params);
    return index.search(refined, k_final);
}

GridVariant parse_grid_variant(std::string_view name) {
    if (name == "alpha-beta" || name == "alpha_beta_grid")
        return GridVariant::alpha_beta_grid;
    if (name == "fixed-alpha-one" || name == "fixed_alpha_one")
        return GridVariant::fixed_alpha_one;
    if (name == "average") return GridVariant::average;
    throw std::invalid_argument("unknown grid variant '" + std::string(name) +
                                "' (expected alpha-beta|fixed-alpha-one|average)");
}

std::vector<VprfParams> param_grid(const GridSpec& spec) {
    std::vector<VprfParams> grid;
    const auto weights = [] {
        std::vector<double> w;
        for (int i = 1; i <= 9; ++i) w.push_back(i / 10.0);
        return w;
    }();

    for (int kappa : spec.kappa_set) {
        if (kappa < 1) throw std::invalid_argument("kappa values must be >= 1");
        switch (spec.variant) {
        case GridVariant::alpha_beta_grid:
            for (double alpha : weights)
                for (double beta : weights)
                    grid.push_back({FeedbackMethod::rocchio, kappa, alpha, beta, false});
            break;
        case GridVariant::fixed_alpha_one:
            for (double beta : weights)
                grid.push_back({FeedbackMethod::rocchio, kappa, 1.0, beta, false});
            break;
        case GridVariant::average:
            grid.push_back({FeedbackMethod::average, kappa, 0.0, 0.0, false});
            break;
        }
    }
    return grid;
}

} // namespace vprf
