#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vprf/flat_index.hpp"

namespace vprf {

enum class FeedbackMethod { average, rocchio };

std::string method_name(FeedbackMethod m);
FeedbackMethod parse_method(std::string_view name);

struct VprfParams {
    FeedbackMethod method = FeedbackMethod::rocchio;
    int kappa = 3;       // feedback depth
    double alpha = 1.0;  // query weight (rocchio only)
    double beta = 0.5;   // feedback weight (rocchio only)
    bool normalize = false;  // L2-normalize inputs before combining

    friend bool operator==(const VprfParams&, const VprfParams&) = default;
};

std::string params_label(const VprfParams& p);  // "rocchio k=3 a=1 b=0.5"

struct FeedbackPassage {
    std::string doc_id;
    std::vector<float> vector;
};

// Passages from ranks 1..kappa of a first-pass result, in rank order.
struct FeedbackSet {
    std::vector<FeedbackPassage> passages;

    std::size_t size() const { return passages.size(); }
    bool empty() const { return passages.empty(); }
};

// Copies the top-kappa hit vectors out of the index. Fewer than kappa only
// when the result list is shorter.
FeedbackSet gather_feedback(const FlatIndex& index,
                            std::span<const ScoredHit> first_pass, int kappa);

// Componentwise mean of the query vector and all feedback vectors
// (kappa + 1 equally weighted terms).
std::vector<float> average_feedback(std::span<const float> query,
                                    const FeedbackSet& feedback);

// alpha * query + beta * mean(feedback vectors); the query is excluded
// from the mean. alpha and beta must be >= 0 and not both zero.
std::vector<float> rocchio_feedback(std::span<const float> query,
                                    const FeedbackSet& feedback,
                                    double alpha, double beta);

// Dispatch on params.method, honoring params.normalize.
std::vector<float> refine_query(std::span<const float> query,
                                const FeedbackSet& feedback,
                                const VprfParams& params);

// Two-stage pipeline: retrieve top-kappa, refine the query vector, retrieve
// top-k_final with the refined vector.
std::vector<ScoredHit> run_vprf(const FlatIndex& index,
                                const EmbeddingRecord& query,
                                const VprfParams& params, int k_final);

enum class GridVariant { alpha_beta_grid, fixed_alpha_one, average };

GridVariant parse_grid_variant(std::string_view name);

struct GridSpec {
    GridVariant variant = GridVariant::alpha_beta_grid;
    std::vector<int> kappa_set = {1, 2, 3, 5, 10};
};

// Deterministic enumeration: kappa outer, then alpha, then beta ascending.
// Weights run over {0.1, ..., 0.9}; fixed_alpha_one pins alpha = 1.
std::vector<VprfParams> param_grid(const GridSpec& spec);

} // namespace vprf
