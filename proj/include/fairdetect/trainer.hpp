#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fairdetect/corpus.hpp"
#include "fairdetect/metrics.hpp"

namespace fairdetect {

enum class LossMode { cross_entropy, worst_group, fairness_regularized };

LossMode loss_mode_from_string(const std::string& name);
std::string loss_mode_name(LossMode mode);

struct LossConfig {
    LossMode mode = LossMode::cross_entropy;
    double lambda = 0.0;  // fairness_regularized only
    std::vector<double> lambda_grid{0.2, 0.25, 0.3, 0.35, 0.4};
};

// Decomposition of one batch loss. per_group is indexed by group id in
// schema order; groups absent from the batch stay unset.
struct LossBreakdown {
    double base = 0.0;
    std::vector<std::optional<double>> per_group;
    double penalty = 0.0;
    double total = 0.0;
    int argmax_group = -1;
    std::pair<int, int> argmax_pair{-1, -1};
};

struct Hyperparams {
    double learning_rate = 0.1;
    int epochs = 1000;
    int hidden_width = 0;  // 0 = linear head
    std::uint64_t seed = 0;
};

// Two-class scoring head. Linear when hidden_width == 0, otherwise one
// tanh hidden layer. Weights are row-major flat arrays.
struct ModelParams {
    int input_dim = 0;
    int hidden_width = 0;
    std::vector<double> hidden_w;  // hidden_width x input_dim
    std::vector<double> hidden_b;  // hidden_width
    std::vector<double> out_w;     // 2 x (hidden_width ? hidden_width : input_dim)
    std::vector<double> out_b;     // 2

    std::size_t parameter_count() const;
    std::vector<double> flatten() const;
    void unflatten(std::span<const double> flat);
};

struct FeatureMatrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> data;  // row-major

    const double* row(int i) const { return data.data() + static_cast<std::size_t>(i) * cols; }
};

// Negative log softmax probability of the true class.
double cross_entropy(double score0, double score1, int label);

LossBreakdown worst_group_loss(std::span<const double> per_sample_ce, std::span<const int> group_ids,
                               int n_groups);

LossBreakdown fairness_regularized_loss(std::span<const double> per_sample_ce,
                                        std::span<const int> group_ids, int n_groups, double lambda,
                                        std::vector<std::string>* warnings = nullptr);

LossBreakdown batch_loss(const LossConfig& config, std::span<const double> per_sample_ce,
                         std::span<const int> group_ids, int n_groups,
                         std::vector<std::string>* warnings = nullptr);

// dTotal/dCE_i for the configured mode; the max operators route gradient
// through the argmax group only (ties break to the lowest group id).
std::vector<double> loss_sample_weights(const LossConfig& config, const LossBreakdown& breakdown,
                                        std::span<const int> group_ids, int n_groups);

ModelParams init_model(int input_dim, const Hyperparams& hp);

void forward_scores(const ModelParams& params, const FeatureMatrix& X,
                    std::vector<double>& scores /* rows x 2 */);

struct LossAndGrad {
    LossBreakdown breakdown;
    std::vector<double> gradient;  // aligned with ModelParams::flatten()
};

LossAndGrad loss_and_gradient(const ModelParams& params, const FeatureMatrix& X,
                              std::span<const int> labels, std::span<const int> group_ids,
                              int n_groups, const LossConfig& config);

using EpochLogFn = std::function<void(int epoch, const LossBreakdown&)>;

// Full-batch gradient descent; deterministic given the seed.
ModelParams train(const FeatureMatrix& X, std::span<const int> labels,
                  std::span<const int> group_ids, int n_groups, const LossConfig& config,
                  const Hyperparams& hp, const EpochLogFn& log = nullptr);

// Argmax of scores, ties to 1.
std::vector<int> predict(const ModelParams& params, const FeatureMatrix& X,
                         std::vector<double>* scores_out = nullptr);

std::string model_to_json(const ModelParams& params);
ModelParams model_from_json(const std::string& json_text);

// ----- participant-level cohorts and cross-validation -----

struct CohortItem {
    std::string id;
    int label = 0;
    int group_id = 0;
    std::vector<std::vector<double>> instances;  // one row per chunk (or the embedding)
};

struct Cohort {
    std::string attribute;
    std::vector<GroupKey> group_keys;  // schema order
    std::vector<CohortItem> items;
    int feature_dim = 0;
};

struct CohortOptions {
    FeatureSpace features;   // text path featurization
    int window_words = 300;
    int overlap_words = 80;
};

// Embeddings are used when every selected participant has one; otherwise
// every transcript is chunked and term-frequency featurized.
Cohort build_cohort(const Dataset& dataset, std::span<const int> participant_indices,
                    const std::string& attribute, const CohortOptions& options = {});

struct FoldAssignment {
    int k = 5;
    std::vector<int> fold_of;  // aligned with cohort items
};

// Participant-level stratification over (group, label) cells.
FoldAssignment stratified_folds(const Cohort& cohort, int k, std::uint64_t seed);

struct FoldMetrics {
    int fold = 0;
    std::vector<std::string> test_ids;
    std::map<GroupKey, GroupMetrics> per_group;
    ConfusionCounts pooled;
};

struct CvResult {
    FoldAssignment folds;
    std::vector<FoldMetrics> fold_metrics;
    std::vector<std::string> warnings;
};

CvResult cross_validate(const Cohort& cohort, const LossConfig& config, const Hyperparams& hp,
                        int k, std::uint64_t seed);

struct LambdaGridPoint {
    double lambda = 0.0;
    double mean_inner_eo_gap = 0.0;
    double mean_inner_ba = 0.0;
    int defined_inner_folds = 0;
};

struct OuterFoldSelection {
    int outer_fold = 0;
    double chosen_lambda = 0.0;
    std::vector<LambdaGridPoint> grid;
};

struct LambdaSelection {
    int outer_k = 5;
    int inner_k = 3;
    std::vector<OuterFoldSelection> per_fold;
};

// Nested CV: per outer fold, the lambda minimizing the mean inner-fold EO
// gap; ties break to the smallest lambda.
LambdaSelection select_lambda(const Cohort& cohort, const LossConfig& grid_config,
                              const Hyperparams& hp, int outer_k, int inner_k, std::uint64_t seed);

}  // namespace fairdetect
