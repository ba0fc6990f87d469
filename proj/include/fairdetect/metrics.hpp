#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fairdetect/corpus.hpp"

namespace fairdetect {

struct ConfusionCounts {
    long tp = 0;
    long fp = 0;
    long tn = 0;
    long fn = 0;
    long total() const { return tp + fp + tn + fn; }
};

// Ratios with zero denominators stay unset here; reports map them to 0.0
// when zero_denominator_as_zero is on.
struct GroupMetrics {
    GroupKey group;
    ConfusionCounts counts;
    std::optional<double> tpr;
    std::optional<double> precision;
    std::optional<double> f1;
    std::optional<double> balanced_accuracy;
};

ConfusionCounts confusion(std::span<const int> predictions, std::span<const int> labels);

GroupMetrics metrics_from_counts(const GroupKey& group, const ConfusionCounts& counts);

// Per-group metrics over aligned lists. With a `roster`, groups that have
// zero members are omitted and a warning is appended.
std::map<GroupKey, GroupMetrics> group_metrics(std::span<const int> predictions,
                                               std::span<const int> labels,
                                               std::span<const GroupKey> groups,
                                               std::span<const GroupKey> roster = {},
                                               std::vector<std::string>* warnings = nullptr);

// EO = 1 - |TPR_reference - TPR_sensitive|.
double equalized_odds(double tpr_reference, double tpr_sensitive);

// Max pairwise |TPR_i - TPR_j| over groups with defined TPR; needs >= 2.
double eo_gap(const std::map<GroupKey, GroupMetrics>& metrics);

}  // namespace fairdetect
