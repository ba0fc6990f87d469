#include "fairdetect/metrics.hpp"

#include <cmath>
#include <set>

#include "fairdetect/errors.hpp"

namespace fairdetect {

ConfusionCounts confusion(std::span<const int> predictions, std::span<const int> labels) {
    if (predictions.size() != labels.size()) {
        throw DataError("confusion: prediction/label length mismatch");
    }
    if (predictions.empty()) throw DataError("confusion: empty input");
    ConfusionCounts c;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const int pred = predictions[i];
        const int lab = labels[i];
        if ((pred != 0 && pred != 1) || (lab != 0 && lab != 1)) {
            throw DataError("confusion: entries must be 0 or 1");
        }
        if (pred == 1 && lab == 1) ++c.tp;
        if (pred == 1 && lab == 0) ++c.fp;
        if (pred == 0 && lab == 0) ++c.tn;
        if (pred == 0 && lab == 1) ++c.fn;
    }
    return c;
}

GroupMetrics metrics_from_counts(const GroupKey& group, const ConfusionCounts& c) {
    GroupMetrics m;
    m.group = group;
    m.counts = c;
    if (c.tp + c.fn > 0) m.tpr = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
    if (c.tp + c.fp > 0) m.precision = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
    if (2 * c.tp + c.fp + c.fn > 0) {
        m.f1 = 2.0 * static_cast<double>(c.tp) / static_cast<double>(2 * c.tp + c.fp + c.fn);
    }
    std::optional<double> tnr;
    if (c.tn + c.fp > 0) tnr = static_cast<double>(c.tn) / static_cast<double>(c.tn + c.fp);
    if (m.tpr && tnr) m.balanced_accuracy = 0.5 * (*m.tpr + *tnr);
    return m;
}

std::map<GroupKey, GroupMetrics> group_metrics(std::span<const int> predictions,
                                               std::span<const int> labels,
                                               std::span<const GroupKey> groups,
                                               std::span<const GroupKey> roster,
                                               std::vector<std::string>* warnings) {
    if (predictions.size() != labels.size() || predictions.size() != groups.size()) {
        throw DataError("group_metrics: misaligned inputs");
    }
    std::map<GroupKey, std::pair<std::vector<int>, std::vector<int>>> by_group;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        auto& bucket = by_group[groups[i]];
        bucket.first.push_back(predictions[i]);
        bucket.second.push_back(labels[i]);
    }
    std::map<GroupKey, GroupMetrics> out;
    for (const auto& [key, lists] : by_group) {
        out[key] = metrics_from_counts(key, confusion(lists.first, lists.second));
    }
    for (const auto& expected : roster) {
        if (!out.count(expected) && warnings) {
            warnings->push_back("group " + expected.attribute + "=" + expected.value +
                                " has zero members; omitted");
        }
    }
    return out;
}

double equalized_odds(double tpr_reference, double tpr_sensitive) {
    if (tpr_reference < 0.0 || tpr_reference > 1.0 || tpr_sensitive < 0.0 || tpr_sensitive > 1.0) {
        throw DataError("equalized_odds: TPR values must lie in [0,1]");
    }
    return 1.0 - std::fabs(tpr_reference - tpr_sensitive);
}

double eo_gap(const std::map<GroupKey, GroupMetrics>& metrics) {
    std::vector<double> tprs;
    for (const auto& [key, m] : metrics) {
        if (m.tpr) tprs.push_back(*m.tpr);
    }
    if (tprs.size() < 2) {
        throw DataError("eo_gap: need at least 2 groups with defined TPR");
    }
    double gap = 0.0;
    for (std::size_t i = 0; i < tprs.size(); ++i) {
        for (std::size_t j = i + 1; j < tprs.size(); ++j) {
            gap = std::max(gap, std::fabs(tprs[i] - tprs[j]));
        }
    }
    return gap;
}

}  // namespace fairdetect
