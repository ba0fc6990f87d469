#include "fairdetect/balancer.hpp"

#include <algorithm>
#include <limits>

#include <json.hpp>

#include "fairdetect/errors.hpp"
#include "fairdetect/rng.hpp"

namespace fairdetect {

std::vector<BalanceCell> balance_cells(const Dataset& dataset, const std::string& attribute) {
    const auto& values = dataset.schema.values_of(attribute);
    std::vector<BalanceCell> cells;
    for (const auto& value : values) {
        for (int label : {0, 1}) {
            cells.push_back({GroupKey{attribute, value}, label, {}});
        }
    }
    for (int idx : dataset.with_attribute(attribute)) {
        const auto& p = dataset.participants[idx];
        const int vi = dataset.schema.value_index(attribute, p.attrs.at(attribute));
        cells[static_cast<std::size_t>(vi) * 2 + p.label].member_ids.push_back(p.id);
    }
    return cells;
}

std::vector<std::string> balance(const Dataset& dataset, const std::string& attribute,
                                 std::uint64_t seed, const BalanceConfig& config) {
    auto cells = balance_cells(dataset, attribute);
    std::size_t min_size = std::numeric_limits<std::size_t>::max();
    for (const auto& cell : cells) {
        if (cell.member_ids.empty()) {
            throw DataError("balance: empty cell " + cell.group.attribute + "=" + cell.group.value +
                            " / label " + std::to_string(cell.label));
        }
        min_size = std::min(min_size, cell.member_ids.size());
    }
    for (const auto& cell : cells) {
        if (cell.member_ids.size() == min_size &&
            static_cast<int>(min_size) < config.min_cell_size) {
            throw DataError("balance: cell " + cell.group.attribute + "=" + cell.group.value +
                            " / label " + std::to_string(cell.label) + " has only " +
                            std::to_string(min_size) + " members (minimum " +
                            std::to_string(config.min_cell_size) +
                            "); too small to support a reliable evaluation");
        }
    }

    Rng rng(seed);
    std::vector<std::string> selected;
    for (auto& cell : cells) {
        rng.shuffle(cell.member_ids);
        for (std::size_t i = 0; i < min_size; ++i) selected.push_back(cell.member_ids[i]);
    }
    return selected;
}

TrialPlan run_balance_trials(const Dataset& dataset, const std::string& attribute,
                             std::uint64_t seed, int trials, const BalanceConfig& config) {
    if (trials <= 0) throw ConfigError("run_balance_trials: trials must be positive");
    TrialPlan plan;
    plan.seed = seed;
    plan.trials = trials;
    for (int t = 0; t < trials; ++t) {
        plan.selected_ids.push_back(balance(dataset, attribute, derive_seed(seed, t), config));
    }
    return plan;
}

std::string trial_plan_to_json(const TrialPlan& plan) {
    nlohmann::json j;
    j["seed"] = plan.seed;
    j["trials"] = plan.trials;
    j["selected_ids"] = plan.selected_ids;
    return j.dump();
}

}  // namespace fairdetect
