#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fairdetect/corpus.hpp"

namespace fairdetect {

struct BalanceCell {
    GroupKey group;
    int label = 0;
    std::vector<std::string> member_ids;
};

struct BalanceConfig {
    // Refuse to balance when the smallest group x label cell is below this.
    int min_cell_size = 5;
};

// Group x label cells in schema-value order, labels 0 then 1, members in
// dataset order.
std::vector<BalanceCell> balance_cells(const Dataset& dataset, const std::string& attribute);

// Downsample every cell to the global minimum cell size, without
// replacement, deterministically for a given seed.
std::vector<std::string> balance(const Dataset& dataset, const std::string& attribute,
                                 std::uint64_t seed, const BalanceConfig& config = {});

struct TrialPlan {
    std::uint64_t seed = 0;
    int trials = 10;
    std::vector<std::vector<std::string>> selected_ids;  // one selection per trial
};

TrialPlan run_balance_trials(const Dataset& dataset, const std::string& attribute,
                             std::uint64_t seed, int trials, const BalanceConfig& config = {});

std::string trial_plan_to_json(const TrialPlan& plan);

}  // namespace fairdetect
