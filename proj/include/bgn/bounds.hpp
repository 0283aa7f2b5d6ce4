#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "bgn/bann.hpp"
#include "bgn/dataset.hpp"

namespace bgn {

/// Label statistics of one activation region.
struct RegionStats {
    ActivationPattern pattern;
    std::size_t count = 0;
    double label_mean = 0.0;
    double label_variance = 0.0;  // population variance
};

/// Nested lower bounds on the training MSE, one per hidden layer, computed
/// from the weighted within-region label variances. Deeper layers merge
/// regions, so b1 <= b2 <= ... <= b_last <= train MSE.
struct BoundChain {
    std::vector<double> bounds;               // index k-1 = hidden layer k
    std::vector<std::size_t> region_counts;   // regions at each layer
    double train_mse = 0.0;

    bool holds(double slack = 1e-9) const;
};

/// Groups examples by their layer-k activation pattern (1 <= k <= depth).
/// Regions come out sorted by pattern for deterministic output.
std::vector<RegionStats> partition_regions(const BannModel& model, const Dataset& data,
                                           std::size_t layer);

BoundChain bound_chain(const BannModel& model, const Dataset& data);

/// Fixed-precision table (layer, regions, bound, mse) for the CLI.
std::string format_bound_chain(const BoundChain& chain);

}  // namespace bgn
