#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "bgn/dataset.hpp"

namespace bgn {

/// CART regression tree node: internal (feature, threshold, children) or leaf
/// (mean label of the routed training examples).
struct TreeNode {
    bool is_leaf = true;
    double prediction = 0.0;
    std::size_t count = 0;

    int feature = -1;
    double threshold = 0.0;
    std::unique_ptr<TreeNode> left;
    std::unique_ptr<TreeNode> right;
};

struct TreeConfig {
    int max_depth = 3;
    int min_samples_leaf = 1;
    std::uint64_t seed = 0;  // unused: fitting is fully deterministic
};

/// Greedy variance-reduction fitting: best split over all features, squared
/// error criterion, midpoint thresholds between consecutive distinct values.
/// A node becomes a leaf at the depth cap, when pure, when min_samples_leaf
/// binds, or when no split strictly reduces the weighted child variance sum.
TreeNode fit_tree(const Dataset& train, const TreeConfig& config);

/// Root-to-leaf descent; x[feature] <= threshold goes left.
double predict_tree(const TreeNode& tree, std::span<const double> x);

int tree_depth(const TreeNode& tree);

std::string render_tree(const TreeNode& tree, const std::vector<std::string>& feature_names,
                        int digits = 6);

}  // namespace bgn
