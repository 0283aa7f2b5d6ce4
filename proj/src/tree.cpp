#include "bgn/tree.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace bgn {

namespace {

struct BestSplit {
    bool found = false;
    int feature = -1;
    double threshold = 0.0;
    double children_sse = 0.0;
};

double sse_of(const Dataset& data, std::span<const std::size_t> idx) {
    double sum = 0.0;
    for (std::size_t i : idx) sum += data.labels[i];
    const double mean = sum / double(idx.size());
    double sse = 0.0;
    for (std::size_t i : idx) {
        const double d = data.labels[i] - mean;
        sse += d * d;
    }
    return sse;
}

/// Exhaustive best split: every feature in index order, every midpoint
/// between consecutive distinct sorted values, strictly-better comparisons.
BestSplit find_split(const Dataset& data, std::vector<std::size_t>& idx,
                     const TreeConfig& config, double parent_sse) {
    BestSplit best;
    best.children_sse = parent_sse;
    const std::size_t n = idx.size();
    std::vector<std::size_t> sorted(idx);
    std::vector<double> prefix(n + 1), prefix_sq(n + 1);

    for (std::size_t f = 0; f < data.dim(); ++f) {
        std::sort(sorted.begin(), sorted.end(), [&](std::size_t a, std::size_t b) {
            return data.features(a, f) < data.features(b, f);
        });
        prefix[0] = prefix_sq[0] = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            const double y = data.labels[sorted[k]];
            prefix[k + 1] = prefix[k] + y;
            prefix_sq[k + 1] = prefix_sq[k] + y * y;
        }
        for (std::size_t k = 1; k < n; ++k) {
            const double lo = data.features(sorted[k - 1], f);
            const double hi = data.features(sorted[k], f);
            if (!(hi > lo)) continue;
            if (k < std::size_t(config.min_samples_leaf) ||
                n - k < std::size_t(config.min_samples_leaf))
                continue;
            const double nl = double(k), nr = double(n - k);
            const double sse_l = prefix_sq[k] - prefix[k] * prefix[k] / nl;
            const double sum_r = prefix[n] - prefix[k];
            const double sse_r = prefix_sq[n] - prefix_sq[k] - sum_r * sum_r / nr;
            const double children = sse_l + sse_r;
            if (children < best.children_sse) {
                best.found = true;
                best.feature = int(f);
                best.threshold = (lo + hi) / 2.0;
                best.children_sse = children;
            }
        }
    }
    return best;
}

TreeNode build(const Dataset& data, std::vector<std::size_t>& idx, int depth,
               const TreeConfig& config) {
    TreeNode node;
    node.count = idx.size();
    double sum = 0.0;
    for (std::size_t i : idx) sum += data.labels[i];
    node.prediction = sum / double(idx.size());

    if (depth >= config.max_depth || idx.size() < 2 * std::size_t(config.min_samples_leaf) ||
        idx.size() < 2)
        return node;

    const double parent_sse = sse_of(data, idx);
    if (parent_sse <= 0.0) return node;  // pure node

    const BestSplit split = find_split(data, idx, config, parent_sse);
    if (!split.found) return node;

    std::vector<std::size_t> left_idx, right_idx;
    for (std::size_t i : idx) {
        if (data.features(i, std::size_t(split.feature)) <= split.threshold)
            left_idx.push_back(i);
        else
            right_idx.push_back(i);
    }

    node.is_leaf = false;
    node.feature = split.feature;
    node.threshold = split.threshold;
    node.left = std::make_unique<TreeNode>(build(data, left_idx, depth + 1, config));
    node.right = std::make_unique<TreeNode>(build(data, right_idx, depth + 1, config));
    return node;
}

}  // namespace

TreeNode fit_tree(const Dataset& train, const TreeConfig& config) {
    if (config.max_depth < 1) throw std::invalid_argument("fit_tree: max_depth must be >= 1");
    if (train.size() == 0) throw std::invalid_argument("fit_tree: empty training set");
    std::vector<std::size_t> idx(train.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    return build(train, idx, 0, config);
}

double predict_tree(const TreeNode& tree, std::span<const double> x) {
    const TreeNode* node = &tree;
    while (!node->is_leaf) {
        if (std::size_t(node->feature) >= x.size())
            throw DimensionError("predict_tree: input has " + std::to_string(x.size()) +
                                 " dims, split needs feature " + std::to_string(node->feature));
        node = x[std::size_t(node->feature)] <= node->threshold ? node->left.get()
                                                                : node->right.get();
    }
    return node->prediction;
}

int tree_depth(const TreeNode& tree) {
    if (tree.is_leaf) return 0;
    return 1 + std::max(tree_depth(*tree.left), tree_depth(*tree.right));
}

namespace {

void render(const TreeNode& node, const std::vector<std::string>& names, int digits,
            int indent, std::ostringstream& os) {
    const std::string pad(std::size_t(indent) * 2, ' ');
    if (node.is_leaf) {
        os << pad << "-> " << format_sig(node.prediction, digits) << "  (n=" << node.count
           << ")\n";
        return;
    }
    const std::string name = std::size_t(node.feature) < names.size()
                                 ? names[std::size_t(node.feature)]
                                 : "x" + std::to_string(node.feature);
    os << pad << name << " <= " << format_sig(node.threshold, digits) << ":\n";
    render(*node.left, names, digits, indent + 1, os);
    os << pad << name << " > " << format_sig(node.threshold, digits) << ":\n";
    render(*node.right, names, digits, indent + 1, os);
}

}  // namespace

std::string render_tree(const TreeNode& tree, const std::vector<std::string>& feature_names,
                        int digits) {
    std::ostringstream os;
    render(tree, feature_names, digits, 0, os);
    return os.str();
}

}  // namespace bgn
