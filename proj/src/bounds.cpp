#include "bgn/bounds.hpp"

#include <algorithm>
#include <map>
#include <sstream>

namespace bgn {

namespace {

ActivationPattern pattern_for(const BannModel& model, const Dataset& data, std::size_t i,
                              std::size_t layer) {
    // A dataset carrying statistics is already standardized; raw data goes
    // through the model's own standardization.
    if (data.standardization) return model.pattern_std(data.features.row(i), layer);
    return model.pattern(data.features.row(i), layer);
}

double predict_for(const BannModel& model, const Dataset& data, std::size_t i) {
    if (data.standardization) return model.predict_std(data.features.row(i));
    return model.predict(data.features.row(i));
}

}  // namespace

std::vector<RegionStats> partition_regions(const BannModel& model, const Dataset& data,
                                           std::size_t layer) {
    std::map<ActivationPattern, std::vector<double>> groups;
    for (std::size_t i = 0; i < data.size(); ++i)
        groups[pattern_for(model, data, i, layer)].push_back(data.labels[i]);

    std::vector<RegionStats> regions;
    regions.reserve(groups.size());
    for (const auto& [pattern, labels] : groups) {
        RegionStats rs;
        rs.pattern = pattern;
        rs.count = labels.size();
        rs.label_mean = mean_of(labels);
        rs.label_variance = population_variance(labels);
        regions.push_back(std::move(rs));
    }
    return regions;
}

BoundChain bound_chain(const BannModel& model, const Dataset& data) {
    BoundChain chain;
    const double m = double(data.size());
    for (std::size_t k = 1; k <= model.depth(); ++k) {
        const auto regions = partition_regions(model, data, k);
        double bound = 0.0;
        for (const RegionStats& rs : regions)
            bound += double(rs.count) / m * rs.label_variance;
        chain.bounds.push_back(bound);
        chain.region_counts.push_back(regions.size());
    }
    double sq = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const double e = predict_for(model, data, i) - data.labels[i];
        sq += e * e;
    }
    chain.train_mse = sq / m;
    return chain;
}

bool BoundChain::holds(double slack) const {
    for (std::size_t k = 1; k < bounds.size(); ++k)
        if (bounds[k - 1] > bounds[k] + slack) return false;
    return bounds.empty() || bounds.back() <= train_mse + slack;
}

std::string format_bound_chain(const BoundChain& chain) {
    std::ostringstream os;
    os << "layer  regions  bound         mse\n";
    char buf[128];
    for (std::size_t k = 0; k < chain.bounds.size(); ++k) {
        std::snprintf(buf, sizeof(buf), "%-6zu %-8zu %-13.6f %.6f\n", k + 1,
                      chain.region_counts[k], chain.bounds[k], chain.train_mse);
        os << buf;
    }
    std::snprintf(buf, sizeof(buf), "chain %s\n", chain.holds() ? "holds" : "VIOLATED");
    os << buf;
    return os.str();
}

}  // namespace bgn
