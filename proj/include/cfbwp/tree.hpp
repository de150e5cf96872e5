#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace cfbwp::tree {

// Column-major training data; rows are observations.
struct Dataset {
    std::vector<std::vector<double>> columns;
    std::vector<double> response;

    std::size_t n_rows() const { return response.size(); }
    std::size_t n_cols() const { return columns.size(); }
};

struct TreeParams {
    int max_depth = 6;          // 0 = unlimited
    int min_leaf_size = 20;
    int features_per_split = 0; // 0 = consider every feature
};

struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;

    bool is_leaf() const { return feature < 0; }
};

struct RegressionTree {
    std::vector<TreeNode> nodes;

    double predict(std::span<const double> row) const;
    int depth() const;
    int leaf_count() const;
};

// Pre-sorted per-feature row orders, computed once per dataset and reused by
// every tree trained on (subsamples of) it.
class SortedDataset {
public:
    explicit SortedDataset(const Dataset& data);

    const Dataset& data() const { return *data_; }
    const std::vector<int>& order(std::size_t feature) const { return orders_[feature]; }

private:
    const Dataset* data_;
    std::vector<std::vector<int>> orders_;
};

/// Fits one regression tree on the rows selected by `multiplicity` (count of
/// appearances per row; bootstrap samples repeat rows). Splits minimize
/// within-node squared error; a node stays a leaf unless some split strictly
/// reduces it with both children at least min_leaf_size heavy.
RegressionTree fit_tree(const SortedDataset& sorted, std::span<const double> response,
                        std::span<const int> multiplicity, const TreeParams& params,
                        std::mt19937_64& rng);

/// All-rows convenience overload.
RegressionTree fit_tree(const SortedDataset& sorted, std::span<const double> response,
                        const TreeParams& params, std::mt19937_64& rng);

}  // namespace cfbwp::tree
