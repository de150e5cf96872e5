#include "cfbwp/tree.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cfbwp/errors.hpp"

namespace cfbwp::tree {

double RegressionTree::predict(std::span<const double> row) const {
    int i = 0;
    while (!nodes[i].is_leaf()) {
        i = row[nodes[i].feature] <= nodes[i].threshold ? nodes[i].left : nodes[i].right;
    }
    return nodes[i].value;
}

int RegressionTree::depth() const {
    // Iterative depth over the node vector; children always follow parents.
    std::vector<int> level(nodes.size(), 0);
    int max_level = 0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (!nodes[i].is_leaf()) {
            level[nodes[i].left] = level[i] + 1;
            level[nodes[i].right] = level[i] + 1;
            max_level = std::max(max_level, level[i] + 1);
        }
    }
    return max_level;
}

int RegressionTree::leaf_count() const {
    int n = 0;
    for (const TreeNode& node : nodes) n += node.is_leaf() ? 1 : 0;
    return n;
}

SortedDataset::SortedDataset(const Dataset& data) : data_(&data) {
    orders_.resize(data.n_cols());
    for (std::size_t f = 0; f < data.n_cols(); ++f) {
        std::vector<int>& ord = orders_[f];
        ord.resize(data.n_rows());
        std::iota(ord.begin(), ord.end(), 0);
        const std::vector<double>& col = data.columns[f];
        std::stable_sort(ord.begin(), ord.end(),
                         [&col](int a, int b) { return col[a] < col[b]; });
    }
}

namespace {

struct Split {
    double gain = 0.0;
    int feature = -1;
    double threshold = 0.0;
};

struct Builder {
    const Dataset& data;
    std::span<const double> y;
    const TreeParams& params;
    std::mt19937_64& rng;
    // feature_rows[f] holds the node's rows (with bootstrap repeats) sorted
    // by feature f; nodes are contiguous [lo, hi) slices across all f.
    std::vector<std::vector<int>> feature_rows;
    std::vector<int> scratch;
    std::vector<int> feature_pool;
    std::vector<TreeNode> nodes;

    Split best_split(std::size_t lo, std::size_t hi, double sum, double node_sse) {
        const std::size_t n = hi - lo;
        const std::size_t n_feats = feature_rows.size();

        std::size_t n_candidates = n_feats;
        if (params.features_per_split > 0 &&
            static_cast<std::size_t>(params.features_per_split) < n_feats) {
            n_candidates = static_cast<std::size_t>(params.features_per_split);
            // Partial Fisher-Yates over the shared pool.
            for (std::size_t i = 0; i < n_candidates; ++i) {
                std::uniform_int_distribution<std::size_t> pick(i, n_feats - 1);
                std::swap(feature_pool[i], feature_pool[pick(rng)]);
            }
        }

        Split best;
        const double parent_score = sum * sum / static_cast<double>(n);
        for (std::size_t c = 0; c < n_candidates; ++c) {
            const int f = n_candidates == n_feats ? static_cast<int>(c) : feature_pool[c];
            const std::vector<double>& col = data.columns[static_cast<std::size_t>(f)];
            const std::vector<int>& rows = feature_rows[static_cast<std::size_t>(f)];
            double left_sum = 0.0;
            for (std::size_t i = lo; i + 1 < hi; ++i) {
                left_sum += y[static_cast<std::size_t>(rows[i])];
                const double v = col[static_cast<std::size_t>(rows[i])];
                const double v_next = col[static_cast<std::size_t>(rows[i + 1])];
                if (v == v_next) continue;
                const std::size_t n_left = i - lo + 1;
                const std::size_t n_right = n - n_left;
                if (n_left < static_cast<std::size_t>(params.min_leaf_size) ||
                    n_right < static_cast<std::size_t>(params.min_leaf_size)) {
                    continue;
                }
                const double right_sum = sum - left_sum;
                const double score = left_sum * left_sum / static_cast<double>(n_left) +
                                     right_sum * right_sum / static_cast<double>(n_right);
                const double gain = score - parent_score;
                if (gain > best.gain) {
                    best.gain = gain;
                    best.feature = f;
                    best.threshold = v + (v_next - v) / 2.0;
                }
            }
        }
        // Demand a strict, non-noise reduction in squared error.
        if (best.feature >= 0 && best.gain <= 1e-12 * std::max(node_sse, 1e-300)) {
            best.feature = -1;
        }
        return best;
    }

    // Builds the subtree over [lo, hi); returns its node index.
    int build(std::size_t lo, std::size_t hi, int depth) {
        const std::size_t n = hi - lo;
        double sum = 0.0, sumsq = 0.0;
        for (std::size_t i = lo; i < hi; ++i) {
            const double v = y[static_cast<std::size_t>(feature_rows[0][i])];
            sum += v;
            sumsq += v * v;
        }
        const double mean = sum / static_cast<double>(n);
        const double node_sse = std::max(0.0, sumsq - sum * mean);

        const int index = static_cast<int>(nodes.size());
        nodes.push_back(TreeNode{.feature = -1, .value = mean});

        if (n < 2 * static_cast<std::size_t>(params.min_leaf_size)) return index;
        if (params.max_depth > 0 && depth >= params.max_depth) return index;
        if (node_sse <= 0.0) return index;

        const Split split = best_split(lo, hi, sum, node_sse);
        if (split.feature < 0) return index;

        // Stable partition of every feature order around the chosen split.
        const std::vector<double>& split_col =
            data.columns[static_cast<std::size_t>(split.feature)];
        std::size_t n_left = 0;
        for (std::vector<int>& rows : feature_rows) {
            scratch.clear();
            std::size_t w = lo;
            for (std::size_t i = lo; i < hi; ++i) {
                const int r = rows[i];
                if (split_col[static_cast<std::size_t>(r)] <= split.threshold) {
                    rows[w++] = r;
                } else {
                    scratch.push_back(r);
                }
            }
            n_left = w - lo;
            std::copy(scratch.begin(), scratch.end(), rows.begin() + static_cast<long>(w));
        }

        const int left = build(lo, lo + n_left, depth + 1);
        const int right = build(lo + n_left, hi, depth + 1);
        nodes[static_cast<std::size_t>(index)].feature = split.feature;
        nodes[static_cast<std::size_t>(index)].threshold = split.threshold;
        nodes[static_cast<std::size_t>(index)].left = left;
        nodes[static_cast<std::size_t>(index)].right = right;
        return index;
    }
};

}  // namespace

RegressionTree fit_tree(const SortedDataset& sorted, std::span<const double> response,
                        std::span<const int> multiplicity, const TreeParams& params,
                        std::mt19937_64& rng) {
    const Dataset& data = sorted.data();
    if (data.n_rows() == 0) throw UsageError("fit_tree: empty dataset");
    if (response.size() != data.n_rows()) throw UsageError("fit_tree: response size mismatch");
    if (params.min_leaf_size < 1) throw UsageError("fit_tree: min_leaf_size must be >= 1");

    std::size_t sample_size = 0;
    for (int m : multiplicity) sample_size += static_cast<std::size_t>(m);
    if (sample_size == 0) throw UsageError("fit_tree: empty sample");

    Builder builder{.data = data, .y = response, .params = params, .rng = rng};
    builder.feature_rows.resize(data.n_cols());
    for (std::size_t f = 0; f < data.n_cols(); ++f) {
        std::vector<int>& rows = builder.feature_rows[f];
        rows.reserve(sample_size);
        for (int r : sorted.order(f)) {
            for (int m = 0; m < multiplicity[static_cast<std::size_t>(r)]; ++m) {
                rows.push_back(r);
            }
        }
    }
    builder.scratch.reserve(sample_size);
    builder.feature_pool.resize(data.n_cols());
    std::iota(builder.feature_pool.begin(), builder.feature_pool.end(), 0);

    builder.build(0, sample_size, 0);
    return RegressionTree{std::move(builder.nodes)};
}

RegressionTree fit_tree(const SortedDataset& sorted, std::span<const double> response,
                        const TreeParams& params, std::mt19937_64& rng) {
    std::vector<int> all(sorted.data().n_rows(), 1);
    return fit_tree(sorted, response, all, params, rng);
}

}  // namespace cfbwp::tree
