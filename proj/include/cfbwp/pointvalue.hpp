#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "cfbwp/pace.hpp"
#include "cfbwp/tree.hpp"
#include "cfbwp/types.hpp"

namespace cfbwp::pointvalue {

// Feature vector layout. The first six features may interact; the last three
// enter linear models as main effects only.
enum Feature : int {
    kTimeRemaining = 0,
    kOffenseScore = 1,
    kDefenseScore = 2,
    kDown = 3,
    kDistance = 4,
    kYardsToEndzone = 5,
    kPossessionsPlayed = 6,
    kOffensePace = 7,
    kDefensePace = 8,
};
inline constexpr int kNumFeatures = 9;
inline constexpr int kNumInteractionFeatures = 6;

// One play's predictors plus the two-possession point swing that followed:
// points the offense scored on the current possession minus points the
// opponent scored on the next one.
struct PointValueExample {
    std::array<double, kNumFeatures> features{};
    double response = 0.0;
};

std::vector<PointValueExample> build_examples(const std::vector<GameRecord>& games,
                                              const std::map<int, pace::PaceTable>& paces);

/// Offense-perspective features for one play (no response). Down-less plays
/// are encoded as 1st-and-10 so estimators can score every play.
std::array<double, kNumFeatures> play_features(const GameRecord& game, const PlayRecord& play,
                                               const std::map<int, pace::PaceTable>& paces);

struct RegressionModel {
    // terms[i] lists feature indices multiplied together; empty = intercept.
    std::vector<std::vector<int>> terms;
    std::vector<double> coefficients;

    double predict(std::span<const double> features) const;
};

std::vector<std::vector<int>> plain_terms();
std::vector<std::vector<int>> interaction_terms();

/// Ordinary least squares over the plain or interaction term set.
/// Throws InvariantError naming the offending terms on rank deficiency.
RegressionModel fit_linear(const std::vector<PointValueExample>& examples,
                           bool with_interactions);

struct ForestParams {
    int n_trees = 500;
    tree::TreeParams tree{.max_depth = 6, .min_leaf_size = 20, .features_per_split = 3};
    bool bootstrap = true;
    double sample_fraction = 1.0;
    std::uint64_t seed = 0;
};

struct BoostParams {
    double eta = 0.1;
    int n_trees = 100;
    tree::TreeParams tree{.max_depth = 6, .min_leaf_size = 20, .features_per_split = 0};
    std::uint64_t seed = 0;
};

struct TreeEnsembleModel {
    enum class Kind { RandomForest, Boosted };
    Kind kind = Kind::RandomForest;
    std::vector<tree::RegressionTree> trees;
    double eta = 1.0;  // shrinkage; boosted only
    tree::TreeParams tree_params;
    std::uint64_t seed = 0;

    double predict(std::span<const double> features) const;
};

TreeEnsembleModel fit_random_forest(const std::vector<PointValueExample>& examples,
                                    const ForestParams& params);

/// Stagewise boosting: start from the zero model, fit each tree to the
/// current residuals, shrink it by eta, and subtract its (shrunken)
/// predictions from the residuals.
TreeEnsembleModel fit_boosted(const std::vector<PointValueExample>& examples,
                              const BoostParams& params);

struct TuneGrid {
    double initial_eta = 0.1;  // must start in [0.05, 0.2]
    std::vector<int> n_trees_grid = {50, 100, 200};
    std::vector<int> max_depth_grid = {2, 4, 6};
    std::vector<int> min_leaf_grid = {5, 20};
    int refine_steps = 3;       // halve eta / double trees this many times at most
    double min_improvement = 1e-3;
    double holdout_fraction = 0.25;
    std::uint64_t seed = 0;
};

/// Staged search: fix the starting shrinkage, pick the tree count, then tree
/// shape, then trade shrinkage down for more trees while the held-out MAE
/// keeps improving by more than min_improvement.
BoostParams tune_boosted(const std::vector<PointValueExample>& examples, const TuneGrid& grid);

struct ModelScore {
    std::string model;
    double mae = 0.0;
    double rmse = 0.0;
};

struct ModelReport {
    std::vector<ModelScore> scores;  // plain, interaction, forest, boosted
    std::string chosen;
};

inline constexpr const char* kModelNames[4] = {"linear", "interact", "forest", "boost"};

double mae(std::span<const double> predictions, std::span<const double> truth);
double rmse(std::span<const double> predictions, std::span<const double> truth);

/// Trains all four models on the training rows and scores them on the test
/// rows; picks the lowest MAE, breaking near-ties toward the simpler model.
ModelReport compare_models(const std::vector<PointValueExample>& train,
                           const std::vector<PointValueExample>& test,
                           const ForestParams& forest_params = {},
                           const BoostParams& boost_params = {});

// Versioned model artifact: exactly one of linear/ensemble is set.
struct PointValueModel {
    std::string kind;  // linear | interact | forest | boost
    std::uint64_t seed = 0;
    std::optional<RegressionModel> linear;
    std::optional<TreeEnsembleModel> ensemble;

    double predict(std::span<const double> features) const;
};

nlohmann::json to_json(const PointValueModel& model);
PointValueModel point_value_model_from_json(const nlohmann::json& j);

tree::Dataset to_dataset(const std::vector<PointValueExample>& examples);

}  // namespace cfbwp::pointvalue
