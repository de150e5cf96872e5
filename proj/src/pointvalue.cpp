#include "cfbwp/pointvalue.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "cfbwp/errors.hpp"
#include "cfbwp/util.hpp"
#include "cfbwp/version.hpp"

namespace cfbwp::pointvalue {

namespace {

std::string term_name(const std::vector<int>& term) {
    static constexpr const char* kFeatureNames[kNumFeatures] = {
        "time_remaining",  "offense_score", "defense_score",
        "down",            "distance",      "yards_to_endzone",
        "possessions_played", "offense_pace", "defense_pace"};
    if (term.empty()) return "intercept";
    std::string name;
    for (int f : term) {
        if (!name.empty()) name += '*';
        name += kFeatureNames[f];
    }
    return name;
}

struct PossessionSlice {
    Side offense = Side::Home;
    std::size_t first_play = 0;
    std::size_t last_play = 0;  // inclusive
    int home_before = 0, away_before = 0;
    int home_after = 0, away_after = 0;

    int points_by(Side side) const {
        return side == Side::Home ? home_after - home_before : away_after - away_before;
    }
};

std::vector<PossessionSlice> slice_possessions(const GameRecord& game) {
    std::vector<PossessionSlice> slices;
    for (std::size_t i = 0; i < game.plays.size(); ++i) {
        const PlayRecord& p = game.plays[i];
        if (slices.empty() || game.plays[slices.back().first_play].possession_number !=
                                  p.possession_number) {
            PossessionSlice s;
            s.offense = p.possession;
            s.first_play = s.last_play = i;
            s.home_before = p.home_score;
            s.away_before = p.away_score;
            slices.push_back(s);
        } else {
            slices.back().last_play = i;
        }
    }
    for (std::size_t k = 0; k < slices.size(); ++k) {
        if (k + 1 < slices.size()) {
            const PlayRecord& next = game.plays[slices[k + 1].first_play];
            slices[k].home_after = next.home_score;
            slices[k].away_after = next.away_score;
        } else {
            // Last possession: realized scoring through the end of the game.
            slices[k].home_after = game.final_home_score;
            slices[k].away_after = game.final_away_score;
        }
    }
    return slices;
}

}  // namespace

std::array<double, kNumFeatures> play_features(const GameRecord& game, const PlayRecord& play,
                                               const std::map<int, pace::PaceTable>& paces) {
    auto season_it = paces.find(game.season);
    if (season_it == paces.end()) {
        throw InvariantError("no pace table for season " + std::to_string(game.season));
    }
    const pace::PaceTable& table = season_it->second;
    const std::string& offense = game.team(play.possession);
    const std::string& defense = game.team(other(play.possession));
    std::array<double, kNumFeatures> x{};
    x[kTimeRemaining] = 3600.0 - play.elapsed_seconds;
    x[kOffenseScore] = play.offense_score();
    x[kDefenseScore] = play.defense_score();
    x[kDown] = play.down ? static_cast<double>(*play.down) : 1.0;
    x[kDistance] = play.down ? static_cast<double>(play.distance) : 10.0;
    x[kYardsToEndzone] = play.yards_to_endzone;
    x[kPossessionsPlayed] = play.possession_number;
    x[kOffensePace] = table.pace_for(offense);
    x[kDefensePace] = table.pace_for(defense);
    return x;
}

std::vector<PointValueExample> build_examples(const std::vector<GameRecord>& games,
                                              const std::map<int, pace::PaceTable>& paces) {
    std::vector<PointValueExample> out;
    for (const GameRecord& game : games) {
        const std::vector<PossessionSlice> slices = slice_possessions(game);
        for (std::size_t k = 0; k < slices.size(); ++k) {
            const PossessionSlice& cur = slices[k];
            const Side opponent = other(cur.offense);
            double response = cur.points_by(cur.offense);
            if (k + 1 < slices.size()) {
                response -= slices[k + 1].points_by(opponent);
            }
            if (std::abs(response) > 32.0) {
                throw InvariantError("implausible two-possession swing " +
                                     util::format_double(response) + " in game " +
                                     game.game_id);
            }
            for (std::size_t i = cur.first_play; i <= cur.last_play; ++i) {
                const PlayRecord& play = game.plays[i];
                if (!play.down) continue;  // kickoffs carry no down/distance state
                PointValueExample ex;
                ex.features = play_features(game, play, paces);
                ex.response = response;
                out.push_back(ex);
            }
        }
    }
    return out;
}

double RegressionModel::predict(std::span<const double> features) const {
    double yhat = 0.0;
    for (std::size_t i = 0; i < terms.size(); ++i) {
        double product = coefficients[i];
        for (int f : terms[i]) product *= features[static_cast<std::size_t>(f)];
        yhat += product;
    }
    return yhat;
}

std::vector<std::vector<int>> plain_terms() {
    std::vector<std::vector<int>> terms;
    terms.push_back({});  // intercept
    for (int f = 0; f < kNumFeatures; ++f) terms.push_back({f});
    return terms;
}

std::vector<std::vector<int>> interaction_terms() {
    // Every subset product of the six interaction-eligible features; the
    // empty subset is the intercept. Pace and possession count stay as lone
    // main effects.
    std::vector<std::vector<int>> terms;
    for (int mask = 0; mask < (1 << kNumInteractionFeatures); ++mask) {
        std::vector<int> term;
        for (int f = 0; f < kNumInteractionFeatures; ++f) {
            if (mask & (1 << f)) term.push_back(f);
        }
        terms.push_back(std::move(term));
    }
    terms.push_back({kPossessionsPlayed});
    terms.push_back({kOffensePace});
    terms.push_back({kDefensePace});
    return terms;
}

RegressionModel fit_linear(const std::vector<PointValueExample>& examples,
                           bool with_interactions) {
    std::vector<std::vector<int>> terms = with_interactions ? interaction_terms() : plain_terms();
    const std::size_t n = examples.size();
    const std::size_t p = terms.size();
    if (n < p + 1) {
        throw UsageError("fit_linear: need at least " + std::to_string(p + 1) +
                         " examples for " + std::to_string(p) + " terms, have " +
                         std::to_string(n));
    }

    Eigen::MatrixXd design(n, p);
    Eigen::VectorXd y(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < p; ++j) {
            double v = 1.0;
            for (int f : terms[j]) v *= examples[i].features[static_cast<std::size_t>(f)];
            design(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
        }
        y(static_cast<Eigen::Index>(i)) = examples[i].response;
    }

    // Standardize non-intercept columns for conditioning; a zero-spread
    // column can never help and would alias the intercept.
    Eigen::VectorXd mu = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p));
    Eigen::VectorXd scale = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(p));
    std::vector<std::string> degenerate;
    for (std::size_t j = 0; j < p; ++j) {
        if (terms[j].empty()) continue;
        const auto col = design.col(static_cast<Eigen::Index>(j));
        const double m = col.mean();
        const double sd = std::sqrt((col.array() - m).square().sum() /
                                    static_cast<double>(n - 1));
        if (!(sd > 0.0)) {
            degenerate.push_back(term_name(terms[j]));
            continue;
        }
        mu(static_cast<Eigen::Index>(j)) = m;
        scale(static_cast<Eigen::Index>(j)) = sd;
        design.col(static_cast<Eigen::Index>(j)) = (col.array() - m) / sd;
    }
    if (!degenerate.empty()) {
        std::string names;
        for (const std::string& t : degenerate) names += (names.empty() ? "" : ", ") + t;
        throw InvariantError("fit_linear: rank-deficient design; constant terms: " + names);
    }

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    qr.setThreshold(1e-10);
    if (qr.rank() < static_cast<Eigen::Index>(p)) {
        // Name the columns QR did not pivot into the basis.
        const auto perm = qr.colsPermutation().indices();
        std::string names;
        for (Eigen::Index k = qr.rank(); k < static_cast<Eigen::Index>(p); ++k) {
            const std::size_t j = static_cast<std::size_t>(perm(k));
            names += (names.empty() ? "" : ", ") + term_name(terms[j]);
        }
        throw InvariantError("fit_linear: rank-deficient design; collinear terms: " + names);
    }
    Eigen::VectorXd beta_std = qr.solve(y);

    // Map back to raw-feature coefficients; the intercept absorbs the shifts.
    RegressionModel model;
    model.terms = std::move(terms);
    model.coefficients.assign(p, 0.0);
    double intercept_shift = 0.0;
    std::size_t intercept_index = 0;
    for (std::size_t j = 0; j < p; ++j) {
        if (model.terms[j].empty()) {
            intercept_index = j;
            continue;
        }
        const double c = beta_std(static_cast<Eigen::Index>(j)) /
                         scale(static_cast<Eigen::Index>(j));
        model.coefficients[j] = c;
        intercept_shift += c * mu(static_cast<Eigen::Index>(j));
    }
    model.coefficients[intercept_index] =
        beta_std(static_cast<Eigen::Index>(intercept_index)) - intercept_shift;
    return model;
}

double TreeEnsembleModel::predict(std::span<const double> features) const {
    double sum = 0.0;
    for (const tree::RegressionTree& t : trees) sum += t.predict(features);
    if (kind == Kind::RandomForest) {
        return trees.empty() ? 0.0 : sum / static_cast<double>(trees.size());
    }
    return eta * sum;
}

tree::Dataset to_dataset(const std::vector<PointValueExample>& examples) {
    tree::Dataset data;
    data.columns.assign(kNumFeatures, std::vector<double>(examples.size()));
    data.response.resize(examples.size());
    for (std::size_t i = 0; i < examples.size(); ++i) {
        for (int f = 0; f < kNumFeatures; ++f) {
            data.columns[static_cast<std::size_t>(f)][i] =
                examples[i].features[static_cast<std::size_t>(f)];
        }
        data.response[i] = examples[i].response;
    }
    return data;
}

TreeEnsembleModel fit_random_forest(const std::vector<PointValueExample>& examples,
                                    const ForestParams& params) {
    if (examples.empty()) throw UsageError("fit_random_forest: no examples");
    if (params.n_trees < 1) throw UsageError("fit_random_forest: n_trees must be >= 1");
    if (params.tree.min_leaf_size > static_cast<int>(examples.size())) {
        throw UsageError("fit_random_forest: min_leaf_size exceeds sample size");
    }
    if (!(params.sample_fraction > 0.0 && params.sample_fraction <= 1.0)) {
        throw UsageError("fit_random_forest: sample_fraction must be in (0, 1]");
    }

    const tree::Dataset data = to_dataset(examples);
    const tree::SortedDataset sorted(data);
    const std::size_t n = data.n_rows();

    TreeEnsembleModel model;
    model.kind = TreeEnsembleModel::Kind::RandomForest;
    model.tree_params = params.tree;
    model.seed = params.seed;
    model.trees.reserve(static_cast<std::size_t>(params.n_trees));
    for (int b = 0; b < params.n_trees; ++b) {
        std::mt19937_64 rng(util::mix_seed(params.seed, static_cast<std::uint64_t>(b)));
        std::vector<int> multiplicity(n, 0);
        if (params.bootstrap) {
            const auto draws =
                static_cast<std::size_t>(std::llround(params.sample_fraction *
                                                      static_cast<double>(n)));
            std::uniform_int_distribution<std::size_t> pick(0, n - 1);
            for (std::size_t d = 0; d < std::max<std::size_t>(draws, 1); ++d) {
                ++multiplicity[pick(rng)];
            }
        } else {
            multiplicity.assign(n, 1);
        }
        model.trees.push_back(
            tree::fit_tree(sorted, data.response, multiplicity, params.tree, rng));
    }
    return model;
}

TreeEnsembleModel fit_boosted(const std::vector<PointValueExample>& examples,
                              const BoostParams& params) {
    if (examples.empty()) throw UsageError("fit_boosted: no examples");
    if (!(params.eta > 0.0 && params.eta <= 1.0)) {
        throw UsageError("fit_boosted: eta must be in (0, 1]");
    }
    if (params.n_trees < 1) throw UsageError("fit_boosted: n_trees must be >= 1");

    const tree::Dataset data = to_dataset(examples);
    const tree::SortedDataset sorted(data);
    const std::size_t n = data.n_rows();

    TreeEnsembleModel model;
    model.kind = TreeEnsembleModel::Kind::Boosted;
    model.eta = params.eta;
    model.tree_params = params.tree;
    model.seed = params.seed;
    model.trees.reserve(static_cast<std::size_t>(params.n_trees));

    std::vector<double> residuals = data.response;
    std::vector<double> row(kNumFeatures);
    for (int b = 0; b < params.n_trees; ++b) {
        std::mt19937_64 rng(util::mix_seed(params.seed, static_cast<std::uint64_t>(b)));
        model.trees.push_back(tree::fit_tree(sorted, residuals, params.tree, rng));
        const tree::RegressionTree& fitted = model.trees.back();
        for (std::size_t i = 0; i < n; ++i) {
            residuals[i] -= params.eta * fitted.predict(examples[i].features);
        }
    }
    return model;
}

double mae(std::span<const double> predictions, std::span<const double> truth) {
    if (predictions.empty() || predictions.size() != truth.size()) {
        throw UsageError("mae: size mismatch or empty input");
    }
    double s = 0.0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        s += std::abs(predictions[i] - truth[i]);
    }
    return s / static_cast<double>(predictions.size());
}

double rmse(std::span<const double> predictions, std::span<const double> truth) {
    if (predictions.empty() || predictions.size() != truth.size()) {
        throw UsageError("rmse: size mismatch or empty input");
    }
    double s = 0.0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const double d = predictions[i] - truth[i];
        s += d * d;
    }
    return std::sqrt(s / static_cast<double>(predictions.size()));
}

namespace {

template <typename Model>
double holdout_mae(const Model& model, const std::vector<PointValueExample>& test) {
    std::vector<double> yhat(test.size()), y(test.size());
    for (std::size_t i = 0; i < test.size(); ++i) {
        yhat[i] = model.predict(test[i].features);
        y[i] = test[i].response;
    }
    return mae(yhat, y);
}

}  // namespace

BoostParams tune_boosted(const std::vector<PointValueExample>& examples, const TuneGrid& grid) {
    if (!(grid.initial_eta >= 0.05 && grid.initial_eta <= 0.2)) {
        throw UsageError("tune_boosted: starting eta must lie in [0.05, 0.2]");
    }
    if (grid.n_trees_grid.empty() || grid.max_depth_grid.empty() || grid.min_leaf_grid.empty()) {
        throw UsageError("tune_boosted: empty grid");
    }
    if (!(grid.holdout_fraction > 0.0 && grid.holdout_fraction < 1.0)) {
        throw UsageError("tune_boosted: holdout_fraction must be in (0, 1)");
    }

    // Seeded shuffle into fit/holdout halves.
    std::vector<std::size_t> order(examples.size());
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(util::mix_seed(grid.seed, 0x7e57));
    std::shuffle(order.begin(), order.end(), rng);
    const auto n_holdout = static_cast<std::size_t>(
        std::max(1.0, grid.holdout_fraction * static_cast<double>(examples.size())));
    std::vector<PointValueExample> holdout, fit;
    for (std::size_t i = 0; i < order.size(); ++i) {
        (i < n_holdout ? holdout : fit).push_back(examples[order[i]]);
    }
    if (fit.empty() || holdout.empty()) throw UsageError("tune_boosted: too few examples");

    auto score = [&](const BoostParams& p) { return holdout_mae(fit_boosted(fit, p), holdout); };

    BoostParams best;
    best.eta = grid.initial_eta;
    best.seed = grid.seed;

    // Step 2: tree count at the starting shrinkage.
    best.n_trees = grid.n_trees_grid.front();
    double best_mae = std::numeric_limits<double>::infinity();
    for (int b : grid.n_trees_grid) {
        BoostParams p = best;
        p.n_trees = b;
        const double m = score(p);
        if (m < best_mae) {
            best_mae = m;
            best.n_trees = b;
        }
    }
    // Step 3: tree shape.
    for (int depth : grid.max_depth_grid) {
        for (int leaf : grid.min_leaf_grid) {
            BoostParams p = best;
            p.tree.max_depth = depth;
            p.tree.min_leaf_size = leaf;
            const double m = score(p);
            if (m < best_mae) {
                best_mae = m;
                best.tree.max_depth = depth;
                best.tree.min_leaf_size = leaf;
            }
        }
    }
    // Step 4: halve eta / double trees while the holdout keeps improving.
    for (int step = 0; step < grid.refine_steps; ++step) {
        BoostParams p = best;
        p.eta /= 2.0;
        p.n_trees *= 2;
        const double m = score(p);
        if (m < best_mae - grid.min_improvement) {
            best_mae = m;
            best = p;
        } else {
            break;
        }
    }
    return best;
}

ModelReport compare_models(const std::vector<PointValueExample>& train,
                           const std::vector<PointValueExample>& test,
                           const ForestParams& forest_params,
                           const BoostParams& boost_params) {
    if (train.empty() || test.empty()) throw UsageError("compare_models: empty split");

    const RegressionModel plain = fit_linear(train, false);
    const RegressionModel interact = fit_linear(train, true);
    const TreeEnsembleModel forest = fit_random_forest(train, forest_params);
    const TreeEnsembleModel boosted = fit_boosted(train, boost_params);

    ModelReport report;
    std::vector<double> y(test.size());
    for (std::size_t i = 0; i < test.size(); ++i) y[i] = test[i].response;
    auto add = [&](const std::string& name, auto&& model) {
        std::vector<double> yhat(test.size());
        for (std::size_t i = 0; i < test.size(); ++i) {
            yhat[i] = model.predict(test[i].features);
        }
        report.scores.push_back({name, mae(yhat, y), rmse(yhat, y)});
    };
    add(kModelNames[0], plain);
    add(kModelNames[1], interact);
    add(kModelNames[2], forest);
    add(kModelNames[3], boosted);

    // Lowest MAE wins; a simpler model takes near-ties.
    std::size_t chosen = 0;
    for (std::size_t i = 1; i < report.scores.size(); ++i) {
        if (report.scores[i].mae < report.scores[chosen].mae - 1e-12) chosen = i;
    }
    report.chosen = report.scores[chosen].model;
    return report;
}

double PointValueModel::predict(std::span<const double> features) const {
    if (linear) return linear->predict(features);
    if (ensemble) return ensemble->predict(features);
    throw UsageError("PointValueModel: empty model");
}

namespace {

nlohmann::json tree_to_json(const tree::RegressionTree& t) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const tree::TreeNode& n : t.nodes) {
        nodes.push_back({n.feature, n.threshold, n.left, n.right, n.value});
    }
    return nodes;
}

tree::RegressionTree tree_from_json(const nlohmann::json& j) {
    tree::RegressionTree t;
    for (const nlohmann::json& n : j) {
        t.nodes.push_back(tree::TreeNode{.feature = n.at(0).get<int>(),
                                         .threshold = n.at(1).get<double>(),
                                         .left = n.at(2).get<int>(),
                                         .right = n.at(3).get<int>(),
                                         .value = n.at(4).get<double>()});
    }
    return t;
}

}  // namespace

nlohmann::json to_json(const PointValueModel& model) {
    nlohmann::json j;
    j["version"] = kVersion;
    j["kind"] = model.kind;
    j["seed"] = model.seed;
    if (model.linear) {
        j["terms"] = model.linear->terms;
        j["coefficients"] = model.linear->coefficients;
    }
    if (model.ensemble) {
        const TreeEnsembleModel& e = *model.ensemble;
        j["ensemble_kind"] =
            e.kind == TreeEnsembleModel::Kind::RandomForest ? "random_forest" : "boosted";
        j["eta"] = e.eta;
        j["tree_params"] = {{"max_depth", e.tree_params.max_depth},
                            {"min_leaf_size", e.tree_params.min_leaf_size},
                            {"features_per_split", e.tree_params.features_per_split}};
        nlohmann::json trees = nlohmann::json::array();
        for (const tree::RegressionTree& t : e.trees) trees.push_back(tree_to_json(t));
        j["trees"] = std::move(trees);
    }
    return j;
}

PointValueModel point_value_model_from_json(const nlohmann::json& j) {
    if (!j.contains("version") || j.at("version").get<std::string>() != kVersion) {
        throw InvariantError("point value model version mismatch; expected " +
                             std::string(kVersion));
    }
    PointValueModel model;
    model.kind = j.at("kind").get<std::string>();
    model.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("terms")) {
        RegressionModel linear;
        linear.terms = j.at("terms").get<std::vector<std::vector<int>>>();
        linear.coefficients = j.at("coefficients").get<std::vector<double>>();
        model.linear = std::move(linear);
    }
    if (j.contains("trees")) {
        TreeEnsembleModel e;
        e.kind = j.at("ensemble_kind").get<std::string>() == "random_forest"
                     ? TreeEnsembleModel::Kind::RandomForest
                     : TreeEnsembleModel::Kind::Boosted;
        e.eta = j.at("eta").get<double>();
        e.tree_params.max_depth = j.at("tree_params").at("max_depth").get<int>();
        e.tree_params.min_leaf_size = j.at("tree_params").at("min_leaf_size").get<int>();
        e.tree_params.features_per_split =
            j.at("tree_params").at("features_per_split").get<int>();
        for (const nlohmann::json& t : j.at("trees")) e.trees.push_back(tree_from_json(t));
        model.ensemble = std::move(e);
    }
    if (!model.linear && !model.ensemble) {
        throw InvariantError("point value model carries neither terms nor trees");
    }
    return model;
}

}  // namespace cfbwp::pointvalue
