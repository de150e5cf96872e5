#include "cfbwp/eval.hpp"

#include <algorithm>
#include <cmath>

#include "cfbwp/errors.hpp"
#include "cfbwp/util.hpp"

namespace cfbwp::eval {

double brier(std::span<const Prediction> predictions) {
    if (predictions.empty()) throw UsageError("brier: empty input");
    double s = 0.0;
    for (const Prediction& pr : predictions) {
        if (!(pr.p >= 0.0 && pr.p <= 1.0)) throw UsageError("brier: probability outside [0,1]");
        if (pr.outcome != 0 && pr.outcome != 1) throw UsageError("brier: outcome must be 0/1");
        const double d = pr.p - pr.outcome;
        s += d * d;
    }
    return s / static_cast<double>(predictions.size());
}

winprob::GameStateKey state_for(const GameRecord& game, const PlayRecord& play,
                                const Artifacts& artifacts) {
    auto season_it = artifacts.paces.find(game.season);
    if (season_it == artifacts.paces.end()) {
        throw InvariantError("no pace table for season " + std::to_string(game.season));
    }
    const double pace_home = season_it->second.pace_for(game.home_team);
    const double pace_away = season_it->second.pace_for(game.away_team);

    winprob::GameStateKey state;
    state.t = play.elapsed_seconds;
    state.lead = play.lead();
    state.tau = pace::expected_possessions_remaining(pace_home, pace_away,
                                                     play.elapsed_seconds);
    const auto features = pointvalue::play_features(game, play, artifacts.paces);
    const double swing = artifacts.point_value.predict(features);
    const double sign = play.possession == Side::Home ? 1.0 : -1.0;
    state.omega = state.lead + sign * swing;
    return state;
}

namespace {

// Play-state features for the home-win classifier: the nine point-value
// predictors plus an indicator for home possession (without it the
// offense-perspective scores cannot identify which side the label follows).
constexpr int kBaselineFeatures = pointvalue::kNumFeatures + 1;

std::array<double, kBaselineFeatures> baseline_features(
    const GameRecord& game, const PlayRecord& play,
    const std::map<int, pace::PaceTable>& paces) {
    std::array<double, kBaselineFeatures> x{};
    const auto base = pointvalue::play_features(game, play, paces);
    std::copy(base.begin(), base.end(), x.begin());
    x[pointvalue::kNumFeatures] = play.possession == Side::Home ? 1.0 : 0.0;
    return x;
}

}  // namespace

double BaselineForest::predict(const GameRecord& game, const PlayRecord& play,
                               const std::map<int, pace::PaceTable>& paces) const {
    const auto x = baseline_features(game, play, paces);
    return std::clamp(forest.predict(x), 0.0, 1.0);
}

BaselineForest fit_baseline_forest(const std::vector<GameRecord>& games,
                                   const std::map<int, pace::PaceTable>& paces,
                                   const pointvalue::ForestParams& params) {
    tree::Dataset data;
    data.columns.assign(kBaselineFeatures, {});
    for (const GameRecord& game : games) {
        const double y = game.home_win() ? 1.0 : 0.0;
        for (const PlayRecord& play : game.plays) {
            const auto x = baseline_features(game, play, paces);
            for (int f = 0; f < kBaselineFeatures; ++f) {
                data.columns[static_cast<std::size_t>(f)].push_back(
                    x[static_cast<std::size_t>(f)]);
            }
            data.response.push_back(y);
        }
    }
    if (data.n_rows() == 0) throw UsageError("fit_baseline_forest: no plays");

    const tree::SortedDataset sorted(data);
    BaselineForest baseline;
    baseline.forest.kind = pointvalue::TreeEnsembleModel::Kind::RandomForest;
    baseline.forest.tree_params = params.tree;
    baseline.forest.seed = params.seed;
    const std::size_t n = data.n_rows();
    for (int b = 0; b < params.n_trees; ++b) {
        std::mt19937_64 rng(util::mix_seed(params.seed, static_cast<std::uint64_t>(b)));
        std::vector<int> multiplicity(n, 0);
        if (params.bootstrap) {
            std::uniform_int_distribution<std::size_t> pick(0, n - 1);
            const auto draws = static_cast<std::size_t>(
                std::llround(params.sample_fraction * static_cast<double>(n)));
            for (std::size_t d = 0; d < std::max<std::size_t>(draws, 1); ++d) {
                ++multiplicity[pick(rng)];
            }
        } else {
            multiplicity.assign(n, 1);
        }
        baseline.forest.trees.push_back(
            tree::fit_tree(sorted, data.response, multiplicity, params.tree, rng));
    }
    return baseline;
}

BrierReport evaluate_models(const std::vector<GameRecord>& test_games,
                            const Artifacts& artifacts, const BaselineForest& baseline) {
    if (test_games.empty()) throw UsageError("evaluate_models: no test games");

    winprob::Estimator estimator{.index = &artifacts.index,
                                 .prior = &artifacts.prior,
                                 .weights = &artifacts.weights,
                                 .schedule = artifacts.schedule};

    std::vector<Prediction> mle_preds, bayes_preds, adjusted_preds, forest_preds;
    BrierReport report;
    report.season_lo = test_games.front().season;
    report.season_hi = test_games.front().season;
    for (const GameRecord& game : test_games) {
        report.season_lo = std::min(report.season_lo, game.season);
        report.season_hi = std::max(report.season_hi, game.season);
        const int y = game.home_win() ? 1 : 0;
        const double p_pregame = winprob::pregame_prob(game.pregame_spread, artifacts.sigma);
        for (const PlayRecord& play : game.plays) {
            const winprob::GameStateKey state = state_for(game, play, artifacts);
            const winprob::WinProbEstimate est = estimator.estimate(state, p_pregame);
            const double fallback = artifacts.prior.prior_mean(state.t, state.lead);
            mle_preds.push_back({est.mle.value_or(fallback), y});
            bayes_preds.push_back({est.dynamic, y});
            adjusted_preds.push_back({est.adjusted, y});
            forest_preds.push_back({baseline.predict(game, play, artifacts.paces), y});
        }
    }

    const long n = static_cast<long>(bayes_preds.size());
    report.rows.push_back({"windowed_mle", brier(mle_preds), n});
    report.rows.push_back({"dynamic_bayes", brier(bayes_preds), n});
    report.rows.push_back({"adjusted_dynamic_bayes", brier(adjusted_preds), n});
    report.rows.push_back({"forest_baseline", brier(forest_preds), n});
    return report;
}

std::string brier_report_to_csv(const BrierReport& report) {
    std::string out = "model,brier,n_plays\n";
    for (const BrierReport::Row& row : report.rows) {
        out += row.model + ',' + util::format_double(row.brier) + ',' +
               std::to_string(row.n_plays) + '\n';
    }
    return out;
}

std::vector<TraceRow> trace_game(const GameRecord& game, const Artifacts& artifacts) {
    winprob::Estimator estimator{.index = &artifacts.index,
                                 .prior = &artifacts.prior,
                                 .weights = &artifacts.weights,
                                 .schedule = artifacts.schedule};
    const double p_pregame = winprob::pregame_prob(game.pregame_spread, artifacts.sigma);

    std::vector<TraceRow> rows;
    rows.reserve(game.plays.size());
    for (const PlayRecord& play : game.plays) {
        const winprob::GameStateKey state = state_for(game, play, artifacts);
        const winprob::WinProbEstimate est = estimator.estimate(state, p_pregame);
        TraceRow row;
        row.play_index = play.play_index;
        row.t = state.t;
        row.lead = state.lead;
        row.tau = state.tau;
        row.omega = state.omega;
        row.p_mle = est.mle.value_or(artifacts.prior.prior_mean(state.t, state.lead));
        row.p_bayes = est.dynamic;
        row.p_adjusted = est.adjusted;
        rows.push_back(row);
    }
    return rows;
}

std::string trace_to_csv(std::span<const TraceRow> rows) {
    std::string out = "play_index,t,lead,tau,omega,p_mle,p_bayes,p_adjusted\n";
    for (const TraceRow& r : rows) {
        out += std::to_string(r.play_index);
        out += ',' + std::to_string(r.t);
        out += ',' + std::to_string(r.lead);
        out += ',' + util::format_double(r.tau);
        out += ',' + util::format_double(r.omega);
        out += ',' + util::format_double(r.p_mle);
        out += ',' + util::format_double(r.p_bayes);
        out += ',' + util::format_double(r.p_adjusted);
        out.push_back('\n');
    }
    return out;
}

}  // namespace cfbwp::eval
