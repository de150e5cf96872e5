#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "cfbwp/pace.hpp"
#include "cfbwp/pointvalue.hpp"
#include "cfbwp/types.hpp"
#include "cfbwp/winprob.hpp"

namespace cfbwp::eval {

struct Prediction {
    double p = 0.5;
    int outcome = 0;  // 0 or 1
};

/// Mean squared gap between predicted probability and the binary outcome.
double brier(std::span<const Prediction> predictions);

// Everything a fitted pipeline needs to score a play.
struct Artifacts {
    std::map<int, pace::PaceTable> paces;
    pointvalue::PointValueModel point_value;
    winprob::StateIndex index;
    winprob::PriorTable prior;
    winprob::WeightSpec weights;
    double sigma = 13.0;
    winprob::WindowSchedule schedule;
};

/// Both coordinate systems for one play, via the fitted pace and point-value
/// models.
winprob::GameStateKey state_for(const GameRecord& game, const PlayRecord& play,
                                const Artifacts& artifacts);

struct BrierReport {
    struct Row {
        std::string model;
        double brier = 0.0;
        long n_plays = 0;
    };
    std::vector<Row> rows;
    int season_lo = 0;
    int season_hi = 0;
};

// Home-win forest classifier on the play-state features plus a
// has-possession flag; leaf means of the 0/1 outcome are the probabilities.
struct BaselineForest {
    pointvalue::TreeEnsembleModel forest;

    double predict(const GameRecord& game, const PlayRecord& play,
                   const std::map<int, pace::PaceTable>& paces) const;
};

BaselineForest fit_baseline_forest(const std::vector<GameRecord>& games,
                                   const std::map<int, pace::PaceTable>& paces,
                                   const pointvalue::ForestParams& params);

/// Per-play Brier for the windowed MLE (prior-mean fallback), the posterior
/// estimator, the pregame-blended estimator, and the forest baseline, over
/// every play of every test game.
BrierReport evaluate_models(const std::vector<GameRecord>& test_games,
                            const Artifacts& artifacts, const BaselineForest& baseline);

std::string brier_report_to_csv(const BrierReport& report);

struct TraceRow {
    int play_index = 0;
    int t = 0;
    int lead = 0;
    double tau = 0.0;
    double omega = 0.0;
    double p_mle = 0.5;  // prior mean when the window is empty
    double p_bayes = 0.5;
    double p_adjusted = 0.5;
};

std::vector<TraceRow> trace_game(const GameRecord& game, const Artifacts& artifacts);

std::string trace_to_csv(std::span<const TraceRow> rows);

}  // namespace cfbwp::eval
