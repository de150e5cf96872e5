#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "cfbwp/types.hpp"

namespace cfbwp::pace {

struct TeamSeasonStats {
    std::string team;
    int season = 0;
    long total_possessions = 0;           // x_k
    int games_played = 0;                 // w_k
    std::vector<std::string> opponents;   // one entry per game
};

// Converged pace ratings for one season: possessions per game a team would
// play against an average-tempo opponent.
struct PaceTable {
    int season = 0;
    std::map<std::string, double> pace;
    int iterations = 0;
    double tolerance = 0.0;
    double last_max_change = 0.0;
    double league_mean = 0.0;

    double pace_for(const std::string& team) const;
    bool contains(const std::string& team) const { return pace.count(team) != 0; }
};

inline constexpr double kDefaultTolerance = 1e-4;
inline constexpr int kDefaultMaxIterations = 10'000;

int count_possessions(const GameRecord& game, Side side);

/// Per-team totals for one season. Games against teams outside `universe`
/// are dropped entirely (the rating needs a pace for every opponent).
std::vector<TeamSeasonStats> team_stats(const std::vector<GameRecord>& games, int season);
std::vector<TeamSeasonStats> team_stats(const std::vector<GameRecord>& games, int season,
                                        const std::set<std::string>& universe);

/// Fixed-point pace solve. Each round recenters on the league mean of the
/// previous iterate and credits each team its per-game possessions above the
/// sum of opponent paces. Throws ConvergenceError if the max per-team change
/// stays above delta for max_iter rounds.
PaceTable solve_pace(const std::vector<TeamSeasonStats>& stats,
                     double delta = kDefaultTolerance, int max_iter = kDefaultMaxIterations);

/// Expected possessions left after `elapsed_seconds`: the two paces averaged
/// and scaled down linearly with remaining time.
double expected_possessions_remaining(double pace_home, double pace_away,
                                      double elapsed_seconds);

/// Convenience: per-season tables for every season present in `games`.
std::map<int, PaceTable> solve_all_seasons(const std::vector<GameRecord>& games,
                                           double delta = kDefaultTolerance,
                                           int max_iter = kDefaultMaxIterations);

std::string to_csv(const PaceTable& table);
PaceTable pace_table_from_csv(const std::string& text, int season);

}  // namespace cfbwp::pace
