#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cfbwp/types.hpp"

namespace cfbwp::sim {

// Possession-level league generator. Latent team strength drives scoring
// through a logistic link on (strength gap, starting field position); latent
// tempo drives the clock. Downs inside a possession are a schema-level
// random walk, not a football engine.
struct SimConfig {
    int n_teams = 12;
    int n_seasons = 1;
    int first_season = 2004;
    int games_per_team = 10;
    double strength_sd = 0.8;
    double tempo_mean = 26.0;
    double tempo_sd = 2.5;
    double home_edge = 0.55;       // target home win probability, equal teams
    double spread_noise_sd = 1.5;  // bookmaker error around the true margin
    std::uint64_t seed = 1;

    // Per-possession scoring model; field term uses (75 - yards_to_endzone)/50.
    double td_base = -1.9;
    double td_gap = 0.35;
    double td_field = 1.3;
    double fg_base = -1.9;
    double fg_gap = 0.2;
    double fg_field = 0.9;
};

struct TeamTruth {
    std::string team;
    int season = 0;
    double strength = 0.0;
    double tempo = 26.0;
};

struct PossessionOutcome {
    int possession_number = 0;
    Side offense = Side::Home;
    int points = 0;  // 7, 3, or 0
};

struct GameTruth {
    std::string game_id;
    std::vector<PossessionOutcome> possessions;
};

struct SimResult {
    std::vector<GameRecord> games;
    std::vector<TeamTruth> teams;         // one entry per (team, season) pair
    std::vector<GameTruth> ledgers;       // aligned with games
};

SimResult simulate(const SimConfig& config);

}  // namespace cfbwp::sim
