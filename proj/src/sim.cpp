#include "cfbwp/sim.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "cfbwp/errors.hpp"
#include "cfbwp/util.hpp"

namespace cfbwp::sim {

namespace {

// Calibrated on the default scoring model: a strength-gap bump of g shifts
// the equal-teams home win probability to roughly normal_cdf(kWinProbitScale * g).
constexpr double kWinProbitScale = 1.05;
constexpr double kMarginPerGap = 17.5;  // expected final margin per unit gap
constexpr double kOtProbitScale = 1.05;

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

struct Matchup {
    int home = 0;
    int away = 0;
};

// Circle-method round robin; extra rounds repeat pairings with venues swapped.
std::vector<std::vector<Matchup>> schedule_rounds(int n_teams, int rounds) {
    const int m = n_teams % 2 == 0 ? n_teams : n_teams + 1;  // odd counts get a bye slot
    std::vector<int> ring(m);
    for (int i = 0; i < m; ++i) ring[i] = i;
    std::vector<std::vector<Matchup>> out;
    for (int r = 0; r < rounds; ++r) {
        std::vector<Matchup> round;
        for (int i = 0; i < m / 2; ++i) {
            const int a = ring[i], b = ring[m - 1 - i];
            if (a >= n_teams || b >= n_teams) continue;  // bye
            const bool a_home = (r + i) % 2 == 0;
            round.push_back(a_home ? Matchup{a, b} : Matchup{b, a});
        }
        out.push_back(std::move(round));
        std::rotate(ring.begin() + 1, ring.end() - 1, ring.end());
    }
    return out;
}

struct GameContext {
    const SimConfig& config;
    const std::vector<TeamTruth>& teams;
    int season = 0;
    int home = 0;
    int away = 0;
    std::string game_id;
    std::mt19937_64 rng;
};

struct PlayPlan {
    int seconds = 30;
    int down = 1;
    int distance = 10;
    int yards_to_endzone = 75;
};

// Down/distance/field-position walk for one possession, shaped by where the
// drive is headed but not pretending to be football.
std::vector<PlayPlan> plan_possession(std::mt19937_64& rng, int start_yards, int end_yards,
                                      int duration) {
    std::uniform_int_distribution<int> n_plays_dist(4, 8);
    const int n_plays = n_plays_dist(rng);
    std::vector<PlayPlan> plays(static_cast<std::size_t>(n_plays));

    // Spread the duration over the plays.
    int remaining = duration;
    for (int i = 0; i < n_plays; ++i) {
        const int left = n_plays - i;
        const int base = remaining / left;
        std::uniform_int_distribution<int> jitter(-base / 3, base / 3);
        int sec = std::clamp(base + (left > 1 ? jitter(rng) : 0), 5, 90);
        if (i == n_plays - 1) sec = std::max(remaining, 5);
        plays[static_cast<std::size_t>(i)].seconds = sec;
        remaining -= sec;
    }

    int z = start_yards;
    int down = 1;
    int dist = std::min(10, z);
    std::normal_distribution<double> wiggle(0.0, 3.0);
    for (int i = 0; i < n_plays; ++i) {
        PlayPlan& p = plays[static_cast<std::size_t>(i)];
        p.down = down;
        p.distance = std::min(dist, z);
        p.yards_to_endzone = z;

        const double progress = static_cast<double>(i + 1) / n_plays;
        const double target = start_yards + (end_yards - start_yards) * progress;
        int z_next = static_cast<int>(std::lround(target + wiggle(rng)));
        z_next = std::clamp(z_next, std::max(1, end_yards), 99);
        const int gain = z - z_next;
        if (gain >= dist) {
            down = 1;
            dist = std::min(10, z_next);
        } else {
            down = down >= 4 ? 1 : down + 1;
            dist = std::max(1, dist - gain);
        }
        z = z_next;
    }
    return plays;
}

GameRecord simulate_game(GameContext& ctx, GameTruth& truth) {
    const SimConfig& cfg = ctx.config;
    const TeamTruth& home = ctx.teams[static_cast<std::size_t>(ctx.home)];
    const TeamTruth& away = ctx.teams[static_cast<std::size_t>(ctx.away)];
    const double home_bump =
        cfg.home_edge == 0.5 ? 0.0 : util::normal_quantile(cfg.home_edge) / kWinProbitScale;
    const double gap_home = (home.strength + home_bump) - away.strength;

    GameRecord game;
    game.game_id = ctx.game_id;
    game.season = ctx.season;
    game.home_team = home.team;
    game.away_team = away.team;

    const double expected_margin = kMarginPerGap * gap_home;
    std::normal_distribution<double> spread_noise(0.0, cfg.spread_noise_sd);
    game.pregame_spread = std::round((-expected_margin + spread_noise(ctx.rng)) * 2.0) / 2.0;

    const double mean_possession_seconds = 3600.0 / (home.tempo + away.tempo);
    std::normal_distribution<double> duration_dist(mean_possession_seconds,
                                                   mean_possession_seconds / 5.0);

    int home_score = 0, away_score = 0;
    int t = 0;
    int play_index = 1;
    int possession_number = 1;
    std::uniform_int_distribution<int> coin(0, 1);
    Side offense = coin(ctx.rng) == 0 ? Side::Home : Side::Away;
    int start_yards = 75;

    while (t < 3600) {
        const double gap = offense == Side::Home ? gap_home : -gap_home;
        const double field = (75.0 - start_yards) / 50.0;
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        const double p_td = sigmoid(cfg.td_base + cfg.td_gap * gap + cfg.td_field * field);
        int points = 0;
        if (unit(ctx.rng) < p_td) {
            points = 7;
        } else {
            const double p_fg = sigmoid(cfg.fg_base + cfg.fg_gap * gap + cfg.fg_field * field);
            if (unit(ctx.rng) < p_fg) points = 3;
        }

        const int duration = std::clamp(
            static_cast<int>(std::lround(duration_dist(ctx.rng))),
            static_cast<int>(mean_possession_seconds / 2.0),
            static_cast<int>(mean_possession_seconds * 2.0));

        int end_yards;
        if (points == 7) {
            end_yards = 1;
        } else if (points == 3) {
            end_yards = std::uniform_int_distribution<int>(10, 25)(ctx.rng);
        } else {
            end_yards = std::clamp(
                start_yards - std::uniform_int_distribution<int>(-5, 30)(ctx.rng), 5, 99);
        }

        std::vector<PlayPlan> plan = plan_possession(ctx.rng, start_yards, end_yards, duration);
        int t_play = t;
        for (const PlayPlan& p : plan) {
            if (t_play >= 3600) break;
            PlayRecord play;
            play.game_id = game.game_id;
            play.season = game.season;
            play.play_index = play_index++;
            play.elapsed_seconds = t_play;
            play.home_score = home_score;
            play.away_score = away_score;
            play.possession = offense;
            play.down = p.down;
            play.distance = p.distance;
            play.yards_to_endzone = p.yards_to_endzone;
            play.possession_number = possession_number;
            game.plays.push_back(std::move(play));
            t_play += p.seconds;
        }

        truth.possessions.push_back({possession_number, offense, points});
        if (offense == Side::Home) {
            home_score += points;
        } else {
            away_score += points;
        }
        t += duration;
        ++possession_number;

        if (points > 0) {
            start_yards = 75;
        } else {
            std::normal_distribution<double> punt(40.0, 8.0);
            const int landing = end_yards - static_cast<int>(std::lround(punt(ctx.rng)));
            start_yards = std::clamp(100 - std::max(landing, 20), 20, 95);
        }
        offense = other(offense);
    }

    game.final_home_score = home_score;
    game.final_away_score = away_score;
    if (home_score == away_score) {
        // Overtime is settled off the play-by-play; finals absorb the result.
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        const double p_home_ot = util::normal_cdf(kOtProbitScale * gap_home);
        if (unit(ctx.rng) < p_home_ot) {
            game.final_home_score += 3;
        } else {
            game.final_away_score += 3;
        }
    }
    return game;
}

}  // namespace

SimResult simulate(const SimConfig& config) {
    if (config.n_teams < 2) throw UsageError("simulate: need at least 2 teams");
    if (config.n_seasons < 1) throw UsageError("simulate: need at least 1 season");
    if (config.games_per_team < 1) throw UsageError("simulate: games_per_team must be >= 1");
    if (!(config.home_edge > 0.0 && config.home_edge < 1.0)) {
        throw UsageError("simulate: home_edge must be in (0, 1)");
    }
    if (!(config.tempo_mean > 4.0)) throw UsageError("simulate: tempo_mean too small");

    SimResult result;
    std::uint64_t game_ordinal = 0;
    for (int s = 0; s < config.n_seasons; ++s) {
        const int season = config.first_season + s;
        std::mt19937_64 season_rng(
            util::mix_seed(config.seed, 0x5ea50000ULL + static_cast<std::uint64_t>(s)));
        std::vector<TeamTruth> teams(static_cast<std::size_t>(config.n_teams));
        std::normal_distribution<double> strength_dist(0.0, config.strength_sd);
        std::normal_distribution<double> tempo_dist(config.tempo_mean, config.tempo_sd);
        for (int k = 0; k < config.n_teams; ++k) {
            TeamTruth& team = teams[static_cast<std::size_t>(k)];
            char name[16];
            std::snprintf(name, sizeof name, "T%03d", k + 1);
            team.team = name;
            team.strength = strength_dist(season_rng);
            team.tempo = std::clamp(tempo_dist(season_rng), 16.0, 40.0);
        }
        result.teams.insert(result.teams.end(), teams.begin(), teams.end());

        const auto rounds = schedule_rounds(config.n_teams, config.games_per_team);
        int game_in_season = 0;
        for (const std::vector<Matchup>& round : rounds) {
            for (const Matchup& matchup : round) {
                ++game_in_season;
                char id[32];
                std::snprintf(id, sizeof id, "%d-%04d", season, game_in_season);
                GameContext ctx{
                    .config = config,
                    .teams = teams,
                    .season = season,
                    .home = matchup.home,
                    .away = matchup.away,
                    .game_id = id,
                    .rng = std::mt19937_64(util::mix_seed(config.seed, game_ordinal)),
                };
                ++game_ordinal;
                GameTruth truth;
                truth.game_id = ctx.game_id;
                result.games.push_back(simulate_game(ctx, truth));
                result.ledgers.push_back(std::move(truth));
            }
        }
    }
    return result;
}

}  // namespace cfbwp::sim
