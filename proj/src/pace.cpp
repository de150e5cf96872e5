#include "cfbwp/pace.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_map>

#include "cfbwp/errors.hpp"
#include "cfbwp/util.hpp"

namespace cfbwp::pace {

double PaceTable::pace_for(const std::string& team) const {
    auto it = pace.find(team);
    if (it == pace.end()) {
        throw InvariantError("no pace for team `" + team + "` in season " +
                             std::to_string(season));
    }
    return it->second;
}

int count_possessions(const GameRecord& game, Side side) {
    int count = 0;
    int last = -1;
    for (const PlayRecord& p : game.plays) {
        if (p.possession == side && p.possession_number != last) {
            ++count;
            last = p.possession_number;
        }
    }
    return count;
}

std::vector<TeamSeasonStats> team_stats(const std::vector<GameRecord>& games, int season) {
    std::set<std::string> universe;
    for (const GameRecord& g : games) {
        if (g.season != season) continue;
        universe.insert(g.home_team);
        universe.insert(g.away_team);
    }
    return team_stats(games, season, universe);
}

std::vector<TeamSeasonStats> team_stats(const std::vector<GameRecord>& games, int season,
                                        const std::set<std::string>& universe) {
    std::map<std::string, TeamSeasonStats> by_team;
    for (const GameRecord& g : games) {
        if (g.season != season) continue;
        if (!universe.count(g.home_team) || !universe.count(g.away_team)) continue;
        for (Side side : {Side::Home, Side::Away}) {
            const std::string& team = g.team(side);
            TeamSeasonStats& s = by_team[team];
            if (s.team.empty()) {
                s.team = team;
                s.season = season;
            }
            s.total_possessions += count_possessions(g, side);
            s.games_played += 1;
            s.opponents.push_back(g.team(other(side)));
        }
    }
    std::vector<TeamSeasonStats> out;
    out.reserve(by_team.size());
    for (auto& [_, s] : by_team) out.push_back(std::move(s));
    return out;
}

PaceTable solve_pace(const std::vector<TeamSeasonStats>& stats, double delta, int max_iter) {
    if (stats.empty()) throw UsageError("solve_pace: empty input");
    if (!(delta > 0)) throw UsageError("solve_pace: delta must be positive");
    const std::size_t n = stats.size();

    std::unordered_map<std::string, std::size_t> id;
    id.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        if (id.count(stats[k].team)) {
            throw UsageError("solve_pace: duplicate team `" + stats[k].team + "`");
        }
        id[stats[k].team] = k;
    }
    std::vector<std::vector<std::size_t>> opponents(n);
    for (std::size_t k = 0; k < n; ++k) {
        if (stats[k].games_played <= 0) {
            throw UsageError("solve_pace: team `" + stats[k].team + "` has no games");
        }
        if (static_cast<int>(stats[k].opponents.size()) != stats[k].games_played) {
            throw UsageError("solve_pace: opponent list size mismatch for `" +
                             stats[k].team + "`");
        }
        for (const std::string& opp : stats[k].opponents) {
            auto it = id.find(opp);
            if (it == id.end()) {
                throw UsageError("solve_pace: opponent `" + opp + "` has no stats entry");
            }
            opponents[k].push_back(it->second);
        }
    }

    std::vector<double> prev(n, 0.0), cur(n, 0.0);
    double max_change = 0.0;
    int m = 0;
    for (m = 1; m <= max_iter; ++m) {
        double mu = 0.0;
        for (double v : prev) mu += v;
        mu /= static_cast<double>(n);
        max_change = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            double opponent_sum = 0.0;
            for (std::size_t j : opponents[k]) opponent_sum += prev[j];
            const double above_expected =
                (static_cast<double>(stats[k].total_possessions) - opponent_sum) /
                static_cast<double>(stats[k].games_played);
            cur[k] = mu + above_expected;
            max_change = std::max(max_change, std::abs(cur[k] - prev[k]));
        }
        std::swap(prev, cur);
        if (max_change <= delta) break;
    }
    if (max_change > delta) {
        throw ConvergenceError("pace recursion did not converge in " +
                                   std::to_string(max_iter) + " iterations",
                               max_change);
    }

    PaceTable table;
    table.season = stats[0].season;
    table.iterations = m;
    table.tolerance = delta;
    table.last_max_change = max_change;
    double mean = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        table.pace[stats[k].team] = prev[k];
        mean += prev[k];
    }
    table.league_mean = mean / static_cast<double>(n);
    return table;
}

double expected_possessions_remaining(double pace_home, double pace_away,
                                      double elapsed_seconds) {
    if (elapsed_seconds < 0 || elapsed_seconds > 3600) {
        throw UsageError("elapsed_seconds outside [0, 3600]");
    }
    if (!(pace_home > 0) || !(pace_away > 0)) {
        throw UsageError("paces must be positive");
    }
    return ((3600.0 - elapsed_seconds) / 3600.0) * ((pace_home + pace_away) / 2.0);
}

std::map<int, PaceTable> solve_all_seasons(const std::vector<GameRecord>& games,
                                           double delta, int max_iter) {
    std::set<int> seasons;
    for (const GameRecord& g : games) seasons.insert(g.season);
    std::map<int, PaceTable> out;
    for (int season : seasons) {
        out[season] = solve_pace(team_stats(games, season), delta, max_iter);
    }
    return out;
}

std::string to_csv(const PaceTable& table) {
    std::string out = "team,pace\n";
    for (const auto& [team, xi] : table.pace) {
        out += team + ',' + util::format_double(xi) + '\n';
    }
    return out;
}

PaceTable pace_table_from_csv(const std::string& text, int season) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != "team,pace") {
        throw SchemaError("bad pace CSV header", 1, "header");
    }
    PaceTable table;
    table.season = season;
    long row = 1;
    double sum = 0.0;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        auto comma = line.find(',');
        if (comma == std::string::npos) throw SchemaError("expected 2 fields", row, "line");
        std::string team = line.substr(0, comma);
        double xi = 0.0;
        try {
            xi = std::stod(line.substr(comma + 1));
        } catch (const std::exception&) {
            throw SchemaError("not a number", row, "pace");
        }
        table.pace[team] = xi;
        sum += xi;
    }
    if (!table.pace.empty()) table.league_mean = sum / static_cast<double>(table.pace.size());
    return table;
}

}  // namespace cfbwp::pace
