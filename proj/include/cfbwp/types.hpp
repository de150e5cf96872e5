#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace cfbwp {

enum class Side { Home, Away };

inline Side other(Side s) { return s == Side::Home ? Side::Away : Side::Home; }

inline char side_code(Side s) { return s == Side::Home ? 'H' : 'A'; }

// One play's game state as of the snap. Scores are the totals before the
// play; down is empty for kickoff/free-kick states.
struct PlayRecord {
    std::string game_id;
    int season = 0;
    int play_index = 0;       // 1-based, strictly increasing within a game
    int elapsed_seconds = 0;  // [0, 3600]
    int home_score = 0;
    int away_score = 0;
    Side possession = Side::Home;
    std::optional<int> down;  // 1..4
    int distance = 0;         // yards to first down, <= yards_to_endzone
    int yards_to_endzone = 1; // [1, 100]
    int possession_number = 1;  // 1-based, nondecreasing within a game

    int offense_score() const { return possession == Side::Home ? home_score : away_score; }
    int defense_score() const { return possession == Side::Home ? away_score : home_score; }
    int lead() const { return home_score - away_score; }

    bool operator==(const PlayRecord&) const = default;
};

struct GameRecord {
    std::string game_id;
    int season = 0;
    std::string home_team;
    std::string away_team;
    double pregame_spread = 0.0;  // negative = home favored
    int final_home_score = 0;
    int final_away_score = 0;
    std::vector<PlayRecord> plays;

    bool home_win() const { return final_home_score > final_away_score; }
    int final_margin() const { return final_home_score - final_away_score; }
    const std::string& team(Side s) const { return s == Side::Home ? home_team : away_team; }

    bool operator==(const GameRecord&) const = default;
};

// Three-way split of the corpus: the latest seasons are held out for
// evaluation and the rest is divided between the point-value fit and the
// reference set backing the win-probability windows.
struct DataPartition {
    std::set<int> test_seasons;
    std::set<std::string> point_value_games;
    std::set<std::string> win_prob_games;
    std::uint64_t seed = 0;
};

}  // namespace cfbwp
