#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cfbwp/types.hpp"

namespace cfbwp::ingest {

// Column orders are fixed by the file format contract (see README).
inline constexpr const char* kGameCsvHeader =
    "game_id,season,home_team,away_team,pregame_spread,final_home_score,final_away_score";
inline constexpr const char* kPlayCsvHeader =
    "game_id,season,play_index,elapsed_seconds,home_score,away_score,possession,down,"
    "distance,yards_to_endzone,possession_number";

/// Parses a self-contained JSONL game file (one game object per line).
std::vector<GameRecord> parse_game_file(const std::filesystem::path& jsonl_path);

/// Parses the two-file CSV form: a game table plus a play table keyed by game_id.
std::vector<GameRecord> parse_game_csv(const std::filesystem::path& games_csv,
                                       const std::filesystem::path& plays_csv);

void write_csv(const std::vector<GameRecord>& games,
               const std::filesystem::path& games_csv,
               const std::filesystem::path& plays_csv);
void write_jsonl(const std::vector<GameRecord>& games, const std::filesystem::path& path);

std::string games_to_csv(const std::vector<GameRecord>& games);
std::string plays_to_csv(const std::vector<GameRecord>& games);
std::string to_jsonl(const std::vector<GameRecord>& games);

// Throws InvariantError on the first violated game-level rule.
void validate_game(const GameRecord& game);

/// Latest n_test_seasons seasons go to the test set; the rest split in half
/// between point-value and win-probability games by a seeded shuffle.
DataPartition partition(const std::vector<GameRecord>& games, int n_test_seasons,
                        std::uint64_t seed);

}  // namespace cfbwp::ingest
