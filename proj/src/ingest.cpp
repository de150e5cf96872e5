#include "cfbwp/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "cfbwp/errors.hpp"
#include "cfbwp/util.hpp"

namespace cfbwp::ingest {

namespace {

using ordered_json = nlohmann::ordered_json;

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        std::size_t comma = line.find(',', start);
        if (comma == std::string::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    return out;
}

long parse_int(const std::string& text, long row, const char* field) {
    long value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
        throw SchemaError("not an integer: `" + text + "`", row, field);
    }
    return value;
}

double parse_real(const std::string& text, long row, const char* field) {
    double value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
        throw SchemaError("not a number: `" + text + "`", row, field);
    }
    return value;
}

long parse_bounded(const std::string& text, long row, const char* field, long lo, long hi) {
    long v = parse_int(text, row, field);
    if (v < lo || v > hi) {
        throw SchemaError("value " + std::to_string(v) + " outside [" + std::to_string(lo) +
                              ", " + std::to_string(hi) + "]",
                          row, field);
    }
    return v;
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') {
            throw SchemaError("CRLF line ending; format requires LF",
                              static_cast<long>(lines.size() + 1), "line");
        }
        lines.push_back(line);
    }
    return lines;
}

PlayRecord parse_play_fields(const std::vector<std::string>& f, long row) {
    PlayRecord p;
    p.game_id = f[0];
    if (p.game_id.empty()) throw SchemaError("empty game_id", row, "game_id");
    p.season = static_cast<int>(parse_int(f[1], row, "season"));
    p.play_index = static_cast<int>(parse_bounded(f[2], row, "play_index", 1, 1'000'000));
    p.elapsed_seconds = static_cast<int>(parse_bounded(f[3], row, "elapsed_seconds", 0, 3600));
    p.home_score = static_cast<int>(parse_bounded(f[4], row, "home_score", 0, 1'000));
    p.away_score = static_cast<int>(parse_bounded(f[5], row, "away_score", 0, 1'000));
    if (f[6] == "H") {
        p.possession = Side::Home;
    } else if (f[6] == "A") {
        p.possession = Side::Away;
    } else {
        throw SchemaError("possession must be H or A, got `" + f[6] + "`", row, "possession");
    }
    if (f[7].empty()) {
        p.down.reset();
    } else {
        p.down = static_cast<int>(parse_bounded(f[7], row, "down", 1, 4));
    }
    p.distance = static_cast<int>(parse_bounded(f[8], row, "distance", 0, 100));
    p.yards_to_endzone = static_cast<int>(parse_bounded(f[9], row, "yards_to_endzone", 1, 100));
    p.possession_number =
        static_cast<int>(parse_bounded(f[10], row, "possession_number", 1, 1'000'000));
    if (p.distance > p.yards_to_endzone) {
        throw InvariantError("distance " + std::to_string(p.distance) +
                             " exceeds yards_to_endzone " + std::to_string(p.yards_to_endzone) +
                             " (row " + std::to_string(row) + ")");
    }
    return p;
}

}  // namespace

void validate_game(const GameRecord& game) {
    if (game.final_home_score < 0 || game.final_away_score < 0) {
        throw InvariantError("negative final score in game " + game.game_id);
    }
    const PlayRecord* prev = nullptr;
    for (const PlayRecord& p : game.plays) {
        if (p.game_id != game.game_id) {
            throw InvariantError("play game_id `" + p.game_id + "` does not match game `" +
                                 game.game_id + "`");
        }
        if (p.season != game.season) {
            throw InvariantError("play season mismatch in game " + game.game_id);
        }
        if (prev) {
            if (p.play_index <= prev->play_index) {
                throw InvariantError("play_index not strictly increasing in game " +
                                     game.game_id + " at play " + std::to_string(p.play_index));
            }
            if (p.elapsed_seconds < prev->elapsed_seconds) {
                throw InvariantError("clock runs backward in game " + game.game_id +
                                     " at play " + std::to_string(p.play_index));
            }
            if (p.possession_number < prev->possession_number) {
                throw InvariantError("possession_number decreases in game " + game.game_id +
                                     " at play " + std::to_string(p.play_index));
            }
        }
        prev = &p;
    }
    if (!game.plays.empty()) {
        const PlayRecord& last = game.plays.back();
        if (last.home_score > game.final_home_score ||
            last.away_score > game.final_away_score) {
            throw InvariantError("last play's scores exceed finals in game " + game.game_id);
        }
    }
}

std::vector<GameRecord> parse_game_csv(const std::filesystem::path& games_csv,
                                       const std::filesystem::path& plays_csv) {
    std::vector<std::string> game_lines = read_lines(games_csv);
    if (game_lines.empty() || game_lines[0] != kGameCsvHeader) {
        throw SchemaError("bad or missing game CSV header", 1, "header");
    }
    std::vector<GameRecord> games;
    std::map<std::string, std::size_t> by_id;
    for (std::size_t i = 1; i < game_lines.size(); ++i) {
        const long row = static_cast<long>(i + 1);
        if (game_lines[i].empty()) continue;  // trailing blank line
        std::vector<std::string> f = split_fields(game_lines[i]);
        if (f.size() != 7) {
            throw SchemaError("expected 7 fields, got " + std::to_string(f.size()), row, "line");
        }
        GameRecord g;
        g.game_id = f[0];
        if (g.game_id.empty()) throw SchemaError("empty game_id", row, "game_id");
        if (by_id.count(g.game_id)) {
            throw SchemaError("duplicate game_id `" + g.game_id + "`", row, "game_id");
        }
        g.season = static_cast<int>(parse_int(f[1], row, "season"));
        g.home_team = f[2];
        g.away_team = f[3];
        if (g.home_team.empty()) throw SchemaError("empty home_team", row, "home_team");
        if (g.away_team.empty()) throw SchemaError("empty away_team", row, "away_team");
        g.pregame_spread = parse_real(f[4], row, "pregame_spread");
        g.final_home_score = static_cast<int>(parse_bounded(f[5], row, "final_home_score", 0, 1'000));
        g.final_away_score = static_cast<int>(parse_bounded(f[6], row, "final_away_score", 0, 1'000));
        by_id[g.game_id] = games.size();
        games.push_back(std::move(g));
    }

    std::vector<std::string> play_lines = read_lines(plays_csv);
    if (play_lines.empty() || play_lines[0] != kPlayCsvHeader) {
        throw SchemaError("bad or missing play CSV header", 1, "header");
    }
    for (std::size_t i = 1; i < play_lines.size(); ++i) {
        const long row = static_cast<long>(i + 1);
        if (play_lines[i].empty()) continue;
        std::vector<std::string> f = split_fields(play_lines[i]);
        if (f.size() != 11) {
            throw SchemaError("expected 11 fields, got " + std::to_string(f.size()), row, "line");
        }
        PlayRecord p = parse_play_fields(f, row);
        auto it = by_id.find(p.game_id);
        if (it == by_id.end()) {
            throw SchemaError("play references unknown game `" + p.game_id + "`", row, "game_id");
        }
        games[it->second].plays.push_back(std::move(p));
    }

    // Games with no play-by-play are represented by absence.
    std::vector<GameRecord> out;
    out.reserve(games.size());
    for (GameRecord& g : games) {
        if (g.plays.empty()) continue;
        validate_game(g);
        out.push_back(std::move(g));
    }
    return out;
}

std::vector<GameRecord> parse_game_file(const std::filesystem::path& jsonl_path) {
    std::vector<std::string> lines = read_lines(jsonl_path);
    std::vector<GameRecord> out;
    std::map<std::string, bool> seen;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const long row = static_cast<long>(i + 1);
        if (lines[i].empty()) continue;
        ordered_json j;
        try {
            j = ordered_json::parse(lines[i]);
        } catch (const nlohmann::json::parse_error& e) {
            throw SchemaError(std::string("invalid JSON: ") + e.what(), row, "line");
        }
        auto field = [&](const char* name) -> const ordered_json& {
            if (!j.contains(name)) throw SchemaError("missing field", row, name);
            return j.at(name);
        };
        auto as_string = [&](const char* name) {
            const ordered_json& v = field(name);
            if (!v.is_string()) throw SchemaError("expected string", row, name);
            return v.get<std::string>();
        };
        GameRecord g;
        g.game_id = as_string("game_id");
        if (g.game_id.empty()) throw SchemaError("empty game_id", row, "game_id");
        if (seen.count(g.game_id)) {
            throw SchemaError("duplicate game_id `" + g.game_id + "`", row, "game_id");
        }
        seen[g.game_id] = true;
        // Reuse the CSV field validators by rendering scalars back to text.
        auto as_text = [&](const char* name) {
            const ordered_json& v = field(name);
            if (v.is_string()) return v.get<std::string>();
            return v.dump();
        };
        g.season = static_cast<int>(parse_int(as_text("season"), row, "season"));
        g.home_team = as_string("home_team");
        g.away_team = as_string("away_team");
        g.pregame_spread = parse_real(as_text("pregame_spread"), row, "pregame_spread");
        g.final_home_score =
            static_cast<int>(parse_bounded(as_text("final_home_score"), row, "final_home_score", 0, 1'000));
        g.final_away_score =
            static_cast<int>(parse_bounded(as_text("final_away_score"), row, "final_away_score", 0, 1'000));
        const ordered_json& plays = field("plays");
        if (!plays.is_array()) throw SchemaError("expected array", row, "plays");
        for (const ordered_json& pj : plays) {
            if (!pj.is_object()) throw SchemaError("expected object", row, "plays");
            auto play_text = [&](const char* name) -> std::string {
                if (!pj.contains(name)) throw SchemaError("missing field", row, name);
                const ordered_json& v = pj.at(name);
                if (v.is_null()) return "";
                if (v.is_string()) return v.get<std::string>();
                return v.dump();
            };
            std::vector<std::string> f = {
                g.game_id,
                std::to_string(g.season),
                play_text("play_index"),
                play_text("elapsed_seconds"),
                play_text("home_score"),
                play_text("away_score"),
                play_text("possession"),
                pj.contains("down") && !pj.at("down").is_null() ? play_text("down") : "",
                play_text("distance"),
                play_text("yards_to_endzone"),
                play_text("possession_number"),
            };
            g.plays.push_back(parse_play_fields(f, row));
        }
        if (g.plays.empty()) continue;
        validate_game(g);
        out.push_back(std::move(g));
    }
    return out;
}

std::string games_to_csv(const std::vector<GameRecord>& games) {
    std::string out(kGameCsvHeader);
    out.push_back('\n');
    for (const GameRecord& g : games) {
        out += g.game_id;
        out += ',' + std::to_string(g.season);
        out += ',' + g.home_team;
        out += ',' + g.away_team;
        out += ',' + util::format_double(g.pregame_spread);
        out += ',' + std::to_string(g.final_home_score);
        out += ',' + std::to_string(g.final_away_score);
        out.push_back('\n');
    }
    return out;
}

std::string plays_to_csv(const std::vector<GameRecord>& games) {
    std::string out(kPlayCsvHeader);
    out.push_back('\n');
    for (const GameRecord& g : games) {
        for (const PlayRecord& p : g.plays) {
            out += p.game_id;
            out += ',' + std::to_string(p.season);
            out += ',' + std::to_string(p.play_index);
            out += ',' + std::to_string(p.elapsed_seconds);
            out += ',' + std::to_string(p.home_score);
            out += ',' + std::to_string(p.away_score);
            out += ',';
            out.push_back(side_code(p.possession));
            out += ',';
            if (p.down) out += std::to_string(*p.down);
            out += ',' + std::to_string(p.distance);
            out += ',' + std::to_string(p.yards_to_endzone);
            out += ',' + std::to_string(p.possession_number);
            out.push_back('\n');
        }
    }
    return out;
}

std::string to_jsonl(const std::vector<GameRecord>& games) {
    std::string out;
    for (const GameRecord& g : games) {
        ordered_json j;
        j["game_id"] = g.game_id;
        j["season"] = g.season;
        j["home_team"] = g.home_team;
        j["away_team"] = g.away_team;
        j["pregame_spread"] = g.pregame_spread;
        j["final_home_score"] = g.final_home_score;
        j["final_away_score"] = g.final_away_score;
        ordered_json plays = ordered_json::array();
        for (const PlayRecord& p : g.plays) {
            ordered_json pj;
            pj["play_index"] = p.play_index;
            pj["elapsed_seconds"] = p.elapsed_seconds;
            pj["home_score"] = p.home_score;
            pj["away_score"] = p.away_score;
            pj["possession"] = std::string(1, side_code(p.possession));
            if (p.down) {
                pj["down"] = *p.down;
            } else {
                pj["down"] = nullptr;
            }
            pj["distance"] = p.distance;
            pj["yards_to_endzone"] = p.yards_to_endzone;
            pj["possession_number"] = p.possession_number;
            plays.push_back(std::move(pj));
        }
        j["plays"] = std::move(plays);
        out += j.dump();
        out.push_back('\n');
    }
    return out;
}

void write_csv(const std::vector<GameRecord>& games,
               const std::filesystem::path& games_csv,
               const std::filesystem::path& plays_csv) {
    util::write_file(games_csv, games_to_csv(games));
    util::write_file(plays_csv, plays_to_csv(games));
}

void write_jsonl(const std::vector<GameRecord>& games, const std::filesystem::path& path) {
    util::write_file(path, to_jsonl(games));
}

DataPartition partition(const std::vector<GameRecord>& games, int n_test_seasons,
                        std::uint64_t seed) {
    if (n_test_seasons < 1) throw UsageError("n_test_seasons must be positive");
    std::set<int> seasons;
    for (const GameRecord& g : games) seasons.insert(g.season);
    if (static_cast<int>(seasons.size()) < n_test_seasons + 1) {
        throw InvariantError("need at least " + std::to_string(n_test_seasons + 1) +
                             " seasons, have " + std::to_string(seasons.size()));
    }
    DataPartition part;
    part.seed = seed;
    auto it = seasons.rbegin();
    for (int i = 0; i < n_test_seasons; ++i, ++it) part.test_seasons.insert(*it);

    std::vector<std::string> rest;
    for (const GameRecord& g : games) {
        if (!part.test_seasons.count(g.season)) rest.push_back(g.game_id);
    }
    std::sort(rest.begin(), rest.end());
    std::mt19937_64 rng(seed);
    std::shuffle(rest.begin(), rest.end(), rng);
    const std::size_t half = rest.size() / 2;
    part.point_value_games.insert(rest.begin(), rest.begin() + half);
    part.win_prob_games.insert(rest.begin() + half, rest.end());
    return part;
}

}  // namespace cfbwp::ingest
