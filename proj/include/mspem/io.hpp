#ifndef MSPEM_IO_HPP
#define MSPEM_IO_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mspem/cluster.hpp"
#include "mspem/survdata.hpp"

namespace mspem {

/// Minimal CSV table: comment lines (leading '#') are skipped, the first
/// remaining line is the header.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    int column(const std::string& name) const;  // -1 when absent
};

CsvTable read_csv(const std::string& path);

/// Parses the game-log schema
///   player_id,game_date,game_index,minutes,rest_days,recent_load_7d,
///   consecutive_games,home,age,bmi,event,played
/// Violations are collected as "<row>: <message>" entries; throws
/// std::runtime_error listing them all when any are present. The optional
/// tier CSV (player_id,tier) annotates records after ingestion.
std::vector<GameRow> read_game_rows(const std::string& path);

/// Per-player feature CSV: player_id,games_played,<numeric feature columns>.
PlayerFeatures read_player_features(const std::string& path);

/// Applies player_id -> tier from a cluster output CSV.
std::map<std::string, std::string> read_tier_csv(const std::string& path);

/// Output writer that prefixes every file with '#'-comment metadata lines
/// (version, seed, config hash).
class OutputWriter {
public:
    OutputWriter(std::string out_dir, uint64_t seed, std::string config_summary);

    /// Writes `header` + `rows` as CSV under the output directory.
    std::string write_csv(const std::string& filename, const std::string& header,
                          const std::vector<std::string>& rows) const;

    /// Writes pre-rendered text (JSON) with the same metadata block as
    /// leading comment lines.
    std::string write_json(const std::string& filename, const std::string& body) const;

    const std::string& dir() const { return out_dir_; }

private:
    std::string metadata_block() const;

    std::string out_dir_;
    uint64_t seed_;
    std::string config_summary_;
    uint64_t config_hash_;
};

/// FNV-1a hash used for the config fingerprint in output metadata.
uint64_t fnv1a(const std::string& text);

}  // namespace mspem

#endif
