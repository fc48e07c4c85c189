#include "mspem/io.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace mspem {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.push_back("");
    return out;
}

double parse_double(const std::string& s, const char* what, int row,
                    std::vector<std::string>& errors) {
    try {
        size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        errors.push_back("row " + std::to_string(row) + ": bad " + std::string(what) + " '" + s + "'");
        return 0.0;
    }
}

int parse_int(const std::string& s, const char* what, int row, std::vector<std::string>& errors) {
    try {
        size_t pos = 0;
        const int v = std::stoi(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        errors.push_back("row " + std::to_string(row) + ": bad " + std::string(what) + " '" + s + "'");
        return 0;
    }
}

}  // namespace

int CsvTable::column(const std::string& name) const {
    for (size_t j = 0; j < header.size(); ++j)
        if (header[j] == name) return static_cast<int>(j);
    return -1;
}

CsvTable read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    CsvTable table;
    std::string line;
    bool have_header = false;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        if (!have_header) {
            table.header = split_csv_line(line);
            have_header = true;
        } else {
            table.rows.push_back(split_csv_line(line));
        }
    }
    if (!have_header) throw std::runtime_error(path + ": missing header");
    return table;
}

std::vector<GameRow> read_game_rows(const std::string& path) {
    const CsvTable table = read_csv(path);
    const std::vector<std::string> required = {
        "player_id", "game_date",      "game_index", "minutes", "rest_days", "recent_load_7d",
        "consecutive_games", "home",   "age",        "bmi",     "event",     "played"};
    std::vector<std::string> errors;
    std::vector<int> idx;
    for (const auto& name : required) {
        const int j = table.column(name);
        if (j < 0) errors.push_back("header: missing column '" + name + "'");
        idx.push_back(j);
    }
    if (!errors.empty()) throw std::runtime_error(path + ": schema violations\n  " + errors.front());

    std::vector<GameRow> rows;
    rows.reserve(table.rows.size());
    for (size_t r = 0; r < table.rows.size(); ++r) {
        const auto& cells = table.rows[r];
        const int line_no = static_cast<int>(r) + 2;  // 1-based, after the header
        if (cells.size() < required.size()) {
            errors.push_back("row " + std::to_string(line_no) + ": expected " +
                             std::to_string(required.size()) + " fields, got " +
                             std::to_string(cells.size()));
            continue;
        }
        GameRow row;
        row.player_id = cells[static_cast<size_t>(idx[0])];
        row.game_date = cells[static_cast<size_t>(idx[1])];
        row.game_index = parse_int(cells[static_cast<size_t>(idx[2])], "game_index", line_no, errors);
        row.minutes = parse_double(cells[static_cast<size_t>(idx[3])], "minutes", line_no, errors);
        row.rest_days = parse_int(cells[static_cast<size_t>(idx[4])], "rest_days", line_no, errors);
        row.recent_load_7d =
            parse_double(cells[static_cast<size_t>(idx[5])], "recent_load_7d", line_no, errors);
        row.consecutive_games =
            parse_int(cells[static_cast<size_t>(idx[6])], "consecutive_games", line_no, errors);
        row.home = parse_int(cells[static_cast<size_t>(idx[7])], "home", line_no, errors);
        row.age = parse_double(cells[static_cast<size_t>(idx[8])], "age", line_no, errors);
        row.bmi = parse_double(cells[static_cast<size_t>(idx[9])], "bmi", line_no, errors);
        row.event = parse_int(cells[static_cast<size_t>(idx[10])], "event", line_no, errors);
        row.played = parse_int(cells[static_cast<size_t>(idx[11])], "played", line_no, errors);
        if (row.played != 0 && row.minutes <= 0.0)
            errors.push_back("row " + std::to_string(line_no) + ": played game with minutes <= 0");
        if (row.rest_days < 0)
            errors.push_back("row " + std::to_string(line_no) + ": negative rest_days");
        if (row.event != 0 && row.played == 0)
            errors.push_back("row " + std::to_string(line_no) + ": event on a missed game");
        rows.push_back(std::move(row));
    }
    if (!errors.empty()) {
        std::ostringstream msg;
        msg << path << ": " << errors.size() << " schema violation(s)";
        for (const auto& e : errors) msg << "\n  " << e;
        throw std::runtime_error(msg.str());
    }
    return rows;
}

PlayerFeatures read_player_features(const std::string& path) {
    const CsvTable table = read_csv(path);
    const int id_col = table.column("player_id");
    const int games_col = table.column("games_played");
    if (id_col < 0 || games_col < 0)
        throw std::runtime_error(path + ": needs player_id and games_played columns");

    PlayerFeatures pf;
    for (size_t j = 0; j < table.header.size(); ++j)
        if (static_cast<int>(j) != id_col) pf.feature_names.push_back(table.header[j]);

    pf.values.resize(static_cast<Eigen::Index>(table.rows.size()),
                     static_cast<Eigen::Index>(pf.feature_names.size()));
    std::vector<std::string> errors;
    for (size_t r = 0; r < table.rows.size(); ++r) {
        const auto& cells = table.rows[r];
        if (cells.size() != table.header.size()) {
            errors.push_back("row " + std::to_string(r + 2) + ": wrong field count");
            continue;
        }
        pf.player_ids.push_back(cells[static_cast<size_t>(id_col)]);
        Eigen::Index out_j = 0;
        for (size_t j = 0; j < cells.size(); ++j) {
            if (static_cast<int>(j) == id_col) continue;
            pf.values(static_cast<Eigen::Index>(r), out_j++) =
                parse_double(cells[j], table.header[j].c_str(), static_cast<int>(r) + 2, errors);
        }
        pf.games_played.push_back(static_cast<int>(
            pf.values(static_cast<Eigen::Index>(r),
                      static_cast<Eigen::Index>(
                          std::find(pf.feature_names.begin(), pf.feature_names.end(),
                                    "games_played") -
                          pf.feature_names.begin()))));
    }
    if (!errors.empty()) {
        std::ostringstream msg;
        msg << path << ": " << errors.size() << " schema violation(s)";
        for (const auto& e : errors) msg << "\n  " << e;
        throw std::runtime_error(msg.str());
    }
    return pf;
}

std::map<std::string, std::string> read_tier_csv(const std::string& path) {
    const CsvTable table = read_csv(path);
    const int id_col = table.column("player_id");
    const int tier_col = table.column("tier");
    if (id_col < 0 || tier_col < 0)
        throw std::runtime_error(path + ": needs player_id and tier columns");
    std::map<std::string, std::string> out;
    for (const auto& row : table.rows)
        out[row[static_cast<size_t>(id_col)]] = row[static_cast<size_t>(tier_col)];
    return out;
}

uint64_t fnv1a(const std::string& text) {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

OutputWriter::OutputWriter(std::string out_dir, uint64_t seed, std::string config_summary)
    : out_dir_(std::move(out_dir)),
      seed_(seed),
      config_summary_(std::move(config_summary)),
      config_hash_(fnv1a(config_summary_)) {
    std::filesystem::create_directories(out_dir_);
}

std::string OutputWriter::metadata_block() const {
    std::ostringstream os;
    os << "# mspem 1.0.0\n";
    os << "# seed=" << seed_ << "\n";
    os << "# config_hash=" << std::hex << config_hash_ << std::dec << "\n";
    os << "# config=" << config_summary_ << "\n";
    return os.str();
}

std::string OutputWriter::write_csv(const std::string& filename, const std::string& header,
                                    const std::vector<std::string>& rows) const {
    const std::string path = (std::filesystem::path(out_dir_) / filename).string();
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << metadata_block() << header << "\n";
    for (const auto& row : rows) out << row << "\n";
    return path;
}

std::string OutputWriter::write_json(const std::string& filename, const std::string& body) const {
    const std::string path = (std::filesystem::path(out_dir_) / filename).string();
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << body;
    return path;
}

}  // namespace mspem
