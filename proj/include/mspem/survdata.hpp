#ifndef MSPEM_SURVDATA_HPP
#define MSPEM_SURVDATA_HPP

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mspem {

enum class SeasonPhase { early, mid, late };
enum class GapType { b2b, short_gap, normal, extended };
enum class Tier { high_usage_star, starting_role, rotation, reserve };

std::string to_string(SeasonPhase phase);
std::string to_string(GapType gap);
std::string to_string(Tier tier);

/// One raw player-game row as ingested from CSV (played games only; the
/// roster file additionally carries played=0 rows for the selection model).
struct GameRow {
    std::string player_id;
    std::string game_date;  // ISO-8601
    int game_index = 0;     // 1-based within the season
    double minutes = 0.0;
    int rest_days = 0;
    double recent_load_7d = 0.0;
    int consecutive_games = 0;
    int home = 0;
    double age = 0.0;
    double bmi = 0.0;
    int event = 0;
    int played = 1;
};

/// One player-game interval on the cumulative-minutes axis.
struct CountingRecord {
    std::string player_id;
    double t_start = 0.0;
    double t_stop = 0.0;
    int event = 0;
    double minutes = 0.0;
    int rest_days = 0;
    double recent_load_7d = 0.0;
    int consecutive_games = 0;
    SeasonPhase season_phase = SeasonPhase::early;
    GapType gap_type = GapType::normal;
    int home = 0;
    double age = 0.0;
    double bmi = 0.0;
    std::optional<Tier> tier;
};

/// One interval-split pseudo-observation: the Poisson GLM unit.
struct PedRow {
    std::string player_id;
    int record_index = 0;    // which CountingRecord this row came from
    int interval_index = 0;  // which cut interval
    double exposure = 0.0;   // minutes at risk inside the interval
    double offset = 0.0;     // log(exposure)
    int event = 0;
    double midpoint = 0.0;  // interval-midpoint time covariate
    double weight = 1.0;
};

/// Ascending interval boundaries on the cumulative-minutes axis.
struct CutPoints {
    std::vector<double> bounds;

    int num_intervals() const { return static_cast<int>(bounds.size()) - 1; }
};

/// Product-limit survival curve.
struct KmCurve {
    std::vector<double> times;      // distinct event times
    std::vector<double> survival;   // S(t) at each event time
    std::vector<int> at_risk;       // n_k
    std::vector<int> events;        // d_k
};

/// Assigns gap_type (rest days: <=1 b2b, 2 short, 3 normal, >3 extended) and
/// season_phase (game index: 1-27 early, 28-55 mid, >=56 late). Throws on
/// negative rest days or a game index < 1.
void bin_covariates(const GameRow& raw, CountingRecord& out);

/// Builds CountingRecords for one player's season from raw rows ordered by
/// game index: cumulative minutes define (t_start, t_stop]; rows with
/// played=0 are skipped (absences do not accrue minutes).
std::vector<CountingRecord> build_counting_records(std::span<const GameRow> rows);

/// Interval boundaries {0} + event-time quantiles q/J (q=1..J-1, type-7) +
/// max t_stop, duplicates collapsed. Throws when there are no events or J < 2.
CutPoints make_cutpoints(std::span<const CountingRecord> records, int j_intervals);

/// Splits every record at the interior cut points meeting (t_start, t_stop);
/// exposure is conserved exactly and the event flag lands on the final row.
/// Throws when a record extends past the cut range.
std::vector<PedRow> ped_transform(std::span<const CountingRecord> records, const CutPoints& cuts);

/// Kaplan-Meier on the cumulative-minutes axis with delayed entry:
/// at-risk(t) = #{records with t_start < t <= t_stop}.
KmCurve km_fit(std::span<const CountingRecord> records);

/// One curve per gap type (strata with no records are omitted).
std::map<GapType, KmCurve> km_by_gap_type(std::span<const CountingRecord> records);

/// S(t) from a fitted curve (right-continuous step function; S(0) = 1).
double km_survival_at(const KmCurve& curve, double t);

/// Named covariate extraction for model designs. Recognized names: age, bmi,
/// home, recent_load_7d, consecutive_games, gap_short, gap_normal,
/// gap_extended (reference b2b), phase_mid, phase_late (reference early),
/// tier_star, tier_starting, tier_rotation (reference Reserve; rows with no
/// tier read as 0 on all three).
double covariate_value(const CountingRecord& record, const std::string& name);

}  // namespace mspem

#endif
