#include "mspem/survdata.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

#include "mspem/stats.hpp"

namespace mspem {

std::string to_string(SeasonPhase phase) {
    switch (phase) {
        case SeasonPhase::early: return "early";
        case SeasonPhase::mid: return "mid";
        case SeasonPhase::late: return "late";
    }
    return "?";
}

std::string to_string(GapType gap) {
    switch (gap) {
        case GapType::b2b: return "b2b";
        case GapType::short_gap: return "short";
        case GapType::normal: return "normal";
        case GapType::extended: return "extended";
    }
    return "?";
}

std::string to_string(Tier tier) {
    switch (tier) {
        case Tier::high_usage_star: return "HighUsageStar";
        case Tier::starting_role: return "StartingRole";
        case Tier::rotation: return "Rotation";
        case Tier::reserve: return "Reserve";
    }
    return "?";
}

void bin_covariates(const GameRow& raw, CountingRecord& out) {
    if (raw.rest_days < 0) {
        std::ostringstream msg;
        msg << "bin_covariates: negative rest days (" << raw.rest_days << ") for player "
            << raw.player_id;
        throw std::invalid_argument(msg.str());
    }
    if (raw.game_index < 1)
        throw std::invalid_argument("bin_covariates: game index must be >= 1");

    if (raw.rest_days <= 1) out.gap_type = GapType::b2b;
    else if (raw.rest_days == 2) out.gap_type = GapType::short_gap;
    else if (raw.rest_days == 3) out.gap_type = GapType::normal;
    else out.gap_type = GapType::extended;

    if (raw.game_index <= 27) out.season_phase = SeasonPhase::early;
    else if (raw.game_index <= 55) out.season_phase = SeasonPhase::mid;
    else out.season_phase = SeasonPhase::late;
}

std::vector<CountingRecord> build_counting_records(std::span<const GameRow> rows) {
    std::vector<const GameRow*> ordered;
    for (const auto& r : rows)
        if (r.played != 0) ordered.push_back(&r);
    std::stable_sort(ordered.begin(), ordered.end(),
                     [](const GameRow* a, const GameRow* b) {
                         if (a->player_id != b->player_id) return a->player_id < b->player_id;
                         return a->game_index < b->game_index;
                     });

    std::vector<CountingRecord> out;
    out.reserve(ordered.size());
    std::string current_player;
    double clock = 0.0;
    for (const GameRow* raw : ordered) {
        if (raw->player_id != current_player) {
            current_player = raw->player_id;
            clock = 0.0;
        }
        if (raw->minutes <= 0.0) {
            std::ostringstream msg;
            msg << "build_counting_records: non-positive minutes for player " << raw->player_id
                << " game " << raw->game_index;
            throw std::invalid_argument(msg.str());
        }
        CountingRecord rec;
        rec.player_id = raw->player_id;
        rec.t_start = clock;
        clock += raw->minutes;
        rec.t_stop = clock;
        rec.event = raw->event != 0 ? 1 : 0;
        rec.minutes = raw->minutes;
        rec.rest_days = raw->rest_days;
        rec.recent_load_7d = raw->recent_load_7d;
        rec.consecutive_games = raw->consecutive_games;
        rec.home = raw->home;
        rec.age = raw->age;
        rec.bmi = raw->bmi;
        bin_covariates(*raw, rec);
        out.push_back(std::move(rec));
    }
    return out;
}

CutPoints make_cutpoints(std::span<const CountingRecord> records, int j_intervals) {
    if (j_intervals < 2) throw std::invalid_argument("make_cutpoints: J must be >= 2");
    std::vector<double> event_times;
    double max_stop = 0.0;
    for (const auto& r : records) {
        if (r.event != 0) event_times.push_back(r.t_stop);
        max_stop = std::max(max_stop, r.t_stop);
    }
    if (event_times.empty())
        throw std::runtime_error("make_cutpoints: no events; cannot place event-time quantiles");
    std::sort(event_times.begin(), event_times.end());

    std::vector<double> bounds{0.0};
    for (int q = 1; q < j_intervals; ++q)
        bounds.push_back(quantile_sorted(event_times, static_cast<double>(q) / j_intervals));
    bounds.push_back(max_stop);

    std::sort(bounds.begin(), bounds.end());
    bounds.erase(std::unique(bounds.begin(), bounds.end()), bounds.end());
    if (bounds.size() < 2) throw std::runtime_error("make_cutpoints: degenerate cut set");
    return CutPoints{std::move(bounds)};
}

std::vector<PedRow> ped_transform(std::span<const CountingRecord> records, const CutPoints& cuts) {
    if (cuts.bounds.size() < 2) throw std::invalid_argument("ped_transform: invalid cut points");
    const auto& b = cuts.bounds;
    std::vector<PedRow> out;
    for (size_t ri = 0; ri < records.size(); ++ri) {
        const auto& rec = records[ri];
        if (rec.t_stop <= rec.t_start)
            throw std::invalid_argument("ped_transform: record with t_stop <= t_start");
        if (rec.t_start < b.front() - 1e-12 || rec.t_stop > b.back() + 1e-12) {
            std::ostringstream msg;
            msg << "ped_transform: record (" << rec.t_start << ", " << rec.t_stop
                << "] for player " << rec.player_id << " outside cut range [" << b.front() << ", "
                << b.back() << "]";
            throw std::out_of_range(msg.str());
        }
        // First interval whose right bound exceeds t_start.
        size_t j = static_cast<size_t>(
            std::upper_bound(b.begin(), b.end(), rec.t_start) - b.begin());
        if (j == 0) j = 1;
        for (; j < b.size(); ++j) {
            const double lo = std::max(rec.t_start, b[j - 1]);
            const double hi = std::min(rec.t_stop, b[j]);
            if (hi <= lo) break;
            PedRow row;
            row.player_id = rec.player_id;
            row.record_index = static_cast<int>(ri);
            row.interval_index = static_cast<int>(j) - 1;
            row.exposure = hi - lo;
            row.offset = std::log(row.exposure);
            row.midpoint = 0.5 * (lo + hi);
            row.event = (rec.event != 0 && hi >= rec.t_stop - 1e-12) ? 1 : 0;
            out.push_back(std::move(row));
            if (hi >= rec.t_stop) break;
        }
    }
    return out;
}

KmCurve km_fit(std::span<const CountingRecord> records) {
    if (records.empty()) throw std::invalid_argument("km_fit: empty stratum");
    std::set<double> distinct;
    for (const auto& r : records)
        if (r.event != 0) distinct.insert(r.t_stop);

    KmCurve curve;
    double surv = 1.0;
    for (double t : distinct) {
        int n = 0, d = 0;
        for (const auto& r : records) {
            if (r.t_start < t && t <= r.t_stop) ++n;
            if (r.event != 0 && r.t_stop == t) ++d;
        }
        if (n == 0) continue;
        surv *= 1.0 - static_cast<double>(d) / n;
        curve.times.push_back(t);
        curve.survival.push_back(surv);
        curve.at_risk.push_back(n);
        curve.events.push_back(d);
    }
    return curve;
}

std::map<GapType, KmCurve> km_by_gap_type(std::span<const CountingRecord> records) {
    std::map<GapType, std::vector<CountingRecord>> strata;
    for (const auto& r : records) strata[r.gap_type].push_back(r);
    std::map<GapType, KmCurve> out;
    for (auto& [gap, recs] : strata) out.emplace(gap, km_fit(recs));
    return out;
}

double km_survival_at(const KmCurve& curve, double t) {
    double surv = 1.0;
    for (size_t k = 0; k < curve.times.size(); ++k) {
        if (curve.times[k] <= t) surv = curve.survival[k];
        else break;
    }
    return surv;
}

double covariate_value(const CountingRecord& r, const std::string& name) {
    if (name == "age") return r.age;
    if (name == "bmi") return r.bmi;
    if (name == "home") return r.home;
    if (name == "recent_load_7d") return r.recent_load_7d;
    if (name == "consecutive_games") return r.consecutive_games;
    if (name == "gap_short") return r.gap_type == GapType::short_gap ? 1.0 : 0.0;
    if (name == "gap_normal") return r.gap_type == GapType::normal ? 1.0 : 0.0;
    if (name == "gap_extended") return r.gap_type == GapType::extended ? 1.0 : 0.0;
    if (name == "phase_mid") return r.season_phase == SeasonPhase::mid ? 1.0 : 0.0;
    if (name == "phase_late") return r.season_phase == SeasonPhase::late ? 1.0 : 0.0;
    if (name == "tier_star") return r.tier == Tier::high_usage_star ? 1.0 : 0.0;
    if (name == "tier_starting") return r.tier == Tier::starting_role ? 1.0 : 0.0;
    if (name == "tier_rotation") return r.tier == Tier::rotation ? 1.0 : 0.0;
    throw std::invalid_argument("unknown Cox covariate: " + name);
}

}  // namespace mspem
