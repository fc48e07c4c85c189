#include <cmath>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "mspem/rng.hpp"
#include "mspem/survdata.hpp"

using namespace mspem;

namespace {

CountingRecord make_record(const std::string& id, double start, double stop, int event) {
    CountingRecord r;
    r.player_id = id;
    r.t_start = start;
    r.t_stop = stop;
    r.event = event;
    r.minutes = stop - start;
    return r;
}

}  // namespace

TEST_SUITE_BEGIN("survdata");

TEST_CASE("covariate binning follows the gap and phase cutoffs") {
    GameRow raw;
    raw.game_index = 1;
    CountingRecord rec;

    raw.rest_days = 1;
    bin_covariates(raw, rec);
    CHECK(rec.gap_type == GapType::b2b);
    raw.rest_days = 0;
    bin_covariates(raw, rec);
    CHECK(rec.gap_type == GapType::b2b);
    raw.rest_days = 2;
    bin_covariates(raw, rec);
    CHECK(rec.gap_type == GapType::short_gap);
    raw.rest_days = 3;
    bin_covariates(raw, rec);
    CHECK(rec.gap_type == GapType::normal);
    raw.rest_days = 4;
    bin_covariates(raw, rec);
    CHECK(rec.gap_type == GapType::extended);

    raw.rest_days = 2;
    raw.game_index = 27;
    bin_covariates(raw, rec);
    CHECK(rec.season_phase == SeasonPhase::early);
    raw.game_index = 28;
    bin_covariates(raw, rec);
    CHECK(rec.season_phase == SeasonPhase::mid);
    raw.game_index = 55;
    bin_covariates(raw, rec);
    CHECK(rec.season_phase == SeasonPhase::mid);
    raw.game_index = 56;
    bin_covariates(raw, rec);
    CHECK(rec.season_phase == SeasonPhase::late);

    raw.rest_days = -1;
    CHECK_THROWS_AS(bin_covariates(raw, rec), std::invalid_argument);
}

TEST_CASE("binning is total and idempotent on its output") {
    Rng rng(3);
    for (int i = 0; i < 200; ++i) {
        GameRow raw;
        raw.rest_days = rng.uniform_int(0, 12);
        raw.game_index = rng.uniform_int(1, 82);
        CountingRecord rec;
        bin_covariates(raw, rec);
        CountingRecord again = rec;
        bin_covariates(raw, again);
        CHECK(again.gap_type == rec.gap_type);
        CHECK(again.season_phase == rec.season_phase);
    }
}

TEST_CASE("cut points at event-time quantiles") {
    std::vector<CountingRecord> recs;
    for (double t : {10.0, 20.0, 30.0, 40.0}) recs.push_back(make_record("a", t - 5, t, 1));
    const CutPoints cuts = make_cutpoints(recs, 2);
    REQUIRE(cuts.bounds.size() == 3);
    CHECK(cuts.bounds[0] == 0.0);
    CHECK(cuts.bounds[1] == doctest::Approx(25.0));
    CHECK(cuts.bounds[2] == doctest::Approx(40.0));
}

TEST_CASE("tied event times collapse to deduplicated cuts") {
    std::vector<CountingRecord> recs;
    recs.push_back(make_record("a", 0, 30, 1));
    recs.push_back(make_record("b", 0, 30, 1));
    recs.push_back(make_record("c", 0, 50, 0));
    const CutPoints cuts = make_cutpoints(recs, 2);
    REQUIRE(cuts.bounds.size() == 3);
    CHECK(cuts.bounds[0] == 0.0);
    CHECK(cuts.bounds[1] == doctest::Approx(30.0));
    CHECK(cuts.bounds[2] == doctest::Approx(50.0));
}

TEST_CASE("J=20 produces 20 intervals on rich data") {
    Rng rng(12);
    std::vector<CountingRecord> recs;
    for (int i = 0; i < 400; ++i) {
        const double stop = rng.uniform(10.0, 2000.0);
        recs.push_back(make_record("p" + std::to_string(i), 0.0, stop, rng.bernoulli(0.5)));
    }
    const CutPoints cuts = make_cutpoints(recs, 20);
    CHECK(cuts.num_intervals() == 20);
    CHECK_THROWS_AS(make_cutpoints(recs, 1), std::invalid_argument);
}

TEST_CASE("no events cannot define cut points") {
    std::vector<CountingRecord> recs{make_record("a", 0, 10, 0)};
    CHECK_THROWS_AS(make_cutpoints(recs, 5), std::runtime_error);
}

TEST_CASE("PED split places exposure and the event flag correctly") {
    CutPoints cuts{{0.0, 50.0, 100.0}};
    SUBCASE("record spanning both intervals") {
        std::vector<CountingRecord> recs{make_record("a", 0, 100, 1)};
        const auto rows = ped_transform(recs, cuts);
        REQUIRE(rows.size() == 2);
        CHECK(rows[0].exposure == doctest::Approx(50.0));
        CHECK(rows[0].event == 0);
        CHECK(rows[0].offset == doctest::Approx(std::log(50.0)));
        CHECK(rows[0].midpoint == doctest::Approx(25.0));
        CHECK(rows[1].exposure == doctest::Approx(50.0));
        CHECK(rows[1].event == 1);
        CHECK(rows[1].interval_index == 1);
    }
    SUBCASE("record inside the first interval") {
        std::vector<CountingRecord> recs{make_record("a", 0, 30, 0)};
        const auto rows = ped_transform(recs, cuts);
        REQUIRE(rows.size() == 1);
        CHECK(rows[0].exposure == doctest::Approx(30.0));
        CHECK(rows[0].event == 0);
    }
    SUBCASE("record outside the cut range errors") {
        std::vector<CountingRecord> recs{make_record("a", 0, 120, 0)};
        CHECK_THROWS_AS(ped_transform(recs, cuts), std::out_of_range);
    }
}

TEST_CASE("PED exposure conservation over 1000 random records") {
    Rng rng(77);
    std::vector<CountingRecord> recs;
    int n_events = 0;
    for (int i = 0; i < 1000; ++i) {
        const double start = rng.uniform(0.0, 900.0);
        const double stop = start + rng.uniform(0.5, 60.0);
        const int ev = rng.bernoulli(0.3) ? 1 : 0;
        n_events += ev;
        recs.push_back(make_record("p" + std::to_string(i % 37), start, stop, ev));
    }
    const CutPoints cuts = make_cutpoints(recs, 20);
    const auto rows = ped_transform(recs, cuts);

    std::vector<double> exposure(recs.size(), 0.0);
    int flagged = 0;
    for (const auto& row : rows) {
        exposure[static_cast<size_t>(row.record_index)] += row.exposure;
        flagged += row.event;
    }
    for (size_t i = 0; i < recs.size(); ++i)
        CHECK(std::abs(exposure[i] - (recs[i].t_stop - recs[i].t_start)) < 1e-9);
    CHECK(flagged == n_events);
}

TEST_CASE("KM with no events is identically one") {
    std::vector<CountingRecord> recs{make_record("a", 0, 10, 0), make_record("b", 0, 20, 0)};
    const KmCurve curve = km_fit(recs);
    CHECK(curve.times.empty());
    CHECK(km_survival_at(curve, 15.0) == doctest::Approx(1.0));
}

TEST_CASE("KM matches the hand-computed product limit") {
    std::vector<CountingRecord> recs{make_record("a", 0, 1, 1), make_record("b", 0, 2, 1),
                                     make_record("c", 0, 3, 0)};
    const KmCurve curve = km_fit(recs);
    REQUIRE(curve.times.size() == 2);
    CHECK(curve.survival[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(curve.survival[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(curve.at_risk[0] == 3);
    CHECK(curve.at_risk[1] == 2);
    // Non-increasing survival.
    for (size_t k = 1; k < curve.survival.size(); ++k)
        CHECK(curve.survival[k] <= curve.survival[k - 1]);
}

TEST_CASE("KM with all-event distinct times equals the empirical survival function") {
    std::vector<CountingRecord> recs;
    const int n = 12;
    for (int i = 0; i < n; ++i)
        recs.push_back(make_record("p" + std::to_string(i), 0, 10.0 * (i + 1), 1));
    const KmCurve curve = km_fit(recs);
    REQUIRE(curve.times.size() == static_cast<size_t>(n));
    for (int k = 0; k < n; ++k)
        CHECK(curve.survival[static_cast<size_t>(k)] ==
              doctest::Approx(static_cast<double>(n - k - 1) / n).epsilon(1e-12));
}

TEST_CASE("KM honors delayed entry") {
    // Late entrant is not at risk at the first event time.
    std::vector<CountingRecord> recs{make_record("a", 0, 5, 1), make_record("b", 0, 9, 0),
                                     make_record("c", 6, 12, 1)};
    const KmCurve curve = km_fit(recs);
    REQUIRE(curve.times.size() == 2);
    CHECK(curve.at_risk[0] == 2);  // c enters after t=5
    CHECK(curve.survival[0] == doctest::Approx(0.5));
    CHECK(curve.at_risk[1] == 1);
}

TEST_CASE("counting records accumulate the cumulative-minutes clock per player") {
    std::vector<GameRow> rows;
    for (int g = 1; g <= 3; ++g) {
        GameRow r;
        r.player_id = "a";
        r.game_index = g;
        r.minutes = 30.0;
        r.rest_days = 2;
        r.event = g == 3 ? 1 : 0;
        rows.push_back(r);
    }
    GameRow missed;
    missed.player_id = "a";
    missed.game_index = 4;
    missed.minutes = 0.0;
    missed.played = 0;
    rows.push_back(missed);

    const auto recs = build_counting_records(rows);
    REQUIRE(recs.size() == 3);
    CHECK(recs[0].t_start == 0.0);
    CHECK(recs[0].t_stop == doctest::Approx(30.0));
    CHECK(recs[2].t_start == doctest::Approx(60.0));
    CHECK(recs[2].t_stop == doctest::Approx(90.0));
    CHECK(recs[2].event == 1);
}

TEST_SUITE_END();
