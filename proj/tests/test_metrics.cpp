#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "doctest.h"

#include "aloha/env.hpp"
#include "aloha/metrics.hpp"
#include "aloha/policy.hpp"

using namespace aloha;

namespace {

// Builds a single-user slot record carrying one age sample and an optional
// delivery flag, enough to drive metrics_log by hand.
slot_record one_user_slot(std::uint32_t age, std::uint8_t success = 0,
                          int arrivals = 0, int discarded = 0) {
    slot_record rec;
    rec.feedback = 1;
    rec.actions = {success};
    rec.successes = {success};
    rec.arrivals = {arrivals};
    rec.discarded = {discarded};
    rec.participated = {1};
    rec.state_before = {history{}};
    rec.state_after = {history{}};
    rec.aop_before = {age};
    return rec;
}

}  // namespace

TEST_CASE("update_aop resets on an empty buffer and otherwise ages by one") {
    for (std::uint32_t w : {0u, 1u, 3u, 17u, 100000u}) CHECK(update_aop(w, 0) == 0);
    CHECK(update_aop(3, 1) == 4);
    CHECK(update_aop(0, 1) == 1);
}

TEST_CASE("throughput counts delivered packets per slot") {
    metrics_log log(1);
    for (int k = 0; k < 8; ++k) log.record_slot(one_user_slot(0, 0));
    CHECK(throughput(log) == 0.0);

    metrics_log busy(1);
    for (int k = 0; k < 8; ++k) busy.record_slot(one_user_slot(0, 1));
    CHECK(throughput(busy) == 1.0);
}

TEST_CASE("average packet age over a hand-built series") {
    // ages 0,1,2,0 across four slots average to 0.75
    metrics_log log(1);
    for (std::uint32_t age : {0u, 1u, 2u, 0u}) log.record_slot(one_user_slot(age));
    const aop_summary aop = average_aop(log);
    CHECK(aop.per_user[0] == doctest::Approx(0.75).epsilon(1e-15));
    CHECK(aop.system == doctest::Approx(0.75).epsilon(1e-15));
    CHECK(aop.user_mean == doctest::Approx(0.75).epsilon(1e-15));
}

TEST_CASE("system packet age sums users and is invariant under relabeling") {
    const std::vector<std::uint32_t> series_a = {0, 1, 2, 3};
    const std::vector<std::uint32_t> series_b = {5, 0, 5, 0};

    const auto build = [](const std::vector<std::uint32_t>& first,
                          const std::vector<std::uint32_t>& second) {
        metrics_log log(2);
        for (std::size_t k = 0; k < first.size(); ++k) {
            slot_record rec;
            rec.actions = {0, 0};
            rec.successes = {0, 0};
            rec.arrivals = {0, 0};
            rec.discarded = {0, 0};
            rec.participated = {1, 1};
            rec.state_before = {history{}, history{}};
            rec.state_after = {history{}, history{}};
            rec.aop_before = {first[k], second[k]};
            log.record_slot(rec);
        }
        return log;
    };

    const aop_summary ab = average_aop(build(series_a, series_b));
    const aop_summary ba = average_aop(build(series_b, series_a));
    CHECK(ab.per_user[0] == doctest::Approx(1.5).epsilon(1e-15));
    CHECK(ab.per_user[1] == doctest::Approx(2.5).epsilon(1e-15));
    CHECK(ab.system == doctest::Approx(4.0).epsilon(1e-15));
    CHECK(ab.system == ba.system);  // the sum over users has no preferred order
    CHECK(ab.user_mean == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("percentiles of a constant series collapse onto that constant") {
    const percentile_summary s = percentile_stats(std::vector<std::uint32_t>(10, 7));
    CHECK(s.p25 == 7.0);
    CHECK(s.p50 == 7.0);
    CHECK(s.p75 == 7.0);
    CHECK(s.whisker_low == 7.0);
    CHECK(s.whisker_high == 7.0);
    CHECK(s.mean == 7.0);
}

TEST_CASE("nearest-rank percentiles of the first hundred integers") {
    std::vector<std::uint32_t> series(100);
    for (std::uint32_t i = 0; i < 100; ++i) series[i] = i;
    std::reverse(series.begin(), series.end());  // order must not matter

    const percentile_summary s = percentile_stats(series);
    CHECK(std::abs(s.p25 - 25.0) <= 1.0);
    CHECK(std::abs(s.p50 - 50.0) <= 1.0);
    CHECK(std::abs(s.p75 - 75.0) <= 1.0);
    CHECK(s.mean == doctest::Approx(49.5).epsilon(1e-15));
    CHECK(s.whisker_low == 0.0);
    CHECK(s.whisker_high == 99.0);
}

TEST_CASE("percentile computation agrees between raw series and histogram form") {
    rng_stream rng(64);
    std::vector<std::uint32_t> series;
    std::vector<std::uint64_t> counts(51, 0);
    for (int i = 0; i < 5000; ++i) {
        const auto v = static_cast<std::uint32_t>(rng.next_double() * 50.0);
        series.push_back(v);
        ++counts[v];
    }
    const percentile_summary a = percentile_stats(series);
    const percentile_summary b = percentile_stats_from_counts(counts);
    CHECK(a.p25 == b.p25);
    CHECK(a.p50 == b.p50);
    CHECK(a.p75 == b.p75);
    CHECK(a.whisker_low == b.whisker_low);
    CHECK(a.whisker_high == b.whisker_high);
    CHECK(a.mean == doctest::Approx(b.mean).epsilon(1e-12));
}

TEST_CASE("percentiles reject an empty series") {
    CHECK_THROWS_AS(percentile_stats({}), std::invalid_argument);
    CHECK_THROWS_AS(percentile_stats_from_counts({0, 0, 0}), std::invalid_argument);
}

TEST_CASE("whiskers stop at the farthest samples inside the fences") {
    // 99 small values and one far outlier: the outlier sits beyond the upper
    // fence, so the high whisker stays at the largest non-outlying sample
    std::vector<std::uint32_t> series(99, 0);
    for (std::uint32_t i = 0; i < 99; ++i) series[i] = i % 10;
    series.push_back(1000);
    const percentile_summary s = percentile_stats(series);
    CHECK(s.whisker_high < 1000.0);
    CHECK(s.whisker_low == 0.0);
}

TEST_CASE("episode age summary matches an independent single-pass recomputation") {
    sim_config cfg;
    cfg.n_users = 3;
    cfg.total_arrival_rate = 0.9;
    cfg.horizon = 4000;
    cfg.master_seed = 12;

    eb_policy pol(eb_config{backoff_variant::non_symmetric, 2.0, 16,
                            backoff_reset::on_own_success},
                  cfg.n_users);

    // reference recursion driven only by end-of-slot buffer bits
    std::vector<std::uint64_t> age_total(cfg.n_users, 0);
    std::vector<std::uint32_t> age(cfg.n_users, 0);
    const metrics_log log =
        run_episode(pol, cfg, [&](const simulator&, const slot_record& rec) {
            for (int n = 0; n < cfg.n_users; ++n) {
                age_total[n] += age[n];
                age[n] = rec.state_after[n].buffer == 0 ? 0 : age[n] + 1;
            }
        });

    const aop_summary aop = average_aop(log);
    double system_ref = 0;
    for (int n = 0; n < cfg.n_users; ++n) {
        const double ref = static_cast<double>(age_total[n]) / cfg.horizon;
        CHECK(aop.per_user[n] == doctest::Approx(ref).epsilon(1e-12));
        system_ref += ref;
    }
    CHECK(aop.system == doctest::Approx(system_ref).epsilon(1e-12));
}

TEST_CASE("symmetric policies spread deliveries evenly across users") {
    sim_config cfg;
    cfg.n_users = 5;
    cfg.total_arrival_rate = 0;
    cfg.horizon = 200000;
    cfg.master_seed = 21;
    cfg.saturated = true;

    fixed_policy pol(0.2);
    const metrics_log log = run_episode(pol, cfg);

    // each user's delivery count is binomial with q = p (1-p)^(N-1)
    const double q = 0.2 * std::pow(0.8, 4);
    const double expect = cfg.horizon * q;
    const double sigma = std::sqrt(cfg.horizon * q * (1 - q));
    for (int n = 0; n < cfg.n_users; ++n)
        CHECK(std::abs(static_cast<double>(log.success_count[n]) - expect) < 5 * sigma);
}

TEST_CASE("per-user discard rate balances arrivals against deliveries") {
    sim_config cfg;
    cfg.n_users = 10;
    cfg.total_arrival_rate = 0.8;
    cfg.horizon = 20000;
    cfg.master_seed = 5;

    eb_policy pol(eb_config{backoff_variant::non_symmetric, 2.0, 16,
                            backoff_reset::on_own_success},
                  cfg.n_users);
    const metrics_log log = run_episode(pol, cfg);

    const std::vector<double> discards = discard_rate(log);
    double mean_discard = 0;
    for (double d : discards) mean_discard += d;
    mean_discard /= cfg.n_users;

    const double per_user_load = cfg.total_arrival_rate / cfg.n_users;
    const double per_user_tput = throughput(log) / cfg.n_users;
    CHECK(std::abs(mean_discard - (per_user_load - per_user_tput)) < 0.005);
}

TEST_CASE("discard rate is zero without arrivals") {
    metrics_log log(2);
    slot_record rec;
    rec.actions = {0, 0};
    rec.successes = {0, 0};
    rec.arrivals = {0, 0};
    rec.discarded = {0, 0};
    rec.participated = {0, 0};
    rec.state_before = {history{}, history{}};
    rec.state_after = {history{}, history{}};
    rec.aop_before = {0, 0};
    for (int k = 0; k < 10; ++k) log.record_slot(rec);
    for (double d : discard_rate(log)) CHECK(d == 0.0);
}
