#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace aloha {

struct slot_record;

// Age-of-packet recursion: the age resets to zero whenever the buffer is empty
// at the start of a slot and grows by one per slot otherwise.
inline std::uint32_t update_aop(std::uint32_t age_prev, std::uint8_t buffer_now) {
    return buffer_now == 0 ? 0u : age_prev + 1u;
}

// Box-plot style summary of one user's packet-age samples.
struct percentile_summary {
    double p25 = 0, p50 = 0, p75 = 0;
    double whisker_low = 0, whisker_high = 0;
    double mean = 0;
};

// Slot-level aggregates of one episode. Per-user packet-age distributions are
// kept as exact integer histograms, so percentile statistics do not require
// storing the full K x N sample matrix.
struct metrics_log {
    // config echo
    int n_users = 0;
    long horizon = 0;
    double total_arrival_rate = 0;
    std::uint64_t seed = 0;
    std::string policy_id;

    long slots_recorded = 0;
    std::vector<std::uint64_t> success_count;  // per user
    std::vector<std::uint64_t> arrival_count;  // per user
    std::vector<std::uint64_t> discard_count;  // per user
    std::vector<std::uint64_t> aop_sum;        // per user, sum over recorded slots
    std::vector<std::vector<std::uint64_t>> aop_counts;  // per user histogram

    metrics_log() = default;
    explicit metrics_log(int users) { reset(users); }
    bool operator==(const metrics_log&) const = default;
    void reset(int users);
    void record_slot(const slot_record& rec);
};

// Fraction of slots carrying a successful transmission; at most one packet can
// be delivered per slot, so this lies in [0, 1].
double throughput(const metrics_log& log);

std::vector<double> per_user_throughput(const metrics_log& log);

// Per-user time-averaged packet age and the system value, which is the sum
// (not the mean) of the per-user averages.
struct aop_summary {
    std::vector<double> per_user;
    double system = 0;     // sum over users
    double user_mean = 0;  // mean over users, for plotting convenience
};
aop_summary average_aop(const metrics_log& log);

// Per-user discarded packets per slot. At stationarity this matches the gap
// between per-user arrival rate and per-user throughput.
std::vector<double> discard_rate(const metrics_log& log);

// Nearest-rank percentiles with Tukey whiskers (1.5 IQR fences clamped to the
// nearest sample).
percentile_summary percentile_stats(const std::vector<std::uint32_t>& series);
percentile_summary percentile_stats_from_counts(const std::vector<std::uint64_t>& counts);

std::vector<percentile_summary> per_user_aop_stats(const metrics_log& log);

}  // namespace aloha
