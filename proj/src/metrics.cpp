#include "aloha/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "aloha/env.hpp"

namespace aloha {

void metrics_log::reset(int users) {
    n_users = users;
    slots_recorded = 0;
    success_count.assign(users, 0);
    arrival_count.assign(users, 0);
    discard_count.assign(users, 0);
    aop_sum.assign(users, 0);
    aop_counts.assign(users, {});
}

void metrics_log::record_slot(const slot_record& rec) {
    for (int n = 0; n < n_users; ++n) {
        success_count[n] += rec.successes[n];
        arrival_count[n] += static_cast<std::uint64_t>(rec.arrivals[n]);
        discard_count[n] += static_cast<std::uint64_t>(rec.discarded[n]);
        const std::uint32_t age = rec.aop_before[n];
        aop_sum[n] += age;
        auto& counts = aop_counts[n];
        if (counts.size() <= age) counts.resize(age + 1, 0);
        ++counts[age];
    }
    ++slots_recorded;
}

double throughput(const metrics_log& log) {
    std::uint64_t delivered = 0;
    for (auto c : log.success_count) delivered += c;
    return log.slots_recorded == 0 ? 0.0
                                   : static_cast<double>(delivered) / log.slots_recorded;
}

std::vector<double> per_user_throughput(const metrics_log& log) {
    std::vector<double> out(log.n_users, 0.0);
    if (log.slots_recorded == 0) return out;
    for (int n = 0; n < log.n_users; ++n)
        out[n] = static_cast<double>(log.success_count[n]) / log.slots_recorded;
    return out;
}

aop_summary average_aop(const metrics_log& log) {
    aop_summary out;
    out.per_user.assign(log.n_users, 0.0);
    for (int n = 0; n < log.n_users; ++n) {
        if (log.slots_recorded > 0)
            out.per_user[n] = static_cast<double>(log.aop_sum[n]) / log.slots_recorded;
        out.system += out.per_user[n];
    }
    out.user_mean = log.n_users > 0 ? out.system / log.n_users : 0.0;
    return out;
}

std::vector<double> discard_rate(const metrics_log& log) {
    std::vector<double> out(log.n_users, 0.0);
    if (log.slots_recorded == 0) return out;
    for (int n = 0; n < log.n_users; ++n)
        out[n] = static_cast<double>(log.discard_count[n]) / log.slots_recorded;
    return out;
}

namespace {

// nearest-rank: smallest value whose cumulative count reaches ceil(q * total)
double percentile_from_counts(const std::vector<std::uint64_t>& counts,
                              std::uint64_t total, double q) {
    const std::uint64_t rank = std::max<std::uint64_t>(
        1, static_cast<std::uint64_t>(std::ceil(q * static_cast<double>(total))));
    std::uint64_t seen = 0;
    for (std::size_t v = 0; v < counts.size(); ++v) {
        seen += counts[v];
        if (seen >= rank) return static_cast<double>(v);
    }
    return counts.empty() ? 0.0 : static_cast<double>(counts.size() - 1);
}

}  // namespace

percentile_summary percentile_stats_from_counts(const std::vector<std::uint64_t>& counts) {
    std::uint64_t total = 0;
    double weighted = 0;
    std::size_t lowest = counts.size(), highest = 0;
    for (std::size_t v = 0; v < counts.size(); ++v) {
        if (counts[v] == 0) continue;
        total += counts[v];
        weighted += static_cast<double>(v) * static_cast<double>(counts[v]);
        lowest = std::min(lowest, v);
        highest = std::max(highest, v);
    }
    if (total == 0) throw std::invalid_argument("percentile_stats: empty series");

    percentile_summary s;
    s.p25 = percentile_from_counts(counts, total, 0.25);
    s.p50 = percentile_from_counts(counts, total, 0.50);
    s.p75 = percentile_from_counts(counts, total, 0.75);
    s.mean = weighted / static_cast<double>(total);

    // whiskers reach the farthest samples inside the 1.5 IQR fences
    const double iqr = s.p75 - s.p25;
    const double fence_low = s.p25 - 1.5 * iqr;
    const double fence_high = s.p75 + 1.5 * iqr;
    s.whisker_low = static_cast<double>(lowest);
    s.whisker_high = static_cast<double>(highest);
    for (std::size_t v = lowest; v <= highest; ++v) {
        if (counts[v] != 0 && static_cast<double>(v) >= fence_low) {
            s.whisker_low = static_cast<double>(v);
            break;
        }
    }
    for (std::size_t v = highest + 1; v-- > lowest;) {
        if (counts[v] != 0 && static_cast<double>(v) <= fence_high) {
            s.whisker_high = static_cast<double>(v);
            break;
        }
    }
    return s;
}

percentile_summary percentile_stats(const std::vector<std::uint32_t>& series) {
    if (series.empty()) throw std::invalid_argument("percentile_stats: empty series");
    const std::uint32_t top = *std::max_element(series.begin(), series.end());
    std::vector<std::uint64_t> counts(static_cast<std::size_t>(top) + 1, 0);
    for (std::uint32_t v : series) ++counts[v];
    return percentile_stats_from_counts(counts);
}

std::vector<percentile_summary> per_user_aop_stats(const metrics_log& log) {
    std::vector<percentile_summary> out;
    out.reserve(log.n_users);
    for (int n = 0; n < log.n_users; ++n)
        out.push_back(percentile_stats_from_counts(log.aop_counts[n]));
    return out;
}

}  // namespace aloha
