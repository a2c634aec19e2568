#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "lisec/core.hpp"
#include "lisec/sim_engine.hpp"

namespace lisec {

class UndefinedMetricError : public Error {
public:
    using Error::Error;
};

struct RunCounters {
    std::map<NodeId, std::uint64_t> sent_per_node;  // legitimate clients only
    std::uint64_t received_at_root = 0;
    std::vector<double> delays_s;
    std::vector<EnergyLedger> client_ledgers;
    std::uint64_t n_blacklisted = 0;
    std::vector<std::size_t> rt_occupancy_timeline;  // peak table size over all routers, per sample

    std::uint64_t total_sent() const {
        std::uint64_t s = 0;
        for (const auto& [id, n] : sent_per_node) s += n;
        return s;
    }
};

inline double pdr(const RunCounters& c) {
    const auto sent = c.total_sent();
    if (sent == 0) throw UndefinedMetricError("PDR undefined: no packets sent");
    return static_cast<double>(c.received_at_root) / static_cast<double>(sent);
}

// Mean per-packet delay over delivered packets.
inline double ae2ed(const RunCounters& c) {
    if (c.delays_s.empty()) throw UndefinedMetricError("AE2ED undefined: no packets delivered");
    return std::accumulate(c.delays_s.begin(), c.delays_s.end(), 0.0) /
           static_cast<double>(c.delays_s.size());
}

// Mean over legitimate clients of Energy / Tst, in mW.
inline double apc(const RunCounters& c, double tst_s) {
    if (!(tst_s > 0)) throw Error("APC: simulation time must be positive");
    if (c.client_ledgers.empty()) throw UndefinedMetricError("APC undefined: no clients");
    double sum = 0;
    for (const auto& l : c.client_ledgers) sum += power_of(l, tst_s);
    return sum / static_cast<double>(c.client_ledgers.size());
}

struct ConfidenceInterval {
    double mean = 0;
    double half_width = 0;
};

// Student-t 95% interval: mean +/- t(0.975, n-1) * s / sqrt(n).
inline ConfidenceInterval aggregate_ci(std::span<const double> values) {
    const auto n = values.size();
    if (n < 2) throw Error("aggregate_ci needs at least two values");
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(n);
    // Deviations are taken about the first value so identical inputs give
    // exactly zero spread.
    double shift = 0;
    for (double v : values) shift += v - values[0];
    shift /= static_cast<double>(n);
    double ss = 0;
    for (double v : values) ss += (v - values[0] - shift) * (v - values[0] - shift);
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));
    const boost::math::students_t dist(static_cast<double>(n - 1));
    const double t = boost::math::quantile(dist, 0.975);
    return {mean, t * sd / std::sqrt(static_cast<double>(n))};
}

// Per-run metric row.
struct RunMetrics {
    std::string arm;
    std::uint64_t seed = 0;
    unsigned attackers = 0;
    bool mobility = false;
    double pdr = 0;
    double ae2ed_s = 0;
    double apc_mw = 0;
    std::uint64_t n_blacklist = 0;
    std::size_t rt_peak = 0;
};

inline RunMetrics summarize_run(const RunCounters& c, double tst_s) {
    RunMetrics m;
    m.pdr = pdr(c);
    m.ae2ed_s = c.delays_s.empty() ? 0.0 : ae2ed(c);
    m.apc_mw = apc(c, tst_s);
    m.n_blacklist = c.n_blacklisted;
    for (auto v : c.rt_occupancy_timeline) m.rt_peak = std::max(m.rt_peak, v);
    return m;
}

}  // namespace lisec
