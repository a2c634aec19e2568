#pragma once

#include <algorithm>

#include "lisec/core.hpp"

namespace lisec {

struct TrickleConfig {
    SimTime i_min = 4 * kMicrosPerSecond;
    unsigned i_max_doublings = 4;
    unsigned k = 10;

    SimTime i_max() const { return i_min << i_max_doublings; }
};

// RFC 6206 timer state. `t` is the absolute fire time inside the current
// interval [interval_start, interval_start + interval).
struct TrickleState {
    TrickleConfig cfg;
    SimTime interval = 0;
    SimTime interval_start = 0;
    SimTime t = 0;
    unsigned counter = 0;
};

namespace detail {
inline SimTime draw_fire_time(SimTime start, SimTime interval, Rng& rng) {
    return start + interval / 2 + rng.uniform_time(0, interval - interval / 2);
}
}  // namespace detail

inline TrickleState trickle_start(const TrickleConfig& cfg, SimTime now, Rng& rng) {
    TrickleState s;
    s.cfg = cfg;
    s.interval = cfg.i_min;
    s.interval_start = now;
    s.t = detail::draw_fire_time(now, s.interval, rng);
    return s;
}

// Inconsistency: back to i_min with a fresh interval starting now.
inline TrickleState trickle_reset(const TrickleState& s, SimTime now, Rng& rng) {
    return trickle_start(s.cfg, now, rng);
}

struct TrickleStep {
    bool fire = false;
    TrickleState next;
};

// Runs at the scheduled fire time: decide on transmission, then open the
// next (doubled, capped) interval.
inline TrickleStep trickle_step(const TrickleState& s, SimTime now, unsigned consistent_heard,
                                Rng& rng) {
    if (now < s.t) throw Error("trickle_step called before the scheduled fire time");
    TrickleStep out;
    out.fire = consistent_heard < s.cfg.k;
    out.next = s;
    out.next.interval_start = s.interval_start + s.interval;
    out.next.interval = std::min(s.interval * 2, s.cfg.i_max());
    out.next.counter = 0;
    out.next.t = detail::draw_fire_time(out.next.interval_start, out.next.interval, rng);
    return out;
}

}  // namespace lisec
