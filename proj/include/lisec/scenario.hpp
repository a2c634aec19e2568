#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <limits>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "lisec/core.hpp"
#include "lisec/rpl_node.hpp"
#include "lisec/sim_engine.hpp"

namespace lisec {

enum class Arm { Baseline, Attack, Defense, DefenseEncrypted };

inline const char* to_string(Arm a) {
    switch (a) {
        case Arm::Baseline: return "baseline";
        case Arm::Attack: return "attack";
        case Arm::Defense: return "defense";
        case Arm::DefenseEncrypted: return "defense_encrypted";
    }
    return "?";
}

inline Arm parse_arm(const std::string& s) {
    if (s == "baseline") return Arm::Baseline;
    if (s == "attack") return Arm::Attack;
    if (s == "defense") return Arm::Defense;
    if (s == "defense_encrypted") return Arm::DefenseEncrypted;
    throw ConfigError("arms", "unknown arm '" + s + "'");
}

inline bool arm_has_attackers(Arm a) { return a != Arm::Baseline; }

// Everything a run needs. Defaults: 200x200 m
// grid, 29 clients plus one border router, 50 m UDGM range, 1800 s.
struct Scenario {
    Grid grid;
    unsigned n_clients = 29;
    unsigned n_attackers = 1;
    bool mobility = false;
    double duration_s = 1800;
    std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    std::vector<Arm> arms{Arm::Baseline, Arm::Attack, Arm::Defense};
    bool encrypted = false;  // "defense" arm uses the encrypted License

    LinkModel link;
    RwpConfig rwp;
    PowerProfile power;
    RplConfig rpl;
    double boot_window_s = 300;     // clients power up uniformly over this window
    double data_drain_s = 1;        // no new reports this close to the end
    double sample_period_s = 10;
    std::size_t max_placement_retries = 10'000;
    std::uint64_t device_secret_salt = 0x5EEDC0DE12345678ULL;

    std::vector<std::string> warnings;
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline double parse_double(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        const double d = std::stod(v, &used);
        if (used != v.size() || !std::isfinite(d)) throw std::invalid_argument(v);
        return d;
    } catch (const std::logic_error&) {
        throw ConfigError(key, "expected a number, got '" + v + "'");
    }
}

inline std::uint64_t parse_uint(const std::string& key, const std::string& v) {
    std::uint64_t out = 0;
    const auto* end = v.data() + v.size();
    auto [p, ec] = std::from_chars(v.data(), end, out);
    if (ec != std::errc{} || p != end || v.empty())
        throw ConfigError(key, "expected a non-negative integer, got '" + v + "'");
    return out;
}

inline bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "on" || v == "true" || v == "1" || v == "yes") return true;
    if (v == "off" || v == "false" || v == "0" || v == "no") return false;
    throw ConfigError(key, "expected on/off, got '" + v + "'");
}

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep)) {
        cur = trim(cur);
        if (!cur.empty()) out.push_back(cur);
    }
    return out;
}

inline SimTime seconds_key(const std::string& key, const std::string& v) {
    const double d = parse_double(key, v);
    if (d < 0) throw ConfigError(key, "must be >= 0");
    return from_seconds(d);
}

}  // namespace detail

// "10" means seeds 1..10; "3,7,11" is an explicit list.
inline std::vector<std::uint64_t> parse_seeds(const std::string& v) {
    if (v.find(',') == std::string::npos) {
        const auto n = detail::parse_uint("seeds", detail::trim(v));
        if (n == 0) throw ConfigError("seeds", "need at least one seed");
        std::vector<std::uint64_t> out;
        for (std::uint64_t i = 1; i <= n; ++i) out.push_back(i);
        return out;
    }
    std::vector<std::uint64_t> out;
    for (const auto& s : detail::split(v, ',')) out.push_back(detail::parse_uint("seeds", s));
    if (out.empty()) throw ConfigError("seeds", "empty list");
    return out;
}

inline std::vector<Arm> parse_arms(const std::string& v) {
    std::vector<Arm> out;
    for (const auto& s : detail::split(v, ',')) out.push_back(parse_arm(s));
    if (out.empty()) throw ConfigError("arms", "empty list");
    return out;
}

// Applies one key=value. Unknown keys are rejected.
inline void apply_setting(Scenario& s, const std::string& key, const std::string& value) {
    using namespace detail;
    using Setter = std::function<void(const std::string&)>;
    auto u = [&](auto& field) {
        return Setter([&field, key](const std::string& v) {
            using T = std::remove_reference_t<decltype(field)>;
            const auto x = parse_uint(key, v);
            if (x > std::numeric_limits<T>::max()) throw ConfigError(key, "value out of range");
            field = static_cast<T>(x);
        });
    };
    auto d = [&](double& field) { return Setter([&field, key](const std::string& v) { field = parse_double(key, v); }); };
    auto t = [&](SimTime& field) { return Setter([&field, key](const std::string& v) { field = seconds_key(key, v); }); };
    auto ms = [&](SimTime& field) {
        return Setter([&field, key](const std::string& v) {
            const double x = parse_double(key, v);
            if (x < 0) throw ConfigError(key, "must be >= 0");
            field = from_seconds(x / 1000.0);
        });
    };
    auto b = [&](bool& field) { return Setter([&field, key](const std::string& v) { field = parse_bool(key, v); }); };

    auto& r = s.rpl;
    const std::map<std::string, Setter> table{
        {"grid_width_m", d(s.grid.width)},
        {"grid_height_m", d(s.grid.height)},
        {"n_clients", u(s.n_clients)},
        {"n_attackers", u(s.n_attackers)},
        {"mobility", b(s.mobility)},
        {"duration_s", d(s.duration_s)},
        {"seeds", Setter([&s](const std::string& v) { s.seeds = parse_seeds(v); })},
        {"arms", Setter([&s](const std::string& v) { s.arms = parse_arms(v); })},
        {"encrypted", b(s.encrypted)},
        {"tx_range_m", d(s.link.tx_range_m)},
        {"loss_prob", d(s.link.loss_prob)},
        {"hop_delay_ms", ms(s.link.hop_delay)},
        {"bitrate_bps", d(s.link.bitrate_bps)},
        {"frame_overhead_bytes", u(s.link.frame_overhead_bytes)},
        {"cpu_per_frame_ms", ms(s.link.cpu_per_frame)},
        {"speed_min_mps", d(s.rwp.speed_min)},
        {"speed_max_mps", d(s.rwp.speed_max)},
        {"pause_s", t(s.rwp.pause)},
        {"mobility_tick_s", t(s.rwp.tick)},
        {"p_tx_mw", d(s.power.p_tx_mw)},
        {"p_rx_mw", d(s.power.p_rx_mw)},
        {"p_cpu_mw", d(s.power.p_cpu_mw)},
        {"p_lpm_mw", d(s.power.p_lpm_mw)},
        {"min_rank", u(r.min_rank)},
        {"rank_increase", u(r.rank_increase)},
        {"hysteresis", u(r.hysteresis)},
        {"rt_cap", u(r.rt_cap)},
        {"root_rt_cap", u(r.root_rt_cap)},
        {"max_neighbors", u(r.max_neighbors)},
        {"dao_period_s", t(r.dao_period)},
        {"dao_ack_timeout_s", t(r.dao_ack_timeout)},
        {"dao_max_retries", u(r.dao_max_retries)},
        {"route_lifetime_s", t(r.route_lifetime)},
        {"dis_period_s", t(r.dis_period)},
        {"neighbor_timeout_s", t(r.neighbor_timeout)},
        {"parent_ban_s", t(r.parent_ban)},
        {"parent_fail_limit", u(r.parent_fail_limit)},
        {"hop_limit", u(r.hop_limit)},
        {"trickle_imin_s", t(r.trickle.i_min)},
        {"trickle_doublings", u(r.trickle.i_max_doublings)},
        {"trickle_k", u(r.trickle.k)},
        {"data_period_s", t(r.data_period)},
        {"attack_start_s", t(r.attack_start)},
        {"attack_period_s", t(r.attack_period)},
        {"forged_per_period", u(r.forged_per_period)},
        {"license_width", u(r.license_width)},
        {"boot_window_s", d(s.boot_window_s)},
        {"sample_period_s", d(s.sample_period_s)},
        {"data_drain_s", d(s.data_drain_s)},
        {"max_placement_retries", u(s.max_placement_retries)},
        {"device_secret_salt", u(s.device_secret_salt)},
    };
    auto it = table.find(key);
    if (it == table.end()) throw ConfigError(key, "unknown key");
    it->second(value);
}

inline void validate(Scenario& s) {
    s.warnings.clear();
    auto need = [](bool ok, const char* key, const std::string& what) {
        if (!ok) throw ConfigError(key, what);
    };
    need(s.grid.width > 0 && s.grid.height > 0, "grid_width_m", "grid must have positive size");
    need(s.n_clients >= 1, "n_clients", "need at least one client");
    need(s.duration_s > 0, "duration_s", "must be positive");
    need(s.link.tx_range_m > 0, "tx_range_m", "must be positive");
    need(s.link.loss_prob >= 0 && s.link.loss_prob <= 1, "loss_prob", "must be in [0, 1]");
    need(s.link.bitrate_bps > 0, "bitrate_bps", "must be positive");
    need(s.rwp.speed_min > 0 && s.rwp.speed_min <= s.rwp.speed_max, "speed_min_mps",
         "need 0 < speed_min <= speed_max");
    need(s.rwp.tick > 0, "mobility_tick_s", "must be positive");
    need(s.rpl.rank_increase > 0, "rank_increase", "must be positive");
    need(s.rpl.trickle.i_min > 0, "trickle_imin_s", "must be positive");
    need(s.rpl.trickle.i_max_doublings <= 30, "trickle_doublings", "must be <= 30");
    need(s.rpl.data_period > 0, "data_period_s", "must be positive");
    need(s.rpl.dao_period > 0, "dao_period_s", "must be positive");
    need(s.rpl.attack_period > 0, "attack_period_s", "must be positive");
    need(s.rpl.root_rt_cap >= 1 && s.rpl.rt_cap >= 1, "rt_cap", "route tables need capacity >= 1");
    need(s.rpl.license_width >= 8 && s.rpl.license_width <= 64, "license_width", "must be in [8, 64]");
    need(s.rpl.license_width == 8 || s.encrypted ||
             std::find(s.arms.begin(), s.arms.end(), Arm::Defense) == s.arms.end(),
         "license_width", "licenses wider than 8 bits only fit the encrypted options field");
    need(s.sample_period_s > 0, "sample_period_s", "must be positive");
    need(s.boot_window_s >= 0, "boot_window_s", "must be >= 0");
    need(s.data_drain_s >= 0 && s.data_drain_s < s.duration_s, "data_drain_s", "must be in [0, duration_s)");
    const bool attack_arms = std::any_of(s.arms.begin(), s.arms.end(), arm_has_attackers);
    need(!attack_arms || s.n_attackers >= 1, "n_attackers", "attack/defense arms need at least one attacker");
    if (s.n_attackers > 3)
        s.warnings.push_back("n_attackers=" + std::to_string(s.n_attackers) +
                             " is outside the usual range 0..3");
}

// Flat key=value text; '#' starts a comment. Empty input yields the defaults.
inline Scenario parse_scenario(std::istream& in) {
    Scenario s;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno), "expected key=value");
        apply_setting(s, detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)));
    }
    validate(s);
    return s;
}

inline Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("scenario", "cannot open '" + path + "'");
    return parse_scenario(in);
}

}  // namespace lisec
