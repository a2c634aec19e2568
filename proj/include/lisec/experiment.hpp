#pragma once

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "lisec/metrics.hpp"
#include "lisec/puf_auth.hpp"
#include "lisec/rpl_node.hpp"
#include "lisec/scenario.hpp"
#include "lisec/sim_engine.hpp"

namespace lisec {

// Node layout of a generated world: id 0 is the border router, then the
// clients, then the attackers.
struct Population {
    NodeId root = 0;
    std::vector<NodeId> clients;
    std::vector<NodeId> attackers;
};

struct RunResult {
    Arm arm = Arm::Baseline;
    std::uint64_t seed = 0;
    RunMetrics metrics;
    RunCounters counters;
    ProtocolCounters protocol;
    MediumCounters medium;
    std::uint64_t world_hash = 0;
};

inline RplConfig arm_config(const Scenario& s, Arm arm) {
    RplConfig c = s.rpl;
    c.defense = arm == Arm::Defense || arm == Arm::DefenseEncrypted;
    c.encrypted = arm == Arm::DefenseEncrypted || (arm == Arm::Defense && s.encrypted);
    c.data_stop = from_seconds(s.duration_s - s.data_drain_s);
    return c;
}

// Placement and credentials depend only on the seed, so every arm of a seed
// sees the same clients in the same positions; attackers are placed after
// the clients and must hear at least one of them.
inline std::vector<Vec2> place_population(const Scenario& s, std::uint64_t seed) {
    Rng rng = Rng(Rng::splitmix(seed)).fork(1);
    auto pos = connected_placement(1 + s.n_clients, s.grid, s.link.tx_range_m, rng,
                                   s.max_placement_retries);
    for (unsigned a = 0; a < s.n_attackers; ++a) {
        for (std::size_t attempt = 0;; ++attempt) {
            if (attempt >= s.max_placement_retries)
                throw Error("cannot place attacker within range of the network");
            const Vec2 p = s.grid.random_point(rng);
            const bool heard = std::any_of(pos.begin() + 1, pos.begin() + 1 + s.n_clients,
                                           [&](Vec2 q) { return distance(p, q) <= s.link.tx_range_m; });
            if (heard) {
                pos.push_back(p);
                break;
            }
        }
    }
    return pos;
}

inline World build_world(const Scenario& s, Arm arm, std::uint64_t seed, Population* pop = nullptr) {
    const auto positions = place_population(s, seed);
    const RplConfig cfg = arm_config(s, arm);
    const unsigned attackers = arm_has_attackers(arm) ? s.n_attackers : 0;

    Rng setup = Rng(Rng::splitmix(seed)).fork(2);
    World w(Rng::splitmix(seed ^ 0xA5A5A5A5ULL), s.link, s.grid);
    w.set_power(s.power);

    RootAuthority auth{CRDatabase(1 + s.n_clients + s.n_attackers), {}};
    std::vector<License> licenses(1 + s.n_clients + s.n_attackers);
    std::vector<SharedKey> keys(licenses.size());
    for (NodeId id = 1; id < licenses.size(); ++id) {
        const auto device = PufDevice::keyed(id, s.device_secret_salt ^ setup.next_u64(), cfg.license_width);
        licenses[id] = register_node(auth.db, id, device, setup).license;
        keys[id] = SharedKey::random(setup);
        auth.keys.emplace(id, keys[id]);
    }
    // Clients power up over the boot window; attackers are deployed before
    // their first forging round.
    std::vector<SimTime> boot(licenses.size(), 0);
    for (std::size_t id = 1; id < boot.size(); ++id)
        boot[id] = id <= s.n_clients ? setup.uniform_time(0, from_seconds(s.boot_window_s))
                                     : setup.uniform_time(0, std::max<SimTime>(1, cfg.attack_start));

    Population p;
    RplNode root(0, NodeRole::Root, cfg);
    root.set_authority(std::move(auth));
    w.add_node(std::move(root), positions[0], 0, false);
    for (NodeId id = 1; id <= s.n_clients; ++id) {
        w.add_node(RplNode(id, NodeRole::Client, cfg, licenses[id], keys[id]), positions[id], boot[id],
                   s.mobility);
        p.clients.push_back(id);
    }
    for (unsigned a = 0; a < attackers; ++a) {
        const NodeId id = 1 + s.n_clients + a;
        w.add_node(RplNode(id, NodeRole::Malicious, cfg, licenses[id], keys[id]), positions[id], boot[id],
                   s.mobility);
        p.attackers.push_back(id);
    }
    if (s.mobility) w.enable_mobility(s.rwp);
    if (pop) *pop = p;
    return w;
}

inline std::size_t peak_route_table(const World& w) {
    std::size_t peak = 0;
    for (const auto& n : w.nodes())
        if (!n.is_root()) peak = std::max(peak, n.state().routing_table.size());
    return peak;
}

inline RunCounters collect_counters(const World& w, const Population& p) {
    RunCounters c;
    for (NodeId id : p.clients) {
        c.sent_per_node[id] = w.node(id).data_sent();
        c.client_ledgers.push_back(w.ledger(id));
    }
    for (const auto& d : w.deliveries()) {
        ++c.received_at_root;
        c.delays_s.push_back(to_seconds(d.received - d.created));
    }
    for (const auto& n : w.nodes()) c.n_blacklisted += n.state().n_blacklisted;
    return c;
}

inline RunResult run_single(const Scenario& s, Arm arm, std::uint64_t seed, std::ostream* trace = nullptr) {
    Population pop;
    World w = build_world(s, arm, seed, &pop);
    w.set_trace(trace);
    const SimTime end = from_seconds(s.duration_s);
    const SimTime step = from_seconds(s.sample_period_s);
    std::vector<std::size_t> timeline;
    for (SimTime t = std::min(step, end);; t = std::min(t + step, end)) {
        w.run_until(t);
        timeline.push_back(peak_route_table(w));
        if (t == end) break;
    }
    RunResult r;
    r.arm = arm;
    r.seed = seed;
    r.counters = collect_counters(w, pop);
    r.counters.rt_occupancy_timeline = std::move(timeline);
    r.metrics = summarize_run(r.counters, s.duration_s);
    r.metrics.arm = to_string(arm);
    r.metrics.seed = seed;
    r.metrics.attackers = arm_has_attackers(arm) ? s.n_attackers : 0;
    r.metrics.mobility = s.mobility;
    r.protocol = w.counters();
    r.medium = w.medium();
    r.world_hash = w.state_hash();
    return r;
}

// ---------------------------------------------------------------------------
// Reports

struct ArmSummary {
    Arm arm = Arm::Baseline;
    std::size_t n = 0;
    ConfidenceInterval pdr, ae2ed, apc;
    double n_blacklist_mean = 0;
};

struct MetricsReport {
    std::vector<RunResult> runs;
    std::vector<ArmSummary> summary;

    const ArmSummary& arm(Arm a) const {
        for (const auto& s : summary)
            if (s.arm == a) return s;
        throw Error(std::string("no summary for arm ") + to_string(a));
    }
};

inline std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

inline void write_runs_csv(std::ostream& out, const std::vector<RunResult>& runs) {
    out << "arm,seed,attackers,mobility,pdr,ae2ed_s,apc_mw,n_blacklist,rt_peak\n";
    for (const auto& r : runs) {
        const auto& m = r.metrics;
        out << m.arm << ',' << m.seed << ',' << m.attackers << ',' << (m.mobility ? "on" : "off") << ','
            << format_double(m.pdr) << ',' << format_double(m.ae2ed_s) << ',' << format_double(m.apc_mw) << ','
            << m.n_blacklist << ',' << m.rt_peak << '\n';
    }
}

inline void write_summary_csv(std::ostream& out, const MetricsReport& rep, const Scenario& s) {
    out << "arm,attackers,mobility,n,pdr_mean,pdr_ci95,ae2ed_mean_s,ae2ed_ci95_s,apc_mean_mw,apc_ci95_mw,"
           "n_blacklist_mean\n";
    for (const auto& a : rep.summary) {
        auto ci = [&](double hw) { return a.n >= 2 ? format_double(hw) : std::string(); };
        out << to_string(a.arm) << ',' << (arm_has_attackers(a.arm) ? s.n_attackers : 0) << ','
            << (s.mobility ? "on" : "off") << ',' << a.n << ',' << format_double(a.pdr.mean) << ','
            << ci(a.pdr.half_width) << ',' << format_double(a.ae2ed.mean) << ',' << ci(a.ae2ed.half_width)
            << ',' << format_double(a.apc.mean) << ',' << ci(a.apc.half_width) << ','
            << format_double(a.n_blacklist_mean) << '\n';
    }
}

inline std::vector<ArmSummary> summarize(const std::vector<RunResult>& runs, const std::vector<Arm>& arms) {
    std::vector<ArmSummary> out;
    for (Arm arm : arms) {
        std::vector<double> pdrs, delays, powers;
        double bl = 0;
        for (const auto& r : runs) {
            if (r.arm != arm) continue;
            pdrs.push_back(r.metrics.pdr);
            delays.push_back(r.metrics.ae2ed_s);
            powers.push_back(r.metrics.apc_mw);
            bl += static_cast<double>(r.metrics.n_blacklist);
        }
        ArmSummary a;
        a.arm = arm;
        a.n = pdrs.size();
        if (a.n == 0) continue;
        auto agg = [&](const std::vector<double>& v) {
            if (v.size() >= 2) return aggregate_ci(v);
            return ConfidenceInterval{v.front(), 0};
        };
        a.pdr = agg(pdrs);
        a.ae2ed = agg(delays);
        a.apc = agg(powers);
        a.n_blacklist_mean = bl / static_cast<double>(a.n);
        out.push_back(a);
    }
    return out;
}

struct RunOptions {
    std::optional<std::filesystem::path> out_dir;
    bool trace = false;
    unsigned jobs = 0;  // 0 = hardware concurrency
    std::uint64_t seed_base = 0;
};

inline std::uint64_t seed_base_from_env() {
    const char* v = std::getenv("LISEC_SEED_BASE");
    if (!v || !*v) return 0;
    return detail::parse_uint("LISEC_SEED_BASE", v);
}

// One world per (arm, seed), run on a bounded pool; outputs are written
// after all runs finish, in (arm, seed) order.
inline MetricsReport run_experiment(const Scenario& s, const RunOptions& opt = {}) {
    struct Job {
        Arm arm;
        std::uint64_t seed;
    };
    std::vector<Job> jobs;
    for (Arm arm : s.arms)
        for (auto seed : s.seeds) jobs.push_back({arm, seed + opt.seed_base});

    if (opt.out_dir) std::filesystem::create_directories(*opt.out_dir);

    auto run_job = [&](const Job& j) {
        std::optional<std::ofstream> trace;
        if (opt.trace && opt.out_dir) {
            trace.emplace(*opt.out_dir / ("trace-" + std::string(to_string(j.arm)) + "-" +
                                          std::to_string(j.seed) + ".log"));
            if (!*trace) throw Error("cannot open trace file");
        }
        return run_single(s, j.arm, j.seed, trace ? &*trace : nullptr);
    };

    const unsigned workers =
        std::max(1u, opt.jobs ? opt.jobs : std::max(1u, std::thread::hardware_concurrency()));
    MetricsReport rep;
    rep.runs.resize(jobs.size());
    for (std::size_t base = 0; base < jobs.size(); base += workers) {
        std::vector<std::future<RunResult>> batch;
        const auto end = std::min(jobs.size(), base + workers);
        if (workers == 1) {
            rep.runs[base] = run_job(jobs[base]);
            continue;
        }
        for (std::size_t i = base; i < end; ++i)
            batch.push_back(std::async(std::launch::async, run_job, jobs[i]));
        for (std::size_t i = base; i < end; ++i) rep.runs[i] = batch[i - base].get();
    }
    rep.summary = summarize(rep.runs, s.arms);

    if (opt.out_dir) {
        std::ofstream runs(*opt.out_dir / "runs.csv");
        write_runs_csv(runs, rep.runs);
        std::ofstream summary(*opt.out_dir / "summary.csv");
        write_summary_csv(summary, rep, s);
        if (!runs || !summary) throw Error("failed writing CSV output");
    }
    return rep;
}

}  // namespace lisec
