#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdint>
#include <iomanip>
#include <optional>
#include <ostream>
#include <queue>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "lisec/core.hpp"
#include "lisec/rpl_node.hpp"

namespace lisec {

struct Vec2 {
    double x = 0;
    double y = 0;
    friend bool operator==(const Vec2&, const Vec2&) = default;
};

inline double distance(Vec2 a, Vec2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

// ---------------------------------------------------------------------------
// Energy

struct PowerProfile {
    double p_tx_mw = 52.2;
    double p_rx_mw = 56.4;
    double p_cpu_mw = 1.8;
    double p_lpm_mw = 0.0545;
};

// Seconds spent per radio/CPU state. LPM is the residual state, settled
// against elapsed time by EnergyLedger::settle.
struct EnergyLedger {
    double tx_s = 0;
    double rx_s = 0;
    double cpu_s = 0;
    double lpm_s = 0;
    PowerProfile power;

    void settle(double elapsed_s) { lpm_s = std::max(0.0, elapsed_s - tx_s - rx_s - cpu_s); }
};

inline double energy_of(const EnergyLedger& l) {
    return l.tx_s * l.power.p_tx_mw + l.rx_s * l.power.p_rx_mw + l.cpu_s * l.power.p_cpu_mw +
           l.lpm_s * l.power.p_lpm_mw;
}

inline double power_of(const EnergyLedger& l, double tst_s) {
    if (!(tst_s > 0)) throw Error("power_of: simulation time must be positive");
    return energy_of(l) / tst_s;
}

// ---------------------------------------------------------------------------
// Medium and mobility

struct LinkModel {
    double tx_range_m = 50;
    double loss_prob = 0;
    SimTime hop_delay = 5'000;           // propagation + MAC, per hop
    double bitrate_bps = 250'000;
    std::size_t frame_overhead_bytes = 25;
    SimTime cpu_per_frame = 1'000;

    double airtime_s(std::size_t payload_bytes) const {
        return static_cast<double>((payload_bytes + frame_overhead_bytes) * 8) / bitrate_bps;
    }
};

struct RwpConfig {
    double speed_min = 1.0;
    double speed_max = 2.0;
    SimTime pause = 0;
    SimTime tick = kMicrosPerSecond;
};

struct RwpState {
    Vec2 waypoint;
    double speed = 1;
    SimTime pause_until = 0;
};

struct Grid {
    double width = 200;
    double height = 200;

    Vec2 clamp(Vec2 p) const { return {std::clamp(p.x, 0.0, width), std::clamp(p.y, 0.0, height)}; }
    Vec2 center() const { return {width / 2, height / 2}; }
    Vec2 random_point(Rng& rng) const { return {rng.uniform(0, width), rng.uniform(0, height)}; }
};

// One RWP step of length speed*dt toward the waypoint. Returns true on arrival.
inline bool rwp_advance(Vec2& pos, const RwpState& st, double dt_s) {
    const double d = distance(pos, st.waypoint);
    const double step = st.speed * dt_s;
    if (d <= step) {
        pos = st.waypoint;
        return true;
    }
    pos.x += (st.waypoint.x - pos.x) / d * step;
    pos.y += (st.waypoint.y - pos.y) / d * step;
    return false;
}

// ---------------------------------------------------------------------------
// Events

struct BootEvent {
    NodeId node;
};
struct TimerEvent {
    NodeId node;
    TimerKind kind;
    std::uint64_t token;
};
struct DeliveryEvent {
    NodeId to;
    Address from;
    Frame frame;
};
struct LinkFeedbackEvent {
    NodeId node;
    Address to;
    bool delivered;
};
struct MobilityEvent {};

using EventPayload = std::variant<BootEvent, TimerEvent, DeliveryEvent, LinkFeedbackEvent, MobilityEvent>;

struct Event {
    SimTime time = 0;
    std::uint64_t seq = 0;
    EventPayload payload;
};

// Min-queue on (time, seq); seq is assigned at insertion so equal-time events
// drain in insertion order.
class EventQueue {
public:
    void push(SimTime time, EventPayload p) { heap_.push(Event{time, next_seq_++, std::move(p)}); }
    bool empty() const { return heap_.empty(); }
    std::size_t size() const { return heap_.size(); }
    const Event& top() const { return heap_.top(); }
    Event pop() {
        Event e = heap_.top();
        heap_.pop();
        return e;
    }

private:
    struct Later {
        bool operator()(const Event& a, const Event& b) const {
            return a.time != b.time ? a.time > b.time : a.seq > b.seq;
        }
    };
    std::priority_queue<Event, std::vector<Event>, Later> heap_;
    std::uint64_t next_seq_ = 0;
};

struct MediumCounters {
    std::uint64_t frames_tx = 0;
    std::uint64_t dao_path_tx = 0;
    std::uint64_t data_tx = 0;
    std::uint64_t unicast_lost = 0;
    std::uint64_t unicast_out_of_range = 0;
};

// The simulated network: nodes, positions, medium, energy and the clock.
// Owns all state, so a World can be moved to another thread as one unit.
class World {
public:
    World(std::uint64_t seed, LinkModel link, Grid grid = {})
        : rng_(seed), link_(link), grid_(grid) {}

    World(const World&) = delete;
    World& operator=(const World&) = delete;
    World(World&&) = default;
    World& operator=(World&&) = default;

    NodeId add_node(RplNode node, Vec2 pos, SimTime boot_at = 0, bool mobile = false) {
        const NodeId id = static_cast<NodeId>(nodes_.size());
        if (node.id() != id) throw Error("node ids must be dense and added in order");
        nodes_.push_back(std::move(node));
        positions_.push_back(grid_.clamp(pos));
        ledgers_.push_back(EnergyLedger{0, 0, 0, 0, power_});
        mobile_.push_back(mobile);
        rwp_.push_back(RwpState{});
        schedule(boot_at, BootEvent{id});
        return id;
    }

    void set_power(PowerProfile p) {
        power_ = p;
        for (auto& l : ledgers_) l.power = p;
    }

    void enable_mobility(RwpConfig cfg) {
        rwp_cfg_ = cfg;
        for (std::size_t i = 0; i < nodes_.size(); ++i)
            if (mobile_[i]) draw_leg(i);
        schedule(clock_ + cfg.tick, MobilityEvent{});
    }

    void set_trace(std::ostream* out) { trace_ = out; }

    void schedule(SimTime at, EventPayload p) {
        if (at < clock_)
            throw Error("cannot schedule an event in the past (t=" + std::to_string(at) +
                        " < clock=" + std::to_string(clock_) + ")");
        queue_.push(at, std::move(p));
    }

    // Processes every event with time <= t_end, then sets the clock to t_end.
    void run_until(SimTime t_end) {
        if (t_end < clock_) throw Error("run_until: target time is in the past");
        while (!queue_.empty() && queue_.top().time <= t_end) {
            Event e = queue_.pop();
            clock_ = e.time;
            dispatch(e);
        }
        clock_ = t_end;
        for (auto& l : ledgers_) l.settle(to_seconds(clock_));
    }

    // Frame emission through the unit-disk medium. Returns the number of
    // scheduled deliveries.
    std::size_t transmit(NodeId from, const std::optional<Address>& to, const Frame& f) {
        const double air = link_.airtime_s(f.payload_bytes());
        const double cpu = to_seconds(link_.cpu_per_frame);
        ledgers_[from].tx_s += air;
        ledgers_[from].cpu_s += cpu;
        ++medium_.frames_tx;
        if (f.on_dao_path()) ++medium_.dao_path_tx;
        if (std::holds_alternative<DataPacket>(f.payload)) ++medium_.data_tx;

        const Address& from_addr = nodes_[from].address();
        std::size_t delivered = 0;
        auto try_deliver = [&](NodeId rx) {
            if (!nodes_[rx].booted()) return false;
            if (distance(positions_[from], positions_[rx]) > link_.tx_range_m) return false;
            if (link_.loss_prob > 0 && rng_.bernoulli(link_.loss_prob)) return false;
            ledgers_[rx].rx_s += air;
            ledgers_[rx].cpu_s += cpu;
            schedule(clock_ + link_.hop_delay, DeliveryEvent{rx, from_addr, f});
            ++delivered;
            return true;
        };

        if (!to) {
            for (NodeId rx = 0; rx < nodes_.size(); ++rx)
                if (rx != from) try_deliver(rx);
            return delivered;
        }
        const auto rx = to->node_id();
        bool ok = false;
        if (rx && *rx < nodes_.size() && *rx != from) {
            if (distance(positions_[from], positions_[*rx]) > link_.tx_range_m)
                ++medium_.unicast_out_of_range;
            ok = try_deliver(*rx);
        }
        if (!ok) ++medium_.unicast_lost;
        schedule(clock_ + link_.hop_delay, LinkFeedbackEvent{from, *to, ok});
        return delivered;
    }

    void move_nodes(SimTime dt) {
        const double dt_s = to_seconds(dt);
        for (std::size_t i = 0; i < nodes_.size(); ++i) {
            if (!mobile_[i] || clock_ < rwp_[i].pause_until) continue;
            if (rwp_advance(positions_[i], rwp_[i], dt_s)) {
                rwp_[i].pause_until = clock_ + rwp_cfg_.pause;
                draw_leg(i);
            }
            positions_[i] = grid_.clamp(positions_[i]);
        }
    }

    bool in_range(NodeId a, NodeId b) const {
        return distance(positions_[a], positions_[b]) <= link_.tx_range_m;
    }

    // Unit-disk connectivity from node 0 over the current positions.
    bool connected() const {
        if (nodes_.empty()) return true;
        std::vector<bool> seen(nodes_.size(), false);
        std::vector<NodeId> stack{0};
        seen[0] = true;
        while (!stack.empty()) {
            const NodeId u = stack.back();
            stack.pop_back();
            for (NodeId v = 0; v < nodes_.size(); ++v)
                if (!seen[v] && in_range(u, v)) {
                    seen[v] = true;
                    stack.push_back(v);
                }
        }
        return std::all_of(seen.begin(), seen.end(), [](bool b) { return b; });
    }

    // --- accessors --------------------------------------------------------

    SimTime clock() const noexcept { return clock_; }
    std::size_t size() const noexcept { return nodes_.size(); }
    RplNode& node(NodeId id) { return nodes_.at(id); }
    const RplNode& node(NodeId id) const { return nodes_.at(id); }
    const std::vector<RplNode>& nodes() const noexcept { return nodes_; }
    Vec2 position(NodeId id) const { return positions_.at(id); }
    void set_position(NodeId id, Vec2 p) { positions_.at(id) = grid_.clamp(p); }
    const EnergyLedger& ledger(NodeId id) const { return ledgers_.at(id); }
    const std::vector<EnergyLedger>& ledgers() const noexcept { return ledgers_; }
    RwpState& rwp(NodeId id) { return rwp_.at(id); }
    const LinkModel& link() const noexcept { return link_; }
    const Grid& grid() const noexcept { return grid_; }
    Rng& rng() noexcept { return rng_; }
    const ProtocolCounters& counters() const noexcept { return counters_; }
    const MediumCounters& medium() const noexcept { return medium_; }
    const std::vector<DataDelivery>& deliveries() const noexcept { return deliveries_; }
    std::size_t pending_events() const { return queue_.size(); }

    // Structured text snapshot for debugging and determinism checks.
    std::string snapshot() const {
        std::ostringstream o;
        o << std::setprecision(17);
        o << "clock " << clock_ << '\n';
        for (std::size_t i = 0; i < nodes_.size(); ++i) {
            const auto& s = nodes_[i].state();
            const auto& l = ledgers_[i];
            o << "node " << i << " role=" << to_string(s.role) << " pos=" << positions_[i].x << ','
              << positions_[i].y << " rank=" << s.rank
              << " parent=" << (s.parent ? s.parent->str() : std::string("-"))
              << " routes=" << s.routing_table.size() << " bl=" << s.n_blacklisted
              << " registered=" << nodes_[i].registered() << " sent=" << nodes_[i].data_sent()
              << " tx=" << l.tx_s << " rx=" << l.rx_s << " cpu=" << l.cpu_s << " lpm=" << l.lpm_s << '\n';
            for (const auto& r : s.routing_table)
                o << "  route " << r.target.str() << " via " << r.next_hop.str() << " at "
                  << r.installed_at << '\n';
        }
        o << "deliveries " << deliveries_.size() << " frames " << medium_.frames_tx << '\n';
        return o.str();
    }

    std::uint64_t state_hash() const {
        std::uint64_t h = 0xcbf29ce484222325ULL;
        for (unsigned char c : snapshot()) h = (h ^ c) * 0x100000001b3ULL;
        return h;
    }

private:
    void draw_leg(std::size_t i) {
        rwp_[i].waypoint = grid_.random_point(rng_);
        rwp_[i].speed = rng_.uniform(rwp_cfg_.speed_min, rwp_cfg_.speed_max);
    }

    void dispatch(const Event& e) {
        std::visit(
            [&](const auto& p) {
                using T = std::decay_t<decltype(p)>;
                if constexpr (std::is_same_v<T, MobilityEvent>) {
                    move_nodes(rwp_cfg_.tick);
                    schedule(clock_ + rwp_cfg_.tick, MobilityEvent{});
                } else if constexpr (std::is_same_v<T, BootEvent>) {
                    with_node(p.node, [&](RplNode& n, NodeContext& ctx) { n.boot(ctx); });
                } else if constexpr (std::is_same_v<T, TimerEvent>) {
                    with_node(p.node, [&](RplNode& n, NodeContext& ctx) { n.on_timer(ctx, p.kind, p.token); });
                } else if constexpr (std::is_same_v<T, DeliveryEvent>) {
                    with_node(p.to, [&](RplNode& n, NodeContext& ctx) { n.on_frame(ctx, p.from, p.frame); });
                } else if constexpr (std::is_same_v<T, LinkFeedbackEvent>) {
                    with_node(p.node,
                              [&](RplNode& n, NodeContext& ctx) { n.on_link_result(ctx, p.to, p.delivered); });
                }
            },
            e.payload);
    }

    template <class F>
    void with_node(NodeId id, F&& f) {
        Outbox out;
        out.trace_enabled = trace_ != nullptr;
        NodeContext ctx{clock_, rng_, out, counters_};
        f(nodes_[id], ctx);
        for (const auto& t : out.timers) schedule(t.at, TimerEvent{id, t.kind, t.token});
        for (const auto& s : out.sends) transmit(id, s.to, s.frame);
        for (const auto& d : out.deliveries) deliveries_.push_back(d);
        if (trace_) {
            for (const auto& r : out.trace) {
                char when[32];
                std::snprintf(when, sizeof when, "%.6f", to_seconds(clock_));
                *trace_ << when << '\t' << id << '\t' << r.event << '\t' << r.detail << '\n';
            }
        }
    }

    Rng rng_;
    LinkModel link_;
    Grid grid_;
    PowerProfile power_;
    RwpConfig rwp_cfg_;
    SimTime clock_ = 0;
    EventQueue queue_;
    std::vector<RplNode> nodes_;
    std::vector<Vec2> positions_;
    std::vector<EnergyLedger> ledgers_;
    std::vector<bool> mobile_;
    std::vector<RwpState> rwp_;
    ProtocolCounters counters_;
    MediumCounters medium_;
    std::vector<DataDelivery> deliveries_;
    std::ostream* trace_ = nullptr;
};

// Uniform placement around a root at the grid center, re-drawn until the
// unit-disk graph is connected.
inline std::vector<Vec2> connected_placement(std::size_t n_nodes, const Grid& grid, double range,
                                             Rng& rng, std::size_t max_retries = 10'000) {
    std::vector<Vec2> pos(n_nodes);
    for (std::size_t attempt = 0; attempt < max_retries; ++attempt) {
        pos[0] = grid.center();
        for (std::size_t i = 1; i < n_nodes; ++i) pos[i] = grid.random_point(rng);
        std::vector<bool> seen(n_nodes, false);
        std::vector<std::size_t> stack{0};
        seen[0] = true;
        std::size_t count = 1;
        while (!stack.empty()) {
            const auto u = stack.back();
            stack.pop_back();
            for (std::size_t v = 0; v < n_nodes; ++v)
                if (!seen[v] && distance(pos[u], pos[v]) <= range) {
                    seen[v] = true;
                    ++count;
                    stack.push_back(v);
                }
        }
        if (count == n_nodes) return pos;
    }
    throw Error("no connected topology after " + std::to_string(max_retries) + " placements");
}

}  // namespace lisec
