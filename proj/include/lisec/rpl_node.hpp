#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "lisec/core.hpp"
#include "lisec/messages.hpp"
#include "lisec/puf_auth.hpp"
#include "lisec/trickle.hpp"

namespace lisec {

enum class NodeRole { Root, Client, Malicious };

inline const char* to_string(NodeRole r) {
    switch (r) {
        case NodeRole::Root: return "root";
        case NodeRole::Client: return "client";
        case NodeRole::Malicious: return "malicious";
    }
    return "?";
}

// Protocol constants. Every field is reachable from the scenario file.
struct RplConfig {
    std::uint16_t min_rank = 256;
    std::uint16_t rank_increase = 256;
    std::uint16_t hysteresis = 128;

    std::size_t rt_cap = 16;        // per-router downward routes
    std::size_t root_rt_cap = 32;   // the border router keeps a route per node
    std::size_t max_neighbors = 64;

    SimTime dao_period = 60 * kMicrosPerSecond;
    SimTime dao_ack_timeout = 5 * kMicrosPerSecond;
    unsigned dao_max_retries = 2;
    SimTime route_lifetime = 0;     // 0 = routes never expire
    SimTime dis_period = 10 * kMicrosPerSecond;
    SimTime neighbor_timeout = 300 * kMicrosPerSecond;
    SimTime parent_ban = 120 * kMicrosPerSecond;
    unsigned parent_fail_limit = 3;
    std::uint8_t hop_limit = 64;

    TrickleConfig trickle;

    SimTime data_period = 30 * kMicrosPerSecond;
    SimTime data_stop = 0;          // no data generated after this time; 0 = unlimited

    bool defense = false;
    bool encrypted = false;
    unsigned license_width = kDefaultLicenseWidth;

    SimTime attack_start = 30 * kMicrosPerSecond;
    SimTime attack_period = 30 * kMicrosPerSecond;
    unsigned forged_per_period = 4;
};

inline std::uint16_t compute_rank(std::uint16_t parent_rank, std::uint16_t rank_increase) {
    const std::uint32_t r = std::uint32_t{parent_rank} + rank_increase;
    return r >= kInfiniteRank ? kInfiniteRank : static_cast<std::uint16_t>(r);
}

// --- frames exchanged over the simulated medium ----------------------------

struct DaoFrame {
    std::vector<std::uint8_t> bytes;
};
struct StatusFrame {
    std::vector<std::uint8_t> bytes;
};
struct DataPacket {
    Address source;
    std::uint32_t seq = 0;
    SimTime created = 0;
};

using Payload = std::variant<DisMessage, DioMessage, DaoFrame, StatusFrame, DataPacket>;

constexpr std::size_t kDataPayloadBytes = 30;

struct Frame {
    Payload payload;
    // Link hops travelled including the current one; 1 on the first hop.
    std::uint8_t hops = 1;

    std::size_t payload_bytes() const {
        return std::visit(
            [](const auto& p) -> std::size_t {
                using T = std::decay_t<decltype(p)>;
                if constexpr (std::is_same_v<T, DisMessage>) return 2;
                else if constexpr (std::is_same_v<T, DioMessage>) return 24;
                else if constexpr (std::is_same_v<T, DataPacket>) return kDataPayloadBytes;
                else return p.bytes.size();
            },
            payload);
    }

    bool on_dao_path() const {
        return std::holds_alternative<DaoFrame>(payload) ||
               std::holds_alternative<StatusFrame>(payload);
    }
};

enum class TimerKind : std::uint8_t { Trickle, Dis, DaoRefresh, DaoAck, Data, Attack };
constexpr std::size_t kTimerKinds = 6;

struct TimerRequest {
    TimerKind kind;
    SimTime at;
    std::uint64_t token;
};

struct Outgoing {
    std::optional<Address> to;  // nullopt = link-local broadcast
    Frame frame;
};

struct TraceRecord {
    std::string event;
    std::string detail;
};

struct DataDelivery {
    Address source;
    SimTime created;
    SimTime received;
};

// Side effects of one callback; the engine turns them into events.
struct Outbox {
    bool trace_enabled = false;
    std::vector<Outgoing> sends;
    std::vector<TimerRequest> timers;
    std::vector<TraceRecord> trace;
    std::vector<DataDelivery> deliveries;

    void log(const char* event, std::string detail) {
        if (trace_enabled) trace.push_back({event, std::move(detail)});
    }
};

// Run-wide protocol counters, mostly for metrics and trace-level assertions.
struct ProtocolCounters {
    std::uint64_t decode_errors = 0;
    std::uint64_t dao_dropped_blacklisted = 0;
    std::uint64_t dao_dropped_orphan = 0;
    std::uint64_t route_full = 0;
    std::uint64_t status_no_route = 0;
    std::uint64_t forged_emitted = 0;
    std::uint64_t genuine_accepted = 0;
    std::uint64_t genuine_rejected = 0;
    std::uint64_t forged_accepted = 0;
    std::uint64_t forged_rejected = 0;
    std::uint64_t data_no_parent = 0;
    std::uint64_t data_unregistered = 0;
    std::uint64_t data_blacklisted = 0;
    std::uint64_t data_hop_limit = 0;
    std::uint64_t blacklist_events = 0;
};

struct NodeContext {
    SimTime now;
    Rng& rng;
    Outbox& out;
    ProtocolCounters& counters;
};

struct RoutingEntry {
    Address target;
    Address next_hop;
    SimTime installed_at = 0;
    SimTime expires_at = 0;  // 0 = no expiry
    // Learned directly from the DAO's emitter (first link hop). A NACK for
    // such a route blacklists the emitter.
    bool direct = false;
};

struct Neighbor {
    std::uint16_t rank = kInfiniteRank;
    SimTime last_heard = 0;
    std::optional<std::uint8_t> dtsn;
};

enum class RouteAddResult { Added, Refreshed, Full };

struct NodeState {
    NodeId id = 0;
    Address address;
    NodeRole role = NodeRole::Client;
    std::uint16_t rank = kInfiniteRank;
    std::optional<Address> parent;
    std::map<Address, Neighbor> neighbors;
    std::vector<RoutingEntry> routing_table;
    std::set<Address> blacklist;
    std::uint32_t n_blacklisted = 0;
    TrickleState trickle;
    License license;
    std::uint8_t dao_seq = 0;
    std::uint8_t dtsn = 0;

    bool joined() const { return rank != kInfiniteRank; }
    const RoutingEntry* route_to(const Address& target) const {
        for (const auto& e : routing_table)
            if (e.target == target) return &e;
        return nullptr;
    }
};

// Border-router credentials: the CRP database and, for the encrypted
// variant, the per-node shared keys.
struct RootAuthority {
    CRDatabase db;
    std::map<NodeId, SharedKey> keys;
};

class RplNode {
public:
    RplNode(NodeId id, NodeRole role, const RplConfig& cfg, License license = License{},
            std::optional<SharedKey> key = std::nullopt)
        : cfg_(cfg), key_(key) {
        s_.id = id;
        s_.address = Address::of_node(id);
        s_.role = role;
        s_.license = license;
        if (role == NodeRole::Root) s_.rank = cfg_.min_rank;
    }

    const NodeState& state() const noexcept { return s_; }
    NodeState& mutable_state() noexcept { return s_; }
    const RplConfig& config() const noexcept { return cfg_; }
    NodeId id() const noexcept { return s_.id; }
    const Address& address() const noexcept { return s_.address; }
    NodeRole role() const noexcept { return s_.role; }
    bool is_root() const noexcept { return s_.role == NodeRole::Root; }
    bool registered() const noexcept { return registered_; }
    std::uint64_t data_sent() const noexcept { return data_sent_; }
    bool booted() const noexcept { return booted_; }

    void set_authority(RootAuthority auth) { authority_ = std::move(auth); }
    const RootAuthority* authority() const { return authority_ ? &*authority_ : nullptr; }
    void set_rt_cap(std::size_t cap) { rt_cap_override_ = cap; }
    std::size_t rt_cap() const {
        if (rt_cap_override_) return *rt_cap_override_;
        return is_root() ? cfg_.root_rt_cap : cfg_.rt_cap;
    }
    void set_generates_data(bool on) { generates_data_ = on; }
    bool generates_data() const { return generates_data_ && s_.role == NodeRole::Client; }

    // --- lifecycle ----------------------------------------------------------

    void boot(NodeContext& ctx) {
        booted_ = true;
        if (is_root()) {
            s_.trickle = trickle_start(cfg_.trickle, ctx.now, ctx.rng);
            arm(ctx, TimerKind::Trickle, s_.trickle.t);
            return;
        }
        send_dis(ctx);
        if (s_.role == NodeRole::Malicious) arm(ctx, TimerKind::Attack, ctx.now + cfg_.attack_start);
    }

    void on_timer(NodeContext& ctx, TimerKind kind, std::uint64_t token) {
        if (token != tokens_[static_cast<std::size_t>(kind)]) return;  // superseded
        switch (kind) {
            case TimerKind::Trickle: on_trickle(ctx); break;
            case TimerKind::Dis:
                if (!s_.joined()) send_dis(ctx);
                break;
            case TimerKind::DaoRefresh:
                retries_ = 0;
                on_sender_dao(ctx);
                arm(ctx, TimerKind::DaoRefresh, ctx.now + cfg_.dao_period);
                break;
            case TimerKind::DaoAck: on_dao_ack_timeout(ctx); break;
            case TimerKind::Data: generate_data(ctx); break;
            case TimerKind::Attack:
                malicious_emit(ctx);
                arm(ctx, TimerKind::Attack, ctx.now + cfg_.attack_period);
                break;
        }
    }

    void on_frame(NodeContext& ctx, const Address& from, const Frame& f) {
        if (s_.blacklist.count(from)) {
            if (std::holds_alternative<DataPacket>(f.payload)) ++ctx.counters.data_blacklisted;
            else if (std::holds_alternative<DaoFrame>(f.payload)) ++ctx.counters.dao_dropped_blacklisted;
            return;
        }
        touch_neighbor(ctx.now, from);
        std::visit(
            [&](const auto& p) {
                using T = std::decay_t<decltype(p)>;
                if constexpr (std::is_same_v<T, DisMessage>) {
                    if (auto dio = handle_dis(from)) send(ctx, from, Frame{*dio});
                } else if constexpr (std::is_same_v<T, DioMessage>) {
                    handle_dio(ctx, p);
                } else if constexpr (std::is_same_v<T, DaoFrame>) {
                    if (is_root()) on_root_dao(ctx, from, p.bytes);
                    else on_receiver_dao(ctx, from, f.hops, p.bytes);
                } else if constexpr (std::is_same_v<T, StatusFrame>) {
                    on_receiver_status(ctx, p.bytes);
                } else if constexpr (std::is_same_v<T, DataPacket>) {
                    forward_data(ctx, from, p, f.hops);
                }
            },
            f.payload);
    }

    // Link-layer feedback for unicasts (acknowledged or not).
    void on_link_result(NodeContext& ctx, const Address& to, bool delivered) {
        if (!s_.parent || to != *s_.parent) return;
        if (delivered) {
            parent_failures_ = 0;
            return;
        }
        if (++parent_failures_ >= cfg_.parent_fail_limit) lose_parent(ctx);
    }

    // --- protocol operations -----------------------------------------------

    std::optional<DioMessage> handle_dis(const Address&) const {
        if (!s_.joined()) return std::nullopt;
        return make_dio();
    }

    void handle_dio(NodeContext& ctx, const DioMessage& dio) {
        if (s_.blacklist.count(dio.sender)) return;
        auto& n = s_.neighbors[dio.sender];
        n.rank = dio.rank;
        n.last_heard = ctx.now;
        const auto previous_dtsn = n.dtsn;
        n.dtsn = dio.dtsn;
        if (is_root()) {
            ++s_.trickle.counter;
            return;
        }
        if (is_banned(ctx.now, dio.sender)) return;

        if (!s_.joined()) {
            if (dio.rank == kInfiniteRank) return;
            adopt_parent(ctx, dio.sender, dio.rank);
            return;
        }
        if (s_.parent && dio.sender == *s_.parent) {
            if (dio.rank == kInfiniteRank) {
                lose_parent(ctx);
                return;
            }
            if (previous_dtsn && dio.dtsn != *previous_dtsn) {
                // The parent moved: re-advertise so the new path learns this
                // node, and pass the request on to its own children.
                ++s_.dtsn;
                reset_trickle(ctx);
                arm(ctx, TimerKind::DaoRefresh, ctx.now + ctx.rng.uniform_time(0, kMicrosPerSecond));
            }
            const auto updated = compute_rank(dio.rank, cfg_.rank_increase);
            if (updated != s_.rank) {
                s_.rank = updated;
                reset_trickle(ctx);
            } else {
                ++s_.trickle.counter;
            }
            return;
        }
        if (dio.rank == kInfiniteRank) return;
        const auto candidate = compute_rank(dio.rank, cfg_.rank_increase);
        if (std::uint32_t{candidate} + cfg_.hysteresis < s_.rank) {
            adopt_parent(ctx, dio.sender, dio.rank);
        } else if (candidate >= s_.rank) {
            ++s_.trickle.counter;
        }
    }

    // Sends this node's own DAO (License in Reserved, or encrypted in the
    // options field) to the preferred parent.
    void on_sender_dao(NodeContext& ctx) {
        if (!s_.parent || is_root()) return;
        DaoModified dao;
        dao.src = s_.address;
        dao.target = s_.address;
        dao.sequence = ++s_.dao_seq;
        if (cfg_.encrypted && key_) {
            dao.options = encrypt_license(*key_, s_.license, (std::uint64_t{s_.id} << 32) | ++nonce_);
        } else {
            dao.reserved = static_cast<std::uint8_t>(s_.license.bits());
        }
        auto bytes = encode_dao(dao);
        ctx.out.log("DAO_TX", "to=" + s_.parent->str() + " target=" + dao.target.str() +
                                  " seq=" + std::to_string(dao.sequence) + " frame=" + to_hex(bytes));
        send(ctx, *s_.parent, Frame{DaoFrame{std::move(bytes)}, 1});
        arm(ctx, TimerKind::DaoAck, ctx.now + cfg_.dao_ack_timeout);
    }

    // Storing-mode router: install the downward route, relay toward the root.
    void on_receiver_dao(NodeContext& ctx, const Address& from, std::uint8_t hops,
                         const std::vector<std::uint8_t>& bytes) {
        DaoModified dao;
        try {
            dao = decode_dao(bytes);
        } catch (const DecodeError&) {
            ++ctx.counters.decode_errors;
            return;
        }
        if (s_.blacklist.count(dao.src) || s_.blacklist.count(dao.target)) {
            ++ctx.counters.dao_dropped_blacklisted;
            return;
        }
        if (!s_.parent || hops >= cfg_.hop_limit) {
            ++ctx.counters.dao_dropped_orphan;
            return;
        }
        install_route(ctx, dao.target, from, hops == 1);
        ctx.out.log("DAO_FWD", "to=" + s_.parent->str() + " target=" + dao.target.str() +
                                   " seq=" + std::to_string(dao.sequence));
        send(ctx, *s_.parent, Frame{DaoFrame{bytes}, static_cast<std::uint8_t>(hops + 1)});
    }

    // ACK/NACK travelling down the DAO path.
    void on_receiver_status(NodeContext& ctx, const std::vector<std::uint8_t>& bytes) {
        DaoStatus st;
        try {
            st = decode_status(bytes);
        } catch (const DecodeError&) {
            ++ctx.counters.decode_errors;
            return;
        }
        if (st.originator == s_.address) {
            consume_status(ctx, st);
            return;
        }
        purge_expired(ctx.now);
        auto it = std::find_if(s_.routing_table.begin(), s_.routing_table.end(),
                               [&](const RoutingEntry& e) { return e.target == st.originator; });
        if (it == s_.routing_table.end()) {
            if (s_.role != NodeRole::Malicious) ++ctx.counters.status_no_route;
            return;
        }
        const RoutingEntry entry = *it;
        const char* ev = st.is_ack() ? "ACK" : "NACK";
        ctx.out.log(ev, "fwd to=" + entry.next_hop.str() + " target=" + st.originator.str());
        send(ctx, entry.next_hop, Frame{StatusFrame{bytes}, 1});
        if (st.is_nack()) {
            s_.routing_table.erase(it);
            if (entry.direct) blacklist(ctx, entry.next_hop);
        }
    }

    // Border router: check the License against the CRP store and answer.
    // Returns nullopt when the DAO is dropped without an answer.
    std::optional<DaoStatus> on_root_dao(NodeContext& ctx, const Address& from,
                                         const std::vector<std::uint8_t>& bytes) {
        DaoModified dao;
        try {
            dao = decode_dao(bytes);
        } catch (const DecodeError&) {
            ++ctx.counters.decode_errors;
            return std::nullopt;
        }
        const Verdict v = cfg_.defense ? verify(dao) : Verdict::Accept;
        const bool forged = !is_registered_identity(dao.src);
        if (v == Verdict::Accept) {
            if (install_route(ctx, dao.target, from, false) == RouteAddResult::Full) return std::nullopt;
            ++(forged ? ctx.counters.forged_accepted : ctx.counters.genuine_accepted);
        } else {
            ++(forged ? ctx.counters.forged_rejected : ctx.counters.genuine_rejected);
        }
        DaoStatus st{dao.src, dao.sequence, v == Verdict::Accept ? kStatusAck : kStatusRejected};
        ctx.out.log(st.is_ack() ? "ACK" : "NACK",
                    "to=" + from.str() + " target=" + dao.src.str() + " seq=" + std::to_string(dao.sequence));
        send(ctx, from, Frame{StatusFrame{encode_status(st)}, 1});
        return st;
    }

    // RTF attacker: a batch of DAOs for identities that do not exist.
    void malicious_emit(NodeContext& ctx) {
        if (s_.role != NodeRole::Malicious || !s_.parent) return;
        for (unsigned i = 0; i < cfg_.forged_per_period; ++i) {
            DaoModified dao;
            dao.src = Address::forged(ctx.rng.next_u64() & 0xffffffffffffULL);
            dao.target = dao.src;
            dao.sequence = static_cast<std::uint8_t>(ctx.rng.next_u64());
            if (cfg_.encrypted) {
                const std::size_t n = license_bytes(cfg_.license_width);
                dao.options.resize(9 + n);
                dao.options[0] = static_cast<std::uint8_t>(cfg_.license_width);
                for (std::size_t b = 1; b < dao.options.size(); ++b)
                    dao.options[b] = static_cast<std::uint8_t>(ctx.rng.next_u64());
            } else {
                dao.reserved = static_cast<std::uint8_t>(ctx.rng.next_u64());
            }
            ++ctx.counters.forged_emitted;
            auto bytes = encode_dao(dao);
            ctx.out.log("DAO_TX", "to=" + s_.parent->str() + " target=" + dao.target.str() +
                                      " seq=" + std::to_string(dao.sequence) + " forged frame=" + to_hex(bytes));
            send(ctx, *s_.parent, Frame{DaoFrame{std::move(bytes)}, 1});
        }
    }

    void forward_data(NodeContext& ctx, const Address& from, const DataPacket& pkt, std::uint8_t hops) {
        (void)from;
        purge_expired(ctx.now);
        if (is_root()) {
            // The border router only accepts traffic from nodes it holds a
            // downward route for, i.e. nodes whose DAO it has stored.
            if (!s_.route_to(pkt.source)) {
                ++ctx.counters.data_unregistered;
                return;
            }
            ctx.out.deliveries.push_back({pkt.source, pkt.created, ctx.now});
            ctx.out.log("DATA_RX", "src=" + pkt.source.str() + " seq=" + std::to_string(pkt.seq));
            return;
        }
        if (!s_.parent) {
            ++ctx.counters.data_no_parent;
            return;
        }
        if (hops >= cfg_.hop_limit) {
            ++ctx.counters.data_hop_limit;
            return;
        }
        send(ctx, *s_.parent, Frame{pkt, static_cast<std::uint8_t>(hops + 1)});
    }

    // Route table maintenance; exposed for step-through tests.
    RouteAddResult install_route(NodeContext& ctx, const Address& target, const Address& next_hop,
                                 bool direct) {
        purge_expired(ctx.now);
        const SimTime expires = cfg_.route_lifetime > 0 ? ctx.now + cfg_.route_lifetime : 0;
        for (auto& e : s_.routing_table) {
            if (e.target == target) {
                e.next_hop = next_hop;
                e.expires_at = expires;
                e.direct = direct;
                return RouteAddResult::Refreshed;
            }
        }
        if (s_.routing_table.size() >= rt_cap()) {
            ++ctx.counters.route_full;
            ctx.out.log("ROUTE_FULL", "target=" + target.str() + " via=" + next_hop.str());
            return RouteAddResult::Full;
        }
        s_.routing_table.push_back({target, next_hop, ctx.now, expires, direct});
        ctx.out.log("ROUTE_ADD", "target=" + target.str() + " via=" + next_hop.str());
        return RouteAddResult::Added;
    }

    void purge_expired(SimTime now) {
        std::erase_if(s_.routing_table,
                      [&](const RoutingEntry& e) { return e.expires_at != 0 && e.expires_at <= now; });
    }

    DioMessage make_dio() const {
        DioMessage d;
        d.sender = s_.address;
        d.dodag_id = Address::of_node(0);
        d.rank = s_.rank;
        d.dtsn = s_.dtsn;
        return d;
    }

private:
    void arm(NodeContext& ctx, TimerKind kind, SimTime at) {
        auto& tok = tokens_[static_cast<std::size_t>(kind)];
        ctx.out.timers.push_back({kind, at, ++tok});
    }
    void cancel(TimerKind kind) { ++tokens_[static_cast<std::size_t>(kind)]; }

    void send(NodeContext& ctx, std::optional<Address> to, Frame f) {
        ctx.out.sends.push_back({std::move(to), std::move(f)});
    }

    void send_dis(NodeContext& ctx) {
        send(ctx, std::nullopt, Frame{DisMessage{s_.address}});
        arm(ctx, TimerKind::Dis, ctx.now + cfg_.dis_period);
    }

    void on_trickle(NodeContext& ctx) {
        if (!s_.joined()) return;
        auto step = trickle_step(s_.trickle, ctx.now, s_.trickle.counter, ctx.rng);
        if (step.fire) {
            ctx.out.log("DIO_TX", "rank=" + std::to_string(s_.rank));
            send(ctx, std::nullopt, Frame{make_dio()});
        }
        s_.trickle = step.next;
        arm(ctx, TimerKind::Trickle, s_.trickle.t);
    }

    void reset_trickle(NodeContext& ctx) {
        s_.trickle = trickle_start(cfg_.trickle, ctx.now, ctx.rng);
        arm(ctx, TimerKind::Trickle, s_.trickle.t);
    }

    void adopt_parent(NodeContext& ctx, const Address& parent, std::uint16_t parent_rank) {
        s_.parent = parent;
        s_.rank = compute_rank(parent_rank, cfg_.rank_increase);
        ++s_.dtsn;
        parent_failures_ = 0;
        registered_ = false;
        retries_ = 0;
        cancel(TimerKind::Dis);
        // Reporting starts once the node has first joined the DODAG.
        if (generates_data() && !data_started_) {
            data_started_ = true;
            arm(ctx, TimerKind::Data, ctx.now + ctx.rng.uniform_time(0, cfg_.data_period));
        }
        reset_trickle(ctx);
        on_sender_dao(ctx);
        arm(ctx, TimerKind::DaoRefresh, ctx.now + cfg_.dao_period);
    }

    std::optional<std::pair<Address, std::uint16_t>> best_parent(SimTime now, std::uint16_t below_rank) const {
        std::optional<std::pair<Address, std::uint16_t>> best;
        for (const auto& [addr, n] : s_.neighbors) {
            if (n.rank == kInfiniteRank || n.rank >= below_rank) continue;
            if (now - n.last_heard > cfg_.neighbor_timeout) continue;
            if (s_.blacklist.count(addr) || is_banned(now, addr)) continue;
            if (!best || n.rank < best->second) best = std::make_pair(addr, n.rank);
        }
        return best;
    }

    void lose_parent(NodeContext& ctx) {
        if (!s_.parent) return;
        const auto old_rank = s_.rank;
        s_.neighbors.erase(*s_.parent);
        s_.parent.reset();
        registered_ = false;
        if (auto alt = best_parent(ctx.now, old_rank)) {
            adopt_parent(ctx, alt->first, alt->second);
            return;
        }
        detach(ctx);
    }

    void detach(NodeContext& ctx) {
        s_.rank = kInfiniteRank;
        s_.parent.reset();
        cancel(TimerKind::Trickle);
        cancel(TimerKind::DaoRefresh);
        cancel(TimerKind::DaoAck);
        ctx.out.log("DIO_TX", "rank=infinite");
        send(ctx, std::nullopt, Frame{make_dio()});  // poison
        send_dis(ctx);
    }

    void on_dao_ack_timeout(NodeContext& ctx) {
        if (registered_ || !s_.parent) return;
        if (retries_ < cfg_.dao_max_retries) {
            ++retries_;
            on_sender_dao(ctx);
            return;
        }
        // Path does not confirm registrations; try another parent.
        retries_ = 0;
        const auto current = *s_.parent;
        const auto old_rank = s_.rank;
        if (auto alt = best_parent(ctx.now, old_rank); alt && alt->first != current) {
            banned_[current] = ctx.now + cfg_.parent_ban;
            adopt_parent(ctx, alt->first, alt->second);
        }
    }

    void consume_status(NodeContext& ctx, const DaoStatus& st) {
        if (st.is_ack()) {
            if (st.sequence == s_.dao_seq) {
                registered_ = true;
                retries_ = 0;
                cancel(TimerKind::DaoAck);
            }
            ctx.out.log("ACK", "rx seq=" + std::to_string(st.sequence));
        } else {
            if (st.sequence == s_.dao_seq) registered_ = false;
            ctx.out.log("NACK", "rx seq=" + std::to_string(st.sequence));
        }
    }

    void generate_data(NodeContext& ctx) {
        if (cfg_.data_stop > 0 && ctx.now > cfg_.data_stop) return;
        arm(ctx, TimerKind::Data, ctx.now + cfg_.data_period);
        ++data_sent_;
        DataPacket pkt{s_.address, ++data_seq_, ctx.now};
        if (!s_.parent) {
            ++ctx.counters.data_no_parent;
            return;
        }
        ctx.out.log("DATA_TX", "to=" + s_.parent->str() + " seq=" + std::to_string(pkt.seq));
        send(ctx, *s_.parent, Frame{pkt, 1});
    }

    void blacklist(NodeContext& ctx, const Address& addr) {
        if (!s_.blacklist.insert(addr).second) return;
        ++s_.n_blacklisted;
        ++ctx.counters.blacklist_events;
        s_.neighbors.erase(addr);
        std::erase_if(s_.routing_table,
                      [&](const RoutingEntry& e) { return e.target == addr || e.next_hop == addr; });
        ctx.out.log("BLACKLIST", "addr=" + addr.str() + " n_bl=" + std::to_string(s_.n_blacklisted));
        if (s_.parent && *s_.parent == addr) lose_parent(ctx);
    }

    void touch_neighbor(SimTime now, const Address& from) {
        auto it = s_.neighbors.find(from);
        if (it != s_.neighbors.end()) {
            it->second.last_heard = now;
            return;
        }
        if (s_.neighbors.size() >= cfg_.max_neighbors) {
            auto stalest = s_.neighbors.end();
            for (auto n = s_.neighbors.begin(); n != s_.neighbors.end(); ++n) {
                if (s_.parent && n->first == *s_.parent) continue;
                if (stalest == s_.neighbors.end() || n->second.last_heard < stalest->second.last_heard)
                    stalest = n;
            }
            if (stalest == s_.neighbors.end()) return;
            s_.neighbors.erase(stalest);
        }
        s_.neighbors.emplace(from, Neighbor{kInfiniteRank, now, std::nullopt});
    }

    bool is_banned(SimTime now, const Address& a) const {
        auto it = banned_.find(a);
        return it != banned_.end() && it->second > now;
    }

    bool is_registered_identity(const Address& a) const {
        if (!authority_) return !a.is_forged_block();
        auto id = a.node_id();
        return id && authority_->db.contains(*id);
    }

    Verdict verify(const DaoModified& dao) const {
        if (!authority_) return Verdict::Reject;
        const auto id = dao.src.node_id();
        if (dao.encrypted()) {
            if (!id) return Verdict::Reject;
            auto k = authority_->keys.find(*id);
            if (k == authority_->keys.end()) return Verdict::Reject;
            try {
                return verify_license(authority_->db, id, decrypt_license(k->second, dao.options));
            } catch (const Error&) {
                return Verdict::Reject;
            }
        }
        if (cfg_.encrypted) return Verdict::Reject;  // plain License where ciphertext is required
        return verify_license(authority_->db, id, License(dao.reserved, kDefaultLicenseWidth));
    }

    RplConfig cfg_;
    NodeState s_;
    std::optional<SharedKey> key_;
    std::optional<RootAuthority> authority_;
    std::optional<std::size_t> rt_cap_override_;
    std::array<std::uint64_t, kTimerKinds> tokens_{};
    std::map<Address, SimTime> banned_;
    bool booted_ = false;
    bool registered_ = false;
    bool generates_data_ = true;
    bool data_started_ = false;
    unsigned retries_ = 0;
    unsigned parent_failures_ = 0;
    std::uint64_t nonce_ = 0;
    std::uint64_t data_sent_ = 0;
    std::uint32_t data_seq_ = 0;
};

}  // namespace lisec
