#include <algorithm>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "fig2_world.hpp"
#include "lisec/experiment.hpp"

using namespace lisec;

namespace {

constexpr SimTime kSec = kMicrosPerSecond;

// Drives one node by hand: every callback gets a fresh context and the
// resulting outbox is kept for inspection.
struct Harness {
    Rng rng{1};
    Outbox out;
    ProtocolCounters counters;
    SimTime now = 0;

    NodeContext ctx() {
        out = Outbox{};
        return NodeContext{now, rng, out, counters};
    }

    // Clears the outbox and advances the clock of an existing context.
    void fresh(NodeContext& c) {
        out = Outbox{};
        c.now = now;
    }

    template <class T>
    std::vector<std::pair<std::optional<Address>, T>> sent() const {
        std::vector<std::pair<std::optional<Address>, T>> r;
        for (const auto& s : out.sends)
            if (auto* p = std::get_if<T>(&s.frame.payload)) r.emplace_back(s.to, *p);
        return r;
    }

    std::optional<TimerRequest> timer(TimerKind k) const {
        std::optional<TimerRequest> last;
        for (const auto& t : out.timers)
            if (t.kind == k) last = t;
        return last;
    }
};

DioMessage dio_from(NodeId id, std::uint16_t rank, std::uint8_t dtsn = 0) {
    DioMessage d;
    d.sender = Address::of_node(id);
    d.dodag_id = Address::of_node(0);
    d.rank = rank;
    d.dtsn = dtsn;
    return d;
}

std::vector<std::uint8_t> dao_bytes(const Address& src, std::uint8_t license, std::uint8_t seq = 1) {
    DaoModified m;
    m.src = m.target = src;
    m.reserved = license;
    m.sequence = seq;
    return encode_dao(m);
}

std::vector<std::uint8_t> status_bytes(const Address& who, std::uint8_t status, std::uint8_t seq = 1) {
    return encode_status(DaoStatus{who, seq, status});
}

// Client 1 joined under the root at rank 512.
RplNode joined_client(Harness& h, NodeId id = 1, License lic = License(0xC0)) {
    RplNode n(id, NodeRole::Client, RplConfig{}, lic);
    auto c = h.ctx();
    n.boot(c);
    h.fresh(c);
    n.handle_dio(c, dio_from(0, 256));
    return n;
}

}  // namespace

TEST(ComputeRank, Increments) {
    EXPECT_EQ(compute_rank(256, 256), 512);
    std::uint16_t r = 256;
    std::vector<std::uint16_t> chain{r};
    for (int i = 0; i < 3; ++i) chain.push_back(r = compute_rank(r, 256));
    EXPECT_EQ(chain, (std::vector<std::uint16_t>{256, 512, 768, 1024}));
    EXPECT_EQ(compute_rank(65535, 256), 65535);
    EXPECT_EQ(compute_rank(65400, 256), 65535);
}

TEST(HandleDis, RootAndJoinState) {
    RplNode root(0, NodeRole::Root, RplConfig{});
    ASSERT_TRUE(root.handle_dis(Address::of_node(1)));
    EXPECT_EQ(root.handle_dis(Address::of_node(1))->rank, 256);

    RplNode client(1, NodeRole::Client, RplConfig{});
    EXPECT_FALSE(client.handle_dis(Address::of_node(2)));

    Harness h;
    auto joined = joined_client(h);
    const auto counter = joined.state().trickle.counter;
    EXPECT_EQ(joined.handle_dis(Address::of_node(2))->rank, 512);
    EXPECT_EQ(joined.state().trickle.counter, counter);
}

TEST(HandleDio, FirstJoinEmitsDao) {
    Harness h;
    RplNode n(1, NodeRole::Client, RplConfig{}, License(0xC0));
    auto c = h.ctx();
    n.boot(c);
    h.fresh(c);
    n.handle_dio(c, dio_from(0, 256));
    EXPECT_EQ(n.state().rank, 512);
    ASSERT_TRUE(n.state().parent);
    EXPECT_EQ(*n.state().parent, Address::of_node(0));
    const auto daos = h.sent<DaoFrame>();
    ASSERT_EQ(daos.size(), 1u);
    EXPECT_EQ(daos[0].first, Address::of_node(0));
    EXPECT_EQ(daos[0].second.bytes[2], 0xC0);
    EXPECT_EQ(n.state().trickle.interval, RplConfig{}.trickle.i_min);
    EXPECT_TRUE(h.timer(TimerKind::Trickle));
    EXPECT_TRUE(n.state().neighbors.count(Address::of_node(0)));
}

TEST(HandleDio, Hysteresis) {
    Harness h;
    RplNode n(5, NodeRole::Client, RplConfig{});
    auto c = h.ctx();
    n.boot(c);
    h.fresh(c);
    n.handle_dio(c, dio_from(2, 512));  // rank 768 via node 2
    ASSERT_EQ(n.state().rank, 768);

    h.fresh(c);
    n.handle_dio(c, dio_from(3, 512));  // same rank: no switch
    EXPECT_EQ(*n.state().parent, Address::of_node(2));
    h.fresh(c);
    n.handle_dio(c, dio_from(3, 384));  // 640 + 128 is not below 768
    EXPECT_EQ(*n.state().parent, Address::of_node(2));
    EXPECT_TRUE(h.sent<DaoFrame>().empty());

    h.now = 10 * kSec;
    h.fresh(c);
    n.handle_dio(c, dio_from(4, 256));  // 512 + 128 < 768
    EXPECT_EQ(*n.state().parent, Address::of_node(4));
    EXPECT_EQ(n.state().rank, 512);
    EXPECT_EQ(h.sent<DaoFrame>().size(), 1u);
    EXPECT_EQ(n.state().trickle.interval_start, 10 * kSec);
    EXPECT_EQ(n.state().trickle.interval, RplConfig{}.trickle.i_min);
}

TEST(HandleDio, BlacklistedSenderIgnored) {
    Harness h;
    auto n = joined_client(h);
    n.mutable_state().blacklist.insert(Address::of_node(9));
    auto c = h.ctx();
    n.handle_dio(c, dio_from(9, 0));
    EXPECT_EQ(*n.state().parent, Address::of_node(0));
    EXPECT_FALSE(n.state().neighbors.count(Address::of_node(9)));
}

TEST(HandleDio, PoisonFromParentDetaches) {
    Harness h;
    auto n = joined_client(h);
    auto c = h.ctx();
    n.handle_dio(c, dio_from(0, kInfiniteRank));
    EXPECT_FALSE(n.state().parent);
    EXPECT_FALSE(n.state().joined());
    EXPECT_FALSE(h.sent<DisMessage>().empty());
}

TEST(HandleDio, ParentDtsnChangeTriggersDao) {
    Harness h;
    auto n = joined_client(h);
    auto c = h.ctx();
    n.handle_dio(c, dio_from(0, 256, 0));
    EXPECT_FALSE(h.timer(TimerKind::DaoRefresh));
    h.fresh(c);
    n.handle_dio(c, dio_from(0, 256, 1));
    const auto t = h.timer(TimerKind::DaoRefresh);
    ASSERT_TRUE(t);
    EXPECT_LE(t->at, h.now + kSec);
}

TEST(OnSenderDao, LicenseAndSequence) {
    Harness h;
    auto n = joined_client(h);
    auto c = h.ctx();
    n.on_sender_dao(c);
    h.fresh(c);
    n.on_sender_dao(c);
    const auto second = decode_dao(h.sent<DaoFrame>().at(0).second.bytes);
    EXPECT_EQ(second.reserved, 0xC0);
    EXPECT_EQ(second.src, Address::of_node(1));
    EXPECT_EQ(second.target, Address::of_node(1));
    // First DAO went out on join, then two explicit sends.
    EXPECT_EQ(second.sequence, 3);
    n.mutable_state().dao_seq = 255;
    h.fresh(c);
    n.on_sender_dao(c);
    EXPECT_EQ(decode_dao(h.sent<DaoFrame>().at(0).second.bytes).sequence, 0);
}

TEST(OnSenderDao, OrphanDoesNothing) {
    Harness h;
    RplNode n(1, NodeRole::Client, RplConfig{}, License(0xC0));
    auto c = h.ctx();
    n.on_sender_dao(c);
    EXPECT_TRUE(h.out.sends.empty());
}

TEST(OnSenderDao, AckRegisters) {
    Harness h;
    auto n = joined_client(h);
    EXPECT_FALSE(n.registered());
    auto c = h.ctx();
    n.on_receiver_status(c, status_bytes(n.address(), kStatusAck, n.state().dao_seq));
    EXPECT_TRUE(n.registered());
}

TEST(OnReceiver, ForgedDaoInstalledAndForwarded) {
    Harness h;
    auto b = joined_client(h, 2);
    const auto s1 = Address::forged(0x51);
    auto c = h.ctx();
    b.on_receiver_dao(c, Address::of_node(4), 1, dao_bytes(s1, 0x3C));
    const auto* e = b.state().route_to(s1);
    ASSERT_NE(e, nullptr);
    EXPECT_EQ(e->next_hop, Address::of_node(4));
    EXPECT_TRUE(e->direct);
    const auto fwd = h.sent<DaoFrame>();
    ASSERT_EQ(fwd.size(), 1u);
    EXPECT_EQ(fwd[0].first, Address::of_node(0));
    EXPECT_EQ(h.out.sends[0].frame.hops, 2);
}

TEST(OnReceiver, NackBlacklistsEmitter) {
    Harness h;
    auto b = joined_client(h, 2);
    const auto d = Address::of_node(4);
    const auto s1 = Address::forged(0x51);
    auto c = h.ctx();
    b.on_receiver_dao(c, d, 1, dao_bytes(d, 0x11));
    h.fresh(c);
    b.on_receiver_dao(c, d, 1, dao_bytes(s1, 0x3C));
    ASSERT_EQ(b.state().n_blacklisted, 0u);
    h.fresh(c);
    b.on_receiver_status(c, status_bytes(s1, kStatusRejected));
    EXPECT_EQ(b.state().n_blacklisted, 1u);
    EXPECT_TRUE(b.state().blacklist.count(d));
    EXPECT_EQ(b.state().route_to(s1), nullptr);
    EXPECT_EQ(b.state().route_to(d), nullptr);
    EXPECT_FALSE(b.state().neighbors.count(d));
    ASSERT_EQ(h.sent<StatusFrame>().size(), 1u);
    EXPECT_EQ(h.sent<StatusFrame>()[0].first, d);

    // Nothing from D installs a route any more.
    h.fresh(c);
    b.on_frame(c, d, Frame{DaoFrame{dao_bytes(Address::forged(0x52), 1)}, 1});
    EXPECT_EQ(b.state().route_to(Address::forged(0x52)), nullptr);
    EXPECT_EQ(h.counters.dao_dropped_blacklisted, 1u);
}

TEST(OnReceiver, NackForRelayedRouteDoesNotBlacklist) {
    Harness h;
    auto a = joined_client(h, 1);
    const auto s1 = Address::forged(0x51);
    auto c = h.ctx();
    a.on_receiver_dao(c, Address::of_node(2), 2, dao_bytes(s1, 0x3C));
    h.fresh(c);
    a.on_receiver_status(c, status_bytes(s1, kStatusRejected));
    EXPECT_EQ(a.state().n_blacklisted, 0u);
    EXPECT_EQ(a.state().route_to(s1), nullptr);
    EXPECT_EQ(h.sent<StatusFrame>().at(0).first, Address::of_node(2));
}

TEST(OnReceiver, FullTableBlocksNewRoute) {
    Harness h;
    auto b = joined_client(h, 2);
    for (std::uint64_t i = 0; i < 16; ++i) {
        auto c = h.ctx();
        b.on_receiver_dao(c, Address::of_node(4), 1, dao_bytes(Address::forged(i + 1), 0));
    }
    ASSERT_EQ(b.state().routing_table.size(), 16u);
    const auto hnode = Address::of_node(8);
    auto c = h.ctx();
    const auto before = h.counters.route_full;
    b.on_receiver_dao(c, hnode, 1, dao_bytes(hnode, 0x42));
    EXPECT_EQ(b.state().route_to(hnode), nullptr);
    EXPECT_EQ(b.state().routing_table.size(), 16u);
    EXPECT_EQ(h.counters.route_full, before + 1);
    EXPECT_EQ(h.sent<DaoFrame>().size(), 1u);  // still relayed upward
    // Refreshing an existing target needs no extra slot.
    h.fresh(c);
    EXPECT_EQ(b.install_route(c, Address::forged(3), Address::of_node(5), true), RouteAddResult::Refreshed);
}

TEST(OnReceiver, StatusWithoutRouteIsCounted) {
    Harness h;
    auto b = joined_client(h, 2);
    auto c = h.ctx();
    b.on_receiver_status(c, status_bytes(Address::of_node(7), kStatusAck));
    EXPECT_EQ(h.counters.status_no_route, 1u);
    EXPECT_TRUE(h.out.sends.empty());
}

TEST(OnReceiver, MalformedDaoCounted) {
    Harness h;
    auto b = joined_client(h, 2);
    auto c = h.ctx();
    b.on_receiver_dao(c, Address::of_node(4), 1, std::vector<std::uint8_t>(35, 0));
    EXPECT_EQ(h.counters.decode_errors, 1u);
    EXPECT_TRUE(b.state().routing_table.empty());
}

namespace {

RplNode root_with(Harness& h, bool defense, Rng& setup, License& lic_out) {
    RplConfig cfg;
    cfg.defense = defense;
    RplNode root(0, NodeRole::Root, cfg);
    RootAuthority auth;
    lic_out = register_node(auth.db, 1, PufDevice::from_table(1, {{0x75, 0xB5}}), setup).license;
    root.set_authority(std::move(auth));
    auto c = h.ctx();
    root.boot(c);
    return root;
}

}  // namespace

TEST(OnRootDao, GenuineAckForgedNack) {
    Harness h;
    Rng setup(1);
    License lic;
    auto root = root_with(h, true, setup, lic);
    ASSERT_EQ(lic.bits(), 0xC0u);

    auto c = h.ctx();
    const auto ack = root.on_root_dao(c, Address::of_node(1), dao_bytes(Address::of_node(1), 0xC0));
    ASSERT_TRUE(ack);
    EXPECT_TRUE(ack->is_ack());
    EXPECT_NE(root.state().route_to(Address::of_node(1)), nullptr);

    h.fresh(c);
    const auto nack = root.on_root_dao(c, Address::of_node(1), dao_bytes(Address::forged(9), 0xC0));
    ASSERT_TRUE(nack);
    EXPECT_TRUE(nack->is_nack());
    EXPECT_EQ(root.state().route_to(Address::forged(9)), nullptr);
    EXPECT_EQ(h.sent<StatusFrame>().at(0).first, Address::of_node(1));

    h.fresh(c);
    EXPECT_TRUE(root.on_root_dao(c, Address::of_node(1), dao_bytes(Address::of_node(1), 0xC1))->is_nack());
    EXPECT_EQ(h.counters.genuine_accepted, 1u);
    EXPECT_EQ(h.counters.forged_rejected, 1u);
    EXPECT_EQ(h.counters.genuine_rejected, 1u);
}

TEST(OnRootDao, DefenseOffAcceptsForged) {
    Harness h;
    Rng setup(1);
    License lic;
    auto root = root_with(h, false, setup, lic);
    auto c = h.ctx();
    const auto st = root.on_root_dao(c, Address::of_node(1), dao_bytes(Address::forged(9), 0x00));
    ASSERT_TRUE(st);
    EXPECT_TRUE(st->is_ack());
    EXPECT_NE(root.state().route_to(Address::forged(9)), nullptr);
    EXPECT_EQ(h.counters.forged_accepted, 1u);
}

TEST(OnRootDao, EncryptedLicense) {
    Harness h;
    RplConfig cfg;
    cfg.defense = cfg.encrypted = true;
    RplNode root(0, NodeRole::Root, cfg);
    Rng setup(4);
    RootAuthority auth;
    const auto lic = register_node(auth.db, 1, PufDevice::keyed(1, 8), setup).license;
    const auto key = SharedKey::random(setup);
    auth.keys.emplace(1, key);
    root.set_authority(std::move(auth));

    auto make = [&](const std::vector<std::uint8_t>& opt, std::uint8_t reserved) {
        DaoModified m;
        m.src = m.target = Address::of_node(1);
        m.options = opt;
        m.reserved = reserved;
        return encode_dao(m);
    };
    auto c = h.ctx();
    EXPECT_TRUE(root.on_root_dao(c, Address::of_node(1), make(encrypt_license(key, lic, 1), 0))->is_ack());
    h.fresh(c);
    EXPECT_TRUE(root.on_root_dao(c, Address::of_node(1), make({}, static_cast<std::uint8_t>(lic.bits())))
                    ->is_nack());
    h.fresh(c);
    EXPECT_TRUE(root.on_root_dao(c, Address::of_node(1), make(std::vector<std::uint8_t>{8, 1, 2}, 0))->is_nack());
}

TEST(MaliciousEmit, FortyForgedInThreeHundredSeconds) {
    RplConfig cfg;
    World w(3, LinkModel{});
    RplNode root(0, NodeRole::Root, cfg);
    RootAuthority auth;
    Rng setup(2);
    register_node(auth.db, 1, PufDevice::keyed(1, 3), setup);
    root.set_authority(std::move(auth));
    w.add_node(std::move(root), {100, 100});
    w.add_node(RplNode(1, NodeRole::Malicious, cfg), {130, 100});
    std::ostringstream trace;
    w.set_trace(&trace);
    w.run_until(300 * kSec);
    EXPECT_EQ(w.counters().forged_emitted, 40u);

    std::set<Address> forged;
    std::istringstream lines(trace.str());
    std::string line;
    while (std::getline(lines, line)) {
        if (line.find("DAO_TX") == std::string::npos || line.find("forged") == std::string::npos) continue;
        const auto pos = line.find("target=") + 7;
        Address::Bytes b{};
        const auto hexs = line.substr(pos, 39);
        for (std::size_t i = 0, j = 0; i < 16; ++i, j += 2) {
            if (hexs[j] == ':') ++j;
            b[i] = static_cast<std::uint8_t>(std::stoi(hexs.substr(j, 2), nullptr, 16));
        }
        forged.insert(Address(b));
    }
    ASSERT_EQ(forged.size(), 40u);
    for (const auto& a : forged) {
        EXPECT_TRUE(a.is_forged_block());
        EXPECT_FALSE(a.node_id().has_value());
    }
}

TEST(MaliciousEmit, OrphanSendsNothing) {
    Harness h;
    RplNode m(3, NodeRole::Malicious, RplConfig{});
    auto c = h.ctx();
    m.malicious_emit(c);
    EXPECT_TRUE(h.out.sends.empty());
}

TEST(Trickle, DoublingSequenceAndCap) {
    Rng rng(1);
    auto s = trickle_start(TrickleConfig{}, 0, rng);
    std::vector<SimTime> intervals;
    for (int i = 0; i < 6; ++i) {
        intervals.push_back(s.interval / kSec);
        EXPECT_GE(s.t, s.interval_start + s.interval / 2);
        EXPECT_LT(s.t, s.interval_start + s.interval);
        s = trickle_step(s, s.t, 0, rng).next;
    }
    EXPECT_EQ(intervals, (std::vector<SimTime>{4, 8, 16, 32, 64, 64}));
}

TEST(Trickle, FireSuppressionAndReset) {
    Rng rng(2);
    TrickleConfig cfg;
    cfg.k = 1;
    auto s = trickle_start(cfg, 0, rng);
    EXPECT_TRUE(trickle_step(s, s.t, 0, rng).fire);
    EXPECT_FALSE(trickle_step(s, s.t, 1, rng).fire);
    EXPECT_THROW(trickle_step(s, s.t - 1, 0, rng), Error);
    for (int i = 0; i < 4; ++i) s = trickle_step(s, s.t, 0, rng).next;
    ASSERT_EQ(s.interval, 64 * kSec);
    auto r = trickle_reset(s, 500 * kSec, rng);
    EXPECT_EQ(r.interval, cfg.i_min);
    EXPECT_EQ(r.counter, 0u);
    EXPECT_EQ(r.interval_start, 500 * kSec);
    EXPECT_EQ(trickle_reset(r, 500 * kSec, rng).interval, cfg.i_min);
}

TEST(ForwardData, TwoHopChainDeliversEverything) {
    RplConfig cfg;
    World w(5, LinkModel{});
    w.add_node(RplNode(0, NodeRole::Root, cfg), {20, 100});
    w.add_node(RplNode(1, NodeRole::Client, cfg), {60, 100}, kSec);
    w.add_node(RplNode(2, NodeRole::Client, cfg), {100, 100}, 2 * kSec);
    w.run_until(600 * kSec);
    const auto sent = w.node(1).data_sent() + w.node(2).data_sent();
    ASSERT_GT(sent, 30u);
    // Packets still in flight at the cut-off would be the only losses.
    EXPECT_EQ(w.deliveries().size(), sent);
    for (const auto& d : w.deliveries()) {
        EXPECT_GT(d.received, d.created);
        EXPECT_LE(d.received - d.created, 2 * w.link().hop_delay);
    }
}

TEST(ForwardData, OrphanedSenderLosesPacket) {
    Harness h;
    auto n = joined_client(h);
    auto c = h.ctx();
    n.handle_dio(c, dio_from(0, kInfiniteRank));
    ASSERT_FALSE(n.state().parent);
    // Data timer armed at join is still live.
    h.fresh(c);
    n.on_timer(c, TimerKind::Data, 1);
    EXPECT_EQ(n.data_sent(), 1u);
    EXPECT_EQ(h.counters.data_no_parent, 1u);
}

TEST(ForwardData, RootAcceptsOnlyRegisteredSources) {
    Harness h;
    RplNode root(0, NodeRole::Root, RplConfig{});
    auto c = h.ctx();
    root.forward_data(c, Address::of_node(1), DataPacket{Address::of_node(1), 1, 0}, 1);
    EXPECT_TRUE(h.out.deliveries.empty());
    EXPECT_EQ(h.counters.data_unregistered, 1u);
    h.fresh(c);
    root.install_route(c, Address::of_node(1), Address::of_node(1), false);
    root.forward_data(c, Address::of_node(1), DataPacket{Address::of_node(1), 2, 0}, 1);
    EXPECT_EQ(h.out.deliveries.size(), 1u);
}

namespace {

void check_invariants(const World& w) {
    for (const auto& n : w.nodes()) {
        const auto& s = n.state();
        ASSERT_LE(s.routing_table.size(), n.rt_cap()) << "node " << n.id();
        if (n.is_root()) {
            ASSERT_FALSE(s.parent);
        }
        if (s.parent) {
            ASSERT_TRUE(s.neighbors.count(*s.parent)) << "node " << n.id();
        }
        std::set<Address> targets;
        for (const auto& e : s.routing_table) {
            ASSERT_TRUE(targets.insert(e.target).second) << "duplicate route at node " << n.id();
            ASSERT_FALSE(s.blacklist.count(e.target));
            ASSERT_FALSE(s.blacklist.count(e.next_hop));
        }
        for (const auto& b : s.blacklist) ASSERT_FALSE(s.neighbors.count(b));
    }
}

}  // namespace

TEST(Invariants, HoldThroughoutRuns) {
    for (Arm arm : {Arm::Attack, Arm::Defense}) {
        for (bool mobile : {false, true}) {
            Scenario s;
            s.n_attackers = 3;
            s.mobility = mobile;
            s.link.loss_prob = 0.05;
            World w = build_world(s, arm, 4);
            for (SimTime t = 20 * kSec; t <= 900 * kSec; t += 20 * kSec) {
                w.run_until(t);
                check_invariants(w);
                if (HasFatalFailure()) return;
            }
        }
    }
}

TEST(Invariants, DefenseRejectsEveryForgedDao) {
    Scenario s;
    s.n_attackers = 2;
    s.duration_s = 900;
    const auto r = run_single(s, Arm::Defense, 3);
    EXPECT_GT(r.protocol.forged_rejected, 0u);
    EXPECT_EQ(r.protocol.forged_accepted, 0u);
    EXPECT_EQ(r.protocol.genuine_rejected, 0u);
}

TEST(Fig2, AttackFillsTableAndStrandsLateJoiner) {
    const auto o = fig2::run({});
    EXPECT_EQ(o.b_forged, 2u);
    EXPECT_EQ(o.b_size, 4u);
    EXPECT_FALSE(o.h_route_at_b);
    EXPECT_FALSE(o.h_registered);
    EXPECT_EQ(o.counters.forged_accepted, 2u);
    EXPECT_EQ(o.b_n_blacklisted, 0u);
}

TEST(Fig2, DefenseFreesTableAndBlacklistsAttacker) {
    fig2::Options opt;
    opt.defense = true;
    const auto o = fig2::run(opt);
    EXPECT_EQ(o.b_forged, 0u);
    EXPECT_TRUE(o.h_route_at_b);
    EXPECT_TRUE(o.h_route_at_root);
    EXPECT_TRUE(o.h_registered);
    EXPECT_TRUE(o.d_blacklisted_at_b);
    EXPECT_EQ(o.b_n_blacklisted, 1u);
    EXPECT_EQ(o.counters.forged_rejected, 2u);
    EXPECT_EQ(o.counters.forged_accepted, 0u);
    EXPECT_EQ(o.counters.genuine_rejected, 0u);
}
