#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lisec/core.hpp"
#include "lisec/puf_auth.hpp"

namespace lisec {

// 16-octet node address. Topology nodes live in fd00::/112 with the node id
// in the low 32 bits; forged identities come from a disjoint block (octets
// 8-9 = 0xFA 0xCE), so they can never collide with a real node.
class Address {
public:
    using Bytes = std::array<std::uint8_t, 16>;

    Address() = default;
    explicit Address(const Bytes& b) : bytes_(b) {}

    static Address of_node(NodeId id) {
        Bytes b{};
        b[0] = 0xfd;
        for (int i = 0; i < 4; ++i) b[12 + i] = static_cast<std::uint8_t>(id >> (8 * (3 - i)));
        return Address(b);
    }

    static Address forged(std::uint64_t tag) {
        Bytes b{};
        b[0] = 0xfd;
        b[8] = 0xfa;
        b[9] = 0xce;
        for (int i = 0; i < 6; ++i) b[10 + i] = static_cast<std::uint8_t>(tag >> (8 * (5 - i)));
        return Address(b);
    }

    std::optional<NodeId> node_id() const {
        if (bytes_[0] != 0xfd) return std::nullopt;
        for (int i = 1; i < 12; ++i)
            if (bytes_[i] != 0) return std::nullopt;
        NodeId id = 0;
        for (int i = 12; i < 16; ++i) id = (id << 8) | bytes_[i];
        return id;
    }

    bool is_forged_block() const { return bytes_[0] == 0xfd && bytes_[8] == 0xfa && bytes_[9] == 0xce; }

    const Bytes& bytes() const noexcept { return bytes_; }

    std::string str() const {
        static constexpr char hex[] = "0123456789abcdef";
        std::string s;
        for (int g = 0; g < 8; ++g) {
            if (g) s += ':';
            for (int i = 0; i < 2; ++i) {
                s += hex[bytes_[2 * g + i] >> 4];
                s += hex[bytes_[2 * g + i] & 0xf];
            }
        }
        return s;
    }

    friend bool operator==(const Address&, const Address&) = default;
    friend auto operator<=>(const Address&, const Address&) = default;

private:
    Bytes bytes_{};
};

constexpr std::uint16_t kInfiniteRank = 0xffff;

struct DisMessage {
    Address sender;
};

struct DioMessage {
    Address sender;
    Address dodag_id;
    std::uint8_t version = 0;
    std::uint16_t rank = kInfiniteRank;
    std::uint8_t of_id = 1;  // MRHOF
    std::uint8_t dtsn = 0;   // bumped to ask children for fresh DAOs
};

struct DaoModified {
    Address src;     // claimed originator
    Address target;  // advertised route
    std::uint8_t sequence = 0;
    std::uint8_t reserved = 0;           // License in plain mode
    std::vector<std::uint8_t> options;   // EncryptedLicense in encrypted mode

    bool encrypted() const { return !options.empty(); }
    friend bool operator==(const DaoModified&, const DaoModified&) = default;
};

constexpr std::uint8_t kStatusAck = 0;
constexpr std::uint8_t kStatusRejected = 128;

struct DaoStatus {
    Address originator;
    std::uint8_t sequence = 0;
    std::uint8_t status = kStatusAck;

    bool is_ack() const { return status == kStatusAck; }
    bool is_nack() const { return status >= 128; }
    friend bool operator==(const DaoStatus&, const DaoStatus&) = default;
};

// DAO wire layout
//   0      RPL instance id (0)
//   1      flags, K bit (0x80) set
//   2      Reserved, carries the License
//   3      DAO sequence
//   4-19   target address
//   20-35  src address
//   36     options length n (present only when n > 0)
//   37..   n option octets
namespace wire {
constexpr std::size_t kDaoFixedSize = 36;
constexpr std::size_t kStatusSize = 20;
constexpr std::uint8_t kFlagK = 0x80;
constexpr std::uint8_t kInstanceId = 0;
}  // namespace wire

inline void check_invariants(const DaoModified& m) {
    if (m.options.size() > 255) throw Error("DAO options longer than 255 octets");
    if (!m.options.empty() && m.reserved != 0)
        throw Error("encrypted DAO must carry a zero Reserved octet");
}

inline std::vector<std::uint8_t> encode_dao(const DaoModified& m) {
    check_invariants(m);
    std::vector<std::uint8_t> out;
    out.reserve(wire::kDaoFixedSize + (m.options.empty() ? 0 : 1 + m.options.size()));
    out.push_back(wire::kInstanceId);
    out.push_back(wire::kFlagK);
    out.push_back(m.reserved);
    out.push_back(m.sequence);
    out.insert(out.end(), m.target.bytes().begin(), m.target.bytes().end());
    out.insert(out.end(), m.src.bytes().begin(), m.src.bytes().end());
    if (!m.options.empty()) {
        out.push_back(static_cast<std::uint8_t>(m.options.size()));
        out.insert(out.end(), m.options.begin(), m.options.end());
    }
    return out;
}

inline DaoModified decode_dao(std::span<const std::uint8_t> b) {
    if (b.size() < wire::kDaoFixedSize)
        throw DecodeError("DAO too short: " + std::to_string(b.size()) + " octets");
    if (b[0] != wire::kInstanceId) throw DecodeError("DAO: unknown RPL instance");
    if (b[1] != wire::kFlagK) throw DecodeError("DAO: unexpected flags");
    DaoModified m;
    m.reserved = b[2];
    m.sequence = b[3];
    Address::Bytes a{};
    std::copy(b.begin() + 4, b.begin() + 20, a.begin());
    m.target = Address(a);
    std::copy(b.begin() + 20, b.begin() + 36, a.begin());
    m.src = Address(a);
    if (b.size() > wire::kDaoFixedSize) {
        const std::size_t n = b[36];
        if (n == 0 || b.size() != wire::kDaoFixedSize + 1 + n)
            throw DecodeError("DAO: bad option length");
        if (m.reserved != 0) throw DecodeError("DAO: options present with non-zero Reserved");
        m.options.assign(b.begin() + 37, b.end());
    }
    return m;
}

// DAO-ACK/NACK layout
//   0      RPL instance id (0)
//   1      reserved (0)
//   2      DAO sequence being acknowledged
//   3      status (0 = ACK, >= 128 = NACK)
//   4-19   originator address
inline std::vector<std::uint8_t> encode_status(const DaoStatus& s) {
    if (s.status != kStatusAck && s.status < 128) throw Error("DAO status must be 0 or >= 128");
    std::vector<std::uint8_t> out{wire::kInstanceId, 0, s.sequence, s.status};
    out.insert(out.end(), s.originator.bytes().begin(), s.originator.bytes().end());
    return out;
}

inline DaoStatus decode_status(std::span<const std::uint8_t> b) {
    if (b.size() != wire::kStatusSize)
        throw DecodeError("DAO status must be 20 octets, got " + std::to_string(b.size()));
    if (b[0] != wire::kInstanceId || b[1] != 0) throw DecodeError("DAO status: bad header");
    if (b[3] != kStatusAck && b[3] < 128) throw DecodeError("DAO status: reserved status value");
    DaoStatus s;
    s.sequence = b[2];
    s.status = b[3];
    Address::Bytes a{};
    std::copy(b.begin() + 4, b.end(), a.begin());
    s.originator = Address(a);
    return s;
}

inline std::string to_hex(std::span<const std::uint8_t> b) {
    static constexpr char hex[] = "0123456789abcdef";
    std::string s;
    s.reserve(b.size() * 2);
    for (auto c : b) {
        s += hex[c >> 4];
        s += hex[c & 0xf];
    }
    return s;
}

}  // namespace lisec
