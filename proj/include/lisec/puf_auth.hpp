#pragma once

#include <array>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <istream>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "lisec/core.hpp"
#include "lisec/siphash.hpp"

namespace lisec {

// PUF challenge/response values and the License derived from them.
// Width is a runtime parameter (8 for the DAO Reserved octet, wider when the
// License travels in the options field).

constexpr unsigned kDefaultLicenseWidth = 8;
constexpr unsigned kMaxLicenseWidth = 64;

inline std::uint64_t width_mask(unsigned width) {
    return width >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << width) - 1;
}

inline void check_width(unsigned width) {
    if (width < 8 || width > kMaxLicenseWidth)
        throw Error("license width must be in [8, 64], got " + std::to_string(width));
}

template <class Tag>
class BitWord {
public:
    BitWord() = default;
    explicit BitWord(std::uint64_t bits, unsigned width = kDefaultLicenseWidth)
        : bits_(bits), width_(width) {
        check_width(width);
        if ((bits & ~width_mask(width)) != 0)
            throw Error("value does not fit in " + std::to_string(width) + " bits");
    }

    std::uint64_t bits() const noexcept { return bits_; }
    unsigned width() const noexcept { return width_; }

    friend bool operator==(const BitWord&, const BitWord&) = default;
    friend auto operator<=>(const BitWord&, const BitWord&) = default;

private:
    std::uint64_t bits_ = 0;
    unsigned width_ = kDefaultLicenseWidth;
};

struct ChallengeTag {};
struct ResponseTag {};
struct LicenseTag {};

using Challenge = BitWord<ChallengeTag>;
using Response = BitWord<ResponseTag>;
using License = BitWord<LicenseTag>;

// Binary rendering used in test diagnostics, e.g. "11000000".
template <class Tag>
std::string to_bits(const BitWord<Tag>& w) {
    std::string s(w.width(), '0');
    for (unsigned i = 0; i < w.width(); ++i)
        if ((w.bits() >> (w.width() - 1 - i)) & 1) s[i] = '1';
    return s;
}

namespace detail {
template <class A, class B>
void require_same_width(const A& a, const B& b) {
    if (a.width() != b.width())
        throw Error("width mismatch: " + std::to_string(a.width()) + " vs " +
                    std::to_string(b.width()));
}
}  // namespace detail

inline License generate_license(Challenge ch, Response r) {
    detail::require_same_width(ch, r);
    return License(ch.bits() ^ r.bits(), ch.width());
}

inline Response recover_response(Challenge ch, License l) {
    detail::require_same_width(ch, l);
    return Response(ch.bits() ^ l.bits(), ch.width());
}

class MissingCrpError : public Error {
public:
    using Error::Error;
};

// Emulated PUF. Either an explicit CRP table or a keyed pseudorandom mapping
// per (node_id, device_secret). Responses are noise-free.
class PufDevice {
public:
    struct Table {
        std::map<std::uint64_t, std::uint64_t> pairs;
    };
    struct Keyed {
        std::uint64_t device_secret = 0;
    };

    static PufDevice from_table(NodeId node, std::map<std::uint64_t, std::uint64_t> pairs,
                                unsigned width = kDefaultLicenseWidth) {
        check_width(width);
        for (const auto& [c, r] : pairs) {
            if ((c & ~width_mask(width)) || (r & ~width_mask(width)))
                throw Error("CRP table entry exceeds width");
        }
        return PufDevice(node, Table{std::move(pairs)}, width);
    }

    static PufDevice keyed(NodeId node, std::uint64_t device_secret,
                           unsigned width = kDefaultLicenseWidth) {
        check_width(width);
        return PufDevice(node, Keyed{device_secret}, width);
    }

    NodeId node_id() const noexcept { return node_; }
    unsigned width() const noexcept { return width_; }
    bool table_backed() const noexcept { return std::holds_alternative<Table>(backing_); }

    Response derive_response(Challenge ch) const {
        if (ch.width() != width_) throw Error("challenge width does not match device");
        if (const auto* t = std::get_if<Table>(&backing_)) {
            auto it = t->pairs.find(ch.bits());
            if (it == t->pairs.end())
                throw MissingCrpError("node " + std::to_string(node_) +
                                      ": no CRP for challenge " + to_bits(ch));
            return Response(it->second, width_);
        }
        const auto& k = std::get<Keyed>(backing_);
        std::array<std::uint8_t, 16> key{};
        store_le64(k.device_secret, key.data());
        store_le64(node_, key.data() + 8);
        std::array<std::uint8_t, 8> msg{};
        store_le64(ch.bits(), msg.data());
        return Response(siphash24(key, msg) & width_mask(width_), width_);
    }

    // Challenge drawn for registration. Table-backed devices can only answer
    // challenges in their table, so the draw is over table entries.
    Challenge draw_challenge(Rng& rng) const {
        if (const auto* t = std::get_if<Table>(&backing_)) {
            if (t->pairs.empty()) throw MissingCrpError("empty CRP table");
            auto it = t->pairs.begin();
            std::advance(it, static_cast<std::ptrdiff_t>(rng.below(t->pairs.size())));
            return Challenge(it->first, width_);
        }
        return Challenge(rng.next_u64() & width_mask(width_), width_);
    }

private:
    PufDevice(NodeId node, std::variant<Table, Keyed> backing, unsigned width)
        : node_(node), backing_(std::move(backing)), width_(width) {}

    NodeId node_;
    std::variant<Table, Keyed> backing_;
    unsigned width_;
};

inline Response derive_response(const PufDevice& device, Challenge ch) {
    return device.derive_response(ch);
}

class AlreadyRegisteredError : public Error {
public:
    using Error::Error;
};

class CapacityError : public Error {
public:
    using Error::Error;
};

enum class Verdict { Accept, Reject };

// Challenge-response store held by the border router.
class CRDatabase {
public:
    struct Entry {
        Challenge challenge;
        Response response;
    };

    explicit CRDatabase(std::size_t capacity = 256) : capacity_(capacity) {}

    std::size_t capacity() const noexcept { return capacity_; }
    std::size_t size() const noexcept { return entries_.size(); }
    bool contains(NodeId id) const { return entries_.count(id) != 0; }

    const Entry* find(NodeId id) const {
        auto it = entries_.find(id);
        return it == entries_.end() ? nullptr : &it->second;
    }

    void insert(NodeId id, Challenge ch, Response r) {
        detail::require_same_width(ch, r);
        if (contains(id))
            throw AlreadyRegisteredError("node " + std::to_string(id) + " already registered");
        if (entries_.size() >= capacity_)
            throw CapacityError("CR database full (" + std::to_string(capacity_) + " entries)");
        entries_.emplace(id, Entry{ch, r});
    }

    const std::map<NodeId, Entry>& entries() const noexcept { return entries_; }

    // One line per entry: node_id<TAB>CH_hex<TAB>R_hex
    void save(std::ostream& out) const {
        for (const auto& [id, e] : entries_) {
            const int digits = static_cast<int>((e.challenge.width() + 3) / 4);
            out << id << '\t' << std::hex << std::setw(digits) << std::setfill('0')
                << e.challenge.bits() << '\t' << std::setw(digits) << e.response.bits()
                << std::dec << std::setfill(' ') << '\n';
        }
    }

    // Width is inferred from the hex digit count (4 bits per digit, min 8).
    static CRDatabase load(std::istream& in, std::size_t capacity = 256) {
        CRDatabase db(capacity);
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (line.empty() || line[0] == '#') continue;
            std::istringstream fields(line);
            std::string id_s, ch_s, r_s, extra;
            if (!std::getline(fields, id_s, '\t') || !std::getline(fields, ch_s, '\t') ||
                !std::getline(fields, r_s, '\t') || std::getline(fields, extra, '\t'))
                throw DecodeError("CR database line " + std::to_string(lineno) +
                                  ": expected 3 tab-separated fields");
            if (ch_s.size() != r_s.size() || ch_s.empty() || ch_s.size() > 16)
                throw DecodeError("CR database line " + std::to_string(lineno) +
                                  ": bad hex field width");
            const unsigned width = std::max(8u, static_cast<unsigned>(ch_s.size() * 4));
            try {
                std::size_t used = 0;
                const auto id = std::stoul(id_s, &used);
                if (used != id_s.size()) throw std::invalid_argument("id");
                const auto ch = std::stoull(ch_s, &used, 16);
                if (used != ch_s.size()) throw std::invalid_argument("ch");
                const auto r = std::stoull(r_s, &used, 16);
                if (used != r_s.size()) throw std::invalid_argument("r");
                db.insert(static_cast<NodeId>(id), Challenge(ch, width), Response(r, width));
            } catch (const std::logic_error&) {
                throw DecodeError("CR database line " + std::to_string(lineno) +
                                  ": malformed number");
            }
        }
        return db;
    }

private:
    std::size_t capacity_;
    std::map<NodeId, Entry> entries_;
};

struct Registration {
    Challenge challenge;
    License license;
};

inline Registration register_node(CRDatabase& db, NodeId node_id, const PufDevice& device,
                                  Rng& rng) {
    if (db.contains(node_id))
        throw AlreadyRegisteredError("node " + std::to_string(node_id) + " already registered");
    if (db.size() >= db.capacity())
        throw CapacityError("CR database full (" + std::to_string(db.capacity()) + " entries)");
    const Challenge ch = device.draw_challenge(rng);
    const Response r = device.derive_response(ch);
    db.insert(node_id, ch, r);
    return {ch, generate_license(ch, r)};
}

inline Verdict verify_license(const CRDatabase& db, std::optional<NodeId> claimed_id, License l) {
    if (!claimed_id) return Verdict::Reject;
    const auto* e = db.find(*claimed_id);
    if (!e || e->challenge.width() != l.width()) return Verdict::Reject;
    return recover_response(e->challenge, l) == e->response ? Verdict::Accept : Verdict::Reject;
}

// ---------------------------------------------------------------------------
// Encrypted License variant: the License travels in the DAO options field as
//   octet 0      license width in bits
//   octets 1-8   nonce, little endian
//   octets 9..   ceil(width/8) ciphertext bytes
// There is no authentication tag; a wrong key decrypts to some License that
// the border router then rejects with probability 1 - 2^-width.

struct SharedKey {
    std::array<std::uint8_t, 16> bytes{};

    static SharedKey random(Rng& rng) {
        SharedKey k;
        store_le64(rng.next_u64(), k.bytes.data());
        store_le64(rng.next_u64(), k.bytes.data() + 8);
        return k;
    }
    friend bool operator==(const SharedKey&, const SharedKey&) = default;
};

using EncryptedLicense = std::vector<std::uint8_t>;

inline std::size_t license_bytes(unsigned width) { return (width + 7) / 8; }

class LicenseCipher {
public:
    virtual ~LicenseCipher() = default;
    virtual EncryptedLicense encrypt(const SharedKey& k, License l, std::uint64_t nonce) const = 0;
    virtual License decrypt(const SharedKey& k, std::span<const std::uint8_t> c) const = 0;
};

// Keystream block j = SipHash-2-4(key, nonce || j), XORed over the License bytes.
class SipStreamCipher final : public LicenseCipher {
public:
    EncryptedLicense encrypt(const SharedKey& k, License l, std::uint64_t nonce) const override {
        const std::size_t n = license_bytes(l.width());
        EncryptedLicense out(1 + 8 + n);
        out[0] = static_cast<std::uint8_t>(l.width());
        store_le64(nonce, out.data() + 1);
        apply(k, nonce, l.bits(), n, out.data() + 9);
        return out;
    }

    License decrypt(const SharedKey& k, std::span<const std::uint8_t> c) const override {
        if (c.size() < 9) throw DecodeError("encrypted license truncated");
        const unsigned width = c[0];
        if (width < 8 || width > kMaxLicenseWidth)
            throw DecodeError("encrypted license has invalid width " + std::to_string(width));
        const std::size_t n = license_bytes(width);
        if (c.size() != 9 + n) throw DecodeError("encrypted license has wrong length");
        const std::uint64_t nonce = load_le64(c.data() + 1);
        std::uint64_t ct = 0;
        for (std::size_t i = 0; i < n; ++i) ct |= std::uint64_t{c[9 + i]} << (8 * i);
        std::array<std::uint8_t, 8> pt{};
        apply(k, nonce, ct, n, pt.data());
        std::uint64_t bits = 0;
        for (std::size_t i = 0; i < n; ++i) bits |= std::uint64_t{pt[i]} << (8 * i);
        return License(bits & width_mask(width), width);
    }

private:
    static void apply(const SharedKey& k, std::uint64_t nonce, std::uint64_t value, std::size_t n,
                      std::uint8_t* out) {
        for (std::size_t i = 0; i < n; ++i) {
            const std::uint64_t block = siphash24_words(k.bytes, nonce, i / 8);
            const auto ks = static_cast<std::uint8_t>(block >> (8 * (i % 8)));
            out[i] = static_cast<std::uint8_t>(value >> (8 * i)) ^ ks;
        }
    }
};

inline const LicenseCipher& default_cipher() {
    static const SipStreamCipher cipher;
    return cipher;
}

inline EncryptedLicense encrypt_license(const SharedKey& k, License l, std::uint64_t nonce) {
    return default_cipher().encrypt(k, l, nonce);
}

inline License decrypt_license(const SharedKey& k, std::span<const std::uint8_t> c) {
    return default_cipher().decrypt(k, c);
}

}  // namespace lisec
