#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "pufforge/bitvec.hpp"
#include "pufforge/errors.hpp"
#include "pufforge/rng.hpp"

namespace pufforge {

// ---------------------------------------------------------------------------
// Speck-128/128 block primitive, implemented from the public specification
// (64-bit words, rotations 8/3, 32 rounds). The paper's protocol names an
// encryption function but no algorithm; a small ARX cipher keeps the whole
// artifact dependency-free and swappable behind SymmetricCipher.
// ---------------------------------------------------------------------------

namespace speck {

constexpr int kRounds = 32;

inline std::uint64_t ror64(std::uint64_t v, int r) { return (v >> r) | (v << (64 - r)); }
inline std::uint64_t rol64(std::uint64_t v, int r) { return (v << r) | (v >> (64 - r)); }

struct Block {
    std::uint64_t x = 0; // high word
    std::uint64_t y = 0; // low word
    bool operator==(const Block&) const = default;
};

using Key = Block; // x = l0, y = k0

inline std::array<std::uint64_t, kRounds> expand_key(const Key& key) {
    std::array<std::uint64_t, kRounds> rk{};
    std::uint64_t l = key.x, k = key.y;
    for (int i = 0; i < kRounds; ++i) {
        rk[static_cast<std::size_t>(i)] = k;
        l = (ror64(l, 8) + k) ^ static_cast<std::uint64_t>(i);
        k = rol64(k, 3) ^ l;
    }
    return rk;
}

inline Block encrypt_block(const std::array<std::uint64_t, kRounds>& rk, Block b) {
    for (int i = 0; i < kRounds; ++i) {
        b.x = (ror64(b.x, 8) + b.y) ^ rk[static_cast<std::size_t>(i)];
        b.y = rol64(b.y, 3) ^ b.x;
    }
    return b;
}

inline Block encrypt_block(const Key& key, Block b) { return encrypt_block(expand_key(key), b); }

// byte layout of a block: y little-endian, then x little-endian
inline void block_to_bytes(const Block& b, std::uint8_t* out) {
    for (int i = 0; i < 8; ++i) out[i] = static_cast<std::uint8_t>(b.y >> (8 * i));
    for (int i = 0; i < 8; ++i) out[8 + i] = static_cast<std::uint8_t>(b.x >> (8 * i));
}

inline Block block_from_bytes(const std::uint8_t* in) {
    Block b;
    for (int i = 7; i >= 0; --i) b.y = (b.y << 8) | in[i];
    for (int i = 7; i >= 0; --i) b.x = (b.x << 8) | in[8 + i];
    return b;
}

} // namespace speck

// ---------------------------------------------------------------------------
// Authenticated frames: Speck in counter mode plus an encrypt-then-MAC tag
// (CBC-MAC over the length-prefixed frame, under a derived key). Frame
// layout: [nonce: 16 bytes][ct: len bytes][tag: 16 bytes]. The per-message
// nonce makes equal plaintexts encrypt differently.
// ---------------------------------------------------------------------------

class SymmetricCipher {
public:
    static constexpr std::size_t kNonceBytes = 16;
    static constexpr std::size_t kTagBytes = 16;

    explicit SymmetricCipher(const BitVec& key_bits) {
        if (key_bits.size() != 128) throw std::invalid_argument("SymmetricCipher: key must be 128 bits");
        auto kb = key_bits.to_bytes();
        speck::Key key = speck::block_from_bytes(kb.data());
        enc_keys_ = speck::expand_key(key);
        // independent MAC key from fixed-counter encryptions of the main key
        speck::Key mac_key{speck::encrypt_block(enc_keys_, {0, 1}).x,
                           speck::encrypt_block(enc_keys_, {0, 2}).y};
        mac_keys_ = speck::expand_key(mac_key);
    }

    std::vector<std::uint8_t> encrypt(const std::vector<std::uint8_t>& plaintext,
                                      RandomStream& rng) const {
        speck::Block nonce{rng.next_u64(), rng.next_u64()};
        std::vector<std::uint8_t> frame(kNonceBytes + plaintext.size() + kTagBytes);
        speck::block_to_bytes(nonce, frame.data());
        keystream_xor(nonce, plaintext.data(), plaintext.size(), frame.data() + kNonceBytes);
        auto tag = compute_tag(frame.data(), kNonceBytes + plaintext.size());
        speck::block_to_bytes(tag, frame.data() + kNonceBytes + plaintext.size());
        return frame;
    }

    std::vector<std::uint8_t> decrypt(const std::vector<std::uint8_t>& frame) const {
        if (frame.size() < kNonceBytes + kTagBytes)
            throw IntegrityFailure("decrypt: frame too short");
        std::size_t ct_len = frame.size() - kNonceBytes - kTagBytes;
        speck::Block tag = compute_tag(frame.data(), kNonceBytes + ct_len);
        speck::Block stored = speck::block_from_bytes(frame.data() + kNonceBytes + ct_len);
        if (!(tag == stored)) throw IntegrityFailure("decrypt: tag mismatch");
        speck::Block nonce = speck::block_from_bytes(frame.data());
        std::vector<std::uint8_t> plaintext(ct_len);
        keystream_xor(nonce, frame.data() + kNonceBytes, ct_len, plaintext.data());
        return plaintext;
    }

private:
    void keystream_xor(const speck::Block& nonce, const std::uint8_t* in, std::size_t len,
                       std::uint8_t* out) const {
        std::uint8_t ks[16];
        for (std::size_t off = 0; off < len; off += 16) {
            std::uint64_t ctr = off / 16;
            speck::Block b{nonce.x + (nonce.y + ctr < nonce.y ? 1u : 0u), nonce.y + ctr};
            b = speck::encrypt_block(enc_keys_, b);
            speck::block_to_bytes(b, ks);
            for (std::size_t i = off; i < std::min(off + 16, len); ++i)
                out[i] = static_cast<std::uint8_t>(in[i] ^ ks[i - off]);
        }
    }

    // CBC-MAC over len64 || data || zero padding; the length prefix keeps the
    // construction sound for variable-length inputs.
    speck::Block compute_tag(const std::uint8_t* data, std::size_t len) const {
        speck::Block state{0x70756666726d6163ull, static_cast<std::uint64_t>(len)};
        state = speck::encrypt_block(mac_keys_, state);
        for (std::size_t off = 0; off < len; off += 16) {
            std::uint8_t buf[16] = {0};
            for (std::size_t i = off; i < std::min(off + 16, len); ++i) buf[i - off] = data[i];
            speck::Block m = speck::block_from_bytes(buf);
            state.x ^= m.x;
            state.y ^= m.y;
            state = speck::encrypt_block(mac_keys_, state);
        }
        return state;
    }

    std::array<std::uint64_t, speck::kRounds> enc_keys_;
    std::array<std::uint64_t, speck::kRounds> mac_keys_;
};

// ---------------------------------------------------------------------------
// Weak-PUF stand-in: a fixed identity seed hashed to a stable 128-bit key
// (Matyas-Meyer-Oseas over the Speck primitive). Bit errors are not modeled;
// the protocol assumes the server keys are stable across power cycles.
// ---------------------------------------------------------------------------

struct WpufSim {
    std::vector<std::uint8_t> identity;
    std::size_t key_width = 128;
};

inline BitVec wpuf_key(const WpufSim& w) {
    if (w.key_width == 0 || w.key_width > 128)
        throw std::invalid_argument("wpuf_key: key_width must be in [1, 128]");
    // pad 0x80 then zeros to a block boundary, with the length in the final block
    std::vector<std::uint8_t> msg = w.identity;
    msg.push_back(0x80);
    while (msg.size() % 16 != 8) msg.push_back(0);
    for (int i = 0; i < 8; ++i)
        msg.push_back(static_cast<std::uint8_t>(w.identity.size() >> (8 * i)));
    speck::Block state{0x77707566357631ull, 0x6b657966756e63ull};
    for (std::size_t off = 0; off < msg.size(); off += 16) {
        speck::Block m = speck::block_from_bytes(msg.data() + off);
        speck::Block e = speck::encrypt_block(speck::Key{state.x, state.y}, m);
        state.x = e.x ^ m.x;
        state.y = e.y ^ m.y;
    }
    std::uint8_t out[16];
    speck::block_to_bytes(state, out);
    return BitVec::from_bytes(std::vector<std::uint8_t>(out, out + 16)).slice(1, w.key_width);
}

// ---------------------------------------------------------------------------
// base64 for ciphertext frames at rest.
// ---------------------------------------------------------------------------

inline std::string base64_encode(const std::vector<std::uint8_t>& data) {
    static const char* tab = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
    std::string out;
    out.reserve((data.size() + 2) / 3 * 4);
    for (std::size_t i = 0; i < data.size(); i += 3) {
        std::uint32_t v = static_cast<std::uint32_t>(data[i]) << 16;
        if (i + 1 < data.size()) v |= static_cast<std::uint32_t>(data[i + 1]) << 8;
        if (i + 2 < data.size()) v |= data[i + 2];
        out += tab[(v >> 18) & 63];
        out += tab[(v >> 12) & 63];
        out += i + 1 < data.size() ? tab[(v >> 6) & 63] : '=';
        out += i + 2 < data.size() ? tab[v & 63] : '=';
    }
    return out;
}

inline std::vector<std::uint8_t> base64_decode(const std::string& text) {
    auto val = [](char c) -> int {
        if (c >= 'A' && c <= 'Z') return c - 'A';
        if (c >= 'a' && c <= 'z') return c - 'a' + 26;
        if (c >= '0' && c <= '9') return c - '0' + 52;
        if (c == '+') return 62;
        if (c == '/') return 63;
        return -1;
    };
    if (text.size() % 4 != 0) throw ParseError("base64: length not a multiple of 4");
    std::vector<std::uint8_t> out;
    out.reserve(text.size() / 4 * 3);
    for (std::size_t i = 0; i < text.size(); i += 4) {
        int pad = 0;
        std::uint32_t v = 0;
        for (std::size_t j = 0; j < 4; ++j) {
            char c = text[i + j];
            if (c == '=') { ++pad; v <<= 6; continue; }
            int d = val(c);
            if (d < 0 || pad) throw ParseError("base64: bad character");
            v = (v << 6) | static_cast<std::uint32_t>(d);
        }
        out.push_back(static_cast<std::uint8_t>(v >> 16));
        if (pad < 2) out.push_back(static_cast<std::uint8_t>(v >> 8));
        if (pad < 1) out.push_back(static_cast<std::uint8_t>(v));
    }
    return out;
}

} // namespace pufforge
