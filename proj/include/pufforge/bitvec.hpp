#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace pufforge {

/// Ordered bit sequence with MSB-first, 1-based indexing: bit(1) is the most
/// significant bit. This is the shared currency for challenges, responses,
/// nonces and covered frames. Values are immutable in spirit; mutating
/// accessors exist only for construction.
///
/// Hex text form is `len:HEXDIGITS` where the final nibble is padded with
/// low zeros, e.g. a 5-bit vector 10110 serializes as `5:B0`. The explicit
/// length field matters because the widths in play (n, n+4, l, l+t) are not
/// byte-aligned.
class BitVec {
public:
    BitVec() = default;

    /// All-zeros vector of the given length.
    explicit BitVec(std::size_t len) : bits_(len, 0) {}

    /// Build from a "1011"-style literal. Handy in tests.
    static BitVec from_string(std::string_view s) {
        BitVec v(s.size());
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (s[i] == '1') v.bits_[i] = 1;
            else if (s[i] != '0') throw std::invalid_argument("BitVec literal must be 0/1");
        }
        return v;
    }

    /// Interpret the low `width` bits of `value` MSB-first.
    static BitVec from_uint(std::uint64_t value, std::size_t width) {
        if (width > 64) throw std::invalid_argument("from_uint: width > 64");
        BitVec v(width);
        for (std::size_t i = 0; i < width; ++i)
            v.bits_[i] = static_cast<std::uint8_t>((value >> (width - 1 - i)) & 1u);
        return v;
    }

    /// Parse the `len:HEX` form emitted by to_hex().
    static BitVec from_hex(std::string_view s) {
        auto colon = s.find(':');
        if (colon == std::string_view::npos) throw std::invalid_argument("BitVec hex: missing ':'");
        std::size_t len = 0;
        for (char c : s.substr(0, colon)) {
            if (c < '0' || c > '9') throw std::invalid_argument("BitVec hex: bad length field");
            len = len * 10 + static_cast<std::size_t>(c - '0');
        }
        std::string_view digits = s.substr(colon + 1);
        if (digits.size() != (len + 3) / 4) throw std::invalid_argument("BitVec hex: digit count mismatch");
        BitVec v(len);
        for (std::size_t i = 0; i < len; ++i) {
            char c = digits[i / 4];
            int nib;
            if (c >= '0' && c <= '9') nib = c - '0';
            else if (c >= 'A' && c <= 'F') nib = c - 'A' + 10;
            else if (c >= 'a' && c <= 'f') nib = c - 'a' + 10;
            else throw std::invalid_argument("BitVec hex: bad digit");
            v.bits_[i] = static_cast<std::uint8_t>((nib >> (3 - i % 4)) & 1);
        }
        // pad bits beyond len must be zero
        std::size_t pad = digits.size() * 4 - len;
        if (pad) {
            char c = digits.back();
            int nib = (c >= '0' && c <= '9') ? c - '0' : (c >= 'A' && c <= 'F') ? c - 'A' + 10 : c - 'a' + 10;
            if (nib & ((1 << pad) - 1)) throw std::invalid_argument("BitVec hex: nonzero padding");
        }
        return v;
    }

    /// Bits of a byte string, MSB of byte 0 first.
    static BitVec from_bytes(const std::vector<std::uint8_t>& bytes) {
        BitVec v(bytes.size() * 8);
        for (std::size_t i = 0; i < bytes.size(); ++i)
            for (int j = 0; j < 8; ++j)
                v.bits_[i * 8 + j] = static_cast<std::uint8_t>((bytes[i] >> (7 - j)) & 1u);
        return v;
    }

    std::size_t size() const { return bits_.size(); }
    bool empty() const { return bits_.empty(); }

    /// 1-based, MSB-first access.
    int bit(std::size_t i) const {
        if (i < 1 || i > bits_.size()) throw std::out_of_range("BitVec::bit index");
        return bits_[i - 1];
    }

    void set_bit(std::size_t i, int v) {
        if (i < 1 || i > bits_.size()) throw std::out_of_range("BitVec::set_bit index");
        bits_[i - 1] = static_cast<std::uint8_t>(v & 1);
    }

    /// Inclusive 1-based sub-range [i, j].
    BitVec slice(std::size_t i, std::size_t j) const {
        if (i < 1 || j > bits_.size() || i > j + 1) throw std::out_of_range("BitVec::slice range");
        BitVec v;
        v.bits_.assign(bits_.begin() + static_cast<std::ptrdiff_t>(i - 1),
                       bits_.begin() + static_cast<std::ptrdiff_t>(j));
        return v;
    }

    /// Interpret the whole vector as an MSB-first unsigned integer.
    std::uint64_t to_uint() const {
        if (bits_.size() > 64) throw std::invalid_argument("to_uint: width > 64");
        std::uint64_t v = 0;
        for (std::uint8_t b : bits_) v = (v << 1) | b;
        return v;
    }

    std::string to_hex() const {
        std::string out = std::to_string(bits_.size());
        out += ':';
        static const char* digits = "0123456789ABCDEF";
        for (std::size_t i = 0; i < bits_.size(); i += 4) {
            int nib = 0;
            for (std::size_t j = 0; j < 4; ++j)
                nib = (nib << 1) | (i + j < bits_.size() ? bits_[i + j] : 0);
            out += digits[nib];
        }
        return out;
    }

    std::string to_string() const {
        std::string s;
        s.reserve(bits_.size());
        for (std::uint8_t b : bits_) s += static_cast<char>('0' + b);
        return s;
    }

    /// Pack MSB-first into bytes, final byte padded with low zeros.
    std::vector<std::uint8_t> to_bytes() const {
        std::vector<std::uint8_t> out((bits_.size() + 7) / 8, 0);
        for (std::size_t i = 0; i < bits_.size(); ++i)
            if (bits_[i]) out[i / 8] |= static_cast<std::uint8_t>(0x80u >> (i % 8));
        return out;
    }

    bool all_zeros() const {
        for (std::uint8_t b : bits_) if (b) return false;
        return true;
    }

    bool all_ones() const {
        for (std::uint8_t b : bits_) if (!b) return false;
        return true;
    }

    std::size_t popcount() const {
        std::size_t c = 0;
        for (std::uint8_t b : bits_) c += b;
        return c;
    }

    BitVec operator~() const {
        BitVec v(*this);
        for (auto& b : v.bits_) b ^= 1u;
        return v;
    }

    BitVec operator^(const BitVec& other) const {
        if (other.size() != size()) throw std::invalid_argument("BitVec xor: length mismatch");
        BitVec v(*this);
        for (std::size_t i = 0; i < bits_.size(); ++i) v.bits_[i] ^= other.bits_[i];
        return v;
    }

    bool operator==(const BitVec& other) const = default;

private:
    std::vector<std::uint8_t> bits_; // one entry per bit, index 0 = MSB
};

/// X ∥ Y with X in the high positions.
inline BitVec concat(const BitVec& x, const BitVec& y) {
    BitVec v(x.size() + y.size());
    for (std::size_t i = 1; i <= x.size(); ++i) v.set_bit(i, x.bit(i));
    for (std::size_t i = 1; i <= y.size(); ++i) v.set_bit(x.size() + i, y.bit(i));
    return v;
}

/// Unnormalized Hamming distance (count of differing positions).
inline std::size_t hd_count(const BitVec& x, const BitVec& y) {
    if (x.size() != y.size()) throw std::invalid_argument("hd_count: length mismatch");
    std::size_t d = 0;
    for (std::size_t i = 1; i <= x.size(); ++i) d += static_cast<std::size_t>(x.bit(i) ^ y.bit(i));
    return d;
}

} // namespace pufforge
