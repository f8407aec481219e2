#include "ems/sha1.hpp"

#include <cassert>
#include <cstring>

namespace ems {

namespace {

inline std::uint32_t rotl(std::uint32_t x, int n) {
    return (x << n) | (x >> (32 - n));
}

} // namespace

void Sha1::reset() {
    state_[0] = 0x67452301u;
    state_[1] = 0xEFCDAB89u;
    state_[2] = 0x98BADCFEu;
    state_[3] = 0x10325476u;
    state_[4] = 0xC3D2E1F0u;
    total_bits_ = 0;
    buffered_ = 0;
    finalized_ = false;
}

void Sha1::process_block(const std::uint8_t* block) {
    std::uint32_t w[80];
    for (int i = 0; i < 16; ++i) {
        w[i] = (std::uint32_t(block[i * 4]) << 24) | (std::uint32_t(block[i * 4 + 1]) << 16) |
               (std::uint32_t(block[i * 4 + 2]) << 8) | std::uint32_t(block[i * 4 + 3]);
    }
    for (int i = 16; i < 80; ++i) {
        w[i] = rotl(w[i - 3] ^ w[i - 8] ^ w[i - 14] ^ w[i - 16], 1);
    }

    std::uint32_t a = state_[0], b = state_[1], c = state_[2], d = state_[3], e = state_[4];
    for (int i = 0; i < 80; ++i) {
        std::uint32_t f, k;
        if (i < 20) {
            f = (b & c) | (~b & d);
            k = 0x5A827999u;
        } else if (i < 40) {
            f = b ^ c ^ d;
            k = 0x6ED9EBA1u;
        } else if (i < 60) {
            f = (b & c) | (b & d) | (c & d);
            k = 0x8F1BBCDCu;
        } else {
            f = b ^ c ^ d;
            k = 0xCA62C1D6u;
        }
        std::uint32_t tmp = rotl(a, 5) + f + e + k + w[i];
        e = d;
        d = c;
        c = rotl(b, 30);
        b = a;
        a = tmp;
    }
    state_[0] += a;
    state_[1] += b;
    state_[2] += c;
    state_[3] += d;
    state_[4] += e;
}

void Sha1::update(const void* data, std::size_t len) {
    assert(!finalized_);
    const auto* p = static_cast<const std::uint8_t*>(data);
    total_bits_ += std::uint64_t(len) * 8;
    if (buffered_ > 0) {
        std::size_t take = std::min(len, std::size_t(64) - buffered_);
        std::memcpy(buffer_ + buffered_, p, take);
        buffered_ += take;
        p += take;
        len -= take;
        if (buffered_ == 64) {
            process_block(buffer_);
            buffered_ = 0;
        }
    }
    while (len >= 64) {
        process_block(p);
        p += 64;
        len -= 64;
    }
    if (len > 0) {
        std::memcpy(buffer_, p, len);
        buffered_ = len;
    }
}

std::array<std::uint8_t, 20> Sha1::digest() {
    assert(!finalized_);
    std::uint64_t bits = total_bits_;
    const std::uint8_t pad = 0x80;
    update(&pad, 1);
    const std::uint8_t zero = 0x00;
    while (buffered_ != 56) {
        update(&zero, 1);
    }
    std::uint8_t len_bytes[8];
    for (int i = 0; i < 8; ++i) {
        len_bytes[i] = std::uint8_t(bits >> (56 - 8 * i));
    }
    update(len_bytes, 8);
    assert(buffered_ == 0);
    finalized_ = true;

    std::array<std::uint8_t, 20> out{};
    for (int i = 0; i < 5; ++i) {
        out[i * 4] = std::uint8_t(state_[i] >> 24);
        out[i * 4 + 1] = std::uint8_t(state_[i] >> 16);
        out[i * 4 + 2] = std::uint8_t(state_[i] >> 8);
        out[i * 4 + 3] = std::uint8_t(state_[i]);
    }
    return out;
}

std::string Sha1::hex_digest() {
    auto d = digest();
    return to_hex(d.data(), d.size());
}

std::string Sha1::hex(std::string_view data) {
    Sha1 h;
    h.update(data);
    return h.hex_digest();
}

std::string to_hex(const std::uint8_t* bytes, std::size_t len) {
    static const char* digits = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (std::size_t i = 0; i < len; ++i) {
        out.push_back(digits[bytes[i] >> 4]);
        out.push_back(digits[bytes[i] & 0xF]);
    }
    return out;
}

} // namespace ems
