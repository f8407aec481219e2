#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

namespace ems {

// Incremental SHA-1 (FIPS 180-4). Package identifiers, bundle ids and
// per-file dependency hashes are all 40-char lowercase hex digests of
// this function.
class Sha1 {
public:
    Sha1() { reset(); }

    void reset();
    void update(const void* data, std::size_t len);
    void update(std::string_view s) { update(s.data(), s.size()); }

    // Finalizes. The object must be reset() before further updates.
    std::array<std::uint8_t, 20> digest();
    std::string hex_digest();

    static std::string hex(std::string_view data);

private:
    void process_block(const std::uint8_t* block);

    std::uint32_t state_[5];
    std::uint64_t total_bits_;
    std::uint8_t buffer_[64];
    std::size_t buffered_;
    bool finalized_;
};

std::string to_hex(const std::uint8_t* bytes, std::size_t len);

} // namespace ems
