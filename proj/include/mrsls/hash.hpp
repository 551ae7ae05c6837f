#pragma once

#include <bit>
#include <cstdint>
#include <string>
#include <string_view>

namespace mrsls
{

    // FNV-1a, 64-bit. Doubles are hashed by bit pattern so equal hashes mean
    // bit-identical state.
    class StateHasher
    {
    public:
        void add(std::uint64_t v)
        {
            for (int i = 0; i < 8; ++i)
            {
                hash_ ^= (v >> (8 * i)) & 0xFF;
                hash_ *= kPrime;
            }
        }
        void add(std::int64_t v) { add(static_cast<std::uint64_t>(v)); }
        void add(int v) { add(static_cast<std::uint64_t>(static_cast<std::int64_t>(v))); }
        void add(bool v) { add(static_cast<std::uint64_t>(v)); }
        void add(double v) { add(std::bit_cast<std::uint64_t>(v)); }
        void add(std::string_view s)
        {
            add(static_cast<std::uint64_t>(s.size()));
            for (unsigned char c : s)
            {
                hash_ ^= c;
                hash_ *= kPrime;
            }
        }

        std::uint64_t value() const noexcept { return hash_; }

    private:
        static constexpr std::uint64_t kPrime = 0x100000001b3ULL;
        std::uint64_t hash_ = 0xcbf29ce484222325ULL;
    };

    std::string hash_hex(std::uint64_t h);

} // namespace mrsls
