#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace mrsls
{

    // Amount of CNY in fen (1/100 yuan). Currency never touches floating point.
    struct Fen
    {
        std::int64_t value = 0;

        constexpr Fen() = default;
        constexpr explicit Fen(std::int64_t fen) : value(fen) {}

        static constexpr Fen yuan(std::int64_t y) { return Fen{y * 100}; }

        constexpr auto operator<=>(const Fen&) const = default;
        constexpr Fen operator+(Fen o) const { return Fen{value + o.value}; }
        constexpr Fen& operator+=(Fen o)
        {
            value += o.value;
            return *this;
        }
    };

    // Parses "15", "15.5", "15.00" (at most two decimals, optional leading '-').
    std::optional<Fen> parse_cny(std::string_view text);

    // Renders with exactly two decimals, e.g. "15.00".
    std::string format_cny(Fen amount);

} // namespace mrsls
