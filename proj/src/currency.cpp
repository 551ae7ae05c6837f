#include "mrsls/currency.hpp"

#include <cstdlib>
#include <limits>

namespace mrsls
{

    std::optional<Fen> parse_cny(std::string_view text)
    {
        if (text.empty())
            return std::nullopt;
        bool negative = false;
        std::size_t i = 0;
        if (text[0] == '-' || text[0] == '+')
        {
            negative = text[0] == '-';
            ++i;
        }

        constexpr std::int64_t kLimit = std::numeric_limits<std::int64_t>::max() / 1000;
        std::int64_t whole = 0;
        std::size_t digits = 0;
        for (; i < text.size() && text[i] != '.'; ++i)
        {
            const char c = text[i];
            if (c < '0' || c > '9')
                return std::nullopt;
            whole = whole * 10 + (c - '0');
            if (whole > kLimit)
                return std::nullopt;
            ++digits;
        }

        std::int64_t frac = 0;
        std::size_t frac_digits = 0;
        if (i < text.size())
        {
            ++i; // '.'
            for (; i < text.size(); ++i)
            {
                const char c = text[i];
                if (c < '0' || c > '9' || frac_digits == 2)
                    return std::nullopt;
                frac = frac * 10 + (c - '0');
                ++frac_digits;
            }
            if (frac_digits == 0)
                return std::nullopt;
        }
        if (digits == 0 && frac_digits == 0)
            return std::nullopt;
        if (frac_digits == 1)
            frac *= 10;

        const std::int64_t fen = whole * 100 + frac;
        return Fen{negative ? -fen : fen};
    }

    std::string format_cny(Fen amount)
    {
        const bool negative = amount.value < 0;
        const std::uint64_t abs = negative ? static_cast<std::uint64_t>(-(amount.value + 1)) + 1
                                           : static_cast<std::uint64_t>(amount.value);
        std::string out = negative ? "-" : "";
        out += std::to_string(abs / 100);
        out += '.';
        const auto cents = abs % 100;
        out += static_cast<char>('0' + cents / 10);
        out += static_cast<char>('0' + cents % 10);
        return out;
    }

} // namespace mrsls
