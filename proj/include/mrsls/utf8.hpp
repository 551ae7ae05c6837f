#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace mrsls::utf8
{

    inline constexpr char32_t kReplacement = 0xFFFD;

    // Decodes UTF-8 leniently: each invalid byte becomes U+FFFD.
    std::u32string decode(std::string_view text);

    std::string encode(std::u32string_view text);
    void append(std::string& out, char32_t cp);

    std::size_t length(std::string_view text);

    // Keeps at most max_chars code points. When the input is longer, the last
    // kept position holds an ellipsis (U+2026).
    std::string truncate_with_ellipsis(std::string_view text, std::size_t max_chars);

    bool is_space(char32_t cp) noexcept;

    // ASCII, general, CJK symbol and full/half-width punctuation blocks.
    bool is_punctuation(char32_t cp) noexcept;

    // Lowercases A-Z only; everything else passes through byte-for-byte.
    std::string fold_ascii(std::string_view text);

} // namespace mrsls::utf8
