#include "mrsls/utf8.hpp"

namespace mrsls::utf8
{

    namespace
    {
        std::size_t sequence_length(unsigned char lead) noexcept
        {
            if (lead < 0x80)
                return 1;
            if (lead >= 0xC2 && lead <= 0xDF)
                return 2;
            if (lead >= 0xE0 && lead <= 0xEF)
                return 3;
            if (lead >= 0xF0 && lead <= 0xF4)
                return 4;
            return 0;
        }
    } // namespace

    std::u32string decode(std::string_view text)
    {
        std::u32string out;
        out.reserve(text.size());
        std::size_t i = 0;
        while (i < text.size())
        {
            const auto lead = static_cast<unsigned char>(text[i]);
            const std::size_t len = sequence_length(lead);
            if (len == 0 || i + len > text.size())
            {
                out.push_back(kReplacement);
                ++i;
                continue;
            }
            if (len == 1)
            {
                out.push_back(lead);
                ++i;
                continue;
            }

            char32_t cp = lead & (0x7F >> len);
            bool ok = true;
            for (std::size_t k = 1; k < len; ++k)
            {
                const auto c = static_cast<unsigned char>(text[i + k]);
                if ((c & 0xC0) != 0x80)
                {
                    ok = false;
                    break;
                }
                cp = (cp << 6) | (c & 0x3F);
            }
            // Reject overlongs, surrogates and out-of-range values.
            if (ok)
            {
                if ((len == 3 && cp < 0x800) || (len == 4 && (cp < 0x10000 || cp > 0x10FFFF)) ||
                    (cp >= 0xD800 && cp <= 0xDFFF))
                    ok = false;
            }
            if (!ok)
            {
                out.push_back(kReplacement);
                ++i;
                continue;
            }
            out.push_back(cp);
            i += len;
        }
        return out;
    }

    void append(std::string& out, char32_t cp)
    {
        if (cp < 0x80)
        {
            out.push_back(static_cast<char>(cp));
        }
        else if (cp < 0x800)
        {
            out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
            out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
        }
        else if (cp < 0x10000)
        {
            out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
            out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
            out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
        }
        else
        {
            out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
            out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
            out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
            out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
        }
    }

    std::string encode(std::u32string_view text)
    {
        std::string out;
        out.reserve(text.size());
        for (char32_t cp : text)
            append(out, cp);
        return out;
    }

    std::size_t length(std::string_view text)
    {
        return decode(text).size();
    }

    std::string truncate_with_ellipsis(std::string_view text, std::size_t max_chars)
    {
        auto cps = decode(text);
        if (cps.size() <= max_chars)
            return encode(cps);
        if (max_chars == 0)
            return {};
        cps.resize(max_chars - 1);
        cps.push_back(U'…');
        return encode(cps);
    }

    bool is_space(char32_t cp) noexcept
    {
        switch (cp)
        {
        case U' ':
        case U'\t':
        case U'\n':
        case U'\v':
        case U'\f':
        case U'\r':
        case 0x85:
        case 0xA0:
        case 0x1680:
        case 0x2028:
        case 0x2029:
        case 0x202F:
        case 0x205F:
        case 0x3000:
        case 0xFEFF:
            return true;
        default:
            return cp >= 0x2000 && cp <= 0x200B;
        }
    }

    bool is_punctuation(char32_t cp) noexcept
    {
        if (cp < 0x80)
            return (cp >= 0x21 && cp <= 0x2F) || (cp >= 0x3A && cp <= 0x40) || (cp >= 0x5B && cp <= 0x60) ||
                   (cp >= 0x7B && cp <= 0x7E);
        if (cp == 0xA1 || cp == 0xA7 || cp == 0xAB || cp == 0xB6 || cp == 0xB7 || cp == 0xBB || cp == 0xBF)
            return true;
        if (cp >= 0x2010 && cp <= 0x2027)
            return true;
        if (cp >= 0x2030 && cp <= 0x205E)
            return true;
        if (cp >= 0x3001 && cp <= 0x3003)
            return true;
        if (cp >= 0x3008 && cp <= 0x3011)
            return true;
        if (cp >= 0x3014 && cp <= 0x301F)
            return true;
        if (cp == 0x30FB)
            return true;
        if (cp >= 0xFE10 && cp <= 0xFE19)
            return true;
        if (cp >= 0xFE30 && cp <= 0xFE4F)
            return true;
        if (cp >= 0xFE50 && cp <= 0xFE6B)
            return true;
        // Full-width ASCII punctuation and half-width CJK punctuation.
        if ((cp >= 0xFF01 && cp <= 0xFF0F) || (cp >= 0xFF1A && cp <= 0xFF20) || (cp >= 0xFF3B && cp <= 0xFF40) ||
            (cp >= 0xFF5B && cp <= 0xFF65))
            return true;
        return false;
    }

    std::string fold_ascii(std::string_view text)
    {
        std::string out(text);
        for (char& c : out)
        {
            if (c >= 'A' && c <= 'Z')
                c = static_cast<char>(c - 'A' + 'a');
        }
        return out;
    }

} // namespace mrsls::utf8
