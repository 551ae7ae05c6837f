#include "mrsls/websocket.hpp"

#include <openssl/evp.h>
#include <openssl/sha.h>

#include <algorithm>
#include <array>
#include <cctype>

namespace mrsls::ws
{

    namespace
    {
        constexpr std::string_view kGuid = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11";

        bool iequals(std::string_view a, std::string_view b)
        {
            return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
                       return std::tolower(static_cast<unsigned char>(x)) == std::tolower(static_cast<unsigned char>(y));
                   });
        }

        std::string_view trim(std::string_view s)
        {
            while (!s.empty() && (s.front() == ' ' || s.front() == '\t'))
                s.remove_prefix(1);
            while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
                s.remove_suffix(1);
            return s;
        }

        std::uint8_t byte_at(const std::string& s, std::size_t i) { return static_cast<std::uint8_t>(s[i]); }
    } // namespace

    std::string accept_key(std::string_view client_key)
    {
        std::string input(client_key);
        input += kGuid;
        std::array<unsigned char, SHA_DIGEST_LENGTH> digest{};
        SHA1(reinterpret_cast<const unsigned char*>(input.data()), input.size(), digest.data());
        std::array<unsigned char, 4 * ((SHA_DIGEST_LENGTH + 2) / 3) + 1> out{};
        const int n = EVP_EncodeBlock(out.data(), digest.data(), SHA_DIGEST_LENGTH);
        return std::string(reinterpret_cast<const char*>(out.data()), static_cast<std::size_t>(n));
    }

    std::optional<std::string> handshake_key(std::string_view request)
    {
        if (request.substr(0, 4) != "GET ")
            return std::nullopt;
        bool upgrade = false;
        std::optional<std::string> key;
        std::size_t pos = request.find('\n');
        while (pos != std::string_view::npos && pos + 1 < request.size())
        {
            const auto end = request.find('\n', pos + 1);
            const auto line = trim(request.substr(pos + 1, end == std::string_view::npos ? end : end - pos - 1));
            pos = end;
            const auto colon = line.find(':');
            if (colon == std::string_view::npos)
                continue;
            const auto name = trim(line.substr(0, colon));
            const auto value = trim(line.substr(colon + 1));
            if (iequals(name, "Upgrade") && iequals(value, "websocket"))
                upgrade = true;
            else if (iequals(name, "Sec-WebSocket-Key"))
                key = std::string(value);
        }
        if (!upgrade || !key || key->empty())
            return std::nullopt;
        return key;
    }

    std::string handshake_response(std::string_view client_key)
    {
        return "HTTP/1.1 101 Switching Protocols\r\n"
               "Upgrade: websocket\r\n"
               "Connection: Upgrade\r\n"
               "Sec-WebSocket-Accept: " +
               accept_key(client_key) + "\r\n\r\n";
    }

    std::string handshake_request(std::string_view host, std::string_view path, std::string_view client_key)
    {
        std::string out = "GET ";
        out += path;
        out += " HTTP/1.1\r\nHost: ";
        out += host;
        out += "\r\nUpgrade: websocket\r\nConnection: Upgrade\r\nSec-WebSocket-Key: ";
        out += client_key;
        out += "\r\nSec-WebSocket-Version: 13\r\n\r\n";
        return out;
    }

    std::string encode_frame(Opcode op, std::string_view payload, std::optional<std::uint32_t> mask)
    {
        std::string out;
        out.reserve(payload.size() + 14);
        out.push_back(static_cast<char>(0x80 | static_cast<std::uint8_t>(op)));
        const std::uint8_t mask_bit = mask ? 0x80 : 0x00;
        const std::uint64_t n = payload.size();
        if (n < 126)
        {
            out.push_back(static_cast<char>(mask_bit | n));
        }
        else if (n <= 0xFFFF)
        {
            out.push_back(static_cast<char>(mask_bit | 126));
            out.push_back(static_cast<char>((n >> 8) & 0xFF));
            out.push_back(static_cast<char>(n & 0xFF));
        }
        else
        {
            out.push_back(static_cast<char>(mask_bit | 127));
            for (int i = 7; i >= 0; --i)
                out.push_back(static_cast<char>((n >> (8 * i)) & 0xFF));
        }
        if (!mask)
        {
            out.append(payload);
            return out;
        }
        const std::array<char, 4> key{static_cast<char>(*mask >> 24), static_cast<char>(*mask >> 16),
                                      static_cast<char>(*mask >> 8), static_cast<char>(*mask)};
        out.append(key.data(), key.size());
        for (std::size_t i = 0; i < payload.size(); ++i)
            out.push_back(static_cast<char>(payload[i] ^ key[i % 4]));
        return out;
    }

    std::optional<Message> FrameDecoder::next()
    {
        while (true)
        {
            if (buffer_.size() < 2)
                return std::nullopt;
            const std::uint8_t b0 = byte_at(buffer_, 0);
            const std::uint8_t b1 = byte_at(buffer_, 1);
            if (b0 & 0x70)
                throw WsError("reserved bits set");
            const bool fin = b0 & 0x80;
            const auto op = static_cast<Opcode>(b0 & 0x0F);
            const bool masked = b1 & 0x80;
            if (require_mask_ && !masked)
                throw WsError("client frame is not masked");

            std::size_t header = 2;
            std::uint64_t len = b1 & 0x7F;
            if (len == 126)
            {
                if (buffer_.size() < 4)
                    return std::nullopt;
                len = (std::uint64_t{byte_at(buffer_, 2)} << 8) | byte_at(buffer_, 3);
                header = 4;
            }
            else if (len == 127)
            {
                if (buffer_.size() < 10)
                    return std::nullopt;
                len = 0;
                for (int i = 0; i < 8; ++i)
                    len = (len << 8) | byte_at(buffer_, 2 + i);
                header = 10;
            }
            if (len > max_ || partial_.size() + len > max_)
                throw WsError("message exceeds " + std::to_string(max_) + " bytes");
            const std::size_t key_at = header;
            if (masked)
                header += 4;
            if (buffer_.size() < header + len)
                return std::nullopt;

            std::string payload = buffer_.substr(header, static_cast<std::size_t>(len));
            if (masked)
            {
                for (std::size_t i = 0; i < payload.size(); ++i)
                    payload[i] = static_cast<char>(payload[i] ^ buffer_[key_at + i % 4]);
            }
            buffer_.erase(0, header + static_cast<std::size_t>(len));

            switch (op)
            {
            case Opcode::Close:
            case Opcode::Ping:
            case Opcode::Pong:
                if (!fin || len > 125)
                    throw WsError("malformed control frame");
                return Message{op, std::move(payload)};
            case Opcode::Text:
            case Opcode::Binary:
                if (partial_op_)
                    throw WsError("new message inside a fragmented one");
                if (fin)
                    return Message{op, std::move(payload)};
                partial_op_ = op;
                partial_ = std::move(payload);
                continue;
            case Opcode::Continuation:
                if (!partial_op_)
                    throw WsError("continuation without a message");
                partial_ += payload;
                if (!fin)
                    continue;
                {
                    Message m{*partial_op_, std::move(partial_)};
                    partial_op_.reset();
                    partial_.clear();
                    return m;
                }
            default:
                throw WsError("unknown opcode");
            }
        }
    }

} // namespace mrsls::ws
