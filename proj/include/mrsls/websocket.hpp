/*
 * Minimal RFC 6455 support for browser clients: the opening handshake and a
 * frame codec for text, close, ping and pong frames (with continuation).
 */
#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace mrsls::ws
{

    class WsError : public std::runtime_error
    {
    public:
        using std::runtime_error::runtime_error;
    };

    enum class Opcode : std::uint8_t
    {
        Continuation = 0x0,
        Text = 0x1,
        Binary = 0x2,
        Close = 0x8,
        Ping = 0x9,
        Pong = 0xA,
    };

    // base64(SHA-1(key + GUID)).
    std::string accept_key(std::string_view client_key);

    // Value of Sec-WebSocket-Key in an HTTP upgrade request, if it is one.
    std::optional<std::string> handshake_key(std::string_view request);

    std::string handshake_response(std::string_view client_key);
    std::string handshake_request(std::string_view host, std::string_view path, std::string_view client_key);

    // Server frames are unmasked; client frames must carry a mask.
    std::string encode_frame(Opcode op, std::string_view payload, std::optional<std::uint32_t> mask = std::nullopt);

    struct Message
    {
        Opcode opcode = Opcode::Text;
        std::string payload;
    };

    // Reassembles messages from a byte stream. With require_mask the decoder
    // enforces the client-to-server masking rule.
    class FrameDecoder
    {
    public:
        FrameDecoder(bool require_mask, std::size_t max_message) : require_mask_(require_mask), max_(max_message) {}

        void feed(std::string_view bytes) { buffer_.append(bytes); }

        // Control frames are returned as they arrive, even mid-fragment.
        std::optional<Message> next();

    private:
        bool require_mask_;
        std::size_t max_;
        std::string buffer_;
        std::optional<Opcode> partial_op_;
        std::string partial_;
    };

} // namespace mrsls::ws
