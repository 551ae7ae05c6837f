/*
 * Wire protocol shared by the server, the audience simulator and browser
 * clients. Every message is a UTF-8 JSON object with a version field `v` and
 * a `type`. Over plain TCP each message is framed by a 4-byte big-endian
 * length; browser clients use WebSocket text frames instead. Field names are
 * documented in docs/protocol.md and must not change without bumping kVersion.
 */
#pragma once

#include "mrsls/chatparse.hpp"
#include "mrsls/entitysim.hpp"
#include "mrsls/scenegeo.hpp"
#include "mrsls/versegame.hpp"

#include <cstdint>
#include <deque>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace mrsls
{
    class Session;
}

namespace mrsls::protocol
{

    inline constexpr int kVersion = 1;
    inline constexpr std::size_t kMaxCommentChars = 500;
    inline constexpr std::size_t kMaxFrameBytes = 64 * 1024;

    // Depth hint for image-space entities (sky effects composite behind the lake).
    inline constexpr double kSkyDepth = 1.0e4;

    class ProtocolError : public std::runtime_error
    {
    public:
        using std::runtime_error::runtime_error;
    };

    // ---- client -> server ----

    struct Hello
    {
        std::string display_name;
        bool snapshots = true; // false: notices only (used by bots)
        bool operator==(const Hello&) const = default;
    };
    struct Comment
    {
        std::string text;
        bool operator==(const Comment&) const = default;
    };
    struct Gift
    {
        Fen amount;
        bool operator==(const Gift&) const = default;
    };
    struct Ping
    {
        bool operator==(const Ping&) const = default;
    };

    using ClientMessage = std::variant<Hello, Comment, Gift, Ping>;

    std::string encode(const ClientMessage& m);
    ClientMessage decode_client(std::string_view json_text);

    // ---- server -> client ----

    struct RenderedEntity
    {
        EntityId id = 0;
        EntityKind kind = EntityKind::Lotus;
        std::string owner; // display name on the tag
        ImagePoint image;
        double depth = 0.0;
        double phase = 0.0;
        std::optional<WorldPoint> world; // water entities only
        bool shining = false;
        bool dashing = false;
        std::optional<LotusColor> color;
        std::string text;              // umbrella story
        std::vector<ScoreEntry> flag;  // boat top three

        bool operator==(const RenderedEntity&) const = default;
    };

    struct NoticeRecord
    {
        std::string target; // "all" or a viewer id
        std::string code;
        std::string text;
        bool operator==(const NoticeRecord&) const = default;
    };

    struct GameInfo
    {
        GamePhase phase = GamePhase::Idle;
        std::vector<std::string> topics;
        int count = 0;
        int threshold = 0;
        double remaining_s = 0.0;
        bool operator==(const GameInfo&) const = default;
    };

    struct SnapshotMessage
    {
        std::uint64_t seq = 0;
        Tick tick = 0;
        std::string session_id;
        std::vector<RenderedEntity> entities;
        std::vector<NoticeRecord> notices;
        std::vector<ScoreEntry> scoreboard;
        GameInfo game;

        bool operator==(const SnapshotMessage&) const = default;
    };

    struct Welcome
    {
        ViewerId viewer_id;
        std::string session_id;
        int tick_rate = 30;
        std::string background_plate;
        int image_width = 0;
        int image_height = 0;
        bool operator==(const Welcome&) const = default;
    };
    struct Ack
    {
        std::uint64_t seq = 0;
        bool operator==(const Ack&) const = default;
    };
    struct Error
    {
        std::string code;
        std::string text;
        bool operator==(const Error&) const = default;
    };
    struct Pong
    {
        bool operator==(const Pong&) const = default;
    };

    using ServerMessage = std::variant<Welcome, Ack, NoticeRecord, Error, Pong, SnapshotMessage>;

    std::string encode(const ServerMessage& m);
    std::string encode_snapshot(const SnapshotMessage& s);
    ServerMessage decode_server(std::string_view json_text);

    NoticeRecord to_record(const fx::Notice& n);

    // Renders the session's current state. Image positions are project() of
    // the authoritative world positions under the session's camera.
    SnapshotMessage build_snapshot(const Session& session, const Effects& tick_effects, std::uint64_t seq,
                                   std::string session_id);

    // ---- framing ----

    std::string frame(std::string_view payload);

    // Incremental decoder for length-prefixed frames.
    class FrameDecoder
    {
    public:
        explicit FrameDecoder(std::size_t max_frame = kMaxFrameBytes) : max_frame_(max_frame) {}

        void feed(std::string_view bytes) { buffer_.append(bytes); }

        // Next complete payload; throws ProtocolError on an oversized frame.
        std::optional<std::string> next();

    private:
        std::size_t max_frame_;
        std::string buffer_;
    };

} // namespace mrsls::protocol
