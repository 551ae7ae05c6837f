/*
 * Session replay log: one JSON object per line. A header carries the session
 * configuration and content digests of the input files, then one record per
 * applied chat event (with the tick it was applied at), then an end record
 * with the tick count and the final state hash.
 */
#pragma once

#include "mrsls/chatparse.hpp"
#include "mrsls/session.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace mrsls
{

    class ReplayError : public std::runtime_error
    {
    public:
        using std::runtime_error::runtime_error;
    };

    struct ReplayHeader
    {
        SessionConfig config;
        std::string session_id;
        std::string scene_path;
        std::string corpus_path;
        std::string aliases_path; // empty: built-in aliases
        std::string scene_digest;
        std::string corpus_digest;
        std::string aliases_digest;
    };

    struct ReplayEvent
    {
        Tick tick = 0;
        ChatEvent event;
        bool operator==(const ReplayEvent&) const = default;
    };

    struct ReplayEnd
    {
        Tick ticks = 0;
        std::uint64_t hash = 0;
    };

    struct ReplayLog
    {
        ReplayHeader header;
        std::vector<ReplayEvent> events;
        std::optional<ReplayEnd> end; // absent if the server died mid-session
    };

    // FNV-1a digest of a file's bytes, as 16 hex digits.
    std::string file_digest(const std::string& path);

    class ReplayWriter
    {
    public:
        ReplayWriter(std::ostream& out, const ReplayHeader& header);

        void event(Tick tick, const ChatEvent& e);
        void end(Tick ticks, std::uint64_t hash);

    private:
        std::ostream& out_;
    };

    ReplayLog read_replay(std::istream& in);
    ReplayLog load_replay(const std::string& path);

    // One tick of the session: apply the events (already in seq order), then
    // advance. Returns the state hash after the tick. Both the live server and
    // the replayer go through here.
    std::uint64_t run_tick(Session& session, const std::vector<ChatEvent>& events);

    using TickHashFn = std::function<void(Tick tick, std::uint64_t hash)>;

    // Replays `ticks` ticks of the log onto a fresh session, calling on_tick
    // after every tick. Returns the final state hash.
    std::uint64_t replay(Session& session, const std::vector<ReplayEvent>& events, Tick ticks,
                         const TickHashFn& on_tick = {});

} // namespace mrsls
