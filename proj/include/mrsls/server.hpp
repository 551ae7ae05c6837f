/*
 * Network front end. One I/O thread runs every connection; one simulation
 * thread owns the Session. They meet only at the EventQueue (inbound) and at
 * encoded, immutable snapshot strings posted back to the I/O thread.
 *
 * A connection speaks either length-prefixed JSON over TCP or, when its first
 * bytes are an HTTP upgrade request, WebSocket text frames.
 */
#pragma once

#include "mrsls/chatparse.hpp"
#include "mrsls/protocol.hpp"
#include "mrsls/replay_log.hpp"
#include "mrsls/session.hpp"

#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace mrsls::net
{

    // Session clock: milliseconds since start, scaled by the speed factor.
    class SessionClock
    {
    public:
        explicit SessionClock(double speed = 1.0);
        std::int64_t now_ms() const;
        double speed() const noexcept { return speed_; }
        std::chrono::steady_clock::time_point start() const noexcept { return start_; }

    private:
        double speed_;
        std::chrono::steady_clock::time_point start_;
    };

    // The one place where sequence numbers are assigned.
    class EventQueue
    {
    public:
        ChatEvent push(ViewerId viewer, std::string display_name, std::variant<CommentEvent, GiftEvent> kind,
                       std::int64_t timestamp_ms);
        std::vector<ChatEvent> drain();
        std::uint64_t last_seq() const;

    private:
        mutable std::mutex mutex_;
        std::uint64_t seq_ = 0;
        std::vector<ChatEvent> pending_;
    };

    // Token bucket per viewer, in session-clock time.
    class RateLimiter
    {
    public:
        RateLimiter(double per_second, double burst) : rate_(per_second), burst_(burst) {}
        bool allow(const ViewerId& viewer, std::int64_t now_ms);

    private:
        struct Bucket
        {
            double tokens;
            std::int64_t at_ms;
        };
        double rate_;
        double burst_;
        std::map<ViewerId, Bucket> buckets_;
    };

    struct ServerOptions
    {
        std::string host = "127.0.0.1";
        std::uint16_t port = 7464; // 0: pick an ephemeral port
        double speed = 1.0;
        std::optional<double> duration_s; // simulated seconds; run until stopped when absent
        std::string log_path;             // replay log; none when empty
        std::string hash_path;            // per-tick hashes; none when empty
        bool keep_hashes = false;         // also keep per-tick hashes in memory
        std::size_t max_backlog = 90;
        double rate_per_s = 2.0;
        double rate_burst = 2.0;
        bool handle_signals = false; // stop on SIGINT/SIGTERM
    };

    struct ServerStats
    {
        Tick ticks = 0;
        std::uint64_t final_hash = 0;
        std::uint64_t events = 0;
        std::uint64_t snapshots = 0;
        std::uint64_t connections = 0;
        std::uint64_t dropped_slow = 0;
        std::vector<std::uint64_t> tick_hashes; // index i: hash after tick i + 1
    };

    class Connection;

    class Server
    {
    public:
        // Binds the listener immediately; throws if the port is unavailable.
        Server(Session session, ReplayHeader header, ServerOptions options);
        ~Server();

        Server(const Server&) = delete;
        Server& operator=(const Server&) = delete;

        std::uint16_t port() const;
        const std::string& session_id() const;

        // Starts the I/O and simulation threads.
        void start();
        // Blocks until the duration elapses or stop() is called.
        void wait();
        void stop();

        ServerStats stats() const;

    private:
        friend class Connection;
        struct Impl;
        std::unique_ptr<Impl> impl_;
    };

    enum class Transport
    {
        Framed,
        WebSocket,
    };

    // Blocking client used by tests and tools.
    class Client
    {
    public:
        Client(const std::string& host, std::uint16_t port, Transport transport = Transport::Framed);
        ~Client();

        Client(const Client&) = delete;
        Client& operator=(const Client&) = delete;

        void send(const protocol::ClientMessage& m);
        void send_raw(std::string_view json_text);

        // Next server message, or nullopt on timeout or once the server closed.
        std::optional<protocol::ServerMessage> receive(std::chrono::milliseconds timeout);

        template <class T>
        std::optional<T> receive_until(std::chrono::milliseconds timeout)
        {
            const auto deadline = std::chrono::steady_clock::now() + timeout;
            while (true)
            {
                const auto left =
                    std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
                if (left.count() <= 0)
                    return std::nullopt;
                auto m = receive(left);
                if (!m)
                    return std::nullopt;
                if (auto* t = std::get_if<T>(&*m))
                    return std::move(*t);
            }
        }

        bool closed() const noexcept;

    private:
        struct Impl;
        std::unique_ptr<Impl> impl_;
    };

} // namespace mrsls::net
