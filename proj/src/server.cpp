#include "mrsls/server.hpp"

#include "mrsls/utf8.hpp"
#include "mrsls/websocket.hpp"

#include <boost/asio.hpp>
#include <spdlog/spdlog.h>

#include <array>
#include <atomic>
#include <condition_variable>
#include <deque>
#include <fstream>
#include <limits>
#include <set>
#include <thread>

namespace mrsls::net
{

    namespace asio = boost::asio;
    using asio::ip::tcp;

    // ---- clock, queue, limiter ----

    SessionClock::SessionClock(double speed) : speed_(speed), start_(std::chrono::steady_clock::now())
    {
        if (!(speed > 0.0))
            throw std::invalid_argument("speed factor must be positive");
    }

    std::int64_t SessionClock::now_ms() const
    {
        const std::chrono::duration<double, std::milli> wall = std::chrono::steady_clock::now() - start_;
        return static_cast<std::int64_t>(wall.count() * speed_);
    }

    ChatEvent EventQueue::push(ViewerId viewer, std::string display_name, std::variant<CommentEvent, GiftEvent> kind,
                               std::int64_t timestamp_ms)
    {
        std::lock_guard lock(mutex_);
        ChatEvent e{std::move(viewer), std::move(display_name), std::move(kind), ++seq_, timestamp_ms};
        pending_.push_back(e);
        return e;
    }

    std::vector<ChatEvent> EventQueue::drain()
    {
        std::lock_guard lock(mutex_);
        std::vector<ChatEvent> out;
        out.swap(pending_);
        return out;
    }

    std::uint64_t EventQueue::last_seq() const
    {
        std::lock_guard lock(mutex_);
        return seq_;
    }

    bool RateLimiter::allow(const ViewerId& viewer, std::int64_t now_ms)
    {
        auto [it, fresh] = buckets_.try_emplace(viewer, Bucket{burst_, now_ms});
        auto& b = it->second;
        if (!fresh)
        {
            b.tokens = std::min(burst_, b.tokens + rate_ * static_cast<double>(now_ms - b.at_ms) / 1000.0);
            b.at_ms = now_ms;
        }
        if (b.tokens < 1.0)
            return false;
        b.tokens -= 1.0;
        return true;
    }

    // ---- server ----

    namespace
    {
        constexpr std::size_t kMaxHandshakeBytes = 8192;
        constexpr std::size_t kClientMaxMessage = 16 * 1024 * 1024;
    } // namespace

    class Connection;

    struct Server::Impl
    {
        Impl(Session s, ReplayHeader h, ServerOptions o)
            : session(std::move(s)),
              header(std::move(h)),
              options(std::move(o)),
              clock(options.speed),
              limiter(options.rate_per_s, options.rate_burst),
              acceptor(io),
              work(asio::make_work_guard(io)),
              signals(io)
        {
            if (header.session_id.empty())
                header.session_id = "s" + hash_hex(session.state_hash() ^ header.config.seed).substr(0, 8);
            const tcp::endpoint ep(asio::ip::make_address(options.host), options.port);
            acceptor.open(ep.protocol());
            acceptor.set_option(tcp::acceptor::reuse_address(true));
            acceptor.bind(ep);
            acceptor.listen();
        }

        void accept();
        void run_sim();
        void sim_loop();
        void publish(std::shared_ptr<const std::string> snapshot, std::vector<protocol::NoticeRecord> notices);
        void shutdown_io();

        Session session;
        ReplayHeader header;
        ServerOptions options;
        SessionClock clock;
        EventQueue queue;
        RateLimiter limiter; // I/O thread only

        asio::io_context io;
        tcp::acceptor acceptor;
        asio::executor_work_guard<asio::io_context::executor_type> work;
        asio::signal_set signals;
        std::set<std::shared_ptr<Connection>> connections; // I/O thread only
        std::optional<asio::steady_timer> drain_timer;
        std::uint64_t next_viewer = 0;
        std::atomic<int> subscribers{0};

        std::thread io_thread;
        std::thread sim_thread;
        std::mutex stop_mutex;
        std::condition_variable stop_cv;
        bool stopping = false;

        mutable std::mutex stats_mutex;
        ServerStats stats;
    };

    class Connection : public std::enable_shared_from_this<Connection>
    {
    public:
        Connection(Server::Impl& server, tcp::socket socket) : server_(server), socket_(std::move(socket)) {}

        void start() { read(); }

        bool greeted() const noexcept { return viewer_.has_value(); }
        bool subscribed() const noexcept { return subscribed_; }
        const std::optional<ViewerId>& viewer() const noexcept { return viewer_; }

        void send(const protocol::ServerMessage& m) { enqueue(protocol::encode(m), false); }
        void send_snapshot(const std::shared_ptr<const std::string>& payload) { enqueue(*payload, true); }

        // Flushes what is queued, then closes.
        void close_after_flush()
        {
            closing_ = true;
            if (!writing_)
                close_now();
        }

        void close_now()
        {
            if (closed_)
                return;
            closed_ = true;
            boost::system::error_code ignored;
            socket_.shutdown(tcp::socket::shutdown_both, ignored);
            socket_.close(ignored);
            if (subscribed_)
                --server_.subscribers;
            server_.connections.erase(shared_from_this());
            if (server_.connections.empty() && server_.drain_timer)
                server_.drain_timer->cancel();
        }

    private:
        enum class Mode
        {
            Unknown,
            Framed,
            WebSocket,
        };

        void read()
        {
            auto self = shared_from_this();
            socket_.async_read_some(asio::buffer(buffer_), [this, self](boost::system::error_code ec, std::size_t n) {
                if (ec || closed_)
                {
                    close_now();
                    return;
                }
                try
                {
                    on_bytes(std::string_view(buffer_.data(), n));
                }
                catch (const std::exception& e)
                {
                    spdlog::debug("connection {}: {}", viewer_.value_or("?"), e.what());
                    send(protocol::Error{"protocol_error", e.what()});
                    close_after_flush();
                }
                if (!closing_ && !closed_)
                    read();
            });
        }

        void on_bytes(std::string_view bytes)
        {
            if (mode_ == Mode::Unknown)
            {
                handshake_.append(bytes);
                const std::string_view get = "GET ";
                const auto prefix = std::string_view(handshake_).substr(0, get.size());
                if (get.substr(0, prefix.size()) != prefix)
                {
                    mode_ = Mode::Framed;
                    framed_.feed(handshake_);
                    handshake_.clear();
                }
                else
                {
                    const auto end = handshake_.find("\r\n\r\n");
                    if (end == std::string::npos)
                    {
                        if (handshake_.size() > kMaxHandshakeBytes)
                            throw protocol::ProtocolError("handshake too long");
                        return;
                    }
                    const auto key = ws::handshake_key(std::string_view(handshake_).substr(0, end + 4));
                    if (!key)
                    {
                        raw_write("HTTP/1.1 400 Bad Request\r\nContent-Length: 0\r\n\r\n");
                        close_after_flush();
                        return;
                    }
                    raw_write(ws::handshake_response(*key));
                    mode_ = Mode::WebSocket;
                    websocket_.feed(std::string_view(handshake_).substr(end + 4));
                    handshake_.clear();
                }
            }
            else if (mode_ == Mode::Framed)
            {
                framed_.feed(bytes);
            }
            else
            {
                websocket_.feed(bytes);
            }

            if (mode_ == Mode::Framed)
            {
                while (!closing_)
                {
                    auto payload = framed_.next();
                    if (!payload)
                        break;
                    on_text(*payload);
                }
                return;
            }
            while (!closing_)
            {
                auto m = websocket_.next();
                if (!m)
                    break;
                switch (m->opcode)
                {
                case ws::Opcode::Text:
                    on_text(m->payload);
                    break;
                case ws::Opcode::Ping:
                    raw_write(ws::encode_frame(ws::Opcode::Pong, m->payload));
                    break;
                case ws::Opcode::Close:
                    raw_write(ws::encode_frame(ws::Opcode::Close, m->payload.substr(0, 2)));
                    close_after_flush();
                    break;
                case ws::Opcode::Pong:
                    break;
                default:
                    send(protocol::Error{"unsupported", "only text frames are accepted"});
                    break;
                }
            }
        }

        void on_text(const std::string& text)
        {
            if (!greeted())
            {
                std::optional<protocol::ClientMessage> m;
                try
                {
                    m = protocol::decode_client(text);
                }
                catch (const protocol::ProtocolError& e)
                {
                    send(protocol::Error{"hello_required", e.what()});
                    close_after_flush();
                    return;
                }
                const auto* hello = std::get_if<protocol::Hello>(&*m);
                if (!hello)
                {
                    send(protocol::Error{"hello_required", "the first message must be hello"});
                    close_after_flush();
                    return;
                }
                greet(*hello);
                return;
            }

            protocol::ClientMessage m;
            try
            {
                m = protocol::decode_client(text);
            }
            catch (const protocol::ProtocolError& e)
            {
                send(protocol::Error{"bad_message", e.what()});
                return;
            }

            if (std::holds_alternative<protocol::Hello>(m))
            {
                send(protocol::Error{"already_greeted", "hello was already received"});
                return;
            }
            if (std::holds_alternative<protocol::Ping>(m))
            {
                send(protocol::Pong{});
                return;
            }

            std::variant<CommentEvent, GiftEvent> kind;
            if (const auto* c = std::get_if<protocol::Comment>(&m))
            {
                if (utf8::length(c->text) > protocol::kMaxCommentChars)
                {
                    send(protocol::NoticeRecord{*viewer_, "comment_too_long",
                                                "Comments are limited to " +
                                                    std::to_string(protocol::kMaxCommentChars) + " characters."});
                    return;
                }
                kind = CommentEvent{c->text};
            }
            else
            {
                kind = GiftEvent{std::get<protocol::Gift>(m).amount};
            }

            const auto now = server_.clock.now_ms();
            if (!server_.limiter.allow(*viewer_, now))
            {
                send(protocol::NoticeRecord{*viewer_, "rate_limited", "Slow down: at most two commands per second."});
                return;
            }
            const auto event = server_.queue.push(*viewer_, display_name_, std::move(kind), now);
            send(protocol::Ack{event.seq});
        }

        void greet(const protocol::Hello& hello)
        {
            viewer_ = "v" + std::to_string(++server_.next_viewer);
            display_name_ = normalize_comment(hello.display_name);
            const auto& scene = server_.session.scene();
            send(protocol::Welcome{*viewer_, server_.header.session_id, server_.session.config().tick_rate,
                                   scene.background_plate, scene.camera.image_width, scene.camera.image_height});
            if (hello.snapshots)
            {
                subscribed_ = true;
                ++server_.subscribers;
            }
            spdlog::info("viewer {} joined as '{}'", *viewer_, display_name_);
        }

        void raw_write(std::string bytes) { push_bytes(std::move(bytes), false); }

        void enqueue(const std::string& payload, bool snapshot)
        {
            if (mode_ == Mode::WebSocket)
                push_bytes(ws::encode_frame(ws::Opcode::Text, payload), snapshot);
            else
                push_bytes(protocol::frame(payload), snapshot);
        }

        void push_bytes(std::string bytes, bool snapshot)
        {
            if (closed_ || (closing_ && snapshot))
                return;
            if (snapshot && ++backlog_ > server_.options.max_backlog)
            {
                spdlog::warn("viewer {} is {} snapshots behind, disconnecting", viewer_.value_or("?"), backlog_);
                {
                    std::lock_guard lock(server_.stats_mutex);
                    ++server_.stats.dropped_slow;
                }
                close_now();
                return;
            }
            outbox_.push_back({std::move(bytes), snapshot});
            if (!writing_)
                write();
        }

        void write()
        {
            writing_ = true;
            auto self = shared_from_this();
            asio::async_write(socket_, asio::buffer(outbox_.front().first),
                              [this, self](boost::system::error_code ec, std::size_t) {
                                  writing_ = false;
                                  if (ec)
                                  {
                                      close_now();
                                      return;
                                  }
                                  if (outbox_.front().second)
                                      --backlog_;
                                  outbox_.pop_front();
                                  if (!outbox_.empty())
                                      write();
                                  else if (closing_)
                                      close_now();
                              });
        }

        Server::Impl& server_;
        tcp::socket socket_;
        std::array<char, 8192> buffer_{};
        Mode mode_ = Mode::Unknown;
        std::string handshake_;
        protocol::FrameDecoder framed_{protocol::kMaxFrameBytes};
        ws::FrameDecoder websocket_{true, protocol::kMaxFrameBytes};

        std::optional<ViewerId> viewer_;
        std::string display_name_;
        bool subscribed_ = false;

        std::deque<std::pair<std::string, bool>> outbox_;
        std::size_t backlog_ = 0;
        bool writing_ = false;
        bool closing_ = false;
        bool closed_ = false;
    };

    void Server::Impl::accept()
    {
        acceptor.async_accept([this](boost::system::error_code ec, tcp::socket socket) {
            if (ec)
                return; // acceptor closed
            socket.set_option(tcp::no_delay(true));
            auto c = std::make_shared<Connection>(*this, std::move(socket));
            connections.insert(c);
            {
                std::lock_guard lock(stats_mutex);
                ++stats.connections;
            }
            c->start();
            accept();
        });
    }

    void Server::Impl::publish(std::shared_ptr<const std::string> snapshot,
                               std::vector<protocol::NoticeRecord> notices)
    {
        asio::post(io, [this, snapshot = std::move(snapshot), notices = std::move(notices)] {
            // Copy: a slow connection may remove itself while we iterate.
            const std::vector<std::shared_ptr<Connection>> targets(connections.begin(), connections.end());
            for (const auto& c : targets)
            {
                if (!c->greeted())
                    continue;
                if (c->subscribed())
                {
                    if (snapshot)
                        c->send_snapshot(snapshot);
                    continue;
                }
                for (const auto& n : notices)
                {
                    if (n.target == "all" || n.target == *c->viewer())
                        c->send(n);
                }
            }
        });
    }

    void Server::Impl::shutdown_io()
    {
        asio::post(io, [this] {
            boost::system::error_code ignored;
            acceptor.close(ignored);
            signals.cancel(ignored);
            const std::vector<std::shared_ptr<Connection>> all(connections.begin(), connections.end());
            for (const auto& c : all)
                c->close_after_flush();
            work.reset();
            if (connections.empty())
                return;
            // Peers that stop reading must not hold the process open.
            drain_timer.emplace(io, std::chrono::seconds(2));
            drain_timer->async_wait([this](boost::system::error_code) {
                const std::vector<std::shared_ptr<Connection>> rest(connections.begin(), connections.end());
                for (const auto& c : rest)
                    c->close_now();
            });
        });
    }

    void Server::Impl::sim_loop()
    {
        const int rate = session.config().tick_rate;
        const Tick limit = options.duration_s ? static_cast<Tick>(std::llround(*options.duration_s * rate))
                                              : std::numeric_limits<Tick>::max();
        const std::chrono::duration<double> period(1.0 / rate / options.speed);

        std::ofstream log_file;
        std::optional<ReplayWriter> log;
        if (!options.log_path.empty())
        {
            log_file.open(options.log_path);
            if (!log_file)
                throw std::runtime_error("cannot write replay log " + options.log_path);
            log.emplace(log_file, header);
        }
        std::ofstream hash_file;
        if (!options.hash_path.empty())
        {
            hash_file.open(options.hash_path);
            if (!hash_file)
                throw std::runtime_error("cannot write hash file " + options.hash_path);
        }

        std::uint64_t hash = session.state_hash();
        std::uint64_t snapshot_seq = 0;
        while (session.tick() < limit)
        {
            const auto due = clock.start() + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                                 period * static_cast<double>(session.tick() + 1));
            bool last = false;
            {
                std::unique_lock lock(stop_mutex);
                if (stop_cv.wait_until(lock, due, [this] { return stopping; }))
                {
                    // Events already acknowledged get one final tick.
                    if (queue.last_seq() == session.last_seq())
                        break;
                    last = true;
                }
            }

            const auto events = queue.drain();
            if (log)
            {
                for (const auto& e : events)
                    log->event(session.tick(), e);
            }
            hash = run_tick(session, events);
            if (hash_file)
                hash_file << session.tick() << ' ' << hash_hex(hash) << '\n';

            const auto effects = session.take_effects();
            std::shared_ptr<const std::string> encoded;
            if (subscribers.load() > 0)
            {
                encoded = std::make_shared<const std::string>(protocol::encode_snapshot(
                    protocol::build_snapshot(session, effects, ++snapshot_seq, header.session_id)));
            }
            std::vector<protocol::NoticeRecord> notices;
            for (const auto& e : effects)
            {
                if (const auto* n = std::get_if<fx::Notice>(&e))
                    notices.push_back(protocol::to_record(*n));
            }
            if (encoded || !notices.empty())
                publish(std::move(encoded), std::move(notices));

            std::lock_guard lock(stats_mutex);
            stats.ticks = session.tick();
            stats.final_hash = hash;
            stats.events += events.size();
            stats.snapshots = snapshot_seq;
            if (options.keep_hashes)
                stats.tick_hashes.push_back(hash);
            if (last)
                break;
        }
        if (log)
            log->end(session.tick(), hash);
        spdlog::info("session {} ended at tick {} with hash {}", header.session_id, session.tick(), hash_hex(hash));
    }

    void Server::Impl::run_sim()
    {
        try
        {
            sim_loop();
        }
        catch (const std::exception& e)
        {
            spdlog::error("simulation stopped: {}", e.what());
        }
        shutdown_io();
    }

    Server::Server(Session session, ReplayHeader header, ServerOptions options)
        : impl_(std::make_unique<Impl>(std::move(session), std::move(header), std::move(options)))
    {
    }

    Server::~Server()
    {
        stop();
        wait();
    }

    std::uint16_t Server::port() const
    {
        return impl_->acceptor.local_endpoint().port();
    }

    const std::string& Server::session_id() const
    {
        return impl_->header.session_id;
    }

    void Server::start()
    {
        auto& d = *impl_;
        if (d.options.handle_signals)
        {
            d.signals.add(SIGINT);
            d.signals.add(SIGTERM);
            d.signals.async_wait([this](boost::system::error_code ec, int) {
                if (!ec)
                    stop();
            });
        }
        d.accept();
        d.io_thread = std::thread([&d] { d.io.run(); });
        d.sim_thread = std::thread([&d] { d.run_sim(); });
    }

    void Server::wait()
    {
        if (impl_->sim_thread.joinable())
            impl_->sim_thread.join();
        if (impl_->io_thread.joinable())
            impl_->io_thread.join();
    }

    void Server::stop()
    {
        {
            std::lock_guard lock(impl_->stop_mutex);
            impl_->stopping = true;
        }
        impl_->stop_cv.notify_all();
    }

    ServerStats Server::stats() const
    {
        std::lock_guard lock(impl_->stats_mutex);
        return impl_->stats;
    }

    // ---- client ----

    struct Client::Impl
    {
        asio::io_context io;
        tcp::socket socket{io};
        Transport transport;
        protocol::FrameDecoder framed{kClientMaxMessage};
        ws::FrameDecoder websocket{false, kClientMaxMessage};
        std::deque<std::string> inbox;
        std::array<char, 16384> buffer{};
        bool closed = false;
        std::uint32_t mask = 0x5EED1234;

        void write(const std::string& bytes)
        {
            boost::system::error_code ec;
            asio::write(socket, asio::buffer(bytes), ec);
            if (ec)
                closed = true;
        }

        void absorb(std::string_view bytes)
        {
            if (transport == Transport::Framed)
            {
                framed.feed(bytes);
                while (auto p = framed.next())
                    inbox.push_back(std::move(*p));
                return;
            }
            websocket.feed(bytes);
            while (auto m = websocket.next())
            {
                if (m->opcode == ws::Opcode::Text)
                    inbox.push_back(std::move(m->payload));
                else if (m->opcode == ws::Opcode::Close)
                    closed = true;
            }
        }

        // One read with a deadline; false on timeout.
        bool read_some(std::chrono::milliseconds timeout)
        {
            bool done = false;
            socket.async_read_some(asio::buffer(buffer), [&](boost::system::error_code ec, std::size_t n) {
                done = true;
                if (ec)
                    closed = true;
                else
                    absorb(std::string_view(buffer.data(), n));
            });
            io.restart();
            io.run_for(timeout);
            if (!done)
            {
                socket.cancel();
                io.restart();
                io.run();
            }
            return done;
        }
    };

    Client::Client(const std::string& host, std::uint16_t port, Transport transport) : impl_(std::make_unique<Impl>())
    {
        impl_->transport = transport;
        tcp::resolver resolver(impl_->io);
        asio::connect(impl_->socket, resolver.resolve(host, std::to_string(port)));
        impl_->socket.set_option(tcp::no_delay(true));
        if (transport == Transport::WebSocket)
        {
            const std::string key = "dGhlIHNhbXBsZSBub25jZQ==";
            impl_->write(ws::handshake_request(host, "/", key));
            asio::streambuf response;
            const auto n = asio::read_until(impl_->socket, response, "\r\n\r\n");
            std::string head(asio::buffers_begin(response.data()), asio::buffers_begin(response.data()) + n);
            if (head.find(ws::accept_key(key)) == std::string::npos)
                throw ws::WsError("server refused the WebSocket upgrade");
            response.consume(n);
            if (response.size() > 0)
            {
                std::string rest(asio::buffers_begin(response.data()), asio::buffers_end(response.data()));
                impl_->absorb(rest);
            }
        }
    }

    Client::~Client()
    {
        boost::system::error_code ignored;
        impl_->socket.shutdown(tcp::socket::shutdown_both, ignored);
        impl_->socket.close(ignored);
    }

    void Client::send(const protocol::ClientMessage& m)
    {
        send_raw(protocol::encode(m));
    }

    void Client::send_raw(std::string_view json_text)
    {
        if (impl_->transport == Transport::Framed)
        {
            impl_->write(protocol::frame(json_text));
        }
        else
        {
            impl_->mask = impl_->mask * 1664525u + 1013904223u;
            impl_->write(ws::encode_frame(ws::Opcode::Text, json_text, impl_->mask));
        }
    }

    std::optional<protocol::ServerMessage> Client::receive(std::chrono::milliseconds timeout)
    {
        const auto deadline = std::chrono::steady_clock::now() + timeout;
        while (impl_->inbox.empty() && !impl_->closed)
        {
            const auto left =
                std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
            if (left.count() <= 0 || !impl_->read_some(left))
                return std::nullopt;
        }
        if (impl_->inbox.empty())
            return std::nullopt;
        auto text = std::move(impl_->inbox.front());
        impl_->inbox.pop_front();
        return protocol::decode_server(text);
    }

    bool Client::closed() const noexcept
    {
        return impl_->closed && impl_->inbox.empty();
    }

} // namespace mrsls::net
