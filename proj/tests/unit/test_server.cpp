#include "mrsls/server.hpp"

#include "../support.hpp"

#include <boost/asio.hpp>
#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <thread>

using namespace mrsls;
using namespace mrsls::net;
using namespace std::chrono_literals;
using mrsls::testing::make_session;

namespace
{
    std::unique_ptr<Server> make_server(ServerOptions options = {}, SessionConfig cfg = {})
    {
        options.port = 0;
        ReplayHeader header;
        header.config = cfg;
        auto server = std::make_unique<Server>(make_session(cfg), header, options);
        server->start();
        return server;
    }

    ServerOptions unlimited()
    {
        ServerOptions o;
        o.rate_per_s = 1e9;
        o.rate_burst = 1e9;
        return o;
    }

    protocol::Welcome greet(Client& c, const std::string& name, bool snapshots = false)
    {
        c.send(protocol::Hello{name, snapshots});
        auto w = c.receive_until<protocol::Welcome>(5s);
        REQUIRE(w);
        return *w;
    }
} // namespace

TEST_CASE("hello must come first")
{
    auto server = make_server();
    Client c("127.0.0.1", server->port());
    c.send(protocol::Comment{"release lotus"});
    const auto e = c.receive_until<protocol::Error>(5s);
    REQUIRE(e);
    CHECK(e->code == "hello_required");
    CHECK_FALSE(c.receive(2s));
    CHECK(c.closed());
}

TEST_CASE("welcome, acks, pong and error codes")
{
    auto server = make_server();
    Client c("127.0.0.1", server->port());
    const auto w = greet(c, "  Ann  ");
    CHECK(w.session_id == server->session_id());
    CHECK(w.tick_rate == 30);
    CHECK(w.image_width == 1920);
    CHECK(w.image_height == 1080);

    c.send(protocol::Comment{"release lotus"});
    const auto ack = c.receive_until<protocol::Ack>(5s);
    REQUIRE(ack);
    CHECK(ack->seq == 1);

    c.send(protocol::Ping{});
    CHECK(c.receive_until<protocol::Pong>(5s));

    c.send(protocol::Hello{"Ann", false});
    auto e = c.receive_until<protocol::Error>(5s);
    REQUIRE(e);
    CHECK(e->code == "already_greeted");

    c.send_raw(R"({"v":1,"type":"juggle"})");
    e = c.receive_until<protocol::Error>(5s);
    REQUIRE(e);
    CHECK(e->code == "bad_message");
    CHECK_FALSE(c.closed());
}

TEST_CASE("comment length limit")
{
    auto server = make_server(unlimited());
    Client c("127.0.0.1", server->port());
    greet(c, "Ann");
    std::string at_limit;
    for (int i = 0; i < 500; ++i)
        at_limit += "莲";
    c.send(protocol::Comment{at_limit});
    CHECK(c.receive_until<protocol::Ack>(5s));
    c.send(protocol::Comment{at_limit + "x"});
    const auto n = c.receive_until<protocol::NoticeRecord>(5s);
    REQUIRE(n);
    CHECK(n->code == "comment_too_long");
}

TEST_CASE("rate limiting")
{
    auto server = make_server();
    Client c("127.0.0.1", server->port());
    greet(c, "Ann");
    for (int i = 0; i < 3; ++i)
        c.send(protocol::Comment{"hello"});
    CHECK(c.receive_until<protocol::Ack>(5s));
    CHECK(c.receive_until<protocol::Ack>(5s));
    const auto n = c.receive_until<protocol::NoticeRecord>(5s);
    REQUIRE(n);
    CHECK(n->code == "rate_limited");

    RateLimiter r(2.0, 2.0);
    CHECK(r.allow("a", 0));
    CHECK(r.allow("a", 0));
    CHECK_FALSE(r.allow("a", 0));
    CHECK(r.allow("b", 0));
    CHECK(r.allow("a", 500));
    CHECK_FALSE(r.allow("a", 500));
}

TEST_CASE("two clients get gap-free sequence numbers")
{
    const auto log = std::filesystem::temp_directory_path() / "mrsls-test-interleave.log";
    auto options = unlimited();
    options.log_path = log.string();
    auto server = make_server(options);
    constexpr int kEach = 100;
    std::vector<std::uint64_t> seqs[2];
    auto run = [&](int who) {
        Client c("127.0.0.1", server->port());
        greet(c, who ? "Bob" : "Ann");
        for (int i = 0; i < kEach; ++i)
            c.send(protocol::Comment{"msg " + std::to_string(i)});
        while (seqs[who].size() < kEach)
        {
            auto a = c.receive_until<protocol::Ack>(5s);
            if (!a)
                break;
            seqs[who].push_back(a->seq);
        }
    };
    std::thread t0(run, 0), t1(run, 1);
    t0.join();
    t1.join();
    REQUIRE(seqs[0].size() == kEach);
    REQUIRE(seqs[1].size() == kEach);
    CHECK(std::is_sorted(seqs[0].begin(), seqs[0].end()));
    CHECK(std::is_sorted(seqs[1].begin(), seqs[1].end()));
    std::vector<std::uint64_t> all(seqs[0]);
    all.insert(all.end(), seqs[1].begin(), seqs[1].end());
    std::sort(all.begin(), all.end());
    for (std::size_t i = 0; i < all.size(); ++i)
        CHECK(all[i] == i + 1);

    std::this_thread::sleep_for(200ms);
    server->stop();
    server->wait();
    const auto replay = load_replay(log.string());
    REQUIRE(replay.events.size() == 2 * kEach);
    for (std::size_t i = 0; i < replay.events.size(); ++i)
        CHECK(replay.events[i].event.seq == i + 1);
    REQUIRE(replay.end);
    CHECK(replay.end->hash == server->stats().final_hash);
    std::filesystem::remove(log);
}

TEST_CASE("websocket clients see their lotus in consecutive snapshots")
{
    auto server = make_server();
    Client c("127.0.0.1", server->port(), Transport::WebSocket);
    greet(c, "Ann", true);
    c.send(protocol::Comment{"release lotus"});
    REQUIRE(c.receive_until<protocol::Ack>(5s));

    std::optional<std::uint64_t> last;
    bool seen = false;
    for (int i = 0; i < 60; ++i)
    {
        const auto s = c.receive_until<protocol::SnapshotMessage>(5s);
        REQUIRE(s);
        if (last)
            CHECK(s->seq == *last + 1);
        last = s->seq;
        CHECK(s->session_id == server->session_id());
        for (const auto& e : s->entities)
            seen = seen || (e.kind == EntityKind::Lotus && e.owner == "Ann" && e.color);
    }
    CHECK(seen);
}

TEST_CASE("bots that opt out receive notices instead of snapshots")
{
    auto server = make_server();
    Client c("127.0.0.1", server->port());
    greet(c, "bot", false);
    c.send(protocol::Comment{"shine my lotus"});
    REQUIRE(c.receive_until<protocol::Ack>(5s));
    const auto n = c.receive_until<protocol::NoticeRecord>(5s);
    REQUIRE(n);
    CHECK(n->code == "no_lotus");
    for (int i = 0; i < 5; ++i)
    {
        const auto m = c.receive(100ms);
        if (m)
            CHECK_FALSE(std::holds_alternative<protocol::SnapshotMessage>(*m));
    }
}

TEST_CASE("a client that stops reading is disconnected")
{
    ServerOptions options;
    options.speed = 200.0;
    options.max_backlog = 8;
    auto server = make_server(options);

    boost::asio::io_context io;
    boost::asio::ip::tcp::socket sock(io);
    sock.open(boost::asio::ip::tcp::v4());
    sock.set_option(boost::asio::socket_base::receive_buffer_size(4096));
    sock.connect({boost::asio::ip::make_address("127.0.0.1"), server->port()});
    boost::asio::write(sock, boost::asio::buffer(protocol::frame(protocol::encode(protocol::Hello{"sloth", true}))));

    const auto deadline = std::chrono::steady_clock::now() + 60s;
    while (server->stats().dropped_slow == 0 && std::chrono::steady_clock::now() < deadline)
        std::this_thread::sleep_for(50ms);
    CHECK(server->stats().dropped_slow == 1);
}

TEST_CASE("duration bounded run writes hashes")
{
    const auto hashes = std::filesystem::temp_directory_path() / "mrsls-test-hashes.txt";
    ServerOptions options;
    options.speed = 50.0;
    options.duration_s = 10.0;
    options.hash_path = hashes.string();
    options.keep_hashes = true;
    auto server = make_server(options);
    server->wait();
    const auto stats = server->stats();
    CHECK(stats.ticks == 300);
    CHECK(stats.tick_hashes.size() == 300);
    CHECK(stats.tick_hashes.back() == stats.final_hash);
    CHECK(std::filesystem::exists(hashes));
    std::filesystem::remove(hashes);
}
