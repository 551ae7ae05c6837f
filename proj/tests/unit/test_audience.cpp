#include "mrsls/audience.hpp"
#include "mrsls/server.hpp"

#include "../support.hpp"

#include <doctest.h>

#include <cstdlib>
#include <sys/wait.h>

using namespace mrsls;
using namespace mrsls::testing;

TEST_CASE("scripts are a pure function of their parameters")
{
    ScriptParams p;
    p.bots = 12;
    p.duration_s = 600;
    const auto a = make_script(p, demo_corpus());
    const auto b = make_script(p, demo_corpus());
    CHECK(script_digest(a) == script_digest(b));
    p.seed = 8;
    CHECK(script_digest(make_script(p, demo_corpus())) != script_digest(a));

    REQUIRE(a.bots.size() == 12);
    CHECK(a.bots.front().name == "bot01");
    for (const auto& bot : a.bots)
    {
        for (std::size_t i = 0; i < bot.actions.size(); ++i)
        {
            CHECK(bot.actions[i].at_s <= p.duration_s - 1.0);
            if (i > 0)
                CHECK(bot.actions[i].at_s - bot.actions[i - 1].at_s >= kMinGapSeconds);
        }
    }
}

TEST_CASE("a short scripted audience against a live server")
{
    ScriptParams p;
    p.bots = 5;
    p.duration_s = 90;
    p.rounds = {{5.0, {"花"}}};
    p.round_seconds = 60;
    p.threshold = 10;
    const auto script = make_script(p, demo_corpus());

    SessionConfig cfg;
    cfg.rounds = p.rounds;
    cfg.round_seconds = p.round_seconds;
    cfg.threshold = p.threshold;
    net::ServerOptions options;
    options.port = 0;
    options.speed = 20.0;
    options.duration_s = p.duration_s + 5;
    ReplayHeader header;
    header.config = cfg;
    net::Server server(make_session(cfg), header, options);
    server.start();

    AudienceOptions ao;
    ao.port = server.port();
    ao.speed = options.speed;
    ao.wait_for_close = true;
    ao.linger_s = 5;
    const auto report = run_audience(script, ao);
    server.wait();

    CHECK(report.connected == 5);
    CHECK(report.events_sent > 20);
    CHECK(report.acks == report.events_sent);
    CHECK(report.error_codes.empty());
    REQUIRE(report.game_outcomes.size() == 1);
    CHECK(report.game_outcomes[0] == "game_won");
    CHECK(server.stats().events == report.acks);
    CHECK(to_json(report).find("\"events_per_sec\"") != std::string::npos);
}

TEST_CASE("command line rejects a missing corpus before binding")
{
    const std::string cmd = std::string(MRSLS_EXE) + " serve --scene " + data_path("demo_scene.json") +
                            " --corpus /nonexistent/poems.tsv --port 0 > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    REQUIRE(WIFEXITED(status));
    CHECK(WEXITSTATUS(status) != 0);
}
