#include "mrsls/session.hpp"

#include "../support.hpp"

#include <doctest.h>

#include <algorithm>

using namespace mrsls;
using namespace mrsls::testing;

namespace
{
    bool notice_for(const Effects& fx, std::string_view code)
    {
        return std::any_of(fx.begin(), fx.end(), [&](const Effect& e) {
            const auto* n = std::get_if<fx::Notice>(&e);
            return n && n->code == code;
        });
    }
} // namespace

TEST_CASE("round specs")
{
    const auto r = parse_round("480:杭州|江南");
    REQUIRE(r);
    CHECK(r->at_s == 480.0);
    CHECK(r->topics == std::vector<std::string>{"杭州", "江南"});
    CHECK(format_round(*r) == "480:杭州|江南");
    CHECK_FALSE(parse_round("花"));
    CHECK_FALSE(parse_round("x:花"));
    CHECK_FALSE(parse_round("10:"));
    CHECK_FALSE(parse_round("-1:花"));
}

TEST_CASE("events must arrive in seq order")
{
    auto s = make_session();
    s.apply(comment(2, "a", "hi"));
    CHECK_THROWS(s.apply(comment(2, "a", "hi")));
    CHECK_THROWS(s.apply(comment(1, "a", "hi")));
}

TEST_CASE("lotus commands through a session")
{
    auto s = make_session();
    s.apply(comment(1, "u1", "release lotus"));
    s.apply(comment(2, "u2", "放莲花"));
    s.apply(comment(3, "u1", "shine my lotus"));
    s.apply(comment(4, "u1", "hit u2 with my lotus"));
    s.apply(comment(5, "u3", "dash my lotus"));
    s.apply(comment(6, "u1", "hit nobody with my lotus"));
    s.apply(comment(7, "u3", "feed fish"));
    const auto fx = s.take_effects();
    CHECK(s.sim().state().lotuses.size() == 2);
    CHECK(s.sim().lotus_of("u1")->mode == LotusMode::Dashing);
    CHECK(s.sim().lotus_of("u1")->shining_until);
    CHECK(notice_for(fx, "no_lotus"));
    CHECK(notice_for(fx, "no_such_lotus"));
    CHECK(s.sim().state().fish.size() == 1);
    CHECK(s.usage().at("release_lotus") == 2);
}

TEST_CASE("hit resolves display names, most recent speaker wins")
{
    auto s = make_session();
    s.apply(ChatEvent{"v1", "Lin", CommentEvent{"release lotus"}, 1, 0});
    s.apply(ChatEvent{"v2", "Lin", CommentEvent{"release lotus"}, 2, 0});
    s.apply(ChatEvent{"v3", "Zhou", CommentEvent{"release lotus"}, 3, 0});
    CHECK(s.resolve_lotus_owner("Lin", "v3") == ViewerId("v2"));
    s.apply(ChatEvent{"v1", "Lin", CommentEvent{"hello"}, 4, 0});
    CHECK(s.resolve_lotus_owner("Lin", "v3") == ViewerId("v1"));
    CHECK(s.resolve_lotus_owner("Lin", "v1") == ViewerId("v2"));
    CHECK(s.resolve_lotus_owner("Zhou", "v3") == ViewerId("v3"));
    CHECK_FALSE(s.resolve_lotus_owner("Wang", "v3"));
}

TEST_CASE("scheduled round runs, finishes early and triggers the boat")
{
    SessionConfig cfg;
    cfg.threshold = 3;
    cfg.rounds = {{1.0, {"花"}}};
    auto s = make_session(cfg);
    for (int i = 0; i < 30; ++i)
        s.advance();
    CHECK(s.game().state().phase == GamePhase::Idle);
    s.advance();
    CHECK(s.game().state().phase == GamePhase::Running);
    CHECK(s.remaining_seconds() == doctest::Approx(8999.0 / 30.0));

    std::vector<std::string> flowers;
    for (const auto& e : s.corpus().entries())
    {
        if (e.verse.find("花") != std::string::npos)
            flowers.push_back(e.verse);
    }
    for (int i = 0; i < 4; ++i)
        s.apply(comment(static_cast<std::uint64_t>(i + 1), "p" + std::to_string(i % 2), flowers[i]));
    CHECK(s.game().state().phase == GamePhase::Won);
    CHECK(s.sim().state().boats.size() == 1);
    CHECK(s.sim().state().boats[0].top3.size() == 2);
    CHECK(s.verse_stats().accepted == 4);

    // Result display, then back to idle.
    for (int i = 0; i < 301; ++i)
        s.advance();
    CHECK(s.game().state().phase == GamePhase::Idle);
}

TEST_CASE("identical inputs give identical hashes")
{
    auto run = [](std::uint64_t seed) {
        SessionConfig cfg;
        cfg.seed = seed;
        auto s = make_session(cfg);
        std::vector<std::uint64_t> hashes;
        for (int t = 0; t < 300; ++t)
        {
            if (t % 10 == 0)
            {
                const auto seq = static_cast<std::uint64_t>(t / 10 + 1);
                s.apply(comment(seq, "v" + std::to_string(t % 7), t % 20 ? "release lotus" : "dash my lotus"));
            }
            s.advance();
            hashes.push_back(s.state_hash());
        }
        return hashes;
    };
    CHECK(run(5) == run(5));
    CHECK(run(5) != run(6));
}
