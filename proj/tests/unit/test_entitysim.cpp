#include "mrsls/entitysim.hpp"

#include "../support.hpp"

#include <doctest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <set>

using namespace mrsls;
using mrsls::testing::demo_scene;

namespace
{
    template <class T>
    int count_of(const Effects& effects)
    {
        return static_cast<int>(std::count_if(effects.begin(), effects.end(),
                                              [](const Effect& e) { return std::holds_alternative<T>(e); }));
    }

    bool has_notice(const Effects& effects, std::string_view code)
    {
        return std::any_of(effects.begin(), effects.end(), [&](const Effect& e) {
            const auto* n = std::get_if<fx::Notice>(&e);
            return n && n->code == code;
        });
    }

    SceneConfig still_scene()
    {
        auto s = demo_scene();
        s.physics.idle_drift_speed = 0.0;
        return s;
    }
} // namespace

TEST_CASE("one lotus per owner")
{
    Simulation sim(demo_scene(), {30, 1});
    Effects fx;
    CHECK(sim.spawn_lotus("ann", fx));
    CHECK_FALSE(sim.spawn_lotus("ann", fx));
    CHECK(has_notice(fx, "lotus_exists"));
    CHECK(sim.state().lotuses.size() == 1);
    const auto& l = sim.state().lotuses.front();
    CHECK(contains(sim.scene().lake, l.position));
    CHECK(l.mode == LotusMode::Idle);
}

TEST_CASE("shine lasts sixty ticks at 30 Hz")
{
    Simulation sim(demo_scene(), {30, 1});
    Effects fx;
    REQUIRE(sim.spawn_lotus_at("ann", {0, 12}, LotusColor::Pink, fx));
    REQUIRE(sim.shine_lotus("ann", fx));
    CHECK(*sim.lotus_of("ann")->shining_until == 60);
    for (int t = 1; t <= 60; ++t)
    {
        sim.step(fx);
        REQUIRE(sim.lotus_of("ann"));
        CHECK(sim.lotus_of("ann")->shining_at(sim.now()));
    }
    sim.step(fx);
    CHECK(sim.now() == 61);
    CHECK_FALSE(sim.lotus_of("ann")->shining_at(sim.now()));
    CHECK_FALSE(sim.lotus_of("ann")->shining_until);
}

TEST_CASE("a second shine extends rather than stacks")
{
    Simulation sim(demo_scene(), {30, 1});
    Effects fx;
    REQUIRE(sim.spawn_lotus_at("ann", {0, 12}, LotusColor::Pink, fx));
    sim.shine_lotus("ann", fx);
    for (int i = 0; i < 10; ++i)
        sim.step(fx);
    sim.shine_lotus("ann", fx);
    CHECK(*sim.lotus_of("ann")->shining_until == 70);
}

TEST_CASE("commands without a lotus are refused")
{
    Simulation sim(demo_scene(), {30, 1});
    Effects fx;
    CHECK_FALSE(sim.shine_lotus("ghost", fx));
    CHECK_FALSE(sim.dash_lotus("ghost", std::nullopt, fx));
    CHECK(count_of<fx::Notice>(fx) == 2);
    REQUIRE(sim.spawn_lotus_at("ann", {0, 12}, LotusColor::Pink, fx));
    CHECK_FALSE(sim.dash_lotus("ann", ViewerId("ann"), fx));
    CHECK(has_notice(fx, "self_target"));
    CHECK_FALSE(sim.dash_lotus("ann", ViewerId("nobody"), fx));
    CHECK(has_notice(fx, "no_such_lotus"));
}

TEST_CASE("lotus colors are uniform over the four")
{
    std::array<int, kLotusColorCount> counts{};
    constexpr int kSpawns = 4000;
    Simulation sim(demo_scene(), {30, 42});
    Effects fx;
    for (int i = 0; i < kSpawns; ++i)
    {
        const auto owner = "v" + std::to_string(i);
        REQUIRE(sim.spawn_lotus(owner, fx));
        ++counts[static_cast<int>(sim.lotus_of(owner)->color)];
    }
    for (int c : counts)
    {
        const double share = static_cast<double>(c) / kSpawns;
        CHECK(share >= 0.20);
        CHECK(share <= 0.30);
    }
    CHECK(color_from_name("pink") == LotusColor::Pink);
    CHECK(color_name(LotusColor::Blue) == "blue");
    CHECK_FALSE(color_from_name("green"));
}

TEST_CASE("targeted dash due east")
{
    Simulation sim(still_scene(), {30, 1});
    Effects fx;
    REQUIRE(sim.spawn_lotus_at("ann", {-2, 20}, LotusColor::Pink, fx));
    REQUIRE(sim.spawn_lotus_at("bob", {3, 20}, LotusColor::White, fx));
    REQUIRE(sim.dash_lotus("ann", ViewerId("bob"), fx));
    const auto* a = sim.lotus_of("ann");
    CHECK(a->velocity.x == 1.5);
    CHECK(a->velocity.y == 0.0);
    CHECK(a->mode == LotusMode::Dashing);
    CHECK(a->dash_until == 60);
}

TEST_CASE("random dashes are reproducible")
{
    auto run = [] {
        Simulation sim(demo_scene(), {30, 9});
        Effects fx;
        sim.spawn_lotus_at("ann", {0, 20}, LotusColor::Pink, fx);
        sim.dash_lotus("ann", std::nullopt, fx);
        return sim.lotus_of("ann")->velocity;
    };
    const Vec2 v = run();
    CHECK(v == run());
    CHECK(norm(v) == doctest::Approx(1.5));
}

TEST_CASE("equal mass head-on impact exchanges velocities")
{
    auto scene = still_scene();
    scene.physics.restitution = 1.0;
    const std::array<std::pair<Vec2, Vec2>, 3> setups{{
        {{-2, 20}, {2, 20}},
        {{-1, 15}, {1.5, 18}},
        {{4, 30}, {1, 27}},
    }};
    for (const auto& [pa, pb] : setups)
    {
        Simulation sim(scene, {30, 1});
        Effects fx;
        REQUIRE(sim.spawn_lotus_at("a", pa, LotusColor::Pink, fx));
        REQUIRE(sim.spawn_lotus_at("b", pb, LotusColor::Blue, fx));
        REQUIRE(sim.dash_lotus("a", ViewerId("b"), fx));
        REQUIRE(sim.dash_lotus("b", ViewerId("a"), fx));
        const Vec2 va = sim.lotus_of("a")->velocity;
        const Vec2 vb = sim.lotus_of("b")->velocity;

        fx.clear();
        for (int i = 0; i < 200 && count_of<fx::Collision>(fx) == 0; ++i)
            sim.step(fx);
        REQUIRE(count_of<fx::Collision>(fx) == 1);

        const Vec2 va2 = sim.lotus_of("a")->velocity;
        const Vec2 vb2 = sim.lotus_of("b")->velocity;
        CHECK(norm(va2 - vb) / norm(vb) < 1e-9);
        CHECK(norm(vb2 - va) / norm(va) < 1e-9);

        for (const auto& e : fx)
        {
            if (const auto* c = std::get_if<fx::Collision>(&e))
            {
                CHECK(norm(c->momentum_after - c->momentum_before) <= 1e-9 * std::max(1.0, norm(va) + norm(vb)));
                CHECK(c->energy_after == doctest::Approx(c->energy_before).epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("inelastic impacts never gain energy")
{
    auto scene = still_scene();
    Simulation sim(scene, {30, 3});
    Effects fx;
    REQUIRE(sim.spawn_lotus_at("a", {-2, 20}, LotusColor::Pink, fx));
    REQUIRE(sim.spawn_lotus_at("b", {1, 20.3}, LotusColor::Blue, fx));
    sim.dash_lotus("a", ViewerId("b"), fx);
    fx.clear();
    for (int i = 0; i < 120; ++i)
        sim.step(fx);
    REQUIRE(count_of<fx::Collision>(fx) >= 1);
    for (const auto& e : fx)
    {
        if (const auto* c = std::get_if<fx::Collision>(&e))
        {
            CHECK(c->energy_after < c->energy_before);
            CHECK(norm(c->momentum_after - c->momentum_before) < 1e-12);
        }
    }
}

TEST_CASE("idle lotus drifts right and is destroyed when it leaves the view")
{
    Simulation sim(demo_scene(), {30, 1});
    Effects fx;
    REQUIRE(sim.spawn_lotus_at("ann", {5, 10}, LotusColor::Yellow, fx));
    const double x0 = sim.lotus_of("ann")->position.x;
    sim.step(fx);
    CHECK(sim.lotus_of("ann")->position.x > x0);
    CHECK(sim.lotus_of("ann")->position.y == 10.0);

    bool gone = false;
    for (int i = 0; i < 30 * 600 && !gone; ++i)
    {
        fx.clear();
        sim.step(fx);
        if (!sim.lotus_of("ann"))
        {
            gone = true;
            CHECK(count_of<fx::Despawned>(fx) == 1);
            const auto& d = std::get<fx::Despawned>(fx.back());
            CHECK(d.reason == DespawnReason::LeftViewport);
        }
        else
        {
            const auto& s = sim.scene();
            CHECK(in_viewport(s.camera, s.viewport, on_water(sim.lotus_of("ann")->position)));
        }
    }
    CHECK(gone);
}

TEST_CASE("shore contact reflects and keeps the lotus on the lake")
{
    auto scene = still_scene();
    scene.lake = Polygon({{0, 8}, {4, 8}, {4, 12}, {0, 12}});
    for (std::uint64_t seed = 1; seed <= 20; ++seed)
    {
        Simulation sim(scene, {30, seed});
        Effects fx;
        REQUIRE(sim.spawn_lotus_at("ann", {2, 10}, LotusColor::Pink, fx));
        REQUIRE(sim.dash_lotus("ann", std::nullopt, fx));
        const double speed = norm(sim.lotus_of("ann")->velocity);
        fx.clear();
        for (int i = 0; i < 59; ++i)
        {
            sim.step(fx);
            REQUIRE(contains(sim.scene().lake, sim.lotus_of("ann")->position));
        }
        REQUIRE(count_of<fx::ShoreBounce>(fx) >= 1);
        // Restitution 0.9 only scales the normal component, at most twice near a corner.
        const double after = norm(sim.lotus_of("ann")->velocity);
        CHECK(after <= speed);
        CHECK(after >= 0.81 * speed - 1e-12);
    }
}

TEST_CASE("fish and fireworks")
{
    Simulation sim(demo_scene(), {30, 4});
    Effects fx;
    const auto f1 = sim.feed_fish("Ann", fx);
    const auto f2 = sim.feed_fish("Bob", fx);
    CHECK(f1 != f2);
    REQUIRE(sim.state().fish.size() == 2);
    CHECK(sim.state().fish[0].trigger_name == "Ann");
    CHECK(sim.state().fish[1].trigger_name == "Bob");
    for (const auto& f : sim.state().fish)
        CHECK(contains(sim.scene().lake, f.position));
    CHECK(count_of<fx::Cue>(fx) == 2);

    sim.spawn_firework("Ann", fx);
    const auto& fw = sim.state().fireworks.front();
    CHECK(sim.scene().sky_band.contains(fw.position));
    CHECK(fw.trigger_name == "Ann");

    // Fish last 3 s = 90 ticks; fireworks 2.5 s = 75 ticks.
    for (int i = 0; i < 75; ++i)
        sim.step(fx);
    CHECK(sim.state().fireworks.empty());
    CHECK(sim.state().fish.size() == 2);
    for (int i = 0; i < 15; ++i)
        sim.step(fx);
    CHECK(sim.state().fish.empty());
}

TEST_CASE("umbrella story truncation at the limit")
{
    Simulation sim(demo_scene(), {30, 4});
    Effects fx;
    const std::string exact = [] {
        std::string s;
        for (int i = 0; i < 140; ++i)
            s += "莲";
        return s;
    }();
    sim.spawn_umbrella("Ann", exact, fx);
    CHECK(sim.state().umbrellas.back().story == exact);

    sim.spawn_umbrella("Ann", exact + "湖", fx);
    const auto& story = sim.state().umbrellas.back().story;
    CHECK(utf8::length(story) == 140);
    CHECK(story.substr(story.size() - 3) == "…");

    std::string longer(200, 'x');
    sim.spawn_umbrella("Ann", longer, fx);
    CHECK(utf8::length(sim.state().umbrellas.back().story) == 140);

    // It crosses from the left edge to the right edge of the view.
    const auto& u = sim.state().umbrellas.front();
    CHECK(u.position.u == sim.scene().viewport.left);
    for (int i = 0; i < 120; ++i)
        sim.step(fx);
    CHECK(sim.state().umbrellas.front().position.u == doctest::Approx(sim.scene().viewport.width() / 2));
}

TEST_CASE("boat breaks lotuses on its course")
{
    Simulation sim(still_scene(), {30, 1});
    Effects fx;
    const auto& path = sim.scene().boat_path;
    const Vec2 mid = path.start + (path.end - path.start) * 0.5;
    REQUIRE(sim.spawn_lotus_at("on", mid, LotusColor::Pink, fx));
    // Perpendicular offset beyond half width + radius.
    const Vec2 dir = path.end - path.start;
    const Vec2 perp = Vec2{-dir.y, dir.x} * (1.0 / norm(dir));
    REQUIRE(sim.spawn_lotus_at("off", mid + perp * 3.0, LotusColor::Pink, fx));
    sim.run_boat({{"Ann", 3}}, fx);
    fx.clear();
    for (int i = 0; i < 600; ++i)
        sim.step(fx);
    CHECK_FALSE(sim.lotus_of("on"));
    CHECK(sim.lotus_of("off"));
    CHECK(has_notice(fx, "lotus_broken"));
    CHECK(sim.state().boats.empty());
}

TEST_CASE("entity ids are never reused")
{
    Simulation sim(demo_scene(), {30, 8});
    Effects fx;
    std::set<EntityId> seen;
    for (int i = 0; i < 50; ++i)
    {
        const auto id = sim.feed_fish("x", fx);
        CHECK(seen.insert(id).second);
        for (int k = 0; k < 20; ++k)
            sim.step(fx);
    }
}
