#include "mrsls/entitysim.hpp"

#include "mrsls/utf8.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

namespace mrsls
{

    namespace
    {
        // Visible spawn points are drawn by rejection; a lake that is almost
        // entirely off-screen falls back to any lake point.
        constexpr int kVisibleSpawnAttempts = 64;

        // Contact points are nudged this far inside the shore.
        constexpr double kShoreNudge = 1e-6;

        constexpr std::string_view kNoLotus = "no_lotus";

        double kinetic_energy(Vec2 v) { return 0.5 * dot(v, v); }

        template <class T>
        void hash_animation(StateHasher& h, const T& e)
        {
            h.add(e.anim.spawned_at);
            h.add(e.anim.duration);
            h.add(e.anim.phase);
        }
    } // namespace

    std::string hash_hex(std::uint64_t h)
    {
        char buf[17];
        std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
        return buf;
    }

    std::string_view kind_name(EntityKind k)
    {
        switch (k)
        {
        case EntityKind::Lotus:
            return "lotus";
        case EntityKind::Fish:
            return "fish";
        case EntityKind::Firework:
            return "firework";
        case EntityKind::Umbrella:
            return "umbrella";
        case EntityKind::Boat:
            return "boat";
        }
        return "unknown";
    }

    std::string_view color_name(LotusColor c)
    {
        switch (c)
        {
        case LotusColor::Pink:
            return "pink";
        case LotusColor::White:
            return "white";
        case LotusColor::Yellow:
            return "yellow";
        case LotusColor::Blue:
            return "blue";
        }
        return "pink";
    }

    std::optional<LotusColor> color_from_name(std::string_view name)
    {
        for (int i = 0; i < kLotusColorCount; ++i)
        {
            const auto c = static_cast<LotusColor>(i);
            if (color_name(c) == name)
                return c;
        }
        return std::nullopt;
    }

    std::string_view reason_name(DespawnReason r)
    {
        switch (r)
        {
        case DespawnReason::Expired:
            return "expired";
        case DespawnReason::LeftViewport:
            return "left_viewport";
        case DespawnReason::BrokenAway:
            return "broken_away";
        }
        return "expired";
    }

    Simulation::Simulation(SceneConfig scene, SimConfig config)
        : scene_(std::move(scene)), config_(config)
    {
        state_.rng = Rng(config.seed);
    }

    Tick Simulation::ticks_for(double seconds) const
    {
        return static_cast<Tick>(std::llround(seconds * config_.tick_rate));
    }

    const Lotus* Simulation::lotus_of(std::string_view owner) const
    {
        for (const auto& l : state_.lotuses)
        {
            if (l.owner == owner)
                return &l;
        }
        return nullptr;
    }

    Lotus* Simulation::find_lotus(std::string_view owner)
    {
        return const_cast<Lotus*>(std::as_const(*this).lotus_of(owner));
    }

    Vec2 Simulation::sample_visible_lake_point()
    {
        Vec2 p{};
        for (int i = 0; i < kVisibleSpawnAttempts; ++i)
        {
            p = sample_lake_point(state_.rng, scene_.lake);
            if (in_viewport(scene_.camera, scene_.viewport, on_water(p)))
                return p;
        }
        return p;
    }

    Animation Simulation::new_animation(double seconds) const
    {
        return Animation{state_.tick, std::max<Tick>(1, ticks_for(seconds)), 0.0};
    }

    void Simulation::advance(Animation& anim) const
    {
        const double elapsed = static_cast<double>(state_.tick - anim.spawned_at);
        anim.phase = std::min(1.0, elapsed / static_cast<double>(anim.duration));
    }

    bool Simulation::spawn_lotus(const ViewerId& owner, Effects& effects)
    {
        if (lotus_of(owner))
        {
            effects.push_back(fx::Notice{owner, "lotus_exists", "You already have a lotus on the lake."});
            return false;
        }
        const Vec2 at = sample_visible_lake_point();
        const auto color = static_cast<LotusColor>(state_.rng.below(kLotusColorCount));
        return spawn_lotus_at(owner, at, color, effects);
    }

    bool Simulation::spawn_lotus_at(const ViewerId& owner, Vec2 position, LotusColor color, Effects& effects)
    {
        if (lotus_of(owner))
        {
            effects.push_back(fx::Notice{owner, "lotus_exists", "You already have a lotus on the lake."});
            return false;
        }
        if (!contains(scene_.lake, position))
            return false;

        Lotus l;
        l.id = state_.next_id++;
        l.owner = owner;
        l.color = color;
        l.position = position;
        l.velocity = {scene_.physics.idle_drift_speed, 0.0};
        l.radius = scene_.physics.lotus_radius;
        state_.lotuses.push_back(std::move(l));
        effects.push_back(fx::Spawned{state_.lotuses.back().id, EntityKind::Lotus});
        effects.push_back(fx::Cue{"ripple", state_.lotuses.back().id});
        return true;
    }

    bool Simulation::dash_lotus(const ViewerId& owner, const std::optional<ViewerId>& target, Effects& effects)
    {
        Lotus* self = find_lotus(owner);
        if (!self)
        {
            effects.push_back(fx::Notice{owner, std::string(kNoLotus), "Release your lotus first."});
            return false;
        }

        Vec2 direction;
        if (target)
        {
            if (*target == owner)
            {
                effects.push_back(fx::Notice{owner, "self_target", "You cannot hit your own lotus."});
                return false;
            }
            const Lotus* other = lotus_of(*target);
            if (!other)
            {
                effects.push_back(fx::Notice{owner, "no_such_lotus", "No such lotus on the lake."});
                return false;
            }
            const Vec2 d = other->position - self->position;
            const double len = norm(d);
            if (len == 0.0)
            {
                effects.push_back(fx::Notice{owner, "self_target", "Target lotus is at your position."});
                return false;
            }
            direction = {d.x / len, d.y / len};
        }
        else
        {
            const double angle = 2.0 * std::numbers::pi * state_.rng.uniform01();
            direction = {std::cos(angle), std::sin(angle)};
        }

        self->velocity = direction * scene_.physics.dash_speed;
        self->mode = LotusMode::Dashing;
        self->dash_until = state_.tick + ticks_for(scene_.physics.dash_duration_s);
        return true;
    }

    bool Simulation::shine_lotus(const ViewerId& owner, Effects& effects)
    {
        Lotus* self = find_lotus(owner);
        if (!self)
        {
            effects.push_back(fx::Notice{owner, std::string(kNoLotus), "Release your lotus first."});
            return false;
        }
        self->shining_until = state_.tick + ticks_for(scene_.physics.shine_duration_s);
        return true;
    }

    EntityId Simulation::feed_fish(const std::string& trigger_name, Effects& effects)
    {
        Fish f;
        f.id = state_.next_id++;
        f.trigger_name = trigger_name;
        f.position = sample_visible_lake_point();
        f.anim = new_animation(scene_.physics.fish_duration_s);
        state_.fish.push_back(std::move(f));
        effects.push_back(fx::Spawned{state_.fish.back().id, EntityKind::Fish});
        effects.push_back(fx::Cue{"splash", state_.fish.back().id});
        return state_.fish.back().id;
    }

    EntityId Simulation::spawn_firework(const std::string& trigger_name, Effects& effects)
    {
        const Rect& sky = scene_.sky_band;
        Firework fw;
        fw.id = state_.next_id++;
        fw.trigger_name = trigger_name;
        fw.position.u = state_.rng.uniform(sky.left, sky.right);
        fw.position.v = state_.rng.uniform(sky.top, sky.bottom);
        fw.anim = new_animation(scene_.physics.firework_duration_s);
        state_.fireworks.push_back(std::move(fw));
        effects.push_back(fx::Spawned{state_.fireworks.back().id, EntityKind::Firework});
        effects.push_back(fx::Cue{"firework", state_.fireworks.back().id});
        return state_.fireworks.back().id;
    }

    EntityId Simulation::spawn_umbrella(const std::string& trigger_name, std::string_view story, Effects& effects)
    {
        const Rect& sky = scene_.sky_band;
        Umbrella u;
        u.id = state_.next_id++;
        u.trigger_name = trigger_name;
        u.story = utf8::truncate_with_ellipsis(story, scene_.physics.story_max_chars);
        u.start_u = scene_.viewport.left;
        u.end_u = scene_.viewport.right;
        u.position = {u.start_u, state_.rng.uniform(sky.top, sky.bottom)};
        u.anim = new_animation(scene_.physics.umbrella_duration_s);
        state_.umbrellas.push_back(std::move(u));
        effects.push_back(fx::Spawned{state_.umbrellas.back().id, EntityKind::Umbrella});
        return state_.umbrellas.back().id;
    }

    EntityId Simulation::run_boat(std::vector<ScoreEntry> top3, Effects& effects)
    {
        Boat b;
        b.id = state_.next_id++;
        b.top3 = std::move(top3);
        b.start = scene_.boat_path.start;
        b.end = scene_.boat_path.end;
        b.position = b.start;
        b.anim = new_animation(scene_.physics.boat_duration_s);
        state_.boats.push_back(std::move(b));
        effects.push_back(fx::Spawned{state_.boats.back().id, EntityKind::Boat});
        return state_.boats.back().id;
    }

    void Simulation::move_lotus(Lotus& lotus, double dt, Effects& effects)
    {
        const Vec2 from = lotus.position;
        const Vec2 to = from + lotus.velocity * dt;
        if (contains(scene_.lake, to))
        {
            lotus.position = to;
            return;
        }

        const auto crossing = scene_.lake.first_crossing(from, to);
        if (!crossing)
            return; // grazing a vertex; hold position this tick

        const Vec2 n = scene_.lake.inward_normal(crossing->edge);
        const double vn = dot(lotus.velocity, n);
        if (vn < 0.0)
            lotus.velocity = lotus.velocity - n * ((1.0 + scene_.physics.restitution) * vn);

        const Vec2 contact = from + (to - from) * crossing->t;
        const Vec2 inside = contact + n * kShoreNudge;
        if (contains(scene_.lake, inside))
            lotus.position = inside;
        effects.push_back(fx::ShoreBounce{lotus.id});
    }

    void Simulation::collide(Lotus& a, Lotus& b, Effects& effects)
    {
        const Vec2 d = b.position - a.position;
        const double dist = norm(d);
        const double reach = a.radius + b.radius;
        if (dist >= reach || dist == 0.0)
            return;
        const Vec2 n{d.x / dist, d.y / dist};
        const double closing = dot(a.velocity - b.velocity, n);
        if (closing <= 0.0)
            return;

        fx::Collision c;
        c.a = a.id;
        c.b = b.id;
        c.energy_before = kinetic_energy(a.velocity) + kinetic_energy(b.velocity);
        c.momentum_before = a.velocity + b.velocity;

        // Equal masses: each side takes half of the (1 + e) scaled impulse.
        const double impulse = 0.5 * (1.0 + scene_.physics.restitution) * closing;
        a.velocity = a.velocity - n * impulse;
        b.velocity = b.velocity + n * impulse;

        c.energy_after = kinetic_energy(a.velocity) + kinetic_energy(b.velocity);
        c.momentum_after = a.velocity + b.velocity;

        const Vec2 shift = n * (0.5 * (reach - dist));
        const Vec2 a_pos = a.position - shift;
        const Vec2 b_pos = b.position + shift;
        if (contains(scene_.lake, a_pos) && contains(scene_.lake, b_pos))
        {
            a.position = a_pos;
            b.position = b_pos;
        }

        // A struck lotus coasts for a dash duration instead of snapping back to drift.
        const Tick coast_until = state_.tick + ticks_for(scene_.physics.dash_duration_s);
        for (Lotus* l : {&a, &b})
        {
            l->dash_until = l->mode == LotusMode::Dashing ? std::max(l->dash_until, coast_until) : coast_until;
            l->mode = LotusMode::Dashing;
        }

        effects.push_back(c);
        effects.push_back(fx::Cue{"ripple", a.id});
    }

    void Simulation::sweep_boats(Effects& effects)
    {
        for (auto& boat : state_.boats)
        {
            const Vec2 from = boat.position;
            advance(boat.anim);
            boat.position = boat.start + (boat.end - boat.start) * boat.anim.phase;
            const Vec2 to = boat.position;

            std::erase_if(state_.lotuses, [&](const Lotus& l) {
                if (segment_distance(l.position, from, to) > scene_.physics.boat_half_width + l.radius)
                    return false;
                effects.push_back(fx::Despawned{l.id, EntityKind::Lotus, DespawnReason::BrokenAway});
                effects.push_back(fx::Notice{l.owner, "lotus_broken", "The boat broke your lotus away."});
                return true;
            });
        }
    }

    void Simulation::step(Effects& effects)
    {
        ++state_.tick;
        const Tick now = state_.tick;
        const double dt = 1.0 / config_.tick_rate;
        const auto& physics = scene_.physics;

        for (auto& l : state_.lotuses)
        {
            if (l.mode == LotusMode::Dashing && now >= l.dash_until)
                l.mode = LotusMode::Idle;
            if (l.mode == LotusMode::Idle)
                l.velocity = {physics.idle_drift_speed, 0.0};
            if (l.shining_until && now > *l.shining_until)
                l.shining_until.reset();
        }

        for (auto& l : state_.lotuses)
            move_lotus(l, dt, effects);

        for (std::size_t i = 0; i < state_.lotuses.size(); ++i)
        {
            for (std::size_t j = i + 1; j < state_.lotuses.size(); ++j)
                collide(state_.lotuses[i], state_.lotuses[j], effects);
        }

        sweep_boats(effects);

        for (auto& f : state_.fish)
            advance(f.anim);
        for (auto& f : state_.fireworks)
            advance(f.anim);
        for (auto& u : state_.umbrellas)
        {
            advance(u.anim);
            u.position.u = u.start_u + (u.end_u - u.start_u) * u.anim.phase;
        }

        const auto remove_expired = [&](auto& entities, EntityKind kind) {
            std::erase_if(entities, [&](const auto& e) {
                if (e.anim.phase < 1.0)
                    return false;
                effects.push_back(fx::Despawned{e.id, kind, DespawnReason::Expired});
                return true;
            });
        };
        remove_expired(state_.fish, EntityKind::Fish);
        remove_expired(state_.fireworks, EntityKind::Firework);
        remove_expired(state_.umbrellas, EntityKind::Umbrella);
        remove_expired(state_.boats, EntityKind::Boat);

        std::erase_if(state_.lotuses, [&](const Lotus& l) {
            if (in_viewport(scene_.camera, scene_.viewport, on_water(l.position)))
                return false;
            effects.push_back(fx::Despawned{l.id, EntityKind::Lotus, DespawnReason::LeftViewport});
            return true;
        });
    }

    void Simulation::hash_into(StateHasher& h) const
    {
        h.add(state_.tick);
        h.add(state_.next_id);
        h.add(state_.rng.seed());
        h.add(state_.rng.draws());

        h.add(static_cast<std::uint64_t>(state_.lotuses.size()));
        for (const auto& l : state_.lotuses)
        {
            h.add(l.id);
            h.add(l.owner);
            h.add(static_cast<int>(l.color));
            h.add(l.position.x);
            h.add(l.position.y);
            h.add(l.velocity.x);
            h.add(l.velocity.y);
            h.add(static_cast<int>(l.mode));
            h.add(l.dash_until);
            h.add(l.shining_until.has_value());
            h.add(l.shining_until.value_or(0));
            h.add(l.radius);
        }
        h.add(static_cast<std::uint64_t>(state_.fish.size()));
        for (const auto& f : state_.fish)
        {
            h.add(f.id);
            h.add(f.trigger_name);
            h.add(f.position.x);
            h.add(f.position.y);
            hash_animation(h, f);
        }
        h.add(static_cast<std::uint64_t>(state_.fireworks.size()));
        for (const auto& f : state_.fireworks)
        {
            h.add(f.id);
            h.add(f.trigger_name);
            h.add(f.position.u);
            h.add(f.position.v);
            hash_animation(h, f);
        }
        h.add(static_cast<std::uint64_t>(state_.umbrellas.size()));
        for (const auto& u : state_.umbrellas)
        {
            h.add(u.id);
            h.add(u.trigger_name);
            h.add(u.story);
            h.add(u.position.u);
            h.add(u.position.v);
            hash_animation(h, u);
        }
        h.add(static_cast<std::uint64_t>(state_.boats.size()));
        for (const auto& b : state_.boats)
        {
            h.add(b.id);
            for (const auto& s : b.top3)
            {
                h.add(s.display_name);
                h.add(s.score);
            }
            h.add(b.position.x);
            h.add(b.position.y);
            hash_animation(h, b);
        }
    }

} // namespace mrsls
