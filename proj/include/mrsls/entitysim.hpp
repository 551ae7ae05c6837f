#pragma once

#include "mrsls/chatparse.hpp"
#include "mrsls/hash.hpp"
#include "mrsls/rng.hpp"
#include "mrsls/scenegeo.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace mrsls
{

    using EntityId = std::uint64_t;

    enum class EntityKind : std::uint8_t
    {
        Lotus,
        Fish,
        Firework,
        Umbrella,
        Boat,
    };
    std::string_view kind_name(EntityKind k);

    enum class LotusColor : std::uint8_t
    {
        Pink,
        White,
        Yellow,
        Blue,
    };
    inline constexpr int kLotusColorCount = 4;
    std::string_view color_name(LotusColor c);
    std::optional<LotusColor> color_from_name(std::string_view name);

    enum class LotusMode : std::uint8_t
    {
        Idle,
        Dashing,
    };

    struct Lotus
    {
        EntityId id = 0;
        ViewerId owner;
        LotusColor color = LotusColor::Pink;
        Vec2 position;
        Vec2 velocity;
        LotusMode mode = LotusMode::Idle;
        Tick dash_until = 0; // meaningful while Dashing
        std::optional<Tick> shining_until;
        double radius = 0.0;

        bool shining_at(Tick now) const { return shining_until && now <= *shining_until; }
    };

    // Lifecycle shared by the one-shot animations.
    struct Animation
    {
        Tick spawned_at = 0;
        Tick duration = 1;
        double phase = 0.0;
    };

    struct Fish
    {
        EntityId id = 0;
        std::string trigger_name;
        Vec2 position;
        Animation anim;
    };

    struct Firework
    {
        EntityId id = 0;
        std::string trigger_name;
        ImagePoint position;
        Animation anim;
    };

    struct Umbrella
    {
        EntityId id = 0;
        std::string trigger_name;
        std::string story;
        double start_u = 0.0;
        double end_u = 0.0;
        ImagePoint position;
        Animation anim;
    };

    struct ScoreEntry
    {
        std::string display_name;
        int score = 0;
        bool operator==(const ScoreEntry&) const = default;
    };

    struct Boat
    {
        EntityId id = 0;
        std::vector<ScoreEntry> top3;
        Vec2 start;
        Vec2 end;
        Vec2 position;
        Animation anim;
    };

    enum class DespawnReason : std::uint8_t
    {
        Expired,
        LeftViewport,
        BrokenAway,
    };
    std::string_view reason_name(DespawnReason r);

    namespace fx
    {
        // User-visible message; no target means everyone.
        struct Notice
        {
            std::optional<ViewerId> target;
            std::string code;
            std::string text;
        };
        struct Spawned
        {
            EntityId id;
            EntityKind kind;
        };
        struct Despawned
        {
            EntityId id;
            EntityKind kind;
            DespawnReason reason;
        };
        // Pair state around one lotus-lotus impact.
        struct Collision
        {
            EntityId a;
            EntityId b;
            double energy_before;
            double energy_after;
            Vec2 momentum_before;
            Vec2 momentum_after;
        };
        struct ShoreBounce
        {
            EntityId id;
        };
        // Audio/visual cue the client plays, e.g. "splash" or "ripple".
        struct Cue
        {
            std::string name;
            EntityId source;
        };
    } // namespace fx

    using Effect = std::variant<fx::Notice, fx::Spawned, fx::Despawned, fx::Collision, fx::ShoreBounce, fx::Cue>;
    using Effects = std::vector<Effect>;

    struct SimState
    {
        Tick tick = 0;
        EntityId next_id = 1;
        Rng rng;
        std::vector<Lotus> lotuses; // each vector is ordered by id
        std::vector<Fish> fish;
        std::vector<Firework> fireworks;
        std::vector<Umbrella> umbrellas;
        std::vector<Boat> boats;
    };

    struct SimConfig
    {
        int tick_rate = 30;
        std::uint64_t seed = 0;
    };

    // Authoritative entity world. Single-threaded; every mutation happens
    // through these operations and step().
    class Simulation
    {
    public:
        Simulation(SceneConfig scene, SimConfig config);

        const SimState& state() const noexcept { return state_; }
        const SceneConfig& scene() const noexcept { return scene_; }
        int tick_rate() const noexcept { return config_.tick_rate; }
        Tick now() const noexcept { return state_.tick; }

        // Whole ticks for a duration in seconds (rounded to nearest).
        Tick ticks_for(double seconds) const;

        const Lotus* lotus_of(std::string_view owner) const;

        // Returns false (with a notice) when the owner already has a lotus.
        bool spawn_lotus(const ViewerId& owner, Effects& effects);

        // Scripted placement: fixed position and color, no randomness.
        bool spawn_lotus_at(const ViewerId& owner, Vec2 position, LotusColor color, Effects& effects);

        // Random direction without a target; toward the target's lotus otherwise.
        bool dash_lotus(const ViewerId& owner, const std::optional<ViewerId>& target, Effects& effects);

        bool shine_lotus(const ViewerId& owner, Effects& effects);

        EntityId feed_fish(const std::string& trigger_name, Effects& effects);
        EntityId spawn_firework(const std::string& trigger_name, Effects& effects);
        EntityId spawn_umbrella(const std::string& trigger_name, std::string_view story, Effects& effects);
        EntityId run_boat(std::vector<ScoreEntry> top3, Effects& effects);

        // Advances one fixed timestep.
        void step(Effects& effects);

        void hash_into(StateHasher& h) const;

    private:
        Lotus* find_lotus(std::string_view owner);
        Vec2 sample_visible_lake_point();
        Animation new_animation(double seconds) const;
        void advance(Animation& anim) const;
        void move_lotus(Lotus& lotus, double dt, Effects& effects);
        void collide(Lotus& a, Lotus& b, Effects& effects);
        void sweep_boats(Effects& effects);

        SceneConfig scene_;
        SimConfig config_;
        SimState state_;
    };

} // namespace mrsls
