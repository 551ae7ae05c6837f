#pragma once

#include "mrsls/chatparse.hpp"
#include "mrsls/protocol.hpp"
#include "mrsls/rng.hpp"
#include "mrsls/scenegeo.hpp"
#include "mrsls/session.hpp"
#include "mrsls/utf8.hpp"
#include "mrsls/versegame.hpp"

#include <array>
#include <cmath>
#include <string>

namespace mrsls::testing
{

    inline std::string data_path(const std::string& name)
    {
        return std::string(MRSLS_DATA_DIR) + "/" + name;
    }

    inline SceneConfig demo_scene()
    {
        static const SceneConfig scene = load_scene(data_path("demo_scene.json"));
        return scene;
    }

    inline const Corpus& demo_corpus()
    {
        static const Corpus corpus = Corpus::load(data_path("poems.tsv"));
        return corpus;
    }

    // A session with no scheduled rounds unless the caller adds some.
    inline Session make_session(SessionConfig config = {}, SceneConfig scene = demo_scene())
    {
        return Session(std::move(scene), demo_corpus(), CommandAliases::defaults(), std::move(config));
    }

    inline ChatEvent comment(std::uint64_t seq, const std::string& viewer, const std::string& text)
    {
        return ChatEvent{viewer, viewer, CommentEvent{text}, seq, 0};
    }

    inline ChatEvent gift(std::uint64_t seq, const std::string& viewer, Fen amount)
    {
        return ChatEvent{viewer, viewer, GiftEvent{amount}, seq, 0};
    }

    // Valid UTF-8 that exercises JSON escaping: quotes, controls, CJK, astral.
    inline std::string random_text(Rng& rng, std::size_t max_len = 12)
    {
        static constexpr std::array<char32_t, 16> pool{U'a', U'Z', U'0', U' ', U'"', U'\\', U'\n', U'\t',
                                                       U'\x01', U'/', U'莲', U'花', U'，', U'é', U'\U0001F338',
                                                       U'\u2028'};
        std::string out;
        const auto n = rng.below(max_len + 1);
        for (std::uint64_t i = 0; i < n; ++i)
            utf8::append(out, pool[rng.below(pool.size())]);
        return out;
    }

    inline double random_double(Rng& rng)
    {
        switch (rng.below(4))
        {
        case 0:
            return rng.uniform(-2000.0, 2000.0);
        case 1:
            return static_cast<double>(static_cast<std::int64_t>(rng.below(4000)) - 2000);
        case 2:
            return rng.uniform01() * 1e-9;
        default:
            return std::ldexp(rng.uniform(-1.0, 1.0), static_cast<int>(rng.below(200)) - 100);
        }
    }

    inline protocol::SnapshotMessage random_snapshot(Rng& rng)
    {
        protocol::SnapshotMessage s;
        s.seq = rng.next();
        s.tick = static_cast<Tick>(rng.below(1ULL << 40));
        s.session_id = random_text(rng);
        const auto n = rng.below(8);
        for (std::uint64_t i = 0; i < n; ++i)
        {
            protocol::RenderedEntity e;
            e.id = rng.next();
            e.kind = static_cast<EntityKind>(rng.below(5));
            e.owner = random_text(rng);
            e.image = {random_double(rng), random_double(rng)};
            e.depth = random_double(rng);
            e.phase = rng.uniform01();
            if (rng.below(2))
                e.world = WorldPoint{random_double(rng), random_double(rng), random_double(rng)};
            e.shining = rng.below(2) == 1;
            e.dashing = rng.below(2) == 1;
            if (rng.below(2))
                e.color = static_cast<LotusColor>(rng.below(kLotusColorCount));
            if (rng.below(3) == 0)
                e.text = random_text(rng, 40);
            for (auto k = rng.below(4); k > 0; --k)
                e.flag.push_back({random_text(rng), static_cast<int>(rng.below(100))});
            s.entities.push_back(std::move(e));
        }
        for (auto k = rng.below(4); k > 0; --k)
            s.notices.push_back({rng.below(2) ? "all" : random_text(rng), random_text(rng), random_text(rng, 30)});
        for (auto k = rng.below(4); k > 0; --k)
            s.scoreboard.push_back({random_text(rng), static_cast<int>(rng.below(50))});
        s.game.phase = static_cast<GamePhase>(rng.below(4));
        for (auto k = rng.below(3); k > 0; --k)
            s.game.topics.push_back(random_text(rng, 3));
        s.game.count = static_cast<int>(rng.below(100));
        s.game.threshold = static_cast<int>(rng.below(100));
        s.game.remaining_s = rng.uniform(0.0, 300.0);
        return s;
    }

} // namespace mrsls::testing
