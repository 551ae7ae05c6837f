#include "mrsls/protocol.hpp"

#include "mrsls/session.hpp"

#include <json.hpp>

namespace mrsls::protocol
{

    namespace
    {
        using nlohmann::json;
        using ojson = nlohmann::ordered_json;

        template <class... Ts>
        struct overloaded : Ts...
        {
            using Ts::operator()...;
        };
        template <class... Ts>
        overloaded(Ts...) -> overloaded<Ts...>;

        std::string dump(const ojson& j)
        {
            return j.dump(-1, ' ', false, ojson::error_handler_t::replace);
        }

        ojson header(std::string_view type)
        {
            ojson j;
            j["v"] = kVersion;
            j["type"] = type;
            return j;
        }

        std::optional<EntityKind> kind_from(std::string_view name)
        {
            for (auto k : {EntityKind::Lotus, EntityKind::Fish, EntityKind::Firework, EntityKind::Umbrella,
                           EntityKind::Boat})
            {
                if (kind_name(k) == name)
                    return k;
            }
            return std::nullopt;
        }

        std::optional<GamePhase> phase_from(std::string_view name)
        {
            for (auto p : {GamePhase::Idle, GamePhase::Running, GamePhase::Won, GamePhase::Lost})
            {
                if (phase_name(p) == name)
                    return p;
            }
            return std::nullopt;
        }

        ojson scores_json(const std::vector<ScoreEntry>& rows)
        {
            ojson arr = ojson::array();
            for (const auto& s : rows)
                arr.push_back({{"name", s.display_name}, {"score", s.score}});
            return arr;
        }

        std::vector<ScoreEntry> scores_from(const json& arr)
        {
            std::vector<ScoreEntry> rows;
            for (const auto& s : arr)
                rows.push_back({s.at("name").get<std::string>(), s.at("score").get<int>()});
            return rows;
        }

        ojson entity_json(const RenderedEntity& e)
        {
            ojson j;
            j["id"] = e.id;
            j["kind"] = kind_name(e.kind);
            j["owner"] = e.owner;
            j["u"] = e.image.u;
            j["v"] = e.image.v;
            j["depth"] = e.depth;
            j["phase"] = e.phase;
            if (e.world)
                j["world"] = {e.world->x, e.world->y, e.world->z};
            if (e.shining)
                j["shining"] = true;
            if (e.dashing)
                j["dashing"] = true;
            if (e.color)
                j["color"] = color_name(*e.color);
            if (!e.text.empty())
                j["text"] = e.text;
            if (!e.flag.empty())
                j["flag"] = scores_json(e.flag);
            return j;
        }

        RenderedEntity entity_from(const json& j)
        {
            RenderedEntity e;
            e.id = j.at("id").get<EntityId>();
            const auto kind = kind_from(j.at("kind").get<std::string>());
            if (!kind)
                throw ProtocolError("unknown entity kind");
            e.kind = *kind;
            e.owner = j.at("owner").get<std::string>();
            e.image = {j.at("u").get<double>(), j.at("v").get<double>()};
            e.depth = j.at("depth").get<double>();
            e.phase = j.at("phase").get<double>();
            if (j.contains("world"))
            {
                const auto& w = j.at("world");
                e.world = WorldPoint{w.at(0).get<double>(), w.at(1).get<double>(), w.at(2).get<double>()};
            }
            e.shining = j.value("shining", false);
            e.dashing = j.value("dashing", false);
            if (j.contains("color"))
            {
                e.color = color_from_name(j.at("color").get<std::string>());
                if (!e.color)
                    throw ProtocolError("unknown lotus color");
            }
            e.text = j.value("text", std::string{});
            if (j.contains("flag"))
                e.flag = scores_from(j.at("flag"));
            return e;
        }

        ojson snapshot_json(const SnapshotMessage& s)
        {
            ojson j = header("snapshot");
            j["seq"] = s.seq;
            j["tick"] = s.tick;
            j["session_id"] = s.session_id;
            ojson entities = ojson::array();
            for (const auto& e : s.entities)
                entities.push_back(entity_json(e));
            j["entities"] = std::move(entities);
            ojson notices = ojson::array();
            for (const auto& n : s.notices)
                notices.push_back({{"target", n.target}, {"code", n.code}, {"text", n.text}});
            j["notices"] = std::move(notices);
            j["scoreboard"] = scores_json(s.scoreboard);
            j["game"] = {{"phase", phase_name(s.game.phase)},
                         {"topics", s.game.topics},
                         {"count", s.game.count},
                         {"threshold", s.game.threshold},
                         {"remaining_s", s.game.remaining_s}};
            return j;
        }

        SnapshotMessage snapshot_from(const json& j)
        {
            SnapshotMessage s;
            s.seq = j.at("seq").get<std::uint64_t>();
            s.tick = j.at("tick").get<Tick>();
            s.session_id = j.at("session_id").get<std::string>();
            for (const auto& e : j.at("entities"))
                s.entities.push_back(entity_from(e));
            for (const auto& n : j.at("notices"))
                s.notices.push_back(
                    {n.at("target").get<std::string>(), n.at("code").get<std::string>(), n.at("text").get<std::string>()});
            s.scoreboard = scores_from(j.at("scoreboard"));
            const auto& g = j.at("game");
            const auto phase = phase_from(g.at("phase").get<std::string>());
            if (!phase)
                throw ProtocolError("unknown game phase");
            s.game.phase = *phase;
            s.game.topics = g.at("topics").get<std::vector<std::string>>();
            s.game.count = g.at("count").get<int>();
            s.game.threshold = g.at("threshold").get<int>();
            s.game.remaining_s = g.at("remaining_s").get<double>();
            return s;
        }

        json parse_object(std::string_view text)
        {
            json j;
            try
            {
                j = json::parse(text);
            }
            catch (const json::parse_error& e)
            {
                throw ProtocolError(std::string("malformed JSON: ") + e.what());
            }
            if (!j.is_object())
                throw ProtocolError("message must be a JSON object");
            if (j.value("v", 0) != kVersion)
                throw ProtocolError("unsupported protocol version");
            if (!j.contains("type") || !j.at("type").is_string())
                throw ProtocolError("message lacks a type");
            return j;
        }
    } // namespace

    std::string encode(const ClientMessage& m)
    {
        return dump(std::visit(overloaded{
                                   [](const Hello& h) {
                                       ojson j = header("hello");
                                       j["display_name"] = h.display_name;
                                       j["snapshots"] = h.snapshots;
                                       return j;
                                   },
                                   [](const Comment& c) {
                                       ojson j = header("comment");
                                       j["text"] = c.text;
                                       return j;
                                   },
                                   [](const Gift& g) {
                                       ojson j = header("gift");
                                       j["amount"] = format_cny(g.amount);
                                       return j;
                                   },
                                   [](const Ping&) { return header("ping"); },
                               },
                               m));
    }

    ClientMessage decode_client(std::string_view json_text)
    {
        const json j = parse_object(json_text);
        const auto type = j.at("type").get<std::string>();
        try
        {
            if (type == "hello")
            {
                Hello h{j.at("display_name").get<std::string>(), j.value("snapshots", true)};
                if (normalize_comment(h.display_name).empty())
                    throw ProtocolError("display_name must not be empty");
                return h;
            }
            if (type == "comment")
                return Comment{j.at("text").get<std::string>()};
            if (type == "gift")
            {
                const auto& a = j.at("amount");
                std::optional<Fen> amount;
                if (a.is_string())
                    amount = parse_cny(a.get<std::string>());
                else if (a.is_number_integer())
                    amount = Fen::yuan(a.get<std::int64_t>());
                else if (a.is_number())
                    amount = Fen{static_cast<std::int64_t>(std::llround(a.get<double>() * 100.0))};
                if (!amount)
                    throw ProtocolError("gift amount must be a CNY amount with at most two decimals");
                return Gift{*amount};
            }
            if (type == "ping")
                return Ping{};
        }
        catch (const json::exception& e)
        {
            throw ProtocolError(std::string("bad ") + type + " message: " + e.what());
        }
        throw ProtocolError("unknown message type '" + type + "'");
    }

    std::string encode_snapshot(const SnapshotMessage& s)
    {
        return dump(snapshot_json(s));
    }

    std::string encode(const ServerMessage& m)
    {
        return dump(std::visit(overloaded{
                                   [](const Welcome& w) {
                                       ojson j = header("welcome");
                                       j["viewer_id"] = w.viewer_id;
                                       j["session_id"] = w.session_id;
                                       j["tick_rate"] = w.tick_rate;
                                       j["background_plate"] = w.background_plate;
                                       j["image_size"] = {w.image_width, w.image_height};
                                       return j;
                                   },
                                   [](const Ack& a) {
                                       ojson j = header("ack");
                                       j["seq"] = a.seq;
                                       return j;
                                   },
                                   [](const NoticeRecord& n) {
                                       ojson j = header("notice");
                                       j["target"] = n.target;
                                       j["code"] = n.code;
                                       j["text"] = n.text;
                                       return j;
                                   },
                                   [](const Error& e) {
                                       ojson j = header("error");
                                       j["code"] = e.code;
                                       j["text"] = e.text;
                                       return j;
                                   },
                                   [](const Pong&) { return header("pong"); },
                                   [](const SnapshotMessage& s) { return snapshot_json(s); },
                               },
                               m));
    }

    ServerMessage decode_server(std::string_view json_text)
    {
        const json j = parse_object(json_text);
        const auto type = j.at("type").get<std::string>();
        try
        {
            if (type == "snapshot")
                return snapshot_from(j);
            if (type == "welcome")
                return Welcome{j.at("viewer_id").get<std::string>(),    j.at("session_id").get<std::string>(),
                               j.at("tick_rate").get<int>(),           j.at("background_plate").get<std::string>(),
                               j.at("image_size").at(0).get<int>(),    j.at("image_size").at(1).get<int>()};
            if (type == "ack")
                return Ack{j.at("seq").get<std::uint64_t>()};
            if (type == "notice")
                return NoticeRecord{j.at("target").get<std::string>(), j.at("code").get<std::string>(),
                                    j.at("text").get<std::string>()};
            if (type == "error")
                return Error{j.at("code").get<std::string>(), j.at("text").get<std::string>()};
            if (type == "pong")
                return Pong{};
        }
        catch (const json::exception& e)
        {
            throw ProtocolError(std::string("bad ") + type + " message: " + e.what());
        }
        throw ProtocolError("unknown message type '" + type + "'");
    }

    NoticeRecord to_record(const fx::Notice& n)
    {
        return {n.target.value_or("all"), n.code, n.text};
    }

    SnapshotMessage build_snapshot(const Session& session, const Effects& tick_effects, std::uint64_t seq,
                                   std::string session_id)
    {
        const auto& scene = session.scene();
        const auto& cam = scene.camera;
        const auto& st = session.sim().state();

        SnapshotMessage s;
        s.seq = seq;
        s.tick = st.tick;
        s.session_id = std::move(session_id);

        const auto water_entity = [&](EntityId id, EntityKind kind, std::string owner, Vec2 at,
                                      double phase) -> std::optional<RenderedEntity> {
            const WorldPoint w = on_water(at);
            const auto img = project(cam, w);
            if (!img)
                return std::nullopt;
            RenderedEntity e;
            e.id = id;
            e.kind = kind;
            e.owner = std::move(owner);
            e.image = *img;
            e.depth = depth_of(cam, w);
            e.phase = phase;
            e.world = w;
            return e;
        };

        for (const auto& l : st.lotuses)
        {
            auto e = water_entity(l.id, EntityKind::Lotus, session.display_name(l.owner), l.position, 0.0);
            if (!e)
                continue;
            e->shining = l.shining_at(st.tick);
            e->dashing = l.mode == LotusMode::Dashing;
            e->color = l.color;
            s.entities.push_back(std::move(*e));
        }
        for (const auto& f : st.fish)
        {
            if (auto e = water_entity(f.id, EntityKind::Fish, f.trigger_name, f.position, f.anim.phase))
                s.entities.push_back(std::move(*e));
        }
        for (const auto& b : st.boats)
        {
            if (auto e = water_entity(b.id, EntityKind::Boat, {}, b.position, b.anim.phase))
            {
                e->flag = b.top3;
                s.entities.push_back(std::move(*e));
            }
        }
        for (const auto& f : st.fireworks)
        {
            RenderedEntity e;
            e.id = f.id;
            e.kind = EntityKind::Firework;
            e.owner = f.trigger_name;
            e.image = f.position;
            e.depth = kSkyDepth;
            e.phase = f.anim.phase;
            s.entities.push_back(std::move(e));
        }
        for (const auto& u : st.umbrellas)
        {
            RenderedEntity e;
            e.id = u.id;
            e.kind = EntityKind::Umbrella;
            e.owner = u.trigger_name;
            e.image = u.position;
            e.depth = kSkyDepth;
            e.phase = u.anim.phase;
            e.text = u.story;
            s.entities.push_back(std::move(e));
        }

        for (const auto& effect : tick_effects)
        {
            if (const auto* n = std::get_if<fx::Notice>(&effect))
                s.notices.push_back(to_record(*n));
        }

        s.scoreboard = session.scoreboard();
        const auto& g = session.game().state();
        s.game.phase = g.phase;
        s.game.topics = g.topics;
        s.game.count = g.count();
        s.game.threshold = g.threshold;
        s.game.remaining_s = session.remaining_seconds();
        return s;
    }

    std::string frame(std::string_view payload)
    {
        const auto n = static_cast<std::uint32_t>(payload.size());
        std::string out;
        out.reserve(payload.size() + 4);
        out.push_back(static_cast<char>((n >> 24) & 0xFF));
        out.push_back(static_cast<char>((n >> 16) & 0xFF));
        out.push_back(static_cast<char>((n >> 8) & 0xFF));
        out.push_back(static_cast<char>(n & 0xFF));
        out.append(payload);
        return out;
    }

    std::optional<std::string> FrameDecoder::next()
    {
        if (buffer_.size() < 4)
            return std::nullopt;
        const auto b = [&](int i) { return static_cast<std::uint32_t>(static_cast<unsigned char>(buffer_[i])); };
        const std::uint32_t n = (b(0) << 24) | (b(1) << 16) | (b(2) << 8) | b(3);
        if (n > max_frame_)
            throw ProtocolError("frame of " + std::to_string(n) + " bytes exceeds limit");
        if (buffer_.size() < 4 + static_cast<std::size_t>(n))
            return std::nullopt;
        std::string payload = buffer_.substr(4, n);
        buffer_.erase(0, 4 + static_cast<std::size_t>(n));
        return payload;
    }

} // namespace mrsls::protocol
