#include "mrsls/replay_log.hpp"

#include "mrsls/hash.hpp"

#include <json.hpp>

#include <fstream>
#include <istream>
#include <iterator>
#include <ostream>

namespace mrsls
{

    namespace
    {
        using nlohmann::json;
        using ojson = nlohmann::ordered_json;

        void write_line(std::ostream& out, const ojson& j)
        {
            out << j.dump(-1, ' ', false, ojson::error_handler_t::replace) << '\n';
            out.flush();
        }

        std::uint64_t parse_hex(const std::string& s)
        {
            std::size_t used = 0;
            const auto v = std::stoull(s, &used, 16);
            if (used != s.size())
                throw ReplayError("bad hash '" + s + "'");
            return v;
        }

        ReplayHeader header_from(const json& j)
        {
            ReplayHeader h;
            auto& c = h.config;
            c.seed = j.at("seed").get<std::uint64_t>();
            c.tick_rate = j.at("tick_rate").get<int>();
            c.threshold = j.at("threshold").get<int>();
            c.round_seconds = j.at("round_seconds").get<double>();
            c.result_display_s = j.at("result_display_s").get<double>();
            c.story_threshold = Fen{j.at("story_threshold_fen").get<std::int64_t>()};
            c.entitlement_s = j.at("entitlement_s").get<double>();
            c.rounds.clear();
            for (const auto& r : j.at("rounds"))
            {
                auto parsed = parse_round(r.get<std::string>());
                if (!parsed)
                    throw ReplayError("bad round '" + r.get<std::string>() + "'");
                c.rounds.push_back(std::move(*parsed));
            }
            h.session_id = j.at("session_id").get<std::string>();
            h.scene_path = j.at("scene").get<std::string>();
            h.corpus_path = j.at("corpus").get<std::string>();
            h.aliases_path = j.value("aliases", std::string{});
            h.scene_digest = j.value("scene_digest", std::string{});
            h.corpus_digest = j.value("corpus_digest", std::string{});
            h.aliases_digest = j.value("aliases_digest", std::string{});
            return h;
        }

        ReplayEvent event_from(const json& j)
        {
            ReplayEvent r;
            r.tick = j.at("tick").get<Tick>();
            auto& e = r.event;
            e.seq = j.at("seq").get<std::uint64_t>();
            e.timestamp_ms = j.at("timestamp").get<std::int64_t>();
            e.viewer_id = j.at("viewer").get<std::string>();
            e.display_name = j.at("name").get<std::string>();
            const auto kind = j.at("kind").get<std::string>();
            const auto payload = j.at("payload").get<std::string>();
            if (kind == "comment")
            {
                e.kind = CommentEvent{payload};
            }
            else if (kind == "gift")
            {
                const auto amount = parse_cny(payload);
                if (!amount)
                    throw ReplayError("bad gift amount '" + payload + "'");
                e.kind = GiftEvent{*amount};
            }
            else
            {
                throw ReplayError("unknown event kind '" + kind + "'");
            }
            return r;
        }
    } // namespace

    std::string file_digest(const std::string& path)
    {
        std::ifstream in(path, std::ios::binary);
        if (!in)
            throw ReplayError("cannot read " + path);
        const std::string bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
        StateHasher h;
        h.add(std::string_view(bytes));
        return hash_hex(h.value());
    }

    ReplayWriter::ReplayWriter(std::ostream& out, const ReplayHeader& header) : out_(out)
    {
        const auto& c = header.config;
        ojson j;
        j["type"] = "header";
        j["format"] = 1;
        j["session_id"] = header.session_id;
        j["seed"] = c.seed;
        j["tick_rate"] = c.tick_rate;
        j["threshold"] = c.threshold;
        j["round_seconds"] = c.round_seconds;
        j["result_display_s"] = c.result_display_s;
        j["story_threshold_fen"] = c.story_threshold.value;
        j["entitlement_s"] = c.entitlement_s;
        ojson rounds = ojson::array();
        for (const auto& r : c.rounds)
            rounds.push_back(format_round(r));
        j["rounds"] = std::move(rounds);
        j["scene"] = header.scene_path;
        j["corpus"] = header.corpus_path;
        j["aliases"] = header.aliases_path;
        j["scene_digest"] = header.scene_digest;
        j["corpus_digest"] = header.corpus_digest;
        j["aliases_digest"] = header.aliases_digest;
        write_line(out_, j);
    }

    void ReplayWriter::event(Tick tick, const ChatEvent& e)
    {
        ojson j;
        j["type"] = "event";
        j["seq"] = e.seq;
        j["timestamp"] = e.timestamp_ms;
        j["tick"] = tick;
        j["viewer"] = e.viewer_id;
        j["name"] = e.display_name;
        if (const auto* c = std::get_if<CommentEvent>(&e.kind))
        {
            j["kind"] = "comment";
            j["payload"] = c->text;
        }
        else
        {
            j["kind"] = "gift";
            j["payload"] = format_cny(std::get<GiftEvent>(e.kind).amount);
        }
        write_line(out_, j);
    }

    void ReplayWriter::end(Tick ticks, std::uint64_t hash)
    {
        ojson j;
        j["type"] = "end";
        j["ticks"] = ticks;
        j["hash"] = hash_hex(hash);
        write_line(out_, j);
    }

    ReplayLog read_replay(std::istream& in)
    {
        ReplayLog log;
        bool have_header = false;
        std::string line;
        int lineno = 0;
        std::uint64_t last_seq = 0;
        Tick last_tick = 0;
        while (std::getline(in, line))
        {
            ++lineno;
            if (line.empty())
                continue;
            const auto where = "replay log line " + std::to_string(lineno) + ": ";
            try
            {
                const json j = json::parse(line);
                const auto type = j.at("type").get<std::string>();
                if (type == "header")
                {
                    if (have_header)
                        throw ReplayError("second header");
                    log.header = header_from(j);
                    have_header = true;
                }
                else if (!have_header)
                {
                    throw ReplayError("log does not start with a header");
                }
                else if (log.end)
                {
                    throw ReplayError("record after end");
                }
                else if (type == "event")
                {
                    auto e = event_from(j);
                    if (e.event.seq <= last_seq)
                        throw ReplayError("seq " + std::to_string(e.event.seq) + " not increasing");
                    if (e.tick < last_tick)
                        throw ReplayError("tick goes backwards");
                    last_seq = e.event.seq;
                    last_tick = e.tick;
                    log.events.push_back(std::move(e));
                }
                else if (type == "end")
                {
                    log.end = ReplayEnd{j.at("ticks").get<Tick>(), parse_hex(j.at("hash").get<std::string>())};
                    if (log.end->ticks < last_tick)
                        throw ReplayError("end before last event");
                }
                else
                {
                    throw ReplayError("unknown record type '" + type + "'");
                }
            }
            catch (const json::exception& e)
            {
                throw ReplayError(where + e.what());
            }
            catch (const ReplayError& e)
            {
                throw ReplayError(where + e.what());
            }
            catch (const std::logic_error& e)
            {
                throw ReplayError(where + e.what());
            }
        }
        if (!have_header)
            throw ReplayError("replay log is empty");
        return log;
    }

    ReplayLog load_replay(const std::string& path)
    {
        std::ifstream in(path);
        if (!in)
            throw ReplayError("cannot open replay log " + path);
        return read_replay(in);
    }

    std::uint64_t run_tick(Session& session, const std::vector<ChatEvent>& events)
    {
        for (const auto& e : events)
            session.apply(e);
        session.advance();
        return session.state_hash();
    }

    std::uint64_t replay(Session& session, const std::vector<ReplayEvent>& events, Tick ticks,
                         const TickHashFn& on_tick)
    {
        std::uint64_t hash = session.state_hash();
        std::size_t next = 0;
        std::vector<ChatEvent> batch;
        while (session.tick() < ticks)
        {
            const Tick now = session.tick();
            batch.clear();
            while (next < events.size() && events[next].tick == now)
                batch.push_back(events[next++].event);
            if (next < events.size() && events[next].tick < now)
                throw ReplayError("event seq " + std::to_string(events[next].event.seq) + " is for past tick " +
                                  std::to_string(events[next].tick));
            hash = run_tick(session, batch);
            if (on_tick)
                on_tick(session.tick(), hash);
        }
        if (next != events.size())
            throw ReplayError("log has events after its last tick");
        return hash;
    }

} // namespace mrsls
