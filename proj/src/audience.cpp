#include "mrsls/audience.hpp"

#include "mrsls/hash.hpp"
#include "mrsls/rng.hpp"

#include <boost/asio.hpp>
#include <json.hpp>

#include <algorithm>
#include <array>
#include <chrono>
#include <deque>
#include <memory>

namespace mrsls
{

    namespace
    {
        namespace asio = boost::asio;
        using asio::ip::tcp;

        constexpr std::array kStories = {
            "I first saw this lake with my grandmother, forty years ago.",
            "We got engaged under the willows by the causeway.",
            "Watching from a hospital bed tonight; the lotuses help.",
            "小时候每年夏天都在湖边捉蜻蜓。",
            "第一次带女儿来西湖，她说荷花像灯笼。",
            "My father rowed these boats for thirty summers.",
        };

        constexpr std::array kChatter = {"hello everyone", "好美啊", "what a view", "晚上好", "is it raining there?"};

        std::string pick(Rng& rng, const auto& options)
        {
            return options[rng.below(options.size())];
        }

        template <class T>
        void shuffle(Rng& rng, std::vector<T>& v)
        {
            for (std::size_t i = v.size(); i > 1; --i)
                std::swap(v[i - 1], v[rng.below(i)]);
        }

        bool has_topic(std::string_view normalized, const std::vector<std::string>& topics)
        {
            return std::any_of(topics.begin(), topics.end(),
                               [&](const std::string& t) { return normalized.find(t) != std::string_view::npos; });
        }
    } // namespace

    AudienceScript make_script(const ScriptParams& params, const Corpus& corpus)
    {
        AudienceScript script;
        script.seed = params.seed;
        script.duration_s = params.duration_s;
        if (params.bots <= 0)
            return script;

        Rng rng(params.seed);
        script.bots.resize(static_cast<std::size_t>(params.bots));
        for (int i = 0; i < params.bots; ++i)
        {
            char name[16];
            std::snprintf(name, sizeof name, "bot%02d", i + 1);
            script.bots[static_cast<std::size_t>(i)].name = name;
        }
        const double end = params.duration_s - kMinGapSeconds;
        const auto comment = [](std::string text) { return protocol::ClientMessage{protocol::Comment{std::move(text)}}; };
        const auto add = [&](std::size_t bot, double at, std::string feature, protocol::ClientMessage m) {
            script.bots[bot].actions.push_back({at, std::move(feature), std::move(m)});
        };
        const auto any_bot = [&] { return static_cast<std::size_t>(rng.below(script.bots.size())); };

        // Lotus play, fish and chatter.
        for (std::size_t b = 0; b < script.bots.size(); ++b)
        {
            double t = rng.uniform(1.0, 20.0);
            add(b, t, "release_lotus", comment(rng.uniform01() < 0.3 ? "放莲花" : "release lotus"));
            for (t += rng.uniform(5.0, 30.0); t < end; t += rng.uniform(15.0, 45.0))
            {
                const double u = rng.uniform01();
                if (u < 0.30)
                    add(b, t, "dash_lotus", comment(rng.uniform01() < 0.3 ? "莲花冲刺" : "dash my lotus"));
                else if (u < 0.45)
                {
                    std::size_t other = any_bot();
                    if (other == b)
                        other = (other + 1) % script.bots.size();
                    const auto& target = script.bots[other].name;
                    add(b, t, "hit_lotus",
                        comment(rng.uniform01() < 0.3 ? "用莲花撞" + target : "hit " + target + " with my lotus"));
                }
                else if (u < 0.70)
                    add(b, t, "shine_lotus", comment(rng.uniform01() < 0.3 ? "点亮莲花" : "shine my lotus"));
                else if (u < 0.85)
                    add(b, t, "feed_fish", comment(rng.uniform01() < 0.3 ? "喂鱼" : "feed fish"));
                else if (u < 0.95)
                    add(b, t, "release_lotus", comment("release lotus"));
                else
                    add(b, t, "chat", comment(pick(rng, kChatter)));
            }
        }

        // Gifts and stories.
        for (std::size_t b = 0; b < script.bots.size(); ++b)
        {
            if (end <= 60.0)
                break;
            if (rng.uniform01() < 0.5)
                add(b, rng.uniform(10.0, end), "gift_firework", protocol::Gift{Fen{500}});
            if (rng.uniform01() < 0.25)
            {
                const double t = rng.uniform(30.0, end - 20.0);
                add(b, t, "gift_story", protocol::Gift{Fen{1500}});
                add(b, t + rng.uniform(5.0, 15.0), "story",
                    comment((rng.uniform01() < 0.3 ? "#我的故事 " : "#MyStory ") + pick(rng, kStories)));
            }
            else if (rng.uniform01() < 0.05)
            {
                add(b, rng.uniform(30.0, end), "story", comment("#MyStory " + pick(rng, kStories)));
            }
        }

        // Verse rounds.
        for (const auto& round : params.rounds)
        {
            const double from = round.at_s + 5.0;
            const double to = std::min(round.at_s + params.round_seconds - 10.0, end);
            if (to <= from)
                continue;
            std::vector<std::string> on_topic;
            std::vector<std::string> off_topic;
            for (const auto& e : corpus.entries())
                (has_topic(normalize_verse(e.verse), round.topics) ? on_topic : off_topic).push_back(e.verse);
            shuffle(rng, on_topic);
            on_topic.resize(std::min<std::size_t>(on_topic.size(), static_cast<std::size_t>(params.threshold) + 5));

            for (const auto& v : on_topic)
                add(any_bot(), rng.uniform(from, to), "verse", comment(v));
            for (int i = 0; i < 5 && !on_topic.empty(); ++i)
                add(any_bot(), rng.uniform(from, to), "verse", comment(on_topic[rng.below(on_topic.size())]));
            for (int i = 0; i < 3 && !off_topic.empty(); ++i)
                add(any_bot(), rng.uniform(from, to), "verse", comment(off_topic[rng.below(off_topic.size())]));
            for (int i = 0; i < 4; ++i)
            {
                const std::string made_up = round.topics[rng.below(round.topics.size())] + "影" +
                                            std::to_string(rng.below(1000)) + "夜未央";
                if (!corpus.contains(normalize_verse(made_up)))
                    add(any_bot(), rng.uniform(from, to), "verse", comment(made_up));
            }
        }

        for (auto& bot : script.bots)
        {
            std::stable_sort(bot.actions.begin(), bot.actions.end(),
                             [](const BotAction& a, const BotAction& b) { return a.at_s < b.at_s; });
            for (std::size_t i = 1; i < bot.actions.size(); ++i)
                bot.actions[i].at_s = std::max(bot.actions[i].at_s, bot.actions[i - 1].at_s + kMinGapSeconds);
            std::erase_if(bot.actions, [&](const BotAction& a) { return a.at_s > end; });
        }
        return script;
    }

    std::string script_digest(const AudienceScript& script)
    {
        StateHasher h;
        h.add(script.seed);
        h.add(script.duration_s);
        for (const auto& bot : script.bots)
        {
            h.add(bot.name);
            for (const auto& a : bot.actions)
            {
                h.add(a.at_s);
                h.add(a.feature);
                h.add(protocol::encode(a.message));
            }
        }
        return hash_hex(h.value());
    }

    namespace
    {
        using Clock = std::chrono::steady_clock;

        struct Shared
        {
            const AudienceOptions& options;
            AudienceReport& report;
            Clock::time_point start;
            std::vector<std::vector<std::string>> outcomes;
        };

        class Bot : public std::enable_shared_from_this<Bot>
        {
        public:
            Bot(asio::io_context& io, Shared& shared, const BotScript& script, std::size_t index)
                : socket_(io), timer_(io), shared_(shared), script_(script), index_(index)
            {
            }

            void start(const tcp::resolver::results_type& endpoints)
            {
                auto self = shared_from_this();
                asio::async_connect(socket_, endpoints, [this, self](boost::system::error_code ec, const tcp::endpoint&) {
                    if (ec)
                    {
                        fail("connect: " + ec.message());
                        return;
                    }
                    socket_.set_option(tcp::no_delay(true));
                    me().connected = true;
                    ++shared_.report.connected;
                    write(protocol::encode(protocol::Hello{script_.name, false}));
                    read();
                    schedule();
                });
            }

        private:
            BotReport& me() { return shared_.report.per_bot[index_]; }

            void fail(const std::string& what)
            {
                ++me().errors;
                me().last_error = what;
            }

            void schedule()
            {
                if (done_)
                    return;
                const double speed = shared_.options.speed;
                auto self = shared_from_this();
                if (next_ < script_.actions.size())
                {
                    const auto at = std::chrono::duration<double>(script_.actions[next_].at_s / speed);
                    timer_.expires_at(shared_.start + std::chrono::duration_cast<Clock::duration>(at));
                    timer_.async_wait([this, self](boost::system::error_code ec) {
                        if (ec || done_)
                            return;
                        write(protocol::encode(script_.actions[next_].message));
                        ++me().sent;
                        ++shared_.report.events_sent;
                        ++next_;
                        schedule();
                    });
                    return;
                }
                timer_.expires_after(std::chrono::duration_cast<Clock::duration>(
                    std::chrono::duration<double>(shared_.options.linger_s)));
                timer_.async_wait([this, self](boost::system::error_code ec) {
                    if (!ec)
                        finish();
                });
            }

            void finish()
            {
                if (done_)
                    return;
                done_ = true;
                boost::system::error_code ignored;
                timer_.cancel(ignored);
                socket_.shutdown(tcp::socket::shutdown_both, ignored);
                socket_.close(ignored);
            }

            void read()
            {
                auto self = shared_from_this();
                socket_.async_read_some(asio::buffer(buffer_), [this, self](boost::system::error_code ec, std::size_t n) {
                    if (ec)
                    {
                        if (!done_ && next_ < script_.actions.size())
                            fail("server closed the connection before the script ended");
                        if (!done_ && (shared_.options.wait_for_close || next_ < script_.actions.size()))
                            finish();
                        return;
                    }
                    try
                    {
                        decoder_.feed(std::string_view(buffer_.data(), n));
                        while (auto payload = decoder_.next())
                            on_message(protocol::decode_server(*payload));
                    }
                    catch (const std::exception& e)
                    {
                        fail(e.what());
                        finish();
                        return;
                    }
                    read();
                });
            }

            void on_message(const protocol::ServerMessage& m)
            {
                auto& report = shared_.report;
                if (std::holds_alternative<protocol::Ack>(m))
                {
                    ++me().acks;
                    ++report.acks;
                }
                else if (const auto* n = std::get_if<protocol::NoticeRecord>(&m))
                {
                    ++report.notices_received;
                    ++report.notice_codes[n->code];
                    if (n->code == "game_won" || n->code == "game_lost")
                        shared_.outcomes[index_].push_back(n->code);
                }
                else if (const auto* e = std::get_if<protocol::Error>(&m))
                {
                    ++report.error_codes[e->code];
                    fail(e->code + ": " + e->text);
                }
            }

            void write(std::string payload)
            {
                outbox_.push_back(protocol::frame(payload));
                if (outbox_.size() == 1)
                    flush();
            }

            void flush()
            {
                auto self = shared_from_this();
                asio::async_write(socket_, asio::buffer(outbox_.front()),
                                  [this, self](boost::system::error_code ec, std::size_t) {
                                      if (ec)
                                      {
                                          if (!done_)
                                              fail("write: " + ec.message());
                                          outbox_.clear();
                                          return;
                                      }
                                      outbox_.pop_front();
                                      if (!outbox_.empty())
                                          flush();
                                  });
            }

            tcp::socket socket_;
            asio::steady_timer timer_;
            Shared& shared_;
            const BotScript& script_;
            std::size_t index_;
            std::size_t next_ = 0;
            bool done_ = false;
            std::array<char, 16384> buffer_{};
            protocol::FrameDecoder decoder_{16 * 1024 * 1024};
            std::deque<std::string> outbox_;
        };
    } // namespace

    AudienceReport run_audience(const AudienceScript& script, const AudienceOptions& options)
    {
        AudienceReport report;
        report.script_digest = script_digest(script);
        report.bots = static_cast<int>(script.bots.size());
        report.session_seconds = script.duration_s;
        for (const auto& bot : script.bots)
        {
            report.per_bot.emplace_back().name = bot.name;
            for (const auto& a : bot.actions)
                ++report.feature_usage[a.feature];
        }
        if (script.bots.empty())
            return report;

        asio::io_context io;
        Shared shared{options, report, Clock::now(), std::vector<std::vector<std::string>>(script.bots.size())};
        tcp::resolver resolver(io);
        boost::system::error_code ec;
        const auto endpoints = resolver.resolve(options.host, std::to_string(options.port), ec);
        if (ec)
        {
            for (auto& b : report.per_bot)
            {
                ++b.errors;
                b.last_error = "resolve: " + ec.message();
            }
            return report;
        }
        for (std::size_t i = 0; i < script.bots.size(); ++i)
            std::make_shared<Bot>(io, shared, script.bots[i], i)->start(endpoints);
        io.run();

        report.wall_seconds = std::chrono::duration<double>(Clock::now() - shared.start).count();
        report.events_per_sec = report.wall_seconds > 0 ? report.events_sent / report.wall_seconds : 0.0;
        for (const auto& o : shared.outcomes)
        {
            if (o.size() > report.game_outcomes.size())
                report.game_outcomes = o;
        }
        return report;
    }

    std::string to_json(const AudienceReport& r)
    {
        nlohmann::ordered_json j;
        j["script_digest"] = r.script_digest;
        j["bots"] = r.bots;
        j["connected"] = r.connected;
        j["session_seconds"] = r.session_seconds;
        j["wall_seconds"] = r.wall_seconds;
        j["events_sent"] = r.events_sent;
        j["acks"] = r.acks;
        j["events_per_sec"] = r.events_per_sec;
        j["events_per_session_sec"] = r.session_seconds > 0 ? r.events_sent / r.session_seconds : 0.0;
        j["notices_received"] = r.notices_received;
        j["notice_codes"] = r.notice_codes;
        j["error_codes"] = r.error_codes;
        j["feature_usage"] = r.feature_usage;
        j["game_outcomes"] = r.game_outcomes;
        auto bots = nlohmann::ordered_json::array();
        for (const auto& b : r.per_bot)
        {
            bots.push_back({{"name", b.name},
                            {"connected", b.connected},
                            {"sent", b.sent},
                            {"acks", b.acks},
                            {"errors", b.errors},
                            {"last_error", b.last_error}});
        }
        j["per_bot"] = std::move(bots);
        j["note"] = "The script is a pure function of the seed. The order in which the server receives events from "
                    "different bots depends on network timing, so seq numbers and outcomes can differ between runs; "
                    "the server's replay log records the order actually used.";
        return j.dump(2, ' ', false, nlohmann::ordered_json::error_handler_t::replace);
    }

} // namespace mrsls
