#include "mrsls/session.hpp"

#include <charconv>
#include <cmath>
#include <stdexcept>

namespace mrsls
{

    namespace
    {
        template <class... Ts>
        struct overloaded : Ts...
        {
            using Ts::operator()...;
        };
        template <class... Ts>
        overloaded(Ts...) -> overloaded<Ts...>;

        Tick seconds_to_ticks(double s, int rate) { return static_cast<Tick>(std::llround(s * rate)); }
    } // namespace

    std::vector<RoundSchedule> default_rounds()
    {
        return {{60.0, {"花"}}, {480.0, {"杭州", "江南"}}};
    }

    std::optional<RoundSchedule> parse_round(std::string_view spec)
    {
        const auto colon = spec.find(':');
        if (colon == std::string_view::npos || colon == 0)
            return std::nullopt;
        RoundSchedule r;
        try
        {
            std::size_t used = 0;
            const std::string at(spec.substr(0, colon));
            r.at_s = std::stod(at, &used);
            if (used != at.size() || !(r.at_s >= 0.0))
                return std::nullopt;
        }
        catch (const std::exception&)
        {
            return std::nullopt;
        }
        auto rest = spec.substr(colon + 1);
        while (!rest.empty())
        {
            const auto bar = rest.find('|');
            auto token = normalize_verse(rest.substr(0, bar));
            if (!token.empty())
                r.topics.push_back(std::move(token));
            if (bar == std::string_view::npos)
                break;
            rest.remove_prefix(bar + 1);
        }
        if (r.topics.empty())
            return std::nullopt;
        return r;
    }

    std::string format_round(const RoundSchedule& r)
    {
        char buf[32];
        const auto res = std::to_chars(buf, buf + sizeof buf, r.at_s);
        std::string out(buf, res.ptr);
        out += ':';
        for (std::size_t i = 0; i < r.topics.size(); ++i)
            out += (i ? "|" : "") + r.topics[i];
        return out;
    }

    Session::Session(SceneConfig scene, Corpus corpus, CommandAliases aliases, SessionConfig config)
        : config_(std::move(config)),
          corpus_(std::move(corpus)),
          aliases_(std::move(aliases)),
          sim_(std::move(scene), SimConfig{config_.tick_rate, config_.seed}),
          game_(config_.threshold, seconds_to_ticks(config_.round_seconds, config_.tick_rate)),
          economy_(EconomyConfig{config_.story_threshold, seconds_to_ticks(config_.entitlement_s, config_.tick_rate)})
    {
        if (config_.tick_rate <= 0)
            throw std::invalid_argument("tick rate must be positive");
    }

    void Session::apply(const ChatEvent& event)
    {
        if (event.seq <= last_seq_)
            throw std::logic_error("event seq " + std::to_string(event.seq) + " not after " +
                                   std::to_string(last_seq_));
        last_seq_ = event.seq;

        auto& info = viewers_[event.viewer_id];
        info.display_name = event.display_name;
        info.last_seq = event.seq;

        std::visit(overloaded{
                       [&](const CommentEvent& c) { apply_comment(event.viewer_id, event.display_name, c.text); },
                       [&](const GiftEvent& g) { apply_gift(event.viewer_id, event.display_name, g.amount); },
                   },
                   event.kind);
    }

    void Session::push_notice(std::optional<fx::Notice> n)
    {
        if (n)
            pending_.push_back(std::move(*n));
    }

    void Session::apply_comment(const ViewerId& viewer, const std::string& name, const std::string& text)
    {
        const Command command = parse_comment(text, game_.running(), aliases_);
        ++usage_[std::string(command_name(command))];

        std::visit(overloaded{
                       [&](const cmd::ReleaseLotus&) { sim_.spawn_lotus(viewer, pending_); },
                       [&](const cmd::DashLotus&) { sim_.dash_lotus(viewer, std::nullopt, pending_); },
                       [&](const cmd::HitLotus& h) {
                           const auto target = resolve_lotus_owner(h.target, viewer);
                           if (!target)
                           {
                               if (!sim_.lotus_of(viewer))
                                   sim_.dash_lotus(viewer, std::nullopt, pending_); // "release first"
                               else
                                   pending_.push_back(
                                       fx::Notice{viewer, "no_such_lotus", "No lotus named " + h.target + "."});
                               return;
                           }
                           sim_.dash_lotus(viewer, target, pending_);
                       },
                       [&](const cmd::ShineLotus&) { sim_.shine_lotus(viewer, pending_); },
                       [&](const cmd::FeedFish&) { sim_.feed_fish(name, pending_); },
                       [&](const cmd::Story& s) {
                           auto outcome = economy_.on_story(viewer, s.text, tick());
                           if (outcome.umbrella)
                               sim_.spawn_umbrella(name, outcome.text, pending_);
                           push_notice(std::move(outcome.notice));
                       },
                       [&](const cmd::Verse& v) {
                           const auto result = game_.submit(corpus_, viewer, v.text, tick());
                           if (std::holds_alternative<Accepted>(result))
                           {
                               ++verse_stats_.accepted;
                               pending_.push_back(fx::Notice{viewer, "verse_accepted", "Verse accepted: " + v.text});
                               maybe_finish();
                               return;
                           }
                           switch (std::get<Rejected>(result).reason)
                           {
                           case RejectReason::Duplicate:
                               ++verse_stats_.duplicate;
                               pending_.push_back(
                                   fx::Notice{viewer, "verse_duplicate", "That verse was already recited."});
                               break;
                           case RejectReason::NoTopicToken:
                               ++verse_stats_.no_topic;
                               break;
                           case RejectReason::NotInCorpus:
                               ++verse_stats_.not_in_corpus;
                               break;
                           case RejectReason::GameOver:
                               ++verse_stats_.game_over;
                               break;
                           }
                       },
                       [](const cmd::Plain&) {},
                   },
                   command);
    }

    void Session::apply_gift(const ViewerId& viewer, const std::string& name, Fen amount)
    {
        auto outcome = economy_.on_gift(viewer, amount, tick());
        if (outcome.effect == GiftEffect::Firework)
        {
            ++usage_["gift_firework"];
            sim_.spawn_firework(name, pending_);
        }
        else if (outcome.effect == GiftEffect::StoryEntitlement)
        {
            ++usage_["gift_story"];
        }
        push_notice(std::move(outcome.notice));
    }

    void Session::maybe_finish()
    {
        if (!game_.should_finish(tick()))
            return;
        game_.finish(tick(), pending_);
        finished_at_ = tick();
        sim_.run_boat(scoreboard(), pending_);
    }

    void Session::run_schedule()
    {
        const Tick now = tick();
        maybe_finish();

        const auto phase = game_.state().phase;
        if ((phase == GamePhase::Won || phase == GamePhase::Lost) &&
            now >= finished_at_ + seconds_to_ticks(config_.result_display_s, config_.tick_rate))
            game_.reset();

        if (game_.state().phase == GamePhase::Idle && next_round_ < config_.rounds.size() &&
            now >= seconds_to_ticks(config_.rounds[next_round_].at_s, config_.tick_rate))
        {
            game_.start(config_.rounds[next_round_].topics, now, pending_);
            ++next_round_;
        }
    }

    void Session::advance()
    {
        run_schedule();
        sim_.step(pending_);
    }

    Effects Session::take_effects()
    {
        Effects out;
        out.swap(pending_);
        return out;
    }

    bool Session::start_round(std::vector<std::string> topics)
    {
        return game_.start(std::move(topics), tick(), pending_);
    }

    std::string Session::display_name(const ViewerId& viewer) const
    {
        const auto it = viewers_.find(viewer);
        return it == viewers_.end() ? viewer : it->second.display_name;
    }

    std::optional<ViewerId> Session::resolve_lotus_owner(std::string_view name, const ViewerId& asking) const
    {
        std::optional<ViewerId> best;
        std::uint64_t best_seq = 0;
        bool asking_matches = false;
        for (const auto& [viewer, info] : viewers_)
        {
            if (info.display_name != name || !sim_.lotus_of(viewer))
                continue;
            if (viewer == asking)
            {
                asking_matches = true;
                continue;
            }
            if (!best || info.last_seq > best_seq)
            {
                best = viewer;
                best_seq = info.last_seq;
            }
        }
        // Only the asker carries this name: hand it back so the self-target rule applies.
        if (!best && asking_matches)
            return asking;
        return best;
    }

    std::vector<ScoreEntry> Session::scoreboard() const
    {
        return game_.scoreboard([this](const ViewerId& v) { return display_name(v); });
    }

    double Session::remaining_seconds() const
    {
        const auto& g = game_.state();
        if (g.phase != GamePhase::Running)
            return 0.0;
        const Tick left = std::max<Tick>(0, g.expiry() - tick());
        return static_cast<double>(left) / config_.tick_rate;
    }

    std::uint64_t Session::state_hash() const
    {
        StateHasher h;
        sim_.hash_into(h);
        game_.hash_into(h);
        economy_.hash_into(h);
        h.add(last_seq_);
        h.add(static_cast<std::uint64_t>(next_round_));
        h.add(finished_at_);
        for (const auto& [viewer, info] : viewers_)
        {
            h.add(viewer);
            h.add(info.display_name);
            h.add(info.last_seq);
        }
        return h.value();
    }

} // namespace mrsls
