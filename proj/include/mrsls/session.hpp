#pragma once

#include "mrsls/chatparse.hpp"
#include "mrsls/economy.hpp"
#include "mrsls/entitysim.hpp"
#include "mrsls/scenegeo.hpp"
#include "mrsls/versegame.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace mrsls
{

    struct RoundSchedule
    {
        double at_s = 0.0;
        std::vector<std::string> topics;
    };

    // "flower" first, then "Hangzhou" / "Jiangnan".
    std::vector<RoundSchedule> default_rounds();

    // Parses "60:花" or "480:杭州|江南".
    std::optional<RoundSchedule> parse_round(std::string_view spec);
    std::string format_round(const RoundSchedule& r);

    struct SessionConfig
    {
        int tick_rate = 30;
        std::uint64_t seed = 0;
        int threshold = 20;
        double round_seconds = VerseGame::kDefaultRoundSeconds;
        double result_display_s = 10.0;
        Fen story_threshold = kDefaultStoryThreshold;
        double entitlement_s = 600.0;
        std::vector<RoundSchedule> rounds = default_rounds();
    };

    struct ViewerInfo
    {
        std::string display_name;
        std::uint64_t last_seq = 0;
    };

    struct VerseStats
    {
        int accepted = 0;
        int duplicate = 0;
        int no_topic = 0;
        int not_in_corpus = 0;
        int game_over = 0;
    };

    // Deterministic session core: applies ordered chat events at tick
    // boundaries and advances the world. No I/O, no clocks.
    class Session
    {
    public:
        Session(SceneConfig scene, Corpus corpus, CommandAliases aliases, SessionConfig config);

        Tick tick() const noexcept { return sim_.now(); }
        const SessionConfig& config() const noexcept { return config_; }
        const Simulation& sim() const noexcept { return sim_; }
        const VerseGame& game() const noexcept { return game_; }
        const Economy& economy() const noexcept { return economy_; }
        const Corpus& corpus() const noexcept { return corpus_; }
        const CommandAliases& aliases() const noexcept { return aliases_; }
        const SceneConfig& scene() const noexcept { return sim_.scene(); }
        const VerseStats& verse_stats() const noexcept { return verse_stats_; }
        const std::map<std::string, int>& usage() const noexcept { return usage_; }
        std::uint64_t last_seq() const noexcept { return last_seq_; }

        // Events must arrive in strictly increasing seq; throws otherwise.
        void apply(const ChatEvent& event);

        // Runs the round schedule, then one simulation step.
        void advance();

        // Effects produced since the previous call.
        Effects take_effects();

        // Starts a round outside the schedule.
        bool start_round(std::vector<std::string> topics);

        std::string display_name(const ViewerId& viewer) const;

        // Owner of a live lotus with this display name; the most recently
        // active viewer wins when names collide.
        std::optional<ViewerId> resolve_lotus_owner(std::string_view display_name, const ViewerId& asking) const;

        std::vector<ScoreEntry> scoreboard() const;

        // Remaining round time in seconds (0 when no round runs).
        double remaining_seconds() const;

        std::uint64_t state_hash() const;

    private:
        void apply_comment(const ViewerId& viewer, const std::string& name, const std::string& text);
        void apply_gift(const ViewerId& viewer, const std::string& name, Fen amount);
        void push_notice(std::optional<fx::Notice> n);
        void maybe_finish();
        void run_schedule();

        SessionConfig config_;
        Corpus corpus_;
        CommandAliases aliases_;
        Simulation sim_;
        VerseGame game_;
        Economy economy_;

        std::map<ViewerId, ViewerInfo> viewers_;
        std::uint64_t last_seq_ = 0;
        std::size_t next_round_ = 0;
        Tick finished_at_ = 0;
        Effects pending_;
        VerseStats verse_stats_;
        std::map<std::string, int> usage_;
    };

} // namespace mrsls
