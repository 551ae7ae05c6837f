/*
 * Chat command classification.
 *
 * Comments are normalized (trimmed, whitespace runs collapsed to one space)
 * and matched against a CommandAliases table. Latin letters match
 * case-insensitively; every other character matches exactly. Anything that
 * is not a command becomes a Verse while a verse round runs, Plain otherwise.
 */
#pragma once

#include "mrsls/currency.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace mrsls
{

    using ViewerId = std::string;
    using Tick = std::int64_t;

    struct CommentEvent
    {
        std::string text;
        bool operator==(const CommentEvent&) const = default;
    };

    struct GiftEvent
    {
        Fen amount;
        bool operator==(const GiftEvent&) const = default;
    };

    struct ChatEvent
    {
        ViewerId viewer_id;
        std::string display_name;
        std::variant<CommentEvent, GiftEvent> kind;
        std::uint64_t seq = 0;
        std::int64_t timestamp_ms = 0;

        bool operator==(const ChatEvent&) const = default;
    };

    namespace cmd
    {
        struct ReleaseLotus
        {
            bool operator==(const ReleaseLotus&) const = default;
        };
        struct DashLotus
        {
            bool operator==(const DashLotus&) const = default;
        };
        struct HitLotus
        {
            std::string target;
            bool operator==(const HitLotus&) const = default;
        };
        struct ShineLotus
        {
            bool operator==(const ShineLotus&) const = default;
        };
        struct FeedFish
        {
            bool operator==(const FeedFish&) const = default;
        };
        struct Story
        {
            std::string text;
            bool operator==(const Story&) const = default;
        };
        struct Verse
        {
            std::string text;
            bool operator==(const Verse&) const = default;
        };
        struct Plain
        {
            std::string text;
            bool operator==(const Plain&) const = default;
        };
    } // namespace cmd

    using Command = std::variant<cmd::ReleaseLotus, cmd::DashLotus, cmd::HitLotus, cmd::ShineLotus, cmd::FeedFish,
                                 cmd::Story, cmd::Verse, cmd::Plain>;

    std::string_view command_name(const Command& c);

    // Argument-free commands that an exact alias can name.
    enum class SimpleCommand : std::uint8_t
    {
        ReleaseLotus,
        DashLotus,
        ShineLotus,
        FeedFish,
    };

    Command to_command(SimpleCommand c);

    class AliasError : public std::runtime_error
    {
    public:
        using std::runtime_error::runtime_error;
    };

    class CommandAliases
    {
    public:
        struct Exact
        {
            std::string phrase; // normalized, original case
            SimpleCommand command;
        };

        // Pattern split around the "{id}" placeholder.
        struct HitPattern
        {
            std::string pattern;
            std::string prefix;
            std::string suffix;
        };

        static constexpr std::string_view kIdPlaceholder = "{id}";

        // English phrases from the deployment's translation plus Chinese aliases.
        static CommandAliases defaults();

        // Key/value text file; see docs/formats.md.
        static CommandAliases load(const std::filesystem::path& path);
        static CommandAliases parse(std::string_view content);

        void add_exact(std::string_view phrase, SimpleCommand command);
        void add_hit_pattern(std::string_view pattern);
        void add_story_tag(std::string_view tag);

        const std::vector<Exact>& exact() const noexcept { return exact_; }
        const std::vector<HitPattern>& hit_patterns() const noexcept { return hits_; }
        const std::vector<std::string>& story_tags() const noexcept { return story_tags_; }

        std::optional<SimpleCommand> match_exact(std::string_view normalized) const;
        std::optional<std::string> match_hit(std::string_view normalized) const;
        std::optional<std::string> match_story(std::string_view normalized) const;

    private:
        std::vector<Exact> exact_;
        std::vector<HitPattern> hits_;
        std::vector<std::string> story_tags_;
    };

    // Trims and collapses every whitespace run to a single ASCII space.
    std::string normalize_comment(std::string_view text);

    Command parse_comment(std::string_view text, bool game_active, const CommandAliases& aliases);

    enum class GiftEffect : std::uint8_t
    {
        Firework,
        StoryEntitlement,
        Rejected,
    };

    inline constexpr Fen kDefaultStoryThreshold = Fen::yuan(10);

    GiftEffect classify_gift(Fen amount, Fen story_threshold = kDefaultStoryThreshold);

} // namespace mrsls
