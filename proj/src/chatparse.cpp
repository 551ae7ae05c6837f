#include "mrsls/chatparse.hpp"

#include "mrsls/utf8.hpp"

#include <fstream>
#include <sstream>

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

        bool starts_with(std::string_view s, std::string_view prefix)
        {
            return s.size() >= prefix.size() && s.compare(0, prefix.size(), prefix) == 0;
        }

        bool ends_with(std::string_view s, std::string_view suffix)
        {
            return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
        }

        std::string_view trim_ascii(std::string_view s)
        {
            const auto first = s.find_first_not_of(" \t\r\n");
            if (first == std::string_view::npos)
                return {};
            const auto last = s.find_last_not_of(" \t\r\n");
            return s.substr(first, last - first + 1);
        }

        std::optional<SimpleCommand> simple_from_key(std::string_view key)
        {
            if (key == "release")
                return SimpleCommand::ReleaseLotus;
            if (key == "dash")
                return SimpleCommand::DashLotus;
            if (key == "shine")
                return SimpleCommand::ShineLotus;
            if (key == "feed")
                return SimpleCommand::FeedFish;
            return std::nullopt;
        }
    } // namespace

    std::string_view command_name(const Command& c)
    {
        return std::visit(overloaded{
                              [](const cmd::ReleaseLotus&) { return std::string_view{"release_lotus"}; },
                              [](const cmd::DashLotus&) { return std::string_view{"dash_lotus"}; },
                              [](const cmd::HitLotus&) { return std::string_view{"hit_lotus"}; },
                              [](const cmd::ShineLotus&) { return std::string_view{"shine_lotus"}; },
                              [](const cmd::FeedFish&) { return std::string_view{"feed_fish"}; },
                              [](const cmd::Story&) { return std::string_view{"story"}; },
                              [](const cmd::Verse&) { return std::string_view{"verse"}; },
                              [](const cmd::Plain&) { return std::string_view{"plain"}; },
                          },
                          c);
    }

    Command to_command(SimpleCommand c)
    {
        switch (c)
        {
        case SimpleCommand::ReleaseLotus:
            return cmd::ReleaseLotus{};
        case SimpleCommand::DashLotus:
            return cmd::DashLotus{};
        case SimpleCommand::ShineLotus:
            return cmd::ShineLotus{};
        case SimpleCommand::FeedFish:
            return cmd::FeedFish{};
        }
        return cmd::Plain{};
    }

    std::string normalize_comment(std::string_view text)
    {
        std::string out;
        out.reserve(text.size());
        bool pending_space = false;
        for (char32_t cp : utf8::decode(text))
        {
            if (utf8::is_space(cp))
            {
                pending_space = !out.empty();
                continue;
            }
            if (pending_space)
            {
                out.push_back(' ');
                pending_space = false;
            }
            utf8::append(out, cp);
        }
        return out;
    }

    CommandAliases CommandAliases::defaults()
    {
        CommandAliases a;
        a.add_exact("release lotus", SimpleCommand::ReleaseLotus);
        a.add_exact("dash my lotus", SimpleCommand::DashLotus);
        a.add_exact("shine my lotus", SimpleCommand::ShineLotus);
        a.add_exact("feed fish", SimpleCommand::FeedFish);
        a.add_hit_pattern("hit {id} with my lotus");
        a.add_story_tag("#MyStory");

        a.add_exact("放莲花", SimpleCommand::ReleaseLotus);
        a.add_exact("莲花冲刺", SimpleCommand::DashLotus);
        a.add_exact("点亮莲花", SimpleCommand::ShineLotus);
        a.add_exact("喂鱼", SimpleCommand::FeedFish);
        a.add_hit_pattern("用莲花撞{id}");
        a.add_story_tag("#我的故事");
        return a;
    }

    void CommandAliases::add_exact(std::string_view phrase, SimpleCommand command)
    {
        auto normalized = normalize_comment(phrase);
        if (normalized.empty())
            throw AliasError("empty alias phrase");
        exact_.push_back({std::move(normalized), command});
    }

    void CommandAliases::add_hit_pattern(std::string_view pattern)
    {
        // Normalizing first would swallow the spaces that delimit the id, so
        // split on the placeholder and keep the delimiters verbatim.
        const auto normalized = normalize_comment(pattern);
        const auto at = normalized.find(kIdPlaceholder);
        if (at == std::string::npos)
            throw AliasError("hit pattern '" + std::string(pattern) + "' lacks {id}");
        if (normalized.find(kIdPlaceholder, at + 1) != std::string::npos)
            throw AliasError("hit pattern '" + std::string(pattern) + "' has more than one {id}");
        HitPattern p;
        p.pattern = normalized;
        p.prefix = normalized.substr(0, at);
        p.suffix = normalized.substr(at + kIdPlaceholder.size());
        if (p.prefix.empty() && p.suffix.empty())
            throw AliasError("hit pattern needs text around {id}");
        hits_.push_back(std::move(p));
    }

    void CommandAliases::add_story_tag(std::string_view tag)
    {
        auto normalized = normalize_comment(tag);
        if (normalized.empty())
            throw AliasError("empty story tag");
        story_tags_.push_back(std::move(normalized));
    }

    std::optional<SimpleCommand> CommandAliases::match_exact(std::string_view normalized) const
    {
        const auto folded = utf8::fold_ascii(normalized);
        for (const auto& e : exact_)
        {
            if (utf8::fold_ascii(e.phrase) == folded)
                return e.command;
        }
        return std::nullopt;
    }

    std::optional<std::string> CommandAliases::match_hit(std::string_view normalized) const
    {
        const auto folded = utf8::fold_ascii(normalized);
        for (const auto& h : hits_)
        {
            const auto prefix = utf8::fold_ascii(h.prefix);
            const auto suffix = utf8::fold_ascii(h.suffix);
            if (folded.size() <= prefix.size() + suffix.size())
                continue;
            if (!starts_with(folded, prefix) || !ends_with(folded, suffix))
                continue;
            // Folding is byte-preserving in length, so offsets carry over.
            const auto id = normalize_comment(
                normalized.substr(prefix.size(), normalized.size() - prefix.size() - suffix.size()));
            if (!id.empty())
                return id;
        }
        return std::nullopt;
    }

    std::optional<std::string> CommandAliases::match_story(std::string_view normalized) const
    {
        const auto folded = utf8::fold_ascii(normalized);
        for (const auto& tag : story_tags_)
        {
            const auto t = utf8::fold_ascii(tag);
            if (starts_with(folded, t))
                return normalize_comment(normalized.substr(t.size()));
        }
        return std::nullopt;
    }

    CommandAliases CommandAliases::load(const std::filesystem::path& path)
    {
        std::ifstream in(path, std::ios::binary);
        if (!in)
            throw AliasError("cannot open alias file " + path.string());
        std::ostringstream ss;
        ss << in.rdbuf();
        return parse(ss.str());
    }

    CommandAliases CommandAliases::parse(std::string_view content)
    {
        CommandAliases a;
        std::size_t line_no = 0;
        std::size_t pos = 0;
        while (pos <= content.size())
        {
            auto end = content.find('\n', pos);
            if (end == std::string_view::npos)
                end = content.size();
            const auto raw = content.substr(pos, end - pos);
            pos = end + 1;
            ++line_no;

            const auto line = trim_ascii(raw);
            if (line.empty() || line.front() == '#')
                continue;

            const auto where = "alias file line " + std::to_string(line_no) + ": ";
            const auto eq = line.find('=');
            if (eq == std::string_view::npos)
                throw AliasError(where + "expected 'key = value'");
            const auto key = trim_ascii(line.substr(0, eq));
            const auto value = trim_ascii(line.substr(eq + 1));
            if (value.empty())
                throw AliasError(where + "empty value");

            try
            {
                if (auto simple = simple_from_key(key))
                    a.add_exact(value, *simple);
                else if (key == "hit")
                    a.add_hit_pattern(value);
                else if (key == "story")
                    a.add_story_tag(value);
                else
                    throw AliasError("unknown key '" + std::string(key) + "'");
            }
            catch (const AliasError& e)
            {
                throw AliasError(where + e.what());
            }
        }
        return a;
    }

    Command parse_comment(std::string_view text, bool game_active, const CommandAliases& aliases)
    {
        auto normalized = normalize_comment(text);

        if (auto story = aliases.match_story(normalized))
            return cmd::Story{std::move(*story)};
        if (auto simple = aliases.match_exact(normalized))
            return to_command(*simple);
        if (auto target = aliases.match_hit(normalized))
            return cmd::HitLotus{std::move(*target)};

        if (game_active)
            return cmd::Verse{std::move(normalized)};
        return cmd::Plain{std::move(normalized)};
    }

    GiftEffect classify_gift(Fen amount, Fen story_threshold)
    {
        if (amount.value <= 0)
            return GiftEffect::Rejected;
        return amount < story_threshold ? GiftEffect::Firework : GiftEffect::StoryEntitlement;
    }

} // namespace mrsls
