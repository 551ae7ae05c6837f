#include "mrsls/chatparse.hpp"
#include "mrsls/rng.hpp"
#include "mrsls/utf8.hpp"

#include <doctest.h>

#include <string>
#include <vector>

using namespace mrsls;

namespace
{
    const CommandAliases& aliases()
    {
        static const CommandAliases a = CommandAliases::defaults();
        return a;
    }

    Command parse(std::string_view text, bool game = false) { return parse_comment(text, game, aliases()); }
} // namespace

TEST_CASE("english lotus commands")
{
    CHECK(parse("release lotus") == Command{cmd::ReleaseLotus{}});
    CHECK(parse("dash my lotus") == Command{cmd::DashLotus{}});
    CHECK(parse("shine my lotus") == Command{cmd::ShineLotus{}});
    CHECK(parse("feed fish") == Command{cmd::FeedFish{}});
    CHECK(parse("hit Alice with my lotus") == Command{cmd::HitLotus{"Alice"}});
}

TEST_CASE("chinese aliases")
{
    CHECK(parse("放莲花") == Command{cmd::ReleaseLotus{}});
    CHECK(parse("莲花冲刺") == Command{cmd::DashLotus{}});
    CHECK(parse("点亮莲花") == Command{cmd::ShineLotus{}});
    CHECK(parse("喂鱼") == Command{cmd::FeedFish{}});
    CHECK(parse("用莲花撞小明") == Command{cmd::HitLotus{"小明"}});
    CHECK(parse("#我的故事 在西湖边长大") == Command{cmd::Story{"在西湖边长大"}});
}

TEST_CASE("latin case and whitespace are forgiven")
{
    CHECK(parse("  Release   LOTUS ") == Command{cmd::ReleaseLotus{}});
    CHECK(parse("Feed\tFish\n") == Command{cmd::FeedFish{}});
    CHECK(parse("HIT  Bob   WITH my lotus") == Command{cmd::HitLotus{"Bob"}});
    // The id keeps its own case.
    CHECK(parse("hit bOb with my lotus") == Command{cmd::HitLotus{"bOb"}});
}

TEST_CASE("near misses are not commands")
{
    CHECK(parse("release lotuses") == Command{cmd::Plain{"release lotuses"}});
    CHECK(parse("please feed fish") == Command{cmd::Plain{"please feed fish"}});
    CHECK(parse("hit with my lotus") == Command{cmd::Plain{"hit with my lotus"}});
    CHECK(parse("放 莲花") == Command{cmd::Plain{"放 莲花"}});
}

TEST_CASE("story tag")
{
    CHECK(parse("#MyStory I grew up by this lake") == Command{cmd::Story{"I grew up by this lake"}});
    CHECK(parse("#mystory  two   spaces") == Command{cmd::Story{"two spaces"}});
    CHECK(parse("#MyStory") == Command{cmd::Story{""}});
    CHECK(parse("#MyStory 我的故事", true) == Command{cmd::Story{"我的故事"}});
}

TEST_CASE("non-commands become verses only while a round runs")
{
    CHECK(parse("接天莲叶无穷碧", true) == Command{cmd::Verse{"接天莲叶无穷碧"}});
    CHECK(parse("接天莲叶无穷碧", false) == Command{cmd::Plain{"接天莲叶无穷碧"}});
    // Commands still win during a round.
    CHECK(parse("feed fish", true) == Command{cmd::FeedFish{}});
}

TEST_CASE("hit ids of one to three tokens, every alias pattern")
{
    const std::vector<std::string> tokens{"a", "Bob", "小明", "x_1", "Ω", "莲"};
    std::vector<std::string> ids;
    for (const auto& t1 : tokens)
    {
        ids.push_back(t1);
        for (const auto& t2 : tokens)
        {
            ids.push_back(t1 + " " + t2);
            for (const auto& t3 : tokens)
                ids.push_back(t1 + " " + t2 + " " + t3);
        }
    }
    REQUIRE(ids.size() == 6 + 36 + 216);

    for (const auto& p : aliases().hit_patterns())
    {
        for (const auto& id : ids)
        {
            const auto text = p.prefix + id + p.suffix;
            const auto c = parse(text);
            REQUIRE_MESSAGE(std::holds_alternative<cmd::HitLotus>(c), text);
            CHECK(std::get<cmd::HitLotus>(c).target == id);
        }
    }
}

TEST_CASE("normalization is idempotent and total on random bytes")
{
    Rng rng(99);
    for (int i = 0; i < 5000; ++i)
    {
        std::string s(rng.below(40), '\0');
        for (auto& c : s)
            c = static_cast<char>(rng.below(256));
        const auto once = normalize_comment(s);
        CHECK(normalize_comment(once) == once);
        CHECK_NOTHROW(parse_comment(s, rng.below(2) == 1, aliases()));
    }
}

TEST_CASE("alias file parsing")
{
    const auto a = CommandAliases::parse("# comment\n"
                                         "\n"
                                         "release = plant a lotus\n"
                                         "dash = zoom\n"
                                         "shine = glow\n"
                                         "feed = fish food\n"
                                         "hit = bonk {id}!\n"
                                         "story = #tale\n");
    CHECK(parse_comment("Plant A Lotus", false, a) == Command{cmd::ReleaseLotus{}});
    CHECK(parse_comment("zoom", false, a) == Command{cmd::DashLotus{}});
    CHECK(parse_comment("glow", false, a) == Command{cmd::ShineLotus{}});
    CHECK(parse_comment("fish food", false, a) == Command{cmd::FeedFish{}});
    CHECK(parse_comment("bonk Carol!", false, a) == Command{cmd::HitLotus{"Carol"}});
    CHECK(parse_comment("#tale once", false, a) == Command{cmd::Story{"once"}});
    CHECK(parse_comment("release lotus", false, a) == Command{cmd::Plain{"release lotus"}});
}

TEST_CASE("shipped alias file matches the built-in table")
{
    const auto file = CommandAliases::load(std::string(MRSLS_DATA_DIR) + "/aliases.txt");
    const auto& d = aliases();
    REQUIRE(file.exact().size() == d.exact().size());
    for (std::size_t i = 0; i < d.exact().size(); ++i)
    {
        CHECK(file.exact()[i].phrase == d.exact()[i].phrase);
        CHECK(file.exact()[i].command == d.exact()[i].command);
    }
    REQUIRE(file.hit_patterns().size() == d.hit_patterns().size());
    for (std::size_t i = 0; i < d.hit_patterns().size(); ++i)
        CHECK(file.hit_patterns()[i].pattern == d.hit_patterns()[i].pattern);
    CHECK(file.story_tags() == d.story_tags());
}

TEST_CASE("alias file errors carry line numbers")
{
    auto message = [](std::string_view text) {
        try
        {
            CommandAliases::parse(text);
        }
        catch (const AliasError& e)
        {
            return std::string(e.what());
        }
        return std::string("no error");
    };
    CHECK(message("release = x\nnonsense\n").find("line 2") != std::string::npos);
    CHECK(message("\n\nwhatever = x\n").find("line 3") != std::string::npos);
    CHECK(message("hit = no placeholder\n").find("line 1") != std::string::npos);
    CHECK(message("hit = {id} and {id}\n").find("more than one") != std::string::npos);
    CHECK(message("hit = {id}\n").find("text around") != std::string::npos);
    CHECK(message("story =\n").find("empty value") != std::string::npos);
    CHECK_THROWS_AS(CommandAliases::load("/nonexistent/aliases.txt"), AliasError);
}

TEST_CASE("gift tiers")
{
    CHECK(classify_gift(Fen{1}) == GiftEffect::Firework);
    CHECK(classify_gift(Fen{500}) == GiftEffect::Firework);
    CHECK(classify_gift(Fen{999}) == GiftEffect::Firework);
    CHECK(classify_gift(Fen{1000}) == GiftEffect::StoryEntitlement);
    CHECK(classify_gift(Fen{1500}) == GiftEffect::StoryEntitlement);
    CHECK(classify_gift(Fen{0}) == GiftEffect::Rejected);
    CHECK(classify_gift(Fen{-100}) == GiftEffect::Rejected);
    CHECK(classify_gift(Fen{1500}, Fen::yuan(20)) == GiftEffect::Firework);
}

TEST_CASE("currency parsing")
{
    CHECK(parse_cny("15") == Fen{1500});
    CHECK(parse_cny("15.5") == Fen{1550});
    CHECK(parse_cny("15.00") == Fen{1500});
    CHECK(parse_cny("0.01") == Fen{1});
    CHECK(parse_cny("-2.50") == Fen{-250});
    CHECK_FALSE(parse_cny("15.001"));
    CHECK_FALSE(parse_cny("abc"));
    CHECK_FALSE(parse_cny(""));
    CHECK_FALSE(parse_cny("1e3"));
    CHECK(format_cny(Fen{1500}) == "15.00");
    CHECK(format_cny(Fen{5}) == "0.05");
    CHECK(format_cny(Fen{-250}) == "-2.50");
}

TEST_CASE("utf8 helpers")
{
    CHECK(utf8::length("莲花a") == 3);
    CHECK(utf8::decode("\xff")[0] == utf8::kReplacement);
    CHECK(utf8::encode(utf8::decode("西湖 lotus")) == "西湖 lotus");
    CHECK(utf8::fold_ascii("AbC莲") == "abc莲");
    CHECK(utf8::truncate_with_ellipsis("abcdef", 4) == "abc…");
    CHECK(utf8::truncate_with_ellipsis("abcd", 4) == "abcd");
}
