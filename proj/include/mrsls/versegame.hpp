#pragma once

#include "mrsls/chatparse.hpp"
#include "mrsls/entitysim.hpp"
#include "mrsls/hash.hpp"

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace mrsls
{

    // Removes all whitespace and punctuation; keeps every other character.
    std::string normalize_verse(std::string_view text);

    struct CorpusEntry
    {
        std::string verse; // normalized
        std::string title;
        std::string author;
        std::string dynasty;
    };

    class CorpusError : public std::runtime_error
    {
    public:
        using std::runtime_error::runtime_error;
    };

    // Verse lines accepted by the game. Records are
    // verse<TAB>title<TAB>author<TAB>dynasty; blank and '#' lines are skipped.
    class Corpus
    {
    public:
        Corpus() = default;

        static Corpus load(const std::filesystem::path& path);
        static Corpus parse(std::string_view content);

        void add(CorpusEntry entry);

        bool contains(std::string_view normalized) const { return index_.contains(std::string(normalized)); }
        const std::vector<CorpusEntry>& entries() const noexcept { return entries_; }
        std::size_t size() const noexcept { return entries_.size(); }

    private:
        std::vector<CorpusEntry> entries_;
        std::unordered_map<std::string, std::size_t> index_;
    };

    enum class GamePhase : std::uint8_t
    {
        Idle,
        Running,
        Won,
        Lost,
    };
    std::string_view phase_name(GamePhase p);

    enum class RejectReason : std::uint8_t
    {
        NoTopicToken,
        NotInCorpus,
        Duplicate,
        GameOver,
    };
    std::string_view reason_name(RejectReason r);

    struct AcceptedVerse
    {
        std::string verse;
        ViewerId viewer;
        Tick tick = 0;
    };

    struct GameState
    {
        std::vector<std::string> topics; // any token matches
        Tick started_at = 0;
        Tick duration = 0;
        std::vector<AcceptedVerse> accepted;
        std::set<std::string> accepted_set;
        std::map<ViewerId, int> scores;
        std::map<ViewerId, std::size_t> first_accept; // index into accepted
        int threshold = 20;
        GamePhase phase = GamePhase::Idle;

        Tick expiry() const { return started_at + duration; }
        int count() const { return static_cast<int>(accepted.size()); }
    };

    struct Accepted
    {
        int score_delta = 1;
    };
    struct Rejected
    {
        RejectReason reason;
    };
    using SubmitResult = std::variant<Accepted, Rejected>;

    struct ScoreRow
    {
        ViewerId viewer;
        int score = 0;
    };

    class VerseGame
    {
    public:
        static constexpr double kDefaultRoundSeconds = 300.0;

        VerseGame(int threshold, Tick round_ticks) : threshold_(threshold), round_ticks_(round_ticks)
        {
            state_.threshold = threshold;
        }

        const GameState& state() const noexcept { return state_; }
        bool running() const noexcept { return state_.phase == GamePhase::Running; }

        // Rejected with a notice unless Idle.
        bool start(std::vector<std::string> topics, Tick now, Effects& effects);

        SubmitResult submit(const Corpus& corpus, const ViewerId& viewer, std::string_view text, Tick now);

        // Descending score, ties by earlier first acceptance; at most `limit` rows.
        std::vector<ScoreRow> ranking(std::size_t limit = 3) const;
        std::vector<ScoreEntry> scoreboard(const std::function<std::string(const ViewerId&)>& name_of) const;

        bool should_finish(Tick now) const;

        // Running -> Won/Lost. The finale carries the top three rows.
        GamePhase finish(Tick now, Effects& effects);

        // Won/Lost -> Idle.
        void reset();

        void hash_into(StateHasher& h) const;

    private:
        int threshold_;
        Tick round_ticks_;
        GameState state_;
    };

} // namespace mrsls
