#include "mrsls/versegame.hpp"

#include "mrsls/utf8.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace mrsls
{

    std::string normalize_verse(std::string_view text)
    {
        std::string out;
        out.reserve(text.size());
        for (char32_t cp : utf8::decode(text))
        {
            if (utf8::is_space(cp) || utf8::is_punctuation(cp))
                continue;
            utf8::append(out, cp);
        }
        return out;
    }

    void Corpus::add(CorpusEntry entry)
    {
        entry.verse = normalize_verse(entry.verse);
        if (entry.verse.empty())
            throw CorpusError("empty verse");
        if (index_.contains(entry.verse))
            throw CorpusError("duplicate verse '" + entry.verse + "'");
        index_.emplace(entry.verse, entries_.size());
        entries_.push_back(std::move(entry));
    }

    Corpus Corpus::parse(std::string_view content)
    {
        Corpus corpus;
        std::size_t line_no = 0;
        std::size_t pos = 0;
        while (pos < content.size())
        {
            auto end = content.find('\n', pos);
            if (end == std::string_view::npos)
                end = content.size();
            std::string_view line = content.substr(pos, end - pos);
            pos = end + 1;
            ++line_no;

            if (!line.empty() && line.back() == '\r')
                line.remove_suffix(1);
            if (line.find_first_not_of(" \t") == std::string_view::npos || line.front() == '#')
                continue;

            std::vector<std::string> fields;
            std::size_t start = 0;
            for (;;)
            {
                const auto tab = line.find('\t', start);
                fields.emplace_back(line.substr(start, tab == std::string_view::npos ? tab : tab - start));
                if (tab == std::string_view::npos)
                    break;
                start = tab + 1;
            }

            const auto where = "corpus line " + std::to_string(line_no) + ": ";
            if (fields.size() != 4)
                throw CorpusError(where + "expected 4 tab-separated fields, got " + std::to_string(fields.size()));
            try
            {
                corpus.add({fields[0], fields[1], fields[2], fields[3]});
            }
            catch (const CorpusError& e)
            {
                throw CorpusError(where + e.what());
            }
        }
        return corpus;
    }

    Corpus Corpus::load(const std::filesystem::path& path)
    {
        std::ifstream in(path, std::ios::binary);
        if (!in)
            throw CorpusError("cannot open corpus file " + path.string());
        std::ostringstream ss;
        ss << in.rdbuf();
        return parse(ss.str());
    }

    std::string_view phase_name(GamePhase p)
    {
        switch (p)
        {
        case GamePhase::Idle:
            return "idle";
        case GamePhase::Running:
            return "running";
        case GamePhase::Won:
            return "won";
        case GamePhase::Lost:
            return "lost";
        }
        return "idle";
    }

    std::string_view reason_name(RejectReason r)
    {
        switch (r)
        {
        case RejectReason::NoTopicToken:
            return "no_topic_token";
        case RejectReason::NotInCorpus:
            return "not_in_corpus";
        case RejectReason::Duplicate:
            return "duplicate";
        case RejectReason::GameOver:
            return "game_over";
        }
        return "game_over";
    }

    bool VerseGame::start(std::vector<std::string> topics, Tick now, Effects& effects)
    {
        if (state_.phase != GamePhase::Idle)
        {
            effects.push_back(fx::Notice{std::nullopt, "game_busy", "A verse round is already in progress."});
            return false;
        }

        std::vector<std::string> tokens;
        for (const auto& t : topics)
        {
            auto n = normalize_verse(t);
            if (!n.empty())
                tokens.push_back(std::move(n));
        }
        if (tokens.empty())
            return false;

        state_ = GameState{};
        state_.topics = std::move(tokens);
        state_.started_at = now;
        state_.duration = round_ticks_;
        state_.threshold = threshold_;
        state_.phase = GamePhase::Running;

        std::string label;
        for (const auto& t : state_.topics)
            label += (label.empty() ? "" : " / ") + t;
        effects.push_back(fx::Notice{std::nullopt, "game_started",
                                     "Fei Hua Ling begins! Recite verses containing: " + label});
        return true;
    }

    SubmitResult VerseGame::submit(const Corpus& corpus, const ViewerId& viewer, std::string_view text, Tick now)
    {
        if (state_.phase != GamePhase::Running || now >= state_.expiry())
            return Rejected{RejectReason::GameOver};

        auto verse = normalize_verse(text);
        const bool has_topic = std::any_of(state_.topics.begin(), state_.topics.end(), [&](const std::string& t) {
            return verse.find(t) != std::string::npos;
        });
        if (!has_topic)
            return Rejected{RejectReason::NoTopicToken};
        if (!corpus.contains(verse))
            return Rejected{RejectReason::NotInCorpus};
        if (state_.accepted_set.contains(verse))
            return Rejected{RejectReason::Duplicate};

        state_.accepted_set.insert(verse);
        state_.first_accept.try_emplace(viewer, state_.accepted.size());
        state_.accepted.push_back({std::move(verse), viewer, now});
        ++state_.scores[viewer];
        return Accepted{};
    }

    std::vector<ScoreRow> VerseGame::ranking(std::size_t limit) const
    {
        std::vector<ScoreRow> rows;
        rows.reserve(state_.scores.size());
        for (const auto& [viewer, score] : state_.scores)
            rows.push_back({viewer, score});
        const auto first = [&](const ViewerId& v) { return state_.first_accept.at(v); };
        std::sort(rows.begin(), rows.end(), [&](const ScoreRow& a, const ScoreRow& b) {
            if (a.score != b.score)
                return a.score > b.score;
            return first(a.viewer) < first(b.viewer);
        });
        if (rows.size() > limit)
            rows.resize(limit);
        return rows;
    }

    std::vector<ScoreEntry> VerseGame::scoreboard(const std::function<std::string(const ViewerId&)>& name_of) const
    {
        std::vector<ScoreEntry> out;
        for (const auto& row : ranking(3))
            out.push_back({name_of(row.viewer), row.score});
        return out;
    }

    bool VerseGame::should_finish(Tick now) const
    {
        return state_.phase == GamePhase::Running && (now >= state_.expiry() || state_.count() > state_.threshold);
    }

    GamePhase VerseGame::finish(Tick now, Effects& effects)
    {
        if (!should_finish(now))
            return state_.phase;
        const bool won = state_.count() > state_.threshold;
        state_.phase = won ? GamePhase::Won : GamePhase::Lost;
        const auto summary = std::to_string(state_.count()) + " unique verses (needed more than " +
                             std::to_string(state_.threshold) + ")";
        effects.push_back(won ? fx::Notice{std::nullopt, "game_won", "The audience wins Fei Hua Ling: " + summary}
                              : fx::Notice{std::nullopt, "game_lost", "Time is up: " + summary});
        return state_.phase;
    }

    void VerseGame::reset()
    {
        if (state_.phase == GamePhase::Won || state_.phase == GamePhase::Lost)
            state_.phase = GamePhase::Idle;
    }

    void VerseGame::hash_into(StateHasher& h) const
    {
        h.add(static_cast<int>(state_.phase));
        h.add(static_cast<std::uint64_t>(state_.topics.size()));
        for (const auto& t : state_.topics)
            h.add(t);
        h.add(state_.started_at);
        h.add(state_.duration);
        h.add(state_.threshold);
        h.add(static_cast<std::uint64_t>(state_.accepted.size()));
        for (const auto& a : state_.accepted)
        {
            h.add(a.verse);
            h.add(a.viewer);
            h.add(a.tick);
        }
        for (const auto& [viewer, score] : state_.scores)
        {
            h.add(viewer);
            h.add(score);
        }
    }

} // namespace mrsls
