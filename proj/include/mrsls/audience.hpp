/*
 * Scripted audience: a seeded mix of lotus commands, verse submissions and
 * gifts, played by bot clients against a running server.
 */
#pragma once

#include "mrsls/protocol.hpp"
#include "mrsls/session.hpp"
#include "mrsls/versegame.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace mrsls
{

    struct BotAction
    {
        double at_s = 0.0; // session seconds after the bots start
        std::string feature; // usage bucket: release_lotus, verse, gift_firework, ...
        protocol::ClientMessage message;
    };

    struct BotScript
    {
        std::string name;
        std::vector<BotAction> actions; // sorted, at least kMinGapSeconds apart
    };

    struct AudienceScript
    {
        std::uint64_t seed = 0;
        double duration_s = 0.0;
        std::vector<BotScript> bots;
    };

    inline constexpr double kMinGapSeconds = 1.0;

    struct ScriptParams
    {
        std::uint64_t seed = 7;
        int bots = 40;
        double duration_s = 1200.0;
        std::vector<RoundSchedule> rounds = default_rounds();
        double round_seconds = 300.0;
        int threshold = 20;
    };

    // Pure function of its inputs. For each round the script offers up to
    // threshold + 5 distinct corpus verses carrying a topic token, so a round
    // is won whenever the corpus has more than `threshold` of them.
    AudienceScript make_script(const ScriptParams& params, const Corpus& corpus);

    // Digest of the script's content, for checking reproducibility.
    std::string script_digest(const AudienceScript& script);

    struct BotReport
    {
        std::string name;
        bool connected = false;
        std::uint64_t sent = 0;
        std::uint64_t acks = 0;
        std::uint64_t errors = 0;
        std::string last_error;
    };

    struct AudienceReport
    {
        std::string script_digest;
        int bots = 0;
        int connected = 0;
        double session_seconds = 0.0;
        double wall_seconds = 0.0;
        std::uint64_t events_sent = 0;
        std::uint64_t acks = 0;
        double events_per_sec = 0.0;
        std::uint64_t notices_received = 0;
        std::map<std::string, std::uint64_t> notice_codes;
        std::map<std::string, std::uint64_t> error_codes;
        std::map<std::string, std::uint64_t> feature_usage; // by command, as scripted
        std::vector<std::string> game_outcomes;             // game_won / game_lost in order
        std::vector<BotReport> per_bot;

        bool all_failed() const { return bots > 0 && connected == 0; }
    };

    struct AudienceOptions
    {
        std::string host = "127.0.0.1";
        std::uint16_t port = 7464;
        double speed = 1.0;       // session seconds per wall second
        double linger_s = 2.0;    // wall seconds to keep listening after the last action
        bool wait_for_close = false; // keep listening until the server closes (bounded by linger_s)
    };

    AudienceReport run_audience(const AudienceScript& script, const AudienceOptions& options);

    std::string to_json(const AudienceReport& report);

} // namespace mrsls
