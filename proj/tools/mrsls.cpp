#include "mrsls/audience.hpp"
#include "mrsls/replay_log.hpp"
#include "mrsls/server.hpp"
#include "mrsls/session.hpp"

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using namespace mrsls;

namespace
{

    void setup_logging()
    {
        auto logger = spdlog::stderr_color_mt("mrsls");
        spdlog::set_default_logger(logger);
        spdlog::set_pattern("[%H:%M:%S.%e] [%^%l%$] %v");
        const char* env = std::getenv("MRSLS_LOG");
        spdlog::set_level(env ? spdlog::level::from_str(env) : spdlog::level::info);
    }

    std::string absolute(const std::string& path)
    {
        return path.empty() ? path : fs::absolute(path).lexically_normal().string();
    }

    struct Inputs
    {
        std::string scene;
        std::string corpus;
        std::string aliases;
    };

    Session open_session(const Inputs& in, const SessionConfig& config)
    {
        auto scene = load_scene(in.scene);
        auto corpus = Corpus::load(in.corpus);
        auto aliases = in.aliases.empty() ? CommandAliases::defaults() : CommandAliases::load(in.aliases);
        spdlog::info("scene '{}', {} corpus lines", scene.name, corpus.size());
        return Session(std::move(scene), std::move(corpus), std::move(aliases), config);
    }

    std::vector<RoundSchedule> parse_rounds(const std::vector<std::string>& specs)
    {
        std::vector<RoundSchedule> rounds;
        for (const auto& s : specs)
        {
            auto r = parse_round(s);
            if (!r)
                throw CLI::ValidationError("--round", "expected SECONDS:TOPIC[|TOPIC...], got '" + s + "'");
            rounds.push_back(std::move(*r));
        }
        return rounds;
    }

    void check_digest(const std::string& what, const std::string& path, const std::string& expected)
    {
        if (expected.empty() || path.empty())
            return;
        const auto actual = file_digest(path);
        if (actual != expected)
            throw ReplayError(what + " " + path + " differs from the recorded session (digest " + actual +
                              ", log has " + expected + ")");
    }

    // Reopens the session a replay log describes; explicit paths override the recorded ones.
    Session reopen(const ReplayLog& log, Inputs overrides, std::optional<std::uint64_t> seed)
    {
        const auto& h = log.header;
        Inputs in{overrides.scene.empty() ? h.scene_path : overrides.scene,
                  overrides.corpus.empty() ? h.corpus_path : overrides.corpus,
                  overrides.aliases.empty() ? h.aliases_path : overrides.aliases};
        check_digest("scene", in.scene, h.scene_digest);
        check_digest("corpus", in.corpus, h.corpus_digest);
        check_digest("aliases", in.aliases, h.aliases_digest);
        auto config = h.config;
        if (seed && *seed != config.seed)
        {
            spdlog::warn("replaying with seed {} but the session ran with seed {}", *seed, config.seed);
            config.seed = *seed;
        }
        return open_session(in, config);
    }

} // namespace

int main(int argc, char** argv)
{
    setup_logging();

    CLI::App app{"Authoritative server for an interactive scenic live stream."};
    app.require_subcommand(1);

    Inputs inputs;
    SessionConfig config;
    std::vector<std::string> round_specs;
    std::string log_path;
    std::string hash_path;

    // serve
    auto* serve = app.add_subcommand("serve", "Run a live session.");
    net::ServerOptions server;
    std::optional<double> duration;
    serve->add_option("--scene", inputs.scene, "Scene configuration (JSON)")->required()->check(CLI::ExistingFile);
    serve->add_option("--corpus", inputs.corpus, "Verse corpus (TSV)")->required()->check(CLI::ExistingFile);
    serve->add_option("--aliases", inputs.aliases, "Command alias table; built-in when omitted")
        ->check(CLI::ExistingFile);
    serve->add_option("--seed", config.seed, "Simulation seed")->capture_default_str();
    serve->add_option("--host", server.host, "Listen address")->capture_default_str();
    serve->add_option("--port", server.port, "Listen port (0 picks one)")->capture_default_str();
    serve->add_option("--tick-rate", config.tick_rate, "Ticks per second")
        ->capture_default_str()
        ->check(CLI::Range(1, 1000));
    serve->add_option("--threshold", config.threshold, "Unique verses needed to win (strictly more than)")
        ->capture_default_str()
        ->check(CLI::NonNegativeNumber);
    serve->add_option("--round-seconds", config.round_seconds, "Verse round length")->capture_default_str();
    serve->add_option("--round", round_specs, "Scheduled round SECONDS:TOPIC[|TOPIC]; repeatable")
        ->default_str("60:花 480:杭州|江南");
    serve->add_option("--log", log_path, "Replay log to write")->default_val("mrsls-session.log");
    serve->add_option("--hashes", hash_path, "Write the state hash after every tick");
    serve->add_option("--duration", duration, "Stop after this many simulated seconds");
    serve->add_option("--speed", server.speed, "Simulated seconds per wall second")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    serve->add_option("--max-backlog", server.max_backlog, "Snapshots a client may fall behind")
        ->capture_default_str();

    // replay
    auto* replay_cmd = app.add_subcommand("replay", "Re-run a recorded session and check its state hash.");
    std::string replay_path;
    std::optional<std::uint64_t> replay_seed;
    Inputs replay_inputs;
    replay_cmd->add_option("log", replay_path, "Replay log")->required()->check(CLI::ExistingFile);
    replay_cmd->add_option("--seed", replay_seed, "Seed (defaults to the recorded one)");
    replay_cmd->add_option("--scene", replay_inputs.scene, "Override the recorded scene path");
    replay_cmd->add_option("--corpus", replay_inputs.corpus, "Override the recorded corpus path");
    replay_cmd->add_option("--aliases", replay_inputs.aliases, "Override the recorded alias table path");
    replay_cmd->add_option("--hashes", hash_path, "Write the state hash after every tick");

    // simulate
    auto* simulate = app.add_subcommand("simulate", "Drive scripted bot viewers against a running server.");
    ScriptParams script;
    AudienceOptions audience;
    std::string sim_corpus;
    std::string report_path;
    simulate->add_option("--host", audience.host, "Server address")->capture_default_str();
    simulate->add_option("--port", audience.port, "Server port")->capture_default_str();
    simulate->add_option("--bots", script.bots, "Number of bots")->capture_default_str()->check(CLI::NonNegativeNumber);
    simulate->add_option("--duration", script.duration_s, "Script length in simulated seconds")->capture_default_str();
    simulate->add_option("--seed", script.seed, "Script seed")->capture_default_str();
    simulate->add_option("--speed", audience.speed, "Simulated seconds per wall second (match the server)")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    simulate->add_option("--corpus", sim_corpus, "Verse corpus the bots draw from")
        ->required()
        ->check(CLI::ExistingFile);
    simulate->add_option("--threshold", script.threshold, "Server's verse threshold")->capture_default_str();
    simulate->add_option("--round-seconds", script.round_seconds, "Server's round length")->capture_default_str();
    simulate->add_option("--round", round_specs, "Server's round schedule; repeatable");
    simulate->add_option("--linger", audience.linger_s, "Wall seconds to listen after the last action")
        ->capture_default_str();
    simulate->add_flag("--wait-for-close", audience.wait_for_close, "Listen until the server ends the session");
    simulate->add_option("--out", report_path, "Write the JSON report here instead of stdout");

    // ledger
    auto* ledger = app.add_subcommand("ledger", "Export the gift ledger of a recorded session.");
    std::string ledger_log;
    std::string ledger_out;
    Inputs ledger_inputs;
    ledger->add_option("log", ledger_log, "Replay log")->required()->check(CLI::ExistingFile);
    ledger->add_option("--out", ledger_out, "Output file (JSON lines)")->required();
    ledger->add_option("--scene", ledger_inputs.scene, "Override the recorded scene path");
    ledger->add_option("--corpus", ledger_inputs.corpus, "Override the recorded corpus path");
    ledger->add_option("--aliases", ledger_inputs.aliases, "Override the recorded alias table path");

    CLI11_PARSE(app, argc, argv);

    try
    {
        if (serve->parsed())
        {
            if (!round_specs.empty())
                config.rounds = parse_rounds(round_specs);
            server.duration_s = duration;
            server.log_path = log_path;
            server.hash_path = hash_path;
            server.handle_signals = true;

            ReplayHeader header;
            header.config = config;
            header.scene_path = absolute(inputs.scene);
            header.corpus_path = absolute(inputs.corpus);
            header.aliases_path = absolute(inputs.aliases);
            header.scene_digest = file_digest(header.scene_path);
            header.corpus_digest = file_digest(header.corpus_path);
            if (!inputs.aliases.empty())
                header.aliases_digest = file_digest(header.aliases_path);

            // Every input is loaded before the port is bound.
            auto session = open_session(inputs, config);
            net::Server srv(std::move(session), std::move(header), server);
            spdlog::info("session {} listening on {}:{} (seed {}, {} Hz, speed x{})", srv.session_id(), server.host,
                         srv.port(), config.seed, config.tick_rate, server.speed);
            srv.start();
            srv.wait();
            const auto stats = srv.stats();
            std::cout << "ticks " << stats.ticks << " events " << stats.events << " hash "
                      << hash_hex(stats.final_hash) << '\n';
            return 0;
        }

        if (replay_cmd->parsed())
        {
            const auto log = load_replay(replay_path);
            auto session = reopen(log, replay_inputs, replay_seed);
            const Tick ticks = log.end ? log.end->ticks : (log.events.empty() ? 0 : log.events.back().tick + 1);
            std::ofstream hashes;
            if (!hash_path.empty())
            {
                hashes.open(hash_path);
                if (!hashes)
                    throw ReplayError("cannot write " + hash_path);
            }
            const auto t0 = std::chrono::steady_clock::now();
            const auto hash = replay(session, log.events, ticks, [&](Tick t, std::uint64_t h) {
                if (hashes)
                    hashes << t << ' ' << hash_hex(h) << '\n';
            });
            const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            std::cout << "ticks " << ticks << " events " << log.events.size() << " hash " << hash_hex(hash)
                      << " seconds " << secs << '\n';
            if (!log.end)
            {
                spdlog::warn("log has no end record; nothing to compare against");
                return 0;
            }
            if (log.end->hash != hash)
            {
                spdlog::error("final hash {} differs from the recorded {}", hash_hex(hash), hash_hex(log.end->hash));
                return 1;
            }
            spdlog::info("final hash matches the recorded session");
            return 0;
        }

        if (simulate->parsed())
        {
            if (!round_specs.empty())
                script.rounds = parse_rounds(round_specs);
            const auto corpus = Corpus::load(sim_corpus);
            const auto s = make_script(script, corpus);
            const auto report = run_audience(s, audience);
            const auto text = to_json(report);
            if (report_path.empty())
            {
                std::cout << text << '\n';
            }
            else
            {
                std::ofstream out(report_path);
                out << text << '\n';
                if (!out)
                    throw std::runtime_error("cannot write " + report_path);
            }
            if (report.all_failed())
            {
                spdlog::error("no bot could connect to {}:{}", audience.host, audience.port);
                return 1;
            }
            return 0;
        }

        if (ledger->parsed())
        {
            const auto log = load_replay(ledger_log);
            auto session = reopen(log, ledger_inputs, std::nullopt);
            const Tick ticks = log.end ? log.end->ticks : (log.events.empty() ? 0 : log.events.back().tick + 1);
            replay(session, log.events, ticks);
            std::ofstream out(ledger_out);
            session.economy().ledger().write_jsonl(out);
            if (!out)
                throw std::runtime_error("cannot write " + ledger_out);
            std::cout << "gifts " << session.economy().ledger().records().size() << " total "
                      << format_cny(session.economy().ledger().total()) << " CNY\n";
            return 0;
        }
    }
    catch (const std::exception& e)
    {
        spdlog::error("{}", e.what());
        return 1;
    }
    return 0;
}
