#pragma once

#include "mrsls/chatparse.hpp"
#include "mrsls/currency.hpp"
#include "mrsls/entitysim.hpp"
#include "mrsls/hash.hpp"

#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace mrsls
{

    struct Entitlement
    {
        ViewerId viewer;
        Tick granted_at = 0;
        Tick expires_at = 0;
        bool consumed = false;
    };

    struct LedgerRecord
    {
        ViewerId viewer;
        Fen amount;
        Tick tick = 0;
        GiftEffect effect = GiftEffect::Firework;
    };

    std::string_view effect_name(GiftEffect e);

    // Append-only gift ledger.
    class Ledger
    {
    public:
        void append(LedgerRecord r) { records_.push_back(std::move(r)); }
        const std::vector<LedgerRecord>& records() const noexcept { return records_; }
        Fen total() const;
        Fen total_for(std::string_view viewer) const;

        // One JSON object per line.
        void write_jsonl(std::ostream& out) const;

    private:
        std::vector<LedgerRecord> records_;
    };

    struct GiftOutcome
    {
        GiftEffect effect = GiftEffect::Rejected;
        std::optional<fx::Notice> notice;
    };

    struct StoryOutcome
    {
        bool umbrella = false;
        std::string text; // story to display when `umbrella`
        std::optional<fx::Notice> notice;
    };

    struct EconomyConfig
    {
        Fen story_threshold = kDefaultStoryThreshold;
        Tick entitlement_ticks = 10 * 60 * 30;
    };

    class Economy
    {
    public:
        explicit Economy(EconomyConfig config = {}) : config_(config) {}

        // Non-positive amounts are rejected and leave the ledger untouched.
        GiftOutcome on_gift(const ViewerId& viewer, Fen amount, Tick now);

        // Consumes a live entitlement if there is one.
        StoryOutcome on_story(const ViewerId& viewer, std::string_view text, Tick now);

        const Ledger& ledger() const noexcept { return ledger_; }
        const Entitlement* entitlement_of(std::string_view viewer) const;
        const EconomyConfig& config() const noexcept { return config_; }

        void hash_into(StateHasher& h) const;

    private:
        EconomyConfig config_;
        Ledger ledger_;
        std::map<ViewerId, Entitlement, std::less<>> entitlements_;
    };

} // namespace mrsls
