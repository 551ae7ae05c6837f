#include "mrsls/economy.hpp"

#include <json.hpp>

namespace mrsls
{

    std::string_view effect_name(GiftEffect e)
    {
        switch (e)
        {
        case GiftEffect::Firework:
            return "firework";
        case GiftEffect::StoryEntitlement:
            return "story_entitlement";
        case GiftEffect::Rejected:
            return "rejected";
        }
        return "rejected";
    }

    Fen Ledger::total() const
    {
        Fen sum;
        for (const auto& r : records_)
            sum += r.amount;
        return sum;
    }

    Fen Ledger::total_for(std::string_view viewer) const
    {
        Fen sum;
        for (const auto& r : records_)
        {
            if (r.viewer == viewer)
                sum += r.amount;
        }
        return sum;
    }

    void Ledger::write_jsonl(std::ostream& out) const
    {
        for (const auto& r : records_)
        {
            nlohmann::ordered_json j;
            j["viewer"] = r.viewer;
            j["amount"] = format_cny(r.amount);
            j["fen"] = r.amount.value;
            j["tick"] = r.tick;
            j["effect"] = effect_name(r.effect);
            out << j.dump() << '\n';
        }
    }

    GiftOutcome Economy::on_gift(const ViewerId& viewer, Fen amount, Tick now)
    {
        GiftOutcome out;
        out.effect = classify_gift(amount, config_.story_threshold);
        if (out.effect == GiftEffect::Rejected)
        {
            out.notice = fx::Notice{viewer, "gift_rejected", "Gift amount must be positive."};
            return out;
        }

        ledger_.append({viewer, amount, now, out.effect});
        if (out.effect == GiftEffect::StoryEntitlement)
        {
            // A new grant replaces any unconsumed one.
            entitlements_[viewer] = Entitlement{viewer, now, now + config_.entitlement_ticks, false};
            out.notice = fx::Notice{viewer, "story_granted",
                                    "Thank you! Share your story with #MyStory to float it on an umbrella."};
        }
        return out;
    }

    StoryOutcome Economy::on_story(const ViewerId& viewer, std::string_view text, Tick now)
    {
        StoryOutcome out;
        const auto it = entitlements_.find(viewer);
        const bool live = it != entitlements_.end() && !it->second.consumed && now < it->second.expires_at;
        if (!live)
        {
            out.notice = fx::Notice{viewer, "story_requires_gift",
                                    "Stories are unlocked by a gift of " + format_cny(config_.story_threshold) +
                                        " CNY or more."};
            return out;
        }
        if (text.empty())
        {
            out.notice = fx::Notice{viewer, "story_empty", "Write your story after the hashtag."};
            return out;
        }
        it->second.consumed = true;
        out.umbrella = true;
        out.text = std::string(text);
        return out;
    }

    const Entitlement* Economy::entitlement_of(std::string_view viewer) const
    {
        const auto it = entitlements_.find(viewer);
        return it == entitlements_.end() ? nullptr : &it->second;
    }

    void Economy::hash_into(StateHasher& h) const
    {
        h.add(static_cast<std::uint64_t>(ledger_.records().size()));
        for (const auto& r : ledger_.records())
        {
            h.add(r.viewer);
            h.add(r.amount.value);
            h.add(r.tick);
            h.add(static_cast<int>(r.effect));
        }
        for (const auto& [viewer, e] : entitlements_)
        {
            h.add(viewer);
            h.add(e.granted_at);
            h.add(e.expires_at);
            h.add(e.consumed);
        }
    }

} // namespace mrsls
