#include "tsattr/players.hpp"

#include <algorithm>
#include <stdexcept>

#include <json.hpp>

namespace tsattr {

namespace {

void fill_ownership(PlayerSet& ps) {
    ps.ownership.assign(static_cast<std::size_t>(ps.T) * ps.D, -1);
    for (const auto& p : ps.players) {
        for (int t = p.segment.start; t < p.segment.end; ++t) {
            for (int d : p.variables) {
                std::size_t idx = static_cast<std::size_t>(t - 1) * ps.D + (d - 1);
                if (ps.ownership[idx] != -1) {
                    throw std::invalid_argument("players: cell owned by two players");
                }
                ps.ownership[idx] = p.id;
            }
        }
    }
    for (int owner : ps.ownership) {
        if (owner == -1) throw std::invalid_argument("players: cell with no owner");
    }
}

}  // namespace

std::string to_string(PlayerScheme s) {
    switch (s) {
        case PlayerScheme::group_segment: return "group_segment";
        case PlayerScheme::cell: return "cell";
        case PlayerScheme::timestep: return "timestep";
        case PlayerScheme::window: return "window";
        case PlayerScheme::subsequence: return "subsequence";
    }
    throw std::logic_error("unknown player scheme");
}

PlayerScheme player_scheme_from_string(const std::string& s) {
    if (s == "group_segment") return PlayerScheme::group_segment;
    if (s == "cell") return PlayerScheme::cell;
    if (s == "timestep") return PlayerScheme::timestep;
    if (s == "window") return PlayerScheme::window;
    if (s == "subsequence") return PlayerScheme::subsequence;
    throw std::invalid_argument("unknown player scheme: " + s);
}

int PlayerSet::owner(int t, int d) const {
    if (t < 1 || t > T || d < 1 || d > D) {
        throw std::out_of_range("PlayerSet::owner: cell (" + std::to_string(t) + ", " +
                                std::to_string(d) + ") outside " + std::to_string(T) + "x" +
                                std::to_string(D) + " grid");
    }
    return owner_at(t - 1, d - 1);
}

int cell_owner(const PlayerSet& player_set, int t, int d) {
    return player_set.owner(t, d);
}

PlayerSet build_players(const Grouping& grouping,
                        const std::vector<Segmentation>& segmentations, int T, int D) {
    if (T < 1 || D < 1) throw std::invalid_argument("build_players: empty grid");
    if (grouping.n_variables() != D) {
        throw std::invalid_argument("build_players: grouping does not cover D variables");
    }
    std::vector<char> seen(static_cast<std::size_t>(D), 0);
    for (const auto& g : grouping.groups) {
        if (g.empty()) throw std::invalid_argument("build_players: empty group");
        for (int d : g) {
            if (d < 1 || d > D || seen[static_cast<std::size_t>(d - 1)]) {
                throw std::invalid_argument("build_players: grouping is not a partition");
            }
            seen[static_cast<std::size_t>(d - 1)] = 1;
        }
    }
    if (segmentations.size() != grouping.groups.size()) {
        throw std::invalid_argument("build_players: one segmentation per group required");
    }
    for (const auto& seg : segmentations) {
        int expected = 1;
        for (const auto& s : seg.segments) {
            if (s.start != expected || s.end <= s.start) {
                throw std::invalid_argument("build_players: segments must tile [1, T+1)");
            }
            expected = s.end;
        }
        if (expected != T + 1) {
            throw std::invalid_argument("build_players: segments must cover [1, T+1)");
        }
    }

    PlayerSet ps;
    ps.scheme = PlayerScheme::group_segment;
    ps.T = T;
    ps.D = D;
    int id = 0;
    for (std::size_t k = 0; k < grouping.groups.size(); ++k) {
        for (const auto& seg : segmentations[k].segments) {
            Player p;
            p.id = id++;
            p.group_index = static_cast<int>(k);
            p.segment = seg;
            p.variables = grouping.groups[k];
            ps.players.push_back(std::move(p));
        }
    }
    fill_ownership(ps);
    return ps;
}

PlayerSet baseline_players(PlayerScheme scheme, int T, int D,
                           const BaselineSchemeParams& params) {
    if (T < 1 || D < 1) throw std::invalid_argument("baseline_players: empty grid");

    PlayerSet ps;
    ps.scheme = scheme;
    ps.T = T;
    ps.D = D;
    std::vector<int> all_vars(static_cast<std::size_t>(D));
    for (int d = 0; d < D; ++d) all_vars[static_cast<std::size_t>(d)] = d + 1;

    int id = 0;
    switch (scheme) {
        case PlayerScheme::group_segment:
            throw std::invalid_argument("baseline_players: use build_players for group_segment");
        case PlayerScheme::cell:
            for (int t = 1; t <= T; ++t) {
                for (int d = 1; d <= D; ++d) {
                    ps.players.push_back({id++, -1, {t, t + 1}, {d}});
                }
            }
            break;
        case PlayerScheme::timestep:
            for (int t = 1; t <= T; ++t) {
                ps.players.push_back({id++, -1, {t, t + 1}, all_vars});
            }
            break;
        case PlayerScheme::window: {
            if (params.window_len < 1) {
                throw std::invalid_argument("baseline_players: window_len must be >= 1");
            }
            for (int s = 1; s <= T; s += params.window_len) {
                ps.players.push_back({id++, -1, {s, std::min(s + params.window_len, T + 1)}, all_vars});
            }
            break;
        }
        case PlayerScheme::subsequence: {
            if (params.n_subseq < 1 || params.n_subseq > T) {
                throw std::invalid_argument("baseline_players: n_subseq must be in [1, T]");
            }
            int base = T / params.n_subseq;
            int rem = T % params.n_subseq;
            int s = 1;
            for (int j = 0; j < params.n_subseq; ++j) {
                int len = base + (j < rem ? 1 : 0);
                ps.players.push_back({id++, -1, {s, s + len}, all_vars});
                s += len;
            }
            break;
        }
    }
    fill_ownership(ps);
    return ps;
}

std::string player_set_to_json(const PlayerSet& ps) {
    nlohmann::json j;
    j["scheme"] = to_string(ps.scheme);
    j["T"] = ps.T;
    j["D"] = ps.D;
    auto players = nlohmann::json::array();
    for (const auto& p : ps.players) {
        nlohmann::json pj;
        pj["id"] = p.id;
        if (p.group_index >= 0) {
            pj["group"] = p.group_index;
        } else {
            pj["group"] = nullptr;
        }
        pj["segment"] = {p.segment.start, p.segment.end};
        pj["variables"] = p.variables;
        players.push_back(std::move(pj));
    }
    j["players"] = std::move(players);
    return j.dump(2) + "\n";
}

PlayerSet player_set_from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    PlayerSet ps;
    ps.scheme = player_scheme_from_string(j.at("scheme").get<std::string>());
    ps.T = j.at("T").get<int>();
    ps.D = j.at("D").get<int>();
    for (const auto& pj : j.at("players")) {
        Player p;
        p.id = pj.at("id").get<int>();
        p.group_index = pj.at("group").is_null() ? -1 : pj.at("group").get<int>();
        p.segment = {pj.at("segment").at(0).get<int>(), pj.at("segment").at(1).get<int>()};
        p.variables = pj.at("variables").get<std::vector<int>>();
        ps.players.push_back(std::move(p));
    }
    fill_ownership(ps);
    return ps;
}

}  // namespace tsattr
