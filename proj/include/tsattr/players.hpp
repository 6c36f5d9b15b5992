#pragma once

#include <string>
#include <vector>

#include "tsattr/grouping.hpp"
#include "tsattr/segmentation.hpp"
#include "tsattr/types.hpp"

namespace tsattr {

enum class PlayerScheme { group_segment, cell, timestep, window, subsequence };

std::string to_string(PlayerScheme s);
PlayerScheme player_scheme_from_string(const std::string& s);

// One explanation unit: the rectangle {t in segment} x {d in variables}.
struct Player {
    int id = 0;
    int group_index = -1;  // -1 for the schemes without feature groups
    Segment segment;
    std::vector<int> variables;  // 1-based, ascending

    int cell_count() const {
        return segment.length() * static_cast<int>(variables.size());
    }
};

// A partition of the T x D cell grid into players: every cell has exactly one
// owner. Immutable after construction.
struct PlayerSet {
    PlayerScheme scheme = PlayerScheme::group_segment;
    int T = 0;
    int D = 0;
    std::vector<Player> players;
    std::vector<int> ownership;  // row-major: (t-1) * D + (d-1) -> player id

    int size() const { return static_cast<int>(players.size()); }

    // Owner of the 1-based cell (t, d); rejects out-of-range indices.
    int owner(int t, int d) const;

    // 0-based fast path used by the masking inner loops.
    int owner_at(int t0, int d0) const { return ownership[static_cast<std::size_t>(t0) * D + d0]; }
};

// Combines a grouping with per-group segmentations into group-segment players.
// Ids are assigned in (group ascending, segment start ascending) order.
PlayerSet build_players(const Grouping& grouping,
                        const std::vector<Segmentation>& segmentations, int T, int D);

// Owner of cell (t, d) under the set's partition (1-based, total on the grid).
int cell_owner(const PlayerSet& player_set, int t, int d);

struct BaselineSchemeParams {
    int window_len = 0;  // window scheme
    int n_subseq = 0;    // subsequence scheme
};

// Player definitions used by the comparison schemes: per-cell singletons,
// per-time-step rows, fixed-length windows (last may be short), or n_subseq
// equal subsequences with the remainder spread over the earliest blocks.
PlayerSet baseline_players(PlayerScheme scheme, int T, int D,
                           const BaselineSchemeParams& params = {});

std::string player_set_to_json(const PlayerSet& ps);
PlayerSet player_set_from_json(const std::string& text);

}  // namespace tsattr
