#pragma once

#include <vector>

#include "hsdn/dataplane.hpp"

namespace hsdn {

// Replaces groups of exact-destination rules that share every other field
// (priority, tag match, predicate, actions, kind, origin) with an equivalent
// smaller set of prefix rules.  The rewrite is exact: any (dst, tag, state)
// lookup matches a rule after compression iff it matched one before, and the
// selected rule carries the same behaviour.  Destinations absent from the
// input keep missing, which is why covers are built only from present
// addresses rather than rounded up to a convenient prefix.
//
// `width` is the address width in bits; all exact matches in `rules` must use
// it.  Rules that are not exact-destination (already-wildcarded, any-dst
// catch-alls) pass through untouched.
std::vector<FlowRule> compress_rules(const std::vector<FlowRule>& rules,
                                     unsigned width, RuleIdGen& ids);

// Minimal set of disjoint prefixes whose union is exactly `values`
// (each value < 2^width).  Greedy largest-block merge; provably minimal for
// disjoint binary prefix covers.
std::vector<DstMatch> prefix_cover(const std::vector<std::uint32_t>& values,
                                   unsigned width);

}  // namespace hsdn
