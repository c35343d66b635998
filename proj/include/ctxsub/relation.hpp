#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

namespace ctxsub {

enum class RelationType { Syn = 0, Hype = 1, Hypo = 2, Cohyp = 3, DistNgh = 4 };

inline constexpr std::array<RelationType, 5> kAllRelations = {
    RelationType::Syn, RelationType::Hype, RelationType::Hypo, RelationType::Cohyp,
    RelationType::DistNgh};

inline constexpr std::array<RelationType, 4> kWordNetRelations = {
    RelationType::Syn, RelationType::Hype, RelationType::Hypo, RelationType::Cohyp};

constexpr std::size_t index_of(RelationType r) { return static_cast<std::size_t>(r); }

constexpr bool is_wordnet(RelationType r) { return r != RelationType::DistNgh; }

std::string_view to_string(RelationType r);
std::optional<RelationType> parse_relation(std::string_view s);

/// ASCII lowercase fold. Non-ASCII bytes pass through unchanged.
std::string to_lower(std::string_view s);
bool has_upper(std::string_view s);

/// Canonical tie order: lexicographic on the UTF-8 bytes.
inline bool canonical_less(std::string_view a, std::string_view b) { return a < b; }

}  // namespace ctxsub
