#include "ctxsub/relation.hpp"

#include <algorithm>

namespace ctxsub {

std::string_view to_string(RelationType r) {
    switch (r) {
        case RelationType::Syn: return "syn";
        case RelationType::Hype: return "hype";
        case RelationType::Hypo: return "hypo";
        case RelationType::Cohyp: return "cohyp";
        case RelationType::DistNgh: return "dist";
    }
    return "?";
}

std::optional<RelationType> parse_relation(std::string_view s) {
    for (RelationType r : kAllRelations) {
        if (to_string(r) == s) return r;
    }
    return std::nullopt;
}

std::string to_lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](char c) {
        return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
    });
    return out;
}

bool has_upper(std::string_view s) {
    return std::any_of(s.begin(), s.end(), [](char c) { return c >= 'A' && c <= 'Z'; });
}

}  // namespace ctxsub
