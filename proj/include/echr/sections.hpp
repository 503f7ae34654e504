#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

namespace echr {

/// Named parts of a judgment. procedure_plus_facts is derived on request and
/// never stored.
enum class SectionKind {
  procedure,
  facts,
  circumstances,
  relevant_law,
  law,
  verdict,
  procedure_plus_facts,
};

inline constexpr std::array<SectionKind, 6> kStoredSections = {
    SectionKind::procedure,    SectionKind::facts, SectionKind::circumstances,
    SectionKind::relevant_law, SectionKind::law,   SectionKind::verdict};

std::string_view to_string(SectionKind kind);
std::optional<SectionKind> section_from_string(std::string_view name);

}  // namespace echr
