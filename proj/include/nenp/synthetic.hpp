#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nenp/core.hpp"

namespace nenp {

/// Domains share function words, person names and place names but use disjoint organisation
/// cues and multiword place names.
enum class Domain { a, b };

Domain parse_domain(std::string const& name);

/// PER, ORG, LOC.
LabelSet synthetic_labels();

/// Templated nested-NER sentences with ids "<prefix><k>". Identical seeds give identical output.
std::vector<AnnotatedSentence> generate_synthetic(std::uint64_t seed, int count, Domain domain,
                                                  std::string const& id_prefix = "s");

/// Fraction of sentences with at least one entity nested inside another.
double nested_sentence_rate(std::vector<AnnotatedSentence> const& data);

/// Nesting depth of the deepest entity (1 for flat entities, 0 when there are none).
int max_entity_depth(EntitySet const& entities);

} // namespace nenp
