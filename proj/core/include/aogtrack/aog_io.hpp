#pragma once

#include <iosfwd>

#include "aogtrack/aog.hpp"

namespace aog {

/// Text format, one node per line:
///
///     aog-structure 1
///     grid W H min-part w0 h0 overlap <hexfloat>
///     nodes N
///     <id> <O|A|T> <x> <y> <w> <h> <N|V|H> <cut> <overlap> <source> <k> <child>:<S|C|D|T> ...
///     end
///
/// Edge letters: S switch, C decomposition, D deformation, T termination.
void serialize_aog_structure(const Aog& aog, std::ostream& os);

/// Inverse of serialize_aog_structure. Throws std::runtime_error on malformed
/// input and std::logic_error if the decoded graph violates AOG invariants.
Aog deserialize_aog_structure(std::istream& is);

}  // namespace aog
