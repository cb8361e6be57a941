#pragma once

#include <string>

namespace posture {

// Dotted-version ordering: segments compare numerically; a segment with mixed
// digits and letters is sub-tokenized into digit/letter runs (digit runs
// numeric, letter runs lexical, digits order before letters); a missing
// trailing segment counts as zero. Total and transitive over arbitrary
// strings. Errc::MalformedVersion on empty input.
int compare_versions(const std::string& a, const std::string& b); // -1, 0, 1

} // namespace posture
