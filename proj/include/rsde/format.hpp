#pragma once

#include <string>

namespace rsde {

/// Shortest decimal text that round-trips to the same double. Byte-stable
/// across runs, which the deterministic output contract relies on.
std::string format_number(double v);

}  // namespace rsde
