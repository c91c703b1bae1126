#pragma once

// Field serialization for fixtures and regression tests: raw float64 blob plus
// a JSON sidecar describing the layout.

#include "biharm4/grid.h"

#include <string>

namespace biharm4 {

// Writes base + ".bin" and base + ".json".
void save_field(const Field& f, const std::string& base);
Field load_field(const std::string& base);

} // namespace biharm4
