#pragma once

#include <iosfwd>
#include <string>

#include <json.hpp>

#include "gbridge/core/path.hpp"

namespace gbridge {

/// Formats a double with 17 significant digits (round-trip exact).
std::string format_double(double v);

/// CSV with header `time,state` for jump paths (one row at 0, one per jump,
/// and a closing row at T) or `time,x0,x1,...` for grid paths.
void write_path_csv(std::ostream& os, const Path& path);
std::string path_csv(const Path& path);

/// JSON envelope: log_psi, log_constant, sup_V, endpoint_hit, valid, seed, replicate.
nlohmann::json path_envelope(const WeightedPath& wp);

/// Parses the CSV written by write_path_csv back into a path of the given kind.
PiecewiseConstantPath read_jump_path_csv(std::istream& is);

}  // namespace gbridge
