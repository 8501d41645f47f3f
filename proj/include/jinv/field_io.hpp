#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "jinv/mesh.hpp"

namespace jinv {

// "JINV-FIELD v1" text format:
//   JINV-FIELD v1
//   N <N> order <1|2>
//   one value per line, dof order, 17 significant digits

void write_field(std::ostream& os, const ScalarField& field);
void write_field(const std::filesystem::path& path, const ScalarField& field);

/// Reads a field and rebuilds its mesh and space.
ScalarField read_field(std::istream& is);
ScalarField read_field(const std::filesystem::path& path);

/// Shortest round-trip decimal text for a double.
std::string format_double(double v);

}  // namespace jinv
