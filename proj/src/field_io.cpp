#include "jinv/field_io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "jinv/errors.hpp"

namespace jinv {

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

void write_field(std::ostream& os, const ScalarField& field) {
  os << "JINV-FIELD v1\n";
  os << "N " << field.space->mesh().n() << " order " << field.space->order() << "\n";
  for (Eigen::Index i = 0; i < field.values.size(); ++i) os << format_double(field.values[i]) << "\n";
}

void write_field(const std::filesystem::path& path, const ScalarField& field) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_field(os, field);
}

ScalarField read_field(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != "JINV-FIELD v1")
    throw ConfigError("field file: missing 'JINV-FIELD v1' header");
  if (!std::getline(is, line)) throw ConfigError("field file: missing size line");
  std::istringstream hdr(line);
  std::string nkey, okey;
  int n = 0, order = 0;
  if (!(hdr >> nkey >> n >> okey >> order) || nkey != "N" || okey != "order")
    throw ConfigError("field file: malformed size line '" + line + "'");
  auto space = build_space(build_mesh(n), order);
  Vec v(static_cast<Eigen::Index>(space->num_dofs()));
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (!std::getline(is, line)) throw ConfigError("field file: truncated value list");
    try {
      v[i] = std::stod(line);
    } catch (const std::exception&) {
      throw ConfigError("field file: bad value '" + line + "'");
    }
  }
  return ScalarField(std::move(space), std::move(v));
}

ScalarField read_field(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open field file " + path.string());
  return read_field(is);
}

}  // namespace jinv
