// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

#include "mtdfl/tensorkit/core.hpp"

namespace mtdfl::tk {

// Text format:
//   mtdfl-checkpoint v1
//   kind <model kind>
//   shape <shape string>
//   count <n>
//   <n values, one per line, round-trip precision>

inline constexpr const char* kCheckpointMagic = "mtdfl-checkpoint v1";

template <typename Scalar>
void write_checkpoint(std::ostream& os, const std::string& kind, const std::string& shape, const Vec<Scalar>& p) {
  os << kCheckpointMagic << "\nkind " << kind << "\nshape " << shape << "\ncount " << p.size() << "\n";
  os << std::setprecision(17);
  for (Eigen::Index i = 0; i < p.size(); ++i) os << static_cast<double>(p[i]) << "\n";
  if (!os) throw IoError("failed writing checkpoint");
}

template <typename Scalar>
Vec<Scalar> read_checkpoint(std::istream& is, const std::string& kind, const std::string& shape) {
  std::string line;
  if (!std::getline(is, line) || line != kCheckpointMagic) throw ParseError("not a checkpoint (bad header)");
  auto field = [&](const std::string& key) {
    if (!std::getline(is, line) || line.rfind(key + " ", 0) != 0) throw ParseError("checkpoint: expected '" + key + "'");
    return line.substr(key.size() + 1);
  };
  if (const auto k = field("kind"); k != kind) throw ShapeError("checkpoint kind '" + k + "' != '" + kind + "'");
  if (const auto s = field("shape"); s != shape) throw ShapeError("checkpoint shape '" + s + "' != '" + shape + "'");
  const long n = std::stol(field("count"));
  Vec<Scalar> p(n);
  for (long i = 0; i < n; ++i) {
    double v;
    if (!(is >> v)) throw ParseError("checkpoint truncated at value " + std::to_string(i));
    p[i] = static_cast<Scalar>(v);
  }
  return p;
}

template <typename Model>
void save_model(const std::string& path, const std::string& kind, const Model& m) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open '" + path + "' for writing");
  write_checkpoint(os, kind, m.shape_string(), m.params());
}

template <typename Model>
void load_model(const std::string& path, const std::string& kind, Model& m) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open '" + path + "'");
  using Scalar = typename std::decay_t<decltype(m.params())>::Scalar;
  m.set_params(read_checkpoint<Scalar>(is, kind, m.shape_string()));
}

}  // namespace mtdfl::tk
