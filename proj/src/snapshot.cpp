#include "elflow/snapshot.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <nlohmann/json.hpp>

#include "elflow/errors.hpp"

namespace elflow {

namespace {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

void to_little_endian(char* bytes) {
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + 8);
}

}  // namespace

void write_snapshot(const std::filesystem::path& path, const Snapshot& snap) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open snapshot for writing: " + path.string());
  nlohmann::ordered_json header = {{"dim", snap.dim},         {"n", snap.n},       {"L", snap.L},
                                   {"components", snap.components}, {"time", snap.time}, {"name", snap.name}};
  out << header.dump() << '\n';
  char buf[8];
  for (const auto& comp : snap.data)
    for (Eigen::Index p = 0; p < comp.size(); ++p) {
      const double v = comp[p];
      std::memcpy(buf, &v, 8);
      to_little_endian(buf);
      out.write(buf, 8);
    }
  if (!out) throw Error("failed writing snapshot: " + path.string());
}

Snapshot read_snapshot(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open snapshot: " + path.string());
  std::string line;
  std::getline(in, line);
  const auto header = nlohmann::json::parse(line);
  Snapshot s;
  s.dim = header.at("dim").get<int>();
  s.n = header.at("n").get<int>();
  s.L = header.at("L").get<double>();
  s.components = header.at("components").get<int>();
  s.time = header.at("time").get<double>();
  s.name = header.at("name").get<std::string>();
  const Grid g = s.grid();
  char buf[8];
  for (int c = 0; c < s.components; ++c) {
    Eigen::ArrayXd comp(g.points());
    for (Eigen::Index p = 0; p < g.points(); ++p) {
      in.read(buf, 8);
      if (!in) throw Error("truncated snapshot: " + path.string());
      to_little_endian(buf);
      std::memcpy(&comp[p], buf, 8);
    }
    s.data.push_back(std::move(comp));
  }
  return s;
}

VectorField snapshot_to_vector(const Snapshot& snap) {
  if (snap.components != snap.dim) throw Error("snapshot '" + snap.name + "' is not a vector field");
  VectorField v(snap.grid());
  for (int i = 0; i < snap.dim; ++i) v(i) = snap.data[i];
  return v;
}

}  // namespace elflow
