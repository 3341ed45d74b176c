#include "specinit/serialization.hpp"

#include <fstream>

#include "specinit/errors.hpp"

namespace specinit {

using nlohmann::json;

json estimate_to_json(const RotationSet& rotations, const Matrix* translations) {
  const int d = rotations.d(), n = rotations.n();
  json rs = json::array();
  for (int i = 0; i < n; ++i) {
    json block = json::array();
    for (int r = 0; r < d; ++r)
      for (int c = 0; c < d; ++c) block.push_back(rotations.block(i)(r, c));
    rs.push_back(std::move(block));
  }
  json ts = nullptr;
  if (translations) {
    ts = json::array();
    for (int i = 0; i < n; ++i) {
      json t = json::array();
      for (int r = 0; r < d; ++r) t.push_back((*translations)(r, i));
      ts.push_back(std::move(t));
    }
  }
  return {{"d", d}, {"n", n}, {"rotations", rs}, {"translations", ts}};
}

json estimate_to_json(const PoseSet& poses) {
  return estimate_to_json(poses.rotations, &poses.translations);
}

PoseSet estimate_from_json(const json& j) {
  try {
    const int d = j.at("d").get<int>(), n = j.at("n").get<int>();
    const auto& rs = j.at("rotations");
    if (d <= 0 || n <= 0 || static_cast<int>(rs.size()) != n)
      throw ArgumentError("estimate JSON has inconsistent sizes");
    PoseSet out{RotationSet::identity(d, n), Matrix::Zero(d, n)};
    for (int i = 0; i < n; ++i) {
      if (static_cast<int>(rs[i].size()) != d * d) throw ArgumentError("rotation block has wrong size");
      for (int r = 0; r < d; ++r)
        for (int c = 0; c < d; ++c) out.rotations.block(i)(r, c) = rs[i][r * d + c].get<double>();
    }
    if (j.contains("translations") && !j["translations"].is_null()) {
      const auto& ts = j["translations"];
      if (static_cast<int>(ts.size()) != n) throw ArgumentError("translation list has wrong size");
      for (int i = 0; i < n; ++i)
        for (int r = 0; r < d; ++r) out.translations(r, i) = ts[i].at(r).get<double>();
    }
    return out;
  } catch (const json::exception& ex) {
    throw ArgumentError(std::string("malformed estimate JSON: ") + ex.what());
  }
}

json to_json(const CubeParams& p) {
  return {{"s", p.s},         {"p_lc", p.p_lc}, {"kappa", p.kappa},
          {"tau", p.tau},     {"seed", p.seed}, {"noiseless", p.noiseless}};
}

json ground_truth_to_json(const GroundTruthInstance& inst) {
  json j = estimate_to_json(inst.truth);
  j["params"] = to_json(inst.params);
  j["sampler"] = {{"proposed", inst.sampler.proposed},
                  {"accepted", inst.sampler.accepted},
                  {"acceptance_rate", inst.sampler.acceptance_rate()}};
  return j;
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ArgumentError("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& ex) {
    throw ArgumentError("'" + path + "' is not valid JSON: " + ex.what());
  }
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw ArgumentError("cannot write '" + path + "'");
  out << text;
  if (!out) throw ArgumentError("failed writing '" + path + "'");
}

}  // namespace specinit
