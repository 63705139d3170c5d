#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dann/error.hpp"
#include "dann/numcore/params.hpp"

namespace dann {

// Checkpoint layout: one JSON header line
//   {"format_version":1,"params":[{"name":..,"shape":[..]}..],"seed":..,"config":{..}}
// followed by every parameter's values as little-endian IEEE-754 doubles,
// concatenated in manifest order.

inline constexpr int kCheckpointFormatVersion = 1;

struct Checkpoint {
  nlohmann::json header;
  std::vector<Parameter> params;  // grad left empty

  std::uint64_t seed() const { return header.at("seed").get<std::uint64_t>(); }
  const nlohmann::json& config() const { return header.at("config"); }
};

namespace detail {

inline std::uint64_t to_little_endian(std::uint64_t x) {
  if constexpr (std::endian::native == std::endian::little) {
    return x;
  } else {
    std::uint64_t y = 0;
    for (int i = 0; i < 8; ++i) y |= ((x >> (8 * i)) & 0xFF) << (8 * (7 - i));
    return y;
  }
}

}  // namespace detail

inline void save_checkpoint(std::ostream& os, const ParamStore& store, std::uint64_t seed,
                            const nlohmann::json& config) {
  nlohmann::json header;
  header["format_version"] = kCheckpointFormatVersion;
  header["params"] = nlohmann::json::array();
  for (const Parameter& p : store) header["params"].push_back({{"name", p.name}, {"shape", p.value.shape}});
  header["seed"] = seed;
  header["config"] = config;
  os << header.dump() << '\n';
  for (const Parameter& p : store) {
    for (double v : p.value.data) {
      const std::uint64_t bits = detail::to_little_endian(std::bit_cast<std::uint64_t>(v));
      char buf[8];
      std::memcpy(buf, &bits, 8);
      os.write(buf, 8);
    }
  }
  if (!os) throw Error("checkpoint write failed");
}

inline Checkpoint read_checkpoint(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw ParseError("checkpoint", 1, "missing header line");
  Checkpoint ck;
  try {
    ck.header = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("checkpoint", 1, std::string("bad header: ") + e.what());
  }
  if (ck.header.value("format_version", 0) != kCheckpointFormatVersion) {
    throw ParseError("checkpoint", 1, "unsupported format_version");
  }
  for (const auto& entry : ck.header.at("params")) {
    Parameter p;
    p.name = entry.at("name").get<std::string>();
    p.value = Tensor(entry.at("shape").get<std::vector<std::size_t>>());
    for (double& v : p.value.data) {
      char buf[8];
      if (!is.read(buf, 8)) throw ParseError("checkpoint", 0, "truncated payload in '" + p.name + "'");
      std::uint64_t bits;
      std::memcpy(&bits, buf, 8);
      v = std::bit_cast<double>(detail::to_little_endian(bits));
    }
    ck.params.push_back(std::move(p));
  }
  if (is.peek() != std::char_traits<char>::eof()) {
    throw ParseError("checkpoint", 0, "trailing bytes after payload");
  }
  return ck;
}

/// Copies checkpoint values into a store with an identical manifest.
inline void apply_checkpoint(const Checkpoint& ck, ParamStore& store) {
  if (ck.params.size() != store.size()) {
    throw ContractError("checkpoint has " + std::to_string(ck.params.size()) +
                        " parameters, model has " + std::to_string(store.size()));
  }
  for (std::size_t i = 0; i < store.size(); ++i) {
    Parameter& dst = store.at(i);
    const Parameter& src = ck.params[i];
    if (dst.name != src.name || dst.value.shape != src.value.shape) {
      throw ContractError("checkpoint entry " + src.name + src.value.shape_str() +
                          " does not match model entry " + dst.name + dst.value.shape_str());
    }
    dst.value = src.value;
  }
}

}  // namespace dann
