#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "router/device.hpp"

namespace testing {

inline std::filesystem::path device_path() { return std::filesystem::path(ROUTER_DATA_DIR) / "router4.json"; }

inline router::DeviceConfig const &device()
{
  static router::DeviceConfig const d = router::load_device(device_path());
  return d;
}

inline nlohmann::json device_json()
{
  std::ifstream in(device_path());
  return nlohmann::json::parse(in);
}

inline router::DeviceConfig parse(nlohmann::json const &j) { return router::parse_device(j.dump()); }

inline nlohmann::json &mode_json(nlohmann::json &j, std::string const &id)
{
  for (auto &m : j["modes"])
    if (m["id"] == id) return m;
  throw std::runtime_error("no mode " + id);
}

} // namespace testing
