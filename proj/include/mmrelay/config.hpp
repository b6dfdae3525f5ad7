// Flat key = value scenario files. Powers in dBm, noise and interference
// levels in dB relative to the unit noise variance, fading profiles linear.
#pragma once

#include "mmrelay/scenario.hpp"

#include <stdexcept>
#include <string>

namespace mmrelay {

// Message format: "<origin>:<line>: key '<key>': <reason>".
struct ConfigError : std::runtime_error {
  std::string key;
  int line = 0;
  ConfigError(const std::string& what, std::string k, int l)
      : std::runtime_error(what), key(std::move(k)), line(l) {}
};

Scenario parse_config(const std::string& text,
                      const std::string& origin = "<config>");
Scenario load_config(const std::string& path);
std::string to_config_text(const Scenario& s);

}  // namespace mmrelay
