#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "fcsin/frames_io.hpp"
#include "fcsin/u_transformer.hpp"

namespace fcsin {

/// Flat key=value configuration covering the network, losses, optimizer,
/// dataset handling and the guidance extractors. Unknown keys are rejected.
struct Config {
  std::map<std::string, std::string> values;

  Config();  // defaults

  static const std::vector<std::pair<std::string, std::string>>& schema();
  static bool is_known_key(const std::string& key);

  void set(const std::string& key, const std::string& value);
  const std::string& get(const std::string& key) const;
  double get_double(const std::string& key) const;
  int get_int(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  std::vector<double> get_double_list(const std::string& key) const;
  std::vector<int> get_int_list(const std::string& key) const;

  /// Canonical serialization in schema order (the config fingerprint and
  /// the snapshot test read this).
  std::string serialize() const;
  static Config parse(const std::string& text);
  static Config load_file(const std::string& path);

  /// FNV-1a hash of the canonical serialization, hex-encoded.
  std::string fingerprint() const;

  /// Applies `ablate` and `trace.times` and validates.
  NetConfig net_config() const;
  GuidanceParams guidance_params() const;
  AugmentParams augment_params() const;
  SketchizeParams sketchize_params() const;
};

/// Valid values for the `ablate` key.
const std::vector<std::string>& ablation_names();

}  // namespace fcsin
