#include "fcsin/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace fcsin {

const std::vector<std::pair<std::string, std::string>>& Config::schema() {
  // key -> default; order fixes the canonical serialization
  static const std::vector<std::pair<std::string, std::string>> s = {
      {"net.channels", "24"},
      {"net.scales", "3"},
      {"net.window", "8"},
      {"net.heads", "2"},
      {"net.channel_cap", "96"},
      {"trace.times", "0.5"},
      {"ablate", "none"},
      {"loss.lambda_l1", "70"},
      {"loss.lambda_lpips", "30"},
      {"loss.lpips_seed", "77"},
      {"optim.lr", "0.0002"},
      {"optim.beta1", "0.9"},
      {"optim.beta2", "0.999"},
      {"optim.weight_decay", "0.0001"},
      {"optim.decay_mode", "param"},  // param | lr
      {"train.batch", "4"},
      {"train.epochs", "50"},
      {"train.seed", "1"},
      {"train.augment", "1"},
      {"train.crop_w", "384"},
      {"train.crop_h", "192"},
      {"train.checkpoint_every", "1"},
      {"train.out_dir", "runs/default"},
      {"data.root", "data"},
      {"flow.levels", "3"},
      {"flow.block", "8"},
      {"flow.radius", "4"},
      {"kp.max", "512"},
      {"kp.theta", "0.5"},
      {"kp.tau", "0.5"},
      {"kp.sigma_xy_frac", "0.25"},
      {"region.accept", "1.5"},
      {"region.radii", "4,3,2,1"},
      {"sketch.min_stroke_px", "12"},
      {"sketch.dog_sigma1", "1.0"},
      {"sketch.dog_sigma2", "1.6"},
      {"sketch.antialias_sigma", "0"},
  };
  return s;
}

Config::Config() {
  for (const auto& [k, v] : schema()) values[k] = v;
}

bool Config::is_known_key(const std::string& key) {
  for (const auto& [k, v] : schema())
    if (k == key) return true;
  return false;
}

void Config::set(const std::string& key, const std::string& value) {
  if (!is_known_key(key)) throw ContractError("unknown config key: " + key);
  values[key] = value;
}

const std::string& Config::get(const std::string& key) const {
  auto it = values.find(key);
  if (it == values.end()) throw ContractError("unknown config key: " + key);
  return it->second;
}

double Config::get_double(const std::string& key) const {
  try {
    size_t pos = 0;
    double v = std::stod(get(key), &pos);
    if (pos != get(key).size()) throw std::invalid_argument("");
    return v;
  } catch (const std::exception&) {
    throw ContractError("config key " + key + " is not a number: " + get(key));
  }
}

int Config::get_int(const std::string& key) const {
  try {
    size_t pos = 0;
    int v = std::stoi(get(key), &pos);
    if (pos != get(key).size()) throw std::invalid_argument("");
    return v;
  } catch (const std::exception&) {
    throw ContractError("config key " + key + " is not an integer: " + get(key));
  }
}

bool Config::get_bool(const std::string& key) const {
  const std::string& v = get(key);
  if (v == "1" || v == "true" || v == "yes") return true;
  if (v == "0" || v == "false" || v == "no") return false;
  throw ContractError("config key " + key + " is not a boolean: " + v);
}

std::vector<double> Config::get_double_list(const std::string& key) const {
  std::vector<double> out;
  std::stringstream ss(get(key));
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    out.push_back(std::stod(item));
  }
  return out;
}

std::vector<int> Config::get_int_list(const std::string& key) const {
  std::vector<int> out;
  for (double v : get_double_list(key)) out.push_back(int(v));
  return out;
}

std::string Config::serialize() const {
  std::ostringstream os;
  for (const auto& [k, def] : schema()) os << k << "=" << values.at(k) << "\n";
  return os.str();
}

Config Config::parse(const std::string& text) {
  Config c;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    auto notspace = [](unsigned char ch) { return !std::isspace(ch); };
    line.erase(line.begin(), std::find_if(line.begin(), line.end(), notspace));
    line.erase(std::find_if(line.rbegin(), line.rend(), notspace).base(), line.end());
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ContractError("config line " + std::to_string(lineno) + ": expected key=value");
    std::string key = line.substr(0, eq);
    std::string val = line.substr(eq + 1);
    key.erase(std::find_if(key.rbegin(), key.rend(), notspace).base(), key.end());
    val.erase(val.begin(), std::find_if(val.begin(), val.end(), notspace));
    c.set(key, val);
  }
  return c;
}

Config Config::load_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open config: " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return parse(ss.str());
}

std::string Config::fingerprint() const {
  uint64_t h = 1469598103934665603ull;
  for (char c : serialize()) {
    h ^= uint64_t(uint8_t(c));
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

const std::vector<std::string>& ablation_names() {
  static const std::vector<std::string> names = {"none", "no-pixel", "no-sketch",
                                                 "no-region", "no-ccb"};
  return names;
}

NetConfig Config::net_config() const {
  NetConfig n;
  n.channels = get_int("net.channels");
  n.scales = get_int("net.scales");
  n.window = get_int("net.window");
  n.heads = get_int("net.heads");
  n.channel_cap = get_int("net.channel_cap");
  n.trace_times = get_double_list("trace.times");

  const std::string& ab = get("ablate");
  if (std::find(ablation_names().begin(), ablation_names().end(), ab) ==
      ablation_names().end()) {
    std::string valid;
    for (const auto& name : ablation_names()) valid += name + " ";
    throw ContractError("invalid ablation '" + ab + "'; valid: " + valid);
  }
  if (ab == "no-pixel") {
    n.use_pixel = false;
  } else if (ab == "no-sketch") {
    // removing sketch correspondence also removes both CCB streams
    n.use_sketch = false;
    n.stream_ccb0 = n.stream_ccb1 = false;
  } else if (ab == "no-region") {
    n.use_region = false;
  } else if (ab == "no-ccb") {
    n.stream_ccb0 = n.stream_ccb1 = false;
  }
  n.validate();
  return n;
}

GuidanceParams Config::guidance_params() const {
  GuidanceParams gp;
  gp.flow.levels = get_int("flow.levels");
  gp.flow.block = get_int("flow.block");
  gp.flow.radius = get_int("flow.radius");
  gp.kp.max_n = get_int("kp.max");
  gp.kp_theta = get_double("kp.theta");
  gp.kp_tau = get_double("kp.tau");
  gp.kp_sigma_xy_frac = get_double("kp.sigma_xy_frac");
  gp.region_radii = get_int_list("region.radii");
  gp.region_accept = get_double("region.accept");
  return gp;
}

AugmentParams Config::augment_params() const {
  AugmentParams ap;
  ap.out_w = get_int("train.crop_w");
  ap.out_h = get_int("train.crop_h");
  return ap;
}

SketchizeParams Config::sketchize_params() const {
  SketchizeParams sp;
  sp.dog_sigma1 = get_double("sketch.dog_sigma1");
  sp.dog_sigma2 = get_double("sketch.dog_sigma2");
  sp.min_stroke_px = get_int("sketch.min_stroke_px");
  sp.antialias_sigma = get_double("sketch.antialias_sigma");
  return sp;
}

}  // namespace fcsin
