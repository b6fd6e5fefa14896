#include <cstring>
#include <fstream>

#include "fcsin/u_transformer.hpp"

namespace fcsin {

namespace {

constexpr char kMagic[12] = {'F', 'C', 'S', 'I', 'N', '-', 'C', 'K', 'P', 'T', '-', '1'};

template <typename T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}
template <typename T>
T get(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof v);
  return v;
}

void put_tensor(std::ostream& os, const std::string& name, const Tensor& t) {
  put<uint32_t>(os, uint32_t(name.size()));
  os.write(name.data(), std::streamsize(name.size()));
  put<uint8_t>(os, 0);  // dtype 0 = f64 little-endian
  put<uint32_t>(os, uint32_t(t.shape.size()));
  for (int d : t.shape) put<int32_t>(os, d);
  os.write(reinterpret_cast<const char*>(t.data.data()),
           std::streamsize(t.data.size() * sizeof(double)));
}

std::pair<std::string, Tensor> get_tensor(std::istream& is) {
  uint32_t len = get<uint32_t>(is);
  std::string name(len, '\0');
  is.read(name.data(), len);
  uint8_t dtype = get<uint8_t>(is);
  if (dtype != 0) throw std::runtime_error("checkpoint: unsupported dtype");
  uint32_t ndim = get<uint32_t>(is);
  std::vector<int> shape(ndim);
  for (uint32_t i = 0; i < ndim; ++i) shape[i] = get<int32_t>(is);
  Tensor t(shape);
  is.read(reinterpret_cast<char*>(t.data.data()),
          std::streamsize(t.data.size() * sizeof(double)));
  return {name, std::move(t)};
}

}  // namespace

void save_checkpoint(const Checkpoint& ck, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write checkpoint: " + path);
  os.write(kMagic, sizeof kMagic);
  put<uint64_t>(os, ck.seed);
  put<int64_t>(os, ck.step);
  put<int32_t>(os, ck.epoch);
  put<uint64_t>(os, ck.config_text.size());
  os.write(ck.config_text.data(), std::streamsize(ck.config_text.size()));
  uint32_t n = uint32_t(ck.params.tensors.size() + ck.opt_m.size() + ck.opt_u.size());
  put<uint32_t>(os, n);
  for (const auto& [name, t] : ck.params.tensors) put_tensor(os, "param/" + name, t);
  for (const auto& [name, t] : ck.opt_m) put_tensor(os, "m/" + name, t);
  for (const auto& [name, t] : ck.opt_u) put_tensor(os, "u/" + name, t);
  if (!os) throw std::runtime_error("checkpoint write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open checkpoint: " + path);
  char magic[12];
  is.read(magic, sizeof magic);
  if (!is || std::memcmp(magic, kMagic, sizeof magic) != 0)
    throw std::runtime_error("not an FCSIN-CKPT-1 file: " + path);
  Checkpoint ck;
  ck.seed = get<uint64_t>(is);
  ck.step = get<int64_t>(is);
  ck.epoch = get<int32_t>(is);
  uint64_t clen = get<uint64_t>(is);
  ck.config_text.resize(clen);
  is.read(ck.config_text.data(), std::streamsize(clen));
  uint32_t n = get<uint32_t>(is);
  for (uint32_t i = 0; i < n; ++i) {
    auto [name, t] = get_tensor(is);
    if (!is) throw std::runtime_error("truncated checkpoint: " + path);
    if (name.rfind("param/", 0) == 0)
      ck.params.tensors.emplace(name.substr(6), std::move(t));
    else if (name.rfind("m/", 0) == 0)
      ck.opt_m.emplace(name.substr(2), std::move(t));
    else if (name.rfind("u/", 0) == 0)
      ck.opt_u.emplace(name.substr(2), std::move(t));
    else
      throw std::runtime_error("unknown tensor group in checkpoint: " + name);
  }
  return ck;
}

}  // namespace fcsin
