#include "ecc/diffcore/archive.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "ecc/error.hpp"

namespace ecc::diff {

static_assert(std::endian::native == std::endian::little, "snapshot format assumes a little-endian host");

namespace {

constexpr char kMagic[] = "ECCSNAP 1\n";

template <typename T>
void write_pod(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

void write_string(std::ostream& out, const std::string& s) {
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

template <typename T>
T read_pod(std::istream& in, const std::string& what) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(T))) throw ParseError("snapshot truncated while reading " + what);
  return v;
}

std::string read_string(std::istream& in, const std::string& what) {
  auto n = read_pod<std::uint32_t>(in, what);
  if (n > (1u << 20)) throw ParseError("snapshot string length implausible for " + what);
  std::string s(n, '\0');
  if (n && !in.read(s.data(), n)) throw ParseError("snapshot truncated while reading " + what);
  return s;
}

}  // namespace

void Archive::put(const std::string& name, const Tensor& t) {
  for (auto& [n, v] : entries_) {
    if (n == name) {
      v = t;
      return;
    }
  }
  entries_.emplace_back(name, t);
}

const Tensor& Archive::get(const std::string& name) const {
  for (const auto& [n, v] : entries_) {
    if (n == name) return v;
  }
  throw ParseError("snapshot has no tensor '" + name + "'");
}

bool Archive::has(const std::string& name) const {
  for (const auto& [n, v] : entries_) {
    if (n == name) return true;
  }
  return false;
}

const std::string& Archive::attr(const std::string& key) const {
  auto it = attrs_.find(key);
  if (it == attrs_.end()) throw ParseError("snapshot has no attribute '" + key + "'");
  return it->second;
}

void Archive::put_mlp(const Mlp& net) {
  for (const auto& layer : net.layers()) {
    put(layer.weight.name, layer.weight.value);
    put(layer.bias.name, layer.bias.value);
  }
}

Mlp Archive::get_mlp(const std::string& module) const {
  std::vector<int> dims;
  std::size_t n = 0;
  while (has(module + ".l" + std::to_string(n) + ".W")) ++n;
  if (n == 0) throw ParseError("snapshot has no module '" + module + "'");
  for (std::size_t i = 0; i < n; ++i) {
    const Tensor& w = get(module + ".l" + std::to_string(i) + ".W");
    if (i == 0) dims.push_back(static_cast<int>(w.cols()));
    else if (w.cols() != dims.back()) throw DimensionError("module '" + module + "' has inconsistent layer sizes");
    dims.push_back(static_cast<int>(w.rows()));
  }
  Mlp net(module, dims);
  for (std::size_t i = 0; i < n; ++i) {
    std::string prefix = module + ".l" + std::to_string(i);
    net.layers()[i].weight.value = get(prefix + ".W");
    const Tensor& b = get(prefix + ".b");
    if (b.rows() != 1 || b.cols() != dims[i + 1]) throw DimensionError("bias '" + prefix + ".b' has wrong shape");
    net.layers()[i].bias.value = b;
  }
  return net;
}

void Archive::put_standardizer(const std::string& name, const Standardizer& s) {
  put(name + ".mean", s.mean);
  put(name + ".std", s.std);
}

Standardizer Archive::get_standardizer(const std::string& name) const {
  Standardizer s{get(name + ".mean"), get(name + ".std")};
  if (s.mean.rows() != 1 || s.std.rows() != 1 || s.mean.cols() != s.std.cols()) {
    throw DimensionError("standardizer '" + name + "' has inconsistent shapes");
  }
  return s;
}

void Archive::save(const std::filesystem::path& path) const {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write snapshot " + path.string());
  out.write(kMagic, sizeof(kMagic) - 1);
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(attrs_.size()));
  for (const auto& [k, v] : attrs_) {
    write_string(out, k);
    write_string(out, v);
  }
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(entries_.size()));
  for (const auto& [name, t] : entries_) {
    write_string(out, name);
    write_pod<std::int64_t>(out, t.rows());
    write_pod<std::int64_t>(out, t.cols());
    out.write(reinterpret_cast<const char*>(t.data()), static_cast<std::streamsize>(sizeof(double) * t.size()));
  }
  if (!out) throw std::runtime_error("failed writing snapshot " + path.string());
}

Archive Archive::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingInputError("snapshot not found: " + path.string());
  char magic[sizeof(kMagic) - 1];
  if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(magic)) != 0) {
    throw ParseError("not a snapshot file: " + path.string());
  }
  Archive a;
  auto n_attrs = read_pod<std::uint32_t>(in, "attribute count");
  for (std::uint32_t i = 0; i < n_attrs; ++i) {
    std::string k = read_string(in, "attribute key");
    a.attrs_[k] = read_string(in, "attribute value");
  }
  auto n = read_pod<std::uint32_t>(in, "tensor count");
  for (std::uint32_t i = 0; i < n; ++i) {
    std::string name = read_string(in, "tensor name");
    auto rows = read_pod<std::int64_t>(in, name + " rows");
    auto cols = read_pod<std::int64_t>(in, name + " cols");
    if (rows < 0 || cols < 0 || rows * cols > (1LL << 28)) throw DimensionError("tensor '" + name + "' has bad shape");
    Tensor t(rows, cols);
    if (t.size() && !in.read(reinterpret_cast<char*>(t.data()), static_cast<std::streamsize>(sizeof(double) * t.size()))) {
      throw ParseError("snapshot truncated in tensor '" + name + "'");
    }
    a.entries_.emplace_back(std::move(name), std::move(t));
  }
  if (in.peek() != std::char_traits<char>::eof()) throw ParseError("trailing bytes after snapshot payload");
  return a;
}

bool Archive::operator==(const Archive& other) const {
  if (attrs_ != other.attrs_ || entries_.size() != other.entries_.size()) return false;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& [na, ta] = entries_[i];
    const auto& [nb, tb] = other.entries_[i];
    if (na != nb || ta.rows() != tb.rows() || ta.cols() != tb.cols()) return false;
    if (std::memcmp(ta.data(), tb.data(), sizeof(double) * ta.size()) != 0) return false;
  }
  return true;
}

}  // namespace ecc::diff
