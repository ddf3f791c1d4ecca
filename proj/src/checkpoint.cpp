#include "slsac/checkpoint.hpp"

#include <bit>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

static_assert(std::endian::native == std::endian::little,
              "checkpoint container assumes a little-endian host");

namespace slsac {

namespace {
constexpr char kMagic[8] = {'S', 'L', 'S', 'A', 'C', 'C', 'K', '1'};
}

void CheckpointWriter::add(const std::string& name, std::vector<std::size_t> shape,
                           std::span<const double> data) {
  std::size_t count = 1;
  for (std::size_t d : shape) count *= d;
  if (count != data.size())
    throw std::invalid_argument("checkpoint: shape does not match data size for " + name);
  Entry e;
  e.name = name;
  e.shape = std::move(shape);
  e.offset = payload_.size() * sizeof(double);
  entries_.push_back(std::move(e));
  payload_.insert(payload_.end(), data.begin(), data.end());
}

void CheckpointWriter::add_scalar(const std::string& name, double value) {
  add(name, {1}, std::span<const double>(&value, 1));
}

void CheckpointWriter::write(const std::string& path) const {
  nlohmann::json manifest;
  manifest["version"] = "0.1.0";
  auto& arr = manifest["arrays"];
  arr = nlohmann::json::array();
  for (const auto& e : entries_) {
    arr.push_back({{"name", e.name}, {"shape", e.shape}, {"offset", e.offset}});
  }
  const std::string m = manifest.dump();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("checkpoint: cannot open for write: " + path);
  out.write(kMagic, sizeof(kMagic));
  const std::uint64_t len = m.size();
  out.write(reinterpret_cast<const char*>(&len), sizeof(len));
  out.write(m.data(), static_cast<std::streamsize>(m.size()));
  out.write(reinterpret_cast<const char*>(payload_.data()),
            static_cast<std::streamsize>(payload_.size() * sizeof(double)));
  if (!out) throw std::runtime_error("checkpoint: write failed: " + path);
}

CheckpointReader::CheckpointReader(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("checkpoint: cannot open: " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::string(magic, 8) != std::string(kMagic, 8))
    throw std::runtime_error("checkpoint: bad magic in " + path);
  std::uint64_t len = 0;
  in.read(reinterpret_cast<char*>(&len), sizeof(len));
  std::string m(len, '\0');
  in.read(m.data(), static_cast<std::streamsize>(len));
  if (!in) throw std::runtime_error("checkpoint: truncated manifest in " + path);

  const auto manifest = nlohmann::json::parse(m);
  std::size_t total = 0;
  for (const auto& a : manifest.at("arrays")) {
    Entry e;
    e.shape = a.at("shape").get<std::vector<std::size_t>>();
    e.offset = a.at("offset").get<std::size_t>();
    e.count = 1;
    for (std::size_t d : e.shape) e.count *= d;
    if (e.offset % sizeof(double) != 0)
      throw std::runtime_error("checkpoint: misaligned offset in " + path);
    total = std::max(total, e.offset / sizeof(double) + e.count);
    entries_.emplace_back(a.at("name").get<std::string>(), std::move(e));
  }
  payload_.resize(total);
  in.read(reinterpret_cast<char*>(payload_.data()),
          static_cast<std::streamsize>(total * sizeof(double)));
  if (!in) throw std::runtime_error("checkpoint: truncated payload in " + path);
}

const CheckpointReader::Entry& CheckpointReader::find(const std::string& name) const {
  for (const auto& [n, e] : entries_)
    if (n == name) return e;
  throw std::runtime_error("checkpoint: no array named " + name);
}

bool CheckpointReader::has(const std::string& name) const {
  for (const auto& [n, e] : entries_)
    if (n == name) return true;
  return false;
}

std::vector<std::size_t> CheckpointReader::shape(const std::string& name) const {
  return find(name).shape;
}

std::vector<double> CheckpointReader::array(const std::string& name) const {
  const auto& e = find(name);
  const std::size_t start = e.offset / sizeof(double);
  return {payload_.begin() + static_cast<std::ptrdiff_t>(start),
          payload_.begin() + static_cast<std::ptrdiff_t>(start + e.count)};
}

double CheckpointReader::scalar(const std::string& name) const {
  const auto v = array(name);
  if (v.size() != 1) throw std::runtime_error("checkpoint: " + name + " is not a scalar");
  return v[0];
}

std::vector<std::string> CheckpointReader::names() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& [n, e] : entries_) out.push_back(n);
  return out;
}

}  // namespace slsac
