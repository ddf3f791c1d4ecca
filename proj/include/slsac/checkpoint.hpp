#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace slsac {

// Flat container of named double-precision arrays. On disk:
//   bytes 0..7   magic "SLSACCK1"
//   bytes 8..15  u64 little-endian manifest length L
//   L bytes      manifest JSON: {"version": ..., "arrays": [{name, shape, offset}]}
//   rest         payload, raw IEEE-754 doubles, little-endian, offsets in bytes
class CheckpointWriter {
 public:
  void add(const std::string& name, std::vector<std::size_t> shape,
           std::span<const double> data);
  void add_scalar(const std::string& name, double value);
  void write(const std::string& path) const;

 private:
  struct Entry {
    std::string name;
    std::vector<std::size_t> shape;
    std::size_t offset = 0;
  };
  std::vector<Entry> entries_;
  std::vector<double> payload_;
};

class CheckpointReader {
 public:
  explicit CheckpointReader(const std::string& path);

  bool has(const std::string& name) const;
  std::vector<std::size_t> shape(const std::string& name) const;
  std::vector<double> array(const std::string& name) const;
  double scalar(const std::string& name) const;
  std::vector<std::string> names() const;

 private:
  struct Entry {
    std::vector<std::size_t> shape;
    std::size_t offset = 0;
    std::size_t count = 0;
  };
  const Entry& find(const std::string& name) const;
  std::vector<std::pair<std::string, Entry>> entries_;
  std::vector<double> payload_;
};

}  // namespace slsac
