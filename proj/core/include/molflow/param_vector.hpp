#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace molflow {

// Flat storage for all trainable parameters, with named slices. Slices are
// assigned sequentially, so they tile the vector exactly (checked lookups,
// no gaps, no overlap).
class ParamVector {
 public:
  struct Slice {
    std::string name;
    int offset = 0;
    int len = 0;
  };

  int add_slice(const std::string& name, int len) {
    if (len <= 0) throw std::invalid_argument("ParamVector: slice length must be positive");
    if (index_.count(name)) throw std::invalid_argument("ParamVector: duplicate slice " + name);
    const int offset = static_cast<int>(values_.size());
    index_.emplace(name, static_cast<int>(slices_.size()));
    slices_.push_back({name, offset, len});
    values_.resize(values_.size() + static_cast<size_t>(len), 0.0);
    return offset;
  }

  const Slice& slice(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw std::invalid_argument("ParamVector: no slice named " + name);
    return slices_[it->second];
  }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  int size() const { return static_cast<int>(values_.size()); }
  const std::vector<Slice>& slices() const { return slices_; }

 private:
  std::vector<double> values_;
  std::vector<Slice> slices_;
  std::unordered_map<std::string, int> index_;
};

}  // namespace molflow
