#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace fgmi {

// Finite ordered value set; symbols are addressed by index 0..q-1.
// The +-1 code alphabet maps index 0 -> +1 and index 1 -> -1.
class Alphabet {
 public:
  explicit Alphabet(int q) : q_(q) {
    if (q < 2) throw std::invalid_argument("Alphabet: q must be >= 2");
    names_.reserve(static_cast<std::size_t>(q));
    for (int i = 0; i < q; ++i) names_.push_back(std::to_string(i));
  }

  Alphabet(int q, std::vector<std::string> names) : q_(q), names_(std::move(names)) {
    if (q < 2) throw std::invalid_argument("Alphabet: q must be >= 2");
    if (static_cast<int>(names_.size()) != q)
      throw std::invalid_argument("Alphabet: name count must equal q");
    for (std::size_t i = 0; i < names_.size(); ++i)
      for (std::size_t j = i + 1; j < names_.size(); ++j)
        if (names_[i] == names_[j])
          throw std::invalid_argument("Alphabet: symbols must be distinct");
  }

  static Alphabet binary_spins() { return Alphabet(2, {"+1", "-1"}); }

  int size() const { return q_; }
  const std::string& name(int i) const { return names_.at(static_cast<std::size_t>(i)); }

  // +-1 value of a binary symbol index
  static int spin(int index) { return index == 0 ? +1 : -1; }
  static int spin_index(int spin) { return spin > 0 ? 0 : 1; }

  bool operator==(const Alphabet& o) const { return q_ == o.q_; }

 private:
  int q_;
  std::vector<std::string> names_;
};

}  // namespace fgmi
