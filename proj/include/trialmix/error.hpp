#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace trialmix {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shapes disagree, or a matrix that must be symmetric is not.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A covariance or normal-equations matrix is singular or not positive definite.
class SingularityError : public Error {
 public:
  using Error::Error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Malformed or inconsistent input file.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// A weighted update has zero total weight (no active or no inactive voxels).
class EmptyGroupError : public Error {
 public:
  using Error::Error;
};

/// Collects non-fatal numerical notes (ridge applied, update skipped, floors).
class Warnings {
 public:
  void add(std::string message) { messages_.push_back(std::move(message)); }
  bool empty() const { return messages_.empty(); }
  std::size_t size() const { return messages_.size(); }
  const std::vector<std::string>& messages() const { return messages_; }
  bool contains(const std::string& fragment) const {
    for (const auto& m : messages_) {
      if (m.find(fragment) != std::string::npos) return true;
    }
    return false;
  }
  void append(const Warnings& other) {
    messages_.insert(messages_.end(), other.messages_.begin(), other.messages_.end());
  }

 private:
  std::vector<std::string> messages_;
};

inline void warn(Warnings* sink, std::string message) {
  if (sink != nullptr) sink->add(std::move(message));
}

}  // namespace trialmix
