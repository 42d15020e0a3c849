#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace edgeprune {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed document. `position()` is the byte offset reported by the JSON
/// reader, or 0 when the problem is structural (missing key, wrong type).
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t position)
      : Error(what), position_(position) {}
  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

/// A well-formed document that breaks a model invariant. Carries the rule
/// name and the id of the offending element.
class ValidationError : public Error {
 public:
  ValidationError(std::string rule, std::string element, const std::string& what)
      : Error(what), rule_(std::move(rule)), element_(std::move(element)) {}
  const std::string& rule() const noexcept { return rule_; }
  const std::string& element() const noexcept { return element_; }

 private:
  std::string rule_;
  std::string element_;
};

/// Network FIFO failure, always attributed to a cut edge.
class NetError : public Error {
 public:
  NetError(std::string edge, const std::string& what)
      : Error("edge " + edge + ": " + what), edge_(std::move(edge)) {}
  const std::string& edge() const noexcept { return edge_; }

 private:
  std::string edge_;
};

}  // namespace edgeprune
