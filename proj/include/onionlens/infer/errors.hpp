#pragma once

#include <string>

#include "onionlens/error.hpp"

namespace onionlens::infer {

class ModelError : public Error {
 public:
  using Error::Error;
};

/// Operator outside the supported subset; `op()` is the operator type.
class UnsupportedOperator : public ModelError {
 public:
  explicit UnsupportedOperator(std::string op)
      : ModelError("unsupported operator: " + op), op_(std::move(op)) {}
  const std::string& op() const noexcept { return op_; }

 private:
  std::string op_;
};

/// Inconsistent tensor shapes. `node()` is empty when raised by a bare kernel.
class ShapeMismatch : public ModelError {
 public:
  ShapeMismatch(std::string node, const std::string& detail)
      : ModelError(node.empty() ? "shape mismatch: " + detail
                                : "shape mismatch at " + node + ": " + detail),
        node_(std::move(node)) {}
  const std::string& node() const noexcept { return node_; }

 private:
  std::string node_;
};

class MissingMetadata : public ModelError {
 public:
  explicit MissingMetadata(std::string key)
      : ModelError("missing model metadata: " + key), key_(std::move(key)) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

/// Metadata present but malformed or contradicting the graph.
class InvalidMetadata : public ModelError {
 public:
  InvalidMetadata(std::string key, const std::string& detail)
      : ModelError("invalid model metadata " + key + ": " + detail), key_(std::move(key)) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

class NonFiniteValue : public ModelError {
 public:
  explicit NonFiniteValue(std::string node)
      : ModelError("non-finite value produced by " + node), node_(std::move(node)) {}
  const std::string& node() const noexcept { return node_; }

 private:
  std::string node_;
};

/// Structural problems: unreadable file, cycles, dangling inputs.
class InvalidGraph : public ModelError {
 public:
  using ModelError::ModelError;
};

}  // namespace onionlens::infer
