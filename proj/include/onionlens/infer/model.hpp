#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "onionlens/domain/category.hpp"
#include "onionlens/infer/errors.hpp"
#include "onionlens/infer/kernels.hpp"
#include "onionlens/infer/preprocess.hpp"
#include "onionlens/infer/tensor.hpp"

namespace onionlens::infer {

enum class OpType { conv, batch_norm, relu, max_pool, global_average_pool, flatten, dense, add, softmax };

/// ONNX operator name ("Conv", "BatchNormalization", "Gemm", ...).
std::string_view op_name(OpType op) noexcept;
std::optional<OpType> op_from_name(std::string_view name) noexcept;

struct ConvAttrs {
  Window2d window;  // kernel size is taken from the weight
  PaddingMode padding = PaddingMode::explicit_pads;
  int groups = 1;
};

struct PoolAttrs {
  Window2d window;
  PaddingMode padding = PaddingMode::explicit_pads;
  bool ceil_mode = false;
};

struct BatchNormAttrs {
  float epsilon = 1e-5f;
};

struct FlattenAttrs {
  int axis = 1;
};

struct SoftmaxAttrs {
  int axis = -1;
  bool coerce_2d = false;
};

using NodeAttrs =
    std::variant<std::monostate, ConvAttrs, PoolAttrs, BatchNormAttrs, FlattenAttrs, GemmOptions, SoftmaxAttrs>;

/// One operator. Inputs name graph values; an empty name marks an omitted
/// optional input (Conv bias, Gemm C).
struct Node {
  std::string name;
  OpType op = OpType::relu;
  std::vector<std::string> inputs;
  std::string output;
  NodeAttrs attrs;
};

struct ModelMetadata {
  /// class_order[i] is the category of output column i.
  std::array<Category, kCategoryCount> class_order = kAllCategories;
  PreprocSpec preproc;
  std::int64_t trainable_params = 0;
  std::int64_t total_params = 0;
};

/// Parses the four metadata_props entries. Throws MissingMetadata or
/// InvalidMetadata.
ModelMetadata parse_metadata(const std::map<std::string, std::string>& props);
std::map<std::string, std::string> metadata_props(const ModelMetadata& meta);

/// Validated, shape-checked operator graph. Immutable once built; safe to
/// share between threads.
class ModelGraph {
 public:
  ModelGraph() = default;

  bool empty() const noexcept { return nodes_.empty(); }
  const std::string& input_name() const noexcept { return input_name_; }
  /// Dimension -1 is the dynamic batch.
  const Shape& input_shape() const noexcept { return input_shape_; }
  const std::string& output_name() const noexcept { return output_name_; }
  const Shape& output_shape() const;
  std::span<const Node> nodes() const noexcept { return nodes_; }
  const Shape& value_shape(const std::string& name) const;
  const std::map<std::string, Tensor>& initializers() const noexcept { return initializers_; }
  const std::optional<ModelMetadata>& metadata() const noexcept { return metadata_; }

  /// Elements across all initializers (weights, biases, normalization
  /// statistics).
  std::int64_t parameter_count() const noexcept { return parameter_count_; }
  /// Parameters held by one node's initializer inputs.
  std::int64_t node_parameters(const Node& node) const;
  bool ends_with_softmax() const noexcept { return !nodes_.empty() && nodes_.back().op == OpType::softmax; }

 private:
  friend class GraphBuilder;
  friend Tensor forward(const ModelGraph& model, const Tensor& batch);

  std::string input_name_;
  Shape input_shape_;
  std::string output_name_;
  std::vector<Node> nodes_;
  std::map<std::string, Tensor> initializers_;
  std::map<std::string, Shape> shapes_;
  std::vector<std::vector<std::string>> release_after_;  // values dead after node i
  std::optional<ModelMetadata> metadata_;
  std::int64_t parameter_count_ = 0;
};

/// Assembles a graph and runs validation plus shape inference in build().
/// Nodes must be added in topological order.
class GraphBuilder {
 public:
  GraphBuilder& input(std::string name, Shape shape);
  GraphBuilder& initializer(std::string name, Tensor value);
  GraphBuilder& node(Node n);
  GraphBuilder& output(std::string name);
  GraphBuilder& metadata(ModelMetadata meta);

  /// Throws InvalidGraph, ShapeMismatch or InvalidMetadata.
  ModelGraph build() &&;

 private:
  ModelGraph g_;
  bool has_input_ = false;
};

/// Reads an ONNX file restricted to the supported operator subset.
/// Throws UnsupportedOperator, ShapeMismatch, MissingMetadata, InvalidGraph.
ModelGraph load_model(const std::filesystem::path& path);
ModelGraph parse_model(std::string_view bytes);

/// Runs every node in order. batch must match the input spec (any size for
/// the dynamic batch dimension). Throws ShapeMismatch or NonFiniteValue.
Tensor forward(const ModelGraph& model, const Tensor& batch);

struct NodeInfo {
  std::string name;
  std::string op;
  Shape output_shape;
  std::int64_t parameters = 0;
};

struct ModelInfo {
  std::int64_t total_params = 0;
  std::optional<std::int64_t> trainable_params;
  std::optional<std::int64_t> frozen_params;
  Shape input_shape;
  Shape output_shape;
  std::vector<NodeInfo> nodes;
  std::optional<std::array<Category, kCategoryCount>> class_order;
  std::optional<PreprocSpec> preproc;
};

ModelInfo model_info(const ModelGraph& model);
nlohmann::json to_json(const ModelInfo& info);

}  // namespace onionlens::infer
