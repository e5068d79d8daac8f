#include <bit>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include "onionlens/infer/model.hpp"
#include "onnx.pb.h"

namespace onionlens::infer {
namespace {

const onnx::AttributeProto* find_attr(const onnx::NodeProto& n, std::string_view name) {
  for (const auto& a : n.attribute())
    if (a.name() == name) return &a;
  return nullptr;
}

std::int64_t attr_int(const onnx::NodeProto& n, std::string_view name, std::int64_t fallback) {
  const auto* a = find_attr(n, name);
  return a ? a->i() : fallback;
}

float attr_float(const onnx::NodeProto& n, std::string_view name, float fallback) {
  const auto* a = find_attr(n, name);
  return a ? a->f() : fallback;
}

std::string attr_string(const onnx::NodeProto& n, std::string_view name, std::string fallback) {
  const auto* a = find_attr(n, name);
  return a ? a->s() : fallback;
}

std::vector<std::int64_t> attr_ints(const onnx::NodeProto& n, std::string_view name) {
  const auto* a = find_attr(n, name);
  if (!a) return {};
  return {a->ints().begin(), a->ints().end()};
}

int narrow(std::int64_t v, const std::string& node, const char* what) {
  if (v < 0 || v > (1 << 20)) throw InvalidGraph("node " + node + ": attribute " + what + " out of range");
  return static_cast<int>(v);
}

PaddingMode padding_mode(const onnx::NodeProto& n) {
  const std::string mode = attr_string(n, "auto_pad", "NOTSET");
  if (mode == "NOTSET") return PaddingMode::explicit_pads;
  if (mode == "VALID") return PaddingMode::valid;
  if (mode == "SAME_UPPER") return PaddingMode::same_upper;
  if (mode == "SAME_LOWER") return PaddingMode::same_lower;
  throw InvalidGraph("node " + n.name() + ": unknown auto_pad " + mode);
}

/// Spatial attributes shared by Conv and MaxPool (2-D only).
Window2d window_attrs(const onnx::NodeProto& n) {
  Window2d w;
  const std::string& name = n.name();
  auto pair = [&](const char* key, int& a, int& b) {
    const auto v = attr_ints(n, key);
    if (v.empty()) return;
    if (v.size() != 2) throw ShapeMismatch(name, std::string(key) + " must have 2 entries (2-D only)");
    a = narrow(v[0], name, key);
    b = narrow(v[1], name, key);
  };
  pair("kernel_shape", w.kernel_h, w.kernel_w);
  pair("strides", w.stride_h, w.stride_w);
  pair("dilations", w.dilation_h, w.dilation_w);
  const auto pads = attr_ints(n, "pads");
  if (!pads.empty()) {
    if (pads.size() != 4) throw ShapeMismatch(name, "pads must have 4 entries (2-D only)");
    w.pad_top = narrow(pads[0], name, "pads");
    w.pad_left = narrow(pads[1], name, "pads");
    w.pad_bottom = narrow(pads[2], name, "pads");
    w.pad_right = narrow(pads[3], name, "pads");
  }
  return w;
}

Tensor to_tensor(const onnx::TensorProto& t) {
  if (t.data_location() == onnx::TensorProto::EXTERNAL)
    throw InvalidGraph("initializer " + t.name() + " uses external data");
  if (t.data_type() != onnx::TensorProto::FLOAT)
    throw InvalidGraph("initializer " + t.name() + " is not float32 (type " + std::to_string(t.data_type()) + ")");
  Shape shape(t.dims().begin(), t.dims().end());
  const std::int64_t count = element_count(shape);
  std::vector<float> data(static_cast<std::size_t>(count));
  if (t.has_raw_data()) {
    const std::string& raw = t.raw_data();
    if (raw.size() != data.size() * sizeof(float))
      throw InvalidGraph("initializer " + t.name() + " raw data has the wrong length");
    static_assert(std::endian::native == std::endian::little, "ONNX raw data is little-endian");
    std::memcpy(data.data(), raw.data(), raw.size());
  } else {
    if (t.float_data_size() != count)
      throw InvalidGraph("initializer " + t.name() + " float_data has the wrong length");
    std::copy(t.float_data().begin(), t.float_data().end(), data.begin());
  }
  return Tensor(std::move(shape), std::move(data));
}

Shape input_shape(const onnx::ValueInfoProto& v) {
  if (!v.type().has_tensor_type()) throw InvalidGraph("graph input " + v.name() + " is not a tensor");
  const auto& tt = v.type().tensor_type();
  if (tt.elem_type() != onnx::TensorProto::FLOAT) throw InvalidGraph("graph input " + v.name() + " is not float32");
  if (!tt.has_shape()) throw ShapeMismatch("input", "graph input " + v.name() + " has no shape");
  Shape shape;
  for (int i = 0; i < tt.shape().dim_size(); ++i) {
    const auto& d = tt.shape().dim(i);
    // The leading dimension is always the batch and always dynamic.
    if (i == 0) {
      shape.push_back(-1);
    } else if (d.has_dim_value() && d.dim_value() > 0) {
      shape.push_back(d.dim_value());
    } else {
      throw ShapeMismatch("input", "only the batch dimension may be dynamic");
    }
  }
  return shape;
}

Node convert_node(const onnx::NodeProto& p, std::int64_t opset, std::size_t index) {
  if (!p.domain().empty() && p.domain() != "ai.onnx") throw UnsupportedOperator(p.domain() + "." + p.op_type());
  const auto op = op_from_name(p.op_type());
  if (!op) throw UnsupportedOperator(p.op_type());

  Node n;
  n.name = p.name().empty() ? p.op_type() + "_" + std::to_string(index) : p.name();
  n.op = *op;
  n.inputs.assign(p.input().begin(), p.input().end());
  if (p.output_size() < 1 || p.output(0).empty()) throw InvalidGraph("node " + n.name + " has no output");
  for (int i = 1; i < p.output_size(); ++i)
    if (!p.output(i).empty()) throw InvalidGraph("node " + n.name + " has more than one output");
  n.output = p.output(0);

  switch (n.op) {
    case OpType::conv:
      n.attrs = ConvAttrs{window_attrs(p), padding_mode(p), narrow(attr_int(p, "group", 1), n.name, "group")};
      break;
    case OpType::max_pool: {
      if (attr_int(p, "storage_order", 0) != 0) throw InvalidGraph("node " + n.name + ": storage_order must be 0");
      PoolAttrs a{window_attrs(p), padding_mode(p), attr_int(p, "ceil_mode", 0) != 0};
      if (attr_ints(p, "kernel_shape").empty()) throw InvalidGraph("node " + n.name + ": MaxPool needs kernel_shape");
      n.attrs = a;
      break;
    }
    case OpType::batch_norm:
      if (attr_int(p, "training_mode", 0) != 0) throw InvalidGraph("node " + n.name + ": training_mode is unsupported");
      n.attrs = BatchNormAttrs{attr_float(p, "epsilon", 1e-5f)};
      break;
    case OpType::flatten:
      n.attrs = FlattenAttrs{static_cast<int>(attr_int(p, "axis", 1))};
      break;
    case OpType::dense:
      n.attrs = GemmOptions{attr_float(p, "alpha", 1.0f), attr_float(p, "beta", 1.0f), attr_int(p, "transA", 0) != 0,
                            attr_int(p, "transB", 0) != 0};
      break;
    case OpType::softmax: {
      const bool legacy = opset < 13;
      n.attrs = SoftmaxAttrs{static_cast<int>(attr_int(p, "axis", legacy ? 1 : -1)), legacy};
      break;
    }
    default:
      break;
  }
  return n;
}

ModelGraph convert(const onnx::ModelProto& model) {
  std::int64_t opset = 0;
  for (const auto& o : model.opset_import())
    if (o.domain().empty() || o.domain() == "ai.onnx") opset = o.version();
  if (opset == 0) opset = 13;

  const auto& graph = model.graph();
  // Reject foreign operators before anything else can fail.
  for (const auto& n : graph.node())
    if ((!n.domain().empty() && n.domain() != "ai.onnx") || !op_from_name(n.op_type()))
      throw UnsupportedOperator(n.op_type());

  GraphBuilder b;
  std::set<std::string> init_names;
  for (const auto& t : graph.initializer()) {
    init_names.insert(t.name());
    b.initializer(t.name(), to_tensor(t));
  }

  // Older exporters also list initializers among the graph inputs.
  std::vector<const onnx::ValueInfoProto*> inputs;
  for (const auto& v : graph.input())
    if (!init_names.contains(v.name())) inputs.push_back(&v);
  if (inputs.size() != 1) throw InvalidGraph("expected exactly one graph input, found " + std::to_string(inputs.size()));
  b.input(inputs[0]->name(), input_shape(*inputs[0]));

  if (graph.output_size() != 1)
    throw InvalidGraph("expected exactly one graph output, found " + std::to_string(graph.output_size()));
  b.output(graph.output(0).name());

  for (int i = 0; i < graph.node_size(); ++i) b.node(convert_node(graph.node(i), opset, static_cast<std::size_t>(i)));

  std::map<std::string, std::string> props;
  for (const auto& p : model.metadata_props()) props[p.key()] = p.value();
  b.metadata(parse_metadata(props));
  return std::move(b).build();
}

}  // namespace

ModelGraph parse_model(std::string_view bytes) {
  onnx::ModelProto proto;
  if (!proto.ParseFromArray(bytes.data(), static_cast<int>(bytes.size())))
    throw InvalidGraph("not a valid ONNX model file");
  if (!proto.has_graph()) throw InvalidGraph("ONNX model has no graph");
  return convert(proto);
}

ModelGraph load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidGraph("cannot open model file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_model(buf.view());
}

}  // namespace onionlens::infer
