#include "onionlens/infer/model.hpp"

#include <algorithm>
#include <charconv>
#include <set>
#include <unordered_map>

namespace onionlens::infer {
namespace {

using nlohmann::json;

constexpr std::array<std::pair<OpType, std::string_view>, 9> kOpNames{{
    {OpType::conv, "Conv"},
    {OpType::batch_norm, "BatchNormalization"},
    {OpType::relu, "Relu"},
    {OpType::max_pool, "MaxPool"},
    {OpType::global_average_pool, "GlobalAveragePool"},
    {OpType::flatten, "Flatten"},
    {OpType::dense, "Gemm"},
    {OpType::add, "Add"},
    {OpType::softmax, "Softmax"},
}};

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::int64_t parse_count(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  std::int64_t v = 0;
  const auto [end, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc{} || end != t.data() + t.size() || v < 0)
    throw InvalidMetadata(key, "expected a non-negative integer, got '" + text + "'");
  return v;
}

template <typename T>
const T& attrs_as(const Node& n) {
  if (const T* a = std::get_if<T>(&n.attrs)) return *a;
  static const T fallback{};
  return fallback;
}

struct Arity {
  std::size_t min;
  std::size_t max;
};

Arity arity(OpType op) {
  switch (op) {
    case OpType::conv:
    case OpType::dense:
      return {2, 3};
    case OpType::batch_norm:
      return {5, 5};
    case OpType::add:
      return {2, 2};
    default:
      return {1, 1};
  }
}

/// Resolves SAME/VALID pads against a concrete spatial size.
Window2d resolved_window(Window2d w, PaddingMode mode, const Shape& in) {
  resolve_padding(w, mode, in[2], in[3]);
  return w;
}

std::int64_t dyn_product(const Shape& s, std::size_t begin, std::size_t end) {
  std::int64_t p = 1;
  for (std::size_t i = begin; i < end; ++i) {
    if (s[i] < 0) return -1;
    p *= s[i];
  }
  return p;
}

void require_rank(const Node& n, const Shape& s, std::size_t rank, const char* what) {
  if (s.size() != rank)
    throw ShapeMismatch(n.name, std::string(what) + " must have rank " + std::to_string(rank) + ", got " +
                                    shape_string(s));
}

void require_len(const Node& n, const Shape& s, std::int64_t len, const char* what) {
  if (s.size() != 1 || s[0] != len)
    throw ShapeMismatch(n.name, std::string(what) + " must be [" + std::to_string(len) + "], got " + shape_string(s));
}

/// Output shape of one node, checking operand compatibility. Resolves
/// SAME/VALID padding in place since the spatial input size is static.
Shape infer_shape(Node& n, const std::vector<const Shape*>& in) {
  try {
    switch (n.op) {
      case OpType::conv: {
        auto& a = std::get<ConvAttrs>(n.attrs);
        const Shape& x = *in[0];
        const Shape& w = *in[1];
        require_rank(n, x, 4, "input");
        require_rank(n, w, 4, "weight");
        if (a.groups < 1 || x[1] % a.groups != 0 || w[0] % a.groups != 0 || x[1] / a.groups != w[1])
          throw ShapeMismatch(n.name, "weight " + shape_string(w) + " incompatible with input " + shape_string(x));
        if (in.size() > 2 && in[2]) require_len(n, *in[2], w[0], "bias");
        a.window.kernel_h = static_cast<int>(w[2]);
        a.window.kernel_w = static_cast<int>(w[3]);
        a.window = resolved_window(a.window, a.padding, x);
        a.padding = PaddingMode::explicit_pads;
        const auto& win = a.window;
        return {x[0], w[0],
                window_output(x[2], win.kernel_h, win.stride_h, win.dilation_h, win.pad_top, win.pad_bottom),
                window_output(x[3], win.kernel_w, win.stride_w, win.dilation_w, win.pad_left, win.pad_right)};
      }
      case OpType::max_pool: {
        auto& a = std::get<PoolAttrs>(n.attrs);
        const Shape& x = *in[0];
        require_rank(n, x, 4, "input");
        a.window = resolved_window(a.window, a.padding, x);
        a.padding = PaddingMode::explicit_pads;
        const auto& win = a.window;
        return {x[0], x[1],
                window_output(x[2], win.kernel_h, win.stride_h, win.dilation_h, win.pad_top, win.pad_bottom,
                              a.ceil_mode),
                window_output(x[3], win.kernel_w, win.stride_w, win.dilation_w, win.pad_left, win.pad_right,
                              a.ceil_mode)};
      }
      case OpType::batch_norm: {
        const Shape& x = *in[0];
        if (x.size() < 2) throw ShapeMismatch(n.name, "input must have rank >= 2");
        for (std::size_t i = 1; i < 5; ++i) require_len(n, *in[i], x[1], "normalization parameter");
        return x;
      }
      case OpType::relu:
        return *in[0];
      case OpType::global_average_pool: {
        const Shape& x = *in[0];
        require_rank(n, x, 4, "input");
        return {x[0], x[1], 1, 1};
      }
      case OpType::flatten: {
        const Shape& x = *in[0];
        int axis = attrs_as<FlattenAttrs>(n).axis;
        const int r = static_cast<int>(x.size());
        if (axis < -r || axis > r) throw ShapeMismatch(n.name, "flatten axis out of range");
        if (axis < 0) axis += r;
        const auto ax = static_cast<std::size_t>(axis);
        return {dyn_product(x, 0, ax), dyn_product(x, ax, x.size())};
      }
      case OpType::dense: {
        const auto& a = attrs_as<GemmOptions>(n);
        const Shape& x = *in[0];
        const Shape& w = *in[1];
        require_rank(n, x, 2, "A");
        require_rank(n, w, 2, "B");
        const std::int64_t m = a.trans_a ? x[1] : x[0];
        const std::int64_t k = a.trans_a ? x[0] : x[1];
        const std::int64_t kb = a.trans_b ? w[1] : w[0];
        const std::int64_t cols = a.trans_b ? w[0] : w[1];
        if (k != kb)
          throw ShapeMismatch(n.name, "inner dimensions differ: " + shape_string(x) + " x " + shape_string(w));
        Shape out{m, cols};
        if (in.size() > 2 && in[2] && broadcast_shapes(*in[2], out) != out)
          throw ShapeMismatch(n.name, "C " + shape_string(*in[2]) + " does not broadcast to " + shape_string(out));
        return out;
      }
      case OpType::add:
        return broadcast_shapes(*in[0], *in[1]);
      case OpType::softmax: {
        const Shape& x = *in[0];
        const int axis = attrs_as<SoftmaxAttrs>(n).axis;
        const int r = static_cast<int>(x.size());
        if (r == 0 || axis < -r || axis >= r) throw ShapeMismatch(n.name, "softmax axis out of range");
        return x;
      }
    }
  } catch (const ShapeMismatch& e) {
    if (!e.node().empty()) throw;
    throw ShapeMismatch(n.name, e.what());
  } catch (const std::bad_variant_access&) {
    throw InvalidGraph("node " + n.name + " carries attributes of the wrong kind");
  }
  throw InvalidGraph("node " + n.name + " has an unknown operator");
}

bool shape_accepts(const Shape& spec, const Shape& actual) {
  if (spec.size() != actual.size()) return false;
  for (std::size_t i = 0; i < spec.size(); ++i)
    if (spec[i] >= 0 && spec[i] != actual[i]) return false;
  return true;
}

}  // namespace

std::string_view op_name(OpType op) noexcept {
  for (const auto& [o, name] : kOpNames)
    if (o == op) return name;
  return "?";
}

std::optional<OpType> op_from_name(std::string_view name) noexcept {
  for (const auto& [o, n] : kOpNames)
    if (n == name) return o;
  return std::nullopt;
}

ModelMetadata parse_metadata(const std::map<std::string, std::string>& props) {
  auto get = [&](const char* key) -> const std::string& {
    auto it = props.find(key);
    if (it == props.end()) throw MissingMetadata(key);
    return it->second;
  };
  ModelMetadata meta;

  const std::string& order = get("class_order");
  std::vector<Category> seen;
  std::size_t start = 0;
  while (start <= order.size()) {
    const std::size_t comma = std::min(order.find(',', start), order.size());
    const std::string item = trim(std::string_view(order).substr(start, comma - start));
    const auto cat = try_resolve_category(item);
    if (!cat) throw InvalidMetadata("class_order", "unknown category '" + item + "'");
    if (std::ranges::find(seen, *cat) != seen.end())
      throw InvalidMetadata("class_order", "duplicate category '" + item + "'");
    seen.push_back(*cat);
    start = comma + 1;
  }
  if (seen.size() != kCategoryCount)
    throw InvalidMetadata("class_order", "expected 5 categories, got " + std::to_string(seen.size()));
  std::ranges::copy(seen, meta.class_order.begin());

  json pre;
  try {
    pre = json::parse(get("preproc"));
  } catch (const json::parse_error& e) {
    throw InvalidMetadata("preproc", e.what());
  }
  meta.preproc = parse_preproc(pre);
  meta.trainable_params = parse_count("trainable_params", get("trainable_params"));
  meta.total_params = parse_count("total_params", get("total_params"));
  if (meta.trainable_params > meta.total_params)
    throw InvalidMetadata("trainable_params", "exceeds total_params");
  return meta;
}

std::map<std::string, std::string> metadata_props(const ModelMetadata& meta) {
  std::string order;
  for (Category c : meta.class_order) {
    if (!order.empty()) order += ",";
    order += canonical_id(c);
  }
  return {{"class_order", order},
          {"preproc", preproc_to_json(meta.preproc).dump()},
          {"trainable_params", std::to_string(meta.trainable_params)},
          {"total_params", std::to_string(meta.total_params)}};
}

const Shape& ModelGraph::output_shape() const { return value_shape(output_name_); }

const Shape& ModelGraph::value_shape(const std::string& name) const {
  auto it = shapes_.find(name);
  if (it == shapes_.end()) throw InvalidGraph("unknown value " + name);
  return it->second;
}

std::int64_t ModelGraph::node_parameters(const Node& node) const {
  std::int64_t total = 0;
  for (const auto& in : node.inputs) {
    auto it = initializers_.find(in);
    if (it != initializers_.end()) total += static_cast<std::int64_t>(it->second.size());
  }
  return total;
}

GraphBuilder& GraphBuilder::input(std::string name, Shape shape) {
  g_.input_name_ = std::move(name);
  g_.input_shape_ = std::move(shape);
  has_input_ = true;
  return *this;
}

GraphBuilder& GraphBuilder::initializer(std::string name, Tensor value) {
  if (!g_.initializers_.emplace(name, std::move(value)).second)
    throw InvalidGraph("duplicate initializer " + name);
  return *this;
}

GraphBuilder& GraphBuilder::node(Node n) {
  g_.nodes_.push_back(std::move(n));
  return *this;
}

GraphBuilder& GraphBuilder::output(std::string name) {
  g_.output_name_ = std::move(name);
  return *this;
}

GraphBuilder& GraphBuilder::metadata(ModelMetadata meta) {
  g_.metadata_ = std::move(meta);
  return *this;
}

ModelGraph GraphBuilder::build() && {
  ModelGraph g = std::move(g_);
  if (g.nodes_.empty()) throw InvalidGraph("graph has no nodes");
  if (!has_input_ || g.input_name_.empty()) throw InvalidGraph("graph input not set");
  if (g.output_name_.empty()) throw InvalidGraph("graph output not set");
  if (g.initializers_.contains(g.input_name_)) throw InvalidGraph("graph input shadows an initializer");
  for (std::size_t i = 0; i < g.input_shape_.size(); ++i)
    if (g.input_shape_[i] == 0 || (g.input_shape_[i] < 0 && i != 0))
      throw ShapeMismatch("input", "only the batch dimension may be dynamic: " + shape_string(g.input_shape_));

  g.shapes_.clear();
  g.shapes_[g.input_name_] = g.input_shape_;
  for (const auto& [name, t] : g.initializers_) g.shapes_[name] = t.shape();

  std::set<std::string> names;
  std::set<std::string> used_initializers;
  for (std::size_t i = 0; i < g.nodes_.size(); ++i) {
    Node& n = g.nodes_[i];
    if (n.name.empty()) n.name = std::string(op_name(n.op)) + "_" + std::to_string(i);
    if (!names.insert(n.name).second) throw InvalidGraph("duplicate node name " + n.name);
    const Arity ar = arity(n.op);
    if (n.inputs.size() < ar.min || n.inputs.size() > ar.max)
      throw InvalidGraph("node " + n.name + " (" + std::string(op_name(n.op)) + ") has " +
                         std::to_string(n.inputs.size()) + " inputs");
    std::vector<const Shape*> in;
    for (std::size_t k = 0; k < n.inputs.size(); ++k) {
      if (n.inputs[k].empty()) {
        if (k < ar.min) throw InvalidGraph("node " + n.name + " is missing required input " + std::to_string(k));
        in.push_back(nullptr);
        continue;
      }
      auto it = g.shapes_.find(n.inputs[k]);
      if (it == g.shapes_.end())
        throw InvalidGraph("node " + n.name + " reads " + n.inputs[k] + " before it is produced");
      in.push_back(&it->second);
      if (g.initializers_.contains(n.inputs[k])) used_initializers.insert(n.inputs[k]);
    }
    if (n.output.empty() || g.shapes_.contains(n.output))
      throw InvalidGraph("node " + n.name + " output '" + n.output + "' is empty or already defined");
    Shape out = infer_shape(n, in);
    g.shapes_[n.output] = std::move(out);
  }
  if (!g.shapes_.contains(g.output_name_) || g.output_name_ == g.input_name_)
    throw InvalidGraph("graph output " + g.output_name_ + " is not produced by any node");

  const Shape& out = g.shapes_.at(g.output_name_);
  if (out.size() != 2 || out[1] != static_cast<std::int64_t>(kCategoryCount))
    throw ShapeMismatch(g.output_name_, "graph output must be [N,5], got " + shape_string(out));

  std::erase_if(g.initializers_, [&](const auto& kv) { return !used_initializers.contains(kv.first); });
  g.parameter_count_ = 0;
  for (const auto& [name, t] : g.initializers_) g.parameter_count_ += static_cast<std::int64_t>(t.size());

  // Intermediate values are dropped right after their last reader runs.
  std::unordered_map<std::string, std::size_t> last_use;
  for (std::size_t i = 0; i < g.nodes_.size(); ++i)
    for (const auto& in : g.nodes_[i].inputs)
      if (!in.empty() && !g.initializers_.contains(in) && in != g.input_name_) last_use[in] = i;
  g.release_after_.assign(g.nodes_.size(), {});
  for (const auto& [name, i] : last_use)
    if (name != g.output_name_) g.release_after_[i].push_back(name);

  if (g.metadata_) {
    const auto& meta = *g.metadata_;
    if (meta.total_params != g.parameter_count_)
      throw InvalidMetadata("total_params", "declares " + std::to_string(meta.total_params) + " but the graph holds " +
                                                std::to_string(g.parameter_count_));
    if (meta.trainable_params > meta.total_params)
      throw InvalidMetadata("trainable_params", "exceeds total_params");
    const Shape& x = g.input_shape_;
    if (x.size() == 4 && (x[1] != 3 || x[2] != meta.preproc.height || x[3] != meta.preproc.width))
      throw ShapeMismatch("input", "input " + shape_string(x) + " disagrees with preproc size " +
                                       std::to_string(meta.preproc.height) + "x" + std::to_string(meta.preproc.width));
  }
  return g;
}

Tensor forward(const ModelGraph& model, const Tensor& batch) {
  if (model.nodes_.empty()) throw InvalidGraph("cannot run an empty graph");
  if (!shape_accepts(model.input_shape_, batch.shape()))
    throw ShapeMismatch("input", "expected " + shape_string(model.input_shape_) + ", got " +
                                     shape_string(batch.shape()));

  std::unordered_map<std::string, Tensor> values;
  auto fetch = [&](const std::string& name) -> const Tensor* {
    if (name.empty()) return nullptr;
    if (name == model.input_name_) return &batch;
    if (auto it = model.initializers_.find(name); it != model.initializers_.end()) return &it->second;
    return &values.at(name);
  };

  for (std::size_t i = 0; i < model.nodes_.size(); ++i) {
    const Node& n = model.nodes_[i];
    auto arg = [&](std::size_t k) -> const Tensor* { return k < n.inputs.size() ? fetch(n.inputs[k]) : nullptr; };
    Tensor out;
    try {
      switch (n.op) {
        case OpType::conv: {
          const auto& a = std::get<ConvAttrs>(n.attrs);
          out = conv2d(*arg(0), *arg(1), arg(2), a.window, a.groups);
          break;
        }
        case OpType::batch_norm:
          out = batch_norm(*arg(0), *arg(1), *arg(2), *arg(3), *arg(4), attrs_as<BatchNormAttrs>(n).epsilon);
          break;
        case OpType::relu:
          out = relu(*arg(0));
          break;
        case OpType::max_pool: {
          const auto& a = std::get<PoolAttrs>(n.attrs);
          out = max_pool2d(*arg(0), a.window, a.ceil_mode);
          break;
        }
        case OpType::global_average_pool:
          out = global_average_pool(*arg(0));
          break;
        case OpType::flatten:
          out = flatten(*arg(0), attrs_as<FlattenAttrs>(n).axis);
          break;
        case OpType::dense:
          out = dense(*arg(0), *arg(1), arg(2), attrs_as<GemmOptions>(n));
          break;
        case OpType::add:
          out = add(*arg(0), *arg(1));
          break;
        case OpType::softmax: {
          const auto& a = attrs_as<SoftmaxAttrs>(n);
          out = softmax(*arg(0), a.axis, a.coerce_2d);
          break;
        }
      }
    } catch (const ShapeMismatch& e) {
      if (!e.node().empty()) throw;
      throw ShapeMismatch(n.name, e.what());
    }
    if (!out.all_finite()) throw NonFiniteValue(n.name);
    values.insert_or_assign(n.output, std::move(out));
    for (const auto& dead : model.release_after_[i]) values.erase(dead);
  }
  return std::move(values.at(model.output_name_));
}

ModelInfo model_info(const ModelGraph& model) {
  ModelInfo info;
  info.total_params = model.parameter_count();
  if (model.empty()) return info;
  info.input_shape = model.input_shape();
  info.output_shape = model.output_shape();
  for (const Node& n : model.nodes())
    info.nodes.push_back({n.name, std::string(op_name(n.op)), model.value_shape(n.output), model.node_parameters(n)});
  if (const auto& meta = model.metadata()) {
    info.trainable_params = meta->trainable_params;
    info.frozen_params = info.total_params - meta->trainable_params;
    info.class_order = meta->class_order;
    info.preproc = meta->preproc;
  }
  return info;
}

json to_json(const ModelInfo& info) {
  json j;
  j["total_params"] = info.total_params;
  j["trainable_params"] = info.trainable_params ? json(*info.trainable_params) : json(nullptr);
  j["frozen_params"] = info.frozen_params ? json(*info.frozen_params) : json(nullptr);
  j["input_shape"] = info.input_shape;
  j["output_shape"] = info.output_shape;
  json nodes = json::array();
  for (const auto& n : info.nodes)
    nodes.push_back({{"name", n.name}, {"op", n.op}, {"output_shape", n.output_shape}, {"parameters", n.parameters}});
  j["nodes"] = std::move(nodes);
  if (info.class_order) {
    json order = json::array();
    for (Category c : *info.class_order) order.push_back(canonical_id(c));
    j["class_order"] = std::move(order);
  } else {
    j["class_order"] = nullptr;
  }
  j["preproc"] = info.preproc ? preproc_to_json(*info.preproc) : json(nullptr);
  return j;
}

}  // namespace onionlens::infer
