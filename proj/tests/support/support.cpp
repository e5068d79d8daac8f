#include "support/support.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <httplib.h>

#include "onionlens/infer/kernels.hpp"
#include "onionlens/service/cli.hpp"
#include "onionlens/service/http_api.hpp"

namespace onionlens::test {
namespace fs = std::filesystem;

fs::path fixture(const std::string& rel) { return fs::path(ONIONLENS_FIXTURES) / rel; }
fs::path data_file(const std::string& rel) { return fs::path(ONIONLENS_DATA) / rel; }

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::uint8_t> read_bytes(const fs::path& path) {
  const auto text = read_text(path);
  return {text.begin(), text.end()};
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << text;
}

nlohmann::json read_json(const fs::path& path) { return nlohmann::json::parse(read_text(path)); }

infer::Tensor tensor_from_json(const nlohmann::json& j) {
  return infer::Tensor(j.at("shape").get<infer::Shape>(), j.at("data").get<std::vector<float>>());
}

bool close_relative(const infer::Tensor& got, const infer::Tensor& ref, double tol, double* worst) {
  if (got.shape() != ref.shape()) return false;
  double scale = 1e-12;
  for (float v : ref.values()) scale = std::max(scale, std::abs(static_cast<double>(v)));
  double diff = 0.0;
  for (std::size_t i = 0; i < got.size(); ++i)
    diff = std::max(diff, std::abs(static_cast<double>(got[i]) - ref[i]));
  if (worst) *worst = diff / scale;
  return diff <= tol * scale;
}

TempDir::TempDir() {
  static std::atomic<int> counter{0};
  std::random_device rd;
  path_ = fs::temp_directory_path() /
          ("onionlens-test-" + std::to_string(rd()) + "-" + std::to_string(counter++));
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

curation::DecodedImage solid(int w, int h, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  curation::DecodedImage img(w, h, 3);
  for (std::size_t i = 0; i < img.pixels.size(); i += 3) {
    img.pixels[i] = r;
    img.pixels[i + 1] = g;
    img.pixels[i + 2] = b;
  }
  return img;
}

std::string drugs_host() { return read_json(fixture("sites/hosts.json")).at("drugs"); }
std::string weapons_host() { return read_json(fixture("sites/hosts.json")).at("weapons"); }

PipelineConfig mock_config(const std::string& proxy_url) {
  PipelineConfig cfg;
  cfg.proxy_url = proxy_url;
  cfg.crawl.per_host_delay_ms = 20;
  cfg.crawl.timeout_ms = 5000;
  cfg.crawl.backoff_ms = 20;
  cfg.paths.model = fixture("models/micro.onnx");
  cfg.paths.embeddings = fixture("embeddings.txt");
  cfg.paths.prototypes = data_file("seed_terms.json");
  return cfg;
}

DedupCorpus make_dedup_corpus(std::uint32_t seed) {
  constexpr int kBases = 70;
  constexpr int kCopies = 30;
  constexpr int kW = 72;
  constexpr int kH = 64;
  std::mt19937 rng(seed);
  DedupCorpus corpus;
  std::vector<curation::DecodedImage> bases;
  for (int b = 0; b < kBases; ++b) {
    // 9x8 blocks of 8x8 pixels; horizontally adjacent blocks differ by >= 8
    // so the 9x8 hash grid sees clean edges.
    std::uniform_int_distribution<int> level(16, 239);
    std::array<std::array<int, 9>, 8> blocks{};
    for (auto& row : blocks) {
      for (int c = 0; c < 9; ++c) {
        int v;
        do v = level(rng);
        while (c > 0 && std::abs(v - row[static_cast<std::size_t>(c - 1)]) < 8);
        row[static_cast<std::size_t>(c)] = v;
      }
    }
    curation::DecodedImage img(kW, kH, 1);
    for (int y = 0; y < kH; ++y)
      for (int x = 0; x < kW; ++x)
        img.at(x, y, 0) = static_cast<std::uint8_t>(blocks[static_cast<std::size_t>(y / 8)][static_cast<std::size_t>(x / 8)]);
    bases.push_back(std::move(img));
  }
  for (int b = 0; b < kBases; ++b) {
    corpus.images.push_back(bases[static_cast<std::size_t>(b)]);
    corpus.base_of.push_back(b);
  }
  std::uniform_int_distribution<int> noise(-2, 2);
  std::uniform_int_distribution<int> pick(0, kBases - 1);
  for (int i = 0; i < kCopies; ++i) {
    const int b = pick(rng);
    auto img = bases[static_cast<std::size_t>(b)];
    for (auto& p : img.pixels) p = static_cast<std::uint8_t>(std::clamp(p + noise(rng), 0, 255));
    corpus.images.push_back(std::move(img));
    corpus.base_of.push_back(b);
  }
  std::vector<std::size_t> order(corpus.images.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  DedupCorpus shuffled;
  for (auto i : order) {
    shuffled.images.push_back(std::move(corpus.images[i]));
    shuffled.base_of.push_back(corpus.base_of[i]);
  }
  return shuffled;
}

std::uint64_t oracle_dhash(const curation::DecodedImage& img) {
  const int w = img.width;
  const int h = img.height;
  auto luma = [&](int x, int y) {
    if (img.channels == 1) return static_cast<double>(img.at(x, y, 0));
    return 0.299 * img.at(x, y, 0) + 0.587 * img.at(x, y, 1) + 0.114 * img.at(x, y, 2);
  };
  auto source = [](int d, int in, int out) {
    double s = (d + 0.5) * in / out - 0.5;
    return std::min(std::max(s, 0.0), static_cast<double>(in - 1));
  };
  double grid[8][9];
  for (int r = 0; r < 8; ++r) {
    const double sy = source(r, h, 8);
    const int y0 = static_cast<int>(std::floor(sy));
    const int y1 = std::min(y0 + 1, h - 1);
    for (int c = 0; c < 9; ++c) {
      const double sx = source(c, w, 9);
      const int x0 = static_cast<int>(std::floor(sx));
      const int x1 = std::min(x0 + 1, w - 1);
      const double top = luma(x0, y0) + (luma(x1, y0) - luma(x0, y0)) * (sx - x0);
      const double bottom = luma(x0, y1) + (luma(x1, y1) - luma(x0, y1)) * (sx - x0);
      grid[r][c] = top + (bottom - top) * (sy - y0);
    }
  }
  std::uint64_t hash = 0;
  for (int r = 0; r < 8; ++r)
    for (int c = 0; c < 8; ++c)
      if (grid[r][c] > grid[r][c + 1]) hash |= std::uint64_t{1} << (r * 8 + c);
  return hash;
}

std::vector<std::size_t> oracle_dedupe(const std::vector<std::uint64_t>& hashes, int threshold, bool* tight) {
  const std::size_t n = hashes.size();
  std::vector<std::size_t> component(n);
  std::iota(component.begin(), component.end(), 0);
  // Label propagation to a fixed point; every label ends as the smallest
  // index in its component.
  for (bool changed = true; changed;) {
    changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (std::popcount(hashes[i] ^ hashes[j]) <= threshold && component[j] < component[i]) {
          component[i] = component[j];
          changed = true;
        }
      }
    }
  }
  if (tight) {
    *tight = true;
    for (std::size_t i = 0; i < n; ++i)
      if (std::popcount(hashes[i] ^ hashes[component[i]]) > threshold) *tight = false;
  }
  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < n; ++i)
    if (component[i] == i) kept.push_back(i);
  return kept;
}

fs::path write_mock_config(const fs::path& dir, const std::string& proxy_url) {
  const PipelineConfig cfg = mock_config(proxy_url);
  const nlohmann::json j = {
      {"proxy_url", cfg.proxy_url},
      {"per_host_delay_ms", cfg.crawl.per_host_delay_ms},
      {"timeout_ms", cfg.crawl.timeout_ms},
      {"backoff_ms", cfg.crawl.backoff_ms},
      {"model_path", cfg.paths.model.string()},
      {"embeddings_path", cfg.paths.embeddings.string()},
      {"prototypes_path", cfg.paths.prototypes.string()},
      {"job_store_path", (dir / "jobs").string()},
  };
  const fs::path path = dir / "onionlens.json";
  write_text(path, j.dump(2));
  return path;
}

int cli(const std::vector<std::string>& args, std::string* out, std::string* err) {
  std::ostringstream o, e;
  std::vector<std::string> full{"onionlens"};
  full.insert(full.end(), args.begin(), args.end());
  const int code = service::run_cli(full, o, e);
  if (out) *out = o.str();
  if (err) *err = e.str();
  return code;
}

nlohmann::json cli_scan_report(const std::string& proxy_url, const std::string& url, int* exit_code) {
  TempDir dir;
  const auto config = write_mock_config(dir.path(), proxy_url);
  const auto report = dir / "report.json";
  const int code = cli({"scan", "--config", config.string(), "--url", url, "--out", report.string()});
  if (exit_code) *exit_code = code;
  if (code != 0) return nullptr;
  return read_json(report);
}

nlohmann::json api_scan_report(const std::string& proxy_url, const std::string& url, std::chrono::seconds deadline) {
  TempDir dir;
  const PipelineConfig cfg = load_config(write_mock_config(dir.path(), proxy_url));
  service::JobStore store(cfg.paths.job_store);
  service::ScanService scans(cfg, store);
  scans.set_artifacts(service::load_artifacts(cfg));
  scans.start();
  service::ApiServer api(scans, store);
  const int port = api.bind("127.0.0.1", 0);
  if (port <= 0) throw std::runtime_error("cannot bind the API server");
  std::jthread server([&] { api.listen(); });
  while (!api.running()) std::this_thread::sleep_for(std::chrono::milliseconds(1));

  httplib::Client client("127.0.0.1", port);
  nlohmann::json result = nullptr;
  const auto posted = client.Post("/api/v1/scans", nlohmann::json{{"url", url}}.dump(), "application/json");
  if (posted && posted->status == 202) {
    const std::string id = nlohmann::json::parse(posted->body)["id"];
    const auto stop_at = std::chrono::steady_clock::now() + deadline;
    while (std::chrono::steady_clock::now() < stop_at) {
      const auto got = client.Get("/api/v1/scans/" + id);
      if (!got || got->status != 200) break;
      const auto job = nlohmann::json::parse(got->body);
      if (job["state"] == "done") {
        result = job["report"];
        break;
      }
      if (job["state"] == "failed") break;
      std::this_thread::sleep_for(std::chrono::milliseconds(25));
    }
  }
  api.stop();
  server.join();
  scans.stop();
  return result;
}

fs::path golden_report_path() { return fixture("golden_report.json"); }

namespace {

std::optional<infer::Tensor> maybe_tensor(const nlohmann::json& j) {
  if (j.is_null()) return std::nullopt;
  return tensor_from_json(j);
}

}  // namespace

using namespace infer;

infer::Tensor run_kernel_case(const nlohmann::json& c) {
  const std::string op = c.at("op");
  if (op == "conv") {
    const auto x = tensor_from_json(c.at("x"));
    const auto w = tensor_from_json(c.at("w"));
    const auto b = maybe_tensor(c.at("b"));
    Window2d win;
    win.kernel_h = static_cast<int>(w.dim(2));
    win.kernel_w = static_cast<int>(w.dim(3));
    win.stride_h = c["stride"][0];
    win.stride_w = c["stride"][1];
    win.dilation_h = c["dilation"][0];
    win.dilation_w = c["dilation"][1];
    win.pad_top = c["pads"][0];
    win.pad_left = c["pads"][1];
    win.pad_bottom = c["pads"][2];
    win.pad_right = c["pads"][3];
    return conv2d(x, w, b ? &*b : nullptr, win, c.at("groups"));
  }
  if (op == "dense") {
    const auto cc = maybe_tensor(c.at("c"));
    GemmOptions o{c.at("alpha"), c.at("beta"), c.at("trans_a"), c.at("trans_b")};
    return dense(tensor_from_json(c.at("a")), tensor_from_json(c.at("b")), cc ? &*cc : nullptr, o);
  }
  if (op == "batch_norm") {
    return batch_norm(tensor_from_json(c.at("x")), tensor_from_json(c.at("scale")),
                      tensor_from_json(c.at("bias")), tensor_from_json(c.at("mean")),
                      tensor_from_json(c.at("var")), c.at("epsilon"));
  }
  if (op == "max_pool") {
    Window2d win;
    win.kernel_h = c["kernel"][0];
    win.kernel_w = c["kernel"][1];
    win.stride_h = c["stride"][0];
    win.stride_w = c["stride"][1];
    win.pad_top = c["pads"][0];
    win.pad_left = c["pads"][1];
    win.pad_bottom = c["pads"][2];
    win.pad_right = c["pads"][3];
    return max_pool2d(tensor_from_json(c.at("x")), win, c.at("ceil_mode"));
  }
  if (op == "global_average_pool") return global_average_pool(tensor_from_json(c.at("x")));
  if (op == "softmax") return softmax(tensor_from_json(c.at("x")), c.at("axis"));
  if (op == "add") return add(tensor_from_json(c.at("a")), tensor_from_json(c.at("b")));
  throw std::runtime_error("unknown op " + op);
}

}  // namespace onionlens::test
