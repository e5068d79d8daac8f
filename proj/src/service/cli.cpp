#include "onionlens/service/cli.hpp"

#include <atomic>
#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <thread>

#include <CLI11.hpp>

#include "onionlens/curation/decode.hpp"
#include "onionlens/curation/dedupe.hpp"
#include "onionlens/curation/manifest.hpp"
#include "onionlens/fusion/metrics.hpp"
#include "onionlens/harvester/crawler.hpp"
#include "onionlens/infer/classify.hpp"
#include "onionlens/service/http_api.hpp"
#include "onionlens/service/pipeline.hpp"
#include "onionlens/version.hpp"

namespace onionlens::service {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

/// Thrown for anything that should end with exit code 2.
class UsageError : public Error {
 public:
  using Error::Error;
};

/// Flags shared by the subcommands; unset optionals leave the config alone.
struct Flags {
  std::string config;
  std::optional<std::string> proxy;
  std::optional<int> threshold;
  std::optional<int> max_pages;
  std::optional<int> max_depth;
  std::optional<int> delay_ms;
  std::optional<int> timeout_ms;
  std::optional<int> min_side;
  bool allow_clearnet = false;
  std::optional<std::string> model;
  std::optional<std::string> embeddings;
  std::optional<std::string> prototypes;
  std::optional<std::string> stopwords;
  std::optional<std::string> job_store;
  std::optional<std::string> bind;
  std::optional<int> port;
};

void add_config_flag(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config, "JSON config file (default: $ONIONLENS_CONFIG)");
}

void add_network_flags(CLI::App* cmd, Flags& f) {
  cmd->add_option("--proxy", f.proxy, "SOCKS5h proxy URL (default: $ONIONLENS_PROXY or socks5h://127.0.0.1:9050)");
  cmd->add_option("--max-pages", f.max_pages, "Page budget per crawl");
  cmd->add_option("--max-depth", f.max_depth, "Link depth from the seed");
  cmd->add_option("--delay-ms", f.delay_ms, "Minimum gap between requests to one host");
  cmd->add_option("--timeout-ms", f.timeout_ms, "Per-request timeout");
  cmd->add_flag("--allow-clearnet", f.allow_clearnet, "Permit non-.onion hosts (testing only)");
}

void add_artifact_flags(CLI::App* cmd, Flags& f) {
  cmd->add_option("--model", f.model, "ONNX model file");
  cmd->add_option("--embeddings", f.embeddings, "Word vector text file");
  cmd->add_option("--prototypes", f.prototypes, "Category seed-term JSON (default: built-in)");
  cmd->add_option("--stopwords", f.stopwords, "Stopword list (default: built-in)");
}

void add_curation_flags(CLI::App* cmd, Flags& f) {
  cmd->add_option("--threshold", f.threshold, "Dedup Hamming threshold in bits");
  cmd->add_option("--min-side", f.min_side, "Smallest usable image side in pixels");
}

/// defaults < config file < environment < flags.
PipelineConfig build_config(const Flags& f) {
  PipelineConfig cfg;
  std::string path = f.config;
  if (path.empty())
    if (const char* env = std::getenv(kConfigEnv); env && *env) path = env;
  if (!path.empty()) cfg = load_config(path);
  apply_environment(cfg);
  if (f.proxy) cfg.proxy_url = *f.proxy;
  if (f.threshold) cfg.dedup_threshold = *f.threshold;
  if (f.max_pages) cfg.crawl.max_pages = *f.max_pages;
  if (f.max_depth) cfg.crawl.max_depth = *f.max_depth;
  if (f.delay_ms) cfg.crawl.per_host_delay_ms = *f.delay_ms;
  if (f.timeout_ms) cfg.crawl.timeout_ms = *f.timeout_ms;
  if (f.min_side) cfg.min_side = *f.min_side;
  if (f.allow_clearnet) cfg.allow_clearnet = true;
  if (f.model) cfg.paths.model = *f.model;
  if (f.embeddings) cfg.paths.embeddings = *f.embeddings;
  if (f.prototypes) cfg.paths.prototypes = *f.prototypes;
  if (f.stopwords) cfg.paths.stopwords = *f.stopwords;
  if (f.job_store) cfg.paths.job_store = *f.job_store;
  if (f.bind) cfg.service.bind = *f.bind;
  if (f.port) cfg.service.port = *f.port;
  cfg.validate();
  return cfg;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw UsageError("cannot write " + path.string());
  out << text;
  if (!out) throw Error("write failed for " + path.string());
}

std::vector<std::uint8_t> read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw curation::IoError("cannot read " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

infer::ModelGraph load_model_or_usage(const fs::path& path) {
  if (path.empty()) throw UsageError("no model given (--model or model_path)");
  std::error_code ec;
  if (!fs::is_regular_file(path, ec)) throw UsageError("model file not found: " + path.string());
  try {
    return infer::load_model(path);
  } catch (const infer::ModelError& e) {
    throw UsageError("model " + path.string() + ": " + e.what());
  }
}

std::string format_ratio(const fusion::Ratio& r) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(4) << r.value;
  if (!r.defined) s << " (undefined)";
  return s.str();
}

int cmd_scan(const Flags& f, const std::string& url, const std::string& out_path, std::ostream& out,
             std::ostream& err) {
  const PipelineConfig cfg = build_config(f);
  try {
    validate_scan_url(url, cfg);
  } catch (const harvester::FetchError& e) {
    throw UsageError(std::string(harvester::to_string(e.kind())) + ": " + e.what());
  }
  const auto artifacts = load_artifacts(cfg);

  fusion::ActivityReport report;
  try {
    report = run_scan(url, cfg, *artifacts);
  } catch (const harvester::AllSeedsFailed& e) {
    err << "onionlens: " << e.what() << "\n";
    for (const auto& entry : e.errors())
      err << "  " << entry.url << ": " << harvester::to_string(entry.kind) << ": " << entry.message << "\n";
    return kExitFailure;
  }
  const std::string text = fusion::to_json(report).dump(2) + "\n";
  const std::string summary = "activity: " + fusion::activity_title(report.activity.category) + " (" +
                              std::string(fusion::to_string(report.activity.source)) + ")\n";
  if (out_path.empty()) {
    out << text;
    err << summary;
  } else {
    write_text(out_path, text);
    out << summary;
  }
  return kExitOk;
}

int cmd_evaluate(const Flags& f, const std::string& manifest_path, const std::string& out_path, std::ostream& out,
                 std::ostream& err) {
  const PipelineConfig cfg = build_config(f);
  const infer::ModelGraph model = load_model_or_usage(cfg.paths.model);
  curation::DatasetManifest manifest;
  try {
    manifest = curation::load_manifest(manifest_path);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  if (manifest.entries.empty()) throw UsageError("manifest " + manifest_path + " has no entries");

  const fs::path base = fs::path(manifest_path).parent_path();
  fusion::ConfusionMatrix cm;
  json skipped = json::array();
  for (const auto& entry : manifest.entries) {
    if (!entry.label) {
      skipped.push_back({{"path", entry.path}, {"reason", "unlabeled"}});
      continue;
    }
    std::vector<std::uint8_t> bytes;
    try {
      bytes = read_bytes(base / entry.path);
    } catch (const curation::IoError&) {
      err << "onionlens: missing image " << entry.path << "\n";
      skipped.push_back({{"path", entry.path}, {"reason", "missing"}});
      continue;
    }
    const auto decoded = curation::decode_and_validate(bytes, cfg.min_side);
    if (!decoded.status.ok) {
      skipped.push_back({{"path", entry.path}, {"reason", decoded.status.reason}});
      continue;
    }
    cm.add(*entry.label, infer::classify(model, *decoded.image).top);
  }
  if (cm.total() == 0) {
    err << "onionlens: no manifest entry could be evaluated\n";
    return kExitFailure;
  }

  const auto metrics = fusion::evaluate(cm);
  out << "evaluated " << metrics.total << " images, skipped " << skipped.size() << "\n";
  out << std::left << std::setw(22) << "category" << std::setw(22) << "precision" << "recall\n";
  for (Category c : kAllCategories) {
    const auto i = index_of(c);
    out << std::left << std::setw(22) << canonical_id(c) << std::setw(22) << format_ratio(metrics.precision[i])
        << format_ratio(metrics.recall[i]) << "\n";
  }
  out << "macro precision " << std::fixed << std::setprecision(4) << metrics.macro_precision.value
      << ", macro recall " << metrics.macro_recall.value << "\n";
  out << "accuracy " << format_ratio(metrics.accuracy) << " (" << metrics.accuracy.numerator << "/"
      << metrics.accuracy.denominator << ")\n";

  if (!out_path.empty()) {
    json j = fusion::to_json(metrics);
    j["skipped"] = std::move(skipped);
    write_text(out_path, j.dump(2) + "\n");
  }
  return kExitOk;
}

int cmd_dedupe(const Flags& f, const std::string& in_dir, std::string out_path, std::ostream& out, std::ostream& err) {
  const PipelineConfig cfg = build_config(f);
  std::error_code ec;
  if (!fs::is_directory(in_dir, ec)) throw UsageError("not a directory: " + in_dir);
  if (out_path.empty()) out_path = (fs::path(in_dir) / "manifest.jsonl").string();
  const fs::path manifest_file = fs::absolute(out_path);
  const fs::path manifest_dir = manifest_file.parent_path();

  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(in_dir)) {
    if (!entry.is_regular_file()) continue;
    const fs::path abs = fs::absolute(entry.path());
    if (abs == manifest_file || abs.extension() == ".jsonl" || abs.extension() == ".tmp") continue;
    files.push_back(abs);
  }
  std::ranges::sort(files);

  std::vector<curation::ImageRecord> decoded;
  std::vector<std::optional<Category>> labels;
  int unusable = 0;
  for (const auto& file : files) {
    curation::ImageRecord rec;
    rec.source_url = "file://" + file.generic_string();
    rec.bytes = read_bytes(file);
    curation::curate(rec, cfg.min_side);
    if (!rec.decoded()) {
      ++unusable;
      err << "onionlens: unusable " << file.string() << ": " << rec.status->reason << "\n";
      continue;
    }
    // Images under <in>/<category>/ inherit that label.
    const fs::path rel = fs::relative(file, fs::absolute(in_dir));
    if (std::distance(rel.begin(), rel.end()) >= 2) rec.label = try_resolve_category(rel.begin()->string());
    rec.image.reset();
    decoded.push_back(std::move(rec));
  }

  auto result = curation::dedupe(std::move(decoded), cfg.dedup_threshold);
  curation::DatasetManifest manifest;
  for (const auto& rec : result.kept) {
    const fs::path file = rec.source_url.substr(std::string("file://").size());
    manifest.entries.push_back(
        {fs::relative(file, manifest_dir).generic_string(), rec.label, *rec.dhash, std::nullopt, rec.source_url});
  }
  curation::save_manifest(manifest, manifest_file);
  out << "kept " << result.kept.size() << ", dropped " << result.dropped.size() << ", unusable " << unusable
      << " -> " << manifest_file.string() << "\n";
  return kExitOk;
}

int cmd_model_info(const Flags& f, bool as_json, std::ostream& out) {
  const PipelineConfig cfg = build_config(f);
  const auto model = load_model_or_usage(cfg.paths.model);
  const auto info = infer::model_info(model);
  if (as_json) {
    out << infer::to_json(info).dump(2) << "\n";
    return kExitOk;
  }
  out << "total parameters:     " << info.total_params << "\n";
  if (info.trainable_params) {
    out << "trainable parameters: " << *info.trainable_params << "\n";
    out << "frozen parameters:    " << *info.frozen_params << "\n";
  }
  out << "input:  " << infer::shape_string(info.input_shape) << "\n";
  out << "output: " << infer::shape_string(info.output_shape) << "\n";
  if (info.class_order) {
    out << "class order:";
    for (Category c : *info.class_order) out << " " << canonical_id(c);
    out << "\n";
  }
  out << info.nodes.size() << " nodes\n";
  for (const auto& n : info.nodes)
    out << "  " << std::left << std::setw(28) << n.name << std::setw(20) << n.op << std::setw(20)
        << infer::shape_string(n.output_shape) << n.parameters << "\n";
  return kExitOk;
}

std::atomic<bool> g_stop_requested{false};

extern "C" void on_stop_signal(int) { g_stop_requested.store(true); }

int cmd_serve(const Flags& f, std::ostream& out, std::ostream& err) {
  const PipelineConfig cfg = build_config(f);
  JobStore store(cfg.paths.job_store);
  ScanService service(cfg, store);
  ApiServer api(service, store);
  const int port = api.bind(cfg.service.bind, cfg.service.port);
  if (port < 0) throw UsageError("cannot bind " + cfg.service.bind + ":" + std::to_string(cfg.service.port));
  service.start();

  std::atomic<bool> load_failed{false};
  std::jthread loader([&] {
    try {
      service.set_artifacts(load_artifacts(cfg));
      err << "onionlens: artifacts loaded\n";
    } catch (const std::exception& e) {
      err << "onionlens: " << e.what() << "\n";
      load_failed = true;
      api.stop();
    }
  });

  g_stop_requested = false;
  std::signal(SIGINT, on_stop_signal);
  std::signal(SIGTERM, on_stop_signal);
  std::jthread watcher([&](std::stop_token st) {
    while (!st.stop_requested() && !g_stop_requested.load())
      std::this_thread::sleep_for(std::chrono::milliseconds(100));
    api.stop();
  });

  out << "listening on http://" << cfg.service.bind << ":" << port << std::endl;
  api.listen();
  watcher.request_stop();
  watcher.join();
  loader.join();
  service.stop();
  std::signal(SIGINT, SIG_DFL);
  std::signal(SIGTERM, SIG_DFL);
  return load_failed ? kExitUsage : kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Onion-service activity detection: crawl, classify images, extract keywords, fuse."};
  app.set_version_flag("--version", onionlens::version());
  app.require_subcommand(1);

  Flags scan_f, eval_f, dedupe_f, serve_f, info_f;
  std::string scan_url, scan_out, eval_manifest, eval_out, dedupe_in, dedupe_out;
  bool info_json = false;

  auto* scan = app.add_subcommand("scan", "Crawl one onion URL and write an activity report");
  scan->add_option("--url", scan_url, "Seed URL")->required();
  scan->add_option("--out", scan_out, "Report file (default: stdout)");
  add_config_flag(scan, scan_f);
  add_network_flags(scan, scan_f);
  add_artifact_flags(scan, scan_f);
  add_curation_flags(scan, scan_f);

  auto* evaluate = app.add_subcommand("evaluate", "Score a model against a labeled manifest");
  evaluate->add_option("--manifest", eval_manifest, "Manifest JSONL")->required();
  evaluate->add_option("--model", eval_f.model, "ONNX model file");
  evaluate->add_option("--out", eval_out, "Metrics JSON file");
  evaluate->add_option("--min-side", eval_f.min_side, "Smallest usable image side in pixels");
  add_config_flag(evaluate, eval_f);

  auto* dedupe = app.add_subcommand("dedupe", "Curate and deduplicate a directory of images into a manifest");
  dedupe->add_option("--in", dedupe_in, "Image directory")->required();
  dedupe->add_option("--out", dedupe_out, "Manifest path (default: <in>/manifest.jsonl)");
  add_config_flag(dedupe, dedupe_f);
  add_curation_flags(dedupe, dedupe_f);

  auto* serve = app.add_subcommand("serve", "Run the HTTP scan service");
  add_config_flag(serve, serve_f);
  add_network_flags(serve, serve_f);
  add_artifact_flags(serve, serve_f);
  add_curation_flags(serve, serve_f);
  serve->add_option("--job-store", serve_f.job_store, "Job store directory");
  serve->add_option("--bind", serve_f.bind, "Listen address");
  serve->add_option("--port", serve_f.port, "Listen port");

  auto* info = app.add_subcommand("model-info", "Print parameter counts and node shapes of a model");
  info->add_option("--model", info_f.model, "ONNX model file");
  info->add_flag("--json", info_json, "Print JSON");
  add_config_flag(info, info_f);

  try {
    // CLI11 consumes arguments from the back; drop the program name.
    std::vector<std::string> rest(args.rbegin(), args.rend());
    if (!rest.empty()) rest.pop_back();
    app.parse(rest);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*scan) return cmd_scan(scan_f, scan_url, scan_out, out, err);
    if (*evaluate) return cmd_evaluate(eval_f, eval_manifest, eval_out, out, err);
    if (*dedupe) return cmd_dedupe(dedupe_f, dedupe_in, dedupe_out, out, err);
    if (*serve) return cmd_serve(serve_f, out, err);
    if (*info) return cmd_model_info(info_f, info_json, out);
  } catch (const ConfigError& e) {
    err << "onionlens: config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const UsageError& e) {
    err << "onionlens: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ArtifactError& e) {
    err << "onionlens: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "onionlens: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace onionlens::service
