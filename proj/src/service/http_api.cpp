#include "onionlens/service/http_api.hpp"

#include <charconv>

#include <httplib.h>

#include "onionlens/harvester/fetch.hpp"
#include "onionlens/version.hpp"

namespace onionlens::service {
namespace {

using nlohmann::json;

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& code, const std::string& message) {
  send_json(res, status, {{"error", code}, {"message", message}});
}

std::size_t query_size(const httplib::Request& req, const char* key, std::size_t fallback) {
  if (!req.has_param(key)) return fallback;
  const std::string v = req.get_param_value(key);
  std::size_t out = 0;
  const auto [end, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || end != v.data() + v.size()) throw std::invalid_argument(key);
  return out;
}

}  // namespace

ApiServer::ApiServer(ScanService& service, JobStore& store)
    : service_(service), store_(store), server_(std::make_unique<httplib::Server>()) {
  routes();
}

ApiServer::~ApiServer() { stop(); }

void ApiServer::routes() {
  auto& s = *server_;
  s.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                         {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                         {"Access-Control-Allow-Headers", "Content-Type"}});

  s.Options(R"(/api/v1/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

  s.Post("/api/v1/scans", [this](const httplib::Request& req, httplib::Response& res) {
    json body;
    try {
      body = json::parse(req.body);
    } catch (const json::exception&) {
      return send_error(res, 400, "invalid_json", "request body must be a JSON object");
    }
    if (!body.is_object() || !body.contains("url") || !body["url"].is_string())
      return send_error(res, 400, "invalid_request", "expected {\"url\": string}");
    if (!service_.ready()) return send_error(res, 503, "loading", "model is still loading");
    try {
      const ScanJob job = service_.submit(body["url"].get<std::string>());
      res.set_header("Location", "/api/v1/scans/" + job.id);
      send_json(res, 202, {{"id", job.id}, {"state", to_string(job.state)}, {"url", job.url}});
    } catch (const harvester::FetchError& e) {
      send_error(res, 400, std::string(harvester::to_string(e.kind())), e.what());
    }
  });

  s.Get(R"(/api/v1/scans/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
    const auto job = store_.get(req.matches[1].str());
    if (!job) return send_error(res, 404, "not_found", "unknown scan id");
    send_json(res, 200, to_json(*job));
  });

  s.Get("/api/v1/scans", [this](const httplib::Request& req, httplib::Response& res) {
    std::size_t offset = 0, limit = kDefaultPageSize;
    try {
      offset = query_size(req, "offset", 0);
      limit = std::min(query_size(req, "limit", kDefaultPageSize), kMaxPageSize);
    } catch (const std::invalid_argument& e) {
      return send_error(res, 400, "invalid_request", std::string("bad ") + e.what() + " parameter");
    }
    json items = json::array();
    for (const auto& job : store_.list(offset, limit)) items.push_back(to_json(job, false));
    send_json(res, 200, {{"total", store_.size()}, {"offset", offset}, {"limit", limit}, {"items", items}});
  });

  s.Get("/api/v1/health", [this](const httplib::Request&, httplib::Response& res) {
    const auto artifacts = service_.artifacts();
    if (!artifacts) return send_json(res, 503, {{"status", "loading"}, {"version", onionlens::version()}});
    const auto& meta = artifacts->model.metadata();
    send_json(res, 200,
              {{"status", "ok"},
               {"version", onionlens::version()},
               {"model",
                {{"total_params", artifacts->model.parameter_count()},
                 {"trainable_params", meta ? json(meta->trainable_params) : json(nullptr)}}},
               {"embedding_dimension", artifacts->embeddings.dimension()},
               {"jobs", store_.size()}});
  });

  s.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    std::string what = "internal error";
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      what = e.what();
    } catch (...) {
    }
    send_error(res, 500, "internal", what);
  });
}

int ApiServer::bind(const std::string& host, int port) {
  if (port == 0) return server_->bind_to_any_port(host);
  return server_->bind_to_port(host, port) ? port : -1;
}

bool ApiServer::listen() { return server_->listen_after_bind(); }

void ApiServer::stop() {
  if (server_) server_->stop();
}

bool ApiServer::running() const { return server_->is_running(); }

}  // namespace onionlens::service
