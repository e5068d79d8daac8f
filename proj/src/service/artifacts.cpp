#include "onionlens/service/artifacts.hpp"

#include <filesystem>

namespace onionlens::service {
namespace {

void require_file(const std::filesystem::path& path, const char* what) {
  if (path.empty()) throw ArtifactError(std::string("no ") + what + " path configured");
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec))
    throw ArtifactError(std::string(what) + " file not found: " + path.string());
}

}  // namespace

std::shared_ptr<const Artifacts> load_artifacts(const PipelineConfig& config) {
  const auto& paths = config.paths;
  require_file(paths.model, "model");
  require_file(paths.embeddings, "embeddings");
  if (!paths.prototypes.empty()) require_file(paths.prototypes, "prototypes");
  if (!paths.stopwords.empty()) require_file(paths.stopwords, "stopwords");

  auto out = std::make_shared<Artifacts>();
  try {
    out->model = infer::load_model(paths.model);
  } catch (const Error& e) {
    throw ArtifactError("model " + paths.model.string() + ": " + e.what());
  }
  try {
    out->embeddings = keywords::load_embeddings(paths.embeddings);
  } catch (const Error& e) {
    throw ArtifactError("embeddings " + paths.embeddings.string() + ": " + e.what());
  }
  if (out->embeddings.size() == 0) throw ArtifactError("embeddings " + paths.embeddings.string() + " are empty");
  try {
    const auto seeds = paths.prototypes.empty() ? keywords::default_seed_terms()
                                                : keywords::load_seed_terms(paths.prototypes);
    out->prototypes = keywords::build_prototypes(seeds, out->embeddings);
    out->stopwords = paths.stopwords.empty() ? keywords::default_stopwords() : keywords::load_stopwords(paths.stopwords);
  } catch (const Error& e) {
    throw ArtifactError(e.what());
  }
  return out;
}

}  // namespace onionlens::service
