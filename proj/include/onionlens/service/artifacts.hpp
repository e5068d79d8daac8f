#pragma once

#include <memory>

#include "onionlens/domain/config.hpp"
#include "onionlens/infer/model.hpp"
#include "onionlens/keywords/keywords.hpp"

namespace onionlens::service {

/// A required artifact is missing or unreadable.
class ArtifactError : public Error {
 public:
  using Error::Error;
};

/// Everything a scan needs besides the network. Immutable and shared.
struct Artifacts {
  infer::ModelGraph model;
  keywords::EmbeddingTable embeddings;
  keywords::CategoryPrototypes prototypes;
  keywords::StopwordSet stopwords;
};

/// Model and embeddings are required; prototypes fall back to the built-in
/// seed terms and stopwords to the built-in list. Throws ArtifactError.
std::shared_ptr<const Artifacts> load_artifacts(const PipelineConfig& config);

}  // namespace onionlens::service
