#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "onionlens/curation/image.hpp"
#include "onionlens/domain/config.hpp"
#include "onionlens/infer/tensor.hpp"

namespace onionlens::test {

std::filesystem::path fixture(const std::string& rel);
std::filesystem::path data_file(const std::string& rel);
std::string read_text(const std::filesystem::path& path);
std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);
nlohmann::json read_json(const std::filesystem::path& path);

infer::Tensor tensor_from_json(const nlohmann::json& j);
/// Runs one case of kernels/reference.json through the matching kernel.
infer::Tensor run_kernel_case(const nlohmann::json& c);

/// max|a-b| <= tol * max(|ref|, 1e-12) over all elements; shapes must match.
bool close_relative(const infer::Tensor& got, const infer::Tensor& ref, double tol, double* worst = nullptr);

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const noexcept { return path_; }
  std::filesystem::path operator/(const std::string& rel) const { return path_ / rel; }

 private:
  std::filesystem::path path_;
};

curation::DecodedImage solid(int w, int h, std::uint8_t r, std::uint8_t g, std::uint8_t b);

/// Names of the mock onion sites, from fixtures/sites/hosts.json.
std::string drugs_host();
std::string weapons_host();

/// Config for runs against a MockOnionNet: fast politeness delay, fixture
/// model and embeddings.
PipelineConfig mock_config(const std::string& proxy_url);

/// The synthetic dedup corpus: 70 block-pattern bases plus 30 near copies
/// (+-2 noise), deterministically shuffled.
struct DedupCorpus {
  std::vector<curation::DecodedImage> images;
  std::vector<int> base_of;  // index of the base each image derives from
};
DedupCorpus make_dedup_corpus(std::uint32_t seed = 20240);

/// Independent dHash (luma, half-pixel bilinear to 9x8, adjacent compare).
std::uint64_t oracle_dhash(const curation::DecodedImage& img);

/// Kept indices from the O(n^2) clustering oracle: components of the graph
/// with an edge wherever Hamming distance <= threshold, represented by their
/// first member. Sets `tight` when every member lies within threshold of
/// its representative, the case where greedy and clustering must coincide.
std::vector<std::size_t> oracle_dedupe(const std::vector<std::uint64_t>& hashes, int threshold,
                                       bool* tight = nullptr);

/// Writes a flat config file equivalent to mock_config(proxy_url).
std::filesystem::path write_mock_config(const std::filesystem::path& dir, const std::string& proxy_url);

/// run_cli with captured streams.
int cli(const std::vector<std::string>& args, std::string* out = nullptr, std::string* err = nullptr);

/// `onionlens scan` with a mock config file; returns the parsed report or
/// null when the command failed.
nlohmann::json cli_scan_report(const std::string& proxy_url, const std::string& url, int* exit_code = nullptr);

/// Same scan through a freshly started HTTP API: POST then poll until the
/// job is terminal. Returns the job's report or null.
nlohmann::json api_scan_report(const std::string& proxy_url, const std::string& url,
                               std::chrono::seconds deadline = std::chrono::seconds(60));

std::filesystem::path golden_report_path();

}  // namespace onionlens::test
