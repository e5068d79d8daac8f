#pragma once

#include <functional>
#include <string_view>

#include "onionlens/domain/config.hpp"
#include "onionlens/fusion/report.hpp"
#include "onionlens/harvester/url.hpp"
#include "onionlens/service/artifacts.hpp"

namespace onionlens::service {

enum class ScanPhase { crawling, classifying };
using ProgressFn = std::function<void(ScanPhase)>;

/// Scheme and onion policy check; throws harvester::FetchError without
/// touching the network.
harvester::Url validate_scan_url(std::string_view url, const PipelineConfig& config);

/// crawl -> download up to max_images_per_scan images -> decode -> dedupe ->
/// classify -> keywords over the page text -> fuse. Throws FetchError for a
/// rejected URL and harvester::AllSeedsFailed when nothing was fetched.
fusion::ActivityReport run_scan(std::string_view url, const PipelineConfig& config, const Artifacts& artifacts,
                                const ProgressFn& progress = {});

}  // namespace onionlens::service
