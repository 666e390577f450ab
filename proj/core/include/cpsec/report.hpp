#pragma once

#include <string>
#include <string_view>

#include "cpsec/analysis.hpp"
#include "cpsec/corpus.hpp"
#include "cpsec/session.hpp"

namespace cpsec {

/// Sections, in order: attack surface, exploit chains for each selected
/// topology node, violation traces from every component_ref whose component
/// is violated by a bucket row, the bucket table (identical to bucket_export
/// in the same family of format) and the command log.
///
/// "json" or "markdown"; throws InvalidOperation otherwise. Output depends only
/// on the snapshot, so equal sessions give byte-identical reports.
std::string run_report(const SessionSnapshot& snapshot, std::string_view format,
                       const ChainLimits& limits = {});

}  // namespace cpsec
