#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include "nlostrack/pipeline.hpp"

namespace nlostrack::io {

/// Full per-step record (header-driven; all report inputs live here).
void write_step_records_csv(std::ostream& os, std::span<const pipeline::StepRecord> records,
                            int num_paths);

std::vector<pipeline::StepRecord> read_step_records_csv(std::istream& is);

/// Channel-tracker view: t, psi entries, per-angle squared errors, NIS,
/// threshold, triggered, epoch_id.
void write_channel_trace_csv(std::ostream& os, std::span<const pipeline::StepRecord> records,
                             int num_paths);

/// Position-tracker view: t, s entries, position error, gamma error, NEES.
void write_position_trace_csv(std::ostream& os, std::span<const pipeline::StepRecord> records);

}  // namespace nlostrack::io
