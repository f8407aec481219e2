#pragma once

#include <string>

#include "ems/backends.hpp"
#include "ems/scriptgrid.hpp"

namespace ems {

// Renders the submit script for one task. Byte-stable: covered by golden
// files, so any format change must refresh tests/golden.
std::string emit_batch_script(const TaskSpec& task, Scheduler scheduler);

// "4" for 4.0, "1.5" for 1.5 — the form used in --mem/-l h_vmem lines.
std::string format_quantity(double v);

// HH:MM:SS (hours may exceed two digits).
std::string format_hms(int seconds);

} // namespace ems
