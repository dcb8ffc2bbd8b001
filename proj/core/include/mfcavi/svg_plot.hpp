#pragma once

#include <string>

#include "mfcavi/io.hpp"

namespace mfcavi {

/// Self-contained SVG: log-scale gap vs update count with thin per-trial
/// traces, a thick ensemble mean and, when the table has an `envelope`
/// column, a dashed envelope path. Throws std::runtime_error when the
/// table lacks the required columns or has no data rows.
std::string render_gap_plot_svg(const CsvTable& table);

}  // namespace mfcavi
