#pragma once

#include <string>

#include "pmdlab/trace_io.hpp"

namespace pmdlab {

/// Reference curve drawn behind the gap series.
enum class SvgReference {
  GammaCurve,     ///< y = scale * gamma^x
  Theorem1Bound,  ///< the trace's bound_theorem1 column
};

struct SvgOptions {
  SvgReference reference = SvgReference::GammaCurve;
  double gamma = 0.99;  ///< used by the gamma-curve reference
  double scale = 1.0;   ///< multiplies the gamma curve
  std::string title;
};

/// Renders a two-panel convergence figure from a trace CSV table: the
/// sup-norm gap on a log axis with a green reference curve on the left, the
/// step size on the right. Output bytes depend only on the inputs.
std::string render_convergence_svg(const CsvTable& trace, const SvgOptions& options);

}  // namespace pmdlab
