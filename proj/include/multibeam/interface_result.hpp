#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace multibeam {

enum class ResultSource { infinite_theory, finite_theory, scattering };

std::string_view to_string(ResultSource source);

/// Coupling rate, loss rate and efficiency of the array interface, as produced
/// by one of the theories or by a scattering run.
struct InterfaceResult {
  double gamma = 0.0;
  double gamma_loss = 0.0;
  double r0 = 0.0;
  double delta_res = 0.0;
  ResultSource source = ResultSource::infinite_theory;
  std::map<std::string, double> diagnostics;
  std::vector<std::string> warnings;
};

}  // namespace multibeam
