#include <algorithm>
#include <iomanip>

#include "gatr/verify/suites.hpp"

namespace gatr::verify {

bool SuiteReport::passed() const {
  return std::all_of(properties.begin(), properties.end(), [](const PropertyResult& p) { return p.passed(); });
}

const PropertyResult* SuiteReport::find(const std::string& name) const {
  const PropertyResult* worst = nullptr;
  for (const PropertyResult& p : properties) {
    if (p.name.rfind(name, 0) != 0) continue;
    if (!worst || p.max_error / std::max(p.tolerance, 1e-300) > worst->max_error / std::max(worst->tolerance, 1e-300)) {
      worst = &p;
    }
  }
  return worst;
}

void SuiteReport::print(std::ostream& os) const {
  const auto flags = os.flags();
  for (const PropertyResult& p : properties) {
    os << (p.passed() ? "PASS " : "FAIL ") << suite << ": " << p.name << "  max_err=" << std::scientific
       << std::setprecision(3) << p.max_error << " tol=" << p.tolerance << " n=" << p.trials << '\n';
  }
  os.flags(flags);
  os << suite << ": " << (passed() ? "all properties hold" : "FAILED") << " (" << std::fixed << std::setprecision(2)
     << seconds << " s)\n";
  os.flags(flags);
}

}  // namespace gatr::verify
