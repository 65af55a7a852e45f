#include "qrelay/units.hpp"

#include <cmath>
#include <string>

#include "qrelay/errors.hpp"

namespace qrelay {

double transmission_from_db(Decibels loss) {
  return std::pow(10.0, -loss.value() / 10.0);
}

Decibels db_from_transmission(double transmission) {
  if (!(transmission > 0.0) || transmission > 1.0) {
    throw DomainError("transmission must lie in (0, 1], got " +
                      std::to_string(transmission));
  }
  return Decibels(-10.0 * std::log10(transmission));
}

SpectralMode::SpectralMode(Nanometers center, Picometers fwhm, Lineshape shape)
    : center_(center), fwhm_(fwhm), shape_(shape) {
  if (!(center.value() > 0.0)) {
    throw DomainError("center wavelength must be positive");
  }
  if (!(fwhm.value() > 0.0)) {
    throw DomainError("spectral bandwidth must be positive");
  }
}

Picoseconds coherence_time(Nanometers center, Picometers fwhm, Lineshape shape) {
  if (!(fwhm.value() > 0.0)) throw DomainError("spectral bandwidth must be positive");
  if (!(center.value() > 0.0)) throw DomainError("center wavelength must be positive");
  const double lambda_m = center.value() * 1e-9;
  const double dlambda_m = fwhm.value() * 1e-12;
  const double seconds = time_bandwidth_product(shape) * lambda_m * lambda_m /
                         (constants::kSpeedOfLightMPerS * dlambda_m);
  return Picoseconds(seconds * 1e12);
}

Picoseconds coherence_time(const SpectralMode& mode) {
  return coherence_time(mode.center_wavelength(), mode.fwhm_bandwidth(), mode.lineshape());
}

Picoseconds path_to_delay(Millimeters path) {
  return Picoseconds(path.value() / constants::kSpeedOfLightMmPerPs);
}

Millimeters delay_to_path(Picoseconds delay) {
  return Millimeters(delay.value() * constants::kSpeedOfLightMmPerPs);
}

PathDelay make_path_delay(Millimeters path) { return {path, path_to_delay(path)}; }

}  // namespace qrelay
