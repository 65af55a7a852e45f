#pragma once

#include <compare>

namespace qrelay {

/// A double tagged with its physical unit. Arithmetic is only defined between
/// values of the same unit; conversions between units live in this header.
template <class Tag>
class Quantity {
 public:
  constexpr Quantity() = default;
  constexpr explicit Quantity(double value) : value_(value) {}

  constexpr double value() const { return value_; }

  constexpr Quantity operator+(Quantity o) const { return Quantity(value_ + o.value_); }
  constexpr Quantity operator-(Quantity o) const { return Quantity(value_ - o.value_); }
  constexpr Quantity operator-() const { return Quantity(-value_); }
  constexpr Quantity operator*(double s) const { return Quantity(value_ * s); }
  constexpr Quantity operator/(double s) const { return Quantity(value_ / s); }
  constexpr double operator/(Quantity o) const { return value_ / o.value_; }

  constexpr auto operator<=>(const Quantity&) const = default;

 private:
  double value_ = 0.0;
};

template <class Tag>
constexpr Quantity<Tag> operator*(double s, Quantity<Tag> q) {
  return q * s;
}

using Nanometers = Quantity<struct NanometerTag>;
using Picometers = Quantity<struct PicometerTag>;
using Millimeters = Quantity<struct MillimeterTag>;
using Kilometers = Quantity<struct KilometerTag>;
using Picoseconds = Quantity<struct PicosecondTag>;
using Nanoseconds = Quantity<struct NanosecondTag>;
using Decibels = Quantity<struct DecibelTag>;
using Volts = Quantity<struct VoltTag>;
using Milliwatts = Quantity<struct MilliwattTag>;
using Hertz = Quantity<struct HertzTag>;

namespace constants {
/// Vacuum light speed.
inline constexpr double kSpeedOfLightMPerS = 299792458.0;
/// The same constant in the units the delay line is measured in.
inline constexpr double kSpeedOfLightMmPerPs = 0.299792458;
}  // namespace constants

/// Lineshape of a spectral envelope. Each has its own time-bandwidth product.
enum class Lineshape { gaussian, sinc_squared };

/// Transform-limited time-bandwidth product (FWHM duration x FWHM frequency).
constexpr double time_bandwidth_product(Lineshape shape) {
  return shape == Lineshape::gaussian ? 0.441 : 0.886;
}

constexpr Picometers to_picometers(Nanometers nm) { return Picometers(nm.value() * 1e3); }
constexpr Nanometers to_nanometers(Picometers pm) { return Nanometers(pm.value() * 1e-3); }
constexpr Nanoseconds to_nanoseconds(Picoseconds ps) { return Nanoseconds(ps.value() * 1e-3); }

/// Power transmission of a loss expressed in dB.
double transmission_from_db(Decibels loss);
/// Loss in dB of a power transmission in (0, 1].
Decibels db_from_transmission(double transmission);

/// Light field spectrum: center, FWHM bandwidth and lineshape.
class SpectralMode {
 public:
  /// Throws DomainError unless both the center and the bandwidth are positive.
  SpectralMode(Nanometers center, Picometers fwhm, Lineshape shape);

  Nanometers center_wavelength() const { return center_; }
  Picometers fwhm_bandwidth() const { return fwhm_; }
  Lineshape lineshape() const { return shape_; }

  bool operator==(const SpectralMode&) const = default;

 private:
  Nanometers center_;
  Picometers fwhm_;
  Lineshape shape_;
};

/// Transform-limited coherence time K * lambda^2 / (c * dlambda).
Picoseconds coherence_time(const SpectralMode& mode);
/// Same relation without constructing a mode; non-positive inputs throw.
Picoseconds coherence_time(Nanometers center, Picometers fwhm, Lineshape shape);

/// Free-space path difference and its equivalent arrival-time delay.
struct PathDelay {
  Millimeters path_difference;
  Picoseconds equivalent_delay;
};

Picoseconds path_to_delay(Millimeters path);
Millimeters delay_to_path(Picoseconds delay);
PathDelay make_path_delay(Millimeters path);

}  // namespace qrelay
