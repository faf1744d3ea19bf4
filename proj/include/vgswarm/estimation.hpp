#pragma once

// Monocular relative positioning from bounding boxes: optical-expansion
// depth, power-law area->distance fit, FOV decomposition into local X/Y/Z
// and scalar Kalman smoothing of range.

#include "vgswarm/camera.hpp"
#include "vgswarm/common.hpp"
#include "vgswarm/rng.hpp"
#include "vgswarm/world.hpp"

#include <cmath>
#include <iomanip>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace vgswarm {

struct AreaDistanceSample {
  double area = 0.0;  // px^2
  double dist = 0.0;  // m
};

/// D = alpha * A^beta.
struct PowerLawFit {
  double alpha = 1.0;
  double beta = -0.5;
  double rmse = 0.0;

  double predict(double area) const { return alpha * std::pow(area, beta); }
};

/// Least squares on log D = log alpha + beta log A.
inline PowerLawFit fit_power_law(const std::vector<AreaDistanceSample>& samples) {
  if (samples.size() < 8) throw FitError("fit_power_law: need at least 8 samples");
  double dmin = samples.front().dist, dmax = dmin;
  for (const auto& s : samples) {
    if (!(s.area > 0.0) || !(s.dist > 0.0) || !std::isfinite(s.area) || !std::isfinite(s.dist))
      throw FitError("fit_power_law: samples must be positive and finite");
    dmin = std::min(dmin, s.dist);
    dmax = std::max(dmax, s.dist);
  }
  const double n = static_cast<double>(samples.size());
  double mx = 0.0, my = 0.0;
  for (const auto& s : samples) {
    mx += std::log(s.area);
    my += std::log(s.dist);
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (const auto& s : samples) {
    const double dx = std::log(s.area) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(s.dist) - my);
  }
  if (sxx <= 1e-12 * n) throw FitError("fit_power_law: degenerate samples (no spread in area)");
  if (dmax < 4.0 * dmin) throw FitError("fit_power_law: samples must span a 4x distance range");

  PowerLawFit fit;
  fit.beta = sxy / sxx;
  fit.alpha = std::exp(my - fit.beta * mx);
  double se = 0.0;
  for (const auto& s : samples) {
    const double e = fit.predict(s.area) - s.dist;
    se += e * e;
  }
  fit.rmse = std::sqrt(se / n);
  if (!(fit.alpha > 0.0) || !(fit.beta < 0.0))
    throw FitError("fit_power_law: fitted law is not decreasing in area");
  return fit;
}

/// Optical-expansion depth exactly as the textbook form
/// Z_i = dz / (1 - sqrt(s_i / s_j)), with no sign normalisation.
inline double expansion_depth_raw(double s_i, double s_j, double dz) {
  if (!(s_i > 0.0) || !(s_j > 0.0)) throw std::invalid_argument("expansion depth: areas must be positive");
  if (s_i == s_j)
    throw ExpansionError(ExpansionError::Reason::UndefinedExpansion,
                         "expansion depth: equal box areas give no expansion");
  return dz / (1.0 - std::sqrt(s_i / s_j));
}

/// Depth of the object at observation i. `toward` is the observer's
/// displacement along the depth axis between observations i and j, positive
/// when moving toward the object. A non-positive result means the area
/// change contradicts the motion and the sample is rejected.
inline double depth_from_expansion(double s_i, double s_j, double toward) {
  const double z = expansion_depth_raw(s_i, s_j, toward);
  if (!(z > 0.0) || !std::isfinite(z))
    throw ExpansionError(ExpansionError::Reason::NegativeDepth,
                         "expansion depth: sample contradicts ego-motion");
  return z;
}

enum class YMode {
  Planar,  // Y = sqrt(D^2 - X^2)
  Full,    // Y = sqrt(D^2 - X^2 - Z^2)
};

/// Relative position in the observer's local frame.
struct RelPosition {
  Vec3 position = Vec3::Zero();
  double distance = 0.0;
  bool clamped = false;  // D^2 fell below X^2 (+ Z^2) and Y was clamped to 0
};

inline RelPosition decompose(const BoundingBox& box, int camera_index, double distance,
                             const CameraRig& rig, YMode mode = YMode::Planar) {
  if (!(distance > 0.0)) throw std::invalid_argument("decompose: distance must be positive");
  if (std::abs(box.cx) > rig.half_width() + 1e-9 || std::abs(box.cy) > rig.half_height() + 1e-9)
    throw std::invalid_argument("decompose: box centre outside the image");
  const double x = box.cx * distance / rig.scale_h();
  const double z = box.cy * distance / rig.scale_v();
  double y2 = distance * distance - x * x;
  if (mode == YMode::Full) y2 -= z * z;
  RelPosition out;
  out.clamped = y2 < 0.0;
  const double y = std::sqrt(std::max(0.0, y2));
  out.position = camera_to_local(rig, camera_index, Vec3{x, y, z});
  out.distance = distance;
  return out;
}

inline RelPosition decompose(const Detection& det, double distance, const CameraRig& rig,
                             YMode mode = YMode::Planar) {
  return decompose(det.box, det.camera_index, distance, rig, mode);
}

/// Scalar constant-position Kalman filter on range.
struct DepthFilter {
  double state = 0.0;
  double variance = 1.0;
  double q = 0.5;   // m^2/s
  double r = 0.04;  // m^2
  bool initialized = false;
};

inline constexpr double kRangeNoiseFraction = 0.08;

inline double range_proportional_r(double range) {
  const double s = kRangeNoiseFraction * range;
  return std::max(s * s, 1e-6);
}

inline DepthFilter kalman_update(DepthFilter f, double measurement, double dt) {
  if (!std::isfinite(measurement)) throw std::invalid_argument("kalman_update: non-finite measurement");
  constexpr double kMinVariance = 1e-12;
  if (!f.initialized) {
    f.state = measurement;
    f.variance = std::max(f.r, kMinVariance);
    f.initialized = true;
    return f;
  }
  const double predicted = f.variance + f.q * dt;
  const double gain = predicted / (predicted + f.r);
  f.state += gain * (measurement - f.state);
  f.variance = std::max((1.0 - gain) * predicted, kMinVariance);
  return f;
}

// ---------------------------------------------------------------------------
// Calibration

struct CalibrationSample {
  BodyKind kind = BodyKind::Target;
  double area = 0.0;
  double dist = 0.0;
};

struct CalibrationOptions {
  double start_distance = 10.0;
  double end_distance = 0.8;
  double station_step = 0.25;
  int frames_per_station = 5;
  double min_area_ratio = 4.0;  // expansion pairs need the box to have doubled in size
  double ego_sigma = 0.0;       // odometry noise on each station position, m
  bool ground_truth = false;    // use true range instead of expansion depth
};

/// Straight-line approach toward a reference body on the front boresight.
/// Each station averages several frames; every station is then paired with
/// the first later station whose box area grew by `min_area_ratio`, and the
/// expansion depth of the earlier station becomes one (area, distance) sample.
inline std::vector<CalibrationSample> calibration_maneuver(const CameraRig& rig, const NoiseModel& noise,
                                                           BodyKind kind, double radius, Rng& rng,
                                                           const CalibrationOptions& opt = {}) {
  Body ref;
  ref.id = 1;
  ref.kind = kind;
  ref.radius = radius;
  ref.height = kind == BodyKind::Obstacle ? 6.0 : 0.0;
  ref.pose.position = {0.0, 0.0, kind == BodyKind::Obstacle ? 0.0 : 2.0};

  struct Station {
    double true_dist;
    double measured_pos;  // odometry along the approach axis
    double area;
  };
  std::vector<Station> stations;
  for (double d = opt.start_distance; d >= opt.end_distance - 1e-9; d -= opt.station_step) {
    Pose3 obs;
    obs.position = {0.0, -d, 2.0};
    obs.heading = 0.0;
    double sum = 0.0;
    int n = 0;
    for (int f = 0; f < opt.frames_per_station; ++f) {
      auto det = project(rig, 0, obs, ref, noise, rng);
      if (det && !det->truncated) {
        sum += det->area();
        ++n;
      }
    }
    const double odo = -d + (opt.ego_sigma > 0.0 ? rng.normal(0.0, opt.ego_sigma) : 0.0);
    if (n > 0) stations.push_back({d, odo, sum / n});
  }

  std::vector<CalibrationSample> out;
  for (std::size_t i = 0; i < stations.size(); ++i) {
    if (opt.ground_truth) {
      out.push_back({kind, stations[i].area, stations[i].true_dist});
      continue;
    }
    for (std::size_t j = i + 1; j < stations.size(); ++j) {
      if (stations[j].area < opt.min_area_ratio * stations[i].area) continue;
      try {
        const double toward = stations[j].measured_pos - stations[i].measured_pos;
        out.push_back({kind, stations[i].area, depth_from_expansion(stations[i].area, stations[j].area, toward)});
      } catch (const ExpansionError&) {
      }
      break;
    }
  }
  return out;
}

/// Per-kind power laws.
struct Calibration {
  std::map<BodyKind, PowerLawFit> fits;

  const PowerLawFit& at(BodyKind k) const {
    auto it = fits.find(k);
    if (it == fits.end()) throw std::out_of_range("no calibration for kind " + std::string(to_string(k)));
    return it->second;
  }
  double distance(BodyKind k, double area) const { return at(k).predict(area); }
};

inline Calibration fit_calibration(const std::vector<CalibrationSample>& samples) {
  std::map<BodyKind, std::vector<AreaDistanceSample>> by_kind;
  for (const auto& s : samples) by_kind[s.kind].push_back({s.area, s.dist});
  Calibration cal;
  for (const auto& [kind, v] : by_kind) {
    try {
      cal.fits[kind] = fit_power_law(v);
    } catch (const FitError& e) {
      throw FitError(std::string(to_string(kind)) + ": " + e.what());
    }
  }
  return cal;
}

inline void write_calibration_csv(std::ostream& os, const std::vector<CalibrationSample>& samples) {
  os << "kind,area_px2,dist_m\n" << std::setprecision(17);
  for (const auto& s : samples) os << to_string(s.kind) << ',' << s.area << ',' << s.dist << '\n';
}

inline std::vector<CalibrationSample> read_calibration_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line.rfind("kind,area_px2,dist_m", 0) != 0)
    throw std::runtime_error("calibration csv: bad header");
  std::vector<CalibrationSample> out;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string kind, area, dist;
    if (!std::getline(ss, kind, ',') || !std::getline(ss, area, ',') || !std::getline(ss, dist, ','))
      throw std::runtime_error("calibration csv: malformed row: " + line);
    out.push_back({body_kind_from_string(kind), std::stod(area), std::stod(dist)});
  }
  return out;
}

inline void write_fits_csv(std::ostream& os, const Calibration& cal) {
  os << "kind,alpha,beta,rmse_m\n" << std::setprecision(17);
  for (const auto& [kind, f] : cal.fits) os << to_string(kind) << ',' << f.alpha << ',' << f.beta << ',' << f.rmse << '\n';
}

}  // namespace vgswarm
