#pragma once

#include <cmath>
#include <stdexcept>

namespace fbp {

/// Parallel-beam acquisition geometry. Angles cover [angle_start,
/// angle_start + num_angles*angle_step), detector offsets are centered:
/// s_j = (j - (N-1)/2) * detector_spacing in the same normalized units as
/// the image frame (pixel centers mapped to [-1,1]^2).
struct Geometry {
    int num_angles = 0;
    double angle_start = 0.0;
    double angle_step = 0.0;
    int num_detectors = 0;
    double detector_spacing = 0.0;

    double angle(int i) const { return angle_start + i * angle_step; }
    double detector_offset(int j) const {
        return (j - 0.5 * (num_detectors - 1)) * detector_spacing;
    }

    bool operator==(const Geometry&) const = default;
};

/// Default scan over [0, pi) with the detector spanning [-1, 1].
inline Geometry make_geometry(int num_angles, int num_detectors) {
    Geometry g;
    g.num_angles = num_angles;
    g.angle_start = 0.0;
    g.angle_step = M_PI / num_angles;
    g.num_detectors = num_detectors;
    g.detector_spacing = 2.0 / num_detectors;
    return g;
}

inline void validate(const Geometry& g) {
    if (g.num_angles < 1)
        throw std::invalid_argument("geometry: num_angles must be >= 1");
    if (g.num_detectors < 3)
        throw std::invalid_argument("geometry: num_detectors must be >= 3");
    if (!(g.angle_step > 0.0))
        throw std::invalid_argument("geometry: angle_step must be > 0");
    if (g.num_angles * g.angle_step > M_PI + 1e-9)
        throw std::invalid_argument("geometry: angular range exceeds pi");
    if (!(g.detector_spacing > 0.0))
        throw std::invalid_argument("geometry: detector_spacing must be > 0");
}

}  // namespace fbp
