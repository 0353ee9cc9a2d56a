#pragma once

#include <array>
#include <iosfwd>

#include "gatr/ga/multivector.hpp"
#include "gatr/ga/versor.hpp"

namespace gatr::ga {

using Vec3 = std::array<double, 3>;

/// Unit quaternion w + x i + y j + z k.
struct Quaternion {
  double w = 1.0;
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
};

/// Tolerance on |e123| below which extract_point reports a point at infinity.
inline constexpr double kPointAtInfinityTolerance = 1e-9;

// Geometric objects. Sign conventions are fixed by requiring the sandwich product
// to reproduce the Euclidean action on embedded points; see tests/golden/embedding_signs.txt.

Multivector embed_scalar(double value);
Multivector embed_pseudoscalar(double value);
/// The plane {x : n.x = d}; the normal must be nonzero.
Multivector embed_plane(const Vec3& normal, double offset);
/// Line with the given direction and moment (a x direction for any point a on it).
Multivector embed_line(const Vec3& direction, const Vec3& moment);
/// e123 + p1 e023 - p2 e013 + p3 e012.
Multivector embed_point(const Vec3& p);

// Transformations, returned as unit versors.

Versor embed_reflection(const Vec3& normal, double offset);
/// 1 + (t1 e01 + t2 e02 + t3 e03) / 2.
Versor embed_translation(const Vec3& t);
/// w - x e23 + y e13 - z e12, rotating vectors like the quaternion q.
Versor embed_rotation(const Quaternion& q);
/// Point reflection x -> 2p - x.
Versor embed_point_reflection(const Vec3& p);

/// Inverse of embed_point for finite points; throws NumericError at infinity.
Vec3 extract_point(const Multivector& mv);

/// Rotation matrix of a unit quaternion (row-major).
std::array<Vec3, 3> rotation_matrix(const Quaternion& q);

/// Golden dump of the embedding conventions: `object blade coefficient` for fixed
/// integer-valued inputs, one line per nonzero coefficient.
void write_embedding_signs(std::ostream& os);

}  // namespace gatr::ga
