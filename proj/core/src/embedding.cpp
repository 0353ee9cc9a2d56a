#include "gatr/ga/embedding.hpp"

#include <cmath>
#include <ostream>
#include <utility>

namespace gatr::ga {
namespace {

// v e123 for a Euclidean vector v: the bivector v1 e23 - v2 e13 + v3 e12.
void put_vector_dual(Multivector& m, const Vec3& v, int i23, int i13, int i12) {
  m[i23] = v[0];
  m[i13] = -v[1];
  m[i12] = v[2];
}

double length(const Vec3& v) { return std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]); }

}  // namespace

Multivector embed_scalar(double value) { return Multivector::scalar(value); }

Multivector embed_pseudoscalar(double value) { return Multivector::basis(blade::e0123, value); }

Multivector embed_plane(const Vec3& normal, double offset) {
  if (length(normal) == 0.0) {
    throw InvalidArgument("embed_plane: normal must be nonzero");
  }
  Multivector m;
  m[blade::e0] = offset;
  m[blade::e1] = normal[0];
  m[blade::e2] = normal[1];
  m[blade::e3] = normal[2];
  return m;
}

Multivector embed_line(const Vec3& direction, const Vec3& moment) {
  Multivector m;
  put_vector_dual(m, direction, blade::e23, blade::e13, blade::e12);
  m[blade::e01] = -moment[0];
  m[blade::e02] = -moment[1];
  m[blade::e03] = -moment[2];
  return m;
}

Multivector embed_point(const Vec3& p) {
  Multivector m;
  m[blade::e123] = 1.0;
  put_vector_dual(m, p, blade::e023, blade::e013, blade::e012);
  return m;
}

Versor embed_reflection(const Vec3& normal, double offset) {
  const double len = length(normal);
  if (len == 0.0) {
    throw InvalidArgument("embed_reflection: normal must be nonzero");
  }
  return {embed_plane(normal, offset) / len, Parity::odd};
}

Versor embed_translation(const Vec3& t) {
  Multivector m = Multivector::scalar(1.0);
  m[blade::e01] = 0.5 * t[0];
  m[blade::e02] = 0.5 * t[1];
  m[blade::e03] = 0.5 * t[2];
  return {m, Parity::even};
}

Versor embed_rotation(const Quaternion& q) {
  const double len = std::sqrt(q.w * q.w + q.x * q.x + q.y * q.y + q.z * q.z);
  if (!(len > 0.0)) {
    throw InvalidArgument("embed_rotation: quaternion must be nonzero");
  }
  Multivector m = Multivector::scalar(q.w / len);
  m[blade::e23] = -q.x / len;
  m[blade::e13] = q.y / len;
  m[blade::e12] = -q.z / len;
  return {m, Parity::even};
}

Versor embed_point_reflection(const Vec3& p) { return {embed_point(p), Parity::odd}; }

Vec3 extract_point(const Multivector& mv) {
  const double w = mv[blade::e123];
  if (!(std::abs(w) >= kPointAtInfinityTolerance)) {
    throw NumericError("extract_point: point at infinity (|e123| < 1e-9)");
  }
  return {mv[blade::e023] / w, -mv[blade::e013] / w, mv[blade::e012] / w};
}

std::array<Vec3, 3> rotation_matrix(const Quaternion& q) {
  const double w = q.w, x = q.x, y = q.y, z = q.z;
  return {Vec3{1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)},
          Vec3{2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)},
          Vec3{2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)}};
}

void write_embedding_signs(std::ostream& os) {
  const std::pair<const char*, Multivector> rows[] = {
      {"scalar(1)", embed_scalar(1.0)},
      {"pseudoscalar(1)", embed_pseudoscalar(1.0)},
      {"plane(n=1,2,3;d=4)", embed_plane({1, 2, 3}, 4)},
      {"line(dir=1,2,3;moment=4,5,6)", embed_line({1, 2, 3}, {4, 5, 6})},
      {"point(1,2,3)", embed_point({1, 2, 3})},
      {"reflection(n=0,0,1;d=2)", embed_reflection({0, 0, 1}, 2).mv},
      {"translation(2,4,6)", embed_translation({2, 4, 6}).mv},
      {"rotation(q=0.5,0.5,0.5,0.5)", embed_rotation({0.5, 0.5, 0.5, 0.5}).mv},
      {"point_reflection(1,2,3)", embed_point_reflection({1, 2, 3}).mv},
  };
  for (const auto& [name, mv] : rows) {
    for (int b = 0; b < kNumBlades; ++b) {
      if (mv[b] != 0.0) os << name << ' ' << b << ' ' << mv[b] << '\n';
    }
  }
}

}  // namespace gatr::ga
