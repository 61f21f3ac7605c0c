#pragma once

#include <cmath>

namespace ncboltz
{
struct Vec3
{
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  constexpr double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }
  constexpr double &operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }

  constexpr Vec3 &operator+=(Vec3 const &o)
  {
    x += o.x;
    y += o.y;
    z += o.z;
    return *this;
  }
  constexpr Vec3 &operator-=(Vec3 const &o)
  {
    x -= o.x;
    y -= o.y;
    z -= o.z;
    return *this;
  }
  constexpr Vec3 &operator*=(double a)
  {
    x *= a;
    y *= a;
    z *= a;
    return *this;
  }
};

constexpr Vec3 operator+(Vec3 a, Vec3 const &b) { return a += b; }
constexpr Vec3 operator-(Vec3 a, Vec3 const &b) { return a -= b; }
constexpr Vec3 operator-(Vec3 const &a) { return {-a.x, -a.y, -a.z}; }
constexpr Vec3 operator*(double s, Vec3 a) { return a *= s; }
constexpr Vec3 operator*(Vec3 a, double s) { return a *= s; }

constexpr double dot(Vec3 const &a, Vec3 const &b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
constexpr double norm2(Vec3 const &a) { return dot(a, a); }
inline double norm(Vec3 const &a) { return std::sqrt(norm2(a)); }

constexpr Vec3 cross(Vec3 const &a, Vec3 const &b)
{
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

// <v> = (1 + |v|^2)^{1/2}
inline double japanese(Vec3 const &v) { return std::sqrt(1.0 + norm2(v)); }

// Orthonormal pair (e1, e2) completing the unit vector k to a right-handed frame.
inline void complete_frame(Vec3 const &k, Vec3 &e1, Vec3 &e2)
{
  Vec3 const ref = std::abs(k.x) < 0.57 ? Vec3{1.0, 0.0, 0.0}
                   : std::abs(k.y) < 0.57 ? Vec3{0.0, 1.0, 0.0}
                                          : Vec3{0.0, 0.0, 1.0};
  e1 = cross(k, ref);
  e1 *= 1.0 / norm(e1);
  e2 = cross(k, e1);
}

} // namespace ncboltz
