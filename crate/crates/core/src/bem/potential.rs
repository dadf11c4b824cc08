use crate::geometry::Point;

/// Exact value of `∫_T 1/|x - y| dS(y)` for a flat triangle `T` with
/// vertices `tri` and any observation point `x` (on or off the plane).
///
/// Edge-by-edge closed form: for each edge with in-plane outward normal `u`,
/// signed distance `t0` from the projected point to the edge line, edge
/// coordinates `s-`/`s+` of its endpoints and endpoint distances `R-`/`R+`,
///
/// ```text
/// t0 * ln((R+ + s+) / (R- + s-))
///   - |d| * (atan(t0 s+ / (R0^2 + |d| R+)) - atan(t0 s- / (R0^2 + |d| R-)))
/// ```
///
/// summed over the three edges, where `d` is the height above the plane and
/// `R0^2 = t0^2 + d^2`.
pub fn triangle_inverse_distance_integral(x: &Point, tri: &[Point; 3]) -> f64 {
    let normal = (tri[1] - tri[0]).cross(&(tri[2] - tri[0])).normalize();
    let d = normal.dot(&(x - tri[0]));
    let abs_d = d.abs();
    let projected = x - normal * d;
    let scale = (tri[1] - tri[0]).norm();

    let mut total = 0.0;
    for k in 0..3 {
        let a = tri[k];
        let b = tri[(k + 1) % 3];
        let edge = b - a;
        let length = edge.norm();
        let l = edge / length;
        let u = l.cross(&normal);
        let t0 = (a - projected).dot(&u);
        let s_minus = (a - projected).dot(&l);
        let s_plus = s_minus + length;
        let r_minus = (x - a).norm();
        let r_plus = (x - b).norm();
        let r0_sq = t0 * t0 + d * d;

        if t0.abs() > 1e-14 * scale {
            // (R + s)(R - s) = R0^2 at both endpoints; pick the form that
            // avoids cancellation.
            let log = if s_minus >= 0.0 {
                ((r_plus + s_plus) / (r_minus + s_minus)).ln()
            } else if s_plus <= 0.0 {
                ((r_minus - s_minus) / (r_plus - s_plus)).ln()
            } else {
                ((r_plus + s_plus) * (r_minus - s_minus) / r0_sq).ln()
            };
            total += t0 * log;
            if abs_d > 0.0 {
                total -= abs_d
                    * ((t0 * s_plus / (r0_sq + abs_d * r_plus)).atan()
                        - (t0 * s_minus / (r0_sq + abs_d * r_minus)).atan());
            }
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// Gauss-Legendre nodes/weights on [0, 1], computed by Newton iteration.
    fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, z);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
                let dz = p1 / dp;
                z -= dz;
                if dz.abs() < 1e-16 {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - z * z) * dp * dp);
            out.push((0.5 * (z + 1.0), 0.5 * w));
        }
        out
    }

    /// Polar-coordinate oracle for a point lying in the triangle's plane:
    /// split at the point, and on each sub-triangle with apex at the point
    /// `∫∫ (1/ρ) ρ dρ dφ = ∫ h / cos(φ) dφ`, integrated by Gauss-Legendre.
    fn in_plane_oracle(x: &Point, tri: &[Point; 3]) -> f64 {
        let rule = gauss_legendre(64);
        let n = (tri[1] - tri[0]).cross(&(tri[2] - tri[0]));
        let mut total = 0.0;
        for k in 0..3 {
            let a = tri[k];
            let b = tri[(k + 1) % 3];
            let (pa, pb) = (a - x, b - x);
            let edge = (b - a).normalize();
            let h = (pa - edge * pa.dot(&edge)).norm();
            if h < 1e-14 {
                continue;
            }
            let phi_a = (pa.dot(&edge) / h).atan();
            let phi_b = (pb.dot(&edge) / h).atan();
            let integral: f64 = rule
                .iter()
                .map(|&(t, w)| {
                    let phi = phi_a + t * (phi_b - phi_a);
                    w * (phi_b - phi_a) * h / phi.cos()
                })
                .sum();
            total += integral * pa.cross(&pb).dot(&n).signum();
        }
        total
    }

    /// Brute-force oracle away from the triangle: recursive 4-way subdivision
    /// with the 7-point degree-5 rule on every leaf.
    fn subdivided_oracle(x: &Point, tri: &[Point; 3], depth: u32) -> f64 {
        if depth == 0 {
            let [a, b, c] = *tri;
            let area = 0.5 * (b - a).cross(&(c - a)).norm();
            let s15 = 15f64.sqrt();
            let w0 = 9.0 / 40.0;
            let w1 = (155.0 - s15) / 1200.0;
            let w2 = (155.0 + s15) / 1200.0;
            let a1 = (6.0 - s15) / 21.0;
            let a2 = (6.0 + s15) / 21.0;
            let bary = |l0: f64, l1: f64| a * l0 + b * l1 + c * (1.0 - l0 - l1);
            let mut pts = vec![(bary(1.0 / 3.0, 1.0 / 3.0), w0)];
            for (alpha, w) in [(a1, w1), (a2, w2)] {
                let beta = 1.0 - 2.0 * alpha;
                pts.push((bary(alpha, alpha), w));
                pts.push((bary(alpha, beta), w));
                pts.push((bary(beta, alpha), w));
            }
            return area * pts.iter().map(|(p, w)| w / (x - p).norm()).sum::<f64>();
        }
        let [a, b, c] = *tri;
        let (ab, bc, ca) = ((a + b) / 2.0, (b + c) / 2.0, (c + a) / 2.0);
        [[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]]
            .iter()
            .map(|t| subdivided_oracle(x, t, depth - 1))
            .sum()
    }

    fn sample_triangle() -> [Point; 3] {
        [
            Point::new(0.1, -0.2, 0.3),
            Point::new(1.3, 0.1, 0.2),
            Point::new(0.4, 0.9, 0.7),
        ]
    }

    #[test]
    fn centroid_matches_polar_oracle() {
        let tri = sample_triangle();
        let c = (tri[0] + tri[1] + tri[2]) / 3.0;
        let exact = triangle_inverse_distance_integral(&c, &tri);
        assert_relative_eq!(exact, in_plane_oracle(&c, &tri), max_relative = 1e-10);
    }

    #[test]
    fn in_plane_off_centre_point() {
        let tri = sample_triangle();
        let p = tri[0] * 0.7 + tri[1] * 0.2 + tri[2] * 0.1;
        let exact = triangle_inverse_distance_integral(&p, &tri);
        assert_relative_eq!(exact, in_plane_oracle(&p, &tri), max_relative = 1e-9);
    }

    #[test]
    fn in_plane_point_outside_triangle() {
        let tri = sample_triangle();
        let p = tri[0] * 1.4 - tri[1] * 0.3 - tri[2] * 0.1;
        let exact = triangle_inverse_distance_integral(&p, &tri);
        assert_relative_eq!(exact, subdivided_oracle(&p, &tri, 5), max_relative = 1e-7);
    }

    #[test]
    fn off_plane_points() {
        let tri = sample_triangle();
        let n = (tri[1] - tri[0]).cross(&(tri[2] - tri[0])).normalize();
        let c = (tri[0] + tri[1] + tri[2]) / 3.0;
        for (offset, height) in [
            (Point::zeros(), 0.3),
            (Point::new(0.4, 0.1, -0.2), -0.15),
            (Point::new(2.0, 1.0, 0.0), 0.5),
        ] {
            let x = c + offset + n * height;
            let exact = triangle_inverse_distance_integral(&x, &tri);
            assert_relative_eq!(exact, subdivided_oracle(&x, &tri, 6), max_relative = 1e-7);
        }
    }

    #[test]
    fn far_field_limit() {
        let tri = sample_triangle();
        let area = 0.5 * (tri[1] - tri[0]).cross(&(tri[2] - tri[0])).norm();
        let c = (tri[0] + tri[1] + tri[2]) / 3.0;
        let x = c + Point::new(300.0, -200.0, 100.0);
        let exact = triangle_inverse_distance_integral(&x, &tri);
        assert_relative_eq!(exact, area / (x - c).norm(), max_relative = 1e-6);
    }

    #[test]
    fn point_on_vertex_is_finite() {
        let tri = sample_triangle();
        let v = triangle_inverse_distance_integral(&tri[0], &tri);
        assert!(v.is_finite() && v > 0.0);
    }
}
