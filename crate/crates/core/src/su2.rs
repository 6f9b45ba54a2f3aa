//! SU(2) elements as unit quaternions.
//!
//! `Su2([a, b, c, d])` stands for `a·I − i(b σx + c σy + d σz)`. With
//! `e_k = −iσ_k` the units obey the Hamilton relations, so matrix products
//! are quaternion products and qubit propagators stay cheap to compose.

use std::ops::Mul;

use crate::linalg::{Operator, C64};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Su2(pub [f64; 4]);

impl Su2 {
    pub const IDENTITY: Su2 = Su2([1.0, 0.0, 0.0, 0.0]);

    /// `exp(−i h (g·σ))`
    pub fn exp_field(g: [f64; 3], h: f64) -> Su2 {
        let n = (g[0] * g[0] + g[1] * g[1] + g[2] * g[2]).sqrt();
        let th = n * h;
        let (s, c) = th.sin_cos();
        // sin(n h)/n, with the n → 0 limit h
        let k = if n > 0.0 { s / n } else { h };
        Su2([c, k * g[0], k * g[1], k * g[2]])
    }

    pub fn conj(self) -> Su2 {
        let [a, b, c, d] = self.0;
        Su2([a, -b, -c, -d])
    }

    pub fn dot(self, other: Su2) -> f64 {
        self.0.iter().zip(other.0.iter()).map(|(x, y)| x * y).sum()
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn normalized(self) -> Su2 {
        let n = self.norm();
        Su2(self.0.map(|x| x / n))
    }

    /// Rotation half-angle `θ` and axis `n̂` with `self = cos θ + sin θ (n̂·e)`.
    pub fn angle_axis(self) -> (f64, [f64; 3]) {
        let [a, b, c, d] = self.0;
        let s = (b * b + c * c + d * d).sqrt();
        let theta = s.atan2(a);
        if s == 0.0 {
            (theta, [1.0, 0.0, 0.0])
        } else {
            (theta, [b / s, c / s, d / s])
        }
    }

    /// `self^k` in closed form.
    pub fn powf(self, k: f64) -> Su2 {
        let (theta, n) = self.angle_axis();
        let (s, c) = (k * theta).sin_cos();
        Su2([c, s * n[0], s * n[1], s * n[2]])
    }

    pub fn to_operator(self) -> Operator {
        let [a, b, c, d] = self.0;
        Operator::from_rows([
            [C64::new(a, -d), C64::new(-c, -b)],
            [C64::new(c, -b), C64::new(a, d)],
        ])
    }

    /// Projects a 2×2 unitary onto SU(2) after removing its global phase.
    pub fn from_operator(u: &Operator) -> Su2 {
        let det = u.get(0, 0) * u.get(1, 1) - u.get(0, 1) * u.get(1, 0);
        let ph = (det.sqrt()).inv();
        let (u00, u01, u10, u11) =
            (u.get(0, 0) * ph, u.get(0, 1) * ph, u.get(1, 0) * ph, u.get(1, 1) * ph);
        let a = 0.5 * (u00.re + u11.re);
        let d = 0.5 * (u11.im - u00.im);
        let b = -0.5 * (u01.im + u10.im);
        let c = 0.5 * (u10.re - u01.re);
        Su2([a, b, c, d])
    }

    /// `Tr(U)` of the represented matrix.
    pub fn trace(self) -> f64 {
        2.0 * self.0[0]
    }
}

impl Mul for Su2 {
    type Output = Su2;
    fn mul(self, r: Su2) -> Su2 {
        let [a1, b1, c1, d1] = self.0;
        let [a2, b2, c2, d2] = r.0;
        Su2([
            a1 * a2 - b1 * b2 - c1 * c2 - d1 * d2,
            a1 * b2 + b1 * a2 + c1 * d2 - d1 * c2,
            a1 * c2 - b1 * d2 + c1 * a2 + d1 * b2,
            a1 * d2 + b1 * c2 - c1 * b2 + d1 * a2,
        ])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{expm, half_field};

    #[test]
    fn product_matches_matrix_product() {
        let p = Su2::exp_field([0.3, -1.2, 0.7], 0.9);
        let q = Su2::exp_field([-2.0, 0.1, 0.4], 0.35);
        let lhs = (p * q).to_operator();
        let rhs = &p.to_operator() * &q.to_operator();
        assert!(lhs.max_abs_diff(&rhs) < 1e-15);
    }

    #[test]
    fn exp_field_matches_expm() {
        let g = [0.8, 0.25, -0.6];
        let h = 1.7;
        let expected =
            expm(&half_field([2.0 * g[0], 2.0 * g[1], 2.0 * g[2]]).scale(C64::new(0.0, -h)))
                .unwrap();
        assert!(Su2::exp_field(g, h).to_operator().max_abs_diff(&expected) < 1e-14);
    }

    #[test]
    fn operator_round_trip_and_powers() {
        let p = Su2::exp_field([0.4, 0.5, -0.1], 2.3);
        let back = Su2::from_operator(&p.to_operator());
        assert!((back.dot(p).abs() - 1.0).abs() < 1e-14);
        let cube = p * p * p;
        let pow = p.powf(3.0);
        assert!(cube.to_operator().max_abs_diff(&pow.to_operator()) < 1e-13);
        assert_eq!(Su2::IDENTITY.powf(5.0), Su2::IDENTITY);
    }
}
