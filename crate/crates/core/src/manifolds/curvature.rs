//! Closed-form curvature of the model manifolds.
//!
//! Convention: `R(x,y)z = ∇_x∇_y z − ∇_y∇_x z − ∇_{[x,y]} z`, so that
//! `⟨R(x,y)y, x⟩` is the sectional curvature of an orthonormal pair.

use super::{mul_i, Manifold, Model, HEIS_BRACKET, HEIS_NABLA};
use crate::numerics::Vector;

impl Manifold {
    /// Riemann curvature `Rm(x, y) z`.
    pub fn riemann(&self, p: &Vector, x: &Vector, y: &Vector, z: &Vector) -> Vector {
        match self.model {
            Model::Hopf { k, .. } => hopf_riemann(self, k, p, x, y, z),
            Model::Base { .. } => {
                // Fubini–Study with holomorphic curvature k²; as a (1,3)-tensor
                // it is independent of the scale when written with ⟨·,·⟩_E.
                let p2 = p.norm_squared();
                let q = 1.0 / p2;
                let jx = mul_i(x);
                let jy = mul_i(y);
                let jz = mul_i(z);
                (x * y.dot(z) - y * x.dot(z) + &jx * jy.dot(z) - &jy * jx.dot(z)
                    + jz * (2.0 * x.dot(&jy)))
                    * q
            }
            Model::Heisenberg => {
                let xc = Self::heis_components(p, x);
                let yc = Self::heis_components(p, y);
                let zc = Self::heis_components(p, z);
                let table = heis_curvature_table();
                let mut out = [0.0; 3];
                for a in 0..3 {
                    for b in 0..3 {
                        for c in 0..3 {
                            let w = xc[a] * yc[b] * zc[c];
                            if w != 0.0 {
                                for (d, o) in out.iter_mut().enumerate() {
                                    *o += w * table[a][b][c][d];
                                }
                            }
                        }
                    }
                }
                Self::heis_from_components(p, &out)
            }
        }
    }

    /// `⟨Rm(x, y) z, w⟩`.
    pub fn riemann4(&self, p: &Vector, x: &Vector, y: &Vector, z: &Vector, w: &Vector) -> f64 {
        self.metric(p, &self.riemann(p, x, y, z), w)
    }

    /// Ricci tensor `Rc(u, v) = Σ_i ⟨Rm(e_i, u) v, e_i⟩`.
    pub fn ricci(&self, p: &Vector, u: &Vector, v: &Vector) -> f64 {
        self.tangent_basis(p)
            .iter()
            .map(|e| self.riemann4(p, e, u, v, e))
            .sum()
    }

    /// Tanaka–Webster curvature `R̄m(x, y) z` from the closed-form
    /// expressions in terms of `Rm`, `J`, `h` and `∇J` (on `CP^n` it is `Rm`).
    ///
    /// Arguments are split into horizontal and Reeb parts; `R̄m(·,·)ξ = 0`
    /// and the mixed part uses `R̄m(X, ξ)Z = P Rm(X, ξ)Z + ½ P(∇_X J)Z`.
    pub fn tanaka_webster(&self, p: &Vector, x: &Vector, y: &Vector, z: &Vector) -> Vector {
        if !self.is_contact() {
            return self.riemann(p, x, y, z);
        }
        let xi = self.xi(p);
        let (ex, ey) = (self.eta(p, x), self.eta(p, y));
        let xh = self.horizontal(p, x);
        let yh = self.horizontal(p, y);
        let zh = self.horizontal(p, z);
        let mut out = self.tanaka_webster_horizontal(p, &xh, &yh, &zh);
        if ey != 0.0 {
            out += self.tanaka_webster_mixed(p, &xh, &xi, &zh) * ey;
        }
        if ex != 0.0 {
            out -= self.tanaka_webster_mixed(p, &yh, &xi, &zh) * ex;
        }
        out
    }

    fn tanaka_webster_horizontal(&self, p: &Vector, x: &Vector, y: &Vector, z: &Vector) -> Vector {
        let rm = self.horizontal(p, &self.riemann(p, x, y, z));
        let jhx = self.j(p, x) + self.j(p, &self.h(p, x));
        let jhy = self.j(p, y) + self.j(p, &self.h(p, y));
        rm + &jhx * (0.25 * self.metric(p, &jhy, z)) - &jhy * (0.25 * self.metric(p, &jhx, z))
            + self.j(p, z) * (0.5 * self.metric(p, x, &self.j(p, y)))
    }

    fn tanaka_webster_mixed(&self, p: &Vector, x: &Vector, xi: &Vector, z: &Vector) -> Vector {
        let rm = self.riemann(p, x, xi, z);
        let nj = self.nabla_j(p, x, z);
        self.horizontal(p, &(rm + nj * 0.5))
    }
}

/// Round sphere of radius 2 plus the D-homothetic correction
/// `D(x,y) = −c(η₁(x)Jy + η₁(y)Jx)`, `c = (1/k² − 1)/2`:
/// `R' = R + (∇_x D)(y,z) − (∇_y D)(x,z) + D(x, D(y,z)) − D(y, D(x,z))`.
fn hopf_riemann(m: &Manifold, k: f64, p: &Vector, x: &Vector, y: &Vector, z: &Vector) -> Vector {
    let p2 = p.norm_squared();
    let round = (x * y.dot(z) - y * x.dot(z)) / p2;
    let a = 1.0 / (k * k);
    if a == 1.0 {
        return round;
    }
    let c = 0.5 * (a - 1.0);
    let xi1 = Manifold::xi1(p);
    let eta1 = |v: &Vector| xi1.dot(v);
    let j = |v: &Vector| m.j(p, v);
    // Round-sphere identities (radius 2): ∇_u ξ₁ = −½Ju, (∇_u J)v = ½⟨u,v⟩ξ₁ − ½η₁(v)u.
    let omega = |u: &Vector, v: &Vector| -0.5 * j(u).dot(v);
    let nj = |u: &Vector, v: &Vector| &xi1 * (0.5 * u.dot(v)) - u * (0.5 * eta1(v));
    let d = |u: &Vector, v: &Vector| -(j(v) * eta1(u) + j(u) * eta1(v)) * c;
    let nabla_d = |u: &Vector, v: &Vector, w: &Vector| {
        -(j(w) * omega(u, v) + nj(u, w) * eta1(v) + j(v) * omega(u, w) + nj(u, v) * eta1(w)) * c
    };
    round + nabla_d(x, y, z) - nabla_d(y, x, z) + d(x, &d(y, z)) - d(y, &d(x, z))
}

/// `T[a][b][c][d]`: frame components of `R(e_a, e_b) e_c` for the Heisenberg
/// group, from the constant connection table.
fn heis_curvature_table() -> [[[[f64; 3]; 3]; 3]; 3] {
    let nab = |a: usize, v: &[f64; 3]| -> [f64; 3] {
        // ∇_{e_a} of the constant-coefficient field Σ v_d e_d.
        let mut out = [0.0; 3];
        for (d, vd) in v.iter().enumerate() {
            for (c, o) in out.iter_mut().enumerate() {
                *o += vd * HEIS_NABLA[a][d][c];
            }
        }
        out
    };
    let mut t = [[[[0.0; 3]; 3]; 3]; 3];
    for a in 0..3 {
        for b in 0..3 {
            for c in 0..3 {
                let t1 = nab(a, &HEIS_NABLA[b][c]);
                let t2 = nab(b, &HEIS_NABLA[a][c]);
                let mut t3 = [0.0; 3];
                for d in 0..3 {
                    let br = HEIS_BRACKET[a][b][d];
                    if br != 0.0 {
                        for (e, o) in t3.iter_mut().enumerate() {
                            *o += br * HEIS_NABLA[d][c][e];
                        }
                    }
                }
                for d in 0..3 {
                    t[a][b][c][d] = t1[d] - t2[d] - t3[d];
                }
            }
        }
    }
    t
}
