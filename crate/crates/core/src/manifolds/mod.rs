//! Model manifolds and their structure tensors.
//!
//! Three families are built in:
//!
//! * `hopf:k=,m=,n=` — the circle bundle `P(k, m)` over `CP^n`. Points live
//!   on the sphere `|z|² = 4` in `C^{n+1}` (interleaved real layout
//!   `Re z0, Im z0, Re z1, …`). The structure for general `k` is the
//!   D-homothetic deformation of the round one: `ξ = k²ξ₁`, `η = η₁/k²`,
//!   `g = g_H/k² + η₁²/k⁴`, `J` unchanged. The `Z_m` quotient is represented
//!   by the cover together with the deck rotation `z ↦ e^{-2πi/m} z`.
//! * `base:k=,n=` — `CP^n` with holomorphic sectional curvature `k²`, stored
//!   through horizontal lifts on the same sphere (metric `⟨·,·⟩_E / k²`).
//! * `heisenberg` — `R³` with `η = dz + (y dx − x dy)/2`, orthonormal frame
//!   `e1 = ∂x − (y/2)∂z`, `e2 = ∂y + (x/2)∂z`, `ξ = ∂z`, `J e1 = e2`.
//!
//! Covariant derivatives are written `∇_u V = P_p(dV(u)) + Γ_p(u, V)`, where
//! `P_p` is the tangent projection in ambient coordinates and `Γ_p` a model
//! specific correction (zero for the round sphere and for `CP^n`).

mod calculus;
mod curvature;

pub use calculus::{Connection, FieldFn};

use rand::Rng;
use serde::Serialize;
use std::f64::consts::PI;
use std::fmt;

use crate::error::{Error, Result};
use crate::numerics::{self, sphere_point, Mat, Vector};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Model {
    Hopf { k: f64, m: u32, n: usize },
    Base { k: f64, n: usize },
    Heisenberg,
}

/// Pointwise contact data in ambient coordinates: `η(w) = eta·w`,
/// `J w = j·w`, `h w = h·w`.
#[derive(Debug, Clone)]
pub struct ContactData {
    pub xi: Vector,
    pub eta: Vector,
    pub j: Mat,
    pub h: Mat,
}

#[derive(Debug, Clone)]
pub struct Manifold {
    model: Model,
}

impl fmt::Display for Manifold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.model {
            Model::Hopf { k, m, n } => write!(f, "hopf:k={k},m={m},n={n}"),
            Model::Base { k, n } => write!(f, "base:k={k},n={n}"),
            Model::Heisenberg => write!(f, "heisenberg"),
        }
    }
}

/// Multiplication by `i` in the interleaved layout.
pub fn mul_i(v: &Vector) -> Vector {
    let mut out = Vector::zeros(v.len());
    for j in 0..v.len() / 2 {
        out[2 * j] = -v[2 * j + 1];
        out[2 * j + 1] = v[2 * j];
    }
    out
}

/// Multiplication by the unit complex number `e^{iθ}` in the interleaved layout.
pub fn rotate_phase(v: &Vector, theta: f64) -> Vector {
    let (s, c) = theta.sin_cos();
    let mut out = Vector::zeros(v.len());
    for j in 0..v.len() / 2 {
        let (a, b) = (v[2 * j], v[2 * j + 1]);
        out[2 * j] = c * a - s * b;
        out[2 * j + 1] = s * a + c * b;
    }
    out
}

fn parse_kv(input: &str, body: &str) -> Result<Vec<(String, String)>> {
    body.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|kv| {
            let mut it = kv.splitn(2, '=');
            let key = it.next().unwrap_or("").trim().to_string();
            let val = it.next().map(|v| v.trim().to_string()).ok_or_else(|| Error::Parse {
                input: input.into(),
                reason: format!("expected key=value, found '{kv}'"),
            })?;
            Ok((key, val))
        })
        .collect()
}

impl Manifold {
    pub fn new(model: Model) -> Result<Self> {
        match model {
            Model::Hopf { k, m, n } => {
                if !(k.is_finite() && k > 0.0) {
                    return Err(Error::InvalidParameter(format!("k must be positive, got {k}")));
                }
                if m < 1 {
                    return Err(Error::InvalidParameter("m must be ≥ 1".into()));
                }
                if n < 1 {
                    return Err(Error::InvalidParameter("n must be ≥ 1".into()));
                }
            }
            Model::Base { k, n } => {
                if !(k.is_finite() && k > 0.0) {
                    return Err(Error::InvalidParameter(format!("k must be positive, got {k}")));
                }
                if n < 1 {
                    return Err(Error::InvalidParameter("n must be ≥ 1".into()));
                }
            }
            Model::Heisenberg => {}
        }
        Ok(Self { model })
    }

    pub fn hopf(k: f64, m: u32, n: usize) -> Result<Self> {
        Self::new(Model::Hopf { k, m, n })
    }

    pub fn base(k: f64, n: usize) -> Result<Self> {
        Self::new(Model::Base { k, n })
    }

    pub fn heisenberg() -> Self {
        Self {
            model: Model::Heisenberg,
        }
    }

    /// Parse `hopf:k=<f>,m=<int>,n=<int>`, `base:k=<f>,n=<int>` or `heisenberg`.
    pub fn parse(input: &str) -> Result<Self> {
        let s = input.trim();
        let err = |reason: String| Error::Parse {
            input: input.into(),
            reason,
        };
        let (kind, body) = match s.split_once(':') {
            Some((a, b)) => (a.trim(), b),
            None => (s, ""),
        };
        let kv = parse_kv(input, body)?;
        let get = |name: &str| kv.iter().find(|(k, _)| k == name).map(|(_, v)| v.as_str());
        for (key, _) in &kv {
            let allowed: &[&str] = match kind {
                "hopf" => &["k", "m", "n"],
                "base" => &["k", "n"],
                _ => &[],
            };
            if !allowed.contains(&key.as_str()) {
                return Err(err(format!("unknown key '{key}'")));
            }
        }
        let float = |name: &str, default: f64| -> Result<f64> {
            get(name)
                .map(|v| v.parse::<f64>().map_err(|_| err(format!("'{name}' is not a number"))))
                .unwrap_or(Ok(default))
        };
        let int = |name: &str, default: u64| -> Result<u64> {
            get(name)
                .map(|v| {
                    v.parse::<u64>()
                        .map_err(|_| err(format!("'{name}' is not a non-negative integer")))
                })
                .unwrap_or(Ok(default))
        };
        let model = match kind {
            "hopf" => Model::Hopf {
                k: float("k", 1.0)?,
                m: int("m", 1)? as u32,
                n: int("n", 1)? as usize,
            },
            "base" => Model::Base {
                k: float("k", 1.0)?,
                n: int("n", 1)? as usize,
            },
            "heisenberg" => {
                if !body.trim().is_empty() {
                    return Err(err("heisenberg takes no parameters".into()));
                }
                Model::Heisenberg
            }
            other => return Err(err(format!("unknown manifold kind '{other}'"))),
        };
        Self::new(model).map_err(|e| match e {
            Error::InvalidParameter(r) => err(r),
            e => e,
        })
    }

    pub fn model(&self) -> Model {
        self.model
    }

    pub fn is_contact(&self) -> bool {
        !matches!(self.model, Model::Base { .. })
    }

    /// Half-dimension `n` (manifold dimension is `2n+1`, or `2n` for `CP^n`).
    pub fn n(&self) -> usize {
        match self.model {
            Model::Hopf { n, .. } | Model::Base { n, .. } => n,
            Model::Heisenberg => 1,
        }
    }

    pub fn dim(&self) -> usize {
        match self.model {
            Model::Base { n, .. } => 2 * n,
            _ => 2 * self.n() + 1,
        }
    }

    pub fn ambient_dim(&self) -> usize {
        match self.model {
            Model::Hopf { n, .. } | Model::Base { n, .. } => 2 * n + 2,
            Model::Heisenberg => 3,
        }
    }

    /// Curvature scale `k` of the model (`None` for the Heisenberg group).
    pub fn k(&self) -> Option<f64> {
        match self.model {
            Model::Hopf { k, .. } | Model::Base { k, .. } => Some(k),
            Model::Heisenberg => None,
        }
    }

    fn require_contact(&self, what: &str) -> Result<()> {
        if self.is_contact() {
            Ok(())
        } else {
            Err(Error::NotApplicable(format!("{what} needs a contact manifold, got {self}")))
        }
    }

    // ----- points -------------------------------------------------------

    /// A random point (uniform on the sphere for `hopf`/`base`, uniform in
    /// `[-1, 1]³` for the Heisenberg group).
    pub fn sample_point<R: Rng>(&self, rng: &mut R) -> Vector {
        match self.model {
            Model::Heisenberg => Vector::from_fn(3, |_, _| rng.random_range(-1.0..1.0)),
            _ => Vector::from_vec(sphere_point(rng, self.ambient_dim() - 1)) * 2.0,
        }
    }

    /// The base point `(2, 0, …)` (origin for the Heisenberg group).
    pub fn origin(&self) -> Vector {
        let mut p = Vector::zeros(self.ambient_dim());
        if !matches!(self.model, Model::Heisenberg) {
            p[0] = 2.0;
        }
        p
    }

    /// Nearest point of the manifold to an ambient point.
    pub fn retract(&self, p: &Vector) -> Vector {
        match self.model {
            Model::Heisenberg => p.clone(),
            _ => p * (2.0 / p.norm()),
        }
    }

    /// Distance of an ambient point from the manifold.
    pub fn constraint_residual(&self, p: &Vector) -> f64 {
        match self.model {
            Model::Heisenberg => 0.0,
            _ => (p.norm() - 2.0).abs(),
        }
    }

    /// Ambient distance in the quotient (minimum over deck translates).
    pub fn quotient_gap(&self, p: &Vector, q: &Vector) -> f64 {
        match self.model {
            Model::Hopf { m, .. } if m > 1 => (0..m)
                .map(|j| (self.deck(p, j as i64) - q).norm())
                .fold(f64::INFINITY, f64::min),
            _ => (p - q).norm(),
        }
    }

    /// `j`-th power of the deck generator `z ↦ e^{-2πi/m} z` (identity unless `m > 1`).
    pub fn deck(&self, p: &Vector, j: i64) -> Vector {
        match self.model {
            Model::Hopf { m, .. } if m > 1 => rotate_phase(p, -2.0 * PI * j as f64 / m as f64),
            _ => p.clone(),
        }
    }

    /// Riemannian volume of the manifold (the quotient for `m > 1`).
    pub fn volume(&self) -> Option<f64> {
        match self.model {
            Model::Hopf { k, m, n } => {
                // vol S^{2n+1}(2) = 2π^{n+1}/n! · 2^{2n+1}, scaled by k^{-(2n+2)}.
                let fact: f64 = (1..=n).map(|i| i as f64).product();
                let round = 2.0 * PI.powi(n as i32 + 1) / fact * 2f64.powi(2 * n as i32 + 1);
                Some(round / k.powi(2 * n as i32 + 2) / m as f64)
            }
            Model::Base { k, n } => {
                // vol CP^n with holomorphic curvature k² is (4π/k²)^n / n!.
                let fact: f64 = (1..=n).map(|i| i as f64).product();
                Some((4.0 * PI / (k * k)).powi(n as i32) / fact)
            }
            Model::Heisenberg => None,
        }
    }

    // ----- metric and projections ---------------------------------------

    fn xi1(p: &Vector) -> Vector {
        mul_i(p) * (-1.0 / p.norm())
    }

    /// Projection of an ambient vector onto the tangent space at `p`
    /// (onto the horizontal space for `CP^n`).
    pub fn tangent_project(&self, p: &Vector, w: &Vector) -> Vector {
        match self.model {
            Model::Heisenberg => w.clone(),
            Model::Hopf { .. } => w - p * (w.dot(p) / p.norm_squared()),
            Model::Base { .. } => {
                let ip = mul_i(p);
                let p2 = p.norm_squared();
                w - p * (w.dot(p) / p2) - &ip * (w.dot(&ip) / p2)
            }
        }
    }

    fn heis_components(p: &Vector, u: &Vector) -> [f64; 3] {
        [u[0], u[1], u[2] + 0.5 * p[1] * u[0] - 0.5 * p[0] * u[1]]
    }

    fn heis_frame(p: &Vector) -> [Vector; 3] {
        [
            Vector::from_vec(vec![1.0, 0.0, -0.5 * p[1]]),
            Vector::from_vec(vec![0.0, 1.0, 0.5 * p[0]]),
            Vector::from_vec(vec![0.0, 0.0, 1.0]),
        ]
    }

    fn heis_from_components(p: &Vector, c: &[f64; 3]) -> Vector {
        let f = Self::heis_frame(p);
        &f[0] * c[0] + &f[1] * c[1] + &f[2] * c[2]
    }

    /// Riemannian metric `g_p(u, v)` on ambient tangent vectors.
    pub fn metric(&self, p: &Vector, u: &Vector, v: &Vector) -> f64 {
        match self.model {
            Model::Hopf { k, .. } => {
                let x = Self::xi1(p);
                let (eu, ev) = (x.dot(u), x.dot(v));
                let uh = u - &x * eu;
                let vh = v - &x * ev;
                uh.dot(&vh) / (k * k) + eu * ev / k.powi(4)
            }
            Model::Base { k, .. } => u.dot(v) / (k * k),
            Model::Heisenberg => {
                let a = Self::heis_components(p, u);
                let b = Self::heis_components(p, v);
                a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
            }
        }
    }

    pub fn norm(&self, p: &Vector, u: &Vector) -> f64 {
        self.metric(p, u, u).max(0.0).sqrt()
    }

    /// Gram matrix `g(v_i, v_j)` of a list of vectors.
    pub fn gram(&self, p: &Vector, vs: &[Vector]) -> Mat {
        Mat::from_fn(vs.len(), vs.len(), |i, j| self.metric(p, &vs[i], &vs[j]))
    }

    /// An orthonormal basis of the tangent space at `p` (of the horizontal
    /// lifts for `CP^n`).
    pub fn tangent_basis(&self, p: &Vector) -> Vec<Vector> {
        let d = self.ambient_dim();
        let cands: Vec<Vector> = (0..d)
            .map(|i| self.tangent_project(p, &Vector::from_fn(d, |r, _| if r == i { 1.0 } else { 0.0 })))
            .collect();
        numerics::gram_schmidt(&cands, |a, b| self.metric(p, a, b))
    }

    // ----- contact structure --------------------------------------------

    /// Reeb field `ξ(p)`.
    pub fn xi(&self, p: &Vector) -> Vector {
        match self.model {
            Model::Hopf { k, .. } => Self::xi1(p) * (k * k),
            Model::Heisenberg => Vector::from_vec(vec![0.0, 0.0, 1.0]),
            Model::Base { .. } => Vector::zeros(self.ambient_dim()),
        }
    }

    /// Contact form `η_p(w)` (zero on `CP^n`).
    pub fn eta(&self, p: &Vector, w: &Vector) -> f64 {
        match self.model {
            Model::Hopf { k, .. } => Self::xi1(p).dot(w) / (k * k),
            Model::Heisenberg => Self::heis_components(p, w)[2],
            Model::Base { .. } => 0.0,
        }
    }

    /// Horizontal part `w − η(w)ξ` (tangent projection for `CP^n`).
    pub fn horizontal(&self, p: &Vector, w: &Vector) -> Vector {
        match self.model {
            Model::Base { .. } => self.tangent_project(p, w),
            _ => {
                let w = self.tangent_project(p, w);
                &w - self.xi(p) * self.eta(p, &w)
            }
        }
    }

    /// `J_p w` (the complex structure on `ker η`, zero on `ξ`).
    pub fn j(&self, p: &Vector, w: &Vector) -> Vector {
        match self.model {
            Model::Hopf { .. } => {
                let x = Self::xi1(p);
                let wt = self.tangent_project(p, w);
                mul_i(&(&wt - &x * x.dot(&wt)))
            }
            Model::Base { .. } => mul_i(&self.tangent_project(p, w)),
            Model::Heisenberg => {
                let c = Self::heis_components(p, w);
                Self::heis_from_components(p, &[-c[1], c[0], 0.0])
            }
        }
    }

    /// Closed-form `h = L_ξ J`. All built-in contact models are Sasakian, so
    /// this is zero; the finite-difference Lie derivative is
    /// [`Manifold::lie_h`].
    pub fn h(&self, _p: &Vector, _w: &Vector) -> Vector {
        Vector::zeros(self.ambient_dim())
    }

    fn matrix_of<F: Fn(&Vector) -> Vector>(&self, p: &Vector, f: F) -> Mat {
        let d = self.ambient_dim();
        let mut m = Mat::zeros(d, d);
        for c in 0..d {
            let e = self.tangent_project(p, &Vector::from_fn(d, |r, _| if r == c { 1.0 } else { 0.0 }));
            m.set_column(c, &f(&e));
        }
        m
    }

    /// Contact data `(ξ, η, J, h)` at `p` as ambient vectors/matrices.
    pub fn contact_data(&self, p: &Vector) -> Result<ContactData> {
        self.require_contact("contact data")?;
        let d = self.ambient_dim();
        let eta = Vector::from_fn(d, |r, _| {
            let e = Vector::from_fn(d, |i, _| if i == r { 1.0 } else { 0.0 });
            self.eta(p, &self.tangent_project(p, &e))
        });
        Ok(ContactData {
            xi: self.xi(p),
            eta,
            j: self.matrix_of(p, |e| self.j(p, e)),
            h: self.matrix_of(p, |e| self.h(p, e)),
        })
    }

    // ----- connection ---------------------------------------------------

    /// Connection correction `Γ_p(u, v)` (see the module docs).
    pub fn christoffel(&self, p: &Vector, u: &Vector, v: &Vector) -> Vector {
        match self.model {
            Model::Hopf { k, .. } => {
                let a = 1.0 / (k * k);
                if a == 1.0 {
                    return Vector::zeros(u.len());
                }
                let c = 0.5 * (a - 1.0);
                let x = Self::xi1(p);
                let (eu, ev) = (x.dot(u), x.dot(v));
                -(self.j(p, v) * eu + self.j(p, u) * ev) * c
            }
            Model::Base { .. } => Vector::zeros(u.len()),
            Model::Heisenberg => {
                let uc = Self::heis_components(p, u);
                let vc = Self::heis_components(p, v);
                let frame = Self::heis_frame(p);
                // d e_a(u) for e1 = (1, 0, -y/2), e2 = (0, 1, x/2), ξ = ∂z.
                let de = [
                    Vector::from_vec(vec![0.0, 0.0, -0.5 * u[1]]),
                    Vector::from_vec(vec![0.0, 0.0, 0.5 * u[0]]),
                    Vector::zeros(3),
                ];
                let mut out = Vector::zeros(3);
                for a in 0..3 {
                    let mut nab = [0.0; 3];
                    for (b, ub) in uc.iter().enumerate() {
                        for (d, nd) in nab.iter_mut().enumerate() {
                            *nd += ub * HEIS_NABLA[b][a][d];
                        }
                    }
                    let nab_amb = &frame[0] * nab[0] + &frame[1] * nab[1] + &frame[2] * nab[2];
                    out += (nab_amb - &de[a]) * vc[a];
                }
                out
            }
        }
    }

    /// Ambient correction keeping a vector field along a curve tangent:
    /// `v̇ = Dv/dt − Γ(ṗ, v) + constraint(p, ṗ, v)`.
    pub fn constraint_rate(&self, p: &Vector, pdot: &Vector, v: &Vector) -> Vector {
        match self.model {
            Model::Heisenberg => Vector::zeros(3),
            Model::Hopf { .. } => p * (-v.dot(pdot) / p.norm_squared()),
            Model::Base { .. } => {
                let p2 = p.norm_squared();
                let ip = mul_i(p);
                p * (-v.dot(pdot) / p2) - ip * (v.dot(&mul_i(pdot)) / p2)
            }
        }
    }

    /// Ambient rate of a tangent field along a curve with covariant rate `cov`.
    pub fn ambient_rate(&self, p: &Vector, pdot: &Vector, v: &Vector, cov: &Vector) -> Vector {
        cov - self.christoffel(p, pdot, v) + self.constraint_rate(p, pdot, v)
    }

    /// Covariant derivative `∇_u V` of the field `V` at `p` (finite
    /// differences along the retraction curve).
    pub fn covariant_derivative(&self, p: &Vector, u: &Vector, field: &dyn Fn(&Vector) -> Vector) -> Vector {
        self.covariant_derivative_step(p, u, field, numerics::FD_STEP)
    }

    pub fn covariant_derivative_step(
        &self,
        p: &Vector,
        u: &Vector,
        field: &dyn Fn(&Vector) -> Vector,
        h: f64,
    ) -> Vector {
        let d = self.directional_derivative(p, u, field, h);
        self.tangent_project(p, &d) + self.christoffel(p, u, &field(p))
    }

    /// Ambient derivative `dV(u)` of a field along the retraction curve.
    pub fn directional_derivative(
        &self,
        p: &Vector,
        u: &Vector,
        field: &dyn Fn(&Vector) -> Vector,
        h: f64,
    ) -> Vector {
        let nu = u.norm();
        if nu == 0.0 {
            return Vector::zeros(p.len());
        }
        let uh = u / nu;
        numerics::central_diff(|s| field(&self.retract(&(p + &uh * s))), h) * nu
    }
}

/// `HEIS_NABLA[b][a]` = frame components of `∇_{e_b} e_a` (`e_3 = ξ`).
const HEIS_NABLA: [[[f64; 3]; 3]; 3] = [
    [[0.0, 0.0, 0.0], [0.0, 0.0, 0.5], [0.0, -0.5, 0.0]],
    [[0.0, 0.0, -0.5], [0.0, 0.0, 0.0], [0.5, 0.0, 0.0]],
    [[0.0, -0.5, 0.0], [0.5, 0.0, 0.0], [0.0, 0.0, 0.0]],
];

/// Frame components of `[e_a, e_b]`.
const HEIS_BRACKET: [[[f64; 3]; 3]; 3] = [
    [[0.0, 0.0, 0.0], [0.0, 0.0, 1.0], [0.0, 0.0, 0.0]],
    [[0.0, 0.0, -1.0], [0.0, 0.0, 0.0], [0.0, 0.0, 0.0]],
    [[0.0, 0.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 0.0]],
];

#[cfg(test)]
mod tests;
