//! Finite-difference tensor calculus on the model manifolds.
//!
//! Fields are closures on ambient points. A vector `w` given at one point is
//! extended to a field by tangent projection, `W(q) = P_q w`; every
//! quantity computed here is tensorial, so the choice of extension does not
//! matter beyond truncation error.

use super::Manifold;
use crate::numerics::{Vector, FD_STEP, FD_STEP2};

pub type FieldFn<'a> = dyn Fn(&Vector) -> Vector + 'a;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Connection {
    LeviCivita,
    /// Generalised Tanaka–Webster connection.
    Tanaka,
}

impl Manifold {
    /// Tangent extension `q ↦ P_q w` of a vector given at one point.
    pub fn extend<'a>(&'a self, w: &'a Vector) -> impl Fn(&Vector) -> Vector + 'a {
        move |q: &Vector| self.tangent_project(q, w)
    }

    /// `∇_u ξ` by finite differences.
    pub fn nabla_xi(&self, p: &Vector, u: &Vector) -> Vector {
        self.covariant_derivative(p, u, &|q| self.xi(q))
    }

    /// `(∇_u J) w` by finite differences.
    pub fn nabla_j(&self, p: &Vector, u: &Vector, w: &Vector) -> Vector {
        self.nabla_j_step(p, u, w, FD_STEP)
    }

    pub fn nabla_j_step(&self, p: &Vector, u: &Vector, w: &Vector, h: f64) -> Vector {
        let wf = self.extend(w);
        let jw = |q: &Vector| self.j(q, &wf(q));
        let a = self.covariant_derivative_step(p, u, &jw, h);
        let b = self.covariant_derivative_step(p, u, &wf, h);
        a - self.j(p, &b)
    }

    /// Lie bracket `[X, Y](p) = dY(X) − dX(Y)` of two tangent fields.
    pub fn lie_bracket(&self, p: &Vector, x: &FieldFn, y: &FieldFn) -> Vector {
        self.lie_bracket_step(p, x, y, FD_STEP)
    }

    pub fn lie_bracket_step(&self, p: &Vector, x: &FieldFn, y: &FieldFn, h: f64) -> Vector {
        let dy = self.directional_derivative(p, &x(p), y, h);
        let dx = self.directional_derivative(p, &y(p), x, h);
        self.tangent_project(p, &(dy - dx))
    }

    /// `h w = (L_ξ J) w` by finite differences.
    pub fn lie_h(&self, p: &Vector, w: &Vector) -> Vector {
        self.lie_h_step(p, w, FD_STEP)
    }

    pub fn lie_h_step(&self, p: &Vector, w: &Vector, h: f64) -> Vector {
        let wf = self.extend(w);
        let xi = |q: &Vector| self.xi(q);
        let jw = |q: &Vector| self.j(q, &wf(q));
        let a = self.lie_bracket_step(p, &xi, &jw, h);
        let b = self.lie_bracket_step(p, &xi, &wf, h);
        a - self.j(p, &b)
    }

    /// Nijenhuis tensor `[J,J](u, v) = J²[u,v] + [Ju,Jv] − J[Ju,v] − J[u,Jv]`.
    pub fn nijenhuis(&self, p: &Vector, u: &Vector, v: &Vector) -> Vector {
        let uf = self.extend(u);
        let vf = self.extend(v);
        let ju = |q: &Vector| self.j(q, &uf(q));
        let jv = |q: &Vector| self.j(q, &vf(q));
        let uv = self.lie_bracket(p, &uf, &vf);
        let t1 = self.j(p, &self.j(p, &uv));
        let t2 = self.lie_bracket(p, &ju, &jv);
        let t3 = self.j(p, &self.lie_bracket(p, &ju, &vf));
        let t4 = self.j(p, &self.lie_bracket(p, &uf, &jv));
        t1 + t2 - t3 - t4
    }

    /// `dη(x, y) = X η(Y) − Y η(X) − η([X, Y])` by finite differences.
    pub fn d_eta(&self, p: &Vector, x: &Vector, y: &Vector) -> f64 {
        let xf = self.extend(x);
        self.lie_eta(p, &xf, y) - self.directional_scalar(p, y, &|q| self.eta(q, &xf(q)))
    }

    /// `(L_X η)(v) = X η(V) − η([X, V])` for a field `X`.
    pub fn lie_eta(&self, p: &Vector, x: &FieldFn, v: &Vector) -> f64 {
        let vf = self.extend(v);
        let xv = x(p);
        let a = self.directional_scalar(p, &xv, &|q| self.eta(q, &vf(q)));
        a - self.eta(p, &self.lie_bracket(p, x, &vf))
    }

    fn directional_scalar(&self, p: &Vector, u: &Vector, f: &dyn Fn(&Vector) -> f64) -> f64 {
        let wrapped = |q: &Vector| Vector::from_element(1, f(q));
        self.directional_derivative(p, u, &wrapped, FD_STEP)[0]
    }

    /// `N(X) = P (∇_X J) X` (no projection on `CP^n`).
    pub fn n_tensor(&self, p: &Vector, x: &Vector) -> Vector {
        let v = self.nabla_j(p, x, x);
        self.horizontal(p, &v)
    }

    /// `∇_u V` for the chosen connection. The Tanaka connection is
    /// `∇_u V + ½η(u)JV − η(V)∇_uξ + ⟨∇_uξ, V⟩ξ`.
    pub fn connection_derivative(
        &self,
        conn: Connection,
        p: &Vector,
        u: &Vector,
        field: &FieldFn,
        h: f64,
    ) -> Vector {
        let base = self.covariant_derivative_step(p, u, field, h);
        match conn {
            Connection::LeviCivita => base,
            Connection::Tanaka => {
                let v = field(p);
                let nxi = self.covariant_derivative_step(p, u, &|q| self.xi(q), h);
                base + self.j(p, &v) * (0.5 * self.eta(p, u)) - &nxi * self.eta(p, &v)
                    + self.xi(p) * self.metric(p, &nxi, &v)
            }
        }
    }

    /// Torsion of the Tanaka connection, `T(u,v) = ∇̄_u v − ∇̄_v u − [u, v]`.
    pub fn tanaka_torsion(&self, p: &Vector, u: &Vector, v: &Vector) -> Vector {
        let uf = self.extend(u);
        let vf = self.extend(v);
        let a = self.connection_derivative(Connection::Tanaka, p, u, &vf, FD_STEP);
        let b = self.connection_derivative(Connection::Tanaka, p, v, &uf, FD_STEP);
        a - b - self.lie_bracket(p, &uf, &vf)
    }

    /// Curvature `R(x,y)z = ∇_x∇_y z − ∇_y∇_x z − ∇_{[x,y]} z` of either
    /// connection by nested finite differences.
    pub fn fd_curvature(&self, conn: Connection, p: &Vector, x: &Vector, y: &Vector, z: &Vector) -> Vector {
        let xf = self.extend(x);
        let yf = self.extend(y);
        let zf = self.extend(z);
        let inner_y = |q: &Vector| self.connection_derivative(conn, q, &yf(q), &zf, FD_STEP);
        let inner_x = |q: &Vector| self.connection_derivative(conn, q, &xf(q), &zf, FD_STEP);
        let t1 = self.connection_derivative(conn, p, x, &inner_y, FD_STEP2);
        let t2 = self.connection_derivative(conn, p, y, &inner_x, FD_STEP2);
        let br = self.lie_bracket(p, &xf, &yf);
        let t3 = self.connection_derivative(conn, p, &br, &zf, FD_STEP);
        t1 - t2 - t3
    }

    /// `(∇_u T) w` for a (1,1)-tensor given pointwise by `t(q, w)`.
    pub fn nabla_tensor(
        &self,
        p: &Vector,
        u: &Vector,
        w: &Vector,
        t: &dyn Fn(&Vector, &Vector) -> Vector,
        h: f64,
    ) -> Vector {
        let wf = self.extend(w);
        let tw = |q: &Vector| t(q, &wf(q));
        let a = self.covariant_derivative_step(p, u, &tw, h);
        let b = self.covariant_derivative_step(p, u, &wf, h);
        a - t(p, &b)
    }

    /// `(∇_u h) w` with `h` itself from finite differences (two layers).
    pub fn nabla_h(&self, p: &Vector, u: &Vector, w: &Vector) -> Vector {
        self.nabla_tensor(p, u, w, &|q, v| self.lie_h(q, v), FD_STEP2)
    }

    /// `(∇_u (J h)) w` (two finite-difference layers).
    pub fn nabla_jh(&self, p: &Vector, u: &Vector, w: &Vector) -> Vector {
        self.nabla_tensor(p, u, w, &|q, v| self.j(q, &self.lie_h(q, v)), FD_STEP2)
    }

    /// `div h = Σ_i (∇_{e_i} h) e_i` over an orthonormal tangent basis.
    pub fn div_h(&self, p: &Vector) -> Vector {
        let basis = self.tangent_basis(p);
        let mut out = Vector::zeros(p.len());
        for e in &basis {
            out += self.nabla_h(p, e, e);
        }
        out
    }
}
