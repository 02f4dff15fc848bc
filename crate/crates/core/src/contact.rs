//! Almost contact triples `(φ, η, ξ)` on `π*TM` and the tensors built from
//! them: compatibility, the contact condition, Nijenhuis and normality
//! tensors, the operators `h` and `v`, and the covariant-derivative
//! identities for `φ` and `ξ`.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::check::max_abs;
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::geometry::{FiberField, Geometry, Part, TangentField, Tensor};
use crate::jet::Jet;
use crate::point::check_dimension;

/// Singular values at or below this count as zero in rank tests.
pub const RANK_CUTOFF: f64 = 1e-8;

#[derive(Clone, Debug)]
pub enum TripleKind {
    /// Component functions of `(x, y)`.
    Expr {
        phi: Vec<Vec<Expr>>,
        eta: Vec<Expr>,
        xi: Vec<Expr>,
    },
    /// Orthonormal frame adapted to the Cartan tensor at the base point, so
    /// that `F ∂φ/∂yᵏ = [φ, Âₖ]` there. See [`cartan_frame`].
    CartanFrame,
}

#[derive(Clone, Debug)]
pub struct ContactTriple {
    pub name: String,
    pub m: usize,
    pub kind: TripleKind,
    /// Global orientation of `φ`, `±1`.
    pub phi_sign: f64,
}

pub const BUILTIN_TRIPLES: &[(&str, &str)] = &[
    ("heisenberg3", "eta = (dx3 - x2 dx1)/2, xi = 2 d/dx3, the Sasakian structure of the Heisenberg group"),
    ("flat", "constant rotation pairs with eta = dx^m, xi = e_m (flatN for dimension N)"),
    ("cartan-frame", "y-dependent frame built from g and the Cartan tensor at each point, any metric"),
];

fn parse_row(src: &[impl AsRef<str>], m: usize) -> Result<Vec<Expr>> {
    src.iter().map(|s| Ok(Expr::parse(s.as_ref(), m)?)).collect()
}

impl ContactTriple {
    /// `φ` rows are `φⁱ` for `i = 1..m`, columns `j`: `φ(∂ⱼ) = Σᵢ φⁱⱼ ∂ᵢ`.
    pub fn from_strings(name: &str, m: usize, phi: &[Vec<String>], eta: &[String], xi: &[String]) -> Result<ContactTriple> {
        check_dimension(m)?;
        if phi.len() != m || phi.iter().any(|r| r.len() != m) || eta.len() != m || xi.len() != m {
            return Err(Error::Config(format!("triple '{name}' must have an {m}x{m} phi and {m}-component eta and xi")));
        }
        Ok(ContactTriple {
            name: name.to_string(),
            m,
            kind: TripleKind::Expr {
                phi: phi.iter().map(|r| parse_row(r, m)).collect::<Result<_>>()?,
                eta: parse_row(eta, m)?,
                xi: parse_row(xi, m)?,
            },
            phi_sign: 1.0,
        })
    }

    fn from_strs(name: &str, m: usize, phi: &[&[&str]], eta: &[&str], xi: &[&str]) -> ContactTriple {
        let own = |r: &[&str]| r.iter().map(|s| s.to_string()).collect::<Vec<_>>();
        let phi: Vec<Vec<String>> = phi.iter().map(|r| own(r)).collect();
        ContactTriple::from_strings(name, m, &phi, &own(eta), &own(xi)).expect("built-in triple")
    }

    pub fn heisenberg3() -> ContactTriple {
        ContactTriple::from_strs(
            "heisenberg3",
            3,
            &[&["0", "1", "0"], &["0-1", "0", "0"], &["0", "x2", "0"]],
            &["0-0.5*x2", "0", "0.5"],
            &["0", "0", "2"],
        )
    }

    /// `φe₂ᵢ₋₁ = e₂ᵢ`, `φe₂ᵢ = −e₂ᵢ₋₁`, `η = dxᵐ`, `ξ = eₘ`.
    pub fn flat(m: usize) -> Result<ContactTriple> {
        check_dimension(m)?;
        let mut phi = vec![vec!["0".to_string(); m]; m];
        for i in 0..(m - 1) / 2 {
            phi[2 * i + 1][2 * i] = "1".into();
            phi[2 * i][2 * i + 1] = "0-1".into();
        }
        let unit = |k: usize| (0..m).map(|i| if i == k { "1" } else { "0" }.to_string()).collect::<Vec<_>>();
        let name = if m == 3 { "flat".to_string() } else { format!("flat{m}") };
        ContactTriple::from_strings(&name, m, &phi, &unit(m - 1), &unit(m - 1))
    }

    pub fn cartan_frame(m: usize) -> Result<ContactTriple> {
        check_dimension(m)?;
        Ok(ContactTriple {
            name: if m == 3 { "cartan-frame".into() } else { format!("cartan-frame{m}") },
            m,
            kind: TripleKind::CartanFrame,
            phi_sign: 1.0,
        })
    }

    /// Built-in triple by name; `m` fixes the dimension where it is free.
    pub fn builtin(name: &str, m: usize) -> Result<ContactTriple> {
        let unknown = || Error::Unknown {
            kind: "triple",
            name: name.to_string(),
        };
        let with_dim = |prefix: &str| -> Option<usize> {
            let rest = name.strip_prefix(prefix)?;
            if rest.is_empty() {
                Some(m)
            } else {
                rest.parse().ok()
            }
        };
        if name == "heisenberg3" {
            return Ok(ContactTriple::heisenberg3());
        }
        if let Some(k) = with_dim("cartan-frame") {
            return ContactTriple::cartan_frame(k);
        }
        if let Some(k) = with_dim("flat") {
            return ContactTriple::flat(k);
        }
        Err(unknown())
    }

    pub fn with_phi_sign(mut self, s: f64) -> ContactTriple {
        self.phi_sign = s;
        self
    }

    /// Jets of `(φ, η, ξ)` at the geometry's point.
    pub fn jets(&self, geo: &Geometry) -> Result<TripleJets> {
        if geo.m != self.m {
            return Err(Error::DimensionMismatch {
                expected: self.m,
                found: geo.m,
            });
        }
        let t = match &self.kind {
            TripleKind::Expr { phi, eta, xi } => {
                let ev = |e: &Expr| -> Result<Jet> { Ok(e.eval(&geo.x, &geo.y)?) };
                TripleJets {
                    phi: Tensor {
                        contra: 1,
                        cov: 1,
                        m: self.m,
                        comps: phi.iter().flatten().map(ev).collect::<Result<_>>()?,
                    },
                    eta: Tensor {
                        contra: 0,
                        cov: 1,
                        m: self.m,
                        comps: eta.iter().map(ev).collect::<Result<_>>()?,
                    },
                    xi: FiberField(xi.iter().map(ev).collect::<Result<_>>()?),
                }
            }
            TripleKind::CartanFrame => cartan_frame(geo)?,
        };
        Ok(if self.phi_sign < 0.0 {
            TripleJets {
                phi: t.phi.scale_f(-1.0),
                ..t
            }
        } else {
            t
        })
    }
}

#[derive(Clone, Debug)]
pub struct TripleJets {
    /// `(1,1)`, `φⁱⱼ`
    pub phi: Tensor,
    /// `(0,1)`, `η_i`
    pub eta: Tensor,
    pub xi: FiberField,
}

fn dmatrix(geo: &Geometry, f: impl Fn(usize, usize) -> f64) -> DMatrix<f64> {
    DMatrix::from_fn(geo.m, geo.m, f)
}

/// Gram-Schmidt on jet-valued vectors with respect to `g`.
fn orthonormalize(geo: &Geometry, vs: Vec<FiberField>) -> Result<Vec<FiberField>> {
    let mut out: Vec<FiberField> = Vec::with_capacity(vs.len());
    for v in vs {
        let mut u = v;
        for e in &out {
            let c = geo.inner(&u, e);
            u = u.sub(&e.scale(&c));
        }
        let n2 = geo.inner(&u, &u);
        if n2.value() <= 1e-24 {
            return Err(Error::DegenerateBasis(n2.value()));
        }
        let inv = n2.sqrt()?.recip()?;
        out.push(u.scale(&inv));
    }
    Ok(out)
}

/// Frame built from `E₀`, a `g(p)`-orthonormal frame with `ξ₀ ∝ eₘ` first,
/// transported to first order in `y` as `E(z) = E₀ − Σₖ (z_{yₖ}/F₀) Âₖ E₀`,
/// with `(Âₖ)ⁱⱼ = gⁱˡ A_ljk` at `p`, then re-orthonormalized with the jets of
/// `g`. The triple is `ξ = E₀`, `η = g(ξ, ·)` and
/// `φ = Σᵢ (E₂ᵢ ⊗ η₂ᵢ₋₁ − E₂ᵢ₋₁ ⊗ η₂ᵢ)` over the remaining pairs.
pub fn cartan_frame(geo: &Geometry) -> Result<TripleJets> {
    let m = geo.m;
    let g0 = dmatrix(geo, |i, j| geo.g[i][j].value());
    let ginv0 = dmatrix(geo, |i, j| geo.ginv[i][j].value());
    // E₀ from the coordinate basis reordered so that eₘ comes first
    let mut e0: Vec<nalgebra::DVector<f64>> = Vec::with_capacity(m);
    for k in std::iter::once(m - 1).chain(0..m - 1) {
        let mut v = nalgebra::DVector::from_fn(m, |i, _| if i == k { 1.0 } else { 0.0 });
        for e in &e0 {
            let c = (v.transpose() * &g0 * e)[(0, 0)];
            v -= e * c;
        }
        let n = (v.transpose() * &g0 * &v)[(0, 0)].sqrt();
        e0.push(v / n);
    }
    let f0 = geo.f.value();
    let a_hat: Vec<DMatrix<f64>> = (0..m)
        .map(|k| dmatrix(geo, |i, j| (0..m).map(|l| ginv0[(i, l)] * geo.cartan(l, j, k).value()).sum()))
        .collect();
    let z: Vec<Jet> = (0..m).map(|k| geo.y[k].add_const(-geo.point.y[k]).scale(1.0 / f0)).collect();
    let frame = e0
        .iter()
        .map(|e| {
            FiberField(
                (0..m)
                    .map(|i| {
                        let mut c = geo.constant(e[i]);
                        for k in 0..m {
                            let ae = (&a_hat[k] * e)[i];
                            c = c - z[k].scale(ae);
                        }
                        c
                    })
                    .collect(),
            )
        })
        .collect();
    let u = orthonormalize(geo, frame)?;
    let forms: Vec<Vec<Jet>> = u.iter().map(|e| geo.lower(e)).collect();
    let mut phi = Vec::with_capacity(m * m);
    for i in 0..m {
        for j in 0..m {
            let mut acc = geo.constant(0.0);
            for p in 1..=(m - 1) / 2 {
                let (odd, even) = (2 * p - 1, 2 * p);
                acc = acc + &u[even].0[i] * &forms[odd][j] - &u[odd].0[i] * &forms[even][j];
            }
            phi.push(acc);
        }
    }
    Ok(TripleJets {
        phi: Tensor {
            contra: 1,
            cov: 1,
            m,
            comps: phi,
        },
        eta: Tensor {
            contra: 0,
            cov: 1,
            m,
            comps: forms[0].clone(),
        },
        xi: u[0].clone(),
    })
}

/// Eigen-structure summary of an operator that should be `g`-symmetric.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OperatorAlgebra {
    /// `max |g(hX,Y) − g(X,hY)|` over the coordinate basis
    pub symmetry: f64,
    /// `‖hφ + φh‖∞`
    pub anticommute: f64,
    pub trace: f64,
    /// `max |λᵢ + λ_{m−1−i}|` over the sorted spectrum
    pub eigen_pairing: f64,
    pub eigenvalues: Vec<f64>,
    /// `‖h ξ‖∞`
    pub on_xi: f64,
}

/// A triple bound to a geometry.
pub struct ContactGeometry<'a> {
    pub geo: &'a Geometry,
    pub phi: Tensor,
    pub eta: Tensor,
    pub xi: FiberField,
}

impl<'a> ContactGeometry<'a> {
    pub fn new(geo: &'a Geometry, triple: &ContactTriple) -> Result<ContactGeometry<'a>> {
        let t = triple.jets(geo)?;
        Ok(ContactGeometry {
            geo,
            phi: t.phi,
            eta: t.eta,
            xi: t.xi,
        })
    }

    pub fn m(&self) -> usize {
        self.geo.m
    }

    pub fn phi_of(&self, x: &FiberField) -> FiberField {
        self.phi.apply(x)
    }

    pub fn eta_of(&self, x: &FiberField) -> Jet {
        self.eta.eval_form(&[x])
    }

    pub fn phi_matrix(&self) -> DMatrix<f64> {
        let m = self.m();
        DMatrix::from_row_slice(m, m, &self.phi.values())
    }

    /// `Φ_ij = g_ik φᵏⱼ`, so that `Φ(X, Y) = g(X, φY)`.
    pub fn two_form(&self) -> Tensor {
        let m = self.m();
        let g = &self.geo.g;
        let comps = (0..m)
            .flat_map(|i| (0..m).map(move |j| (i, j)))
            .map(|(i, j)| {
                (0..m)
                    .map(|k| &g[i][k] * self.phi.get(&[k, j]))
                    .reduce(|a, b| a + b)
                    .unwrap()
            })
            .collect();
        Tensor {
            contra: 0,
            cov: 2,
            m,
            comps,
        }
    }

    pub fn fundamental_two_form(&self, x: &FiberField, y: &FiberField) -> f64 {
        self.geo.inner(x, &self.phi_of(y)).value()
    }

    /// `(‖φ² + I − η⊗ξ‖∞, |η(ξ) − 1|)`.
    pub fn almost_contact(&self) -> (f64, f64) {
        let m = self.m();
        let p = self.phi_matrix();
        let eta = self.eta.values();
        let xi = self.xi.values();
        let r = &p * &p + DMatrix::identity(m, m) - DMatrix::from_fn(m, m, |i, j| xi[i] * eta[j]);
        let ex: f64 = eta.iter().zip(&xi).map(|(a, b)| a * b).sum();
        (max_abs(r.iter().copied()), (ex - 1.0).abs())
    }

    /// `(‖φξ‖∞, ‖η∘φ‖∞, rank φ)`.
    pub fn derived(&self) -> (f64, f64, usize) {
        let p = self.phi_matrix();
        let xi = nalgebra::DVector::from_vec(self.xi.values());
        let eta = nalgebra::RowDVector::from_vec(self.eta.values());
        let rank = p.clone().svd(false, false).singular_values.iter().filter(|s| **s > RANK_CUTOFF).count();
        (max_abs((&p * xi).iter().copied()), max_abs((eta * &p).iter().copied()), rank)
    }

    /// `g(φX, φY) − g(X, Y) + η(X)η(Y)`.
    pub fn compatibility(&self, x: &FiberField, y: &FiberField) -> f64 {
        let g = self.geo;
        (g.inner(&self.phi_of(x), &self.phi_of(y)) - g.inner(x, y) + self.eta_of(x) * self.eta_of(y)).value()
    }

    pub fn d_eta(&self, part: Part, x: &FiberField, y: &FiberField) -> Result<Jet> {
        self.geo.exterior(part, &self.eta, &[x, y])
    }

    /// `Φ(X, Y)` and `d^Pη(X, Y)` for the convention search.
    pub fn contact_pair(&self, part: Part, x: &FiberField, y: &FiberField) -> Result<(f64, f64)> {
        Ok((self.fundamental_two_form(x, y), self.d_eta(part, x, y)?.value()))
    }

    /// Nijenhuis torsion of a `(1,1)` tensor along one part.
    pub fn nijenhuis(&self, part: Part, t: &Tensor, x: &FiberField, y: &FiberField) -> Result<FiberField> {
        let geo = self.geo;
        let tx = t.apply(x);
        let ty = t.apply(y);
        let br = |a: &FiberField, b: &FiberField| geo.lie_field(part, a, b);
        let t2 = t.compose(t);
        Ok(t2
            .apply(&br(x, y)?)
            .add(&br(&tx, &ty)?)
            .sub(&t.apply(&br(&tx, y)?))
            .sub(&t.apply(&br(x, &ty)?)))
    }

    /// `𝒩⁽¹⁾ = N_φ + 2 dη ⊗ ξ`.
    pub fn n1(&self, part: Part, x: &FiberField, y: &FiberField) -> Result<FiberField> {
        let d = self.d_eta(part, x, y)?.scale(2.0);
        Ok(self.nijenhuis(part, &self.phi, x, y)?.add(&self.xi.scale(&d)))
    }

    /// `𝒩⁽²⁾(X, Y) = (L_{φX}η)Y − (L_{φY}η)X`.
    pub fn n2(&self, part: Part, x: &FiberField, y: &FiberField) -> Result<Jet> {
        let geo = self.geo;
        let a = geo.lie_tensor(part, &self.phi_of(x), &self.eta)?.eval_form(&[y]);
        let b = geo.lie_tensor(part, &self.phi_of(y), &self.eta)?.eval_form(&[x]);
        Ok(a - b)
    }

    /// `L_ξ φ` as a tensor; `𝒩⁽³⁾(X)` is its value on `X`.
    pub fn lie_xi_phi(&self, part: Part) -> Result<Tensor> {
        self.geo.lie_tensor(part, &self.xi, &self.phi)
    }

    pub fn n3(&self, part: Part, x: &FiberField) -> Result<FiberField> {
        Ok(self.lie_xi_phi(part)?.apply(x))
    }

    /// `𝒩⁽⁴⁾(X) = (L_ξ η)X`.
    pub fn n4(&self, part: Part, x: &FiberField) -> Result<Jet> {
        Ok(self.geo.lie_tensor(part, &self.xi, &self.eta)?.eval_form(&[x]))
    }

    /// `h = ½ L^H_ξ φ` (part H) or `v = ½ L^V_ξ φ` (part V).
    pub fn operator(&self, part: Part) -> Result<Tensor> {
        Ok(self.lie_xi_phi(part)?.scale_f(0.5))
    }

    /// `(L_ξ g)(X, Y)`.
    pub fn killing(&self, part: Part, x: &FiberField, y: &FiberField) -> Result<f64> {
        Ok(self
            .geo
            .lie_tensor(part, &self.xi, &self.geo.metric_tensor())?
            .eval_form(&[x, y])
            .value())
    }

    pub fn operator_algebra(&self, op: &Tensor) -> Result<OperatorAlgebra> {
        let m = self.m();
        let h = DMatrix::from_row_slice(m, m, &op.values());
        let p = self.phi_matrix();
        let g = DMatrix::from_fn(m, m, |i, j| self.geo.g[i][j].value());
        let gh = &g * &h;
        let symmetry = max_abs((&gh - gh.transpose()).iter().copied());
        let anticommute = max_abs((&h * &p + &p * &h).iter().copied());
        let trace = h.trace();
        // g-symmetric h has the spectrum of the symmetric Lᵀ h L⁻ᵀ, g = L Lᵀ
        let l = g.clone().cholesky().ok_or(Error::Singular(0.0))?.l();
        let linv_t = l.clone().try_inverse().ok_or(Error::Singular(0.0))?.transpose();
        let b = l.transpose() * &h * linv_t;
        let b = (&b + b.transpose()) * 0.5;
        let mut ev: Vec<f64> = b.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        let eigen_pairing = max_abs((0..m).map(|i| ev[i] + ev[m - 1 - i]));
        let on_xi = max_abs(op.apply(&self.xi).values());
        Ok(OperatorAlgebra {
            symmetry,
            anticommute,
            trace,
            eigen_pairing,
            eigenvalues: ev,
            on_xi,
        })
    }

    /// Both sides of the identity for `2g((∇_V φ)Y, Z)` on an almost
    /// contact metric structure.
    pub fn dcfi(&self, v: &TangentField, y: &FiberField, z: &FiberField) -> Result<(f64, f64)> {
        let geo = self.geo;
        let nphi = geo.nabla_tensor(v, &self.phi)?;
        let lhs = geo.inner(&nphi.apply(y), z).scale(2.0).value();

        let pv = geo.pi(v);
        let tv = geo.theta(v);
        let (py, pz) = (self.phi_of(y), self.phi_of(z));
        let big = self.two_form();
        let d_big = |a: &FiberField, b: &FiberField, c: &FiberField| -> Result<f64> {
            Ok(geo.exterior(Part::H, &big, &[a, b, c])?.value())
        };
        let d_eta = |a: &FiberField, b: &FiberField| -> Result<f64> { Ok(self.d_eta(Part::H, a, b)?.value()) };
        let eta = |a: &FiberField| self.eta_of(a).value();
        let rhs = 3.0 * d_big(&pv, &py, &pz)? - 3.0 * d_big(&pv, y, z)?
            + geo.inner(&self.n1(Part::H, y, z)?, &self.phi_of(&pv)).value()
            + self.n2(Part::H, y, z)?.value() * eta(&pv)
            + 2.0 * d_eta(&py, &pv)? * eta(z)
            - 2.0 * d_eta(&pz, &pv)? * eta(y)
            - 2.0 * geo.cartan_form(&tv, &py, z).value()
            - 2.0 * geo.cartan_form(&tv, y, &pz).value();
        Ok((lhs, rhs))
    }

    /// The contact metric form: `d^HΦ` and `𝒩⁽²⁾` terms dropped.
    pub fn dcfi_contact(&self, v: &TangentField, y: &FiberField, z: &FiberField) -> Result<(f64, f64)> {
        let geo = self.geo;
        let lhs = geo.inner(&geo.nabla_tensor(v, &self.phi)?.apply(y), z).scale(2.0).value();
        let pv = geo.pi(v);
        let tv = geo.theta(v);
        let (py, pz) = (self.phi_of(y), self.phi_of(z));
        let d_eta = |a: &FiberField, b: &FiberField| -> Result<f64> { Ok(self.d_eta(Part::H, a, b)?.value()) };
        let eta = |a: &FiberField| self.eta_of(a).value();
        let rhs = geo.inner(&self.n1(Part::H, y, z)?, &self.phi_of(&pv)).value()
            + 2.0 * d_eta(&py, &pv)? * eta(z)
            - 2.0 * d_eta(&pz, &pv)? * eta(y)
            - 2.0 * (geo.cartan_form(&tv, &py, z) + geo.cartan_form(&tv, y, &pz)).value();
        Ok((lhs, rhs))
    }

    /// `(∇_{ξ^V}φ)Y − φA♯(θξ^V, Y, •) + A♯(θξ^V, φY, •)`.
    pub fn nabla_xi_v_phi(&self, y: &FiberField) -> Result<Vec<f64>> {
        let geo = self.geo;
        let v = geo.vlift(&self.xi);
        let tv = geo.theta(&v);
        let lhs = geo.nabla_tensor(&v, &self.phi)?.apply(y);
        let rhs = self
            .phi_of(&geo.cartan_sharp(&tv, y))
            .sub(&geo.cartan_sharp(&tv, &self.phi_of(y)));
        Ok(lhs.sub(&rhs).values())
    }

    /// Vertical half:`2g((∇_{X^V}φ)Y, Z) = −2(A(θX^V, φY, Z) + A(θX^V, Y, φZ))`.
    pub fn dcfi_vertical(&self, x: &FiberField, y: &FiberField, z: &FiberField) -> Result<(f64, f64)> {
        let geo = self.geo;
        let v = geo.vlift(x);
        let lhs = geo.inner(&geo.nabla_tensor(&v, &self.phi)?.apply(y), z).scale(2.0).value();
        let tv = geo.theta(&v);
        let rhs = -2.0 * (geo.cartan_form(&tv, &self.phi_of(y), z) + geo.cartan_form(&tv, y, &self.phi_of(z))).value();
        Ok((lhs, rhs))
    }

    /// `(∇_V φ)Y − [g(π*V, Y)ξ − η(Y)π*V + φA♯(θV, Y, •) − A♯(θV, φY, •)]`.
    pub fn sasakian(&self, v: &TangentField, y: &FiberField) -> Result<Vec<f64>> {
        let geo = self.geo;
        let lhs = geo.nabla_tensor(v, &self.phi)?.apply(y);
        let pv = geo.pi(v);
        let tv = geo.theta(v);
        let rhs = self
            .xi
            .scale(&geo.inner(&pv, y))
            .sub(&pv.scale(&self.eta_of(y)))
            .add(&self.phi_of(&geo.cartan_sharp(&tv, y)))
            .sub(&geo.cartan_sharp(&tv, &self.phi_of(y)));
        Ok(lhs.sub(&rhs).values())
    }

    /// `∇_V ξ` and the right side `−φhπ*V − φπ*V + A♯(θV, ξ, •) − 2A(θV, ξ, ξ)ξ`.
    pub fn nabla_xi(&self, v: &TangentField) -> Result<(Vec<f64>, Vec<f64>)> {
        let geo = self.geo;
        let lhs = geo.nabla(v, &self.xi)?;
        let pv = geo.pi(v);
        let tv = geo.theta(v);
        let h = self.operator(Part::H)?;
        let rhs = self
            .phi_of(&h.apply(&pv))
            .neg()
            .sub(&self.phi_of(&pv))
            .add(&geo.cartan_sharp(&tv, &self.xi))
            .sub(&self.xi.scale(&geo.cartan_form(&tv, &self.xi, &self.xi).scale(2.0)));
        Ok((lhs.values(), rhs.values()))
    }
}

/// Factor `c` and orientation `s` in `sΦ = c d^Pη` chosen from measured
/// `(Φ, dη)` pairs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ContactConvention {
    pub factor: f64,
    pub phi_sign: f64,
    /// Residual under the literal reading `Φ = 2 dη`.
    pub literal_residual: f64,
    /// Residual under the chosen convention.
    pub residual: f64,
}

pub const LITERAL_FACTOR: f64 = 2.0;

/// Tries `c ∈ {2, 1}` and `s ∈ {+1, −1}` on pairs `(Φ, dη)`, keeping the
/// literal combination whenever it fits within `tol`.
pub fn resolve_contact_convention(pairs: &[(f64, f64)], tol: f64) -> ContactConvention {
    let res = |c: f64, s: f64| max_abs(pairs.iter().map(|(f, d)| s * f - c * d));
    let literal = res(LITERAL_FACTOR, 1.0);
    let choices = [(2.0, 1.0), (1.0, 1.0), (2.0, -1.0), (1.0, -1.0)];
    let (factor, phi_sign) = choices
        .iter()
        .copied()
        .find(|&(c, s)| res(c, s) <= tol)
        .unwrap_or((LITERAL_FACTOR, 1.0));
    ContactConvention {
        factor,
        phi_sign,
        literal_residual: literal,
        residual: res(factor, phi_sign),
    }
}
