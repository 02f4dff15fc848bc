//! Jet-valued geometry at one base point.
//!
//! [`Geometry`] holds the Taylor expansions of every metric-derived object
//! around a fixed point. Sections of `π*TM`, vector fields on `TM₀` and
//! Finslerian tensors are all represented by jets of their components, so
//! brackets and covariant derivatives are exact up to the truncation order
//! and the final answer is read off the zeroth coefficient.
//!
//! Order bookkeeping with jets of order `K` for `F²`: `g` has order `K−2`,
//! `A` and `G` have `K−3`, `N` and `Γ` have `K−4`, the hh-curvature `K−5`.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::jet::{coordinate_jets, Jet, JetError, JetSpace, DEFAULT_ORDER};
use crate::metric::{FinslerMetric, MetricKind};
use crate::point::BasePoint;

/// Which half of `TTM₀ = H ⊕ V` an operation acts along.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub enum Part {
    H,
    V,
}

/// Section of `π*TM`: components along `∂/∂xⁱ`.
#[derive(Clone, Debug)]
pub struct FiberField(pub Vec<Jet>);

/// Vector field on `TM₀`: `a` along `∂/∂x`, `b` along `∂/∂y`.
#[derive(Clone, Debug)]
pub struct TangentField {
    pub a: Vec<Jet>,
    pub b: Vec<Jet>,
}

/// Finslerian tensor of type `(cov, 0; contra)` with row-major components,
/// contravariant indices first.
#[derive(Clone, Debug)]
pub struct Tensor {
    pub contra: usize,
    pub cov: usize,
    pub m: usize,
    pub comps: Vec<Jet>,
}

impl FiberField {
    pub fn values(&self) -> Vec<f64> {
        self.0.iter().map(Jet::value).collect()
    }
    pub fn dim(&self) -> usize {
        self.0.len()
    }
    pub fn add(&self, o: &FiberField) -> FiberField {
        FiberField(self.0.iter().zip(&o.0).map(|(a, b)| a + b).collect())
    }
    pub fn sub(&self, o: &FiberField) -> FiberField {
        FiberField(self.0.iter().zip(&o.0).map(|(a, b)| a - b).collect())
    }
    pub fn scale(&self, s: &Jet) -> FiberField {
        FiberField(self.0.iter().map(|a| a * s).collect())
    }
    pub fn scale_f(&self, s: f64) -> FiberField {
        FiberField(self.0.iter().map(|a| a.scale(s)).collect())
    }
    pub fn neg(&self) -> FiberField {
        self.scale_f(-1.0)
    }
    pub fn truncate(&self, order: usize) -> FiberField {
        FiberField(self.0.iter().map(|a| a.truncate(order)).collect())
    }
    pub fn as_tensor(&self) -> Tensor {
        Tensor {
            contra: 1,
            cov: 0,
            m: self.0.len(),
            comps: self.0.clone(),
        }
    }
}

impl TangentField {
    pub fn add(&self, o: &TangentField) -> TangentField {
        TangentField {
            a: self.a.iter().zip(&o.a).map(|(x, y)| x + y).collect(),
            b: self.b.iter().zip(&o.b).map(|(x, y)| x + y).collect(),
        }
    }
    pub fn values(&self) -> (Vec<f64>, Vec<f64>) {
        (self.a.iter().map(Jet::value).collect(), self.b.iter().map(Jet::value).collect())
    }
    fn components(&self) -> impl Iterator<Item = &Jet> {
        self.a.iter().chain(&self.b)
    }
}

impl Tensor {
    pub fn rank(&self) -> usize {
        self.contra + self.cov
    }

    pub fn index(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.rank());
        idx.iter().fold(0, |acc, &i| acc * self.m + i)
    }

    pub fn get(&self, idx: &[usize]) -> &Jet {
        &self.comps[self.index(idx)]
    }

    fn unravel(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.rank()];
        for slot in (0..self.rank()).rev() {
            idx[slot] = flat % self.m;
            flat /= self.m;
        }
        idx
    }

    pub fn values(&self) -> Vec<f64> {
        self.comps.iter().map(Jet::value).collect()
    }

    pub fn order(&self) -> usize {
        self.comps.iter().map(Jet::order).min().unwrap_or(0)
    }

    pub fn zip_with(&self, o: &Tensor, f: impl Fn(&Jet, &Jet) -> Jet) -> Tensor {
        assert_eq!((self.contra, self.cov), (o.contra, o.cov));
        Tensor {
            contra: self.contra,
            cov: self.cov,
            m: self.m,
            comps: self.comps.iter().zip(&o.comps).map(|(a, b)| f(a, b)).collect(),
        }
    }

    pub fn scale_f(&self, s: f64) -> Tensor {
        Tensor {
            contra: self.contra,
            cov: self.cov,
            m: self.m,
            comps: self.comps.iter().map(|a| a.scale(s)).collect(),
        }
    }

    /// `(1,1)` tensor applied to a section: `(T X)ⁱ = Tⁱⱼ Xʲ`.
    pub fn apply(&self, x: &FiberField) -> FiberField {
        assert_eq!((self.contra, self.cov), (1, 1));
        let m = self.m;
        FiberField(
            (0..m)
                .map(|i| {
                    let mut acc = self.comps[i * m].clone() * &x.0[0];
                    for j in 1..m {
                        acc = acc + &self.comps[i * m + j] * &x.0[j];
                    }
                    acc
                })
                .collect(),
        )
    }

    /// Full contraction of a covariant tensor with sections.
    pub fn eval_form(&self, args: &[&FiberField]) -> Jet {
        assert_eq!(self.contra, 0);
        assert_eq!(args.len(), self.cov);
        let mut acc: Option<Jet> = None;
        for (flat, c) in self.comps.iter().enumerate() {
            let idx = self.unravel(flat);
            let mut term = c.clone();
            for (slot, &i) in idx.iter().enumerate() {
                term = term * &args[slot].0[i];
            }
            acc = Some(match acc {
                None => term,
                Some(a) => a + term,
            });
        }
        acc.expect("non-empty tensor")
    }

    /// `(1, p)` tensor with its covariant slots filled.
    pub fn eval_vector(&self, args: &[&FiberField]) -> FiberField {
        assert_eq!(self.contra, 1);
        assert_eq!(args.len(), self.cov);
        let m = self.m;
        let stride = m.pow(self.cov as u32);
        FiberField(
            (0..m)
                .map(|i| {
                    let sub = Tensor {
                        contra: 0,
                        cov: self.cov,
                        m,
                        comps: self.comps[i * stride..(i + 1) * stride].to_vec(),
                    };
                    sub.eval_form(args)
                })
                .collect(),
        )
    }

    /// Composition of `(1,1)` tensors, `(S∘T)ⁱₖ = Sⁱⱼ Tʲₖ`.
    pub fn compose(&self, t: &Tensor) -> Tensor {
        assert_eq!((self.contra, self.cov, t.contra, t.cov), (1, 1, 1, 1));
        let m = self.m;
        let mut comps = Vec::with_capacity(m * m);
        for i in 0..m {
            for k in 0..m {
                let mut acc = &self.comps[i * m] * &t.comps[k];
                for j in 1..m {
                    acc = acc + &self.comps[i * m + j] * &t.comps[j * m + k];
                }
                comps.push(acc);
            }
        }
        Tensor {
            contra: 1,
            cov: 1,
            m,
            comps,
        }
    }
}

/// Jets of the metric tower around one point of `TM₀`.
pub struct Geometry {
    pub metric: FinslerMetric,
    pub point: BasePoint,
    pub m: usize,
    pub space: Arc<JetSpace>,
    pub x: Vec<Jet>,
    pub y: Vec<Jet>,
    pub f: Jet,
    pub inv_f: Jet,
    pub f2: Jet,
    /// `g_ij`
    pub g: Vec<Vec<Jet>>,
    /// `gⁱʲ`
    pub ginv: Vec<Vec<Jet>>,
    /// `A_ijk` flattened as `(i·m + j)·m + k`
    pub cartan: Vec<Jet>,
    /// `Gⁱ`
    pub spray: Vec<Jet>,
    /// `n[i][j] = Nⁱⱼ`
    pub n: Vec<Vec<Jet>>,
    /// `Γⁱⱼₖ` flattened as `(i·m + j)·m + k`
    pub gamma: Vec<Jet>,
}

/// Gauss-Jordan elimination with partial pivoting on the zeroth coefficient.
pub fn invert_jets(a: &[Vec<Jet>]) -> Result<Vec<Vec<Jet>>> {
    let n = a.len();
    let mut a = a.to_vec();
    let mut inv: Vec<Vec<Jet>> = (0..n)
        .map(|i| (0..n).map(|j| a[0][0].constant_like(if i == j { 1.0 } else { 0.0 })).collect())
        .collect();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&r, &s| a[r][col].value().abs().total_cmp(&a[s][col].value().abs()))
            .unwrap();
        let pv = a[piv][col].value();
        if pv.abs() < 1e-300 || !pv.is_finite() {
            return Err(Error::Singular(pv));
        }
        a.swap(col, piv);
        inv.swap(col, piv);
        let r = a[col][col].recip()?;
        a[col] = a[col].iter().map(|v| v * &r).collect();
        inv[col] = inv[col].iter().map(|v| v * &r).collect();
        for row in 0..n {
            if row == col {
                continue;
            }
            let fct = a[row][col].clone();
            let (arow, acol) = (a[row].clone(), a[col].clone());
            a[row] = arow.iter().zip(&acol).map(|(u, v)| u - &(&fct * v)).collect();
            let (irow, icol) = (inv[row].clone(), inv[col].clone());
            inv[row] = irow.iter().zip(&icol).map(|(u, v)| u - &(&fct * v)).collect();
        }
    }
    Ok(inv)
}

fn sum(terms: impl IntoIterator<Item = Jet>) -> Jet {
    terms
        .into_iter()
        .reduce(|a, b| a + b)
        .expect("non-empty sum")
}

impl Geometry {
    /// Builds the tower at the default jet order.
    pub fn at(metric: &FinslerMetric, p: &BasePoint) -> Result<Geometry> {
        Geometry::new(metric, p, DEFAULT_ORDER)
    }

    /// `order` is the truncation order of `F²`; the Chern connection needs
    /// at least 4 and the hh-curvature 5.
    pub fn new(metric: &FinslerMetric, p: &BasePoint, order: usize) -> Result<Geometry> {
        p.check_slit()?;
        let m = metric.dim;
        if p.dim() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                found: p.dim(),
            });
        }
        if order < 4 {
            return Err(JetError::Order {
                requested: 4,
                available: order,
            }
            .into());
        }
        let space = JetSpace::get(2 * m, order)?;
        let (x, y) = coordinate_jets(&space, p);

        let (f, f2) = match metric.kind {
            MetricKind::Euclidean | MetricKind::Riemannian { .. } => {
                let f2 = metric.eval_f2(&x, &y)?;
                (f2.sqrt()?, f2)
            }
            _ => {
                let f = metric.eval_f(&x, &y)?;
                let f2 = &f * &f;
                (f, f2)
            }
        };
        if f.value() <= 0.0 {
            return Err(JetError::Domain {
                op: "1/F",
                value: f.value(),
            }
            .into());
        }
        let inv_f = f.recip()?;

        let dy = |j: &Jet, i: usize| j.deriv(m + i);
        let mut g = vec![Vec::with_capacity(m); m];
        for i in 0..m {
            let fi = dy(&f2, i)?;
            for j in 0..m {
                g[i].push(dy(&fi, j)?.scale(0.5));
            }
        }
        for i in 0..m {
            for j in 0..i {
                let s = (&g[i][j] + &g[j][i]).scale(0.5);
                g[i][j] = s.clone();
                g[j][i] = s;
            }
        }
        let ginv = invert_jets(&g)?;

        let half_f = f.scale(0.5);
        let mut cartan = Vec::with_capacity(m * m * m);
        for i in 0..m {
            for j in 0..m {
                for k in 0..m {
                    cartan.push(&half_f * &dy(&g[i][j], k)?);
                }
            }
        }

        // Gⁱ = ¼ gⁱˡ (2 ∂g_jl/∂xᵏ − ∂g_jk/∂xˡ) yʲ yᵏ
        let mut dgx = Vec::with_capacity(m); // dgx[l][j][k] = ∂g_jk/∂xˡ
        for l in 0..m {
            let mut mat = vec![Vec::with_capacity(m); m];
            for j in 0..m {
                for k in 0..m {
                    mat[j].push(g[j][k].deriv(l)?);
                }
            }
            dgx.push(mat);
        }
        let mut lower = Vec::with_capacity(m);
        for l in 0..m {
            let mut terms = Vec::new();
            for j in 0..m {
                for k in 0..m {
                    let c = dgx[k][j][l].scale(2.0) - &dgx[l][j][k];
                    terms.push(c * &y[j] * &y[k]);
                }
            }
            lower.push(sum(terms));
        }
        let spray: Vec<Jet> = (0..m)
            .map(|i| sum((0..m).map(|l| &ginv[i][l] * &lower[l])).scale(0.25))
            .collect();

        let mut n = vec![Vec::with_capacity(m); m];
        for i in 0..m {
            for j in 0..m {
                n[i].push(dy(&spray[i], j)?);
            }
        }

        let mut geo = Geometry {
            metric: metric.clone(),
            point: p.clone(),
            m,
            space,
            x,
            y,
            f,
            inv_f,
            f2,
            g,
            ginv,
            cartan,
            spray,
            n,
            gamma: Vec::new(),
        };

        // Γⁱⱼₖ = ½ gⁱˢ (δⱼ g_sk + δₖ g_sj − δ_s g_jk)
        let mut dg = Vec::with_capacity(m); // dg[l][a][b] = δ_l g_ab
        for l in 0..m {
            let mut mat = vec![Vec::with_capacity(m); m];
            for a in 0..m {
                for b in 0..m {
                    mat[a].push(geo.delta(l, &geo.g[a][b])?);
                }
            }
            dg.push(mat);
        }
        let mut gamma = Vec::with_capacity(m * m * m);
        for i in 0..m {
            for j in 0..m {
                for k in 0..m {
                    let t = sum((0..m).map(|s| {
                        let c = &dg[j][s][k] + &dg[k][s][j] - &dg[s][j][k];
                        &geo.ginv[i][s] * &c
                    }));
                    gamma.push(t.scale(0.5));
                }
            }
        }
        geo.gamma = gamma;
        Ok(geo)
    }

    pub fn order(&self) -> usize {
        self.space.order()
    }

    pub fn constant(&self, c: f64) -> Jet {
        Jet::constant(&self.space, c)
    }

    /// Section with constant components.
    pub fn const_field(&self, v: &[f64]) -> FiberField {
        FiberField(v.iter().map(|&c| self.constant(c)).collect())
    }

    pub fn basis_field(&self, k: usize) -> FiberField {
        let mut v = vec![0.0; self.m];
        v[k] = 1.0;
        self.const_field(&v)
    }

    pub fn gamma(&self, i: usize, j: usize, k: usize) -> &Jet {
        &self.gamma[(i * self.m + j) * self.m + k]
    }

    pub fn cartan(&self, i: usize, j: usize, k: usize) -> &Jet {
        &self.cartan[(i * self.m + j) * self.m + k]
    }

    /// `δ_j f = ∂f/∂xʲ − Nˡⱼ ∂f/∂yˡ`.
    pub fn delta(&self, j: usize, f: &Jet) -> Result<Jet> {
        let m = self.m;
        let mut acc = f.deriv(j)?;
        for l in 0..m {
            acc = acc - &self.n[l][j] * &f.deriv(m + l)?;
        }
        Ok(acc)
    }

    /// Directional derivative `V(f)`.
    pub fn dir(&self, v: &TangentField, f: &Jet) -> Result<Jet> {
        let mut acc: Option<Jet> = None;
        for (var, c) in v.components().enumerate() {
            let t = c * &f.deriv(var)?;
            acc = Some(match acc {
                None => t,
                Some(a) => a + t,
            });
        }
        Ok(acc.unwrap())
    }

    pub fn dir_field(&self, v: &TangentField, x: &FiberField) -> Result<FiberField> {
        Ok(FiberField(x.0.iter().map(|c| self.dir(v, c)).collect::<Result<_>>()?))
    }

    fn n_apply(&self, a: &[Jet]) -> Vec<Jet> {
        (0..self.m)
            .map(|i| sum((0..self.m).map(|j| &self.n[i][j] * &a[j])))
            .collect()
    }

    /// `X^H = Xⁱ δ/δxⁱ`: `a = X`, `b = −N X`.
    pub fn hlift(&self, x: &FiberField) -> TangentField {
        TangentField {
            a: x.0.clone(),
            b: self.n_apply(&x.0).into_iter().map(|v| -v).collect(),
        }
    }

    /// `X^V = F Xⁱ ∂/∂yⁱ`.
    pub fn vlift(&self, x: &FiberField) -> TangentField {
        TangentField {
            a: x.0.iter().map(Jet::zero_like).collect(),
            b: x.0.iter().map(|c| c * &self.f).collect(),
        }
    }

    pub fn lift(&self, part: Part, x: &FiberField) -> TangentField {
        match part {
            Part::H => self.hlift(x),
            Part::V => self.vlift(x),
        }
    }

    /// `θ(V) = (b + N a)/F`.
    pub fn theta(&self, v: &TangentField) -> FiberField {
        let na = self.n_apply(&v.a);
        FiberField(v.b.iter().zip(na).map(|(b, na)| (b + &na) * &self.inv_f).collect())
    }

    pub fn pi(&self, v: &TangentField) -> FiberField {
        FiberField(v.a.clone())
    }

    /// Projection used by each part: `π*` for H, `θ` for V.
    pub fn project(&self, part: Part, v: &TangentField) -> FiberField {
        match part {
            Part::H => self.pi(v),
            Part::V => self.theta(v),
        }
    }

    /// Coordinate Lie bracket on the `2m` variables.
    pub fn bracket(&self, v: &TangentField, w: &TangentField) -> Result<TangentField> {
        let comp = |cv: &Jet, cw: &Jet| -> Result<Jet> { Ok(self.dir(v, cw)? - self.dir(w, cv)?) };
        Ok(TangentField {
            a: v.a.iter().zip(&w.a).map(|(a, b)| comp(a, b)).collect::<Result<_>>()?,
            b: v.b.iter().zip(&w.b).map(|(a, b)| comp(a, b)).collect::<Result<_>>()?,
        })
    }

    /// `L^H_X Y = π*[X^H, Y^H]`, `L^V_X Y = θ[X^V, Y^V]`.
    pub fn lie_field(&self, part: Part, x: &FiberField, y: &FiberField) -> Result<FiberField> {
        let b = self.bracket(&self.lift(part, x), &self.lift(part, y))?;
        Ok(self.project(part, &b))
    }

    /// `Σ_j Γⁱⱼₖ aʲ` as the matrix `w[i][k]`.
    fn connection_form(&self, a: &[Jet]) -> Vec<Vec<Jet>> {
        let m = self.m;
        (0..m)
            .map(|i| (0..m).map(|k| sum((0..m).map(|j| self.gamma(i, j, k) * &a[j]))).collect())
            .collect()
    }

    /// `(∇_V Y)ⁱ = V(Yⁱ) + Γⁱⱼₖ aʲ Yᵏ`.
    pub fn nabla(&self, v: &TangentField, y: &FiberField) -> Result<FiberField> {
        let w = self.connection_form(&v.a);
        let m = self.m;
        Ok(FiberField(
            (0..m)
                .map(|i| Ok(self.dir(v, &y.0[i])? + sum((0..m).map(|k| &w[i][k] * &y.0[k]))))
                .collect::<Result<_>>()?,
        ))
    }

    /// Shared shape of covariant and Lie derivatives of a tensor:
    /// `D(T) + Σ_cov T·M − Σ_contra M·T`.
    fn tensor_derivative(&self, t: &Tensor, d: impl Fn(&Jet) -> Result<Jet>, mat: &[Vec<Jet>], sign_contra: f64) -> Result<Tensor> {
        let m = self.m;
        let mut comps = Vec::with_capacity(t.comps.len());
        for (flat, c) in t.comps.iter().enumerate() {
            let idx = t.unravel(flat);
            let mut acc = d(c)?;
            for slot in 0..t.rank() {
                let mut other = idx.clone();
                for s in 0..m {
                    other[slot] = s;
                    let ts = t.get(&other);
                    if slot < t.contra {
                        // contravariant: sign_contra · mat[i][s] T^{..s..}
                        acc = acc + (&mat[idx[slot]][s] * ts).scale(sign_contra);
                    } else {
                        acc = acc + ts * &mat[s][idx[slot]];
                    }
                }
            }
            comps.push(acc);
        }
        Ok(Tensor {
            contra: t.contra,
            cov: t.cov,
            m,
            comps,
        })
    }

    /// Chern covariant derivative of a `(p,0;r)` tensor field along `V`.
    pub fn nabla_tensor(&self, v: &TangentField, t: &Tensor) -> Result<Tensor> {
        if t.order() == 0 {
            return Err(Error::PointwiseTensor);
        }
        // covariant slots get −Γ, contravariant +Γ
        let w = self.connection_form(&v.a);
        let neg: Vec<Vec<Jet>> = w.iter().map(|r| r.iter().map(|c| c.scale(-1.0)).collect()).collect();
        self.tensor_derivative(t, |c| self.dir(v, c), &neg, -1.0)
    }

    /// Matrix `M` with `L_X Y = D(Y) − M Y` for the lifted derivation `D`.
    fn lie_matrix(&self, part: Part, x: &FiberField) -> Result<Vec<Vec<Jet>>> {
        let m = self.m;
        let mut mat = vec![Vec::with_capacity(m); m];
        let cols: Vec<FiberField> = (0..m)
            .map(|k| self.lie_field(part, x, &self.basis_field(k)))
            .collect::<Result<_>>()?;
        for (i, row) in mat.iter_mut().enumerate() {
            for col in &cols {
                row.push(col.0[i].scale(-1.0));
            }
        }
        Ok(mat)
    }

    /// Horizontal or vertical Lie derivative of a `(p,0;r)` tensor field.
    pub fn lie_tensor(&self, part: Part, x: &FiberField, t: &Tensor) -> Result<Tensor> {
        if t.order() == 0 {
            return Err(Error::PointwiseTensor);
        }
        let lift = self.lift(part, x);
        let mat = self.lie_matrix(part, x)?;
        self.tensor_derivative(t, |c| self.dir(&lift, c), &mat, -1.0)
    }

    /// `d^H` or `d^V` of a `(p,0;0)` form evaluated on `p+1` sections, with
    /// the `1/(p+1)` prefactor.
    pub fn exterior(&self, part: Part, t: &Tensor, args: &[&FiberField]) -> Result<Jet> {
        assert_eq!(t.contra, 0);
        let p = t.cov;
        assert_eq!(args.len(), p + 1);
        let lifts: Vec<TangentField> = args.iter().map(|a| self.lift(part, a)).collect();
        let mut acc = self.constant(0.0);
        for i in 0..=p {
            let rest: Vec<&FiberField> = (0..=p).filter(|&k| k != i).map(|k| args[k]).collect();
            let val = t.eval_form(&rest);
            let d = self.dir(&lifts[i], &val)?;
            acc = if i % 2 == 0 { acc + d } else { acc - d };
        }
        for i in 0..=p {
            for j in i + 1..=p {
                let br = self.project(part, &self.bracket(&lifts[i], &lifts[j])?);
                let mut rest: Vec<&FiberField> = vec![&br];
                rest.extend((0..=p).filter(|&k| k != i && k != j).map(|k| args[k]));
                let val = t.eval_form(&rest);
                acc = if (i + j) % 2 == 0 { acc + val } else { acc - val };
            }
        }
        Ok(acc.scale(1.0 / (p + 1) as f64))
    }

    /// `g(X, Y)`.
    pub fn inner(&self, x: &FiberField, y: &FiberField) -> Jet {
        let m = self.m;
        sum((0..m).flat_map(|i| (0..m).map(move |j| (i, j))).map(|(i, j)| &self.g[i][j] * &x.0[i] * &y.0[j]))
    }

    pub fn metric_tensor(&self) -> Tensor {
        Tensor {
            contra: 0,
            cov: 2,
            m: self.m,
            comps: self.g.iter().flatten().cloned().collect(),
        }
    }

    pub fn cartan_tensor(&self) -> Tensor {
        Tensor {
            contra: 0,
            cov: 3,
            m: self.m,
            comps: self.cartan.clone(),
        }
    }

    /// `A(X, Y, Z)`.
    pub fn cartan_form(&self, x: &FiberField, y: &FiberField, z: &FiberField) -> Jet {
        self.cartan_tensor().eval_form(&[x, y, z])
    }

    /// `A♯(X, Y, •)`: the section with `g(A♯, Z) = A(X, Y, Z)`.
    pub fn cartan_sharp(&self, x: &FiberField, y: &FiberField) -> FiberField {
        let m = self.m;
        let lowered: Vec<Jet> = (0..m)
            .map(|l| {
                sum((0..m)
                    .flat_map(|i| (0..m).map(move |j| (i, j)))
                    .map(|(i, j)| self.cartan(i, j, l) * &x.0[i] * &y.0[j]))
            })
            .collect();
        self.raise(&lowered)
    }

    /// `gⁱʲ w_j`.
    pub fn raise(&self, w: &[Jet]) -> FiberField {
        let m = self.m;
        FiberField((0..m).map(|i| sum((0..m).map(|j| &self.ginv[i][j] * &w[j]))).collect())
    }

    /// `g_ij Xʲ`.
    pub fn lower(&self, x: &FiberField) -> Vec<Jet> {
        let m = self.m;
        (0..m).map(|i| sum((0..m).map(|j| &self.g[i][j] * &x.0[j]))).collect()
    }

    /// hh-curvature `Rⱼⁱₖₗ = δₖΓⁱⱼₗ − δₗΓⁱⱼₖ + ΓⁱₖₛΓˢⱼₗ − ΓⁱₗₛΓˢⱼₖ`,
    /// flattened as `((i·m + j)·m + k)·m + l`.
    pub fn curvature_tensor(&self) -> Result<Vec<Jet>> {
        let m = self.m;
        let mut dgam = Vec::with_capacity(m); // dgam[k][(i,j,l)] = δ_k Γⁱⱼₗ
        for k in 0..m {
            dgam.push(self.gamma.iter().map(|c| self.delta(k, c)).collect::<Result<Vec<_>>>()?);
        }
        let idx3 = |i: usize, j: usize, k: usize| (i * m + j) * m + k;
        let mut r = Vec::with_capacity(m.pow(4));
        for i in 0..m {
            for j in 0..m {
                for k in 0..m {
                    for l in 0..m {
                        let mut acc = &dgam[k][idx3(i, j, l)] - &dgam[l][idx3(i, j, k)];
                        for s in 0..m {
                            acc = acc + self.gamma(i, k, s) * self.gamma(s, j, l)
                                - self.gamma(i, l, s) * self.gamma(s, j, k);
                        }
                        r.push(acc);
                    }
                }
            }
        }
        Ok(r)
    }

    /// `R(X^H, Y^H)Z` by the abstract definition
    /// `∇_X∇_Y Z − ∇_Y∇_X Z − ∇_[X,Y] Z`, for arbitrary fields on `TM₀`.
    pub fn curvature_abstract(&self, x: &TangentField, y: &TangentField, z: &FiberField) -> Result<FiberField> {
        let xy = self.nabla(x, &self.nabla(y, z)?)?;
        let yx = self.nabla(y, &self.nabla(x, z)?)?;
        let br = self.bracket(x, y)?;
        let c = self.nabla(&br, z)?;
        Ok(xy.sub(&yx).sub(&c))
    }
}

/// Contracts `Rⱼⁱₖₗ Xᵏ Yˡ Zʲ` at the point.
pub fn curvature_apply(r: &[f64], m: usize, x: &[f64], y: &[f64], z: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; m];
    for (i, o) in out.iter_mut().enumerate() {
        for j in 0..m {
            for k in 0..m {
                for l in 0..m {
                    *o += r[((i * m + j) * m + k) * m + l] * x[k] * y[l] * z[j];
                }
            }
        }
    }
    out
}
