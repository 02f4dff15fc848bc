//! hh-curvature of the Chern connection and the curvature identities of
//! contact metric structures: horizontal Ricci traces, the `∇_{ξ^H}h`
//! displays, the Reeb Ricci identity and flag curvature with edge `ξ`.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::check::max_abs;
use crate::contact::{ContactGeometry, RANK_CUTOFF};
use crate::error::{Error, Result};
use crate::geometry::{curvature_apply, FiberField, Geometry, Part};
use crate::point::DoubleTangentVector;

/// Rⱼⁱₖₗ values at the point, flattened as `((i·m + j)·m + k)·m + l`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CurvatureSample {
    pub m: usize,
    pub r: Vec<f64>,
}

impl CurvatureSample {
    pub fn at(geo: &Geometry) -> Result<CurvatureSample> {
        Ok(CurvatureSample {
            m: geo.m,
            r: geo.curvature_tensor()?.iter().map(|j| j.value()).collect(),
        })
    }

    /// `R(X, Y)Z`.
    pub fn apply(&self, x: &[f64], y: &[f64], z: &[f64]) -> Vec<f64> {
        curvature_apply(&self.r, self.m, x, y, z)
    }

    /// `max |Rⱼⁱₖₗ + Rⱼⁱₗₖ|`.
    pub fn antisymmetry(&self) -> f64 {
        let m = self.m;
        max_abs((0..m.pow(4)).map(|f| {
            let (kl, ij) = (f % (m * m), f / (m * m));
            let (k, l) = (kl / m, kl % m);
            self.r[f] + self.r[ij * m * m + l * m + k]
        }))
    }
}

/// `R(X^H, Y^H)Z` by the coordinate formula and by the abstract definition.
pub fn hh_curvature(geo: &Geometry, x: &FiberField, y: &FiberField, z: &FiberField) -> Result<(Vec<f64>, Vec<f64>)> {
    let cs = CurvatureSample::at(geo)?;
    let coord = cs.apply(&x.values(), &y.values(), &z.values());
    let abs = geo.curvature_abstract(&geo.hlift(x), &geo.hlift(y), z)?.values();
    Ok((coord, abs))
}

fn g_values(geo: &Geometry) -> DMatrix<f64> {
    DMatrix::from_fn(geo.m, geo.m, |i, j| geo.g[i][j].value())
}

fn inner(g: &DMatrix<f64>, a: &[f64], b: &[f64]) -> f64 {
    let m = a.len();
    (0..m).flat_map(|i| (0..m).map(move |j| (i, j))).map(|(i, j)| g[(i, j)] * a[i] * b[j]).sum()
}

/// `g(p)`-orthonormal basis by Gram-Schmidt from the coordinate basis.
pub fn gram_schmidt_basis(geo: &Geometry) -> Result<Vec<Vec<f64>>> {
    let g = g_values(geo);
    let m = geo.m;
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(m);
    for k in 0..m {
        let mut v: Vec<f64> = (0..m).map(|i| if i == k { 1.0 } else { 0.0 }).collect();
        for e in &out {
            let c = inner(&g, &v, e);
            v.iter_mut().zip(e).for_each(|(a, b)| *a -= c * b);
        }
        let n = inner(&g, &v, &v);
        if n <= 1e-24 {
            return Err(Error::DegenerateBasis(n));
        }
        out.push(v.iter().map(|a| a / n.sqrt()).collect());
    }
    Ok(out)
}

/// `Σₐ g(R(X, eₐ)Z, eₐ)` over a given basis, orthonormal or not (the
/// trace uses the dual basis through the Gram matrix).
pub fn ricci_in_basis(geo: &Geometry, cs: &CurvatureSample, z: &[f64], x: &[f64], basis: &[Vec<f64>]) -> Result<f64> {
    let g = g_values(geo);
    let n = basis.len();
    let gram = DMatrix::from_fn(n, n, |a, b| inner(&g, &basis[a], &basis[b]));
    let ginv = gram.try_inverse().ok_or(Error::DegenerateBasis(0.0))?;
    let mut acc = 0.0;
    for a in 0..n {
        let r = cs.apply(x, &basis[a], z);
        for b in 0..n {
            acc += ginv[(a, b)] * inner(&g, &r, &basis[b]);
        }
    }
    Ok(acc)
}

/// `Ric^H(Z, V)`; only the horizontal part `π*V` of `V` enters the
/// hh-curvature.
pub fn ricci_h(geo: &Geometry, cs: &CurvatureSample, z: &[f64], v: &DoubleTangentVector) -> Result<f64> {
    ricci_in_basis(geo, cs, z, &v.a, &gram_schmidt_basis(geo)?)
}

/// `{∂ᵢ}, {∂ᵢ* = φ∂ᵢ}` and `ξ`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PhiBasis {
    pub d: Vec<Vec<f64>>,
    pub d_star: Vec<Vec<f64>>,
    pub xi: Vec<f64>,
}

impl PhiBasis {
    pub fn all(&self) -> Vec<Vec<f64>> {
        self.d.iter().chain(&self.d_star).cloned().chain(std::iter::once(self.xi.clone())).collect()
    }
}

pub fn phi_basis(cg: &ContactGeometry) -> Result<PhiBasis> {
    let geo = cg.geo;
    let m = geo.m;
    let g = g_values(geo);
    let phi = cg.phi_matrix();
    let eta = cg.eta.values();
    let xi = cg.xi.values();
    let apply = |v: &[f64]| -> Vec<f64> { (0..m).map(|i| (0..m).map(|j| phi[(i, j)] * v[j]).sum()).collect() };
    let mut d: Vec<Vec<f64>> = Vec::new();
    let mut d_star: Vec<Vec<f64>> = Vec::new();
    for k in 0..m {
        if d.len() == (m - 1) / 2 {
            break;
        }
        let mut v: Vec<f64> = (0..m).map(|i| if i == k { 1.0 } else { 0.0 }).collect();
        let ev: f64 = eta.iter().zip(&v).map(|(a, b)| a * b).sum();
        v.iter_mut().zip(&xi).for_each(|(a, b)| *a -= ev * b);
        for e in d.iter().chain(&d_star) {
            let c = inner(&g, &v, e) / inner(&g, e, e);
            v.iter_mut().zip(e).for_each(|(a, b)| *a -= c * b);
        }
        let n = inner(&g, &v, &v);
        if n <= 1e-16 {
            continue;
        }
        let v: Vec<f64> = v.iter().map(|a| a / n.sqrt()).collect();
        d_star.push(apply(&v));
        d.push(v);
    }
    let basis = PhiBasis { d, d_star, xi };
    let all = basis.all();
    if all.len() != m {
        return Err(Error::DegenerateBasis(0.0));
    }
    let mat = DMatrix::from_fn(m, m, |i, a| all[a][i]);
    let smin = mat.svd(false, false).singular_values.min();
    if smin <= RANK_CUTOFF {
        return Err(Error::DegenerateBasis(smin));
    }
    Ok(basis)
}

/// `θ[ξ^H, X^H]` at the point for a section `X`.
fn theta_bracket_xi(cg: &ContactGeometry, x: &FiberField) -> Result<FiberField> {
    let geo = cg.geo;
    Ok(geo.theta(&geo.bracket(&geo.hlift(&cg.xi), &geo.hlift(x))?))
}

/// `A♯(θ[ξ^H, X^H], ξ, •)`.
fn cartan_bracket_term(cg: &ContactGeometry, x: &FiberField) -> Result<Vec<f64>> {
    Ok(cg.geo.cartan_sharp(&theta_bracket_xi(cg, x)?, &cg.xi).values())
}

fn mat_vec(a: &DMatrix<f64>, v: &[f64]) -> Vec<f64> {
    (a * nalgebra::DVector::from_column_slice(v)).iter().copied().collect()
}

fn diff(a: &[f64], b: &[f64]) -> f64 {
    max_abs(a.iter().zip(b).map(|(p, q)| p - q))
}

/// Both `∇_{ξ^H}h` displays for a section `X`, as `‖LHS − RHS‖∞`.
pub fn proric_residuals(cg: &ContactGeometry, cs: &CurvatureSample, x: &FiberField) -> Result<(f64, f64)> {
    let geo = cg.geo;
    let m = geo.m;
    let xih = geo.hlift(&cg.xi);
    let h = cg.operator(Part::H)?;
    let hm = DMatrix::from_row_slice(m, m, &h.values());
    let phi = cg.phi_matrix();
    let (xv, xiv) = (x.values(), cg.xi.values());
    let px = mat_vec(&phi, &xv);
    let h2 = &hm * &hm;
    let phi2 = &phi * &phi;

    let lhs1 = geo.nabla_tensor(&xih, &h)?.apply(x).values();
    let r_x = cs.apply(&xiv, &xv, &xiv);
    let cart_x = cartan_bracket_term(cg, x)?;
    let rhs1: Vec<f64> = (0..m)
        .map(|i| px[i] - mat_vec(&h2, &px)[i] + mat_vec(&phi, &r_x)[i] + mat_vec(&phi, &cart_x)[i])
        .collect();

    let r_px = cs.apply(&xiv, &px, &xiv);
    let phr = mat_vec(&phi, &r_px);
    let lhs2: Vec<f64> = (0..m).map(|i| 0.5 * (r_x[i] - phr[i])).collect();
    let cart_px = cartan_bracket_term(cg, &cg.phi_of(x))?;
    let (a, b, c, d) = (mat_vec(&h2, &xv), mat_vec(&phi2, &cart_x), mat_vec(&phi2, &xv), mat_vec(&phi, &cart_px));
    let rhs2: Vec<f64> = (0..m).map(|i| a[i] + 0.5 * b[i] + c[i] + 0.5 * d[i]).collect();
    Ok((diff(&lhs1, &rhs1), diff(&lhs2, &rhs2)))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FlagCurvature {
    /// `g(R(l^H, ξ^H)ξ, l)` for the projected unit `l`
    pub k: f64,
    /// `g(φ∇_{ξ^H}h l − φ²l − h²l − φ²A♯(θ[ξ^H, l^H], ξ, •), l)`
    pub display: f64,
    /// `g(φ²A♯(θ[ξ^H, l^H], ξ, •), l)`, kept apart from `k`
    pub cartan_term: f64,
    pub l: Vec<f64>,
}

pub fn flag_curvature(cg: &ContactGeometry, cs: &CurvatureSample, l: &[f64]) -> Result<FlagCurvature> {
    let geo = cg.geo;
    let m = geo.m;
    let norm = l.iter().map(|v| v * v).sum::<f64>().sqrt();
    let eta = cg.eta.values();
    let xiv = cg.xi.values();
    let el: f64 = eta.iter().zip(l).map(|(a, b)| a * b).sum();
    let proj: Vec<f64> = l.iter().zip(&xiv).map(|(a, b)| a - el * b).collect();
    let pn = proj.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm <= 1e-8 || pn <= 1e-8 * norm.max(1.0) {
        return Err(Error::DegenerateEdge(pn));
    }
    let g = g_values(geo);
    let gl = inner(&g, &proj, &proj).sqrt();
    let lu: Vec<f64> = proj.iter().map(|v| v / gl).collect();
    let k = inner(&g, &cs.apply(&lu, &xiv, &xiv), &lu);

    let lf = geo.const_field(&lu);
    let h = cg.operator(Part::H)?;
    let hm = DMatrix::from_row_slice(m, m, &h.values());
    let phi = cg.phi_matrix();
    let phi2 = &phi * &phi;
    let cart = mat_vec(&phi2, &cartan_bracket_term(cg, &lf)?);
    let nh = geo.nabla_tensor(&geo.hlift(&cg.xi), &h)?.apply(&lf).values();
    let a = mat_vec(&phi, &nh);
    let b = mat_vec(&phi2, &lu);
    let c = mat_vec(&(&hm * &hm), &lu);
    let w: Vec<f64> = (0..m).map(|i| a[i] - b[i] - c[i] - cart[i]).collect();
    Ok(FlagCurvature {
        k,
        display: inner(&g, &w, &lu),
        cartan_term: inner(&g, &cart, &lu),
        l: lu,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReebRicci {
    /// `Ric^H(ξ, ξ^H)` over a Gram-Schmidt basis
    pub lhs: f64,
    /// the same trace over the φ-basis
    pub lhs_phi_basis: f64,
    /// `Σᵢ {A(θ[ξ^H, δᵢ], ξ, ∂ᵢ) − A(θ[ξ^H, δᵢ*], ξ, φ∂ᵢ)}`
    pub cartan_sum: f64,
    pub trace_h2: f64,
    /// `−2n + cartan_sum`
    pub theorem_rhs: f64,
    /// `−2n + 2 tr h² + ½ cartan_sum`
    pub prop_rhs: f64,
}

pub fn reeb_ricci(cg: &ContactGeometry, cs: &CurvatureSample) -> Result<ReebRicci> {
    let geo = cg.geo;
    let m = geo.m;
    let n = ((m - 1) / 2) as f64;
    let xiv = cg.xi.values();
    let lhs = ricci_in_basis(geo, cs, &xiv, &xiv, &gram_schmidt_basis(geo)?)?;
    let pb = phi_basis(cg)?;
    let lhs_phi_basis = ricci_in_basis(geo, cs, &xiv, &xiv, &pb.all())?;
    let mut cartan_sum = 0.0;
    for (d, ds) in pb.d.iter().zip(&pb.d_star) {
        let (df, dsf) = (geo.const_field(d), geo.const_field(ds));
        let a = geo.cartan_form(&theta_bracket_xi(cg, &df)?, &cg.xi, &df).value();
        let b = geo.cartan_form(&theta_bracket_xi(cg, &dsf)?, &cg.xi, &cg.phi_of(&df)).value();
        cartan_sum += a - b;
    }
    let h = DMatrix::from_row_slice(m, m, &cg.operator(Part::H)?.values());
    let trace_h2 = (&h * &h).trace();
    Ok(ReebRicci {
        lhs,
        lhs_phi_basis,
        cartan_sum,
        trace_h2,
        theorem_rhs: -2.0 * n + cartan_sum,
        prop_rhs: -2.0 * n + 2.0 * trace_h2 + 0.5 * cartan_sum,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contact::ContactTriple;
    use crate::fields::AffineField;
    use crate::metric::FinslerMetric;
    use crate::oracle::{riemann, ricci, ORACLE_STEP};
    use crate::point::BasePoint;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn geo(f: &FinslerMetric, x: [f64; 3], y: [f64; 3]) -> Geometry {
        Geometry::at(f, &BasePoint::new(x.to_vec(), y.to_vec()).unwrap()).unwrap()
    }

    #[test]
    fn flat_and_minkowski_are_flat() {
        for f in [FinslerMetric::euclidean(3).unwrap(), FinslerMetric::randers3()] {
            let g = geo(&f, [0.3, 0.1, -0.2], [0.9, 0.4, -0.3]);
            assert!(max_abs(CurvatureSample::at(&g).unwrap().r) < 1e-12);
        }
    }

    #[test]
    fn heisenberg_matches_riemann_oracle() {
        let f = FinslerMetric::heisenberg3();
        let g = geo(&f, [0.3, -0.6, 0.2], [0.9, 0.4, -0.3]);
        let cs = CurvatureSample::at(&g).unwrap();
        let want = riemann(&f, &g.point.x, ORACLE_STEP).unwrap();
        assert!(diff(&cs.r, &want) < 1e-5);
        assert!(cs.antisymmetry() < 1e-12);
        // Ric^H is minus the usual Ricci contraction
        let ric = ricci(&want, 3);
        let z = [0.3, -0.2, 0.5];
        let v = DoubleTangentVector {
            a: vec![1.0, 0.4, -0.7],
            b: vec![0.0; 3],
        };
        let usual: f64 = (0..3).flat_map(|j| (0..3).map(move |k| (j, k))).map(|(j, k)| ric[(j, k)] * z[j] * v.a[k]).sum();
        assert!((ricci_h(&g, &cs, &z, &v).unwrap() + usual).abs() < 1e-5);
    }

    #[test]
    fn coordinate_and_abstract_agree() {
        for f in [FinslerMetric::heisenberg3(), FinslerMetric::randers3()] {
            let g = geo(&f, [0.3, -0.6, 0.2], [0.9, 0.4, -0.3]);
            let mut r = ChaCha8Rng::seed_from_u64(7);
            let (x, y, z) = (
                AffineField::random(&mut r, 3).jets(&g),
                AffineField::random(&mut r, 3).jets(&g),
                AffineField::random(&mut r, 3).jets(&g),
            );
            let (c, a) = hh_curvature(&g, &x, &y, &z).unwrap();
            assert!(diff(&c, &a) < 1e-5, "{c:?} {a:?}");
            let (_, b) = hh_curvature(&g, &y, &x, &z).unwrap();
            assert!(max_abs(a.iter().zip(&b).map(|(p, q)| p + q)) < 1e-9);
        }
    }

    #[test]
    fn heisenberg_contact_curvature() {
        let g = geo(&FinslerMetric::heisenberg3(), [0.5, 0.8, -0.4], [-0.3, 1.1, 0.6]);
        let cg = ContactGeometry::new(&g, &ContactTriple::heisenberg3()).unwrap();
        let cs = CurvatureSample::at(&g).unwrap();
        let pb = phi_basis(&cg).unwrap();
        let gm = g_values(&g);
        assert!(inner(&gm, &pb.d[0], &pb.d_star[0]).abs() < 1e-9);
        let eta = cg.eta.values();
        assert!(eta.iter().zip(&pb.d[0]).map(|(a, b)| a * b).sum::<f64>().abs() < 1e-10);

        let mut r = ChaCha8Rng::seed_from_u64(8);
        let x = AffineField::random(&mut r, 3).jets(&g);
        let (a, b) = proric_residuals(&cg, &cs, &x).unwrap();
        assert!(a < 1e-4 && b < 1e-4, "{a} {b}");
        let (a, b) = proric_residuals(&cg, &cs, &cg.xi).unwrap();
        assert!(a < 1e-6 && b < 1e-6);

        let rr = reeb_ricci(&cg, &cs).unwrap();
        assert!((rr.lhs + 2.0).abs() < 1e-4, "{rr:?}");
        assert!((rr.lhs - rr.lhs_phi_basis).abs() < 1e-6);
        assert!((rr.theorem_rhs - rr.lhs).abs() < 1e-4 && (rr.prop_rhs - rr.theorem_rhs).abs() < 1e-6);

        let fl = flag_curvature(&cg, &cs, &[0.4, -0.3, 0.8]).unwrap();
        assert!((fl.k - 1.0).abs() < 1e-4 && (fl.display - 1.0).abs() < 1e-4, "{fl:?}");
        let neg = flag_curvature(&cg, &cs, &[-0.4, 0.3, -0.8]).unwrap();
        assert!((fl.k - neg.k).abs() < 1e-12);
        assert!(matches!(flag_curvature(&cg, &cs, &cg.xi.values()), Err(Error::DegenerateEdge(_))));
    }

    #[test]
    fn flat_triple_has_zero_flag_curvature() {
        let g = geo(&FinslerMetric::euclidean(3).unwrap(), [0.5, 0.8, -0.4], [-0.3, 1.1, 0.6]);
        let cg = ContactGeometry::new(&g, &ContactTriple::flat(3).unwrap()).unwrap();
        let cs = CurvatureSample::at(&g).unwrap();
        assert_eq!(flag_curvature(&cg, &cs, &[1.0, 0.0, 0.0]).unwrap().k, 0.0);
        let x = g.const_field(&[0.3, 0.2, 0.1]);
        // every curvature term vanishes, so the residuals are |φX| and |φ²X|
        // (the flat triple is not contact, so the displays need not hold)
        let (a, b) = proric_residuals(&cg, &cs, &x).unwrap();
        assert!((a - 0.3).abs() < 1e-12 && (b - 0.3).abs() < 1e-12, "{a} {b}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn flag_curvature_is_one_on_heisenberg(
            x in prop::array::uniform3(-1.0f64..1.0),
            y in prop::array::uniform3(-1.5f64..1.5),
            l in prop::array::uniform3(-1.0f64..1.0),
        ) {
            prop_assume!(y.iter().map(|v| v * v).sum::<f64>() > 0.2);
            prop_assume!(l[0] * l[0] + l[1] * l[1] > 0.05);
            let g = geo(&FinslerMetric::heisenberg3(), x, y);
            let cg = ContactGeometry::new(&g, &ContactTriple::heisenberg3()).unwrap();
            let cs = CurvatureSample::at(&g).unwrap();
            let fl = flag_curvature(&cg, &cs, &l).unwrap();
            prop_assert!((fl.k - 1.0).abs() < 1e-4);
            prop_assert!(cs.antisymmetry() < 1e-9);
        }
    }
}
