//! Spray, nonlinear connection, lifts and the projections `π*` and `θ`,
//! as pointwise values. The jet-level versions live on [`Geometry`].

use nalgebra::DMatrix;

use crate::check::{max_abs, CheckEntry};
use crate::error::Result;
use crate::geometry::{Geometry, TangentField};
use crate::metric::FinslerMetric;
use crate::point::{BasePoint, DoubleTangentVector, FiberVector};

/// Four orders suffice for everything up to `N`.
const ORDER: usize = 4;

fn geometry(f: &FinslerMetric, p: &BasePoint) -> Result<Geometry> {
    Geometry::new(f, p, ORDER)
}

pub fn spray_coefficients(f: &FinslerMetric, p: &BasePoint) -> Result<Vec<f64>> {
    Ok(geometry(f, p)?.spray.iter().map(|j| j.value()).collect())
}

/// `Nⁱⱼ = ∂Gⁱ/∂yʲ` as a matrix indexed `(i, j)`.
pub fn nonlinear_connection(f: &FinslerMetric, p: &BasePoint) -> Result<DMatrix<f64>> {
    let geo = geometry(f, p)?;
    Ok(n_matrix(&geo))
}

pub fn n_matrix(geo: &Geometry) -> DMatrix<f64> {
    DMatrix::from_fn(geo.m, geo.m, |i, j| geo.n[i][j].value())
}

/// `θ(V)ⁱ = (bⁱ + Nⁱⱼ aʲ)/F`.
pub fn theta_apply(f: &FinslerMetric, p: &BasePoint, v: &DoubleTangentVector) -> Result<FiberVector> {
    let n = nonlinear_connection(f, p)?;
    let fv = f.f_value(p)?;
    Ok(theta_with(&n, fv, v))
}

fn theta_with(n: &DMatrix<f64>, fv: f64, v: &DoubleTangentVector) -> FiberVector {
    let m = v.a.len();
    (0..m)
        .map(|i| (v.b[i] + (0..m).map(|j| n[(i, j)] * v.a[j]).sum::<f64>()) / fv)
        .collect()
}

fn hlift_with(n: &DMatrix<f64>, x: &[f64]) -> DoubleTangentVector {
    let m = x.len();
    DoubleTangentVector {
        a: x.to_vec(),
        b: (0..m).map(|i| -(0..m).map(|j| n[(i, j)] * x[j]).sum::<f64>()).collect(),
    }
}

pub fn horizontal_lift(f: &FinslerMetric, x: &[f64], p: &BasePoint) -> Result<DoubleTangentVector> {
    Ok(hlift_with(&nonlinear_connection(f, p)?, x))
}

pub fn vertical_lift(f: &FinslerMetric, x: &[f64], p: &BasePoint) -> Result<DoubleTangentVector> {
    let fv = f.f_value(p)?;
    Ok(DoubleTangentVector {
        a: vec![0.0; x.len()],
        b: x.iter().map(|c| fv * c).collect(),
    })
}

pub fn project_pi(v: &DoubleTangentVector) -> FiberVector {
    v.a.clone()
}

/// Coordinate bracket of two jet fields, read off at the point.
pub fn bracket(geo: &Geometry, xf: &TangentField, yf: &TangentField) -> Result<DoubleTangentVector> {
    let (a, b) = geo.bracket(xf, yf)?.values();
    Ok(DoubleTangentVector { a, b })
}

/// The four projection identities at one point and one sample vector.
pub fn check_pi_theta(f: &FinslerMetric, p: &BasePoint, x: &[f64], tol: f64) -> Result<CheckEntry> {
    let n = nonlinear_connection(f, p)?;
    let fv = f.f_value(p)?;
    let h = hlift_with(&n, x);
    let v = DoubleTangentVector {
        a: vec![0.0; x.len()],
        b: x.iter().map(|c| fv * c).collect(),
    };
    let th = theta_with(&n, fv, &h);
    let tv = theta_with(&n, fv, &v);
    let res = max_abs(
        project_pi(&h)
            .iter()
            .zip(x)
            .map(|(a, b)| a - b)
            .chain(project_pi(&v))
            .chain(th)
            .chain(tv.iter().zip(x).map(|(a, b)| a - b)),
    );
    Ok(CheckEntry::measure("ehresmann.pi_theta", "projections of the lifts", Some(p), res, tol))
}

/// `G(x, λy) = λ²G`, `N(x, λy) = λN`; worst residual over `lambdas`,
/// relative to `max(1, |value|)`.
pub fn homogeneity_residuals(f: &FinslerMetric, p: &BasePoint, lambdas: &[f64]) -> Result<(f64, f64)> {
    let g0 = spray_coefficients(f, p)?;
    let n0 = nonlinear_connection(f, p)?;
    let (mut rg, mut rn) = (0.0f64, 0.0f64);
    for &l in lambdas {
        let q = p.scaled(l);
        let g1 = spray_coefficients(f, &q)?;
        let n1 = nonlinear_connection(f, &q)?;
        for (a, b) in g1.iter().zip(&g0) {
            rg = rg.max((a - l * l * b).abs() / b.abs().max(1.0));
        }
        for (a, b) in n1.iter().zip(n0.iter()) {
            rn = rn.max((a - l * b).abs() / b.abs().max(1.0));
        }
    }
    Ok((rg, rn))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{christoffel, ORACLE_STEP};

    fn pt(x: [f64; 3], y: [f64; 3]) -> BasePoint {
        BasePoint::new(x.to_vec(), y.to_vec()).unwrap()
    }

    #[test]
    fn flat_metrics_have_no_spray() {
        let p = pt([0.2, 0.1, -0.3], [1.0, 0.4, 0.2]);
        for f in [FinslerMetric::euclidean(3).unwrap(), FinslerMetric::randers3()] {
            assert!(spray_coefficients(&f, &p).unwrap().iter().all(|g| g.abs() < 1e-12));
        }
    }

    #[test]
    fn heisenberg_spray_matches_christoffels() {
        let h = FinslerMetric::heisenberg3();
        let p = pt([0.0; 3], [1.0; 3]);
        let gam = christoffel(&h, &p.x, ORACLE_STEP).unwrap();
        let g = spray_coefficients(&h, &p).unwrap();
        let n = nonlinear_connection(&h, &p).unwrap();
        for i in 0..3 {
            let mut want = 0.0;
            for j in 0..3 {
                let nij: f64 = (0..3).map(|k| gam.get(i, j, k) * p.y[k]).sum();
                assert!((n[(i, j)] - nij).abs() < 1e-6);
                want += 0.5 * nij * p.y[j];
            }
            assert!((g[i] - want).abs() < 1e-6);
        }
    }

    #[test]
    fn euclidean_theta_of_radial_vector() {
        let e = FinslerMetric::euclidean(3).unwrap();
        let p = pt([0.0; 3], [0.0, 2.0, 0.0]);
        let v = DoubleTangentVector {
            a: vec![0.0; 3],
            b: p.y.clone(),
        };
        let t = theta_apply(&e, &p, &v).unwrap();
        assert_eq!(t, vec![0.0, 1.0, 0.0]);
        assert_eq!(horizontal_lift(&e, &[1.0, 0.0, 0.0], &p).unwrap().b, vec![0.0; 3]);
    }

    #[test]
    fn heisenberg_horizontal_lift_is_in_kernel_of_theta() {
        let h = FinslerMetric::heisenberg3();
        let p = pt([0.4, -0.8, 0.1], [0.3, 1.0, -0.5]);
        let v = horizontal_lift(&h, &[1.0, 0.0, 0.0], &p).unwrap();
        assert!(max_abs(theta_apply(&h, &p, &v).unwrap()) < 1e-12);
        assert!(check_pi_theta(&h, &p, &[0.3, 0.2, -0.9], 1e-9).unwrap().pass);
    }

    #[test]
    fn lifts_of_constants_commute_in_flat_space() {
        let e = FinslerMetric::euclidean(3).unwrap();
        let geo = Geometry::at(&e, &pt([0.0; 3], [1.0, 1.0, 0.0])).unwrap();
        let x = geo.hlift(&geo.const_field(&[1.0, 2.0, 0.0]));
        let y = geo.hlift(&geo.const_field(&[0.0, -1.0, 3.0]));
        let br = bracket(&geo, &x, &y).unwrap();
        assert!(max_abs(br.a.into_iter().chain(br.b)) < 1e-14);
    }

    #[test]
    fn spray_homogeneity() {
        let p = pt([0.3, -0.2, 0.5], [0.7, -1.1, 0.4]);
        for f in [FinslerMetric::heisenberg3(), FinslerMetric::randers3()] {
            let (rg, rn) = homogeneity_residuals(&f, &p, &[0.5, 2.0]).unwrap();
            assert!(rg < 1e-9 && rn < 1e-9, "{rg} {rn}");
        }
    }
}
