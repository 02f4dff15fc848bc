//! Chern connection, covariant derivatives, exterior differentials and
//! Lie derivatives along the two halves of `TTM₀`.

use crate::check::{max_abs, CheckEntry};
use crate::error::Result;
use crate::fields::{AffineField, SplitField};
use crate::geometry::{FiberField, Geometry, Part, TangentField, Tensor};
use crate::metric::{Array3, FinslerMetric};
use crate::point::BasePoint;

/// `Γⁱⱼₖ` at the point.
pub fn chern_coefficients(f: &FinslerMetric, p: &BasePoint) -> Result<Array3> {
    let geo = Geometry::new(f, p, 4)?;
    Ok(gamma_values(&geo))
}

pub fn gamma_values(geo: &Geometry) -> Array3 {
    Array3 {
        m: geo.m,
        data: geo.gamma.iter().map(|j| j.value()).collect(),
    }
}

pub fn covariant_derivative(geo: &Geometry, t: &Tensor, v: &TangentField) -> Result<Tensor> {
    geo.nabla_tensor(v, t)
}

pub fn exterior_diff_h(geo: &Geometry, t: &Tensor, args: &[&FiberField]) -> Result<f64> {
    Ok(geo.exterior(Part::H, t, args)?.value())
}

pub fn exterior_diff_v(geo: &Geometry, t: &Tensor, args: &[&FiberField]) -> Result<f64> {
    Ok(geo.exterior(Part::V, t, args)?.value())
}

pub fn lie_h(geo: &Geometry, x: &FiberField, t: &Tensor) -> Result<Tensor> {
    geo.lie_tensor(Part::H, x, t)
}

pub fn lie_v(geo: &Geometry, x: &FiberField, t: &Tensor) -> Result<Tensor> {
    geo.lie_tensor(Part::V, x, t)
}

/// Residuals of the two Chern axioms for one set of sample fields.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AxiomResiduals {
    /// `∇_X π*Y − ∇_Y π*X − π*[X, Y]`
    pub symmetry: f64,
    /// `(∇_{X̄^H} g)(Ȳ, Z̄)`
    pub compat_h: f64,
    /// `(∇_{X̄^V} g)(Ȳ, Z̄) − 2A(X̄, Ȳ, Z̄)`
    pub compat_v: f64,
}

pub fn axiom_residuals(geo: &Geometry, x: &SplitField, y: &SplitField, xbar: &AffineField, ybar: &AffineField, zbar: &AffineField) -> Result<AxiomResiduals> {
    let (xf, yf) = (x.jets(geo), y.jets(geo));
    let sym = geo
        .nabla(&xf, &geo.pi(&yf))?
        .sub(&geo.nabla(&yf, &geo.pi(&xf))?)
        .sub(&geo.pi(&geo.bracket(&xf, &yf)?));
    let (xb, yb, zb) = (xbar.jets(geo), ybar.jets(geo), zbar.jets(geo));
    let g = geo.metric_tensor();
    let compat = |part: Part| -> Result<f64> {
        let lifted = geo.lift(part, &xb);
        let ng = geo.nabla_tensor(&lifted, &g)?.eval_form(&[&yb, &zb]);
        let rhs = geo.cartan_form(&geo.theta(&lifted), &yb, &zb).scale(2.0);
        Ok((ng - rhs).value())
    };
    Ok(AxiomResiduals {
        symmetry: max_abs(sym.values()),
        compat_h: compat(Part::H)?.abs(),
        compat_v: compat(Part::V)?.abs(),
    })
}

pub fn verify_chern_axioms(geo: &Geometry, x: &SplitField, y: &SplitField, xbar: &AffineField, ybar: &AffineField, zbar: &AffineField, tol: f64) -> Vec<CheckEntry> {
    let p = Some(&geo.point);
    match axiom_residuals(geo, x, y, xbar, ybar, zbar) {
        Ok(r) => vec![
            CheckEntry::measure("chern.symmetry", "Chern connection, symmetry axiom", p, r.symmetry, tol),
            CheckEntry::measure("chern.compat_h", "Chern connection, almost g-compatibility (horizontal)", p, r.compat_h, tol),
            CheckEntry::measure("chern.compat_v", "Chern connection, almost g-compatibility (vertical)", p, r.compat_v, tol),
        ],
        Err(e) => ["chern.symmetry", "chern.compat_h", "chern.compat_v"]
            .iter()
            .map(|n| CheckEntry::errored(n, "Chern connection axioms", p, &e))
            .collect(),
    }
}
