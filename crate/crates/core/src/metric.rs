//! Finsler structures: built-ins, parsed expressions, fundamental and Cartan
//! tensors and the structure-axiom checks.

use nalgebra::DMatrix;

use crate::check::CheckEntry;
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::jet::{jet_eval, JetError, MultiIndex, Scalar, ScalarField};
use crate::point::{check_dimension, BasePoint};

/// Threshold on the smallest eigenvalue of `g`.
pub const PD_THRESHOLD: f64 = 1e-10;

#[derive(Clone, Debug)]
pub enum MetricKind {
    /// `F = |y|`.
    Euclidean,
    /// `F² = g_ij(x) yⁱ yʲ` from component functions of `x`.
    Riemannian { g: Vec<Vec<Expr>> },
    /// `F = sqrt(yᵀ α y) + β·y` with constant `α`, `β`.
    Randers { alpha: Vec<Vec<f64>>, beta: Vec<f64> },
    /// `F` given directly as an expression.
    Expression { src: String, expr: Expr },
}

#[derive(Clone, Debug)]
pub struct FinslerMetric {
    pub name: String,
    pub dim: usize,
    pub kind: MetricKind,
}

pub const BUILTIN_METRICS: &[(&str, &str)] = &[
    ("euclidean", "F = |y| in dimension 3 (euclideanN for dimension N)"),
    ("heisenberg3", "Riemannian metric of the Heisenberg group, the standard Sasakian testbed"),
    ("randers3", "F = |y| + 0.1 y1, flat alpha with constant beta"),
];

fn parse_all(src: &[&[&str]], m: usize) -> Vec<Vec<Expr>> {
    src.iter()
        .map(|row| row.iter().map(|s| Expr::parse(s, m).expect("built-in expression")).collect())
        .collect()
}

impl FinslerMetric {
    pub fn euclidean(m: usize) -> Result<FinslerMetric> {
        check_dimension(m)?;
        Ok(FinslerMetric {
            name: if m == 3 { "euclidean".into() } else { format!("euclidean{m}") },
            dim: m,
            kind: MetricKind::Euclidean,
        })
    }

    /// `g = ¼((dx¹)² + (dx²)²) + η⊗η` with `η = ½(dx³ − x² dx¹)`.
    pub fn heisenberg3() -> FinslerMetric {
        let g = parse_all(
            &[
                &["0.25 + 0.25*x2^2", "0", "0 - 0.25*x2"],
                &["0", "0.25", "0"],
                &["0 - 0.25*x2", "0", "0.25"],
            ],
            3,
        );
        FinslerMetric {
            name: "heisenberg3".into(),
            dim: 3,
            kind: MetricKind::Riemannian { g },
        }
    }

    pub fn randers3() -> FinslerMetric {
        FinslerMetric {
            name: "randers3".into(),
            dim: 3,
            kind: MetricKind::Randers {
                alpha: vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]],
                beta: vec![0.1, 0.0, 0.0],
            },
        }
    }

    pub fn builtin(name: &str) -> Result<FinslerMetric> {
        match name {
            "euclidean" => FinslerMetric::euclidean(3),
            "heisenberg3" => Ok(FinslerMetric::heisenberg3()),
            "randers3" => Ok(FinslerMetric::randers3()),
            _ => {
                if let Some(m) = name.strip_prefix("euclidean").and_then(|d| d.parse().ok()) {
                    return FinslerMetric::euclidean(m);
                }
                Err(Error::Unknown {
                    kind: "metric",
                    name: name.to_string(),
                })
            }
        }
    }

    pub fn is_riemannian(&self) -> bool {
        matches!(self.kind, MetricKind::Euclidean | MetricKind::Riemannian { .. })
    }

    /// `g_ij(x)` for Riemannian kinds.
    pub fn riemannian_g<S: Scalar>(&self, x: &[S]) -> Option<Result<Vec<Vec<S>>, JetError>> {
        let m = self.dim;
        match &self.kind {
            MetricKind::Euclidean => Some(Ok((0..m)
                .map(|i| (0..m).map(|j| x[0].lift(if i == j { 1.0 } else { 0.0 })).collect())
                .collect())),
            MetricKind::Riemannian { g } => Some(
                g.iter()
                    .map(|row| row.iter().map(|e| e.eval(x, x)).collect::<Result<Vec<_>, _>>())
                    .collect(),
            ),
            _ => None,
        }
    }

    pub fn eval_f2<S: Scalar>(&self, x: &[S], y: &[S]) -> Result<S, JetError> {
        match &self.kind {
            MetricKind::Euclidean | MetricKind::Riemannian { .. } => {
                let g = self.riemannian_g(x).unwrap()?;
                Ok(quadratic(&g, y))
            }
            _ => {
                let f = self.eval_f(x, y)?;
                Ok(f.clone() * f)
            }
        }
    }

    pub fn eval_f<S: Scalar>(&self, x: &[S], y: &[S]) -> Result<S, JetError> {
        match &self.kind {
            MetricKind::Euclidean | MetricKind::Riemannian { .. } => self.eval_f2(x, y)?.checked_sqrt(),
            MetricKind::Randers { alpha, beta } => {
                let a: Vec<Vec<S>> = alpha
                    .iter()
                    .map(|row| row.iter().map(|&c| y[0].lift(c)).collect())
                    .collect();
                let mut b = y[0].lift(0.0);
                for (c, yi) in beta.iter().zip(y) {
                    b = b + yi.clone() * yi.lift(*c);
                }
                Ok(quadratic(&a, y).checked_sqrt()? + b)
            }
            MetricKind::Expression { expr, .. } => expr.eval(x, y),
        }
    }

    pub fn f_value(&self, p: &BasePoint) -> Result<f64> {
        Ok(self.eval_f(&p.x, &p.y)?)
    }
}

fn quadratic<S: Scalar>(a: &[Vec<S>], y: &[S]) -> S {
    let mut acc = y[0].lift(0.0);
    for (i, row) in a.iter().enumerate() {
        for (j, aij) in row.iter().enumerate() {
            acc = acc + aij.clone() * y[i].clone() * y[j].clone();
        }
    }
    acc
}

impl ScalarField for FinslerMetric {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval<S: Scalar>(&self, x: &[S], y: &[S]) -> Result<S, JetError> {
        self.eval_f(x, y)
    }
}

/// `F²` as a scalar field.
pub struct SquaredNorm<'a>(pub &'a FinslerMetric);

impl ScalarField for SquaredNorm<'_> {
    fn dim(&self) -> usize {
        self.0.dim
    }
    fn eval<S: Scalar>(&self, x: &[S], y: &[S]) -> Result<S, JetError> {
        self.0.eval_f2(x, y)
    }
}

/// Parses a user metric `F(x, y)` in dimension `m`.
pub fn parse_metric(src: &str, m: usize) -> Result<FinslerMetric> {
    check_dimension(m)?;
    let expr = Expr::parse(src, m)?;
    Ok(FinslerMetric {
        name: src.to_string(),
        dim: m,
        kind: MetricKind::Expression {
            src: src.to_string(),
            expr,
        },
    })
}

/// Flattened `m×m×m` array.
#[derive(Clone, Debug, PartialEq)]
pub struct Array3 {
    pub m: usize,
    pub data: Vec<f64>,
}

impl Array3 {
    pub fn zeros(m: usize) -> Array3 {
        Array3 { m, data: vec![0.0; m * m * m] }
    }
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[(i * self.m + j) * self.m + k]
    }
    pub fn set(&mut self, i: usize, j: usize, k: usize, v: f64) {
        self.data[(i * self.m + j) * self.m + k] = v;
    }
    pub fn max_abs(&self) -> f64 {
        crate::check::max_abs(self.data.iter().copied())
    }
    pub fn to_nested(&self) -> Vec<Vec<Vec<f64>>> {
        let m = self.m;
        (0..m)
            .map(|i| (0..m).map(|j| (0..m).map(|k| self.get(i, j, k)).collect()).collect())
            .collect()
    }
}

#[derive(Clone, Debug)]
pub struct MetricData {
    pub g: DMatrix<f64>,
    pub ginv: DMatrix<f64>,
    pub a: Array3,
}

pub fn min_eigenvalue(g: &DMatrix<f64>) -> f64 {
    let sym = (g + g.transpose()) * 0.5;
    sym.symmetric_eigenvalues().min()
}

/// `g_ij = ½ ∂²F²/∂yⁱ∂yʲ`, rejected when not positive definite.
pub fn fundamental_tensor(f: &FinslerMetric, p: &BasePoint) -> Result<DMatrix<f64>> {
    let g = hessian(f, p)?;
    let min_eigenvalue = min_eigenvalue(&g);
    if !(min_eigenvalue > PD_THRESHOLD) {
        return Err(Error::NotPositiveDefinite { min_eigenvalue });
    }
    Ok(g)
}

/// Half the `y`-Hessian of `F²`, without the definiteness check.
pub fn hessian(f: &FinslerMetric, p: &BasePoint) -> Result<DMatrix<f64>> {
    let m = f.dim;
    let j = jet_eval(&SquaredNorm(f), p, 2)?;
    let mut g = DMatrix::zeros(m, m);
    for a in 0..m {
        for b in 0..m {
            let alpha = MultiIndex::y(m, a, 1).with(m + b, 1);
            g[(a, b)] = 0.5 * j.partial(&alpha)?;
        }
    }
    Ok(g)
}

/// `A_ijk = (F/2) ∂g_ij/∂yᵏ`.
pub fn cartan_tensor(f: &FinslerMetric, p: &BasePoint) -> Result<Array3> {
    let m = f.dim;
    let j = jet_eval(&SquaredNorm(f), p, 3)?;
    let fv = f.f_value(p)?;
    let mut a = Array3::zeros(m);
    for i in 0..m {
        for jj in 0..m {
            for k in 0..m {
                let alpha = MultiIndex::y(m, i, 1).with(m + jj, 1).with(m + k, 1);
                a.set(i, jj, k, 0.25 * fv * j.partial(&alpha)?);
            }
        }
    }
    Ok(a)
}

pub fn metric_data(f: &FinslerMetric, p: &BasePoint) -> Result<MetricData> {
    let g = fundamental_tensor(f, p)?;
    let ginv = g.clone().try_inverse().ok_or(Error::Singular(0.0))?;
    Ok(MetricData {
        g,
        ginv,
        a: cartan_tensor(f, p)?,
    })
}

pub const HOMOGENEITY_LAMBDAS: [f64; 3] = [0.5, 2.0, 3.0];

/// Positivity, positive homogeneity and strong convexity of `F` at `p`.
pub fn check_finsler(f: &FinslerMetric, p: &BasePoint, lambdas: &[f64], tol: f64) -> Vec<CheckEntry> {
    let mut out = Vec::new();
    match f.f_value(p) {
        Ok(v) => out.push(
            CheckEntry::measure("finsler.positivity", "Finsler structure: F > 0 on TM0", Some(p), if v > 0.0 { 0.0 } else { -v }, 0.0)
                .with_witness(serde_json::json!({ "F": v })),
        ),
        Err(e) => out.push(CheckEntry::errored("finsler.positivity", "Finsler structure: F > 0 on TM0", Some(p), &e)),
    }
    let homog = (|| -> Result<(f64, Vec<f64>)> {
        let base = f.f_value(p)?;
        let mut per = Vec::new();
        for &l in lambdas {
            per.push((f.f_value(&p.scaled(l))? - l * base).abs());
        }
        Ok((crate::check::max_abs(per.iter().copied()), per))
    })();
    match homog {
        Ok((r, per)) => out.push(
            CheckEntry::measure("finsler.homogeneity", "Finsler structure (ii): F(x, λy) = λF(x, y)", Some(p), r, tol)
                .with_witness(serde_json::json!({ "lambdas": lambdas, "residuals": per })),
        ),
        Err(e) => out.push(CheckEntry::errored("finsler.homogeneity", "Finsler structure (ii): F(x, λy) = λF(x, y)", Some(p), &e)),
    }
    let name = "finsler.positive_definite";
    let r = "Finsler structure (iii): Hessian g positive definite";
    match hessian(f, p) {
        Ok(g) => {
            let ev = min_eigenvalue(&g);
            let residual = if ev > PD_THRESHOLD { 0.0 } else { PD_THRESHOLD - ev };
            out.push(
                CheckEntry::measure(name, r, Some(p), residual, 0.0)
                    .with_witness(serde_json::json!({ "min_eigenvalue": ev })),
            );
        }
        Err(e) => out.push(CheckEntry::errored(name, r, Some(p), &e)),
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(x: [f64; 3], y: [f64; 3]) -> BasePoint {
        BasePoint::new(x.to_vec(), y.to_vec()).unwrap()
    }

    #[test]
    fn euclidean_identity() {
        let f = FinslerMetric::euclidean(3).unwrap();
        let g = fundamental_tensor(&f, &pt([0.2, 0.0, 1.0], [0.3, -1.0, 2.0])).unwrap();
        assert!((g - DMatrix::identity(3, 3)).abs().max() < 1e-14);
    }

    #[test]
    fn heisenberg_by_hand() {
        let f = FinslerMetric::heisenberg3();
        let g0 = fundamental_tensor(&f, &pt([0.0; 3], [1.0, 1.0, 1.0])).unwrap();
        let want0 = DMatrix::from_diagonal_element(3, 3, 0.25);
        assert!((g0 - want0).abs().max() < 1e-14);
        let g1 = fundamental_tensor(&f, &pt([0.0, 1.0, 0.0], [1.0, 0.3, 0.2])).unwrap();
        assert!((g1[(0, 0)] - 0.5).abs() < 1e-14);
        assert!((g1[(0, 2)] + 0.25).abs() < 1e-14);
        assert!((g1[(2, 0)] + 0.25).abs() < 1e-14);
    }

    #[test]
    fn parsed_randers_matches_builtin() {
        let parsed = parse_metric("sqrt(y1^2+y2^2+y3^2) + 0.1*y1", 3).unwrap();
        let builtin = FinslerMetric::randers3();
        let p = pt([0.1, 0.2, 0.3], [1.0, 0.2, 0.1]);
        let d = fundamental_tensor(&parsed, &p).unwrap() - fundamental_tensor(&builtin, &p).unwrap();
        assert!(d.abs().max() < 1e-12);
        let parsed = parse_metric("sqrt(y1^2 + y2^2 + y3^2)", 3).unwrap();
        let g = fundamental_tensor(&parsed, &p).unwrap();
        assert!((g - DMatrix::identity(3, 3)).abs().max() < 1e-12);
    }

    #[test]
    fn randers_is_not_riemannian() {
        let a = cartan_tensor(&FinslerMetric::randers3(), &pt([0.0; 3], [1.0, 0.2, 0.1])).unwrap();
        assert!(a.max_abs() > 1e-3);
    }

    #[test]
    fn quartic_convexity_near_and_on_axis() {
        let quartic = parse_metric("sqrt(sqrt(y1^4 + y2^4 + y3^4))", 3).unwrap();
        // near the axis g_22 = 3 y2² S^(-1/2) - 2 y2⁶ S^(-3/2) ≈ 3e-4 with S = Σ y⁴
        let near = pt([0.0; 3], [1.0, 0.01, 0.01]);
        let entries = check_finsler(&quartic, &near, &HOMOGENEITY_LAMBDAS, 1e-12);
        let hom = entries.iter().find(|e| e.name == "finsler.homogeneity").unwrap();
        assert!(hom.pass);
        let ev = min_eigenvalue(&hessian(&quartic, &near).unwrap());
        assert!((ev - 3e-4).abs() < 1e-6, "{ev}");
        // on the axis the Hessian degenerates and the point is flagged
        let on = pt([0.0; 3], [1.0, 0.0, 0.0]);
        let entries = check_finsler(&quartic, &on, &HOMOGENEITY_LAMBDAS, 1e-12);
        let pd = entries.iter().find(|e| e.name == "finsler.positive_definite").unwrap();
        assert!(!pd.pass);
        assert_eq!(pd.point.as_ref(), Some(&on));
        assert!(matches!(fundamental_tensor(&quartic, &on), Err(Error::NotPositiveDefinite { .. })));
    }

    #[test]
    fn unknown_builtin() {
        assert!(FinslerMetric::builtin("bogus").is_err());
        assert_eq!(FinslerMetric::builtin("euclidean5").unwrap().dim, 5);
        assert!(FinslerMetric::builtin("euclidean4").is_err());
    }
}
