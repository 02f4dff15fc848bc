//! Riemannian reference values by plain finite differences of `g_ij(x)`,
//! independent of the jet machinery.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::metric::{Array3, FinslerMetric};

pub const ORACLE_STEP: f64 = 1e-3;

fn g_at(metric: &FinslerMetric, x: &[f64]) -> Result<DMatrix<f64>> {
    let m = metric.dim;
    let g = metric
        .riemannian_g(x)
        .ok_or_else(|| Error::Config(format!("metric '{}' is not Riemannian", metric.name)))??;
    Ok(DMatrix::from_fn(m, m, |i, j| g[i][j]))
}

/// Levi-Civita symbols `γⁱⱼₖ = ½ gⁱˡ (∂ⱼg_lk + ∂ₖg_lj − ∂_l g_jk)`.
pub fn christoffel(metric: &FinslerMetric, x: &[f64], h: f64) -> Result<Array3> {
    let m = metric.dim;
    let g = g_at(metric, x)?;
    let ginv = g.clone().try_inverse().ok_or(Error::Singular(0.0))?;
    let mut dg = Vec::with_capacity(m); // dg[l] = ∂g/∂xˡ
    for l in 0..m {
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[l] += h;
        xm[l] -= h;
        dg.push((g_at(metric, &xp)? - g_at(metric, &xm)?) / (2.0 * h));
    }
    let mut out = Array3::zeros(m);
    for i in 0..m {
        for j in 0..m {
            for k in 0..m {
                let mut acc = 0.0;
                for l in 0..m {
                    acc += ginv[(i, l)] * (dg[j][(l, k)] + dg[k][(l, j)] - dg[l][(j, k)]);
                }
                out.set(i, j, k, 0.5 * acc);
            }
        }
    }
    Ok(out)
}

/// `Rⱼⁱₖₗ = ∂ₖγⁱⱼₗ − ∂ₗγⁱⱼₖ + γⁱₖₛγˢⱼₗ − γⁱₗₛγˢⱼₖ`, flattened as
/// `((i·m + j)·m + k)·m + l`.
pub fn riemann(metric: &FinslerMetric, x: &[f64], h: f64) -> Result<Vec<f64>> {
    let m = metric.dim;
    let gam = christoffel(metric, x, h)?;
    let mut dgam = Vec::with_capacity(m);
    for k in 0..m {
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[k] += h;
        xm[k] -= h;
        let (p, q) = (christoffel(metric, &xp, h)?, christoffel(metric, &xm, h)?);
        dgam.push(Array3 {
            m,
            data: p.data.iter().zip(&q.data).map(|(a, b)| (a - b) / (2.0 * h)).collect(),
        });
    }
    let mut r = Vec::with_capacity(m.pow(4));
    for i in 0..m {
        for j in 0..m {
            for k in 0..m {
                for l in 0..m {
                    let mut acc = dgam[k].get(i, j, l) - dgam[l].get(i, j, k);
                    for s in 0..m {
                        acc += gam.get(i, k, s) * gam.get(s, j, l) - gam.get(i, l, s) * gam.get(s, j, k);
                    }
                    r.push(acc);
                }
            }
        }
    }
    Ok(r)
}

/// Usual Ricci contraction `Ric_jk = Rⱼˡₗₖ`.
pub fn ricci(r: &[f64], m: usize) -> DMatrix<f64> {
    DMatrix::from_fn(m, m, |j, k| (0..m).map(|l| r[((l * m + j) * m + l) * m + k]).sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_space_is_flat() {
        let e = FinslerMetric::euclidean(3).unwrap();
        assert!(christoffel(&e, &[0.1, 0.2, 0.3], ORACLE_STEP).unwrap().max_abs() < 1e-15);
        assert!(riemann(&e, &[0.1, 0.2, 0.3], ORACLE_STEP).unwrap().iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn heisenberg_ricci_along_reeb() {
        // ξ = 2∂₃ has unit length and the Sasakian Ricci value Ric(ξ, ξ) = 2n = 2
        let h = FinslerMetric::heisenberg3();
        let r = riemann(&h, &[0.3, -0.4, 0.8], ORACLE_STEP).unwrap();
        let ric = ricci(&r, 3);
        assert!((4.0 * ric[(2, 2)] - 2.0).abs() < 1e-6, "{}", ric[(2, 2)]);
    }
}
