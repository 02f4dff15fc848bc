//! Central finite differences, used only as an independent oracle for the
//! jet arithmetic.

use crate::error::Result;
use crate::jet::{MultiIndex, ScalarField};
use crate::point::BasePoint;

/// Base step per derivative order for [`fd_partial_auto`]. Larger steps keep
/// roundoff under control for the high orders; Richardson extrapolation
/// removes the leading truncation term.
pub const AUTO_STEPS: [f64; 5] = [1e-3, 1e-3, 2e-3, 5e-3, 1e-2];

/// Central stencil for the `k`-th derivative on integer offsets, unit step.
fn stencil(k: u8) -> &'static [(i32, f64)] {
    match k {
        0 => &[(0, 1.0)],
        1 => &[(-1, -0.5), (1, 0.5)],
        2 => &[(-1, 1.0), (0, -2.0), (1, 1.0)],
        3 => &[(-2, -0.5), (-1, 1.0), (1, -1.0), (2, 0.5)],
        4 => &[(-2, 1.0), (-1, -4.0), (0, 6.0), (1, -4.0), (2, 1.0)],
        _ => panic!("finite-difference stencils stop at order 4"),
    }
}

fn eval_at<F: ScalarField + ?Sized>(f: &F, p: &BasePoint, z: &[f64]) -> Result<f64> {
    let m = p.dim();
    let x: Vec<f64> = (0..m).map(|i| p.x[i] + z[i]).collect();
    let y: Vec<f64> = (0..m).map(|i| p.y[i] + z[m + i]).collect();
    Ok(f.eval(&x, &y)?)
}

/// Per-variable scale `max(1, |coordinate|)`.
fn scales(p: &BasePoint) -> Vec<f64> {
    p.x.iter().chain(&p.y).map(|c| c.abs().max(1.0)).collect()
}

/// Tensor product of one-dimensional central stencils with step `h` scaled
/// per variable; `O(h²)` accurate.
pub fn fd_partial<F: ScalarField + ?Sized>(f: &F, p: &BasePoint, alpha: &MultiIndex, h: f64) -> Result<f64> {
    assert!(alpha.order() <= 4, "finite-difference oracle supports |α| ≤ 4");
    assert!(h > 0.0);
    p.check_slit()?;
    let nvars = 2 * p.dim();
    let steps: Vec<f64> = scales(p).iter().map(|s| s * h).collect();

    let mut nodes: Vec<(Vec<f64>, f64)> = vec![(vec![0.0; nvars], 1.0)];
    for (v, &k) in alpha.counts().iter().enumerate() {
        if k == 0 {
            continue;
        }
        let hv = steps[v];
        let norm = hv.powi(k as i32);
        let mut next = Vec::with_capacity(nodes.len() * 5);
        for (z, w) in &nodes {
            for &(off, c) in stencil(k) {
                let mut z2 = z.clone();
                z2[v] += f64::from(off) * hv;
                next.push((z2, w * c / norm));
            }
        }
        nodes = next;
    }
    let mut acc = 0.0;
    for (z, w) in &nodes {
        acc += w * eval_at(f, p, z)?;
    }
    Ok(acc)
}

/// Richardson-extrapolated stencil `(4D(h) − D(2h))/3` with the base step
/// taken from [`AUTO_STEPS`]; `O(h⁴)` accurate.
pub fn fd_partial_auto<F: ScalarField + ?Sized>(f: &F, p: &BasePoint, alpha: &MultiIndex) -> Result<f64> {
    let h = AUTO_STEPS[alpha.order()];
    if alpha.order() == 0 {
        return fd_partial(f, p, alpha, h);
    }
    let fine = fd_partial(f, p, alpha, h)?;
    let coarse = fd_partial(f, p, alpha, 2.0 * h)?;
    Ok((4.0 * fine - coarse) / 3.0)
}

/// `|a − b| / max(|a|, |b|, 1)`.
pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

/// All multi-indices over `nvars` variables with `1 ≤ |α| ≤ max_order`.
pub fn multi_indices(nvars: usize, max_order: usize) -> Vec<MultiIndex> {
    fn rec(nvars: usize, left: usize, cur: &mut Vec<u8>, out: &mut Vec<MultiIndex>) {
        if cur.len() == nvars {
            if cur.iter().any(|&c| c > 0) {
                out.push(MultiIndex::from_counts(cur.clone()));
            }
            return;
        }
        for c in 0..=left {
            cur.push(c as u8);
            rec(nvars, left - c, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(nvars, max_order, &mut Vec::new(), &mut out);
    out
}
