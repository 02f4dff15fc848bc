//! Random test sections and vector fields, affine in `(x, y)` around the
//! evaluation point.

use rand::Rng;
use serde::Serialize;

use crate::geometry::{FiberField, Geometry, TangentField};

/// `Xⁱ(x, y) = cⁱ + Lxⁱⱼ (xʲ − x₀ʲ) + Lyⁱⱼ (yʲ − y₀ʲ)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AffineField {
    pub c: Vec<f64>,
    pub lx: Vec<Vec<f64>>,
    pub ly: Vec<Vec<f64>>,
}

impl AffineField {
    pub fn constant(c: &[f64]) -> AffineField {
        let m = c.len();
        AffineField {
            c: c.to_vec(),
            lx: vec![vec![0.0; m]; m],
            ly: vec![vec![0.0; m]; m],
        }
    }

    pub fn random<R: Rng>(rng: &mut R, m: usize) -> AffineField {
        let mut u = || rng.gen_range(-1.0..1.0);
        let c = (0..m).map(|_| u()).collect();
        let lx = (0..m).map(|_| (0..m).map(|_| 0.5 * u()).collect()).collect();
        let ly = (0..m).map(|_| (0..m).map(|_| 0.5 * u()).collect()).collect();
        AffineField { c, lx, ly }
    }

    pub fn jets(&self, geo: &Geometry) -> FiberField {
        let m = geo.m;
        let p = &geo.point;
        let dx: Vec<_> = (0..m).map(|j| geo.x[j].add_const(-p.x[j])).collect();
        let dy: Vec<_> = (0..m).map(|j| geo.y[j].add_const(-p.y[j])).collect();
        FiberField(
            (0..m)
                .map(|i| {
                    let mut acc = geo.constant(self.c[i]);
                    for j in 0..m {
                        acc = acc + dx[j].scale(self.lx[i][j]) + dy[j].scale(self.ly[i][j]);
                    }
                    acc
                })
                .collect(),
        )
    }
}

/// A vector field on `TM₀` as `X^H + W^V`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SplitField {
    pub horizontal: AffineField,
    pub vertical: AffineField,
}

impl SplitField {
    pub fn random<R: Rng>(rng: &mut R, m: usize) -> SplitField {
        SplitField {
            horizontal: AffineField::random(rng, m),
            vertical: AffineField::random(rng, m),
        }
    }

    pub fn jets(&self, geo: &Geometry) -> TangentField {
        geo.hlift(&self.horizontal.jets(geo))
            .add(&geo.vlift(&self.vertical.jets(geo)))
    }
}

/// Random vector in `[-1, 1]^m`.
pub fn random_vector<R: Rng>(rng: &mut R, m: usize) -> Vec<f64> {
    (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect()
}
