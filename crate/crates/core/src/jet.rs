//! Forward-mode truncated multivariate Taylor arithmetic.
//!
//! A [`Jet`] stores the Taylor coefficients `c_α = ∂^α f(p) / α!` of a scalar
//! field around a fixed center `p`, for every multi-index `|α| ≤ order`, over
//! the `2m` variables `(x, y)` of one chart of the tangent bundle. Coefficients
//! are kept in graded order, so truncating to a lower order is a prefix slice
//! and differentiating lowers the order by one.
//!
//! All jets that take part in one computation share a [`JetSpace`], which
//! holds the monomial enumeration and the precomputed product table.

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::Error;
use crate::point::BasePoint;

/// Highest total order a jet space can be built for.
pub const MAX_ORDER: usize = 5;
/// Order used when the caller does not ask for one.
pub const DEFAULT_ORDER: usize = 5;

const NONE: u32 = u32::MAX;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum JetError {
    #[error("domain error: {op} of non-positive value {value}")]
    Domain { op: &'static str, value: f64 },
    #[error("order {requested} is not available (jet order {available})")]
    Order { requested: usize, available: usize },
    #[error("order {requested} exceeds the compiled jet budget {MAX_ORDER}")]
    Budget { requested: usize },
}

/// Multi-index over the `2m` jet variables. Variables `0..m` are the chart
/// coordinates `x`, variables `m..2m` the fiber coordinates `y`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MultiIndex(Vec<u8>);

impl MultiIndex {
    pub fn zero(nvars: usize) -> Self {
        MultiIndex(vec![0; nvars])
    }

    pub fn from_counts(counts: Vec<u8>) -> Self {
        MultiIndex(counts)
    }

    /// `∂/∂x^i` repeated `count` times, in a chart of dimension `m`.
    pub fn x(m: usize, i: usize, count: u8) -> Self {
        Self::zero(2 * m).with(i, count)
    }

    /// `∂/∂y^i` repeated `count` times, in a chart of dimension `m`.
    pub fn y(m: usize, i: usize, count: u8) -> Self {
        Self::zero(2 * m).with(m + i, count)
    }

    /// Adds `count` to the exponent of variable `var`.
    pub fn with(mut self, var: usize, count: u8) -> Self {
        self.0[var] += count;
        self
    }

    pub fn counts(&self) -> &[u8] {
        &self.0
    }

    pub fn nvars(&self) -> usize {
        self.0.len()
    }

    pub fn order(&self) -> usize {
        self.0.iter().map(|&c| c as usize).sum()
    }

    /// `α! = Π α_v!`
    pub fn factorial(&self) -> f64 {
        self.0
            .iter()
            .map(|&c| (1..=c as u32).map(f64::from).product::<f64>())
            .product()
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

/// Monomial enumeration and product table for `nvars` variables up to `order`.
pub struct JetSpace {
    nvars: usize,
    order: usize,
    exps: Vec<Vec<u8>>,
    degree_end: Vec<usize>,
    raise: Vec<u32>,
    mul: Vec<(u32, u32, u32)>,
    mul_end: Vec<usize>,
}

impl fmt::Debug for JetSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("JetSpace")
            .field("nvars", &self.nvars)
            .field("order", &self.order)
            .field("monomials", &self.exps.len())
            .finish()
    }
}

fn compositions(nvars: usize, degree: usize, prefix: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
    if prefix.len() + 1 == nvars {
        prefix.push(degree as u8);
        out.push(prefix.clone());
        prefix.pop();
        return;
    }
    for first in (0..=degree).rev() {
        prefix.push(first as u8);
        compositions(nvars, degree - first, prefix, out);
        prefix.pop();
    }
}

impl JetSpace {
    /// Returns the shared space for `nvars` variables truncated at `order`.
    pub fn get(nvars: usize, order: usize) -> Result<Arc<JetSpace>, JetError> {
        if order > MAX_ORDER {
            return Err(JetError::Budget { requested: order });
        }
        static SPACES: OnceLock<Mutex<HashMap<(usize, usize), Arc<JetSpace>>>> = OnceLock::new();
        let cache = SPACES.get_or_init(|| Mutex::new(HashMap::new()));
        let mut cache = cache.lock().expect("jet space cache poisoned");
        Ok(cache
            .entry((nvars, order))
            .or_insert_with(|| Arc::new(JetSpace::build(nvars, order)))
            .clone())
    }

    fn build(nvars: usize, order: usize) -> JetSpace {
        assert!(nvars > 0, "jet space needs at least one variable");
        let mut exps = Vec::new();
        let mut degree_end = Vec::with_capacity(order + 1);
        for d in 0..=order {
            compositions(nvars, d, &mut Vec::new(), &mut exps);
            degree_end.push(exps.len());
        }
        let index: HashMap<&[u8], u32> = exps
            .iter()
            .enumerate()
            .map(|(i, e)| (e.as_slice(), i as u32))
            .collect();

        let mut raise = vec![NONE; exps.len() * nvars];
        let mut scratch = vec![0u8; nvars];
        for (slot, e) in exps.iter().enumerate() {
            for v in 0..nvars {
                scratch.copy_from_slice(e);
                scratch[v] += 1;
                if let Some(&k) = index.get(scratch.as_slice()) {
                    raise[slot * nvars + v] = k;
                }
            }
        }

        let degree = |slot: usize| degree_end.iter().position(|&end| slot < end).unwrap();
        let mut mul = Vec::new();
        for (i, ei) in exps.iter().enumerate() {
            let di = degree(i);
            for (j, ej) in exps.iter().enumerate() {
                if di + degree(j) > order {
                    continue;
                }
                for v in 0..nvars {
                    scratch[v] = ei[v] + ej[v];
                }
                let k = index[scratch.as_slice()];
                mul.push((i as u32, j as u32, k));
            }
        }
        mul.sort_by_key(|&(_, _, k)| k);
        let mut mul_end = Vec::with_capacity(order + 1);
        for d in 0..=order {
            let end = degree_end[d] as u32;
            mul_end.push(mul.partition_point(|&(_, _, k)| k < end));
        }

        JetSpace {
            nvars,
            order,
            exps,
            degree_end,
            raise,
            mul,
            mul_end,
        }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Number of coefficients of a jet of the given order.
    pub fn len(&self, order: usize) -> usize {
        self.degree_end[order]
    }

    fn slot(&self, alpha: &MultiIndex) -> Option<usize> {
        assert_eq!(alpha.nvars(), self.nvars, "multi-index has wrong arity");
        let mut slot = 0usize;
        for (v, &count) in alpha.counts().iter().enumerate() {
            for _ in 0..count {
                let next = *self.raise.get(slot * self.nvars + v)?;
                if next == NONE {
                    return None;
                }
                slot = next as usize;
            }
        }
        Some(slot)
    }
}

/// Truncated Taylor expansion of a scalar field around a fixed center.
#[derive(Clone)]
pub struct Jet {
    space: Arc<JetSpace>,
    order: usize,
    coeffs: Vec<f64>,
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Jet")
            .field("order", &self.order)
            .field("value", &self.value())
            .finish()
    }
}

impl Jet {
    pub fn constant(space: &Arc<JetSpace>, value: f64) -> Jet {
        let mut coeffs = vec![0.0; space.len(space.order)];
        coeffs[0] = value;
        Jet {
            space: space.clone(),
            order: space.order,
            coeffs,
        }
    }

    /// The affine jet `value + z_var`.
    pub fn variable(space: &Arc<JetSpace>, var: usize, value: f64) -> Jet {
        let mut jet = Jet::constant(space, value);
        if space.order >= 1 {
            jet.coeffs[1 + var] = 1.0;
        }
        jet
    }

    pub fn from_coeffs(space: &Arc<JetSpace>, order: usize, coeffs: Vec<f64>) -> Jet {
        assert_eq!(coeffs.len(), space.len(order));
        Jet {
            space: space.clone(),
            order,
            coeffs,
        }
    }

    /// A constant with the same space and order as `self`.
    pub fn constant_like(&self, value: f64) -> Jet {
        let mut coeffs = vec![0.0; self.coeffs.len()];
        coeffs[0] = value;
        Jet {
            space: self.space.clone(),
            order: self.order,
            coeffs,
        }
    }

    pub fn zero_like(&self) -> Jet {
        self.constant_like(0.0)
    }

    pub fn space(&self) -> &Arc<JetSpace> {
        &self.space
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Taylor coefficient `∂^α f(p) / α!`.
    pub fn coeff(&self, alpha: &MultiIndex) -> Result<f64, JetError> {
        if alpha.order() > self.order {
            return Err(JetError::Order {
                requested: alpha.order(),
                available: self.order,
            });
        }
        let slot = self.space.slot(alpha).expect("multi-index within order");
        Ok(self.coeffs[slot])
    }

    /// Raw partial derivative `∂^α f(p)`.
    pub fn partial(&self, alpha: &MultiIndex) -> Result<f64, JetError> {
        Ok(alpha.factorial() * self.coeff(alpha)?)
    }

    pub fn truncate(&self, order: usize) -> Jet {
        let order = order.min(self.order);
        Jet {
            space: self.space.clone(),
            order,
            coeffs: self.coeffs[..self.space.len(order)].to_vec(),
        }
    }

    /// `∂/∂z_var`, one order lower.
    pub fn deriv(&self, var: usize) -> Result<Jet, JetError> {
        if self.order == 0 {
            return Err(JetError::Order {
                requested: 1,
                available: 0,
            });
        }
        let space = &self.space;
        let order = self.order - 1;
        let n = space.len(order);
        let mut coeffs = Vec::with_capacity(n);
        for slot in 0..n {
            let up = space.raise[slot * space.nvars + var] as usize;
            let mult = f64::from(space.exps[slot][var]) + 1.0;
            coeffs.push(mult * self.coeffs[up]);
        }
        Ok(Jet {
            space: space.clone(),
            order,
            coeffs,
        })
    }

    pub fn scale(&self, s: f64) -> Jet {
        Jet {
            space: self.space.clone(),
            order: self.order,
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    pub fn add_const(&self, c: f64) -> Jet {
        let mut out = self.clone();
        out.coeffs[0] += c;
        out
    }

    fn zip(&self, rhs: &Jet, op: impl Fn(f64, f64) -> f64) -> Jet {
        debug_assert!(Arc::ptr_eq(&self.space, &rhs.space), "jets from different spaces");
        let order = self.order.min(rhs.order);
        let n = self.space.len(order);
        Jet {
            space: self.space.clone(),
            order,
            coeffs: (0..n).map(|i| op(self.coeffs[i], rhs.coeffs[i])).collect(),
        }
    }

    fn product(&self, rhs: &Jet) -> Jet {
        debug_assert!(Arc::ptr_eq(&self.space, &rhs.space), "jets from different spaces");
        let space = &self.space;
        let order = self.order.min(rhs.order);
        let mut coeffs = vec![0.0; space.len(order)];
        let (a, b) = (&self.coeffs, &rhs.coeffs);
        for &(i, j, k) in &space.mul[..space.mul_end[order]] {
            coeffs[k as usize] += a[i as usize] * b[j as usize];
        }
        Jet {
            space: space.clone(),
            order,
            coeffs,
        }
    }

    /// `f(self)` from the derivatives `f^(n)(value)`, `n = 0..=order`.
    fn compose(&self, derivs: &[f64]) -> Jet {
        let mut shift = self.clone();
        shift.coeffs[0] = 0.0;
        let mut factorial = 1.0;
        let taylor: Vec<f64> = derivs
            .iter()
            .enumerate()
            .map(|(n, d)| {
                if n > 0 {
                    factorial *= n as f64;
                }
                d / factorial
            })
            .collect();
        let mut out = self.constant_like(taylor[self.order]);
        for n in (0..self.order).rev() {
            out = out.product(&shift);
            out.coeffs[0] += taylor[n];
        }
        out
    }

    /// Real power `self^r` for a positive base.
    pub fn powf(&self, r: f64) -> Result<Jet, JetError> {
        let a = self.value();
        if a <= 0.0 {
            return Err(JetError::Domain { op: "powf", value: a });
        }
        let mut derivs = Vec::with_capacity(self.order + 1);
        let mut falling = 1.0;
        for n in 0..=self.order {
            derivs.push(falling * a.powf(r - n as f64));
            falling *= r - n as f64;
        }
        Ok(self.compose(&derivs))
    }

    pub fn sqrt(&self) -> Result<Jet, JetError> {
        let a = self.value();
        if a <= 0.0 {
            return Err(JetError::Domain { op: "sqrt", value: a });
        }
        self.powf(0.5)
    }

    pub fn recip(&self) -> Result<Jet, JetError> {
        let a = self.value();
        if a == 0.0 || !a.is_finite() {
            return Err(JetError::Domain { op: "reciprocal", value: a });
        }
        let mut derivs = Vec::with_capacity(self.order + 1);
        let mut term = 1.0 / a;
        for n in 0..=self.order {
            derivs.push(term);
            term *= -((n + 1) as f64) / a;
        }
        Ok(self.compose(&derivs))
    }

    pub fn try_div(&self, rhs: &Jet) -> Result<Jet, JetError> {
        Ok(self.product(&rhs.recip()?))
    }

    pub fn exp(&self) -> Jet {
        let e = self.value().exp();
        self.compose(&vec![e; self.order + 1])
    }

    pub fn ln(&self) -> Result<Jet, JetError> {
        let a = self.value();
        if a <= 0.0 {
            return Err(JetError::Domain { op: "log", value: a });
        }
        let mut derivs = vec![a.ln()];
        let mut term = 1.0 / a;
        for n in 1..=self.order {
            derivs.push(term);
            term *= -(n as f64) / a;
        }
        Ok(self.compose(&derivs))
    }

    pub fn sin(&self) -> Jet {
        let (s, c) = self.value().sin_cos();
        let cycle = [s, c, -s, -c];
        self.compose(&(0..=self.order).map(|n| cycle[n % 4]).collect::<Vec<_>>())
    }

    pub fn cos(&self) -> Jet {
        let (s, c) = self.value().sin_cos();
        let cycle = [c, -s, -c, s];
        self.compose(&(0..=self.order).map(|n| cycle[n % 4]).collect::<Vec<_>>())
    }

    pub fn powi(&self, n: u32) -> Jet {
        let mut out = self.constant_like(1.0);
        let mut base = self.clone();
        let mut e = n;
        while e > 0 {
            if e & 1 == 1 {
                out = out.product(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.product(&base);
            }
        }
        out
    }
}

macro_rules! jet_binop {
    ($trait:ident, $method:ident, $body:expr) => {
        impl<'a> $trait<&'a Jet> for &'a Jet {
            type Output = Jet;
            fn $method(self, rhs: &'a Jet) -> Jet {
                let f: fn(&Jet, &Jet) -> Jet = $body;
                f(self, rhs)
            }
        }
        impl $trait<Jet> for Jet {
            type Output = Jet;
            fn $method(self, rhs: Jet) -> Jet {
                (&self).$method(&rhs)
            }
        }
        impl<'a> $trait<&'a Jet> for Jet {
            type Output = Jet;
            fn $method(self, rhs: &'a Jet) -> Jet {
                (&self).$method(rhs)
            }
        }
        impl<'a> $trait<Jet> for &'a Jet {
            type Output = Jet;
            fn $method(self, rhs: Jet) -> Jet {
                self.$method(&rhs)
            }
        }
    };
}

jet_binop!(Add, add, |a, b| a.zip(b, |x, y| x + y));
jet_binop!(Sub, sub, |a, b| a.zip(b, |x, y| x - y));
jet_binop!(Mul, mul, |a, b| a.product(b));

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

/// Arithmetic shared by plain reals and jets, so that one expression can be
/// evaluated either way.
pub trait Scalar:
    Clone + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Neg<Output = Self>
{
    /// A constant compatible with `self`.
    fn lift(&self, c: f64) -> Self;
    fn value(&self) -> f64;
    fn checked_div(&self, rhs: &Self) -> Result<Self, JetError>;
    fn checked_sqrt(&self) -> Result<Self, JetError>;
    fn checked_ln(&self) -> Result<Self, JetError>;
    fn exp(&self) -> Self;
    fn sin(&self) -> Self;
    fn cos(&self) -> Self;
    fn powi(&self, n: u32) -> Self;
}

impl Scalar for f64 {
    fn lift(&self, c: f64) -> f64 {
        c
    }
    fn value(&self) -> f64 {
        *self
    }
    fn checked_div(&self, rhs: &f64) -> Result<f64, JetError> {
        if *rhs == 0.0 {
            return Err(JetError::Domain { op: "reciprocal", value: 0.0 });
        }
        Ok(self / rhs)
    }
    fn checked_sqrt(&self) -> Result<f64, JetError> {
        if *self <= 0.0 {
            return Err(JetError::Domain { op: "sqrt", value: *self });
        }
        Ok(f64::sqrt(*self))
    }
    fn checked_ln(&self) -> Result<f64, JetError> {
        if *self <= 0.0 {
            return Err(JetError::Domain { op: "log", value: *self });
        }
        Ok(f64::ln(*self))
    }
    fn exp(&self) -> f64 {
        f64::exp(*self)
    }
    fn sin(&self) -> f64 {
        f64::sin(*self)
    }
    fn cos(&self) -> f64 {
        f64::cos(*self)
    }
    fn powi(&self, n: u32) -> f64 {
        f64::powi(*self, n as i32)
    }
}

impl Scalar for Jet {
    fn lift(&self, c: f64) -> Jet {
        self.constant_like(c)
    }
    fn value(&self) -> f64 {
        Jet::value(self)
    }
    fn checked_div(&self, rhs: &Jet) -> Result<Jet, JetError> {
        self.try_div(rhs)
    }
    fn checked_sqrt(&self) -> Result<Jet, JetError> {
        self.sqrt()
    }
    fn checked_ln(&self) -> Result<Jet, JetError> {
        self.ln()
    }
    fn exp(&self) -> Jet {
        Jet::exp(self)
    }
    fn sin(&self) -> Jet {
        Jet::sin(self)
    }
    fn cos(&self) -> Jet {
        Jet::cos(self)
    }
    fn powi(&self, n: u32) -> Jet {
        Jet::powi(self, n)
    }
}

/// A scalar field on the slit tangent bundle that can be evaluated over any
/// [`Scalar`].
pub trait ScalarField {
    fn dim(&self) -> usize;
    fn eval<S: Scalar>(&self, x: &[S], y: &[S]) -> Result<S, JetError>;
}

/// Coordinate jets `x^i = x0^i + z_i`, `y^i = y0^i + z_{m+i}` at `p`.
pub fn coordinate_jets(space: &Arc<JetSpace>, p: &BasePoint) -> (Vec<Jet>, Vec<Jet>) {
    let m = p.dim();
    let x = (0..m).map(|i| Jet::variable(space, i, p.x[i])).collect();
    let y = (0..m).map(|i| Jet::variable(space, m + i, p.y[i])).collect();
    (x, y)
}

/// Jet of `f` at `p` truncated at total order `order`.
pub fn jet_eval<F: ScalarField + ?Sized>(f: &F, p: &BasePoint, order: usize) -> Result<Jet, Error> {
    p.check_slit()?;
    if f.dim() != p.dim() {
        return Err(Error::DimensionMismatch {
            expected: f.dim(),
            found: p.dim(),
        });
    }
    let space = JetSpace::get(2 * p.dim(), order)?;
    let (x, y) = coordinate_jets(&space, p);
    Ok(f.eval(&x, &y)?)
}

/// `∂^α` of a jet at its center.
pub fn partial(j: &Jet, alpha: &MultiIndex) -> Result<f64, JetError> {
    j.partial(alpha)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn space(nvars: usize, order: usize) -> Arc<JetSpace> {
        JetSpace::get(nvars, order).unwrap()
    }

    #[test]
    fn monomial_counts_are_binomial() {
        // C(n + k, k) monomials of degree <= k in n variables
        assert_eq!(space(6, 5).len(5), 462);
        assert_eq!(space(6, 5).len(2), 28);
        assert_eq!(space(2, 3).len(3), 10);
    }

    #[test]
    fn product_of_variables() {
        let s = space(2, 3);
        let u = Jet::variable(&s, 0, 2.0);
        let v = Jet::variable(&s, 1, -1.0);
        let w = &(&u * &u) * &v; // u^2 v
        let a = MultiIndex::from_counts(vec![2, 1]);
        assert_eq!(w.partial(&a).unwrap(), 2.0);
        let b = MultiIndex::from_counts(vec![1, 1]);
        // ∂u∂v (u^2 v) = 2u = 4
        assert_eq!(w.partial(&b).unwrap(), 4.0);
        assert_eq!(w.value(), -4.0);
    }

    #[test]
    fn derivative_lowers_order() {
        let s = space(2, 3);
        let u = Jet::variable(&s, 0, 1.5);
        let cube = u.powi(3);
        let d = cube.deriv(0).unwrap();
        assert_eq!(d.order(), 2);
        assert!((d.value() - 3.0 * 1.5 * 1.5).abs() < 1e-14);
        let dd = d.deriv(0).unwrap().deriv(0).unwrap().deriv(0);
        assert!(matches!(dd, Err(JetError::Order { .. })));
    }

    #[test]
    fn transcendental_series() {
        let s = space(1, 5);
        let t = Jet::variable(&s, 0, 0.3);
        let e = t.exp();
        for k in 0..=5u8 {
            let a = MultiIndex::from_counts(vec![k]);
            assert!((e.partial(&a).unwrap() - 0.3f64.exp()).abs() < 1e-13);
        }
        let sn = t.sin();
        let third = MultiIndex::from_counts(vec![3]);
        assert!((sn.partial(&third).unwrap() + 0.3f64.cos()).abs() < 1e-13);
        let l = t.ln().unwrap();
        let second = MultiIndex::from_counts(vec![2]);
        assert!((l.partial(&second).unwrap() + 1.0 / 0.09).abs() < 1e-11);
        let r = t.sqrt().unwrap();
        let first = MultiIndex::from_counts(vec![1]);
        assert!((r.partial(&first).unwrap() - 0.5 / 0.3f64.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn domain_errors() {
        let s = space(1, 2);
        let t = Jet::variable(&s, 0, -1.0);
        assert!(matches!(t.sqrt(), Err(JetError::Domain { op: "sqrt", .. })));
        assert!(matches!(t.ln(), Err(JetError::Domain { op: "log", .. })));
        let z = Jet::variable(&s, 0, 0.0);
        assert!(z.recip().is_err());
    }

    #[test]
    fn budget_is_enforced() {
        assert!(matches!(
            JetSpace::get(6, MAX_ORDER + 1),
            Err(JetError::Budget { .. })
        ));
    }

    #[test]
    fn division_inverts_multiplication() {
        let s = space(2, 4);
        let u = Jet::variable(&s, 0, 0.7);
        let v = Jet::variable(&s, 1, 1.3);
        let p = (&u * &v).add_const(2.0);
        let q = (&p * &u).try_div(&p).unwrap();
        for (a, b) in q.coeffs().iter().zip(u.coeffs()) {
            assert!((a - b).abs() < 1e-14);
        }
    }
}
