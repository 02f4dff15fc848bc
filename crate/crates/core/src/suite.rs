//! The full check pipeline: sampling, convention resolution, per-point
//! checks with dependency gating, and the structure classification.
//!
//! Gating follows the dependency chain metric → connection → curvature and
//! almost contact → compatibility → contact → theorems. A failed upstream
//! axiom marks dependants `blocked`; an unmet hypothesis (for example a
//! structure that is not contact along one part) marks them
//! `not-applicable`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::check::{max_abs, CheckEntry, CheckReport};
use crate::config::{PointSource, RunConfig, Tolerances};
use crate::contact::{resolve_contact_convention, ContactConvention, ContactGeometry, ContactTriple, LITERAL_FACTOR};
use crate::curvature::{flag_curvature, hh_curvature, phi_basis, proric_residuals, reeb_ricci, ricci_in_basis, CurvatureSample, gram_schmidt_basis};
use crate::ehresmann::{check_pi_theta, homogeneity_residuals};
use crate::error::{Error, Result};
use crate::fd::{fd_partial_auto, multi_indices, relative_error};
use crate::fields::{random_vector, AffineField, SplitField};
use crate::geometry::{FiberField, Geometry, Part};
use crate::jet::jet_eval;
use crate::metric::{check_finsler, fundamental_tensor, FinslerMetric, MetricKind, SquaredNorm, HOMOGENEITY_LAMBDAS};
use crate::oracle::{christoffel, ricci, riemann, ORACLE_STEP};
use crate::point::BasePoint;

/// Points used to choose the contact convention.
pub const RESOLUTION_POINTS: usize = 5;
/// Highest derivative order compared against finite differences.
pub const FD_ORDER: usize = 4;

/// Uniform `x ∈ [−1, 1]^m`; `y` with uniform direction and `|y| ∈ [0.5, 2]`.
pub fn sample_points(m: usize, count: usize, seed: u64) -> Vec<BasePoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let x: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let dir = loop {
                let v: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let n = v.iter().map(|c| c * c).sum::<f64>().sqrt();
                if n > 1e-3 && n <= 1.0 {
                    break v.into_iter().map(|c| c / n).collect::<Vec<f64>>();
                }
            };
            let r = rng.gen_range(0.5..=2.0);
            BasePoint::new(x, dir.iter().map(|c| c * r).collect()).expect("sampled point is valid")
        })
        .collect()
}

/// Random fields used at one point, drawn from the point's own stream.
#[derive(Clone, Debug, Serialize)]
pub struct PointSamples {
    pub x: SplitField,
    pub y: SplitField,
    pub a: AffineField,
    pub b: AffineField,
    pub c: AffineField,
    pub l: Vec<f64>,
}

impl PointSamples {
    pub fn draw(seed: u64, index: usize, m: usize) -> PointSamples {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index as u64 + 1);
        PointSamples {
            x: SplitField::random(&mut rng, m),
            y: SplitField::random(&mut rng, m),
            a: AffineField::random(&mut rng, m),
            b: AffineField::random(&mut rng, m),
            c: AffineField::random(&mut rng, m),
            l: random_vector(&mut rng, m),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Conventions {
    /// `sΦ = c d^Pη` as resolved, if a triple was configured.
    pub contact: Option<ContactConvention>,
    pub phi_sign_flipped: bool,
    pub notes: Vec<&'static str>,
}

pub const CONVENTION_NOTES: &[&str] = &[
    "horizontal frame: delta_j = d/dx^j - N^i_j d/dy^i",
    "lifts: X^H = X^i delta_i, X^V = F X^i d/dy^i; theta = (dy^i + N^i_j dx^j)/F",
    "exterior differentials d^H, d^V of a p-form carry the prefactor 1/(p+1)",
    "curvature: R(X,Y)Z = nabla_X nabla_Y Z - nabla_Y nabla_X Z - nabla_[X,Y] Z",
    "Ric^H(Z,X) = trace of Y -> R(X,Y^H)Z; for Riemannian metrics this is minus the usual Ricci contraction",
    "flag curvature uses l projected to ker eta with g(l,l) = 1; the Cartan bracket term is reported separately",
];

/// One structure flag aggregated over all points.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StructureFlag {
    pub name: &'static str,
    pub holds: bool,
    pub residual: f64,
    pub tolerance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub blocked_by: Option<&'static str>,
}

#[derive(Clone, Debug)]
pub struct SuiteOutput {
    pub report: CheckReport,
    pub conventions: Conventions,
    pub classification: Vec<StructureFlag>,
    pub points: Vec<BasePoint>,
}

impl SuiteOutput {
    pub fn all_ok(&self) -> bool {
        self.report.all_ok()
    }
}

#[derive(Clone, Debug)]
enum Gate {
    Open,
    Blocked(String),
    Na(String),
}

impl Gate {
    fn open(&self) -> bool {
        matches!(self, Gate::Open)
    }

    /// Narrows an open gate; an already closed gate keeps its reason.
    fn require(&self, ok: bool, closed: impl FnOnce() -> Gate) -> Gate {
        match self {
            Gate::Open if !ok => closed(),
            g => g.clone(),
        }
    }
}

fn blocked(why: &str) -> impl FnOnce() -> Gate + '_ {
    move || Gate::Blocked(why.to_string())
}

fn na(why: &str) -> impl FnOnce() -> Gate + '_ {
    move || Gate::Na(why.to_string())
}

/// Per-point residuals that feed the classification.
#[derive(Clone, Debug, Default)]
struct PointFlags {
    almost_contact: Option<f64>,
    compatible: Option<f64>,
    contact_h: Option<f64>,
    contact_v: Option<f64>,
    normal_h: Option<f64>,
    normal_v: Option<f64>,
    killing_h: Option<f64>,
    killing_v: Option<f64>,
}

struct Emit<'p> {
    p: &'p BasePoint,
    out: Vec<CheckEntry>,
}

impl<'p> Emit<'p> {
    fn skip(&mut self, name: &str, r: &str, gate: &Gate) {
        let e = match gate {
            Gate::Blocked(w) => CheckEntry::blocked(name, r, Some(self.p), w.clone()),
            Gate::Na(w) => CheckEntry::not_applicable(name, r, Some(self.p), w.clone()),
            Gate::Open => unreachable!(),
        };
        self.out.push(e);
    }

    /// Runs a measured check under `gate`; `Some(pass)` if it ran.
    fn measure(&mut self, name: &str, r: &str, gate: &Gate, tol: f64, f: impl FnOnce() -> Result<(f64, Option<Value>)>) -> Option<bool> {
        if !gate.open() {
            self.skip(name, r, gate);
            return None;
        }
        let e = match f() {
            Ok((res, w)) => {
                let e = CheckEntry::measure(name, r, Some(self.p), res, tol);
                match w {
                    Some(w) => e.with_witness(w),
                    None => e,
                }
            }
            Err(err) => CheckEntry::errored(name, r, Some(self.p), &err),
        };
        let pass = e.is_pass();
        self.out.push(e);
        Some(pass)
    }

    fn plain(&mut self, name: &str, r: &str, gate: &Gate, tol: f64, f: impl FnOnce() -> Result<f64>) -> Option<bool> {
        self.measure(name, r, gate, tol, || Ok((f()?, None)))
    }

    /// Joint agreement of two statements.
    fn iff(&mut self, name: &str, r: &str, gate: &Gate, f: impl FnOnce() -> Result<(f64, f64, f64, f64)>) -> Option<bool> {
        self.measure(name, r, gate, 0.0, || {
            let (ra, ta, rb, tb) = f()?;
            let (a, b) = (ra <= ta, rb <= tb);
            Ok((
                if a == b { 0.0 } else { 1.0 },
                Some(json!({ "left": { "residual": ra, "tolerance": ta, "holds": a }, "right": { "residual": rb, "tolerance": tb, "holds": b } })),
            ))
        })
    }
}

fn vecdiff(a: &[f64], b: &[f64]) -> f64 {
    max_abs(a.iter().zip(b).map(|(p, q)| p - q))
}

/// Worst relative disagreement between jet and finite-difference partials
/// of `F²` with `1 ≤ |α| ≤ 4`.
pub fn fd_oracle_residual(f: &FinslerMetric, p: &BasePoint) -> Result<(f64, Value)> {
    let sq = SquaredNorm(f);
    let jet = jet_eval(&sq, p, FD_ORDER)?;
    let mut worst = (0.0f64, Value::Null);
    for alpha in multi_indices(2 * f.dim, FD_ORDER) {
        let a = jet.partial(&alpha)?;
        let b = fd_partial_auto(&sq, p, &alpha)?;
        let r = relative_error(a, b);
        if !(r <= worst.0) {
            worst = (r, json!({ "alpha": alpha.counts(), "jet": a, "fd": b }));
        }
    }
    Ok(worst)
}

fn flat_baseline(geo: &Geometry) -> Result<f64> {
    let m = geo.m;
    let mut r = 0.0f64;
    for i in 0..m {
        for j in 0..m {
            r = r.max((geo.g[i][j].value() - if i == j { 1.0 } else { 0.0 }).abs());
            r = r.max(geo.n[i][j].value().abs());
        }
        r = r.max(geo.spray[i].value().abs());
    }
    r = r.max(max_abs(geo.cartan.iter().map(|c| c.value())));
    r = r.max(max_abs(geo.gamma.iter().map(|c| c.value())));
    r = r.max(max_abs(CurvatureSample::at(geo)?.r));
    Ok(r)
}

fn metric_checks(e: &mut Emit, cfg: &RunConfig, geo: &Geometry, s: &PointSamples, gate: &Gate) -> bool {
    let t = &cfg.tolerances;
    let f = &cfg.metric;
    let p = e.p;
    let m = geo.m;
    let riem = f.is_riemannian();
    e.plain("metric.inverse", "inverse of the fundamental tensor", gate, t.flat, || {
        let mut r = 0.0f64;
        for i in 0..m {
            for k in 0..m {
                let v: f64 = (0..m).map(|j| geo.g[i][j].value() * geo.ginv[j][k].value()).sum();
                r = r.max((v - if i == k { 1.0 } else { 0.0 }).abs());
            }
        }
        Ok(r)
    });
    e.plain("metric.euler", "Euler identity y^i g_ij y^j = F^2", gate, t.euler, || {
        let v: f64 = (0..m).flat_map(|i| (0..m).map(move |j| (i, j))).map(|(i, j)| geo.g[i][j].value() * p.y[i] * p.y[j]).sum();
        Ok(relative_error(v, geo.f2.value()))
    });
    e.plain("metric.g_homogeneity", "fundamental tensor is 0-homogeneous in y", gate, t.euler, || {
        let g0 = fundamental_tensor(f, p)?;
        let mut r = 0.0f64;
        for l in HOMOGENEITY_LAMBDAS {
            let g1 = fundamental_tensor(f, &p.scaled(l))?;
            r = r.max(max_abs((g1 - &g0).iter().copied()) / max_abs(g0.iter().copied()).max(1.0));
        }
        Ok(r)
    });
    e.plain("cartan.symmetry", "Cartan tensor is totally symmetric", gate, t.euler, || {
        let mut r = 0.0f64;
        for i in 0..m {
            for j in 0..m {
                for k in 0..m {
                    let a = geo.cartan(i, j, k).value();
                    r = r.max((a - geo.cartan(j, i, k).value()).abs()).max((a - geo.cartan(i, k, j).value()).abs());
                }
            }
        }
        Ok(r)
    });
    e.plain("cartan.euler", "A_ijk y^k = 0", gate, t.euler, || {
        Ok(max_abs((0..m * m).map(|ij| (0..m).map(|k| geo.cartan[ij * m + k].value() * p.y[k]).sum::<f64>())))
    });
    let g_riem = gate.require(riem, na("metric is not Riemannian"));
    e.plain("cartan.riemannian", "Riemannian case: the Cartan tensor vanishes", &g_riem, t.exact, || {
        Ok(max_abs(geo.cartan.iter().map(|c| c.value())))
    });
    e.measure("jet.fd_oracle", "jet partials of F^2 against finite differences", gate, t.level3, || {
        let (r, w) = fd_oracle_residual(f, p)?;
        Ok((r, Some(w)))
    });
    let g_flat = gate.require(matches!(f.kind, MetricKind::Euclidean), na("metric is not Euclidean"));
    e.plain("flat.baseline", "flat space: g = I and A, G, N, Gamma, R vanish", &g_flat, t.flat, || flat_baseline(geo));
    e.plain("ehresmann.pi_theta", "pi* and theta on horizontal and vertical lifts", gate, t.euler, || {
        Ok(check_pi_theta(f, p, &s.c.c, 0.0)?.residual)
    });
    let homog = homogeneity_residuals(f, p, &[0.5, 2.0]);
    e.plain("spray.homogeneity", "spray coefficients are 2-homogeneous in y", gate, t.euler, || Ok(homog.as_ref().map_err(clone_err)?.0));
    e.plain("nonlinear.homogeneity", "nonlinear connection is 1-homogeneous in y", gate, t.euler, || {
        Ok(homog.as_ref().map_err(clone_err)?.1)
    });
    let lc = if riem && gate.open() { Some(christoffel(f, &p.x, ORACLE_STEP)) } else { None };
    let lc_ref = || -> Result<&crate::metric::Array3> { lc.as_ref().expect("Riemannian").as_ref().map_err(clone_err) };
    e.plain("spray.riemannian_reduction", "Riemannian case: G^i = 1/2 gamma^i_jk y^j y^k", &g_riem, t.level1, || {
        let gam = lc_ref()?;
        Ok(max_abs((0..m).map(|i| {
            let want: f64 = (0..m).flat_map(|j| (0..m).map(move |k| (j, k))).map(|(j, k)| 0.5 * gam.get(i, j, k) * p.y[j] * p.y[k]).sum();
            geo.spray[i].value() - want
        })))
    });
    e.plain("nonlinear.riemannian_reduction", "Riemannian case: N^i_j = gamma^i_jk y^k", &g_riem, t.level1, || {
        let gam = lc_ref()?;
        Ok(max_abs((0..m * m).map(|ij| {
            let (i, j) = (ij / m, ij % m);
            geo.n[i][j].value() - (0..m).map(|k| gam.get(i, j, k) * p.y[k]).sum::<f64>()
        })))
    });
    e.plain("chern.riemannian_reduction", "Riemannian case: Chern connection is Levi-Civita", &g_riem, t.level1, || {
        let gam = lc_ref()?;
        Ok(vecdiff(&geo.gamma.iter().map(|c| c.value()).collect::<Vec<_>>(), &gam.data))
    });
    let ax = crate::chern::axiom_residuals(geo, &s.x, &s.y, &s.a, &s.b, &s.c);
    let mut conn_ok = true;
    for (name, r, pick) in [
        ("chern.symmetry", "Chern connection, symmetry axiom", 0),
        ("chern.compat_h", "Chern connection, almost g-compatibility along horizontal lifts", 1),
        ("chern.compat_v", "Chern connection, almost g-compatibility along vertical lifts", 2),
    ] {
        let ok = e.plain(name, r, gate, t.level1, || {
            let a = ax.as_ref().map_err(clone_err)?;
            Ok([a.symmetry, a.compat_h, a.compat_v][pick])
        });
        conn_ok &= ok.unwrap_or(false);
    }
    let g_conn = gate.require(conn_ok, blocked("Chern connection axioms fail"));
    let (xa, yb, zc) = (s.a.jets(geo), s.b.jets(geo), s.c.jets(geo));
    e.plain("curvature.antisymmetry", "R(X,Y)Z = -R(Y,X)Z", &g_conn, t.euler, || {
        let (_, a) = hh_curvature(geo, &xa, &yb, &zc)?;
        let (_, b) = hh_curvature(geo, &yb, &xa, &zc)?;
        Ok(max_abs(a.iter().zip(&b).map(|(p, q)| p + q)))
    });
    e.plain("curvature.coordinate_vs_abstract", "hh-curvature: coordinate formula against the abstract definition", &g_conn, t.level2, || {
        let (c, a) = hh_curvature(geo, &xa, &yb, &zc)?;
        Ok(vecdiff(&c, &a))
    });
    let g_rc = g_conn.require(riem, na("metric is not Riemannian"));
    let oracle_r = || riemann(f, &p.x, ORACLE_STEP);
    e.plain("curvature.riemannian_reduction", "Riemannian case: hh-curvature is the Riemann tensor", &g_rc, t.level2, || {
        Ok(vecdiff(&CurvatureSample::at(geo)?.r, &oracle_r()?))
    });
    e.measure("ricci.riemannian_reduction", "Riemannian case: Ric^H against the Ricci contraction (opposite sign)", &g_rc, t.level2, || {
        let r = oracle_r()?;
        let ric = ricci(&r, m);
        let cs = CurvatureSample::at(geo)?;
        let basis = gram_schmidt_basis(geo)?;
        let (z, x) = (s.a.c.clone(), s.b.c.clone());
        let ours = ricci_in_basis(geo, &cs, &z, &x, &basis)?;
        let usual: f64 = (0..m).flat_map(|j| (0..m).map(move |k| (j, k))).map(|(j, k)| ric[(j, k)] * z[j] * x[k]).sum();
        Ok(((ours + usual).abs(), Some(json!({ "ric_h": ours, "usual_ricci": usual }))))
    });
    conn_ok
}

fn clone_err(e: &Error) -> Error {
    Error::Config(e.to_string())
}

fn contact_checks(e: &mut Emit, cfg: &RunConfig, conv: &ContactConvention, cg: &ContactGeometry, s: &PointSamples, gate: &Gate, conn_ok: bool, flags: &mut PointFlags) {
    let t: &Tolerances = &cfg.tolerances;
    let geo = cg.geo;
    let m = geo.m;
    let (a, b, c) = (s.a.jets(geo), s.b.jets(geo), s.c.jets(geo));
    let (sx, sy) = (s.x.jets(geo), s.y.jets(geo));
    let basis: Vec<FiberField> = (0..m).map(|k| geo.basis_field(k)).collect();

    let (phi2, exi) = cg.almost_contact();
    let ac1 = e.plain("contact.phi_squared", "almost contact axiom phi^2 = -I + eta (x) xi", gate, t.exact, || Ok(phi2));
    let ac2 = e.plain("contact.eta_xi", "almost contact axiom eta(xi) = 1", gate, t.exact, || Ok(exi));
    let ac_ok = ac1.unwrap_or(false) && ac2.unwrap_or(false);
    if gate.open() {
        flags.almost_contact = Some(phi2.max(exi));
    }
    let g_ac = gate.require(ac_ok, blocked("almost contact axioms fail"));
    let (pxi, ephi, rank) = cg.derived();
    e.plain("contact.phi_xi", "consequence phi(xi) = 0", &g_ac, t.exact, || Ok(pxi));
    e.plain("contact.eta_phi", "consequence eta o phi = 0", &g_ac, t.exact, || Ok(ephi));
    e.measure("contact.rank", "consequence: phi has rank 2n", &g_ac, 0.0, || {
        Ok((if rank == m - 1 { 0.0 } else { 1.0 }, Some(json!({ "rank": rank, "expected": m - 1 }))))
    });

    let compat = max_abs([cg.compatibility(&a, &b), cg.compatibility(&b, &c), cg.compatibility(&cg.xi, &cg.xi), cg.compatibility(&a, &a)]);
    let cm = e.plain("contact.compatibility", "g compatible with the structure", &g_ac, t.flat, || Ok(compat));
    if g_ac.open() {
        flags.compatible = Some(compat);
    }
    let g_cm = g_ac.require(cm.unwrap_or(false), blocked("metric is not compatible with the triple"));
    e.plain("contact.two_form", "Phi(xi, Y) = 0 and Phi(X, X) = 0", &g_cm, t.euler, || {
        Ok(max_abs([cg.fundamental_two_form(&cg.xi, &b), cg.fundamental_two_form(&a, &a), cg.fundamental_two_form(&c, &c)]))
    });
    e.plain("contact.exterior_antisymmetry", "d^H eta and d^V eta are alternating", &g_ac, t.euler, || {
        let mut r = 0.0f64;
        for part in [Part::H, Part::V] {
            r = r.max((cg.d_eta(part, &a, &b)? + cg.d_eta(part, &b, &a)?).value().abs());
        }
        Ok(r)
    });
    e.plain("contact.d_eta_nabla", "d^H eta(X,Y) = 1/2 (g(Y, nabla_X^H xi) - g(X, nabla_Y^H xi))", &g_cm, t.level1, || {
        let lhs = cg.d_eta(Part::H, &a, &b)?;
        let rhs = (geo.inner(&b, &geo.nabla(&geo.hlift(&a), &cg.xi)?) - geo.inner(&a, &geo.nabla(&geo.hlift(&b), &cg.xi)?)).scale(0.5);
        Ok((lhs - rhs).value().abs())
    });

    // contact condition under the resolved convention
    let contact_res = |part: Part| -> Result<f64> {
        let mut pairs: Vec<(&FiberField, &FiberField)> = vec![(&a, &b), (&b, &c)];
        for i in 0..m {
            for j in i + 1..m {
                pairs.push((&basis[i], &basis[j]));
            }
        }
        let mut r = 0.0f64;
        for (u, w) in pairs {
            let (phi, d) = cg.contact_pair(part, u, w)?;
            r = r.max((phi - conv.factor * d).abs());
        }
        Ok(r)
    };
    let (mut contact_h, mut contact_v) = (false, false);
    e.measure("contact.condition", "contact condition Phi = 2 d^H eta or Phi = 2 d^V eta", &g_cm, t.level1, || {
        let (rh, rv) = (contact_res(Part::H)?, contact_res(Part::V)?);
        contact_h = rh <= t.level1;
        contact_v = rv <= t.level1;
        flags.contact_h = Some(rh);
        flags.contact_v = Some(rv);
        Ok((rh.min(rv), Some(json!({ "horizontal": rh, "vertical": rv, "factor": conv.factor, "phi_sign": conv.phi_sign }))))
    });
    let g_h = g_cm.require(contact_h, na("not a horizontally contact metric structure"));
    let g_v = g_cm.require(contact_v, na("not a vertically contact metric structure"));

    // normality tensors
    let n1 = |part: Part| -> Result<f64> {
        Ok(max_abs(
            cg.n1(part, &a, &b)?.values().into_iter().chain(cg.n1(part, &basis[0], &basis[1])?.values()),
        ))
    };
    let killing = |part: Part| -> Result<f64> { Ok(cg.killing(part, &a, &b)?.abs().max(cg.killing(part, &a, &a)?.abs())) };
    let n2 = |part: Part| -> Result<f64> { Ok(cg.n2(part, &a, &b)?.value().abs().max(cg.n2(part, &b, &c)?.value().abs())) };
    let n3 = |part: Part| -> Result<f64> { Ok(max_abs(cg.n3(part, &a)?.values())) };
    let n4 = |part: Part| -> Result<f64> {
        Ok(max_abs(basis.iter().chain([&a]).map(|u| cg.n4(part, u).map(|v| v.value())).collect::<Result<Vec<_>>>()?))
    };
    let mut n1_ok = [false, false];
    for (k, part, tag) in [(0, Part::H, "h"), (1, Part::V, "v")] {
        if g_ac.open() {
            let r1 = n1(part).ok();
            let rk = killing(part).ok();
            n1_ok[k] = r1.map(|r| r <= t.level2).unwrap_or(false);
            if k == 0 {
                flags.normal_h = r1;
                flags.killing_h = rk;
            } else {
                flags.normal_v = r1;
                flags.killing_v = rk;
            }
        }
        let g_part = if k == 0 { &g_h } else { &g_v };
        let word = if k == 0 { "horizontal" } else { "vertical" };
        e.plain(&format!("normality.n2_{tag}"), &format!("contact metric theorem: {word} N2 vanishes"), g_part, t.level2, || n2(part));
        e.plain(&format!("normality.n4_{tag}"), &format!("contact metric theorem: {word} N4 vanishes"), g_part, t.level2, || n4(part));
        e.iff(&format!("normality.n3_killing_{tag}"), &format!("{word} N3 vanishes iff xi is {word}ly Killing"), g_part, || {
            Ok((n3(part)?, t.level2, killing(part)?, t.level2))
        });
        let g_norm = g_ac.require(n1_ok[k], na(if k == 0 { "not horizontally normal" } else { "not vertically normal" }));
        e.plain(&format!("normality.n1_consequences_{tag}"), &format!("{word} normality forces N2, N3, N4 to vanish"), &g_norm, t.level2, || {
            Ok(n2(part)?.max(n3(part)?).max(n4(part)?))
        });
    }

    // h and v
    for (part, tag, g_part) in [(Part::H, "h", &g_h), (Part::V, "v", &g_v)] {
        let op = cg.operator(part);
        let alg = op.as_ref().map_err(clone_err).and_then(|o| cg.operator_algebra(o));
        let get = |f: fn(&crate::contact::OperatorAlgebra) -> f64| -> Result<f64> { Ok(f(alg.as_ref().map_err(clone_err)?)) };
        e.plain(&format!("operator.{tag}_xi"), &format!("{tag} xi = 0"), &g_ac, t.euler, || get(|a| a.on_xi));
        e.plain(&format!("operator.{tag}_symmetry"), &format!("{tag} is a symmetric operator"), g_part, t.level2, || get(|a| a.symmetry));
        e.plain(&format!("operator.{tag}_anticommute"), &format!("{tag} anti-commutes with phi"), g_part, t.level2, || get(|a| a.anticommute));
        e.plain(&format!("operator.{tag}_trace"), &format!("trace_g {tag} = 0"), g_part, t.level2, || get(|a| a.trace.abs()));
        e.measure(&format!("operator.{tag}_eigen_pairing"), &format!("eigenvalues of {tag} come in pairs +-lambda"), g_part, t.level2, || {
            let a = alg.as_ref().map_err(clone_err)?;
            Ok((a.eigen_pairing, Some(json!({ "eigenvalues": a.eigenvalues }))))
        });
    }

    // covariant derivative of phi
    e.measure("contact.dcfi", "covariant derivative of phi, full identity", &g_cm, t.level2, || {
        let (l, r) = cg.dcfi(&sx, &a, &b)?;
        Ok(((l - r).abs(), Some(json!({ "lhs": l, "rhs": r }))))
    });
    e.measure("contact.dcfi_vertical", "vertical covariant derivative of phi", &g_cm, t.level2, || {
        let (l, r) = cg.dcfi_vertical(&c, &a, &b)?;
        Ok(((l - r).abs(), Some(json!({ "lhs": l, "rhs": r }))))
    });
    e.plain("contact.dcfi_contact", "covariant derivative of phi on a contact metric structure", &g_h, t.level2, || {
        let (l, r) = cg.dcfi_contact(&sy, &b, &c)?;
        Ok((l - r).abs())
    });
    let sas = || -> Result<f64> { Ok(max_abs(cg.sasakian(&sx, &a)?.into_iter().chain(cg.sasakian(&geo.hlift(&b), &cg.xi)?))) };
    let mut sasakian = false;
    e.iff("sasakian.characterization", "horizontally Sasakian iff the formula for nabla phi holds", &g_h, || {
        let (rs, rn) = (sas()?, n1(Part::H)?);
        sasakian = rn <= t.level2;
        Ok((rs, t.level2, rn, t.level2))
    });
    let g_sas = g_h.require(sasakian, na("not horizontally Sasakian"));
    e.plain("sasakian.nabla_xi_phi", "Sasakian: nabla_xi^H phi = 0 and the xi^V formula", &g_sas, t.level2, || {
        let nh = geo.nabla_tensor(&geo.hlift(&cg.xi), &cg.phi)?;
        Ok(max_abs(nh.values().into_iter().chain(cg.nabla_xi_v_phi(&a)?)))
    });
    e.plain("contact.nabla_xi", "covariant derivative of xi on a contact metric structure", &g_h, t.level2, || {
        let (l, r) = cg.nabla_xi(&sx)?;
        let (l2, r2) = cg.nabla_xi(&geo.hlift(&a))?;
        Ok(vecdiff(&l, &r).max(vecdiff(&l2, &r2)))
    });
    e.plain("contact.nabla_xi_xi", "nabla_xi^H xi = 0", &g_h, t.level1, || Ok(max_abs(cg.nabla_xi(&geo.hlift(&cg.xi))?.0)));

    // curvature of contact metric structures
    let g_hc = g_h.require(conn_ok, blocked("Chern connection axioms fail"));
    let g_cc = g_cm.require(conn_ok, blocked("Chern connection axioms fail"));
    let cs = if g_cc.open() { Some(CurvatureSample::at(geo)) } else { None };
    let cs_ref = || -> Result<&CurvatureSample> { cs.as_ref().expect("curvature").as_ref().map_err(clone_err) };
    e.measure("curvature.proric", "nabla_xi^H h displays on a contact metric structure", &g_hc, t.level3, || {
        let (r1, r2) = proric_residuals(cg, cs_ref()?, &a)?;
        Ok((r1.max(r2), Some(json!({ "first": r1, "second": r2 }))))
    });
    let rr = if g_cc.open() { Some(cs_ref().and_then(|cs| reeb_ricci(cg, cs))) } else { None };
    let rr_ref = || -> Result<&crate::curvature::ReebRicci> { rr.as_ref().expect("ricci").as_ref().map_err(clone_err) };
    e.plain("ricci.two_basis", "Ric^H trace: Gram-Schmidt basis against the phi-basis", &g_cc, t.level1, || {
        let r = rr_ref()?;
        phi_basis(cg)?;
        Ok((r.lhs - r.lhs_phi_basis).abs())
    });
    e.measure("ricci.xi", "Ric^H(xi, xi^H) = -2n + 2 trace h^2 + Cartan terms", &g_hc, t.level3, || {
        let r = rr_ref()?;
        Ok(((r.lhs - r.prop_rhs).abs(), Some(serde_json::to_value(r)?)))
    });
    let mut k_contact = false;
    e.iff("ricci.k_contact_iff", "horizontally K-contact iff the Reeb Ricci display holds", &g_hc, || {
        let r = rr_ref()?;
        let kr = killing(Part::H)?;
        k_contact = kr <= t.level2;
        Ok((kr, t.level2, (r.lhs - r.theorem_rhs).abs(), t.level3))
    });
    let g_k = g_hc.require(k_contact, na("not horizontally K-contact"));
    e.measure("ricci.k_contact", "K-contact: Ric^H(xi, xi^H) = -2n + Cartan terms", &g_k, t.level3, || {
        let r = rr_ref()?;
        Ok(((r.lhs - r.theorem_rhs).abs(), Some(json!({ "lhs": r.lhs, "rhs": r.theorem_rhs }))))
    });
    e.plain("ricci.forms_consistency", "both Reeb Ricci displays agree when h = 0", &g_k, t.level1, || {
        let r = rr_ref()?;
        Ok((r.prop_rhs - r.theorem_rhs).abs())
    });
    e.measure("flag.transverse", "K-contact: flag curvature with transverse edge xi equals 1", &g_k, t.level3, || {
        let fl = flag_curvature(cg, cs_ref()?, &s.l)?;
        Ok(((fl.k - 1.0).abs(), Some(serde_json::to_value(&fl)?)))
    });
}

fn eval_point(cfg: &RunConfig, triple: Option<&ContactTriple>, conv: &ContactConvention, idx: usize, p: &BasePoint) -> (Vec<CheckEntry>, PointFlags) {
    let mut e = Emit { p, out: Vec::new() };
    let mut flags = PointFlags::default();
    let s = PointSamples::draw(cfg.seed, idx, cfg.metric.dim);
    let t = &cfg.tolerances;
    e.out.extend(check_finsler(&cfg.metric, p, &HOMOGENEITY_LAMBDAS, t.exact));
    let pd_ok = e.out.iter().all(|x| x.name == "finsler.homogeneity" || x.is_pass());
    let mut gate = Gate::Open.require(pd_ok, blocked("F is not a Finsler structure at this point"));
    let geo = if gate.open() {
        match Geometry::new(&cfg.metric, p, cfg.jet_order) {
            Ok(g) => Some(g),
            Err(err) => {
                e.out.push(CheckEntry::errored("metric.geometry", "jets of the metric tower", Some(p), &err));
                gate = Gate::Blocked(format!("metric tower unavailable: {err}"));
                None
            }
        }
    } else {
        None
    };
    let conn_ok = match &geo {
        Some(g) => metric_checks(&mut e, cfg, g, &s, &gate),
        None => {
            skip_all(&mut e, &gate, METRIC_CHECKS);
            false
        }
    };
    match (triple, &geo) {
        (None, _) => skip_all(&mut e, &Gate::Na("no contact triple configured".into()), CONTACT_CHECKS),
        (Some(_), None) => skip_all(&mut e, &gate, CONTACT_CHECKS),
        (Some(tr), Some(g)) => match ContactGeometry::new(g, tr) {
            Ok(cg) => contact_checks(&mut e, cfg, conv, &cg, &s, &gate, conn_ok, &mut flags),
            Err(err) => {
                e.out.push(CheckEntry::errored("contact.triple", "jets of the contact triple", Some(p), &err));
                skip_all(&mut e, &Gate::Blocked(format!("triple unavailable: {err}")), CONTACT_CHECKS);
            }
        },
    }
    (e.out, flags)
}

/// Names emitted by [`metric_checks`], for skipped points.
const METRIC_CHECKS: &[&str] = &[
    "metric.inverse", "metric.euler", "metric.g_homogeneity", "cartan.symmetry", "cartan.euler", "cartan.riemannian", "jet.fd_oracle",
    "flat.baseline", "ehresmann.pi_theta", "spray.homogeneity", "nonlinear.homogeneity", "spray.riemannian_reduction",
    "nonlinear.riemannian_reduction", "chern.riemannian_reduction", "chern.symmetry", "chern.compat_h", "chern.compat_v",
    "curvature.antisymmetry", "curvature.coordinate_vs_abstract", "curvature.riemannian_reduction", "ricci.riemannian_reduction",
];

/// Names emitted by [`contact_checks`], for skipped points.
const CONTACT_CHECKS: &[&str] = &[
    "contact.phi_squared", "contact.eta_xi", "contact.phi_xi", "contact.eta_phi", "contact.rank", "contact.compatibility",
    "contact.two_form", "contact.exterior_antisymmetry", "contact.d_eta_nabla", "contact.condition", "normality.n2_h",
    "normality.n4_h", "normality.n3_killing_h", "normality.n1_consequences_h", "normality.n2_v", "normality.n4_v",
    "normality.n3_killing_v", "normality.n1_consequences_v", "operator.h_xi", "operator.h_symmetry", "operator.h_anticommute",
    "operator.h_trace", "operator.h_eigen_pairing", "operator.v_xi", "operator.v_symmetry", "operator.v_anticommute",
    "operator.v_trace", "operator.v_eigen_pairing", "contact.dcfi", "contact.dcfi_vertical", "contact.dcfi_contact",
    "sasakian.characterization", "sasakian.nabla_xi_phi", "contact.nabla_xi", "contact.nabla_xi_xi", "curvature.proric",
    "ricci.two_basis", "ricci.xi", "ricci.k_contact_iff", "ricci.k_contact", "ricci.forms_consistency", "flag.transverse",
];

/// Every per-point check name in emission order.
pub fn check_names() -> Vec<&'static str> {
    ["finsler.positivity", "finsler.homogeneity", "finsler.positive_definite"]
        .into_iter()
        .chain(METRIC_CHECKS.iter().copied())
        .chain(CONTACT_CHECKS.iter().copied())
        .collect()
}

fn skip_all(e: &mut Emit, gate: &Gate, names: &[&str]) {
    for n in names {
        e.skip(n, "skipped", gate);
    }
}

/// Measured `(Φ, d^Hη)` and `(Φ, d^Vη)` pairs on the first points.
fn convention_pairs(cfg: &RunConfig, triple: &ContactTriple, points: &[BasePoint]) -> (Vec<(f64, f64)>, Vec<(f64, f64)>) {
    let (mut h, mut v) = (Vec::new(), Vec::new());
    for (idx, p) in points.iter().enumerate().take(RESOLUTION_POINTS) {
        let Ok(geo) = Geometry::new(&cfg.metric, p, cfg.jet_order) else { continue };
        let Ok(cg) = ContactGeometry::new(&geo, triple) else { continue };
        let s = PointSamples::draw(cfg.seed, idx, geo.m);
        let (a, b) = (s.a.jets(&geo), s.b.jets(&geo));
        let mut pairs = vec![(a.clone(), b.clone())];
        for i in 0..geo.m {
            for j in i + 1..geo.m {
                pairs.push((geo.basis_field(i), geo.basis_field(j)));
            }
        }
        for (x, y) in &pairs {
            if let Ok(q) = cg.contact_pair(Part::H, x, y) {
                h.push(q);
            }
            if let Ok(q) = cg.contact_pair(Part::V, x, y) {
                v.push(q);
            }
        }
    }
    (h, v)
}

/// Chooses the contact convention on the parts jointly: the first
/// combination that fits on either part wins, literal first.
pub fn resolve_convention(h: &[(f64, f64)], v: &[(f64, f64)], tol: f64) -> ContactConvention {
    let ch = resolve_contact_convention(h, tol);
    let cv = resolve_contact_convention(v, tol);
    let literal = ch.literal_residual.min(cv.literal_residual);
    let mut best = if ch.residual <= tol && (cv.residual > tol || rank(&ch) <= rank(&cv)) { ch } else { cv };
    if best.residual > tol {
        best = ContactConvention {
            factor: LITERAL_FACTOR,
            phi_sign: 1.0,
            literal_residual: literal,
            residual: literal,
        };
    }
    best.literal_residual = literal;
    best
}

fn rank(c: &ContactConvention) -> usize {
    match (c.factor == LITERAL_FACTOR, c.phi_sign > 0.0) {
        (true, true) => 0,
        (false, true) => 1,
        (true, false) => 2,
        (false, false) => 3,
    }
}

fn classify(per_point: &[PointFlags], t: &Tolerances) -> Vec<StructureFlag> {
    let agg = |get: fn(&PointFlags) -> Option<f64>, tol: f64| -> (bool, f64) {
        let vals: Vec<Option<f64>> = per_point.iter().map(get).collect();
        let all = vals.iter().all(|v| v.is_some_and(|r| r <= tol));
        let worst = vals.iter().map(|v| v.unwrap_or(f64::NAN)).fold(0.0f64, |a, b| if b.is_nan() || a.is_nan() { f64::NAN } else { a.max(b) });
        (all, worst)
    };
    let mut out: Vec<StructureFlag> = Vec::new();
    let push = |name: &'static str, own: (bool, f64), tol: f64, prereq: &[&'static str], out: &mut Vec<StructureFlag>| {
        let blocked_by = prereq.iter().copied().find(|p| out.iter().any(|f| f.name == *p && !f.holds));
        out.push(StructureFlag {
            name,
            holds: own.0 && blocked_by.is_none(),
            residual: own.1,
            tolerance: tol,
            blocked_by,
        });
    };
    push("almost-contact", agg(|f| f.almost_contact, t.exact), t.exact, &[], &mut out);
    push("compatible-metric", agg(|f| f.compatible, t.flat), t.flat, &["almost-contact"], &mut out);
    push("contact-metric-H", agg(|f| f.contact_h, t.level1), t.level1, &["compatible-metric"], &mut out);
    push("contact-metric-V", agg(|f| f.contact_v, t.level1), t.level1, &["compatible-metric"], &mut out);
    push("normal-H", agg(|f| f.normal_h, t.level2), t.level2, &["almost-contact"], &mut out);
    push("normal-V", agg(|f| f.normal_v, t.level2), t.level2, &["almost-contact"], &mut out);
    push("K-contact-H", agg(|f| f.killing_h, t.level2), t.level2, &["contact-metric-H"], &mut out);
    push("K-contact-V", agg(|f| f.killing_v, t.level2), t.level2, &["contact-metric-V"], &mut out);
    push("Sasakian-H", agg(|f| f.normal_h, t.level2), t.level2, &["contact-metric-H", "normal-H"], &mut out);
    push("Sasakian-V", agg(|f| f.normal_v, t.level2), t.level2, &["contact-metric-V", "normal-V"], &mut out);
    out
}

pub fn resolve_points(cfg: &RunConfig) -> Vec<BasePoint> {
    match &cfg.points {
        PointSource::Explicit(p) => p.clone(),
        PointSource::Sampler { count } => sample_points(cfg.metric.dim, *count, cfg.seed),
    }
}

pub fn run_suite(cfg: &RunConfig) -> SuiteOutput {
    let points = resolve_points(cfg);
    let (triple, conv) = match &cfg.triple {
        Some(t) => {
            let (h, v) = convention_pairs(cfg, t, &points);
            let conv = resolve_convention(&h, &v, cfg.tolerances.level1);
            (Some(t.clone().with_phi_sign(t.phi_sign * conv.phi_sign)), Some(conv))
        }
        None => (None, None),
    };
    let fallback = ContactConvention {
        factor: LITERAL_FACTOR,
        phi_sign: 1.0,
        literal_residual: f64::NAN,
        residual: f64::NAN,
    };
    let results: Vec<(Vec<CheckEntry>, PointFlags)> = points
        .par_iter()
        .enumerate()
        .map(|(i, p)| eval_point(cfg, triple.as_ref(), conv.as_ref().unwrap_or(&fallback), i, p))
        .collect();
    let mut report = CheckReport::default();
    let mut flags = Vec::with_capacity(results.len());
    for (entries, f) in results {
        report.extend(entries.into_iter().filter(|e| cfg.selects(&e.name)));
        flags.push(f);
    }
    let classification = if triple.is_some() { classify(&flags, &cfg.tolerances) } else { Vec::new() };
    SuiteOutput {
        report,
        conventions: Conventions {
            phi_sign_flipped: conv.is_some_and(|c| c.phi_sign < 0.0),
            contact: conv,
            notes: CONVENTION_NOTES.to_vec(),
        },
        classification,
        points,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::check::Status;
    use crate::config::parse_config;

    #[test]
    fn sampler_respects_bounds_and_is_deterministic() {
        let a = sample_points(3, 50, 7);
        assert_eq!(a, sample_points(3, 50, 7));
        for p in &a {
            assert!(p.x.iter().all(|c| c.abs() <= 1.0));
            assert!((0.5 - 1e-12..=2.0 + 1e-12).contains(&p.y_norm()));
        }
        assert_ne!(a, sample_points(3, 50, 8));
    }

    #[test]
    fn convention_prefers_literal() {
        let pairs = [(2.0, 1.0), (-4.0, -2.0)];
        let c = resolve_convention(&pairs, &pairs, 1e-9);
        assert_eq!((c.factor, c.phi_sign), (2.0, 1.0));
        let halves = [(1.0, 1.0), (-2.0, -2.0)];
        let c = resolve_convention(&halves, &pairs, 1e-9);
        assert_eq!((c.factor, c.phi_sign), (2.0, 1.0));
        let c = resolve_convention(&halves, &[(1.0, 0.0)], 1e-9);
        assert_eq!((c.factor, c.phi_sign, c.literal_residual), (1.0, 1.0, 1.0));
    }

    #[test]
    fn heisenberg_suite_passes() {
        let cfg = parse_config(r#"{"metric": "heisenberg3", "sampler": {"seed": 3, "count": 4}}"#).unwrap();
        let out = run_suite(&cfg);
        let bad: Vec<_> = out.report.entries.iter().filter(|e| matches!(e.status, Status::Fail | Status::Blocked)).collect();
        assert!(bad.is_empty(), "{bad:#?}");
        assert_eq!(out.conventions.contact.unwrap().factor, 1.0);
        let holds = |n: &str| out.classification.iter().find(|f| f.name == n).unwrap().holds;
        assert!(holds("Sasakian-H") && holds("K-contact-H") && !holds("contact-metric-V"));
    }

    #[test]
    fn randers_without_triple_skips_contact() {
        let cfg = parse_config(r#"{"metric": "randers3", "sampler": {"count": 2}}"#).unwrap();
        let out = run_suite(&cfg);
        assert!(out.all_ok());
        assert!(out.report.named("contact.phi_squared").all(|e| e.status == Status::NotApplicable));
        assert!(out.report.named("chern.compat_v").all(|e| e.is_pass()));
    }

    #[test]
    fn broken_triple_blocks_downstream() {
        let cfg = parse_config(
            r#"{"metric": "heisenberg3", "sampler": {"count": 2},
                "triple": {"phi": [["0","1","0"],["0-1","0","0"],["0","x2","0"]], "eta": ["0-0.5*x2","0","0.5"], "xi": ["0","0","4"]}}"#,
        )
        .unwrap();
        let out = run_suite(&cfg);
        assert!(!out.all_ok());
        assert!(out.report.named("contact.eta_xi").all(|e| e.status == Status::Fail));
        assert!(out.report.named("contact.condition").all(|e| e.status == Status::Blocked));
        assert!(out.report.named("chern.symmetry").all(|e| e.is_pass()));
        assert_eq!(out.classification[0].name, "almost-contact");
        assert!(!out.classification[0].holds);
        assert_eq!(out.classification[1].blocked_by, Some("almost-contact"));
    }

    #[test]
    fn every_point_emits_every_check() {
        let cfg = parse_config(r#"{"metric": "randers3", "triple": "cartan-frame", "sampler": {"count": 2}}"#).unwrap();
        let out = run_suite(&cfg);
        let names = check_names();
        assert_eq!(out.report.entries.len(), 2 * names.len());
        for (e, n) in out.report.entries.iter().zip(names.iter().cycle()) {
            assert_eq!(&e.name, n);
        }
    }
}
