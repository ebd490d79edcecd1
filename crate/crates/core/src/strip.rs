//! Strip measures, strip densities and probes of the renormalization
//! inequalities between them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::events::CrossingEvent;
use crate::fit::{wls, LineFit};
use crate::lattice::{build_region, Lattice, Rect, Region};
use crate::measure::{BoundaryCondition, ModelParams};
use crate::sampler::{estimate_both, Estimate, Method, Schedule, SplitOptions};

/// Boundary condition on a strip: free, wired, or wired along the bottom only.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum StripBc {
    #[serde(rename = "0")]
    Free,
    #[serde(rename = "1")]
    Wired,
    #[serde(rename = "0/1")]
    Dobrushin,
}

impl StripBc {
    pub fn build(self, region: &Region) -> BoundaryCondition {
        match self {
            StripBc::Free => BoundaryCondition::free(region),
            StripBc::Wired => BoundaryCondition::wired(region),
            StripBc::Dobrushin => BoundaryCondition::dobrushin(region),
        }
    }
}

/// The truncated strip `[-m,m] x [-n,2n]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StripSpec {
    pub n: i32,
    pub bc: StripBc,
    pub m: i32,
}

impl StripSpec {
    pub fn rect(&self) -> Rect {
        Rect { a: -self.m, b: self.m, c: -self.n, d: 2 * self.n }
    }

    fn check(&self, ev: &CrossingEvent) -> Result<()> {
        if self.n < 1 || self.m < 1 {
            return Err(Error::InvalidInput("strip needs n >= 1 and m >= 1".into()));
        }
        let s = ev.support()?;
        let extent = s.a.abs().max(s.b.abs());
        if s.c < -self.n || s.d > 2 * self.n {
            return Err(Error::InvalidInput(format!("event {} leaves the strip height", ev.label())));
        }
        if self.m < 2 * extent {
            return Err(Error::InvalidInput(format!(
                "truncation m = {} is below twice the event extent {extent}",
                self.m
            )));
        }
        Ok(())
    }
}

/// Largest number of times the truncation is doubled looking for convergence.
pub const MAX_DOUBLINGS: u32 = 2;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StripEstimate {
    /// Truncation of the reported estimate.
    pub m: i32,
    pub estimate: Estimate,
    /// The same event at truncation `2m`.
    pub check: Estimate,
    pub converged: bool,
}

fn strip_at(
    n: i32,
    m: i32,
    bc: StripBc,
    params: ModelParams,
    ev: &CrossingEvent,
    schedule: &Schedule,
    split: &SplitOptions,
) -> Result<Estimate> {
    let spec = StripSpec { n, bc, m };
    let region = build_region(&Lattice::square(), spec.rect())?;
    Ok(estimate_both(&region, &bc.build(&region), params, ev, schedule, split)?.0)
}

fn agree(a: &Estimate, b: &Estimate) -> bool {
    (a.mean - b.mean).abs() <= 2.0 * (a.stderr.powi(2) + b.stderr.powi(2)).sqrt()
}

/// Estimate under the truncated strip measure, compared against the strip of
/// twice the width; the truncation is doubled while the two disagree.
pub fn strip_estimate(
    spec: &StripSpec,
    params: ModelParams,
    ev: &CrossingEvent,
    schedule: &Schedule,
    split: &SplitOptions,
) -> Result<StripEstimate> {
    spec.check(ev)?;
    let mut m = spec.m;
    let mut est = strip_at(spec.n, m, spec.bc, params, ev, schedule, split)?;
    let mut doublings = 0;
    loop {
        let check = strip_at(spec.n, 2 * m, spec.bc, params, ev, schedule, split)?;
        let converged = agree(&est, &check);
        if converged || doublings == MAX_DOUBLINGS {
            return Ok(StripEstimate { m, estimate: est, check, converged });
        }
        doublings += 1;
        m *= 2;
        est = check;
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Density {
    /// Long horizontal crossings under free boundary conditions.
    P,
    /// Absence of vertical crossings under wired boundary conditions.
    Q,
}

pub const DEFAULT_ALPHAS: [u32; 5] = [4, 6, 8, 10, 12];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityPoint {
    pub alpha: u32,
    pub estimate: Estimate,
    pub log_prob: f64,
    pub log_stderr: f64,
    pub dropped: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityEstimate {
    pub n: i32,
    pub density: Density,
    pub points: Vec<DensityPoint>,
    pub fit: Option<LineFit>,
    /// `exp(slope)` capped at 1.
    pub value: Option<f64>,
    pub value_stderr: f64,
    /// Reported instead of a value when every point is zero.
    pub upper_bound: Option<f64>,
    pub unreliable: bool,
}

impl DensityEstimate {
    /// The value, or the upper bound when there is no value.
    pub fn best(&self) -> f64 {
        self.value.or(self.upper_bound).unwrap_or(f64::NAN)
    }
}

fn check_alphas(n: i32, alphas: &[u32]) -> Result<()> {
    if n < 1 {
        return Err(Error::InvalidInput("strip height n must be >= 1".into()));
    }
    if alphas.len() < 4 || alphas[0] == 0 || alphas.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput("alpha grid must be positive, strictly increasing, >= 4 points".into()));
    }
    Ok(())
}

fn fit_points(points: &[DensityPoint]) -> Option<LineFit> {
    let kept: Vec<&DensityPoint> = points.iter().filter(|p| !p.dropped).collect();
    if kept.len() < 2 {
        return None;
    }
    let x: Vec<f64> = kept.iter().map(|p| p.alpha as f64).collect();
    let y: Vec<f64> = kept.iter().map(|p| p.log_prob).collect();
    let s: Vec<f64> = kept.iter().map(|p| p.log_stderr).collect();
    wls(&x, &y, &s).ok()
}

fn density_point(alpha: u32, estimate: Estimate) -> DensityPoint {
    let dropped = !(estimate.mean > 0.0);
    DensityPoint {
        alpha,
        log_prob: if dropped { f64::NEG_INFINITY } else { estimate.mean.ln() },
        log_stderr: estimate.log_stderr,
        estimate,
        dropped,
    }
}

fn summarize(n: i32, density: Density, points: Vec<DensityPoint>) -> DensityEstimate {
    let fit = fit_points(&points);
    let unreliable = points.iter().any(|p| p.estimate.unreliable);
    let (value, value_stderr) = match &fit {
        Some(f) => {
            let v = f.slope.exp().min(1.0);
            (Some(v), v * f.slope_stderr)
        }
        None => (None, 0.0),
    };
    let upper_bound = if fit.is_some() {
        None
    } else if points.iter().all(|p| p.estimate.method == Method::Exact && p.dropped) {
        Some(0.0)
    } else {
        // With at most one usable point, bound each zero by three hits.
        points
            .iter()
            .map(|p| {
                let bound = if p.dropped { 3.0 / p.estimate.n.max(1) as f64 } else { p.estimate.mean };
                bound.powf(1.0 / p.alpha as f64)
            })
            .reduce(f64::min)
    };
    DensityEstimate { n, density, points, fit, value, value_stderr, upper_bound, unreliable }
}

fn estimate_density(
    which: Density,
    n: i32,
    params: ModelParams,
    alphas: &[u32],
    schedule: &Schedule,
    split: &SplitOptions,
) -> Result<DensityEstimate> {
    check_alphas(n, alphas)?;
    let lat = Lattice::square();
    let points = alphas
        .iter()
        .map(|&alpha| {
            let w = alpha as i32 * n;
            let region = build_region(&lat, Rect { a: 0, b: w, c: -n, d: 2 * n })?;
            let target = Rect { a: 0, b: w, c: 0, d: n };
            let (bc, ev) = match which {
                Density::P => (BoundaryCondition::free(&region), CrossingEvent::horizontal(target)),
                Density::Q => (BoundaryCondition::wired(&region), CrossingEvent::v_complement(target)),
            };
            let est = estimate_both(&region, &bc, params, &ev, schedule, split)?.0;
            Ok(density_point(alpha, est))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(summarize(n, which, points))
}

/// `p_n`: rate per unit aspect ratio of `phi^0_{[0,an]x[-n,2n]}[H_{[0,an]x[0,n]}]`,
/// from a weighted fit of the log-probability against `alpha`.
pub fn estimate_density_p(
    n: i32,
    params: ModelParams,
    alphas: &[u32],
    schedule: &Schedule,
    split: &SplitOptions,
) -> Result<DensityEstimate> {
    estimate_density(Density::P, n, params, alphas, schedule, split)
}

/// `q_n`: rate of `phi^1_{[0,an]x[-n,2n]}[no vertical crossing of [0,an]x[0,n]]`.
pub fn estimate_density_q(
    n: i32,
    params: ModelParams,
    alphas: &[u32],
    schedule: &Schedule,
    split: &SplitOptions,
) -> Result<DensityEstimate> {
    estimate_density(Density::Q, n, params, alphas, schedule, split)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerReport {
    pub n: i32,
    pub lambda: u32,
    /// Density at `lambda n`.
    pub lhs: f64,
    /// Density at `n`, raised to `lambda`.
    pub rhs: f64,
    pub sigma: f64,
    pub pass: bool,
}

/// Checks `d_{lambda n} >= d_n^lambda - 3 sigma` with the error propagated from both fits.
pub fn check_power_monotonicity(
    n: i32,
    lambda: u32,
    at_n: &DensityEstimate,
    at_lambda_n: &DensityEstimate,
) -> Result<PowerReport> {
    if at_n.n != n || at_lambda_n.n != n * lambda as i32 || at_n.density != at_lambda_n.density {
        return Err(Error::Mismatch("density estimates do not match n and lambda n".into()));
    }
    let (a, b) = (at_n.best(), at_lambda_n.best());
    let l = lambda as f64;
    let rhs = a.powf(l);
    let sigma = (at_lambda_n.value_stderr.powi(2) + (l * a.powf(l - 1.0) * at_n.value_stderr).powi(2)).sqrt();
    Ok(PowerReport { n, lambda, lhs: b, rhs, sigma, pass: b >= rhs - 3.0 * sigma })
}

/// Branches of the pushing probe.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PushVerdict {
    PushPrimal,
    PushDual,
    Both,
    /// Neither branch has a rate bounded below.
    Anomaly,
}

/// A fitted rate below this counts as zero.
pub const PUSH_MIN_RATE: f64 = 0.01;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PushBranch {
    pub points: Vec<DensityPoint>,
    pub fit: Option<LineFit>,
    /// Fitted `c` in `P ~ C c^alpha`.
    pub c: f64,
    /// `c` at three standard errors below the fitted slope.
    pub c_lower: f64,
    pub bounded_below: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PushingReport {
    pub n: i32,
    pub primal: PushBranch,
    pub dual: PushBranch,
    pub verdict: PushVerdict,
    pub min_rate: f64,
}

fn branch(points: Vec<DensityPoint>) -> PushBranch {
    let fit = fit_points(&points);
    let (c, c_lower) = match &fit {
        Some(f) => (f.slope.exp().min(1.0), (f.slope - 3.0 * f.slope_stderr).exp().min(1.0)),
        None => (0.0, 0.0),
    };
    PushBranch { points, fit, c, c_lower, bounded_below: c_lower >= PUSH_MIN_RATE }
}

/// Crossing of `R = [0,an] x [0,n]` inside `[0,an] x [0,26n]`: horizontally
/// under wiring on all sides but the bottom, and the absence of a vertical
/// crossing under wiring on the bottom only. Each branch is fitted as `c^alpha`.
pub fn pushing_probe(
    n: i32,
    alphas: &[u32],
    params: ModelParams,
    schedule: &Schedule,
    split: &SplitOptions,
) -> Result<PushingReport> {
    check_alphas(n, alphas)?;
    let lat = Lattice::square();
    let mut primal = Vec::new();
    let mut dual = Vec::new();
    for &alpha in alphas {
        let w = alpha as i32 * n;
        let region = build_region(&lat, Rect { a: 0, b: w, c: 0, d: 26 * n })?;
        let r = Rect { a: 0, b: w, c: 0, d: n };
        let bc = BoundaryCondition::wired_except_bottom(&region);
        primal.push(density_point(
            alpha,
            estimate_both(&region, &bc, params, &CrossingEvent::horizontal(r), schedule, split)?.0,
        ));
        let bc = BoundaryCondition::dobrushin(&region);
        dual.push(density_point(
            alpha,
            estimate_both(&region, &bc, params, &CrossingEvent::v_complement(r), schedule, split)?.0,
        ));
    }
    let (primal, dual) = (branch(primal), branch(dual));
    let verdict = match (primal.bounded_below, dual.bounded_below) {
        (true, true) => PushVerdict::Both,
        (true, false) => PushVerdict::PushPrimal,
        (false, true) => PushVerdict::PushDual,
        (false, false) => PushVerdict::Anomaly,
    };
    Ok(PushingReport { n, primal, dual, verdict, min_rate: PUSH_MIN_RATE })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RelationRow {
    pub n: i32,
    /// `(3 + 3/lambda) log q_n - log p_{3n}`: the constant the lower bound needs.
    pub lower_gap: f64,
    /// `log p_{3n} - (3 - 9/lambda) log p_n`: the constant the upper bound needs.
    pub upper_gap: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityRelationReport {
    pub lambda: f64,
    pub rows: Vec<RelationRow>,
    /// Smallest constant with every row inside the sandwich.
    pub k: f64,
    /// Slack of each row against `k`, lower then upper.
    pub residuals: Vec<(f64, f64)>,
}

/// Sandwiches `log p_{3n}` between `(3+3/lambda) log q_n - K` and
/// `(3-9/lambda) log p_n + K` for every `n` with all three densities available,
/// and reports the smallest consistent `K`. A probe, not a gate.
pub fn check_density_relation(
    lambda: f64,
    p: &[DensityEstimate],
    q: &[DensityEstimate],
) -> Result<DensityRelationReport> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidInput("lambda must be positive".into()));
    }
    let find = |set: &[DensityEstimate], n: i32| set.iter().find(|d| d.n == n).map(|d| d.best().ln());
    let mut rows = Vec::new();
    for pn in p {
        let n = pn.n;
        if let (Some(lp), Some(lq), Some(lp3)) = (find(p, n), find(q, n), find(p, 3 * n)) {
            rows.push(RelationRow {
                n,
                lower_gap: (3.0 + 3.0 / lambda) * lq - lp3,
                upper_gap: lp3 - (3.0 - 9.0 / lambda) * lp,
            });
        }
    }
    let k = rows.iter().flat_map(|r| [r.lower_gap, r.upper_gap]).filter(|v| !v.is_nan()).fold(0.0, f64::max);
    let residuals = rows.iter().map(|r| (k - r.lower_gap, k - r.upper_gap)).collect();
    Ok(DensityRelationReport { lambda, rows, k, residuals })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick() -> (Schedule, SplitOptions) {
        (Schedule::new(400, 9).with_chains(2), SplitOptions { replicas: 2, ..SplitOptions::default() })
    }

    #[test]
    fn degenerate_densities() {
        let (s, sp) = quick();
        let alphas = [1, 2, 3, 4];
        let one = ModelParams { p: 1.0, q: 2.0 };
        let zero = ModelParams { p: 0.0, q: 2.0 };
        let d = estimate_density_p(2, one, &alphas, &s, &sp).unwrap();
        assert_eq!(d.value, Some(1.0));
        let d = estimate_density_p(2, zero, &alphas, &s, &sp).unwrap();
        assert_eq!((d.value, d.upper_bound), (None, Some(0.0)));
        let d = estimate_density_q(2, zero, &alphas, &s, &sp).unwrap();
        assert_eq!(d.value, Some(1.0));
        let d = estimate_density_q(2, one, &alphas, &s, &sp).unwrap();
        assert_eq!(d.upper_bound, Some(0.0));
        assert!(estimate_density_p(2, one, &[1, 2, 2, 3], &s, &sp).is_err());
        assert!(estimate_density_p(2, one, &[1, 2, 3], &s, &sp).is_err());
    }

    #[test]
    fn degenerate_pushing() {
        let (s, sp) = quick();
        let r = pushing_probe(1, &[1, 2, 3, 4], ModelParams { p: 1.0, q: 2.0 }, &s, &sp).unwrap();
        assert_eq!((r.verdict, r.primal.c), (PushVerdict::PushPrimal, 1.0));
        let r = pushing_probe(1, &[1, 2, 3, 4], ModelParams { p: 0.0, q: 2.0 }, &s, &sp).unwrap();
        assert_eq!((r.verdict, r.dual.c), (PushVerdict::PushDual, 1.0));
    }

    #[test]
    fn power_check_trivial_cases() {
        let (s, sp) = quick();
        let one = ModelParams { p: 1.0, q: 2.0 };
        let a = estimate_density_p(1, one, &[1, 2, 3, 4], &s, &sp).unwrap();
        let b = estimate_density_p(2, one, &[1, 2, 3, 4], &s, &sp).unwrap();
        assert!(check_power_monotonicity(1, 2, &a, &b).unwrap().pass);
        let r = check_power_monotonicity(1, 1, &a, &a).unwrap();
        assert_eq!(r.lhs, r.rhs);
        assert!(check_power_monotonicity(1, 3, &a, &b).is_err());
        let rel = check_density_relation(2.0, &[a.clone(), b.clone()], &[a]).unwrap();
        assert!(rel.rows.is_empty() && rel.k == 0.0);
    }

    #[test]
    fn strip_truncation_checks() {
        let (s, sp) = quick();
        let ev = CrossingEvent::horizontal(Rect { a: 0, b: 4, c: 0, d: 2 });
        let params = ModelParams { p: 0.0, q: 2.0 };
        let spec = StripSpec { n: 2, bc: StripBc::Dobrushin, m: 4 };
        assert!(strip_estimate(&spec, params, &ev, &s, &sp).is_err());
        let spec = StripSpec { m: 8, ..spec };
        let r = strip_estimate(&spec, params, &ev, &s, &sp).unwrap();
        assert!(r.converged && r.estimate.mean == 0.0);
        let q1 = ModelParams { p: 0.5, q: 1.0 };
        let r = strip_estimate(&spec, q1, &ev, &s, &sp).unwrap();
        assert!(r.converged, "{r:?}");
    }

    #[test]
    fn subcritical_bernoulli_density_decays() {
        let (s, sp) = quick();
        let d = estimate_density_p(2, ModelParams { p: 0.25, q: 1.0 }, &DEFAULT_ALPHAS, &s, &sp).unwrap();
        let f = d.fit.unwrap();
        assert!(f.slope < 0.0 && f.r2 >= 0.9, "{f:?}");
        assert!(d.value.unwrap() > 0.0 && d.value.unwrap() < 1.0);
    }
}
