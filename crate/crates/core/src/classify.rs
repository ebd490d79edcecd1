//! Empirical phase classification from crossing probabilities of `Λ_n`
//! inside `Λ_{2n}` under free and wired boundary conditions.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::events::CrossingEvent;
use crate::fit::{wls, LineFit};
use crate::lattice::{build_region, Lattice, Rect};
use crate::measure::{self_dual_point, BoundaryCondition, ModelParams};
use crate::sampler::{
    estimate_both, estimate_events, monotone_pair_run, split_estimate, Dynamics, Estimate, Method, Schedule,
    SplitOptions, MIN_HITS,
};

/// Lower edge of the band `[DELTA, 1 - DELTA]` for non-degenerate crossings.
pub const DELTA: f64 = 0.02;
/// Smallest `R²` accepted for a log-linear decay.
pub const MIN_R2: f64 = 0.9;
/// A decaying quantity must be below this at the largest `n`.
pub const DECAYED: f64 = 0.05;
/// Points with a positive estimate needed to fit a decay.
pub const MIN_DECAY_POINTS: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    SubCrit,
    SupCrit,
    ContCrit,
    DiscontCrit,
    Undecided,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifyOptions {
    pub schedule: Schedule,
    #[serde(default)]
    pub split: SplitOptions,
}

impl ClassifyOptions {
    pub fn new(schedule: Schedule) -> ClassifyOptions {
        let split = SplitOptions::default().with_seed(schedule.seed);
        ClassifyOptions { schedule, split }
    }
}

/// Free and wired crossing estimates at one `n`, each with its complement.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub n: i32,
    pub free: Estimate,
    pub free_complement: Estimate,
    pub wired: Estimate,
    pub wired_complement: Estimate,
    /// Present when the pair came from a monotone coupling.
    pub bracket: Option<Bracket>,
}

impl Cell {
    /// The free estimate lies below the wired one, three errors apart.
    pub fn separated(&self) -> bool {
        self.free.mean + 3.0 * self.free.stderr < self.wired.mean - 3.0 * self.wired.stderr
    }

    fn unreliable(&self) -> bool {
        self.free.unreliable
            || self.wired.unreliable
            || self.free_complement.unreliable
            || self.wired_complement.unreliable
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bracket {
    /// Gap between the upper and the lower chain.
    pub gap: f64,
    pub separated: bool,
    /// Coupled pairs that met during the run.
    pub coalesced: usize,
    pub pairs: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    /// Fit of the log-value against `n`, when enough points are positive.
    pub fit: Option<LineFit>,
    /// Value at the largest `n`.
    pub last: f64,
    pub decayed: bool,
}

/// Whether `values` decays exponentially in `ns`.
pub fn decay_fit(ns: &[i32], values: &[Estimate]) -> DecayFit {
    let last = values.last().map_or(f64::NAN, |e| e.mean);
    if values.iter().all(|e| e.method == Method::Exact && e.mean == 0.0) {
        return DecayFit { fit: None, last, decayed: true };
    }
    let keep: Vec<usize> = (0..ns.len()).filter(|&i| values[i].mean > 0.0).collect();
    if keep.len() < MIN_DECAY_POINTS {
        return DecayFit { fit: None, last, decayed: false };
    }
    let x: Vec<f64> = keep.iter().map(|&i| ns[i] as f64).collect();
    let y: Vec<f64> = keep.iter().map(|&i| values[i].mean.ln()).collect();
    let s: Vec<f64> = keep.iter().map(|&i| values[i].log_stderr).collect();
    let fit = wls(&x, &y, &s).ok();
    let decayed = fit.as_ref().is_some_and(|f| f.slope < 0.0 && f.r2 >= MIN_R2) && last < DECAYED;
    DecayFit { fit, last, decayed }
}

/// Monotone in `n` with the endpoints more than three errors apart.
fn drifts(values: &[(f64, f64)]) -> bool {
    let up = values.windows(2).all(|w| w[1].0 >= w[0].0);
    let down = values.windows(2).all(|w| w[1].0 <= w[0].0);
    let (a, b) = (values[0], values[values.len() - 1]);
    (up || down) && (b.0 - a.0).abs() > 3.0 * (a.1 * a.1 + b.1 * b.1).sqrt()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseVerdict {
    pub verdict: Verdict,
    pub params: ModelParams,
    pub grid: Vec<i32>,
    pub cells: Vec<Cell>,
    /// Decay of the wired crossing.
    pub sub_fit: DecayFit,
    /// Decay of the free non-crossing.
    pub sup_fit: DecayFit,
    /// Decay of the free crossing.
    pub free_fit: DecayFit,
    /// Decay of the wired non-crossing.
    pub wired_gap_fit: DecayFit,
    pub in_band: bool,
    pub drift: bool,
    pub note: String,
}

fn check_grid(grid: &[i32], min_len: usize) -> Result<()> {
    if grid.len() < min_len || grid[0] < 1 || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput(format!(
            "n-grid must be positive, strictly increasing, with at least {min_len} points"
        )));
    }
    Ok(())
}

fn cell_direct(n: i32, params: ModelParams, opts: &ClassifyOptions) -> Result<Cell> {
    let region = build_region(&Lattice::square(), Rect::centered_box(2 * n))?;
    let ev = CrossingEvent::horizontal(Rect::centered_box(n));
    let (free, free_complement) =
        estimate_both(&region, &BoundaryCondition::free(&region), params, &ev, &opts.schedule, &opts.split)?;
    let (wired, wired_complement) =
        estimate_both(&region, &BoundaryCondition::wired(&region), params, &ev, &opts.schedule, &opts.split)?;
    Ok(Cell { n, free, free_complement, wired, wired_complement, bracket: None })
}

/// Lower chain from all-closed under free, upper chain from all-open under
/// wired, sharing their randomness; sides with too few hits are refined by
/// splitting under the same boundary condition.
fn cell_bracketed(n: i32, params: ModelParams, opts: &ClassifyOptions) -> Result<Cell> {
    let region = build_region(&Lattice::square(), Rect::centered_box(2 * n))?;
    let ev = CrossingEvent::horizontal(Rect::centered_box(n));
    let free_bc = BoundaryCondition::free(&region);
    let wired_bc = BoundaryCondition::wired(&region);
    let pair =
        monotone_pair_run(&region, &free_bc, &wired_bc, params, &[ev.compile(&region)?], &opts.schedule)?.remove(0);
    let mut free = pair.low.clone();
    let mut free_complement = free.complement();
    if free.method != Method::Exact && free.hits() < MIN_HITS {
        free = split_estimate(&region, &free_bc, params, &ev, &opts.split)?.estimate;
        free_complement = free.complement();
    }
    let mut wired = pair.high.clone();
    let mut wired_complement = wired.complement();
    if wired.method != Method::Exact && wired_complement.hits() < MIN_HITS {
        let comp = CrossingEvent::h_complement(ev.rect);
        wired_complement = split_estimate(&region, &wired_bc, params, &comp, &opts.split)?.estimate;
        wired = wired_complement.complement();
    }
    let mut cell = Cell { n, free, free_complement, wired, wired_complement, bracket: None };
    cell.bracket = Some(Bracket {
        gap: cell.wired.mean - cell.free.mean,
        separated: cell.separated(),
        coalesced: pair.coalesced.iter().filter(|c| c.is_some()).count(),
        pairs: pair.coalesced.len(),
    });
    Ok(cell)
}

/// Crossing estimates of `Λ_n` in `Λ_{2n}` for every `n` of the grid. Above
/// `q = 4` they come from monotone coupled pairs.
pub fn crossing_cells(params: ModelParams, grid: &[i32], opts: &ClassifyOptions) -> Result<Vec<Cell>> {
    params.validate()?;
    check_grid(grid, 1)?;
    opts.schedule.validate()?;
    opts.split.validate()?;
    grid.par_iter()
        .map(|&n| if params.q > 4.0 { cell_bracketed(n, params, opts) } else { cell_direct(n, params, opts) })
        .collect()
}

/// Applies the decision rules to precomputed cells.
pub fn verdict_from_cells(params: ModelParams, cells: Vec<Cell>) -> PhaseVerdict {
    let grid: Vec<i32> = cells.iter().map(|c| c.n).collect();
    let series = |f: fn(&Cell) -> &Estimate| cells.iter().map(|c| f(c).clone()).collect::<Vec<_>>();
    let sub_fit = decay_fit(&grid, &series(|c| &c.wired));
    let sup_fit = decay_fit(&grid, &series(|c| &c.free_complement));
    let free_fit = decay_fit(&grid, &series(|c| &c.free));
    let wired_gap_fit = decay_fit(&grid, &series(|c| &c.wired_complement));
    let in_band = cells.iter().all(|c| [c.free.mean, c.wired.mean].iter().all(|v| (DELTA..=1.0 - DELTA).contains(v)));
    let mid: Vec<(f64, f64)> =
        cells.iter().map(|c| (0.5 * (c.free.mean + c.wired.mean), 0.5 * c.free.stderr.hypot(c.wired.stderr))).collect();
    let drift = mid.len() > 1 && drifts(&mid);
    let separated = cells.last().is_some_and(Cell::separated);
    let unreliable = cells.iter().any(Cell::unreliable);

    let verdict = if unreliable {
        Verdict::Undecided
    } else if sub_fit.decayed && !sup_fit.decayed {
        Verdict::SubCrit
    } else if sup_fit.decayed && !sub_fit.decayed {
        Verdict::SupCrit
    } else if free_fit.decayed && wired_gap_fit.decayed && separated {
        Verdict::DiscontCrit
    } else if in_band && !drift {
        Verdict::ContCrit
    } else {
        Verdict::Undecided
    };
    let mut note = format!(
        "thresholds: band [{DELTA}, {}], decay needs slope < 0, R2 >= {MIN_R2}, last value < {DECAYED}",
        1.0 - DELTA
    );
    if unreliable {
        note.push_str("; undecided because an estimate has an unreliable autocorrelation time");
    }
    PhaseVerdict { verdict, params, grid, cells, sub_fit, sup_fit, free_fit, wired_gap_fit, in_band, drift, note }
}

/// Classifies `params` as subcritical, supercritical, continuous or
/// discontinuous critical from crossing estimates over `grid`.
pub fn classify(params: ModelParams, grid: &[i32], opts: &ClassifyOptions) -> Result<PhaseVerdict> {
    check_grid(grid, 4)?;
    let cells = crossing_cells(params, grid, opts)?;
    Ok(verdict_from_cells(params, cells))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxCrossingRow {
    pub n: i32,
    pub free: Estimate,
    pub wired: Estimate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxCrossingReport {
    pub params: ModelParams,
    pub rho: i32,
    pub rows: Vec<BoxCrossingRow>,
    pub min_free: f64,
    pub max_free: f64,
    pub min_wired: f64,
    pub max_wired: f64,
    pub pass: bool,
}

/// Horizontal crossing of `[0,ρn] x [0,n]` inside `[-n,(ρ+1)n] x [-n,2n]`
/// under free and wired conditions; passes when everything stays in the band.
pub fn box_crossing_check(
    params: ModelParams,
    rho: i32,
    grid: &[i32],
    opts: &ClassifyOptions,
) -> Result<BoxCrossingReport> {
    if !(1..=3).contains(&rho) {
        return Err(Error::InvalidInput("aspect ratio rho must be 1, 2 or 3".into()));
    }
    params.validate()?;
    check_grid(grid, 1)?;
    let rows = grid
        .par_iter()
        .map(|&n| {
            let region = build_region(&Lattice::square(), Rect { a: -n, b: (rho + 1) * n, c: -n, d: 2 * n })?;
            let ev = CrossingEvent::horizontal(Rect { a: 0, b: rho * n, c: 0, d: n });
            let free =
                estimate_both(&region, &BoundaryCondition::free(&region), params, &ev, &opts.schedule, &opts.split)?.0;
            let wired =
                estimate_both(&region, &BoundaryCondition::wired(&region), params, &ev, &opts.schedule, &opts.split)?.0;
            Ok(BoxCrossingRow { n, free, wired })
        })
        .collect::<Result<Vec<_>>>()?;
    let range = |f: fn(&BoxCrossingRow) -> f64| {
        rows.iter().map(f).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
    };
    let (min_free, max_free) = range(|r| r.free.mean);
    let (min_wired, max_wired) = range(|r| r.wired.mean);
    let pass = min_free.min(min_wired) >= DELTA && max_free.max(max_wired) <= 1.0 - DELTA;
    Ok(BoxCrossingReport { params, rho, rows, min_free, max_free, min_wired, max_wired, pass })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecayModel {
    /// `log φ` linear in `n`.
    Exponential,
    /// `log φ` linear in `log n`.
    Polynomial,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OneArmPoint {
    pub n: i32,
    pub estimate: Estimate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OneArmReport {
    pub params: ModelParams,
    /// Half-width of the wired host box.
    pub host: i32,
    pub points: Vec<OneArmPoint>,
    pub loglog: Option<LineFit>,
    pub exponential: Option<LineFit>,
    /// Log-log slope.
    pub slope: Option<f64>,
    pub aic_exponential: Option<f64>,
    pub aic_polynomial: Option<f64>,
    pub preferred: Option<DecayModel>,
}

/// `φ^1_{Λ_{4N}}[0 ↔ ∂Λ_n]` for every `n` of the grid, `N` its largest value,
/// with log-log and log-linear fits compared by AIC.
pub fn one_arm_scan(params: ModelParams, grid: &[i32], opts: &ClassifyOptions) -> Result<OneArmReport> {
    params.validate()?;
    check_grid(grid, 2)?;
    let max_n = *grid.last().unwrap();
    let host = 4 * max_n;
    let region = build_region(&Lattice::square(), Rect::centered_box(host))?;
    let bc = BoundaryCondition::wired(&region);
    let events = grid.iter().map(|&n| CrossingEvent::one_arm(n).compile(&region)).collect::<Result<Vec<_>>>()?;
    let mut ests = estimate_events(&region, &bc, params, &events, &opts.schedule, Dynamics::Auto)?;
    let rare: Vec<usize> =
        (0..grid.len()).filter(|&i| ests[i].method != Method::Exact && ests[i].hits() < MIN_HITS).collect();
    if let Some(&top) = rare.last() {
        let split = split_estimate(&region, &bc, params, &CrossingEvent::one_arm(grid[top]), &opts.split)?;
        for &i in &rare {
            if let Some(pt) = split.curve.iter().find(|c| c.level == grid[i] as u32) {
                ests[i] = Estimate {
                    mean: pt.prob,
                    stderr: pt.prob * pt.log_stderr,
                    log_stderr: pt.log_stderr,
                    ..split.estimate.clone()
                };
            }
        }
    }
    let points: Vec<OneArmPoint> = grid.iter().zip(ests).map(|(&n, estimate)| OneArmPoint { n, estimate }).collect();
    let kept: Vec<&OneArmPoint> = points.iter().filter(|p| p.estimate.mean > 0.0).collect();
    let y: Vec<f64> = kept.iter().map(|p| p.estimate.mean.ln()).collect();
    let s: Vec<f64> = kept.iter().map(|p| p.estimate.log_stderr).collect();
    let xn: Vec<f64> = kept.iter().map(|p| p.n as f64).collect();
    let xl: Vec<f64> = xn.iter().map(|x| x.ln()).collect();
    let loglog = wls(&xl, &y, &s).ok();
    let exponential = wls(&xn, &y, &s).ok();
    let aic_polynomial = loglog.as_ref().map(LineFit::aic);
    let aic_exponential = exponential.as_ref().map(LineFit::aic);
    let preferred = match (aic_exponential, aic_polynomial) {
        (Some(e), Some(p)) if e < p => Some(DecayModel::Exponential),
        (Some(_), Some(_)) => Some(DecayModel::Polynomial),
        _ => None,
    };
    Ok(OneArmReport {
        params,
        host,
        slope: loglog.as_ref().map(|f| f.slope),
        points,
        loglog,
        exponential,
        aic_exponential,
        aic_polynomial,
        preferred,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PcScanOptions {
    pub classify: ClassifyOptions,
    pub grid: Vec<i32>,
    pub tolerance: f64,
    /// Bisection steps allowed after the endpoints are checked.
    pub max_iter: u32,
    pub lo: f64,
    pub hi: f64,
}

/// Number of times an endpoint may be moved outwards.
pub const MAX_WIDEN: u32 = 2;

impl PcScanOptions {
    pub fn new(classify: ClassifyOptions) -> PcScanOptions {
        PcScanOptions { classify, grid: vec![2, 4, 8, 16], tolerance: 0.02, max_iter: 12, lo: 0.2, hi: 0.95 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanStep {
    pub p: f64,
    pub verdict: Verdict,
    /// Mean of the free and wired crossing at the largest `n`.
    pub lean: f64,
    /// Side of the critical point this step was assigned to.
    pub below: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PcScan {
    pub q: f64,
    pub history: Vec<ScanStep>,
    pub p_lo: f64,
    pub p_hi: f64,
    pub self_dual: f64,
    /// Midpoint minus the self-dual point.
    pub deviation: f64,
    pub widened: bool,
}

impl PcScan {
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.p_lo + self.p_hi)
    }
}

fn scan_step(p: f64, q: f64, opts: &PcScanOptions) -> Result<ScanStep> {
    let v = classify(ModelParams::new(p, q)?, &opts.grid, &opts.classify)?;
    let last = v.cells.last().unwrap();
    let lean = 0.5 * (last.free.mean + last.wired.mean);
    let below = match v.verdict {
        Verdict::SubCrit => true,
        Verdict::SupCrit => false,
        _ => lean < 0.5,
    };
    Ok(ScanStep { p, verdict: v.verdict, lean, below })
}

/// Bisection for `p_c(q)`. Sub- and supercritical verdicts decide the side;
/// any other verdict falls back to whether the crossing leans below one half.
pub fn pc_scan(q: f64, opts: &PcScanOptions) -> Result<PcScan> {
    if !(q >= 1.0) || !q.is_finite() {
        return Err(Error::InvalidParams("p_c scans need q >= 1".into()));
    }
    if !(0.0 < opts.lo && opts.lo < opts.hi && opts.hi < 1.0) || !(opts.tolerance > 0.0) {
        return Err(Error::InvalidInput("scan needs 0 < lo < hi < 1 and a positive tolerance".into()));
    }
    check_grid(&opts.grid, 4)?;
    let mut history = Vec::new();
    let (mut lo, mut hi) = (opts.lo, opts.hi);
    let mut widened = false;
    for _ in 0..=MAX_WIDEN {
        let s = scan_step(lo, q, opts)?;
        let ok = s.verdict == Verdict::SubCrit;
        history.push(s);
        if ok {
            break;
        }
        widened = true;
        lo *= 0.5;
    }
    for _ in 0..=MAX_WIDEN {
        let s = scan_step(hi, q, opts)?;
        let ok = s.verdict == Verdict::SupCrit;
        history.push(s);
        if ok {
            break;
        }
        widened = true;
        hi = 0.5 * (1.0 + hi);
    }
    if let (Some(l), Some(h)) = (history.iter().rev().find(|s| s.p == lo), history.iter().rev().find(|s| s.p == hi)) {
        if !l.below || h.below {
            widened = true;
        }
    }
    for _ in 0..opts.max_iter {
        if hi - lo <= opts.tolerance {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let s = scan_step(mid, q, opts)?;
        if s.below {
            lo = mid;
        } else {
            hi = mid;
        }
        history.push(s);
    }
    let self_dual = self_dual_point(q);
    Ok(PcScan { q, history, p_lo: lo, p_hi: hi, self_dual, deviation: 0.5 * (lo + hi) - self_dual, widened })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn est(mean: f64, stderr: f64) -> Estimate {
        Estimate {
            mean,
            stderr,
            tau_int: 0.5,
            n: 10_000,
            chain_means: vec![mean],
            unreliable: false,
            method: Method::Direct,
            log_stderr: if mean > 0.0 { stderr / mean } else { f64::INFINITY },
        }
    }

    fn cell(n: i32, free: f64, wired: f64) -> Cell {
        let (f, w) = (est(free, 0.002 * free.max(1e-3)), est(wired, 0.002 * wired.max(1e-3)));
        Cell { n, free_complement: f.complement(), wired_complement: w.complement(), free: f, wired: w, bracket: None }
    }

    fn verdict(rows: &[(i32, f64, f64)]) -> Verdict {
        let cells = rows.iter().map(|&(n, f, w)| cell(n, f, w)).collect();
        verdict_from_cells(ModelParams { p: 0.5, q: 2.0 }, cells).verdict
    }

    #[test]
    fn decision_rules_on_synthetic_cells() {
        let g = [4, 8, 16, 32];
        let sub: Vec<_> = g.iter().map(|&n| (n, 0.5 * (-0.2 * n as f64).exp(), (-0.15 * n as f64).exp())).collect();
        assert_eq!(verdict(&sub), Verdict::SubCrit);
        let sup: Vec<_> = sub.iter().map(|&(n, f, w)| (n, 1.0 - w, 1.0 - f)).collect();
        assert_eq!(verdict(&sup), Verdict::SupCrit);
        let disc: Vec<_> = g.iter().map(|&n| (n, (-0.3 * n as f64).exp(), 1.0 - (-0.3 * n as f64).exp())).collect();
        assert_eq!(verdict(&disc), Verdict::DiscontCrit);
        let cont = [(4, 0.41, 0.63), (8, 0.43, 0.61), (16, 0.44, 0.60), (32, 0.45, 0.59)];
        assert_eq!(verdict(&cont), Verdict::ContCrit);
        // The free and wired values move together: a slow drift off criticality.
        let drift = [(4, 0.41, 0.63), (8, 0.38, 0.60), (16, 0.35, 0.57), (32, 0.30, 0.52)];
        assert_eq!(verdict(&drift), Verdict::Undecided);
        let edge = [(4, 0.41, 0.63), (8, 0.43, 0.61), (16, 0.44, 0.99), (32, 0.45, 0.59)];
        assert_eq!(verdict(&edge), Verdict::Undecided);
    }

    #[test]
    fn unreliable_estimates_force_undecided() {
        let g = [4, 8, 16, 32];
        let mut cells: Vec<Cell> =
            g.iter().map(|&n| cell(n, 0.5 * (-0.2 * n as f64).exp(), (-0.15 * n as f64).exp())).collect();
        cells[2].wired.unreliable = true;
        let v = verdict_from_cells(ModelParams { p: 0.3, q: 2.0 }, cells);
        assert_eq!(v.verdict, Verdict::Undecided);
        assert!(v.note.contains("unreliable"));
    }

    #[test]
    fn exact_zero_counts_as_decay() {
        let zero: Vec<Estimate> = (0..4).map(|_| Estimate::exact(0.0)).collect();
        assert!(decay_fit(&[1, 2, 3, 4], &zero).decayed);
        let flat: Vec<Estimate> = (0..4).map(|_| est(0.5, 0.01)).collect();
        assert!(!decay_fit(&[1, 2, 3, 4], &flat).decayed);
    }

    fn quick() -> ClassifyOptions {
        let mut o = ClassifyOptions::new(Schedule::new(600, 17).with_chains(2));
        o.split.replicas = 2;
        o
    }

    #[test]
    fn degenerate_points() {
        let g = [2, 4, 8, 16];
        let v = classify(ModelParams { p: 0.0, q: 2.0 }, &g, &quick()).unwrap();
        assert_eq!(v.verdict, Verdict::SubCrit);
        let v = classify(ModelParams { p: 1.0, q: 2.0 }, &g, &quick()).unwrap();
        assert_eq!(v.verdict, Verdict::SupCrit);
        assert!(classify(ModelParams { p: 0.5, q: 2.0 }, &g[..3], &quick()).is_err());
        let r = box_crossing_check(ModelParams { p: 1.0, q: 2.0 }, 1, &[2, 4], &quick()).unwrap();
        assert!(!r.pass && r.max_wired == 1.0);
        assert!(box_crossing_check(ModelParams { p: 0.5, q: 1.0 }, 4, &[2, 4], &quick()).is_err());
        let a = one_arm_scan(ModelParams { p: 1.0, q: 2.0 }, &[1, 2, 4], &quick()).unwrap();
        assert_eq!(a.slope, Some(0.0));
        assert!(a.points.iter().all(|p| p.estimate.mean == 1.0));
    }

    #[test]
    fn bernoulli_verdicts_are_dual() {
        let g = [2, 4, 8, 16];
        let sub = classify(ModelParams { p: 0.25, q: 1.0 }, &g, &quick()).unwrap();
        assert_eq!(sub.verdict, Verdict::SubCrit, "{:?}", sub.sub_fit);
        let sup = classify(ModelParams { p: 0.75, q: 1.0 }, &g, &quick()).unwrap();
        assert_eq!(sup.verdict, Verdict::SupCrit, "{:?}", sup.sup_fit);
        for c in sub.cells.iter().chain(&sup.cells) {
            assert!(c.wired.mean + 3.0 * c.wired.stderr >= c.free.mean - 3.0 * c.free.stderr);
        }
    }

    #[test]
    fn bernoulli_box_crossing_and_one_arm() {
        let r = box_crossing_check(ModelParams { p: 0.5, q: 1.0 }, 1, &[2, 4, 8], &quick()).unwrap();
        assert!(r.min_free.min(r.min_wired) > 0.1 && r.max_free.max(r.max_wired) < 0.9, "{r:?}");
        let a = one_arm_scan(ModelParams { p: 0.25, q: 1.0 }, &[1, 2, 3, 4, 5, 6], &quick()).unwrap();
        assert_eq!(a.preferred, Some(DecayModel::Exponential), "{a:?}");
    }

    #[test]
    fn scan_rejects_bad_input() {
        let o = PcScanOptions::new(quick());
        assert!(pc_scan(0.5, &o).is_err());
        assert!(pc_scan(2.0, &PcScanOptions { lo: 0.96, ..o.clone() }).is_err());
        assert!(pc_scan(2.0, &PcScanOptions { grid: vec![2, 4], ..o }).is_err());
    }
}
