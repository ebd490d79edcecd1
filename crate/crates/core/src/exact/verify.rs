use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{DualMap, Region};
use crate::measure::{bc_dominates, dual_params, full_mask, induced_bc, BoundaryCondition, Configuration, ModelParams};

use super::{enumerate, exact_prob, EventPredicate, ExactDistribution, Monotonicity};

/// Tolerance for exact identities.
pub const EXACT_TOL: f64 = 1e-10;
/// Tolerance for dual pushforwards.
pub const DUAL_TOL: f64 = 1e-8;

/// Outcome of one exact check. `margin` is the slack of the inequality: it is
/// non-negative (up to tolerance) exactly when the check passes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub identity: String,
    pub context: String,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub pass: bool,
}

impl Check {
    fn new(identity: &str, context: String, lhs: f64, rhs: f64, margin: f64, tol: f64) -> Check {
        Check { identity: identity.to_string(), context, lhs, rhs, margin, pass: margin >= -tol }
    }
}

fn require(ev: &EventPredicate, want: Monotonicity) -> Result<()> {
    if ev.monotonicity() != want {
        return Err(Error::WrongMonotonicity(match want {
            Monotonicity::Increasing => "increasing",
            Monotonicity::Decreasing => "decreasing",
            Monotonicity::None => "unflagged",
        }));
    }
    Ok(())
}

/// `P[A and B] >= P[A] P[B]` for increasing `A`, `B`.
pub fn verify_fkg(dist: &ExactDistribution, a: &EventPredicate, b: &EventPredicate) -> Result<Check> {
    require(a, Monotonicity::Increasing)?;
    require(b, Monotonicity::Increasing)?;
    let ia = dist.indicator(a);
    let ib = dist.indicator(b);
    let both: Vec<bool> = ia.iter().zip(&ib).map(|(&x, &y)| x && y).collect();
    let lhs = dist.prob_of_indicator(&both);
    let rhs = dist.prob_of_indicator(&ia) * dist.prob_of_indicator(&ib);
    Ok(Check::new("FKG", format!("{} / {}", a.name(), b.name()), lhs, rhs, lhs - rhs, EXACT_TOL))
}

pub(crate) fn cbc_from(low: &ExactDistribution, high: &ExactDistribution, ev: &EventPredicate) -> Result<Check> {
    require(ev, Monotonicity::Increasing)?;
    if !bc_dominates(low.bc(), high.bc())? {
        return Err(Error::DominationViolated("the second condition must dominate the first".into()));
    }
    let lhs = exact_prob(low, ev);
    let rhs = exact_prob(high, ev);
    Ok(Check::new("CBC", ev.name().to_string(), lhs, rhs, rhs - lhs, EXACT_TOL))
}

/// `phi^xi[A] <= phi^zeta[A]` when `zeta` dominates `xi` and `A` is increasing.
pub fn verify_cbc(
    region: &Region,
    params: ModelParams,
    xi: &BoundaryCondition,
    zeta: &BoundaryCondition,
    ev: &EventPredicate,
) -> Result<Check> {
    if !bc_dominates(xi, zeta)? {
        return Err(Error::DominationViolated("the second condition must dominate the first".into()));
    }
    cbc_from(&enumerate(region, xi, params)?, &enumerate(region, zeta, params)?, ev)
}

pub(crate) fn smp_from(dist: &ExactDistribution, sub: &Region, outer: &Configuration) -> Result<Check> {
    let region = dist.region();
    let embed = region.embed_edges(sub)?;
    let mut inner_mask = 0u64;
    for &e in &embed {
        inner_mask |= 1 << e;
    }
    let outer_mask = outer.to_mask() & !inner_mask & full_mask(region.num_edges());
    let bc = induced_bc(region, sub, outer, dist.bc())?;
    let target = enumerate(sub, &bc, dist.params())?;
    let ms = sub.num_edges();
    let joint: Vec<f64> = (0..1u64 << ms)
        .map(|sigma| {
            let mut mask = outer_mask;
            for (i, &e) in embed.iter().enumerate() {
                if sigma >> i & 1 == 1 {
                    mask |= 1 << e;
                }
            }
            dist.prob(mask)
        })
        .collect();
    let total: f64 = joint.iter().sum();
    if total <= 0.0 {
        return Err(Error::ZeroProbability);
    }
    let tv =
        0.5 * joint.iter().enumerate().map(|(sigma, &w)| (w / total - target.prob(sigma as u64)).abs()).sum::<f64>();
    Ok(Check::new("SMP", format!("sub {} outer {:#x}", sub.rect(), outer_mask), tv, EXACT_TOL, EXACT_TOL - tv, 0.0))
}

/// The conditional law on `sub` given the outer edges equals the measure on
/// `sub` with the induced boundary condition (total variation below 1e-10).
pub fn verify_smp(
    region: &Region,
    sub: &Region,
    bc: &BoundaryCondition,
    params: ModelParams,
    outer: &Configuration,
) -> Result<Check> {
    if region.num_edges() > 20 {
        return Err(Error::TooLargeForEnumeration { edges: region.num_edges(), limit: 20 });
    }
    smp_from(&enumerate(region, bc, params)?, sub, outer)
}

fn duality_check(label: &str, primal: &ExactDistribution, dual: &ExactDistribution, ev: &EventPredicate) -> Check {
    let m = primal.num_edges();
    let full = full_mask(m);
    let mut tv = 0.0;
    for mask in 0..primal.len() as u64 {
        tv += (primal.prob(mask) - dual.prob(!mask & full)).abs();
    }
    tv *= 0.5;
    let lhs = exact_prob(primal, ev);
    let ind = primal.indicator(ev);
    let rhs: f64 =
        (0..dual.len() as u64).filter(|&mask| ind[(!mask & full) as usize]).map(|mask| dual.prob(mask)).sum();
    Check::new("duality", format!("{label}: {}", ev.name()), lhs, rhs, DUAL_TOL - tv, 0.0)
}

/// Pushes the wired (resp. free) measure through the dual map and compares with
/// the free (resp. wired) dual measure at `p*`. Returns one check per direction.
pub fn verify_duality(dual: &DualMap, params: ModelParams, ev: &EventPredicate) -> Result<Vec<Check>> {
    if dual.primal.num_edges() > 20 {
        return Err(Error::TooLargeForEnumeration { edges: dual.primal.num_edges(), limit: 20 });
    }
    let star = dual_params(params)?;
    let (g, gs) = (&dual.primal, &dual.dual);
    let w = enumerate(g, &BoundaryCondition::wired(g), params)?;
    let f_star = enumerate(gs, &BoundaryCondition::free(gs), star)?;
    let f = enumerate(g, &BoundaryCondition::free(g), params)?;
    let w_star = enumerate(gs, &BoundaryCondition::wired(gs), star)?;
    Ok(vec![duality_check("wired to dual free", &w, &f_star, ev), duality_check("free to dual wired", &f, &w_star, ev)])
}

pub(crate) fn fi_from(mix: &ExactDistribution, star: &ExactDistribution, ev: &EventPredicate) -> Result<Check> {
    let a = exact_prob(mix, ev);
    let b = exact_prob(star, ev);
    if a <= 0.0 || b <= 0.0 {
        return Err(Error::ZeroProbability);
    }
    let ratio = (b / a).max(a / b);
    let q = mix.params().q;
    Ok(Check::new("FI", ev.name().to_string(), ratio, q, q - ratio, EXACT_TOL))
}

/// Mix and *-mix probabilities differ by at most a factor `q` in either direction.
pub fn verify_fi(region: &Region, params: ModelParams, a: &[u32], b: &[u32], ev: &EventPredicate) -> Result<Check> {
    let mix = BoundaryCondition::mix(region, a, b)?;
    let star = BoundaryCondition::star_mix(region, a, b)?;
    fi_from(&enumerate(region, &mix, params)?, &enumerate(region, &star, params)?, ev)
}

/// Monotonicity in the domain for a subregion `sub` of `region` and an
/// increasing event on the edges of `sub`: pushing wired boundary conditions in
/// raises its probability, pushing free ones in lowers it.
pub fn verify_mon(
    region: &Region,
    sub: &Region,
    params: ModelParams,
    xi: &BoundaryCondition,
    ev: &EventPredicate,
) -> Result<Vec<Check>> {
    require(ev, Monotonicity::Increasing)?;
    let embed = region.embed_edges(sub)?;
    let big = exact_prob(&enumerate(region, xi, params)?, &ev.pull_back(&embed));
    let wired = exact_prob(&enumerate(sub, &BoundaryCondition::wired(sub), params)?, ev);
    let free = exact_prob(&enumerate(sub, &BoundaryCondition::free(sub), params)?, ev);
    Ok(vec![
        Check::new("MON", format!("wired pushed in: {}", ev.name()), big, wired, wired - big, EXACT_TOL),
        Check::new("MON", format!("free pushed in: {}", ev.name()), free, big, big - free, EXACT_TOL),
    ])
}
