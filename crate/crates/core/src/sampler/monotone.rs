use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::events::{CompiledEvent, Scratch};
use crate::lattice::Region;
use crate::measure::{bc_dominates, BoundaryCondition, ModelParams};

use super::{merge_chains, sweep_rng, ChainState, Estimate, Init, Sampler, Schedule};

/// Bracketing estimates from a monotone coupled pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairEstimate {
    pub label: String,
    /// From the chain started all-closed under the smaller boundary condition.
    pub low: Estimate,
    /// From the chain started all-open under the larger boundary condition.
    pub high: Estimate,
    /// First sweep at which the two configurations agreed, per pair.
    pub coalesced: Vec<Option<u64>>,
}

fn run_pair(
    lo: &Sampler,
    hi: &Sampler,
    schedule: &Schedule,
    pair: u64,
    events: &[CompiledEvent],
) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>, Option<u64>)> {
    let mut a = ChainState::new(lo, schedule.seed, pair, Init::Closed);
    let mut b = ChainState::new(hi, schedule.seed, pair, Init::Open);
    let m = lo.num_edges() as u32;
    let burn = schedule.burn_in.unwrap_or(schedule.sweeps / 4);
    let total = burn + schedule.sweeps;
    let mut coalesced = None;
    let mut scratch = Scratch::default();
    let mut low = vec![Vec::new(); events.len()];
    let mut high = vec![Vec::new(); events.len()];
    for sweep in 0..total {
        let mut rng = sweep_rng(schedule.seed, pair, sweep, 0);
        for e in 0..m {
            let u: f64 = rng.gen();
            let x = lo.heat_bath(&a.config, &mut a.search, e, u);
            a.config.set(e, x);
            let y = hi.heat_bath(&b.config, &mut b.search, e, u);
            b.config.set(e, y);
        }
        a.sweep += 1;
        b.sweep += 1;
        if !a.config.le(&b.config) {
            let edge = a.config.first_excess(&b.config).unwrap_or(0);
            return Err(Error::OrderingViolated { sweep, edge });
        }
        if coalesced.is_none() && a.config == b.config {
            coalesced = Some(sweep);
        }
        if sweep >= burn && (sweep - burn + 1).is_multiple_of(schedule.thin) {
            for (i, ev) in events.iter().enumerate() {
                low[i].push(ev.holds_with(&a.config, &mut scratch) as u8 as f64);
                high[i].push(ev.holds_with(&b.config, &mut scratch) as u8 as f64);
            }
        }
    }
    Ok((low, high, coalesced))
}

/// Runs `schedule.chains` coupled pairs of heat-bath chains sharing every
/// uniform: the low chain under `bc_low` from all-closed, the high chain under
/// `bc_high` from all-open. The pointwise order is checked after every sweep.
pub fn monotone_pair_run(
    region: &Region,
    bc_low: &BoundaryCondition,
    bc_high: &BoundaryCondition,
    params: ModelParams,
    events: &[CompiledEvent],
    schedule: &Schedule,
) -> Result<Vec<PairEstimate>> {
    schedule.validate()?;
    if params.q < 1.0 {
        return Err(Error::InvalidParams("monotone coupling needs q >= 1".into()));
    }
    if !bc_dominates(bc_low, bc_high)? {
        return Err(Error::DominationViolated("the high boundary condition must dominate the low one".into()));
    }
    let lo = Sampler::new(region, bc_low, params)?;
    let hi = Sampler::new(region, bc_high, params)?;
    for ev in events {
        if ev.num_edges() != lo.num_edges() {
            return Err(Error::Mismatch(format!("event {} compiled for another region", ev.label())));
        }
    }
    let runs = (0..schedule.chains as u64)
        .into_par_iter()
        .map(|pair| run_pair(&lo, &hi, schedule, pair, events))
        .collect::<Result<Vec<_>>>()?;
    let coalesced: Vec<Option<u64>> = runs.iter().map(|r| r.2).collect();
    Ok(events
        .iter()
        .enumerate()
        .map(|(i, ev)| {
            let low: Vec<Vec<f64>> = runs.iter().map(|r| r.0[i].clone()).collect();
            let high: Vec<Vec<f64>> = runs.iter().map(|r| r.1[i].clone()).collect();
            PairEstimate {
                label: ev.label().to_string(),
                low: merge_chains(&low),
                high: merge_chains(&high),
                coalesced: coalesced.clone(),
            }
        })
        .collect())
}
