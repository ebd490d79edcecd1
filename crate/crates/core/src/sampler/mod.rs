//! Markov chain samplers for the random-cluster measure: heat-bath Glauber
//! dynamics, Chayes-Machta cluster moves, monotone coupled pairs and a
//! multilevel splitting estimator for rare crossing events.

mod monotone;
mod rng;
mod splitting;
mod stats;

pub use monotone::{monotone_pair_run, PairEstimate};
pub use rng::{derive_seed, splitmix64, sweep_rng};
pub use splitting::{split_estimate, Progress, SplitOptions, SplitResult};
pub use stats::{merge_chains, series_stats, Estimate, Method, SeriesStats};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::events::{CompiledEvent, CrossingEvent, EventKind, Scratch};
use crate::lattice::Region;
use crate::measure::cluster::BiSearch;
use crate::measure::{BoundaryCondition, Configuration, ContractedGraph, ModelParams};
use crate::unionfind::UnionFind;

/// Upper limit on automatic burn-in, in sweeps.
pub const MAX_AUTO_BURN_IN: u64 = 100_000;

fn default_thin() -> u64 {
    1
}

fn default_chains() -> u32 {
    4
}

/// Run lengths. Without an explicit `burn_in`, each chain burns in for
/// `64 tau` sweeps with `tau` measured on a pilot stretch.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Schedule {
    #[serde(default)]
    pub burn_in: Option<u64>,
    pub sweeps: u64,
    #[serde(default = "default_thin")]
    pub thin: u64,
    #[serde(default = "default_chains")]
    pub chains: u32,
    #[serde(default)]
    pub seed: u64,
}

impl Schedule {
    pub fn new(sweeps: u64, seed: u64) -> Schedule {
        Schedule { burn_in: None, sweeps, thin: 1, chains: default_chains(), seed }
    }

    pub fn with_burn_in(mut self, burn_in: u64) -> Schedule {
        self.burn_in = Some(burn_in);
        self
    }

    pub fn with_chains(mut self, chains: u32) -> Schedule {
        self.chains = chains;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.sweeps == 0 || self.thin == 0 || self.chains == 0 {
            return Err(Error::InvalidSchedule("sweeps, thin and chains must be positive".into()));
        }
        if self.burn_in == Some(0) {
            return Err(Error::InvalidSchedule("burn_in must be positive when given".into()));
        }
        Ok(())
    }

    /// Samples recorded per chain.
    pub fn samples(&self) -> u64 {
        self.sweeps / self.thin
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Dynamics {
    /// Chayes-Machta for `q >= 1`, Glauber otherwise.
    #[default]
    Auto,
    Glauber,
    ChayesMachta,
}

impl Dynamics {
    pub fn resolve(self, params: ModelParams) -> Result<Dynamics> {
        match self {
            Dynamics::Auto if params.q >= 1.0 => Ok(Dynamics::ChayesMachta),
            Dynamics::Auto => Ok(Dynamics::Glauber),
            Dynamics::ChayesMachta if params.q < 1.0 => {
                Err(Error::InvalidParams("Chayes-Machta dynamics needs q >= 1".into()))
            }
            d => Ok(d),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Init {
    Closed,
    Open,
}

/// One chain: its configuration, position in the random stream and buffers.
#[derive(Clone, Debug)]
pub struct ChainState {
    pub config: Configuration,
    pub sweep: u64,
    pub chain: u64,
    pub seed: u64,
    search: BiSearch,
    uf: UnionFind,
    draws: Vec<f64>,
    active: Vec<bool>,
}

impl ChainState {
    pub fn new(sampler: &Sampler, seed: u64, chain: u64, init: Init) -> ChainState {
        let m = sampler.graph.num_edges();
        ChainState {
            config: match init {
                Init::Closed => Configuration::all_closed(m),
                Init::Open => Configuration::all_open(m),
            },
            sweep: 0,
            chain,
            seed,
            search: BiSearch::new(sampler.graph.num_nodes()),
            uf: UnionFind::new(sampler.graph.num_nodes()),
            draws: Vec::new(),
            active: Vec::new(),
        }
    }
}

/// Veto hook for constrained dynamics. `allow` is asked before an edge flips,
/// `changed` is told after.
pub(crate) trait Constraint {
    fn allow(&mut self, config: &Configuration, e: u32, open: bool) -> bool;
    fn changed(&mut self, config: &Configuration, e: u32, open: bool);
}

struct Unconstrained;

impl Constraint for Unconstrained {
    #[inline]
    fn allow(&mut self, _: &Configuration, _: u32, _: bool) -> bool {
        true
    }
    #[inline]
    fn changed(&mut self, _: &Configuration, _: u32, _: bool) {}
}

/// The measure on a region with a boundary condition, prepared for sampling.
#[derive(Clone, Debug)]
pub struct Sampler {
    graph: ContractedGraph,
    params: ModelParams,
}

impl Sampler {
    pub fn new(region: &Region, bc: &BoundaryCondition, params: ModelParams) -> Result<Sampler> {
        params.validate()?;
        Ok(Sampler { graph: ContractedGraph::new(region, bc)?, params })
    }

    pub fn graph(&self) -> &ContractedGraph {
        &self.graph
    }

    pub fn params(&self) -> ModelParams {
        self.params
    }

    pub fn num_edges(&self) -> usize {
        self.graph.num_edges()
    }

    /// Heat-bath decision for edge `e` given uniform `u`. Connectivity is only
    /// queried when `u` falls between the two conditional probabilities.
    #[inline]
    pub(crate) fn heat_bath(&self, config: &Configuration, search: &mut BiSearch, e: u32, u: f64) -> bool {
        let p = self.params.p;
        let pi = self.params.isolated_open_prob();
        let (lo, hi) = if p <= pi { (p, pi) } else { (pi, p) };
        if u < lo {
            return true;
        }
        if u >= hi {
            return false;
        }
        let [a, b] = self.graph.edge(e);
        let linked = search.connected(&self.graph, |x| x != e && config.is_open(x), a, b);
        u < if linked { p } else { pi }
    }

    /// One systematic-scan heat-bath sweep, one uniform per edge.
    pub fn glauber_sweep(&self, st: &mut ChainState) {
        self.glauber_sweep_with(st, &mut Unconstrained);
    }

    pub(crate) fn glauber_sweep_with<C: Constraint>(&self, st: &mut ChainState, cons: &mut C) {
        self.glauber_sweep_edges(st, 0..self.graph.num_edges() as u32, cons);
    }

    /// Heat-bath updates of `edges` in order, one uniform each.
    pub(crate) fn glauber_sweep_edges<C: Constraint>(
        &self,
        st: &mut ChainState,
        edges: impl IntoIterator<Item = u32>,
        cons: &mut C,
    ) {
        let mut rng = sweep_rng(st.seed, st.chain, st.sweep, 0);
        for e in edges {
            let u: f64 = rng.gen();
            let open = self.heat_bath(&st.config, &mut st.search, e, u);
            if open != st.config.is_open(e) && cons.allow(&st.config, e, open) {
                st.config.set(e, open);
                cons.changed(&st.config, e, open);
            }
        }
        st.sweep += 1;
    }

    /// Chayes-Machta move with a single active colour: every cluster is active
    /// with probability `1/q`, then edges between active vertices are
    /// resampled as independent Bernoulli(`p`).
    pub fn chayes_machta_step(&self, st: &mut ChainState) -> Result<()> {
        if self.params.q < 1.0 {
            return Err(Error::InvalidParams("Chayes-Machta dynamics needs q >= 1".into()));
        }
        self.cm_inner(st);
        Ok(())
    }

    fn cm_inner(&self, st: &mut ChainState) {
        let nodes = self.graph.num_nodes();
        let mut rng = sweep_rng(st.seed, st.chain, st.sweep, 1);
        st.uf.reset(nodes);
        for e in st.config.open_edges() {
            let [a, b] = self.graph.edge(e);
            st.uf.union(a, b);
        }
        st.draws.clear();
        st.draws.extend((0..nodes).map(|_| rng.gen::<f64>()));
        let inv_q = 1.0 / self.params.q;
        st.active.clear();
        for x in 0..nodes as u32 {
            let r = st.uf.find(x);
            st.active.push(st.draws[r as usize] < inv_q);
        }
        let p = self.params.p;
        for e in 0..self.graph.num_edges() as u32 {
            let u: f64 = rng.gen();
            let [a, b] = self.graph.edge(e);
            if st.active[a as usize] && st.active[b as usize] {
                st.config.set(e, u < p);
            }
        }
        st.sweep += 1;
    }

    /// One step of `dynamics` (which must already be resolved).
    pub fn step(&self, st: &mut ChainState, dynamics: Dynamics) {
        match dynamics {
            Dynamics::ChayesMachta if self.params.q >= 1.0 => self.cm_inner(st),
            _ => self.glauber_sweep(st),
        }
    }
}

/// One Glauber sweep of a chain on `region` (convenience wrapper).
pub fn glauber_sweep(st: &mut ChainState, region: &Region, bc: &BoundaryCondition, params: ModelParams) -> Result<()> {
    let s = Sampler::new(region, bc, params)?;
    if st.config.len() != s.num_edges() {
        return Err(Error::Mismatch("chain does not match the region".into()));
    }
    s.glauber_sweep(st);
    Ok(())
}

/// One Chayes-Machta step of a chain on `region` (convenience wrapper).
pub fn chayes_machta_step(
    st: &mut ChainState,
    region: &Region,
    bc: &BoundaryCondition,
    params: ModelParams,
) -> Result<()> {
    let s = Sampler::new(region, bc, params)?;
    if st.config.len() != s.num_edges() {
        return Err(Error::Mismatch("chain does not match the region".into()));
    }
    s.chayes_machta_step(st)
}

fn deterministic_config(params: ModelParams, m: usize) -> Configuration {
    if params.p >= 1.0 {
        Configuration::all_open(m)
    } else {
        Configuration::all_closed(m)
    }
}

fn init_for(chain: u64) -> Init {
    if chain.is_multiple_of(2) {
        Init::Closed
    } else {
        Init::Open
    }
}

/// Burns in a chain, measuring `tau` of the first observable on a pilot
/// stretch when the schedule does not fix the burn-in.
fn burn_in(
    sampler: &Sampler,
    st: &mut ChainState,
    dynamics: Dynamics,
    schedule: &Schedule,
    probe: Option<&CompiledEvent>,
    scratch: &mut Scratch,
) {
    if let Some(b) = schedule.burn_in {
        for _ in 0..b {
            sampler.step(st, dynamics);
        }
        return;
    }
    let pilot = (schedule.sweeps / 4).clamp(64, 4096);
    let mut series = Vec::with_capacity(pilot as usize);
    for _ in 0..pilot {
        sampler.step(st, dynamics);
        if let Some(ev) = probe {
            series.push(ev.holds_with(&st.config, scratch) as u8 as f64);
        }
    }
    let tau = series_stats(&series).tau_int;
    let target = ((64.0 * tau).ceil() as u64).min(MAX_AUTO_BURN_IN);
    for _ in pilot..target {
        sampler.step(st, dynamics);
    }
}

/// Indicator series of `events` along one chain after burn-in.
pub fn run_chain(
    sampler: &Sampler,
    dynamics: Dynamics,
    schedule: &Schedule,
    chain: u64,
    events: &[CompiledEvent],
) -> Result<Vec<Vec<f64>>> {
    schedule.validate()?;
    let dynamics = dynamics.resolve(sampler.params)?;
    for ev in events {
        if ev.num_edges() != sampler.num_edges() {
            return Err(Error::Mismatch(format!("event {} compiled for another region", ev.label())));
        }
    }
    let mut st = ChainState::new(sampler, schedule.seed, chain, init_for(chain));
    let mut scratch = Scratch::default();
    burn_in(sampler, &mut st, dynamics, schedule, events.first(), &mut scratch);
    let samples = schedule.samples() as usize;
    let mut out = vec![Vec::with_capacity(samples); events.len()];
    for _ in 0..samples {
        for _ in 0..schedule.thin {
            sampler.step(&mut st, dynamics);
        }
        for (s, ev) in out.iter_mut().zip(events) {
            s.push(ev.holds_with(&st.config, &mut scratch) as u8 as f64);
        }
    }
    Ok(out)
}

/// Estimates several events from the same chains, run in parallel.
pub fn estimate_events(
    region: &Region,
    bc: &BoundaryCondition,
    params: ModelParams,
    events: &[CompiledEvent],
    schedule: &Schedule,
    dynamics: Dynamics,
) -> Result<Vec<Estimate>> {
    schedule.validate()?;
    let sampler = Sampler::new(region, bc, params)?;
    if params.is_degenerate() {
        let c = deterministic_config(params, sampler.num_edges());
        return Ok(events.iter().map(|ev| Estimate::exact(ev.holds(&c) as u8 as f64)).collect());
    }
    let per_chain = (0..schedule.chains as u64)
        .into_par_iter()
        .map(|chain| run_chain(&sampler, dynamics, schedule, chain, events))
        .collect::<Result<Vec<_>>>()?;
    Ok((0..events.len())
        .map(|i| {
            let series: Vec<Vec<f64>> = per_chain.iter().map(|c| c[i].clone()).collect();
            merge_chains(&series)
        })
        .collect())
}

/// Direct Monte Carlo estimate of `phi[event]`.
pub fn estimate_event(
    region: &Region,
    bc: &BoundaryCondition,
    params: ModelParams,
    event: &CrossingEvent,
    schedule: &Schedule,
) -> Result<Estimate> {
    let ev = event.compile(region)?;
    Ok(estimate_events(region, bc, params, &[ev], schedule, Dynamics::Auto)?.remove(0))
}

/// Fewer hits than this switch estimation to splitting.
pub const MIN_HITS: f64 = 50.0;

/// Direct estimate, falling back to multilevel splitting on the event or its
/// complement when fewer than `MIN_HITS` samples land on the rare side.
pub fn estimate_probability(
    region: &Region,
    bc: &BoundaryCondition,
    params: ModelParams,
    event: &CrossingEvent,
    schedule: &Schedule,
    split: &SplitOptions,
) -> Result<Estimate> {
    Ok(estimate_both(region, bc, params, event, schedule, split)?.0)
}

/// Crossing events whose complement also has a progress function.
fn complement_of(event: &CrossingEvent) -> Option<CrossingEvent> {
    match event.kind {
        EventKind::H => Some(CrossingEvent::h_complement(event.rect)),
        EventKind::V => Some(CrossingEvent::v_complement(event.rect)),
        EventKind::HComplement => Some(CrossingEvent::horizontal(event.rect)),
        EventKind::VComplement => Some(CrossingEvent::vertical(event.rect)),
        _ => None,
    }
}

/// Estimates of `phi[event]` and `1 - phi[event]`, each with its own relative
/// precision: the rare side comes from splitting when the direct run sees
/// fewer than `MIN_HITS` samples on it.
pub fn estimate_both(
    region: &Region,
    bc: &BoundaryCondition,
    params: ModelParams,
    event: &CrossingEvent,
    schedule: &Schedule,
    split: &SplitOptions,
) -> Result<(Estimate, Estimate)> {
    let direct = estimate_event(region, bc, params, event, schedule)?;
    if direct.method == Method::Exact {
        let c = direct.complement();
        return Ok((direct, c));
    }
    let hits = direct.hits();
    let misses = direct.n as f64 - hits;
    if hits < MIN_HITS && Progress::supports(event) {
        let s = split_estimate(region, bc, params, event, split)?.estimate;
        let c = s.complement();
        return Ok((s, c));
    }
    if misses < MIN_HITS {
        if let Some(comp) = complement_of(event) {
            let s = split_estimate(region, bc, params, &comp, split)?.estimate;
            return Ok((s.complement(), s));
        }
    }
    let c = direct.complement();
    Ok((direct, c))
}

/// A configuration drawn after `schedule.burn_in + schedule.sweeps` steps of chain 0.
pub fn sample_configuration(
    region: &Region,
    bc: &BoundaryCondition,
    params: ModelParams,
    schedule: &Schedule,
    dynamics: Dynamics,
) -> Result<Configuration> {
    schedule.validate()?;
    let sampler = Sampler::new(region, bc, params)?;
    if params.is_degenerate() {
        return Ok(deterministic_config(params, sampler.num_edges()));
    }
    let dynamics = dynamics.resolve(params)?;
    let mut st = ChainState::new(&sampler, schedule.seed, 0, Init::Closed);
    let total = schedule.burn_in.unwrap_or(schedule.sweeps) + schedule.sweeps;
    for _ in 0..total {
        sampler.step(&mut st, dynamics);
    }
    Ok(st.config)
}
