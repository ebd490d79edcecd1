use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::events::{CrossingEvent, EventKind};
use crate::lattice::{dual_of, Rect, Region};
use crate::measure::{BoundaryCondition, Configuration, ModelParams};

use super::stats::log_se;
use super::{derive_seed, series_stats, ChainState, Constraint, Estimate, Init, Method, Sampler};

const NONE: u32 = u32::MAX;

/// Integer progress towards a connection event: the largest score of a vertex
/// joined to the sources by open edges inside the domain. The event holds iff
/// the progress reaches `target`. With `invert` set, the graph is a dual
/// region and an edge counts as open when the primal edge is closed.
#[derive(Clone, Debug)]
pub struct Progress {
    verts: Vec<u32>,
    adj_start: Vec<u32>,
    adj: Vec<(u32, u32)>,
    ends: Vec<[u32; 2]>,
    window: Vec<u32>,
    sources: Vec<u32>,
    score: Vec<u32>,
    target: u32,
    invert: bool,
    mark: Vec<u32>,
    stamp: u32,
    reached: Vec<u32>,
    rstamp: u32,
    queue: Vec<u32>,
}

impl Progress {
    /// Whether `event` has a progress function.
    pub fn supports(event: &CrossingEvent) -> bool {
        matches!(
            event.kind,
            EventKind::H | EventKind::V | EventKind::HComplement | EventKind::VComplement | EventKind::OneArm
        )
    }

    pub fn new(host: &Region, event: &CrossingEvent) -> Result<Progress> {
        let l = host.lattice().max_edge_len();
        let r = event.rect;
        match event.kind {
            EventKind::H => Progress::build(host, r, false, |x, _| x < r.a + l, |x, _| x - r.a, r.b - l + 1 - r.a),
            EventKind::V => Progress::build(host, r, false, |_, y| y < r.c + l, |_, y| y - r.c, r.d - l + 1 - r.c),
            EventKind::OneArm => {
                let n = event
                    .params
                    .n
                    .filter(|&n| n >= 1)
                    .ok_or_else(|| Error::InvalidEvent("one-arm event needs n >= 1".into()))?;
                let b = Rect::centered_box(n);
                Progress::build(host, b, false, |x, y| x == 0 && y == 0, |x, y| x.abs().max(y.abs()), n - l + 1)
            }
            EventKind::HComplement | EventKind::VComplement => {
                let primal = if event.kind == EventKind::HComplement {
                    CrossingEvent::horizontal(r)
                } else {
                    CrossingEvent::vertical(r)
                };
                let blocker = primal.dual_blocker()?;
                let dual = dual_of(host)?.dual;
                let mut p = Progress::new(&dual, &blocker)?;
                p.invert = true;
                Ok(p)
            }
            _ => Err(Error::InvalidEvent(format!("no progress function for {}", event.label()))),
        }
    }

    fn build(
        host: &Region,
        domain: Rect,
        invert: bool,
        is_source: impl Fn(i32, i32) -> bool,
        score: impl Fn(i32, i32) -> i32,
        target: i32,
    ) -> Result<Progress> {
        if !host.rect().contains_rect(&domain) {
            return Err(Error::TargetOutsideHost { target: domain.to_string(), host: host.rect().to_string() });
        }
        let verts = host.vertices_in(domain);
        let mut local = vec![NONE; host.num_vertices()];
        for (i, &v) in verts.iter().enumerate() {
            local[v as usize] = i as u32;
        }
        let mut ends = vec![[NONE; 2]; host.num_edges()];
        let mut adj_start = vec![0u32; verts.len() + 1];
        let within = host.edges_within(domain);
        for &e in &within {
            let [u, v] = host.edge(e);
            let (a, b) = (local[u as usize], local[v as usize]);
            ends[e as usize] = [a, b];
            adj_start[a as usize + 1] += 1;
            adj_start[b as usize + 1] += 1;
        }
        for i in 0..verts.len() {
            adj_start[i + 1] += adj_start[i];
        }
        let mut fill = adj_start.clone();
        let mut adj = vec![(0, 0); 2 * within.len()];
        for &e in &within {
            let [a, b] = ends[e as usize];
            adj[fill[a as usize] as usize] = (b, e);
            fill[a as usize] += 1;
            adj[fill[b as usize] as usize] = (a, e);
            fill[b as usize] += 1;
        }
        let target = target.max(0) as u32;
        let mut sources = Vec::new();
        let mut scores = Vec::with_capacity(verts.len());
        for (i, &v) in verts.iter().enumerate() {
            let s = host.site(v);
            if is_source(s.x, s.y) {
                sources.push(i as u32);
            }
            scores.push((score(s.x, s.y).max(0) as u32).min(target));
        }
        let n = verts.len();
        Ok(Progress {
            verts,
            adj_start,
            adj,
            ends,
            window: within,
            sources,
            score: scores,
            target,
            invert,
            mark: vec![0; n],
            stamp: 0,
            reached: vec![0; n],
            rstamp: 0,
            queue: Vec::new(),
        })
    }

    pub fn target(&self) -> u32 {
        self.target
    }

    pub fn num_vertices(&self) -> usize {
        self.verts.len()
    }

    #[inline]
    fn open(&self, config: &Configuration, e: u32) -> bool {
        config.is_open(e) != self.invert
    }

    fn next_stamp(&mut self) -> u32 {
        if self.stamp == u32::MAX {
            self.mark.fill(0);
            self.stamp = 0;
        }
        self.stamp += 1;
        self.stamp
    }

    /// Search from the sources ignoring `skip`, stopping once `stop` is reached.
    /// Returns the largest score seen.
    fn search(&mut self, config: &Configuration, stop: u32, skip: u32) -> u32 {
        let stamp = self.next_stamp();
        let mut queue = std::mem::take(&mut self.queue);
        queue.clear();
        let mut best = 0;
        for &s in &self.sources {
            self.mark[s as usize] = stamp;
            queue.push(s);
            best = best.max(self.score[s as usize]);
        }
        let mut head = 0;
        while head < queue.len() && best < stop {
            let x = queue[head];
            head += 1;
            for k in self.adj_start[x as usize]..self.adj_start[x as usize + 1] {
                let (y, e) = self.adj[k as usize];
                if e != skip && self.mark[y as usize] != stamp && self.open(config, e) {
                    self.mark[y as usize] = stamp;
                    best = best.max(self.score[y as usize]);
                    queue.push(y);
                }
            }
        }
        self.queue = queue;
        best
    }

    /// Current progress, capped at the target.
    pub fn value(&mut self, config: &Configuration) -> u32 {
        self.search(config, self.target, NONE)
    }

    fn reaches(&mut self, config: &Configuration, level: u32, skip: u32) -> bool {
        self.search(config, level, skip) >= level
    }

    /// Marks the whole source cluster as reached.
    fn mark_all(&mut self, config: &Configuration) {
        if self.rstamp == u32::MAX {
            self.reached.fill(0);
            self.rstamp = 0;
        }
        self.rstamp += 1;
        let sources = self.sources.clone();
        for s in sources {
            if self.reached[s as usize] != self.rstamp {
                self.extend(config, s);
            }
        }
    }

    fn extend(&mut self, config: &Configuration, from: u32) {
        let r = self.rstamp;
        let mut queue = std::mem::take(&mut self.queue);
        queue.clear();
        self.reached[from as usize] = r;
        queue.push(from);
        while let Some(x) = queue.pop() {
            for k in self.adj_start[x as usize]..self.adj_start[x as usize + 1] {
                let (y, e) = self.adj[k as usize];
                if self.reached[y as usize] != r && self.open(config, e) {
                    self.reached[y as usize] = r;
                    queue.push(y);
                }
            }
        }
        self.queue = queue;
    }
}

/// Keeps the progress at or above `level` during constrained Glauber sweeps.
/// The reached marks over-approximate the source cluster, which only costs
/// extra checks.
struct Gate<'a> {
    prog: &'a mut Progress,
    level: u32,
}

impl Constraint for Gate<'_> {
    fn allow(&mut self, config: &Configuration, e: u32, open: bool) -> bool {
        if open != self.prog.invert {
            return true;
        }
        let [a, b] = self.prog.ends[e as usize];
        if a == NONE {
            return true;
        }
        let r = self.prog.rstamp;
        if self.prog.reached[a as usize] != r && self.prog.reached[b as usize] != r {
            return true;
        }
        self.prog.reaches(config, self.level, e)
    }

    fn changed(&mut self, config: &Configuration, e: u32, open: bool) {
        if open == self.prog.invert {
            return;
        }
        let [a, b] = self.prog.ends[e as usize];
        if a == NONE {
            return;
        }
        let r = self.prog.rstamp;
        match (self.prog.reached[a as usize] == r, self.prog.reached[b as usize] == r) {
            (true, false) => self.prog.extend(config, b),
            (false, true) => self.prog.extend(config, a),
            _ => {}
        }
    }
}

fn default_burn() -> u32 {
    50
}
fn default_pilot() -> u32 {
    100
}
fn default_measure() -> u32 {
    400
}
fn default_rho() -> f64 {
    0.2
}
fn default_replicas() -> u32 {
    4
}
fn default_max_stages() -> u32 {
    400
}

/// Stage budget of the splitting estimator, in sweeps per stage.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitOptions {
    #[serde(default = "default_burn")]
    pub burn: u32,
    #[serde(default = "default_pilot")]
    pub pilot: u32,
    #[serde(default = "default_measure")]
    pub measure: u32,
    /// Target conditional probability per stage.
    #[serde(default = "default_rho")]
    pub rho: f64,
    #[serde(default = "default_replicas")]
    pub replicas: u32,
    #[serde(default = "default_max_stages")]
    pub max_stages: u32,
    #[serde(default)]
    pub seed: u64,
}

impl Default for SplitOptions {
    fn default() -> Self {
        SplitOptions {
            burn: default_burn(),
            pilot: default_pilot(),
            measure: default_measure(),
            rho: default_rho(),
            replicas: default_replicas(),
            max_stages: default_max_stages(),
            seed: 0,
        }
    }
}

impl SplitOptions {
    pub fn with_seed(mut self, seed: u64) -> SplitOptions {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.pilot == 0 || self.measure == 0 || self.replicas == 0 || self.max_stages == 0 {
            return Err(Error::InvalidSchedule("splitting budgets must be positive".into()));
        }
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return Err(Error::InvalidSchedule("rho must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

/// `P[progress >= level]` with the standard error of its logarithm.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub level: u32,
    pub prob: f64,
    pub log_stderr: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitResult {
    pub estimate: Estimate,
    /// Tail probabilities at every level from 1 to the target.
    pub curve: Vec<CurvePoint>,
    pub stages: usize,
}

struct Replica {
    log_p: Vec<Option<(f64, f64)>>,
    tau: f64,
    samples: u64,
    stages: usize,
    failed: bool,
}

/// Cluster moves below this acceptance rate are dropped for the rest of a stage.
const MIN_CM_ACCEPTANCE: f64 = 0.05;

/// One rejected cluster move (if `cm`) and one constrained sweep; returns
/// whether the cluster move was accepted. With cluster moves on, the sweep
/// only covers the domain of the progress function, the cluster moves keep
/// the rest of the configuration mixing.
fn split_step(sampler: &Sampler, st: &mut ChainState, prog: &mut Progress, level: u32, cm: bool) -> bool {
    let mut accepted = false;
    if cm {
        let saved = st.config.clone();
        sampler.cm_inner(st);
        accepted = level == 0 || prog.reaches(&st.config, level, NONE);
        if !accepted {
            st.config = saved;
        }
    }
    if level == 0 && !cm {
        sampler.glauber_sweep(st);
    } else if level == 0 {
        let window = std::mem::take(&mut prog.window);
        sampler.glauber_sweep_edges(st, window.iter().copied(), &mut super::Unconstrained);
        prog.window = window;
    } else {
        prog.mark_all(&st.config);
        let window = std::mem::take(&mut prog.window);
        if cm {
            sampler.glauber_sweep_edges(st, window.iter().copied(), &mut Gate { prog, level });
        } else {
            sampler.glauber_sweep_with(st, &mut Gate { prog, level });
        }
        prog.window = window;
    }
    accepted
}

fn run_replica(sampler: &Sampler, template: &Progress, opts: &SplitOptions, r: u64) -> Replica {
    let mut prog = template.clone();
    let target = prog.target;
    let cm = sampler.params().q >= 1.0;
    // Level zero is the empty primal or the empty dual configuration.
    let init = if prog.invert { Init::Open } else { Init::Closed };
    let mut st = ChainState::new(sampler, derive_seed(opts.seed, r), r, init);
    let mut log_p = vec![None; target as usize + 1];
    log_p[0] = Some((0.0, 0.0));
    let (mut level, mut acc, mut var) = (0u32, 0.0f64, 0.0f64);
    let (mut tau, mut samples, mut stages, mut failed) = (0.5f64, 0u64, 0usize, false);
    while stages < opts.max_stages as usize {
        stages += 1;
        let mut accepted = 0;
        for _ in 0..opts.burn {
            accepted += split_step(sampler, &mut st, &mut prog, level, cm) as u32;
        }
        let cm = cm && (level == 0 || accepted as f64 >= MIN_CM_ACCEPTANCE * opts.burn as f64);
        let mut pilot = Vec::with_capacity(opts.pilot as usize);
        for _ in 0..opts.pilot {
            split_step(sampler, &mut st, &mut prog, level, cm);
            pilot.push(prog.value(&st.config));
        }
        let mut next = level + 1;
        for l in (level + 1..=target).rev() {
            let frac = pilot.iter().filter(|&&x| x >= l).count() as f64 / pilot.len() as f64;
            if frac >= opts.rho {
                next = l;
                break;
            }
        }
        let mut values = Vec::with_capacity(opts.measure as usize);
        let mut saved: Option<Configuration> = None;
        for _ in 0..opts.measure {
            split_step(sampler, &mut st, &mut prog, level, cm);
            let x = prog.value(&st.config);
            if x >= next {
                saved = Some(st.config.clone());
            }
            values.push(x);
        }
        samples += values.len() as u64;
        for l in level + 1..=next {
            let ind: Vec<f64> = values.iter().map(|&x| (x >= l) as u8 as f64).collect();
            let s = series_stats(&ind);
            if s.mean > 0.0 {
                let se = s.stderr / s.mean;
                log_p[l as usize] = Some((acc + s.mean.ln(), var + se * se));
            }
            if l == next {
                tau = tau.max(s.tau_int);
            }
        }
        match (log_p[next as usize], saved) {
            (Some((lp, v)), Some(cfg)) => {
                acc = lp;
                var = v;
                st.config = cfg;
            }
            _ => {
                failed = true;
                break;
            }
        }
        if next >= target {
            break;
        }
        level = next;
    }
    if level < target && !failed && log_p[target as usize].is_none() {
        failed = true;
    }
    Replica { log_p, tau, samples, stages, failed }
}

/// Multilevel splitting estimate of a rare crossing event: the probability is
/// a product of conditional probabilities `P[X >= l_{i+1} | X >= l_i]` of the
/// progress `X`, each measured on a chain kept inside `{X >= l_i}` by
/// rejected cluster moves and constrained heat-bath sweeps. Levels are chosen
/// from a pilot run so that each ratio is about `rho`; the measurement run is
/// separate from the pilot. Complements of crossings run on the dual.
pub fn split_estimate(
    region: &Region,
    bc: &BoundaryCondition,
    params: ModelParams,
    event: &CrossingEvent,
    opts: &SplitOptions,
) -> Result<SplitResult> {
    opts.validate()?;
    let sampler = Sampler::new(region, bc, params)?;
    let mut prog = Progress::new(region, event)?;
    let target = prog.target;
    if params.is_degenerate() || target == 0 {
        let c = if params.p >= 1.0 {
            Configuration::all_open(region.num_edges())
        } else {
            Configuration::all_closed(region.num_edges())
        };
        let x = prog.value(&c);
        let curve =
            (1..=target).map(|l| CurvePoint { level: l, prob: (x >= l) as u8 as f64, log_stderr: 0.0 }).collect();
        return Ok(SplitResult { estimate: Estimate::exact((x >= target) as u8 as f64), curve, stages: 0 });
    }
    let reps: Vec<Replica> =
        (0..opts.replicas as u64).into_par_iter().map(|r| run_replica(&sampler, &prog, opts, r)).collect();
    let k = reps.len() as f64;
    let level_stats = |l: usize| -> (f64, f64) {
        let probs: Vec<f64> = reps.iter().map(|r| r.log_p[l].map_or(0.0, |(lp, _)| lp.exp())).collect();
        let mean = probs.iter().sum::<f64>() / k;
        let internal =
            reps.iter().map(|r| r.log_p[l].map_or(0.0, |(lp, v)| lp.exp().powi(2) * v)).sum::<f64>().sqrt() / k;
        let spread = if reps.len() > 1 {
            (probs.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / (k - 1.0) / k).sqrt()
        } else {
            0.0
        };
        (mean, internal.max(spread))
    };
    let curve: Vec<CurvePoint> = (1..=target as usize)
        .map(|l| {
            let (prob, se) = level_stats(l);
            CurvePoint { level: l as u32, prob, log_stderr: log_se(prob, se) }
        })
        .collect();
    let (mean, stderr) = level_stats(target as usize);
    let tau = reps.iter().map(|r| r.tau).fold(0.5, f64::max);
    let estimate = Estimate {
        mean,
        stderr,
        tau_int: tau,
        n: reps.iter().map(|r| r.samples).sum(),
        chain_means: reps.iter().map(|r| r.log_p[target as usize].map_or(0.0, |(lp, _)| lp.exp())).collect(),
        unreliable: reps.iter().any(|r| r.failed) || tau > opts.measure as f64 / 10.0,
        method: Method::Splitting,
        log_stderr: log_se(mean, stderr),
    };
    let stages = reps.iter().map(|r| r.stages).max().unwrap_or(0);
    Ok(SplitResult { estimate, curve, stages })
}
