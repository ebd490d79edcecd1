//! Brute-force enumeration of the random-cluster measure on small regions and
//! exact checks of its correlation and comparison inequalities.

mod corpus;
mod verify;

pub use corpus::{rect_graphs, run_corpus, Corpus, CorpusGraph, CorpusOptions, CorpusReport};
pub use verify::{verify_cbc, verify_duality, verify_fi, verify_fkg, verify_mon, verify_smp, Check};

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::Region;
use crate::measure::{BoundaryCondition, Configuration, ContractedGraph, ModelParams};

/// Largest edge count accepted by [`enumerate`].
pub const MAX_ENUM_EDGES: usize = 24;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Monotonicity {
    Increasing,
    Decreasing,
    None,
}

impl Monotonicity {
    pub fn flip(self) -> Monotonicity {
        match self {
            Monotonicity::Increasing => Monotonicity::Decreasing,
            Monotonicity::Decreasing => Monotonicity::Increasing,
            Monotonicity::None => Monotonicity::None,
        }
    }
}

type Pred = dyn Fn(&Configuration) -> bool + Send + Sync;

/// An event given as a predicate on configurations, tagged with its monotonicity.
#[derive(Clone)]
pub struct EventPredicate {
    name: String,
    monotonicity: Monotonicity,
    pred: Arc<Pred>,
}

impl fmt::Debug for EventPredicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EventPredicate").field("name", &self.name).field("monotonicity", &self.monotonicity).finish()
    }
}

impl EventPredicate {
    pub fn new(
        name: impl Into<String>,
        monotonicity: Monotonicity,
        pred: impl Fn(&Configuration) -> bool + Send + Sync + 'static,
    ) -> EventPredicate {
        EventPredicate { name: name.into(), monotonicity, pred: Arc::new(pred) }
    }

    pub fn increasing(
        name: impl Into<String>,
        pred: impl Fn(&Configuration) -> bool + Send + Sync + 'static,
    ) -> EventPredicate {
        EventPredicate::new(name, Monotonicity::Increasing, pred)
    }

    pub fn always() -> EventPredicate {
        EventPredicate::increasing("always", |_| true)
    }

    pub fn edge_open(e: u32) -> EventPredicate {
        EventPredicate::increasing(format!("edge {e} open"), move |c| c.is_open(e))
    }

    pub fn all_open() -> EventPredicate {
        EventPredicate::increasing("all open", |c| c.count_open() == c.len())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn monotonicity(&self) -> Monotonicity {
        self.monotonicity
    }

    #[inline]
    pub fn holds(&self, config: &Configuration) -> bool {
        (self.pred)(config)
    }

    pub fn complement(&self) -> EventPredicate {
        let pred = self.pred.clone();
        EventPredicate {
            name: format!("not({})", self.name),
            monotonicity: self.monotonicity.flip(),
            pred: Arc::new(move |c| !pred(c)),
        }
    }

    pub fn and(&self, other: &EventPredicate) -> EventPredicate {
        let (p, q) = (self.pred.clone(), other.pred.clone());
        let monotonicity = if self.monotonicity == other.monotonicity { self.monotonicity } else { Monotonicity::None };
        EventPredicate {
            name: format!("{} and {}", self.name, other.name),
            monotonicity,
            pred: Arc::new(move |c| p(c) && q(c)),
        }
    }

    /// Pulls an event on a subregion back to a region through an edge embedding.
    pub fn pull_back(&self, embed: &[u32]) -> EventPredicate {
        let pred = self.pred.clone();
        let embed = embed.to_vec();
        EventPredicate {
            name: self.name.clone(),
            monotonicity: self.monotonicity,
            pred: Arc::new(move |c| {
                let sub: Vec<bool> = embed.iter().map(|&e| c.is_open(e)).collect();
                pred(&Configuration::from_bools(&sub))
            }),
        }
    }

    /// Spot-checks the monotonicity flag on random pairs `omega <= omega'`.
    /// Returns the first counterexample found.
    pub fn find_monotonicity_violation(
        &self,
        num_edges: usize,
        trials: usize,
        seed: u64,
    ) -> Option<(Configuration, Configuration)> {
        if self.monotonicity == Monotonicity::None {
            return None;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..trials {
            let density: f64 = rng.gen();
            let low: Vec<bool> = (0..num_edges).map(|_| rng.gen::<f64>() < density).collect();
            let high: Vec<bool> = low.iter().map(|&b| b || rng.gen::<f64>() < 0.3).collect();
            let (lo, hi) = (Configuration::from_bools(&low), Configuration::from_bools(&high));
            let (a, b) = (self.holds(&lo), self.holds(&hi));
            let bad = match self.monotonicity {
                Monotonicity::Increasing => a && !b,
                Monotonicity::Decreasing => b && !a,
                Monotonicity::None => false,
            };
            if bad {
                return Some((lo, hi));
            }
        }
        None
    }
}

/// `k_xi(omega)` for every configuration of a region, indexed by edge mask.
#[derive(Clone, Debug)]
pub struct ClusterTable {
    num_edges: usize,
    counts: Vec<u8>,
}

impl ClusterTable {
    pub fn new(region: &Region, bc: &BoundaryCondition) -> Result<ClusterTable> {
        let m = region.num_edges();
        if m > MAX_ENUM_EDGES {
            return Err(Error::TooLargeForEnumeration { edges: m, limit: MAX_ENUM_EDGES });
        }
        let graph = ContractedGraph::new(region, bc)?;
        let nodes = graph.num_nodes();
        if nodes > u8::MAX as usize {
            return Err(Error::TooLargeForEnumeration { edges: m, limit: MAX_ENUM_EDGES });
        }
        let ends: Vec<[u8; 2]> = graph.edges().iter().map(|&[a, b]| [a as u8, b as u8]).collect();
        let mut counts = vec![0u8; 1usize << m];
        const CHUNK: usize = 1 << 12;
        counts.par_chunks_mut(CHUNK).enumerate().for_each(|(ci, chunk)| {
            let mut parent = vec![0u8; nodes];
            for (i, slot) in chunk.iter_mut().enumerate() {
                let mask = (ci * CHUNK + i) as u64;
                for (j, p) in parent.iter_mut().enumerate() {
                    *p = j as u8;
                }
                let mut k = nodes;
                let mut bits = mask;
                while bits != 0 {
                    let e = bits.trailing_zeros() as usize;
                    bits &= bits - 1;
                    let [a, b] = ends[e];
                    let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                    if ra != rb {
                        parent[ra as usize] = rb;
                        k -= 1;
                    }
                }
                *slot = k as u8;
            }
        });
        Ok(ClusterTable { num_edges: m, counts })
    }

    pub fn num_edges(&self) -> usize {
        self.num_edges
    }

    #[inline]
    pub fn count(&self, mask: u64) -> u32 {
        self.counts[mask as usize] as u32
    }

    /// Normalized measure at `params`, reusing the cluster counts.
    pub fn distribution(
        &self,
        region: &Region,
        bc: &BoundaryCondition,
        params: ModelParams,
    ) -> Result<ExactDistribution> {
        params.validate()?;
        if region.num_edges() != self.num_edges {
            return Err(Error::Mismatch("cluster table built for a different region".into()));
        }
        let m = self.num_edges;
        let full = crate::measure::full_mask(m);
        let log_weights: Vec<f64> = if params.p == 0.0 || params.p == 1.0 {
            let keep = if params.p == 0.0 { 0 } else { full };
            (0..self.counts.len() as u64).map(|mask| if mask == keep { 0.0 } else { f64::NEG_INFINITY }).collect()
        } else {
            let a = (params.p / (1.0 - params.p)).ln();
            let b = params.q.ln();
            self.counts
                .par_iter()
                .enumerate()
                .map(|(mask, &k)| (mask as u64).count_ones() as f64 * a + k as f64 * b)
                .collect()
        };
        let max = log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        // Fixed chunks summed in order keep the result independent of the pool size.
        let partial: Vec<f64> =
            log_weights.par_chunks(1 << 12).map(|c| c.iter().map(|&w| (w - max).exp()).sum::<f64>()).collect();
        let sum: f64 = partial.iter().sum();
        let log_z = max + sum.ln();
        Ok(ExactDistribution { region: region.clone(), bc: bc.clone(), params, log_weights, log_z })
    }
}

#[inline]
fn find(parent: &mut [u8], mut x: u8) -> u8 {
    while parent[x as usize] != x {
        let g = parent[parent[x as usize] as usize];
        parent[x as usize] = g;
        x = g;
    }
    x
}

/// The exactly enumerated measure on a small region.
#[derive(Clone, Debug)]
pub struct ExactDistribution {
    region: Region,
    bc: BoundaryCondition,
    params: ModelParams,
    log_weights: Vec<f64>,
    log_z: f64,
}

impl ExactDistribution {
    pub fn region(&self) -> &Region {
        &self.region
    }

    pub fn bc(&self) -> &BoundaryCondition {
        &self.bc
    }

    pub fn params(&self) -> ModelParams {
        self.params
    }

    pub fn num_edges(&self) -> usize {
        self.region.num_edges()
    }

    /// Number of configurations, `2^|E|`.
    pub fn len(&self) -> usize {
        self.log_weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_weights.is_empty()
    }

    /// `log Z`.
    pub fn log_partition(&self) -> f64 {
        self.log_z
    }

    pub fn log_weight(&self, mask: u64) -> f64 {
        self.log_weights[mask as usize]
    }

    #[inline]
    pub fn prob(&self, mask: u64) -> f64 {
        (self.log_weights[mask as usize] - self.log_z).exp()
    }

    /// Probabilities of all configurations, indexed by mask.
    pub fn probs(&self) -> Vec<f64> {
        self.log_weights.iter().map(|&w| (w - self.log_z).exp()).collect()
    }

    /// `P[edge e open]`.
    pub fn marginal(&self, e: u32) -> f64 {
        (0..self.len() as u64).filter(|m| m >> e & 1 == 1).map(|m| self.prob(m)).sum()
    }

    /// Indicator of an event over all configurations.
    pub fn indicator(&self, ev: &EventPredicate) -> Vec<bool> {
        let m = self.num_edges();
        (0..self.len() as u64)
            .into_par_iter()
            .map_init(
                || Configuration::all_closed(m),
                |c, mask| {
                    c.set_mask(mask);
                    ev.holds(c)
                },
            )
            .collect()
    }

    pub fn prob_of_indicator(&self, ind: &[bool]) -> f64 {
        ind.iter().enumerate().filter(|(_, &b)| b).map(|(mask, _)| self.prob(mask as u64)).sum()
    }
}

/// Exact measure of a region with at most [`MAX_ENUM_EDGES`] edges.
pub fn enumerate(region: &Region, bc: &BoundaryCondition, params: ModelParams) -> Result<ExactDistribution> {
    ClusterTable::new(region, bc)?.distribution(region, bc, params)
}

/// `sum over omega in ev of P[omega]`.
pub fn exact_prob(dist: &ExactDistribution, ev: &EventPredicate) -> f64 {
    dist.prob_of_indicator(&dist.indicator(ev))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_induced_region, build_region, Lattice, Rect};

    fn single_edge() -> Region {
        build_induced_region(&Lattice::square(), Rect::new(0, 1, 0, 0).unwrap()).unwrap()
    }

    #[test]
    fn single_edge_examples() {
        let r = single_edge();
        let d = enumerate(&r, &BoundaryCondition::free(&r), ModelParams::new(0.5, 2.0).unwrap()).unwrap();
        assert!((exact_prob(&d, &EventPredicate::edge_open(0)) - 1.0 / 3.0).abs() < 1e-15);
        let d = enumerate(&r, &BoundaryCondition::wired(&r), ModelParams::new(0.7, 5.0).unwrap()).unwrap();
        assert!((exact_prob(&d, &EventPredicate::edge_open(0)) - 0.7).abs() < 1e-14);
    }

    #[test]
    fn bernoulli_factorizes() {
        let r = build_region(&Lattice::square(), Rect::new(0, 1, 0, 0).unwrap()).unwrap();
        let p = 0.3;
        let d = enumerate(&r, &BoundaryCondition::dobrushin(&r), ModelParams::new(p, 1.0).unwrap()).unwrap();
        let m = r.num_edges() as i32;
        for mask in 0..d.len() as u64 {
            let k = mask.count_ones() as i32;
            let expected = p.powi(k) * (1.0 - p).powi(m - k);
            assert!((d.prob(mask) - expected).abs() < 1e-15);
        }
        assert!((exact_prob(&d, &EventPredicate::all_open()) - p.powi(m)).abs() < 1e-15);
        assert!((exact_prob(&d, &EventPredicate::always()) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_p() {
        let r = build_region(&Lattice::square(), Rect::new(0, 0, 0, 0).unwrap()).unwrap();
        let bc = BoundaryCondition::free(&r);
        let d = enumerate(&r, &bc, ModelParams::new(0.0, 2.0).unwrap()).unwrap();
        assert_eq!(d.prob(0), 1.0);
        let d = enumerate(&r, &bc, ModelParams::new(1.0, 2.0).unwrap()).unwrap();
        assert_eq!(d.prob(0b1111), 1.0);
    }

    #[test]
    fn too_large() {
        let r = build_region(&Lattice::square(), Rect::new(0, 3, 0, 2).unwrap()).unwrap();
        assert!(matches!(
            ClusterTable::new(&r, &BoundaryCondition::free(&r)),
            Err(Error::TooLargeForEnumeration { .. })
        ));
    }

    #[test]
    fn monotonicity_spot_check() {
        let ev = EventPredicate::increasing("two open", |c| c.count_open() >= 2);
        assert!(ev.find_monotonicity_violation(8, 500, 1).is_none());
        let bad = EventPredicate::increasing("exactly two", |c| c.count_open() == 2);
        assert!(bad.find_monotonicity_violation(8, 500, 1).is_some());
        assert!(ev.complement().find_monotonicity_violation(8, 500, 2).is_none());
    }
}
