use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::events::CrossingEvent;
use crate::lattice::{build_induced_region, build_region, dual_of, Lattice, Rect, Region, Side};
use crate::measure::{bc_dominates, full_mask, BoundaryCondition, Configuration, ModelParams, NamedBc};
use crate::unionfind::UnionFind;

use super::verify::{cbc_from, fi_from, smp_from, verify_duality, verify_fkg, verify_mon, Check, EXACT_TOL};
use super::{ClusterTable, EventPredicate};

/// A small test graph, optionally with a proper subregion for the spatial
/// Markov and domain-monotonicity checks.
#[derive(Clone, Debug)]
pub struct CorpusGraph {
    pub name: String,
    pub region: Region,
    pub sub: Option<Region>,
}

#[derive(Clone, Debug)]
pub struct Corpus {
    pub graphs: Vec<CorpusGraph>,
    pub params: Vec<ModelParams>,
    pub bcs: Vec<NamedBc>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusOptions {
    /// Test hook: reverses the sign of every FKG margin.
    pub fkg_sign_flip: bool,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct IdentityTally {
    pub checks: usize,
    pub failed: usize,
    pub min_margin: f64,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct CorpusReport {
    pub total: usize,
    pub failed: usize,
    pub by_identity: BTreeMap<String, IdentityTally>,
    pub checks: Vec<Check>,
}

impl CorpusReport {
    pub fn passed(&self) -> bool {
        self.failed == 0
    }

    pub fn first_failure(&self) -> Option<&Check> {
        self.checks.iter().find(|c| !c.pass)
    }
}

/// Rectangles `[0,w] x [0,h]` whose touching region has at most `max_edges` edges.
pub fn rect_graphs(max_edges: usize) -> Vec<CorpusGraph> {
    let lat = Lattice::square();
    let mut out = Vec::new();
    for w in 0..8 {
        for h in 0..8 {
            let rect = Rect { a: 0, b: w, c: 0, d: h };
            let region = build_region(&lat, rect).expect("valid rectangle");
            if region.num_edges() > max_edges {
                continue;
            }
            let sub = if w >= 1 {
                Some(build_region(&lat, Rect { b: w - 1, ..rect }).expect("valid rectangle"))
            } else if h >= 1 {
                Some(build_region(&lat, Rect { d: h - 1, ..rect }).expect("valid rectangle"))
            } else {
                None
            };
            out.push(CorpusGraph { name: format!("rect{rect}"), region, sub });
        }
    }
    out
}

impl Corpus {
    /// Rectangles with at most 16 edges, a single edge and a 4-cycle, under the
    /// five named boundary conditions and the grid `p x q`.
    pub fn standard() -> Corpus {
        let lat = Lattice::square();
        let mut graphs = rect_graphs(16);
        let edge = build_induced_region(&lat, Rect { a: 0, b: 1, c: 0, d: 0 }).expect("single edge");
        let cycle = build_induced_region(&lat, Rect { a: 0, b: 1, c: 0, d: 1 }).expect("4-cycle");
        graphs.push(CorpusGraph { name: "single-edge".into(), region: edge.clone(), sub: None });
        graphs.push(CorpusGraph { name: "4-cycle".into(), region: cycle, sub: Some(edge) });
        let mut params = Vec::new();
        for p in [0.2, 0.5, 0.8] {
            for q in [1.0, 1.5, 2.0, 4.0, 10.0] {
                params.push(ModelParams { p, q });
            }
        }
        Corpus { graphs, params, bcs: NamedBc::CORPUS.to_vec() }
    }

    pub fn empty() -> Corpus {
        Corpus { graphs: Vec::new(), params: Vec::new(), bcs: Vec::new() }
    }
}

fn arcs_connected(region: &Region) -> EventPredicate {
    let left = region.boundary_arc(Side::Left);
    let right = region.boundary_arc(Side::Right);
    let edges = region.edges().to_vec();
    let n = region.num_vertices();
    EventPredicate::increasing("left arc to right arc", move |c| {
        let mut uf = UnionFind::new(n);
        for e in c.open_edges() {
            let [u, v] = edges[e as usize];
            uf.union(u, v);
        }
        left.iter().any(|&a| right.iter().any(|&b| uf.connected(a, b)))
    })
}

fn region_events(region: &Region) -> Result<Vec<EventPredicate>> {
    let r = region.rect();
    let m = region.num_edges() as u32;
    Ok(vec![
        CrossingEvent::horizontal(r).predicate(region)?,
        CrossingEvent::vertical(r).predicate(region)?,
        EventPredicate::edge_open(0),
        EventPredicate::edge_open(m - 1),
        arcs_connected(region),
    ])
}

fn outer_configs(region: &Region, salt: u64) -> Vec<Configuration> {
    let m = region.num_edges();
    let mut state = salt.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ 0xd1b5_4a32_d192_ed03;
    let mut out = vec![Configuration::all_open(m)];
    for _ in 0..3 {
        state = crate::sampler::splitmix64(state);
        out.push(Configuration::from_mask(state & full_mask(m), m));
    }
    out
}

fn with_context(mut c: Check, ctx: &str) -> Check {
    c.context = format!("{ctx}; {}", c.context);
    c
}

fn run_cell(
    graph: &CorpusGraph,
    gi: usize,
    params: ModelParams,
    bcs: &[NamedBc],
    opts: CorpusOptions,
) -> Result<Vec<Check>> {
    let region = &graph.region;
    let events = region_events(region)?;
    let mut checks = Vec::new();
    let named: Vec<(NamedBc, BoundaryCondition)> =
        bcs.iter().map(|&n| Ok((n, n.build(region)?))).collect::<Result<_>>()?;
    let mut dists = Vec::new();
    for (name, bc) in &named {
        let table = ClusterTable::new(region, bc)?;
        dists.push((*name, table.distribution(region, bc, params)?));
    }
    let ctx = |bc: &str| format!("{} {} p={} q={}", graph.name, bc, params.p, params.q);

    for (name, dist) in &dists {
        for i in 0..events.len() {
            for j in i..events.len() {
                let mut c = verify_fkg(dist, &events[i], &events[j])?;
                if opts.fkg_sign_flip {
                    c.margin = -c.margin;
                    c.pass = c.margin >= -EXACT_TOL;
                }
                checks.push(with_context(c, &ctx(name.as_str())));
            }
        }
    }

    for (xi_name, xi) in &dists {
        for (zeta_name, zeta) in &dists {
            if xi_name == zeta_name || !bc_dominates(xi.bc(), zeta.bc())? {
                continue;
            }
            for ev in &events {
                let c = cbc_from(xi, zeta, ev)?;
                checks.push(with_context(c, &ctx(&format!("{}<={}", xi_name.as_str(), zeta_name.as_str()))));
            }
        }
    }

    let sub = graph.sub.clone().unwrap_or_else(|| region.clone());
    for (name, dist) in &dists {
        for outer in outer_configs(region, gi as u64) {
            checks.push(with_context(smp_from(dist, &sub, &outer)?, &ctx(name.as_str())));
        }
    }

    if region.rule() != crate::lattice::EdgeRule::Custom {
        let dm = dual_of(region)?;
        for ev in [&events[0], &events[2]] {
            for c in verify_duality(&dm, params, ev)? {
                checks.push(with_context(c, &ctx("dual")));
            }
        }
    }

    let mix = dists.iter().find(|(n, _)| *n == NamedBc::Mix);
    let star = dists.iter().find(|(n, _)| *n == NamedBc::StarMix);
    if let (Some((_, mix)), Some((_, star))) = (mix, star) {
        for ev in &events {
            match fi_from(mix, star, ev) {
                Ok(c) => checks.push(with_context(c, &ctx("mix/star-mix"))),
                Err(Error::ZeroProbability) => {}
                Err(e) => return Err(e),
            }
        }
    }

    if let Some(sub) = &graph.sub {
        let sub_events = [CrossingEvent::horizontal(sub.rect()).predicate(sub)?, EventPredicate::edge_open(0)];
        for (name, bc) in &named {
            for ev in &sub_events {
                for c in verify_mon(region, sub, params, bc, ev)? {
                    checks.push(with_context(c, &ctx(name.as_str())));
                }
            }
        }
    }
    Ok(checks)
}

/// Runs every exact identity over the corpus.
pub fn run_corpus(corpus: &Corpus, opts: CorpusOptions) -> Result<CorpusReport> {
    let cells: Vec<(usize, ModelParams)> =
        (0..corpus.graphs.len()).flat_map(|g| corpus.params.iter().map(move |&p| (g, p))).collect();
    let results: Vec<Result<Vec<Check>>> =
        cells.par_iter().map(|&(g, params)| run_cell(&corpus.graphs[g], g, params, &corpus.bcs, opts)).collect();
    let mut report = CorpusReport::default();
    for r in results {
        for c in r? {
            let tally = report.by_identity.entry(c.identity.clone()).or_insert(IdentityTally {
                checks: 0,
                failed: 0,
                min_margin: f64::INFINITY,
            });
            tally.checks += 1;
            tally.min_margin = tally.min_margin.min(c.margin);
            if !c.pass {
                tally.failed += 1;
                report.failed += 1;
            }
            report.total += 1;
            report.checks.push(c);
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corpus_shape() {
        let c = Corpus::standard();
        assert_eq!(c.graphs.len(), 12);
        assert!(c.graphs.iter().all(|g| g.region.num_edges() <= 16));
        assert_eq!(c.params.len(), 15);
        assert_eq!(run_corpus(&Corpus::empty(), CorpusOptions::default()).unwrap().total, 0);
    }

    #[test]
    fn small_slice_passes_and_fault_is_caught() {
        let mut c = Corpus::standard();
        c.graphs.retain(|g| g.region.num_edges() <= 7);
        c.params = vec![ModelParams { p: 0.5, q: 2.0 }];
        let report = run_corpus(&c, CorpusOptions::default()).unwrap();
        assert!(report.passed(), "{:?}", report.first_failure());
        for id in ["FKG", "CBC", "SMP", "duality", "FI", "MON"] {
            assert!(report.by_identity[id].checks > 0, "{id}");
        }
        let faulty = run_corpus(&c, CorpusOptions { fkg_sign_flip: true }).unwrap();
        assert_eq!(faulty.first_failure().unwrap().identity, "FKG");
    }
}
