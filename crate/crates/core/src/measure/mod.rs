//! The random-cluster measure on a finite region: parameters, boundary
//! conditions, cluster counting and configuration weights.

mod boundary;
pub(crate) mod cluster;
mod config;

pub use boundary::{bc_dominates, BcSpec, BoundaryCondition, NamedBc};
pub use cluster::{cluster_count, cluster_count_dfs, ClusterStructure, ContractedGraph};
pub(crate) use config::full_mask;
pub use config::Configuration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{DualMap, Region};
use crate::unionfind::UnionFind;

/// Edge weight `p` and cluster weight `q`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    pub p: f64,
    pub q: f64,
}

impl ModelParams {
    pub fn new(p: f64, q: f64) -> Result<ModelParams> {
        let params = ModelParams { p, q };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.p) || self.p.is_nan() {
            return Err(Error::InvalidParams(format!("p = {} is not in [0, 1]", self.p)));
        }
        if !(self.q > 0.0) || !self.q.is_finite() {
            return Err(Error::InvalidParams(format!("q = {} must be positive and finite", self.q)));
        }
        Ok(())
    }

    pub fn is_degenerate(&self) -> bool {
        self.p == 0.0 || self.p == 1.0
    }

    /// Opening probability of an edge whose endpoints are not otherwise connected.
    pub fn isolated_open_prob(&self) -> f64 {
        self.p / (self.p + self.q * (1.0 - self.p))
    }
}

/// The self-dual edge weight `sqrt(q) / (1 + sqrt(q))`.
pub fn self_dual_point(q: f64) -> f64 {
    q.sqrt() / (1.0 + q.sqrt())
}

/// Parameters of the dual measure: `q* = q` and `p p* / ((1-p)(1-p*)) = q`.
pub fn dual_params(params: ModelParams) -> Result<ModelParams> {
    params.validate()?;
    let ModelParams { p, q } = params;
    let p_star = if p == 0.0 {
        1.0
    } else if p == 1.0 {
        0.0
    } else {
        q * (1.0 - p) / (p + q * (1.0 - p))
    };
    Ok(ModelParams { p: p_star, q })
}

fn check_config(region: &Region, config: &Configuration) -> Result<()> {
    if config.len() != region.num_edges() {
        return Err(Error::Mismatch(format!(
            "configuration has {} edges, region has {}",
            config.len(),
            region.num_edges()
        )));
    }
    Ok(())
}

/// Unnormalized log-weight `|omega| log(p/(1-p)) + k log q`.
pub fn log_weight(params: ModelParams, region: &Region, bc: &BoundaryCondition, config: &Configuration) -> Result<f64> {
    params.validate()?;
    if params.is_degenerate() {
        return Err(Error::DegenerateParams(params.p));
    }
    let k = cluster_count(region, bc, config)?;
    let open = config.count_open() as f64;
    Ok(open * (params.p / (1.0 - params.p)).ln() + k as f64 * params.q.ln())
}

/// Conditional probability that `edge` is open given the rest of `config`.
pub fn heat_bath_prob(
    params: ModelParams,
    region: &Region,
    bc: &BoundaryCondition,
    config: &Configuration,
    edge: u32,
) -> Result<f64> {
    check_config(region, config)?;
    if edge as usize >= region.num_edges() {
        return Err(Error::InvalidInput(format!("edge {edge} out of range")));
    }
    let graph = ContractedGraph::new(region, bc)?;
    let [u, v] = graph.edge(edge);
    if graph.connected_without(config, u, v, edge) {
        Ok(params.p)
    } else {
        Ok(params.isolated_open_prob())
    }
}

/// Boundary condition induced on `sub` by the edges of `region` outside `sub`
/// (read from `outer_config`) together with the wirings of `outer_bc`.
pub fn induced_bc(
    region: &Region,
    sub: &Region,
    outer_config: &Configuration,
    outer_bc: &BoundaryCondition,
) -> Result<BoundaryCondition> {
    check_config(region, outer_config)?;
    outer_bc.check_region(region)?;
    let embed = region.embed_edges(sub)?;
    let mut inner = vec![false; region.num_edges()];
    for &e in &embed {
        inner[e as usize] = true;
    }
    let mut uf = UnionFind::new(region.num_vertices());
    for block in outer_bc.blocks() {
        for w in block.windows(2) {
            uf.union(w[0], w[1]);
        }
    }
    for e in outer_config.open_edges() {
        if !inner[e as usize] {
            let [u, v] = region.edge(e);
            uf.union(u, v);
        }
    }
    let mut groups: std::collections::BTreeMap<u32, Vec<u32>> = Default::default();
    for &b in sub.boundary() {
        let host =
            region.vertex(sub.site(b)).ok_or_else(|| Error::Mismatch("subregion vertex missing from region".into()))?;
        groups.entry(uf.find(host)).or_default().push(b);
    }
    BoundaryCondition::from_blocks(sub, groups.into_values().collect())
}

/// Dual configuration: dual edge `e*` is open iff `e` is closed.
pub fn dual_config(dual: &DualMap, config: &Configuration) -> Configuration {
    debug_assert_eq!(config.len(), dual.primal.num_edges());
    config.complement()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_region, dual_of, Lattice, Rect};

    pub(crate) fn single_edge() -> Region {
        Region::custom(&[(0, 0), (1, 0)], &[(0, 1)], &[0, 1]).unwrap()
    }

    #[test]
    fn dual_params_examples() {
        let d = dual_params(ModelParams::new(2.0 / 3.0, 2.0).unwrap()).unwrap();
        assert!((d.p - 0.5).abs() < 1e-15);
        let d = dual_params(ModelParams::new(0.3, 1.0).unwrap()).unwrap();
        assert!((d.p - 0.7).abs() < 1e-15);
        let sd = self_dual_point(2.0);
        assert!((sd - 0.585786).abs() < 1e-6);
        assert!((dual_params(ModelParams::new(sd, 2.0).unwrap()).unwrap().p - sd).abs() < 1e-14);
        assert_eq!(dual_params(ModelParams::new(0.0, 3.0).unwrap()).unwrap().p, 1.0);
        assert_eq!(dual_params(ModelParams::new(1.0, 3.0).unwrap()).unwrap().p, 0.0);
    }

    #[test]
    fn params_validation() {
        assert!(ModelParams::new(1.5, 2.0).is_err());
        assert!(ModelParams::new(0.5, 0.0).is_err());
        assert!(ModelParams::new(f64::NAN, 2.0).is_err());
    }

    #[test]
    fn single_edge_weights() {
        let r = single_edge();
        let free = BoundaryCondition::free(&r);
        let wired = BoundaryCondition::wired(&r);
        let params = ModelParams::new(0.5, 2.0).unwrap();
        let open = Configuration::all_open(1);
        let closed = Configuration::all_closed(1);
        let ratio =
            (log_weight(params, &r, &free, &open).unwrap() - log_weight(params, &r, &free, &closed).unwrap()).exp();
        assert!((ratio - 0.5).abs() < 1e-15);
        let ratio =
            (log_weight(params, &r, &wired, &open).unwrap() - log_weight(params, &r, &wired, &closed).unwrap()).exp();
        assert!((ratio - 1.0).abs() < 1e-15);
        assert!(log_weight(ModelParams::new(1.0, 2.0).unwrap(), &r, &free, &open).is_err());
        let bern = ModelParams::new(0.5, 1.0).unwrap();
        assert_eq!(log_weight(bern, &r, &free, &open).unwrap(), 0.0);
    }

    #[test]
    fn heat_bath_examples() {
        let r = single_edge();
        let closed = Configuration::all_closed(1);
        let params = ModelParams::new(0.5, 2.0).unwrap();
        let hb = heat_bath_prob(params, &r, &BoundaryCondition::free(&r), &closed, 0).unwrap();
        assert!((hb - 1.0 / 3.0).abs() < 1e-15);
        let hb = heat_bath_prob(params, &r, &BoundaryCondition::wired(&r), &closed, 0).unwrap();
        assert_eq!(hb, 0.5);
        let bern = ModelParams::new(0.3, 1.0).unwrap();
        assert!((heat_bath_prob(bern, &r, &BoundaryCondition::free(&r), &closed, 0).unwrap() - 0.3).abs() < 1e-15);
    }

    #[test]
    fn induced_bc_examples() {
        let lat = Lattice::square();
        // Every boundary vertex of the subregion lies inside the outer rectangle, so
        // each touches an outer edge.
        let region = build_region(&lat, Rect::new(0, 2, -1, 2).unwrap()).unwrap();
        let sub = build_region(&lat, Rect::new(1, 1, 0, 1).unwrap()).unwrap();
        let n = region.num_edges();
        let free = BoundaryCondition::free(&region);
        let wired = BoundaryCondition::wired(&region);

        let bc = induced_bc(&region, &sub, &Configuration::all_closed(n), &free).unwrap();
        assert_eq!(bc, BoundaryCondition::free(&sub));
        let bc = induced_bc(&region, &sub, &Configuration::all_open(n), &free).unwrap();
        assert_eq!(bc, BoundaryCondition::wired(&sub));

        let bc = induced_bc(&region, &sub, &Configuration::all_closed(n), &wired).unwrap();
        let on_outer: Vec<u32> = sub
            .boundary()
            .iter()
            .copied()
            .filter(|&v| region.is_boundary(region.vertex(sub.site(v)).unwrap()))
            .collect();
        let expected = BoundaryCondition::from_groups(&sub, &[on_outer]).unwrap();
        assert_eq!(bc, expected);
    }

    #[test]
    fn dual_config_complements() {
        let region = build_region(&Lattice::square(), Rect::new(0, 1, 0, 1).unwrap()).unwrap();
        let dm = dual_of(&region).unwrap();
        let c = Configuration::from_mask(0b1010_0110_0101, region.num_edges());
        let d = dual_config(&dm, &c);
        assert_eq!(c.count_open() + d.count_open(), region.num_edges());
        assert_eq!(dual_config(&dm, &d), c);
        assert_eq!(dual_config(&dm, &Configuration::all_open(12)), Configuration::all_closed(12));
    }
}
