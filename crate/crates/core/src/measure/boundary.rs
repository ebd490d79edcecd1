use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{Region, Side};

/// Partition of a region's boundary vertices, stored canonically: each block
/// sorted, blocks ordered by their smallest vertex id, singletons included.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BoundaryCondition {
    boundary: Vec<u32>,
    blocks: Vec<Vec<u32>>,
}

impl BoundaryCondition {
    /// Strict constructor: `blocks` must partition the boundary exactly.
    pub fn from_blocks(region: &Region, blocks: Vec<Vec<u32>>) -> Result<BoundaryCondition> {
        let boundary = region.boundary().to_vec();
        let covered: usize = blocks.iter().map(Vec::len).sum();
        let bc = BoundaryCondition::canonical(boundary, blocks)?;
        if covered != bc.boundary.len() || bc.blocks.iter().map(Vec::len).sum::<usize>() != bc.boundary.len() {
            return Err(Error::InvalidBoundary("blocks do not cover the boundary exactly".into()));
        }
        Ok(bc)
    }

    /// Wires each group together; boundary vertices not mentioned stay singletons.
    pub fn from_groups(region: &Region, groups: &[Vec<u32>]) -> Result<BoundaryCondition> {
        let boundary = region.boundary().to_vec();
        let mut seen = vec![false; region.num_vertices()];
        let mut blocks = Vec::new();
        for g in groups {
            if g.is_empty() {
                continue;
            }
            blocks.push(g.clone());
            for &v in g {
                seen[v as usize] = true;
            }
        }
        for &v in &boundary {
            if !seen[v as usize] {
                blocks.push(vec![v]);
            }
        }
        BoundaryCondition::from_blocks(region, blocks)
    }

    fn canonical(boundary: Vec<u32>, mut blocks: Vec<Vec<u32>>) -> Result<BoundaryCondition> {
        let max = boundary.iter().copied().max().map_or(0, |m| m as usize + 1);
        let mut is_bd = vec![false; max];
        for &v in &boundary {
            is_bd[v as usize] = true;
        }
        let mut used = vec![false; max];
        for block in &mut blocks {
            if block.is_empty() {
                return Err(Error::InvalidBoundary("empty block".into()));
            }
            for &v in block.iter() {
                let vi = v as usize;
                if vi >= max || !is_bd[vi] {
                    return Err(Error::InvalidBoundary(format!("vertex {v} is not a boundary vertex")));
                }
                if used[vi] {
                    return Err(Error::InvalidBoundary(format!("vertex {v} appears in two blocks")));
                }
                used[vi] = true;
            }
            block.sort_unstable();
        }
        blocks.sort_by_key(|b| b[0]);
        Ok(BoundaryCondition { boundary, blocks })
    }

    pub fn free(region: &Region) -> BoundaryCondition {
        BoundaryCondition::from_groups(region, &[]).expect("free boundary is a partition")
    }

    pub fn wired(region: &Region) -> BoundaryCondition {
        BoundaryCondition::from_groups(region, &[region.boundary().to_vec()]).expect("wired boundary is a partition")
    }

    /// Bottom arc wired together, every other boundary vertex free.
    pub fn dobrushin(region: &Region) -> BoundaryCondition {
        BoundaryCondition::from_groups(region, &[region.boundary_arc(Side::Bottom)])
            .expect("bottom arc is a set of boundary vertices")
    }

    /// Left, top and right arcs wired together, bottom free.
    pub fn wired_except_bottom(region: &Region) -> BoundaryCondition {
        let mut arc = region.boundary_arc(Side::Left);
        arc.extend(region.boundary_arc(Side::Top));
        arc.extend(region.boundary_arc(Side::Right));
        arc.sort_unstable();
        arc.dedup();
        BoundaryCondition::from_groups(region, &[arc]).expect("arcs are boundary vertices")
    }

    /// Two wired blocks `a` and `b`, not wired to each other.
    pub fn mix(region: &Region, a: &[u32], b: &[u32]) -> Result<BoundaryCondition> {
        check_arcs(a, b)?;
        BoundaryCondition::from_groups(region, &[a.to_vec(), b.to_vec()])
    }

    /// The block `a ∪ b` wired.
    pub fn star_mix(region: &Region, a: &[u32], b: &[u32]) -> Result<BoundaryCondition> {
        check_arcs(a, b)?;
        let mut ab = a.to_vec();
        ab.extend_from_slice(b);
        BoundaryCondition::from_groups(region, &[ab])
    }

    /// Default arcs for the named mix conditions: left arc and right arc.
    pub fn default_arcs(region: &Region) -> (Vec<u32>, Vec<u32>) {
        (region.boundary_arc(Side::Left), region.boundary_arc(Side::Right))
    }

    pub fn boundary(&self) -> &[u32] {
        &self.boundary
    }

    pub fn blocks(&self) -> &[Vec<u32>] {
        &self.blocks
    }

    /// Blocks with at least two vertices.
    pub fn wired_blocks(&self) -> impl Iterator<Item = &Vec<u32>> {
        self.blocks.iter().filter(|b| b.len() > 1)
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    /// Checks that this condition lives on the boundary of `region`.
    pub fn check_region(&self, region: &Region) -> Result<()> {
        if self.boundary != region.boundary() {
            return Err(Error::InvalidBoundary("partition is not over this region's boundary".into()));
        }
        Ok(())
    }

    /// `true` iff every two vertices wired here are wired in `other`.
    pub fn refines(&self, other: &BoundaryCondition) -> Result<bool> {
        if self.boundary != other.boundary {
            return Err(Error::Mismatch("boundary conditions over different boundaries".into()));
        }
        let max = self.boundary.last().map_or(0, |&m| m as usize + 1);
        let mut block_of = vec![usize::MAX; max];
        for (i, b) in other.blocks.iter().enumerate() {
            for &v in b {
                block_of[v as usize] = i;
            }
        }
        Ok(self.blocks.iter().all(|b| b.iter().all(|&v| block_of[v as usize] == block_of[b[0] as usize])))
    }
}

fn check_arcs(a: &[u32], b: &[u32]) -> Result<()> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidBoundary("mix arcs must be nonempty".into()));
    }
    if a.iter().any(|v| b.contains(v)) {
        return Err(Error::InvalidBoundary("mix arcs must be disjoint".into()));
    }
    Ok(())
}

/// `true` iff `zeta` dominates `xi`, i.e. `xi` refines `zeta` blockwise.
pub fn bc_dominates(xi: &BoundaryCondition, zeta: &BoundaryCondition) -> Result<bool> {
    xi.refines(zeta)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NamedBc {
    Free,
    Wired,
    Dobrushin,
    Mix,
    StarMix,
    /// Wired on the left, top and right arcs, free on the bottom.
    WiredExceptBottom,
}

impl NamedBc {
    pub const CORPUS: [NamedBc; 5] =
        [NamedBc::Free, NamedBc::Wired, NamedBc::Dobrushin, NamedBc::Mix, NamedBc::StarMix];

    pub fn build(self, region: &Region) -> Result<BoundaryCondition> {
        Ok(match self {
            NamedBc::Free => BoundaryCondition::free(region),
            NamedBc::Wired => BoundaryCondition::wired(region),
            NamedBc::Dobrushin => BoundaryCondition::dobrushin(region),
            NamedBc::WiredExceptBottom => BoundaryCondition::wired_except_bottom(region),
            NamedBc::Mix => {
                let (a, b) = BoundaryCondition::default_arcs(region);
                BoundaryCondition::mix(region, &a, &b)?
            }
            NamedBc::StarMix => {
                let (a, b) = BoundaryCondition::default_arcs(region);
                BoundaryCondition::star_mix(region, &a, &b)?
            }
        })
    }

    pub fn as_str(self) -> &'static str {
        match self {
            NamedBc::Free => "free",
            NamedBc::Wired => "wired",
            NamedBc::Dobrushin => "dobrushin",
            NamedBc::Mix => "mix",
            NamedBc::StarMix => "star-mix",
            NamedBc::WiredExceptBottom => "wired-except-bottom",
        }
    }
}

/// JSON form of a boundary condition: a name or an explicit list of blocks.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BcSpec {
    Named(NamedBc),
    Blocks(Vec<Vec<u32>>),
}

impl BcSpec {
    pub fn resolve(&self, region: &Region) -> Result<BoundaryCondition> {
        match self {
            BcSpec::Named(n) => n.build(region),
            BcSpec::Blocks(b) => BoundaryCondition::from_blocks(region, b.clone()),
        }
    }

    pub fn label(&self) -> String {
        match self {
            BcSpec::Named(n) => n.as_str().to_string(),
            BcSpec::Blocks(_) => "custom".to_string(),
        }
    }
}

impl From<&BoundaryCondition> for BcSpec {
    fn from(bc: &BoundaryCondition) -> BcSpec {
        BcSpec::Blocks(bc.blocks.clone())
    }
}
