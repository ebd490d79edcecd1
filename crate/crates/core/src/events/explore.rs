use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{Rect, Region, Site};
use crate::measure::Configuration;

use super::{Connection, Scratch};

/// An open path in a host region, as host vertex and edge ids.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrossingPath {
    pub vertices: Vec<u32>,
    pub edges: Vec<u32>,
}

impl CrossingPath {
    /// Consecutive vertices adjacent through the listed open edges, endpoints in
    /// the declared sets, every vertex inside `rect`.
    pub fn is_valid(
        &self,
        config: &Configuration,
        region: &Region,
        sources: &[u32],
        targets: &[u32],
        rect: Rect,
    ) -> bool {
        let (Some(first), Some(last)) = (self.vertices.first(), self.vertices.last()) else {
            return false;
        };
        if self.edges.len() + 1 != self.vertices.len() || !sources.contains(first) || !targets.contains(last) {
            return false;
        }
        let inside = self.vertices.iter().all(|&v| {
            let s = region.site(v);
            rect.contains(s.x, s.y)
        });
        inside
            && self.edges.iter().enumerate().all(|(i, &e)| {
                let [u, v] = region.edge(e);
                let (a, b) = (self.vertices[i], self.vertices[i + 1]);
                config.is_open(e) && ((u == a && v == b) || (u == b && v == a))
            })
    }
}

const DIRS: [(i32, i32); 4] = [(0, 1), (1, 0), (0, -1), (-1, 0)];

/// The left-most open path inside `rect` from the bottom segment `source` to the
/// top side of `rect`.
///
/// The path is found by a clockwise walk along the boundary of the cluster of
/// `source`, keeping the left hand on the wall and treating the segment itself
/// as wired; the part of the walk after its last visit to the segment, with
/// loops erased, is the left-most crossing.
pub fn leftmost_vertical_crossing(
    config: &Configuration,
    region: &Region,
    source: Rect,
    rect: Rect,
) -> Result<Option<CrossingPath>> {
    if !region.lattice().is_square() {
        return Err(Error::UnsupportedLattice("interface exploration needs the square lattice".into()));
    }
    if config.len() != region.num_edges() {
        return Err(Error::Mismatch("configuration does not match the region".into()));
    }
    if !region.rect().contains_rect(&rect) {
        return Err(Error::TargetOutsideHost { target: rect.to_string(), host: region.rect().to_string() });
    }
    if source.c != rect.c || source.d != rect.c || !rect.contains_rect(&source) {
        return Err(Error::InvalidEvent("source must be a segment of the bottom side".into()));
    }
    let top = Rect { c: rect.d, ..rect };
    let conn = Connection::compile(region, rect, &[source], &[top]);
    if !conn.holds(config, &mut Scratch::default()) {
        return Ok(None);
    }

    let on_source = |s: Site| s.y == source.c && s.x >= source.a && s.x <= source.b;
    let step = |from: Site, h: usize| -> Option<Site> {
        let (dx, dy) = DIRS[h];
        let to = Site::new(from.x + dx, from.y + dy);
        if !rect.contains(to.x, to.y) {
            return None;
        }
        if on_source(from) && on_source(to) {
            return Some(to);
        }
        let e = region.edge_between(from, to)?;
        config.is_open(e).then_some(to)
    };

    let mut pos = Site::new(source.a, source.c);
    let mut heading = 0usize;
    let mut walk = vec![pos];
    let limit = 4 * (conn.edges().len() + source.width() as usize) + 16;
    while pos.y < rect.d {
        if walk.len() > limit {
            return Err(Error::InvalidInput("boundary walk did not reach the top".into()));
        }
        let mut moved = false;
        for turn in [3, 0, 1, 2] {
            let h = (heading + turn) % 4;
            if let Some(next) = step(pos, h) {
                pos = next;
                heading = h;
                walk.push(pos);
                moved = true;
                break;
            }
        }
        if !moved {
            return Err(Error::InvalidInput("boundary walk is stuck".into()));
        }
    }

    let start = walk.iter().rposition(|&s| on_source(s)).unwrap_or(0);
    let mut path: Vec<Site> = Vec::new();
    let mut index: HashMap<Site, usize> = HashMap::new();
    for &s in &walk[start..] {
        if let Some(&i) = index.get(&s) {
            for dropped in path.drain(i + 1..) {
                index.remove(&dropped);
            }
        } else {
            index.insert(s, path.len());
            path.push(s);
        }
    }
    let vertices: Vec<u32> = path.iter().map(|&s| region.vertex(s).expect("walk stays in region")).collect();
    let edges: Vec<u32> = path
        .windows(2)
        .map(|w| region.edge_between(w[0], w[1]).expect("consecutive walk sites are adjacent"))
        .collect();
    Ok(Some(CrossingPath { vertices, edges }))
}
