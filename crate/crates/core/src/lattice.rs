//! Biperiodic planar lattices, rectangle-induced regions and the planar dual.
//!
//! A [`Lattice`] is described by a unit cell: a number of vertices per cell and a
//! list of edge templates, each joining a cell vertex to a vertex of a translated
//! cell. Vertices are addressed by [`Site`]s (integer cell coordinates plus a
//! sub-cell index). A [`Region`] is a finite subgraph of the lattice selected by a
//! rectangle; its edges carry dense integer ids that every other module uses to
//! index configurations.
//!
//! Regions come in two flavours. [`EdgeRule::Touching`] regions contain every
//! lattice edge with at least one endpoint in the rectangle (this is how boxes and
//! strips are built); [`EdgeRule::Induced`] regions contain the edges with both
//! endpoints in the rectangle. On the square lattice the two flavours are exchanged
//! by planar duality, which is what makes [`dual_of`] an exact involution.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest region the toolkit will build.
pub const MAX_REGION_EDGES: usize = 1 << 26;

/// Closed integer rectangle `[a, b] x [c, d]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rect {
    pub a: i32,
    pub b: i32,
    pub c: i32,
    pub d: i32,
}

impl Rect {
    pub fn new(a: i32, b: i32, c: i32, d: i32) -> Result<Rect> {
        if a > b || c > d {
            return Err(Error::MalformedRect { a, b, c, d });
        }
        Ok(Rect { a, b, c, d })
    }

    /// The box `[-n, n]^2`.
    pub fn centered_box(n: i32) -> Rect {
        Rect { a: -n, b: n, c: -n, d: n }
    }

    /// True for the unvalidated rectangles produced by thin duals.
    pub fn is_empty(&self) -> bool {
        self.a > self.b || self.c > self.d
    }

    pub fn width(&self) -> i32 {
        self.b - self.a
    }

    pub fn height(&self) -> i32 {
        self.d - self.c
    }

    pub fn contains(&self, x: i32, y: i32) -> bool {
        x >= self.a && x <= self.b && y >= self.c && y <= self.d
    }

    pub fn contains_rect(&self, other: &Rect) -> bool {
        other.a >= self.a && other.b <= self.b && other.c >= self.c && other.d <= self.d
    }

    pub fn translate(&self, dx: i32, dy: i32) -> Rect {
        Rect { a: self.a + dx, b: self.b + dx, c: self.c + dy, d: self.d + dy }
    }

    /// Smallest rectangle containing both.
    pub fn hull(&self, other: &Rect) -> Rect {
        Rect { a: self.a.min(other.a), b: self.b.max(other.b), c: self.c.min(other.c), d: self.d.max(other.d) }
    }

    pub fn grow(&self, by: i32) -> Rect {
        Rect { a: self.a - by, b: self.b + by, c: self.c - by, d: self.d + by }
    }
}

impl fmt::Display for Rect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{}]x[{},{}]", self.a, self.b, self.c, self.d)
    }
}

/// A lattice vertex: cell coordinates plus index inside the unit cell.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Site {
    pub x: i32,
    pub y: i32,
    pub s: u8,
}

impl Site {
    pub fn new(x: i32, y: i32) -> Site {
        Site { x, y, s: 0 }
    }

    fn sort_key(&self) -> (i32, i32, u8) {
        (self.y, self.x, self.s)
    }
}

/// Edge from cell vertex `from` to vertex `to` of the cell translated by `(dx, dy)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EdgeTemplate {
    pub from: u8,
    pub to: u8,
    pub dx: i32,
    pub dy: i32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Side {
    Top,
    Left,
    Bottom,
    Right,
}

impl Side {
    pub const ALL: [Side; 4] = [Side::Top, Side::Left, Side::Bottom, Side::Right];
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Symmetry {
    Rot90,
    ReflectX,
    ReflectY,
    Translate(i32, i32),
}

impl Symmetry {
    pub fn inverse(&self) -> Vec<Symmetry> {
        match *self {
            Symmetry::Rot90 => vec![Symmetry::Rot90, Symmetry::Rot90, Symmetry::Rot90],
            Symmetry::ReflectX | Symmetry::ReflectY => vec![*self],
            Symmetry::Translate(dx, dy) => vec![Symmetry::Translate(-dx, -dy)],
        }
    }
}

/// Data-driven description of a biperiodic planar lattice.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lattice {
    name: String,
    cell_vertices: u8,
    templates: Vec<EdgeTemplate>,
    /// Sub-cell permutations for the declared point symmetries.
    rot90: Option<Vec<u8>>,
    reflect_x: Option<Vec<u8>>,
    reflect_y: Option<Vec<u8>>,
}

impl Lattice {
    pub fn new(
        name: impl Into<String>,
        cell_vertices: u8,
        templates: Vec<EdgeTemplate>,
        rot90: Option<Vec<u8>>,
        reflect_x: Option<Vec<u8>>,
        reflect_y: Option<Vec<u8>>,
    ) -> Result<Lattice> {
        let lattice = Lattice { name: name.into(), cell_vertices, templates, rot90, reflect_x, reflect_y };
        lattice.validate()?;
        Ok(lattice)
    }

    /// The square lattice Z^2 with all point symmetries declared.
    pub fn square() -> Lattice {
        Lattice {
            name: "square".into(),
            cell_vertices: 1,
            templates: vec![
                EdgeTemplate { from: 0, to: 0, dx: 1, dy: 0 },
                EdgeTemplate { from: 0, to: 0, dx: 0, dy: 1 },
            ],
            rot90: Some(vec![0]),
            reflect_x: Some(vec![0]),
            reflect_y: Some(vec![0]),
        }
    }

    pub fn by_name(name: &str) -> Result<Lattice> {
        match name {
            "square" => Ok(Lattice::square()),
            other => Err(Error::UnknownLattice(other.to_string())),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn cell_vertices(&self) -> u8 {
        self.cell_vertices
    }

    pub fn templates(&self) -> &[EdgeTemplate] {
        &self.templates
    }

    /// Maximal edge length `L` in the sup norm over cells (at least 1).
    pub fn max_edge_len(&self) -> i32 {
        self.templates.iter().map(|t| t.dx.abs().max(t.dy.abs())).max().unwrap_or(1).max(1)
    }

    pub fn is_square(&self) -> bool {
        self.cell_vertices == 1
            && self.templates.len() == 2
            && self.templates.contains(&EdgeTemplate { from: 0, to: 0, dx: 1, dy: 0 })
            && self.templates.contains(&EdgeTemplate { from: 0, to: 0, dx: 0, dy: 1 })
    }

    pub fn declares(&self, sym: Symmetry) -> bool {
        match sym {
            Symmetry::Translate(..) => true,
            Symmetry::Rot90 => self.rot90.is_some(),
            Symmetry::ReflectX => self.reflect_x.is_some(),
            Symmetry::ReflectY => self.reflect_y.is_some(),
        }
    }

    /// Lattice neighbours of a site.
    pub fn neighbors(&self, site: Site) -> Vec<Site> {
        let mut out = Vec::with_capacity(2 * self.templates.len());
        for t in &self.templates {
            if t.from == site.s {
                out.push(Site { x: site.x + t.dx, y: site.y + t.dy, s: t.to });
            }
            if t.to == site.s {
                out.push(Site { x: site.x - t.dx, y: site.y - t.dy, s: t.from });
            }
        }
        out
    }

    fn perm_for(&self, sym: Symmetry) -> Option<&[u8]> {
        match sym {
            Symmetry::Rot90 => self.rot90.as_deref(),
            Symmetry::ReflectX => self.reflect_x.as_deref(),
            Symmetry::ReflectY => self.reflect_y.as_deref(),
            Symmetry::Translate(..) => None,
        }
    }

    /// Image of a site under a symmetry, in the given coordinate frame.
    pub fn map_site(&self, frame: Frame, sym: Symmetry, site: Site) -> Site {
        // Dual-frame sites sit at (x + 1/2, y + 1/2); point symmetries about the
        // origin therefore shift them by one cell.
        let shift = match frame {
            Frame::Primal => 0,
            Frame::Dual => 1,
        };
        let s = self.perm_for(sym).map(|perm| perm[site.s as usize]).unwrap_or(site.s);
        match sym {
            Symmetry::Rot90 => Site { x: -site.y - shift, y: site.x, s },
            Symmetry::ReflectX => Site { x: -site.x - shift, y: site.y, s },
            Symmetry::ReflectY => Site { x: site.x, y: -site.y - shift, s },
            Symmetry::Translate(dx, dy) => Site { x: site.x + dx, y: site.y + dy, s },
        }
    }

    fn is_edge(&self, u: Site, v: Site) -> bool {
        self.templates.iter().any(|t| {
            (t.from == u.s && t.to == v.s && v.x - u.x == t.dx && v.y - u.y == t.dy)
                || (t.from == v.s && t.to == u.s && u.x - v.x == t.dx && u.y - v.y == t.dy)
        })
    }

    fn validate(&self) -> Result<()> {
        if self.cell_vertices == 0 {
            return Err(Error::InvalidLattice("unit cell has no vertices".into()));
        }
        for t in &self.templates {
            if t.from >= self.cell_vertices || t.to >= self.cell_vertices {
                return Err(Error::InvalidLattice("edge template references a missing cell vertex".into()));
            }
            if t.dx == 0 && t.dy == 0 && t.from == t.to {
                return Err(Error::InvalidLattice("self-loop edge template".into()));
            }
        }
        // Connectivity of a finite patch around the origin cell.
        let reach = 2 * self.max_edge_len() + 2;
        let patch = Rect::centered_box(reach);
        let start = Site { x: 0, y: 0, s: 0 };
        let mut seen = HashSet::from([start]);
        let mut queue = VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            for w in self.neighbors(v) {
                if patch.contains(w.x, w.y) && seen.insert(w) {
                    queue.push_back(w);
                }
            }
        }
        for s in 0..self.cell_vertices {
            for (x, y) in [(0, 0), (1, 0), (0, 1)] {
                if !seen.contains(&Site { x, y, s }) {
                    return Err(Error::InvalidLattice("lattice is not connected".into()));
                }
            }
        }
        // Declared symmetries must map edges to edges.
        for sym in [Symmetry::Rot90, Symmetry::ReflectX, Symmetry::ReflectY] {
            let Some(perm) = self.perm_for(sym) else { continue };
            if perm.len() != self.cell_vertices as usize {
                return Err(Error::InvalidLattice(format!("{sym:?} permutation has wrong length")));
            }
            for t in &self.templates {
                let u = Site { x: 0, y: 0, s: t.from };
                let v = Site { x: t.dx, y: t.dy, s: t.to };
                let (mu, mv) = (self.map_site(Frame::Primal, sym, u), self.map_site(Frame::Primal, sym, v));
                if !self.is_edge(mu, mv) {
                    return Err(Error::InvalidLattice(format!("{sym:?} does not preserve edges")));
                }
            }
        }
        Ok(())
    }
}

/// Coordinate frame of a region: primal sites sit at integer points, dual sites at
/// face centres `(x + 1/2, y + 1/2)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Frame {
    Primal,
    Dual,
}

impl Frame {
    pub fn flip(self) -> Frame {
        match self {
            Frame::Primal => Frame::Dual,
            Frame::Dual => Frame::Primal,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EdgeRule {
    /// Edges with at least one endpoint in the rectangle.
    Touching,
    /// Edges with both endpoints in the rectangle.
    Induced,
    /// Explicit small graph with a caller-supplied boundary.
    Custom,
}

/// Serializable description of a rectangle region.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionSpec {
    pub lattice: String,
    pub a: i32,
    pub b: i32,
    pub c: i32,
    pub d: i32,
}

impl RegionSpec {
    pub fn build(&self) -> Result<Region> {
        let lattice = Lattice::by_name(&self.lattice)?;
        build_region(&lattice, Rect::new(self.a, self.b, self.c, self.d)?)
    }
}

/// A finite subgraph of a lattice with dense vertex and edge ids.
#[derive(Clone, Debug, PartialEq)]
pub struct Region {
    lattice: Arc<Lattice>,
    frame: Frame,
    rule: EdgeRule,
    rect: Rect,
    sites: Vec<Site>,
    index: HashMap<Site, u32>,
    edges: Vec<[u32; 2]>,
    adj_start: Vec<u32>,
    adj: Vec<(u32, u32)>,
    boundary: Vec<u32>,
    on_boundary: Vec<bool>,
}

/// Builds the region of all lattice edges with at least one endpoint in `rect`.
pub fn build_region(lattice: &Lattice, rect: Rect) -> Result<Region> {
    let rect = Rect::new(rect.a, rect.b, rect.c, rect.d)?;
    let l = lattice.max_edge_len();
    let mut edges = Vec::new();
    for y in rect.c - l..=rect.d + l {
        for x in rect.a - l..=rect.b + l {
            for t in lattice.templates() {
                let u = Site { x, y, s: t.from };
                let v = Site { x: x + t.dx, y: y + t.dy, s: t.to };
                if rect.contains(u.x, u.y) || rect.contains(v.x, v.y) {
                    edges.push((u, v));
                    if edges.len() > MAX_REGION_EDGES {
                        return Err(Error::RegionTooLarge { edges: edges.len(), limit: MAX_REGION_EDGES });
                    }
                }
            }
        }
    }
    Region::from_site_edges(Arc::new(lattice.clone()), Frame::Primal, EdgeRule::Touching, rect, edges, None)
}

/// Builds the region of all lattice edges with both endpoints in `rect`.
pub fn build_induced_region(lattice: &Lattice, rect: Rect) -> Result<Region> {
    let rect = Rect::new(rect.a, rect.b, rect.c, rect.d)?;
    let mut edges = Vec::new();
    for y in rect.c..=rect.d {
        for x in rect.a..=rect.b {
            for t in lattice.templates() {
                let u = Site { x, y, s: t.from };
                let v = Site { x: x + t.dx, y: y + t.dy, s: t.to };
                if rect.contains(v.x, v.y) {
                    edges.push((u, v));
                    if edges.len() > MAX_REGION_EDGES {
                        return Err(Error::RegionTooLarge { edges: edges.len(), limit: MAX_REGION_EDGES });
                    }
                }
            }
        }
    }
    if edges.is_empty() {
        return Err(Error::InvalidRegion(format!("no lattice edge lies inside {rect}")));
    }
    Region::from_site_edges(Arc::new(lattice.clone()), Frame::Primal, EdgeRule::Induced, rect, edges, None)
}

impl Region {
    /// A small explicit graph on the square lattice's coordinate plane. Used for
    /// test graphs (a single edge, a 4-cycle) that are not rectangle regions.
    pub fn custom(sites: &[(i32, i32)], edges: &[(usize, usize)], boundary: &[usize]) -> Result<Region> {
        let pts: Vec<Site> = sites.iter().map(|&(x, y)| Site::new(x, y)).collect();
        let mut site_edges = Vec::with_capacity(edges.len());
        for &(u, v) in edges {
            if u >= pts.len() || v >= pts.len() || u == v {
                return Err(Error::InvalidRegion("custom edge references a missing vertex".into()));
            }
            site_edges.push((pts[u], pts[v]));
        }
        let (mut a, mut b, mut c, mut d) = (i32::MAX, i32::MIN, i32::MAX, i32::MIN);
        for p in &pts {
            a = a.min(p.x);
            b = b.max(p.x);
            c = c.min(p.y);
            d = d.max(p.y);
        }
        let rect = Rect::new(a, b, c, d)?;
        let boundary_sites: Vec<Site> = boundary.iter().map(|&i| pts[i]).collect();
        let mut region = Region::from_site_edges(
            Arc::new(Lattice::square()),
            Frame::Primal,
            EdgeRule::Custom,
            rect,
            site_edges,
            Some(boundary_sites),
        )?;
        // Isolated vertices are allowed in custom graphs.
        for p in pts {
            if !region.index.contains_key(&p) {
                return Err(Error::InvalidRegion(format!("vertex {p:?} has no edges")));
            }
        }
        region.sort_boundary();
        Ok(region)
    }

    fn from_site_edges(
        lattice: Arc<Lattice>,
        frame: Frame,
        rule: EdgeRule,
        rect: Rect,
        site_edges: Vec<(Site, Site)>,
        boundary: Option<Vec<Site>>,
    ) -> Result<Region> {
        let mut sites: Vec<Site> = site_edges.iter().flat_map(|&(u, v)| [u, v]).collect();
        sites.sort_by_key(Site::sort_key);
        sites.dedup();
        let index: HashMap<Site, u32> = sites.iter().enumerate().map(|(i, &s)| (s, i as u32)).collect();
        let edges: Vec<[u32; 2]> = site_edges.iter().map(|(u, v)| [index[u], index[v]]).collect();

        let n = sites.len();
        let mut degree = vec![0u32; n + 1];
        for &[u, v] in &edges {
            degree[u as usize] += 1;
            degree[v as usize] += 1;
        }
        let mut adj_start = vec![0u32; n + 1];
        for i in 0..n {
            adj_start[i + 1] = adj_start[i] + degree[i];
        }
        let mut fill = adj_start.clone();
        let mut adj = vec![(0u32, 0u32); 2 * edges.len()];
        for (e, &[u, v]) in edges.iter().enumerate() {
            adj[fill[u as usize] as usize] = (v, e as u32);
            fill[u as usize] += 1;
            adj[fill[v as usize] as usize] = (u, e as u32);
            fill[v as usize] += 1;
        }

        let mut region = Region {
            lattice,
            frame,
            rule,
            rect,
            sites,
            index,
            edges,
            adj_start,
            adj,
            boundary: Vec::new(),
            on_boundary: vec![false; n],
        };
        match boundary {
            Some(bsites) => {
                for s in bsites {
                    let v = region
                        .vertex(s)
                        .ok_or_else(|| Error::InvalidRegion(format!("boundary vertex {s:?} not in region")))?;
                    region.on_boundary[v as usize] = true;
                }
            }
            None => {
                region.on_boundary = region.boundary_by_neighbor_scan();
            }
        }
        region.sort_boundary();
        Ok(region)
    }

    fn sort_boundary(&mut self) {
        self.boundary = (0..self.sites.len() as u32).filter(|&v| self.on_boundary[v as usize]).collect();
    }

    /// Boundary flags: vertices with a lattice neighbour outside the vertex set.
    pub fn boundary_by_neighbor_scan(&self) -> Vec<bool> {
        self.sites
            .iter()
            .map(|&s| self.lattice.neighbors(s).into_iter().any(|w| !self.index.contains_key(&w)))
            .collect()
    }

    /// Boundary flags computed from the complement: every lattice vertex outside the
    /// region marks its neighbours inside the region.
    pub fn boundary_by_complement_scan(&self) -> Vec<bool> {
        let mut flags = vec![false; self.sites.len()];
        let mut outside = HashSet::new();
        for &s in &self.sites {
            for w in self.lattice.neighbors(s) {
                if !self.index.contains_key(&w) {
                    outside.insert(w);
                }
            }
        }
        for w in outside {
            for s in self.lattice.neighbors(w) {
                if let Some(&v) = self.index.get(&s) {
                    flags[v as usize] = true;
                }
            }
        }
        flags
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn frame(&self) -> Frame {
        self.frame
    }

    pub fn rule(&self) -> EdgeRule {
        self.rule
    }

    pub fn rect(&self) -> Rect {
        self.rect
    }

    pub fn num_vertices(&self) -> usize {
        self.sites.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn site(&self, v: u32) -> Site {
        self.sites[v as usize]
    }

    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    pub fn vertex(&self, site: Site) -> Option<u32> {
        self.index.get(&site).copied()
    }

    pub fn vertex_at(&self, x: i32, y: i32) -> Option<u32> {
        self.vertex(Site::new(x, y))
    }

    pub fn edge(&self, e: u32) -> [u32; 2] {
        self.edges[e as usize]
    }

    pub fn edges(&self) -> &[[u32; 2]] {
        &self.edges
    }

    pub fn edge_sites(&self, e: u32) -> (Site, Site) {
        let [u, v] = self.edges[e as usize];
        (self.sites[u as usize], self.sites[v as usize])
    }

    /// Edge joining two sites, if present.
    pub fn edge_between(&self, u: Site, v: Site) -> Option<u32> {
        let (iu, iv) = (self.vertex(u)?, self.vertex(v)?);
        self.neighbors(iu).find(|&(w, _)| w == iv).map(|(_, e)| e)
    }

    /// `(neighbour, edge id)` pairs incident to `v`.
    pub fn neighbors(&self, v: u32) -> impl Iterator<Item = (u32, u32)> + '_ {
        let lo = self.adj_start[v as usize] as usize;
        let hi = self.adj_start[v as usize + 1] as usize;
        self.adj[lo..hi].iter().copied()
    }

    pub fn degree(&self, v: u32) -> usize {
        (self.adj_start[v as usize + 1] - self.adj_start[v as usize]) as usize
    }

    /// Boundary vertex ids, sorted.
    pub fn boundary(&self) -> &[u32] {
        &self.boundary
    }

    pub fn is_boundary(&self, v: u32) -> bool {
        self.on_boundary[v as usize]
    }

    /// Vertices inside the rectangle within the `L`-thick slab along `side`.
    pub fn side_vertices(&self, side: Side) -> Vec<u32> {
        side_slab(self, self.rect, side)
    }

    /// Boundary vertices attached to one side of the rectangle. For touching
    /// regions these are the pendant vertices strictly outside that side; for
    /// induced and custom regions they are the boundary vertices on the side line.
    pub fn boundary_arc(&self, side: Side) -> Vec<u32> {
        let r = self.rect;
        let strict = self.rule == EdgeRule::Touching;
        self.boundary
            .iter()
            .copied()
            .filter(|&v| {
                let s = self.sites[v as usize];
                match (side, strict) {
                    (Side::Bottom, true) => s.y < r.c,
                    (Side::Top, true) => s.y > r.d,
                    (Side::Left, true) => s.x < r.a,
                    (Side::Right, true) => s.x > r.b,
                    (Side::Bottom, false) => s.y <= r.c,
                    (Side::Top, false) => s.y >= r.d,
                    (Side::Left, false) => s.x <= r.a,
                    (Side::Right, false) => s.x >= r.b,
                }
            })
            .collect()
    }

    /// Vertices whose cell lies in `rect`.
    pub fn vertices_in(&self, rect: Rect) -> Vec<u32> {
        (0..self.sites.len() as u32)
            .filter(|&v| {
                let s = self.sites[v as usize];
                rect.contains(s.x, s.y)
            })
            .collect()
    }

    /// Edges with both endpoints in `rect`.
    pub fn edges_within(&self, rect: Rect) -> Vec<u32> {
        (0..self.edges.len() as u32)
            .filter(|&e| {
                let (u, v) = self.edge_sites(e);
                rect.contains(u.x, u.y) && rect.contains(v.x, v.y)
            })
            .collect()
    }

    /// Position of a vertex in the plane (dual sites are offset by one half).
    pub fn position(&self, v: u32) -> (f64, f64) {
        let s = self.sites[v as usize];
        let off = match self.frame {
            Frame::Primal => 0.0,
            Frame::Dual => 0.5,
        };
        (s.x as f64 + off, s.y as f64 + off)
    }

    /// Maps each edge of `sub` to the id of the same edge in `self`.
    pub fn embed_edges(&self, sub: &Region) -> Result<Vec<u32>> {
        if sub.frame != self.frame {
            return Err(Error::Mismatch("regions live in different frames".into()));
        }
        (0..sub.num_edges() as u32)
            .map(|e| {
                let (u, v) = sub.edge_sites(e);
                self.edge_between(u, v)
                    .ok_or_else(|| Error::Mismatch(format!("edge {u:?}-{v:?} of the subregion is not in the region")))
            })
            .collect()
    }
}

fn side_slab(region: &Region, rect: Rect, side: Side) -> Vec<u32> {
    let l = region.lattice.max_edge_len();
    region
        .vertices_in(rect)
        .into_iter()
        .filter(|&v| {
            let s = region.sites[v as usize];
            match side {
                Side::Left => s.x < rect.a + l,
                Side::Right => s.x > rect.b - l,
                Side::Bottom => s.y < rect.c + l,
                Side::Top => s.y > rect.d - l,
            }
        })
        .collect()
}

/// Slab of region vertices along one side of an arbitrary rectangle.
pub fn side_vertices_of(region: &Region, rect: Rect, side: Side) -> Vec<u32> {
    side_slab(region, rect, side)
}

/// Named-side wrapper matching the free-function style of the other modules.
pub fn side_vertices(region: &Region, side: Side) -> Vec<u32> {
    region.side_vertices(side)
}

/// A primal region paired with its planar dual. Edge `e` of the primal region is
/// crossed by edge `e` of the dual region.
#[derive(Clone, Debug, PartialEq)]
pub struct DualMap {
    pub primal: Region,
    pub dual: Region,
}

impl DualMap {
    /// Id of the dual edge crossing primal edge `e`.
    pub fn dual_edge(&self, e: u32) -> u32 {
        e
    }

    pub fn primal_edge(&self, e: u32) -> u32 {
        e
    }

    /// Checks that every dual edge crosses its primal edge at the midpoint.
    pub fn is_consistent(&self) -> bool {
        if self.primal.num_edges() != self.dual.num_edges() {
            return false;
        }
        (0..self.primal.num_edges() as u32).all(|e| {
            let (pu, pv) = self.primal.edge_sites(e);
            let (du, dv) = self.dual.edge_sites(e);
            // Doubled midpoints in primal-frame coordinates.
            let pm = doubled_midpoint(self.primal.frame, pu, pv);
            let dm = doubled_midpoint(self.dual.frame, du, dv);
            let perpendicular = (pu.x == pv.x) != (du.x == dv.x);
            pm == dm && perpendicular
        })
    }
}

fn doubled_midpoint(frame: Frame, u: Site, v: Site) -> (i32, i32) {
    let off = match frame {
        Frame::Primal => 0,
        Frame::Dual => 1,
    };
    (u.x + v.x + off, u.y + v.y + off)
}

/// Dual edge crossing the square-lattice edge `u`-`v` given in `frame`.
///
/// Primal face `(x, y)` has centre `(x + 1/2, y + 1/2)`; a dual-frame face
/// `(u, v)` is the primal vertex `(u + 1, v + 1)`.
fn dual_edge_sites(frame: Frame, u: Site, v: Site) -> (Site, Site) {
    let (u, v) = if (u.x, u.y) <= (v.x, v.y) { (u, v) } else { (v, u) };
    let horizontal = u.y == v.y;
    let (x, y) = (u.x, u.y);
    match (frame, horizontal) {
        (Frame::Primal, true) => (Site::new(x, y - 1), Site::new(x, y)),
        (Frame::Primal, false) => (Site::new(x - 1, y), Site::new(x, y)),
        (Frame::Dual, true) => (Site::new(x + 1, y), Site::new(x + 1, y + 1)),
        (Frame::Dual, false) => (Site::new(x, y + 1), Site::new(x + 1, y + 1)),
    }
}

/// Builds the planar dual of a square-lattice region, edge ids shared.
pub fn dual_of(region: &Region) -> Result<DualMap> {
    if !region.lattice.is_square() {
        return Err(Error::UnsupportedLattice(format!(
            "planar dual is only implemented for the square lattice, not '{}'",
            region.lattice.name()
        )));
    }
    let r = region.rect;
    // An induced region one cell thin has no inner face; its dual is a touching
    // region around an empty rectangle, kept unvalidated so the map stays total.
    let rect = |a, b, c, d| Rect { a, b, c, d };
    let (rule, rect) = match (region.frame, region.rule) {
        (Frame::Primal, EdgeRule::Touching) => (EdgeRule::Induced, rect(r.a - 1, r.b, r.c - 1, r.d)),
        (Frame::Primal, EdgeRule::Induced) => (EdgeRule::Touching, rect(r.a, r.b - 1, r.c, r.d - 1)),
        (Frame::Dual, EdgeRule::Touching) => (EdgeRule::Induced, rect(r.a, r.b + 1, r.c, r.d + 1)),
        (Frame::Dual, EdgeRule::Induced) => (EdgeRule::Touching, rect(r.a + 1, r.b, r.c + 1, r.d)),
        (_, EdgeRule::Custom) => return Err(Error::UnsupportedLattice("custom graphs carry no face structure".into())),
    };
    let site_edges: Vec<(Site, Site)> = (0..region.num_edges() as u32)
        .map(|e| {
            let (u, v) = region.edge_sites(e);
            dual_edge_sites(region.frame, u, v)
        })
        .collect();
    let dual = Region::from_site_edges(region.lattice.clone(), region.frame.flip(), rule, rect, site_edges, None)?;
    Ok(DualMap { primal: region.clone(), dual })
}

/// Image of a region under a lattice symmetry. Edge `e` of the result is the
/// image of edge `e` of the input, so configurations transport unchanged.
pub fn apply_symmetry(region: &Region, sym: Symmetry) -> Result<Region> {
    if !region.lattice.declares(sym) {
        return Err(Error::UndeclaredSymmetry(format!("{sym:?}")));
    }
    let lat = &region.lattice;
    let map = |s: Site| lat.map_site(region.frame, sym, s);
    let corners = [map(Site::new(region.rect.a, region.rect.c)), map(Site::new(region.rect.b, region.rect.d))];
    let rect = Rect::new(
        corners[0].x.min(corners[1].x),
        corners[0].x.max(corners[1].x),
        corners[0].y.min(corners[1].y),
        corners[0].y.max(corners[1].y),
    )?;
    let site_edges: Vec<(Site, Site)> = (0..region.num_edges() as u32)
        .map(|e| {
            let (u, v) = region.edge_sites(e);
            (map(u), map(v))
        })
        .collect();
    let boundary = match region.rule {
        EdgeRule::Custom => Some(region.boundary.iter().map(|&v| map(region.site(v))).collect()),
        _ => None,
    };
    Region::from_site_edges(region.lattice.clone(), region.frame, region.rule, rect, site_edges, boundary)
}

/// Maps a vertex of `region` to the corresponding vertex of its symmetry image.
pub fn transport_vertex(region: &Region, image: &Region, sym: Symmetry, v: u32) -> Option<u32> {
    image.vertex(region.lattice.map_site(region.frame, sym, region.site(v)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sq(a: i32, b: i32, c: i32, d: i32) -> Region {
        build_region(&Lattice::square(), Rect::new(a, b, c, d).unwrap()).unwrap()
    }

    #[test]
    fn single_site_region() {
        let r = sq(0, 0, 0, 0);
        assert_eq!(r.num_edges(), 4);
        assert_eq!(r.num_vertices(), 5);
        assert_eq!(r.boundary().len(), 4);
        let centre = r.vertex_at(0, 0).unwrap();
        assert!(!r.is_boundary(centre));
    }

    #[test]
    fn region_counts_match_enumeration() {
        // Brute force: count lattice edges with an endpoint in the rectangle.
        for (a, b, c, d) in [(0, 1, 0, 1), (-1, 1, -1, 1), (0, 3, 0, 0), (2, 4, -1, 3)] {
            let r = sq(a, b, c, d);
            let rect = Rect::new(a, b, c, d).unwrap();
            let mut expected_edges = 0;
            let mut verts = HashSet::new();
            for x in a - 2..=b + 2 {
                for y in c - 2..=d + 2 {
                    for (dx, dy) in [(1, 0), (0, 1)] {
                        if rect.contains(x, y) || rect.contains(x + dx, y + dy) {
                            expected_edges += 1;
                            verts.insert((x, y));
                            verts.insert((x + dx, y + dy));
                        }
                    }
                }
            }
            assert_eq!(r.num_edges(), expected_edges);
            assert_eq!(r.num_vertices(), verts.len());
        }
        let two = sq(0, 1, 0, 1);
        assert_eq!((two.num_edges(), two.num_vertices(), two.boundary().len()), (12, 12, 8));
        let lam1 = sq(-1, 1, -1, 1);
        assert_eq!((lam1.num_edges(), lam1.num_vertices()), (24, 21));
    }

    #[test]
    fn boundary_two_ways_agree() {
        for (a, b, c, d) in [(0, 0, 0, 0), (0, 2, 0, 1), (-3, 3, -2, 2)] {
            let r = sq(a, b, c, d);
            assert_eq!(r.boundary_by_neighbor_scan(), r.boundary_by_complement_scan());
            let dm = dual_of(&r).unwrap();
            assert_eq!(dm.dual.boundary_by_neighbor_scan(), dm.dual.boundary_by_complement_scan());
        }
    }

    #[test]
    fn every_edge_touches_rectangle() {
        let r = sq(-2, 3, 0, 2);
        for e in 0..r.num_edges() as u32 {
            let (u, v) = r.edge_sites(e);
            assert!(r.rect().contains(u.x, u.y) || r.rect().contains(v.x, v.y));
        }
    }

    #[test]
    fn malformed_rectangle_rejected() {
        assert!(matches!(Rect::new(1, 0, 0, 0), Err(Error::MalformedRect { .. })));
        assert!(Rect::new(0, 0, 2, 1).is_err());
    }

    #[test]
    fn sides() {
        let r = sq(0, 2, 0, 1);
        let left: Vec<Site> = r.side_vertices(Side::Left).iter().map(|&v| r.site(v)).collect();
        assert_eq!(left, vec![Site::new(0, 0), Site::new(0, 1)]);
        let dot = sq(0, 0, 0, 0);
        assert_eq!(dot.side_vertices(Side::Top), dot.side_vertices(Side::Bottom));
        assert_eq!(dot.side_vertices(Side::Top).len(), 1);

        let r = sq(0, 4, 0, 2);
        let refl = apply_symmetry(&r, Symmetry::ReflectX).unwrap();
        let mut right: Vec<Site> = r
            .side_vertices(Side::Right)
            .iter()
            .map(|&v| Lattice::square().map_site(Frame::Primal, Symmetry::ReflectX, r.site(v)))
            .collect();
        let mut left: Vec<Site> = refl.side_vertices(Side::Left).iter().map(|&v| refl.site(v)).collect();
        right.sort();
        left.sort();
        assert_eq!(right, left);
    }

    #[test]
    fn dual_counts_and_involution() {
        for (a, b, c, d) in [(0, 1, 0, 1), (0, 2, 0, 1), (-1, 1, -1, 1), (0, 0, 0, 0)] {
            let r = sq(a, b, c, d);
            let dm = dual_of(&r).unwrap();
            assert_eq!(dm.dual.num_edges(), r.num_edges());
            assert!(dm.is_consistent());
            let back = dual_of(&dm.dual).unwrap();
            assert_eq!(back.dual, r);
            assert!(back.is_consistent());
        }
        // One dual vertex per bounded unit face, plus the ring of boundary faces.
        let dm = dual_of(&sq(0, 1, 0, 1)).unwrap();
        assert_eq!(dm.dual.rule(), EdgeRule::Induced);
        assert_eq!(dm.dual.rect(), Rect::new(-1, 1, -1, 1).unwrap());
        assert_eq!(dm.dual.num_vertices(), 9);
        let inner: Vec<u32> = (0..9).filter(|&v| !dm.dual.is_boundary(v)).collect();
        assert_eq!(inner.len(), 1);
        assert_eq!(dm.dual.position(inner[0]), (0.5, 0.5));
    }

    #[test]
    fn induced_regions_and_thin_duals() {
        let lat = Lattice::square();
        let cycle = build_induced_region(&lat, Rect::new(0, 1, 0, 1).unwrap()).unwrap();
        assert_eq!((cycle.num_edges(), cycle.num_vertices(), cycle.boundary().len()), (4, 4, 4));
        let dm = dual_of(&cycle).unwrap();
        assert_eq!(dm.dual.num_vertices(), 5);
        assert!(dm.is_consistent());
        assert_eq!(dual_of(&dm.dual).unwrap().dual, cycle);

        let edge = build_induced_region(&lat, Rect::new(0, 1, 0, 0).unwrap()).unwrap();
        assert_eq!(edge.num_edges(), 1);
        let dm = dual_of(&edge).unwrap();
        assert_eq!(dm.dual.num_edges(), 1);
        assert_eq!(dm.dual.boundary().len(), 2);
        assert_eq!(dual_of(&dm.dual).unwrap().dual, edge);
        assert!(build_induced_region(&lat, Rect::new(0, 0, 0, 0).unwrap()).is_err());
    }

    #[test]
    fn symmetries() {
        let r = sq(0, 2, 0, 1);
        let t = apply_symmetry(&r, Symmetry::Translate(1, 0)).unwrap();
        assert_eq!(t.rect(), Rect::new(1, 3, 0, 1).unwrap());
        assert_eq!(t.num_edges(), r.num_edges());

        let rot = apply_symmetry(&r, Symmetry::Rot90).unwrap();
        assert_eq!(rot.rect(), Rect::new(-1, 0, 0, 2).unwrap());
        let direct = build_region(&Lattice::square(), rot.rect()).unwrap();
        let set = |g: &Region| -> HashSet<(Site, Site)> {
            (0..g.num_edges() as u32)
                .map(|e| {
                    let (u, v) = g.edge_sites(e);
                    if u < v {
                        (u, v)
                    } else {
                        (v, u)
                    }
                })
                .collect()
        };
        assert_eq!(set(&rot), set(&direct));

        let twice = apply_symmetry(&apply_symmetry(&r, Symmetry::ReflectX).unwrap(), Symmetry::ReflectX).unwrap();
        assert_eq!(twice, r);

        let mut back = rot.clone();
        for s in Symmetry::Rot90.inverse() {
            back = apply_symmetry(&back, s).unwrap();
        }
        assert_eq!(back, r);
    }

    #[test]
    fn undeclared_symmetry_rejected() {
        // Square lattice with the rotation stripped.
        let lat =
            Lattice::new("square-norot", 1, Lattice::square().templates().to_vec(), None, Some(vec![0]), Some(vec![0]))
                .unwrap();
        let r = build_region(&lat, Rect::new(0, 1, 0, 1).unwrap()).unwrap();
        assert!(matches!(apply_symmetry(&r, Symmetry::Rot90), Err(Error::UndeclaredSymmetry(_))));
        assert!(apply_symmetry(&r, Symmetry::ReflectX).is_ok());
    }

    #[test]
    fn decorated_lattice_validation() {
        // Two-site cell (a square lattice with each vertex split along a short
        // edge) is connected; a template pointing at a missing site is not.
        let ok = Lattice::new(
            "split-square",
            2,
            vec![
                EdgeTemplate { from: 0, to: 1, dx: 0, dy: 0 },
                EdgeTemplate { from: 1, to: 0, dx: 1, dy: 0 },
                EdgeTemplate { from: 0, to: 0, dx: 0, dy: 1 },
                EdgeTemplate { from: 1, to: 1, dx: 0, dy: 1 },
            ],
            None,
            None,
            Some(vec![0, 1]),
        );
        assert!(ok.is_ok());
        let r = build_region(&ok.unwrap(), Rect::new(0, 1, 0, 1).unwrap()).unwrap();
        assert_eq!(r.boundary_by_neighbor_scan(), r.boundary_by_complement_scan());
        assert!(dual_of(&r).is_err());
        let bad = Lattice::new("bad", 1, vec![EdgeTemplate { from: 0, to: 1, dx: 1, dy: 0 }], None, None, None);
        assert!(bad.is_err());
    }

    #[test]
    fn region_spec_json() {
        let spec: RegionSpec = serde_json::from_str(r#"{"lattice":"square","a":0,"b":2,"c":0,"d":1}"#).unwrap();
        assert_eq!(spec.build().unwrap().num_edges(), sq(0, 2, 0, 1).num_edges());
        assert!(serde_json::from_str::<RegionSpec>(r#"{"lattice":"square","a":0,"b":2,"c":0}"#).is_err());
    }
}
