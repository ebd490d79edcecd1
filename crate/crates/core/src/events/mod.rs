//! Crossing events: rectangle crossings and their complements, one-arm events,
//! the bridging events `A_j` with their segment layout, the renormalization
//! events `E_i`, and left-most crossing exploration.
//!
//! Every event is a conjunction of connection terms. A term asks whether a set
//! of source vertices is joined to a set of target vertices by open edges with
//! both endpoints inside a domain rectangle; a term may be negated.

mod explore;

pub use explore::{leftmost_vertical_crossing, CrossingPath};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{EventPredicate, Monotonicity};
use crate::lattice::{Rect, Region};
use crate::measure::Configuration;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EventKind {
    H,
    V,
    HComplement,
    VComplement,
    OneArm,
    BridgeA,
    StripE,
    Top,
    LeftArm,
    RightArm,
    LeftPrime,
    RightPrime,
    Custom,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<i32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub j: Option<i32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub i: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sources: Option<Vec<Rect>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub targets: Option<Vec<Rect>>,
}

/// An event on a host region. `rect` is the target rectangle for crossings and
/// the bounding rectangle of everything the event looks at otherwise.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrossingEvent {
    pub kind: EventKind,
    pub rect: Rect,
    #[serde(default)]
    pub params: EventParams,
}

/// One connection term: sources joined to targets inside `domain`.
#[derive(Clone, Debug, PartialEq, Eq)]
struct Term {
    domain: Rect,
    sources: Vec<Rect>,
    targets: Vec<Rect>,
    positive: bool,
}

fn slab(r: Rect, side: char, l: i32) -> Rect {
    match side {
        'L' => Rect { b: (r.a + l - 1).min(r.b), ..r },
        'R' => Rect { a: (r.b - l + 1).max(r.a), ..r },
        'B' => Rect { d: (r.c + l - 1).min(r.d), ..r },
        _ => Rect { c: (r.d - l + 1).max(r.c), ..r },
    }
}

/// `k = ceil(n / 50)`.
pub fn bridge_unit(n: i32) -> i32 {
    (n + 49) / 50
}

/// `R_j = [-17k, 18k] x [0, n] + (jk, 0)`.
pub fn bridge_rect(n: i32, j: i32) -> Rect {
    let k = bridge_unit(n);
    Rect { a: -17 * k, b: 18 * k, c: 0, d: n }.translate(j * k, 0)
}

/// `S_j = [jk, (j+1)k] x {0}`.
pub fn bridge_segment(n: i32, j: i32) -> Rect {
    let k = bridge_unit(n);
    Rect { a: j * k, b: (j + 1) * k, c: 0, d: 0 }
}

/// The pair `(R_i^-, R_i^+)` with `n_i = 2^i n`.
pub fn strip_rects(n: i32, i: u32) -> (Rect, Rect) {
    let ni = n << i;
    (Rect { a: -8 * ni, b: -4 * ni, c: 0, d: n }, Rect { a: 4 * ni, b: 8 * ni, c: 0, d: n })
}

impl CrossingEvent {
    fn simple(kind: EventKind, rect: Rect) -> CrossingEvent {
        CrossingEvent { kind, rect, params: EventParams::default() }
    }

    pub fn horizontal(rect: Rect) -> CrossingEvent {
        CrossingEvent::simple(EventKind::H, rect)
    }

    pub fn vertical(rect: Rect) -> CrossingEvent {
        CrossingEvent::simple(EventKind::V, rect)
    }

    pub fn h_complement(rect: Rect) -> CrossingEvent {
        CrossingEvent::simple(EventKind::HComplement, rect)
    }

    pub fn v_complement(rect: Rect) -> CrossingEvent {
        CrossingEvent::simple(EventKind::VComplement, rect)
    }

    fn indexed(kind: EventKind, rect: Rect, n: i32, j: Option<i32>, i: Option<u32>) -> CrossingEvent {
        CrossingEvent { kind, rect, params: EventParams { n: Some(n), j, i, ..Default::default() } }
    }

    /// The origin is joined to the boundary of `[-n, n]^2`.
    pub fn one_arm(n: i32) -> CrossingEvent {
        CrossingEvent::indexed(EventKind::OneArm, Rect::centered_box(n), n, None, None)
    }

    /// `S_j` joined to `S_{j+2} u S_{j+4}` inside `R_j u R_{j+4}`.
    pub fn bridge_event_aj(n: i32, j: i32) -> CrossingEvent {
        let rect = bridge_rect(n, j).hull(&bridge_rect(n, j + 4));
        CrossingEvent::indexed(EventKind::BridgeA, rect, n, Some(j), None)
    }

    /// `R_i^-` and `R_i^+` both crossed vertically.
    pub fn strip_event_ei(n: i32, i: u32) -> CrossingEvent {
        let (lo, hi) = strip_rects(n, i);
        CrossingEvent::indexed(EventKind::StripE, lo.hull(&hi), n, None, Some(i))
    }

    /// `S_j` joined to the top of `R_j` inside `R_j`.
    pub fn top_tj(n: i32, j: i32) -> CrossingEvent {
        CrossingEvent::indexed(EventKind::Top, bridge_rect(n, j), n, Some(j), None)
    }

    /// `S_j` joined to the left side of `R_{j+4}` inside `R_{j-13}`.
    pub fn left_lj(n: i32, j: i32) -> CrossingEvent {
        CrossingEvent::indexed(EventKind::LeftArm, bridge_rect(n, j - 13), n, Some(j), None)
    }

    /// `S_j` joined to the right side of `R_{j-4}` inside `R_{j+13}`.
    pub fn right_rj(n: i32, j: i32) -> CrossingEvent {
        CrossingEvent::indexed(EventKind::RightArm, bridge_rect(n, j + 13), n, Some(j), None)
    }

    /// `S_j` joined to the left side of `R_j` inside `R_j`, but not in the sense of [`CrossingEvent::left_lj`].
    pub fn left_prime(n: i32, j: i32) -> CrossingEvent {
        let rect = bridge_rect(n, j).hull(&bridge_rect(n, j - 13));
        CrossingEvent::indexed(EventKind::LeftPrime, rect, n, Some(j), None)
    }

    pub fn right_prime(n: i32, j: i32) -> CrossingEvent {
        let rect = bridge_rect(n, j).hull(&bridge_rect(n, j + 13));
        CrossingEvent::indexed(EventKind::RightPrime, rect, n, Some(j), None)
    }

    /// Sources joined to targets by open edges inside `domain`.
    pub fn custom(domain: Rect, sources: Vec<Rect>, targets: Vec<Rect>) -> CrossingEvent {
        CrossingEvent {
            kind: EventKind::Custom,
            rect: domain,
            params: EventParams { sources: Some(sources), targets: Some(targets), ..Default::default() },
        }
    }

    fn need_n(&self) -> Result<i32> {
        match self.params.n {
            Some(n) if n >= 1 => Ok(n),
            _ => Err(Error::InvalidEvent(format!("{:?} needs a parameter n >= 1", self.kind))),
        }
    }

    fn need_j(&self) -> Result<i32> {
        self.params.j.ok_or_else(|| Error::InvalidEvent(format!("{:?} needs a parameter j", self.kind)))
    }

    fn terms(&self, l: i32) -> Result<Vec<Term>> {
        let r = self.rect;
        let term = |domain: Rect, sources: Vec<Rect>, targets: Vec<Rect>, positive: bool| Term {
            domain,
            sources,
            targets,
            positive,
        };
        let h = |positive| term(r, vec![slab(r, 'L', l)], vec![slab(r, 'R', l)], positive);
        let v = |positive| term(r, vec![slab(r, 'B', l)], vec![slab(r, 'T', l)], positive);
        Ok(match self.kind {
            EventKind::H => vec![h(true)],
            EventKind::V => vec![v(true)],
            EventKind::HComplement => vec![h(false)],
            EventKind::VComplement => vec![v(false)],
            EventKind::OneArm => {
                let n = self.need_n()?;
                let b = Rect::centered_box(n);
                let sides = ['L', 'R', 'B', 'T'].iter().map(|&s| slab(b, s, l)).collect();
                vec![term(b, vec![Rect { a: 0, b: 0, c: 0, d: 0 }], sides, true)]
            }
            EventKind::BridgeA => {
                let (n, j) = (self.need_n()?, self.need_j()?);
                let domain = bridge_rect(n, j).hull(&bridge_rect(n, j + 4));
                vec![term(
                    domain,
                    vec![bridge_segment(n, j)],
                    vec![bridge_segment(n, j + 2), bridge_segment(n, j + 4)],
                    true,
                )]
            }
            EventKind::StripE => {
                let n = self.need_n()?;
                let i = self.params.i.unwrap_or(0);
                let (lo, hi) = strip_rects(n, i);
                vec![
                    term(lo, vec![slab(lo, 'B', l)], vec![slab(lo, 'T', l)], true),
                    term(hi, vec![slab(hi, 'B', l)], vec![slab(hi, 'T', l)], true),
                ]
            }
            EventKind::Top => {
                let (n, j) = (self.need_n()?, self.need_j()?);
                let rj = bridge_rect(n, j);
                vec![term(rj, vec![bridge_segment(n, j)], vec![slab(rj, 'T', l)], true)]
            }
            EventKind::LeftArm | EventKind::RightArm => {
                let (n, j) = (self.need_n()?, self.need_j()?);
                vec![arm_term(n, j, self.kind == EventKind::LeftArm, l)]
            }
            EventKind::LeftPrime | EventKind::RightPrime => {
                let (n, j) = (self.need_n()?, self.need_j()?);
                let left = self.kind == EventKind::LeftPrime;
                let rj = bridge_rect(n, j);
                let side = slab(rj, if left { 'L' } else { 'R' }, l);
                let mut neg = arm_term(n, j, left, l);
                neg.positive = false;
                vec![term(rj, vec![bridge_segment(n, j)], vec![side], true), neg]
            }
            EventKind::Custom => {
                let sources = self.params.sources.clone().unwrap_or_default();
                let targets = self.params.targets.clone().unwrap_or_default();
                if sources.is_empty() || targets.is_empty() {
                    return Err(Error::InvalidEvent("custom event needs sources and targets".into()));
                }
                vec![term(r, sources, targets, true)]
            }
        })
    }

    pub fn monotonicity(&self) -> Monotonicity {
        match self.kind {
            EventKind::HComplement | EventKind::VComplement => Monotonicity::Decreasing,
            EventKind::LeftPrime | EventKind::RightPrime => Monotonicity::None,
            _ => Monotonicity::Increasing,
        }
    }

    /// Smallest rectangle containing every domain the event looks at.
    pub fn support(&self) -> Result<Rect> {
        let terms = self.terms(1)?;
        let mut it = terms.iter().map(|t| t.domain).filter(|d| !d.is_empty());
        let first = it.next().unwrap_or(self.rect);
        Ok(it.fold(first, |acc, d| acc.hull(&d)))
    }

    pub fn label(&self) -> String {
        let kind =
            serde_json::to_value(self.kind).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default();
        match (self.params.n, self.params.j, self.params.i) {
            (Some(n), Some(j), _) => format!("{kind}(n={n},j={j})"),
            (Some(n), None, Some(i)) => format!("{kind}(n={n},i={i})"),
            (Some(n), None, None) => format!("{kind}(n={n})"),
            _ => format!("{kind}{}", self.rect),
        }
    }

    /// The event on the dual configuration that fails exactly when this crossing
    /// occurs: a horizontal crossing of `[a,b]x[c,d]` is blocked by a vertical dual
    /// crossing of the faces `[a,b-1]x[c-1,d]`, and symmetrically.
    pub fn dual_blocker(&self) -> Result<CrossingEvent> {
        let r = self.rect;
        match self.kind {
            EventKind::H => Ok(CrossingEvent::vertical(Rect { a: r.a, b: r.b - 1, c: r.c - 1, d: r.d })),
            EventKind::V => Ok(CrossingEvent::horizontal(Rect { a: r.a - 1, b: r.b, c: r.c, d: r.d - 1 })),
            _ => Err(Error::InvalidEvent("only H and V crossings have dual blockers".into())),
        }
    }

    pub fn compile(&self, host: &Region) -> Result<CompiledEvent> {
        let l = host.lattice().max_edge_len();
        let terms = self.terms(l)?;
        let hr = host.rect();
        for t in &terms {
            if !t.domain.is_empty() && !hr.contains_rect(&t.domain) {
                return Err(Error::TargetOutsideHost { target: t.domain.to_string(), host: hr.to_string() });
            }
        }
        let terms = terms
            .iter()
            .map(|t| Ok((Connection::compile(host, t.domain, &t.sources, &t.targets), t.positive)))
            .collect::<Result<Vec<_>>>()?;
        Ok(CompiledEvent { label: self.label(), monotonicity: self.monotonicity(), num_edges: host.num_edges(), terms })
    }

    /// Convenience: compile against `host` and wrap as an exact-oracle predicate.
    pub fn predicate(&self, host: &Region) -> Result<EventPredicate> {
        Ok(self.compile(host)?.into_predicate())
    }
}

fn arm_term(n: i32, j: i32, left: bool, l: i32) -> Term {
    let (domain, target) = if left {
        (bridge_rect(n, j - 13), slab(bridge_rect(n, j + 4), 'L', l))
    } else {
        (bridge_rect(n, j + 13), slab(bridge_rect(n, j - 4), 'R', l))
    };
    Term { domain, sources: vec![bridge_segment(n, j)], targets: vec![target], positive: true }
}

/// A connection term compiled to a local graph over the host's vertices.
#[derive(Clone, Debug)]
pub struct Connection {
    verts: Vec<u32>,
    local: std::collections::HashMap<u32, u32>,
    adj_start: Vec<u32>,
    adj: Vec<(u32, u32)>,
    sources: Vec<u32>,
    is_target: Vec<bool>,
    trivially_true: bool,
}

impl Connection {
    fn compile(host: &Region, domain: Rect, sources: &[Rect], targets: &[Rect]) -> Connection {
        let mut local = std::collections::HashMap::new();
        let mut verts = Vec::new();
        let mut pairs = Vec::new();
        if !domain.is_empty() {
            for v in host.vertices_in(domain) {
                local.insert(v, verts.len() as u32);
                verts.push(v);
            }
            for e in host.edges_within(domain) {
                let [u, v] = host.edge(e);
                pairs.push((local[&u], local[&v], e));
            }
        }
        let n = verts.len();
        let mut adj_start = vec![0u32; n + 1];
        for &(u, v, _) in &pairs {
            adj_start[u as usize + 1] += 1;
            adj_start[v as usize + 1] += 1;
        }
        for i in 0..n {
            adj_start[i + 1] += adj_start[i];
        }
        let mut fill = adj_start.clone();
        let mut adj = vec![(0, 0); 2 * pairs.len()];
        for &(u, v, e) in &pairs {
            adj[fill[u as usize] as usize] = (v, e);
            fill[u as usize] += 1;
            adj[fill[v as usize] as usize] = (u, e);
            fill[v as usize] += 1;
        }
        let in_any = |rs: &[Rect], v: u32| {
            let s = host.site(v);
            rs.iter().any(|r| r.contains(s.x, s.y))
        };
        let src: Vec<u32> = (0..n as u32).filter(|&i| in_any(sources, verts[i as usize])).collect();
        let is_target: Vec<bool> = verts.iter().map(|&v| in_any(targets, v)).collect();
        let trivially_true = src.iter().any(|&i| is_target[i as usize]);
        Connection { verts, local, adj_start, adj, sources: src, is_target, trivially_true }
    }

    pub fn num_vertices(&self) -> usize {
        self.verts.len()
    }

    /// Host id of local vertex `i`.
    pub fn host_vertex(&self, i: u32) -> u32 {
        self.verts[i as usize]
    }

    pub fn local_vertex(&self, host_v: u32) -> Option<u32> {
        self.local.get(&host_v).copied()
    }

    pub fn sources(&self) -> &[u32] {
        &self.sources
    }

    pub fn is_target(&self, i: u32) -> bool {
        self.is_target[i as usize]
    }

    /// `(local neighbour, host edge)` pairs.
    #[inline]
    pub fn neighbors(&self, i: u32) -> &[(u32, u32)] {
        &self.adj[self.adj_start[i as usize] as usize..self.adj_start[i as usize + 1] as usize]
    }

    /// Host edges of the domain.
    pub fn edges(&self) -> Vec<u32> {
        let mut out: Vec<u32> = self.adj.iter().map(|&(_, e)| e).collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    pub fn holds(&self, config: &Configuration, scratch: &mut Scratch) -> bool {
        if self.trivially_true {
            return true;
        }
        let stamp = scratch.begin(self.verts.len());
        for &s in &self.sources {
            scratch.mark[s as usize] = stamp;
            scratch.queue.push(s);
        }
        let mut head = 0;
        while head < scratch.queue.len() {
            let x = scratch.queue[head];
            head += 1;
            for &(y, e) in self.neighbors(x) {
                if scratch.mark[y as usize] != stamp && config.is_open(e) {
                    if self.is_target[y as usize] {
                        return true;
                    }
                    scratch.mark[y as usize] = stamp;
                    scratch.queue.push(y);
                }
            }
        }
        false
    }

    /// A shortest open path from a source to a target, in host ids.
    pub fn witness(&self, config: &Configuration) -> Option<CrossingPath> {
        let n = self.verts.len();
        let mut parent: Vec<Option<(u32, u32)>> = vec![None; n];
        let mut seen = vec![false; n];
        let mut queue = std::collections::VecDeque::new();
        for &s in &self.sources {
            seen[s as usize] = true;
            queue.push_back(s);
        }
        let mut hit = None;
        while let Some(x) = queue.pop_front() {
            if self.is_target[x as usize] {
                hit = Some(x);
                break;
            }
            for &(y, e) in self.neighbors(x) {
                if !seen[y as usize] && config.is_open(e) {
                    seen[y as usize] = true;
                    parent[y as usize] = Some((x, e));
                    queue.push_back(y);
                }
            }
        }
        let mut x = hit?;
        let mut vertices = vec![self.verts[x as usize]];
        let mut edges = Vec::new();
        while let Some((p, e)) = parent[x as usize] {
            edges.push(e);
            vertices.push(self.verts[p as usize]);
            x = p;
        }
        vertices.reverse();
        edges.reverse();
        Some(CrossingPath { vertices, edges })
    }
}

/// Reusable search buffers.
#[derive(Clone, Debug, Default)]
pub struct Scratch {
    mark: Vec<u32>,
    stamp: u32,
    queue: Vec<u32>,
}

impl Scratch {
    fn begin(&mut self, n: usize) -> u32 {
        if self.mark.len() < n {
            self.mark.resize(n, 0);
        }
        if self.stamp == u32::MAX {
            self.mark.fill(0);
            self.stamp = 0;
        }
        self.stamp += 1;
        self.queue.clear();
        self.stamp
    }
}

/// An event compiled against a host region.
#[derive(Clone, Debug)]
pub struct CompiledEvent {
    label: String,
    monotonicity: Monotonicity,
    num_edges: usize,
    terms: Vec<(Connection, bool)>,
}

impl CompiledEvent {
    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn monotonicity(&self) -> Monotonicity {
        self.monotonicity
    }

    pub fn num_edges(&self) -> usize {
        self.num_edges
    }

    /// The connection terms with their signs.
    pub fn terms(&self) -> &[(Connection, bool)] {
        &self.terms
    }

    pub fn holds_with(&self, config: &Configuration, scratch: &mut Scratch) -> bool {
        self.terms.iter().all(|(c, positive)| c.holds(config, scratch) == *positive)
    }

    pub fn holds(&self, config: &Configuration) -> bool {
        self.holds_with(config, &mut Scratch::default())
    }

    /// An open path witnessing the first positive term, when it holds.
    pub fn witness(&self, config: &Configuration) -> Option<CrossingPath> {
        self.terms.iter().find(|(_, p)| *p).and_then(|(c, _)| c.witness(config))
    }

    pub fn into_predicate(self) -> EventPredicate {
        let label = self.label.clone();
        let mono = self.monotonicity;
        EventPredicate::new(label, mono, move |c| self.holds(c))
    }
}

/// Whether `config` on `host` realizes `event`.
pub fn is_crossed(config: &Configuration, host: &Region, event: &CrossingEvent) -> Result<bool> {
    if config.len() != host.num_edges() {
        return Err(Error::Mismatch("configuration does not match the host region".into()));
    }
    Ok(event.compile(host)?.holds(config))
}

pub fn bridge_event_aj(n: i32, j: i32) -> Result<CrossingEvent> {
    if n < 1 {
        return Err(Error::InvalidEvent("n must be at least 1".into()));
    }
    Ok(CrossingEvent::bridge_event_aj(n, j))
}

pub fn strip_event_ei(n: i32, i: u32) -> Result<CrossingEvent> {
    if n < 1 {
        return Err(Error::InvalidEvent("n must be at least 1".into()));
    }
    Ok(CrossingEvent::strip_event_ei(n, i))
}

pub fn one_arm(n: i32) -> Result<CrossingEvent> {
    if n < 1 {
        return Err(Error::InvalidEvent("n must be at least 1".into()));
    }
    Ok(CrossingEvent::one_arm(n))
}
