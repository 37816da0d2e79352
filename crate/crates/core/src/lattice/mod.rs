//! Finite lattices standing in for infinite ones.
//!
//! A [`Lattice`] is a directed graph stored in CSR form. Undirected lattices
//! store each edge in both directions; a vertex whose nominal degree is even
//! carries a self-loop so that full majority voting always has an odd number
//! of votes. Out-edges are listed in argument order: self-loop first (if
//! any), then neighbors by ascending index. Toom lattices keep their fixed
//! `[self, north, east]` order.
//!
//! Truncated lattices (balls of radius R) flag every vertex whose
//! neighborhood was cut as `boundary`.

mod hyperbolic;
mod text;

use std::collections::VecDeque;
use std::fmt;

use crate::error::{Error, Result};

pub use hyperbolic::build_hyperbolic_with_cap;

/// Default ceiling on generated vertex counts.
pub const DEFAULT_VERTEX_CAP: usize = 10_000_000;

/// Periodic Euclidean tilings, named by their `{p,q}` symbol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Tiling {
    Square44,
    Tri36,
    Hex63,
}

impl Tiling {
    pub fn pq(self) -> (u32, u32) {
        match self {
            Tiling::Square44 => (4, 4),
            Tiling::Tri36 => (3, 6),
            Tiling::Hex63 => (6, 3),
        }
    }

    pub fn from_pq(p: u32, q: u32) -> Option<Self> {
        match (p, q) {
            (4, 4) => Some(Tiling::Square44),
            (3, 6) => Some(Tiling::Tri36),
            (6, 3) => Some(Tiling::Hex63),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Tiling::Square44 => "square44",
            Tiling::Tri36 => "tri36",
            Tiling::Hex63 => "hex63",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "square44" => Some(Tiling::Square44),
            "tri36" => Some(Tiling::Tri36),
            "hex63" => Some(Tiling::Hex63),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum LatticeKind {
    Tree { q: u32, depth: u32 },
    Hyperbolic { p: u32, q: u32, shells: u32 },
    Euclidean { tiling: Tiling, width: u32, height: u32 },
    Toom { width: u32, height: u32 },
    /// Anything else: light cones of non-canonical roots, hand-written files.
    Custom,
}

impl LatticeKind {
    /// Whether every edge is stored in both directions.
    pub fn is_undirected(&self) -> bool {
        !matches!(self, LatticeKind::Toom { .. } | LatticeKind::Custom)
    }
}

impl fmt::Display for LatticeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LatticeKind::Tree { q, depth } => write!(f, "tree {q} {depth}"),
            LatticeKind::Hyperbolic { p, q, shells } => write!(f, "hyperbolic {p} {q} {shells}"),
            LatticeKind::Euclidean {
                tiling,
                width,
                height,
            } => {
                let (p, q) = tiling.pq();
                write!(f, "euclidean {p} {q} {width} {height}")
            }
            LatticeKind::Toom { width, height } => write!(f, "toom {width} {height}"),
            LatticeKind::Custom => write!(f, "custom"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lattice {
    kind: LatticeKind,
    offsets: Vec<usize>,
    targets: Vec<u32>,
    shell: Vec<Option<u32>>,
    boundary: Vec<bool>,
}

impl Lattice {
    /// Assembles a lattice from per-vertex out-edge lists, checking that
    /// every endpoint is in range.
    pub fn from_parts(
        kind: LatticeKind,
        out_edges: Vec<Vec<u32>>,
        shell: Vec<Option<u32>>,
        boundary: Vec<bool>,
    ) -> Result<Self> {
        let n = out_edges.len();
        if shell.len() != n || boundary.len() != n {
            return Err(Error::Lattice(format!(
                "per-vertex arrays disagree: {} edge lists, {} shells, {} boundary flags",
                n,
                shell.len(),
                boundary.len()
            )));
        }
        let mut offsets = Vec::with_capacity(n + 1);
        let mut targets = Vec::with_capacity(out_edges.iter().map(Vec::len).sum());
        offsets.push(0);
        for (v, edges) in out_edges.into_iter().enumerate() {
            if let Some(&w) = edges.iter().find(|&&w| w as usize >= n) {
                return Err(Error::Lattice(format!(
                    "vertex {v} has out-edge to {w}, but only {n} vertices exist"
                )));
            }
            targets.extend(edges);
            offsets.push(targets.len());
        }
        Ok(Self {
            kind,
            offsets,
            targets,
            shell,
            boundary,
        })
    }

    /// Builds an undirected lattice from neighbor lists (without self-loops).
    /// Lists are sorted and a self-loop is prepended to every vertex when
    /// `self_loops` is set.
    fn from_undirected(
        kind: LatticeKind,
        mut neighbors: Vec<Vec<u32>>,
        self_loops: bool,
        shell: Vec<Option<u32>>,
        boundary: Vec<bool>,
    ) -> Result<Self> {
        for (v, list) in neighbors.iter_mut().enumerate() {
            list.sort_unstable();
            if self_loops {
                list.insert(0, v as u32);
            }
        }
        Self::from_parts(kind, neighbors, shell, boundary)
    }

    pub fn kind(&self) -> &LatticeKind {
        &self.kind
    }

    pub fn vertex_count(&self) -> usize {
        self.boundary.len()
    }

    pub fn edge_count(&self) -> usize {
        self.targets.len()
    }

    #[inline]
    pub fn out_edges(&self, v: usize) -> &[u32] {
        &self.targets[self.offsets[v]..self.offsets[v + 1]]
    }

    pub fn out_degree(&self, v: usize) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    pub fn has_self_loop(&self, v: usize) -> bool {
        self.out_edges(v).contains(&(v as u32))
    }

    /// Out-degree not counting self-loops.
    pub fn undirected_degree(&self, v: usize) -> usize {
        self.out_edges(v).iter().filter(|&&w| w as usize != v).count()
    }

    pub fn shell(&self, v: usize) -> Option<u32> {
        self.shell[v]
    }

    pub fn shells(&self) -> &[Option<u32>] {
        &self.shell
    }

    pub fn is_boundary(&self, v: usize) -> bool {
        self.boundary[v]
    }

    pub fn boundary_flags(&self) -> &[bool] {
        &self.boundary
    }

    /// Counts of vertices per shell, when shells are set for every vertex.
    pub fn shell_sizes(&self) -> Option<Vec<usize>> {
        let mut sizes = Vec::new();
        for s in &self.shell {
            let s = (*s)? as usize;
            if sizes.len() <= s {
                sizes.resize(s + 1, 0);
            }
            sizes[s] += 1;
        }
        Some(sizes)
    }

    pub fn to_text(&self) -> String {
        text::write(self)
    }

    pub fn from_text(s: &str) -> Result<Self> {
        text::parse(s)
    }

    /// Git-style blob hash (SHA-1 over `blob <len>\0<text>`) of the text form.
    pub fn content_hash(&self) -> String {
        use sha1::{Digest, Sha1};
        let text = self.to_text();
        let mut h = Sha1::new();
        h.update(format!("blob {}\0", text.len()).as_bytes());
        h.update(text.as_bytes());
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Checks the structural invariants that hold for every lattice kind
    /// and returns a list of violations (empty when consistent).
    pub fn check_invariants(&self) -> Vec<String> {
        let mut problems = Vec::new();
        let n = self.vertex_count();
        if self.kind.is_undirected() {
            let mut pairs: Vec<(u32, u32)> = Vec::with_capacity(self.edge_count());
            for v in 0..n {
                for &w in self.out_edges(v) {
                    if w as usize != v {
                        pairs.push((v as u32, w));
                    }
                }
            }
            pairs.sort_unstable();
            for &(v, w) in &pairs {
                if pairs.binary_search(&(w, v)).is_err() {
                    problems.push(format!("edge {v}->{w} has no reverse"));
                }
            }
            for v in 0..n {
                for &w in self.out_edges(v) {
                    if let (Some(a), Some(b)) = (self.shell[v], self.shell[w as usize]) {
                        if a.abs_diff(b) > 1 {
                            problems.push(format!("shells differ by more than 1 on edge {v}-{w}"));
                        }
                    }
                }
            }
        }
        let nominal = match self.kind {
            LatticeKind::Tree { q, .. } | LatticeKind::Hyperbolic { q, .. } => Some(q as usize),
            LatticeKind::Euclidean { tiling, .. } => Some(tiling.pq().1 as usize),
            _ => None,
        };
        if let Some(q) = nominal {
            for v in 0..n {
                if self.has_self_loop(v) != (q % 2 == 0) {
                    problems.push(format!("vertex {v}: self-loop does not match degree parity"));
                }
                if !self.boundary[v] && self.undirected_degree(v) != q {
                    problems.push(format!(
                        "vertex {v}: degree {} but nominal degree is {q}",
                        self.undirected_degree(v)
                    ));
                }
            }
        }
        problems
    }
}

fn check_cap(count: u128, cap: usize) -> Result<()> {
    if count > cap as u128 {
        Err(Error::CapExceeded { count, cap })
    } else {
        Ok(())
    }
}

/// Radius-`depth` ball of the `q`-regular tree, rooted at vertex 0.
pub fn build_tree(q: u32, depth: u32) -> Result<Lattice> {
    build_tree_with_cap(q, depth, DEFAULT_VERTEX_CAP)
}

pub fn build_tree_with_cap(q: u32, depth: u32, cap: usize) -> Result<Lattice> {
    if q < 3 {
        return Err(Error::Lattice(format!("tree degree must be at least 3, got {q}")));
    }
    // 1 + q + q(q-1) + ... + q(q-1)^(depth-1)
    let mut total: u128 = 1;
    let mut layer: u128 = 1;
    for s in 0..depth {
        layer = layer.saturating_mul(if s == 0 { q as u128 } else { (q - 1) as u128 });
        total = total.saturating_add(layer);
        check_cap(total, cap)?;
    }
    let n = total as usize;
    let mut neighbors: Vec<Vec<u32>> = Vec::with_capacity(n);
    let mut shell = Vec::with_capacity(n);
    let mut boundary = Vec::with_capacity(n);
    neighbors.push(Vec::new());
    shell.push(Some(0));
    boundary.push(depth == 0);
    let mut frontier = 0..1usize;
    for s in 1..=depth {
        let start = neighbors.len();
        for parent in frontier.clone() {
            let children = if s == 1 { q } else { q - 1 };
            for _ in 0..children {
                let child = neighbors.len() as u32;
                neighbors[parent].push(child);
                neighbors.push(vec![parent as u32]);
                shell.push(Some(s));
                boundary.push(s == depth);
            }
        }
        frontier = start..neighbors.len();
    }
    Lattice::from_undirected(
        LatticeKind::Tree { q, depth },
        neighbors,
        q.is_multiple_of(2),
        shell,
        boundary,
    )
}

/// Ball of radius `shells` in the hyperbolic tessellation `{p,q}`.
pub fn build_hyperbolic(p: u32, q: u32, shells: u32) -> Result<Lattice> {
    build_hyperbolic_with_cap(p, q, shells, DEFAULT_VERTEX_CAP)
}

/// Periodic Euclidean tiling on a `width x height` torus.
pub fn build_euclidean_torus(tiling: Tiling, width: u32, height: u32) -> Result<Lattice> {
    if width < 4 || height < 4 {
        return Err(Error::Lattice(format!(
            "torus dimensions must be at least 4, got {width}x{height}"
        )));
    }
    if tiling == Tiling::Hex63 && (!width.is_multiple_of(2) || !height.is_multiple_of(2)) {
        return Err(Error::Lattice(format!(
            "hex63 torus needs even width and height, got {width}x{height}"
        )));
    }
    check_cap(width as u128 * height as u128, DEFAULT_VERTEX_CAP)?;
    let (w, h) = (width as i64, height as i64);
    let idx = |x: i64, y: i64| (y.rem_euclid(h) * w + x.rem_euclid(w)) as u32;
    let mut neighbors = Vec::with_capacity((w * h) as usize);
    for y in 0..h {
        for x in 0..w {
            let offsets: Vec<(i64, i64)> = match tiling {
                Tiling::Square44 => vec![(1, 0), (-1, 0), (0, 1), (0, -1)],
                Tiling::Tri36 => vec![(1, 0), (-1, 0), (0, 1), (0, -1), (1, -1), (-1, 1)],
                // brick-wall embedding of the honeycomb
                Tiling::Hex63 => {
                    let vertical = if (x + y) % 2 == 0 { 1 } else { -1 };
                    vec![(1, 0), (-1, 0), (0, vertical)]
                }
            };
            neighbors.push(offsets.into_iter().map(|(dx, dy)| idx(x + dx, y + dy)).collect());
        }
    }
    let n = neighbors.len();
    Lattice::from_undirected(
        LatticeKind::Euclidean {
            tiling,
            width,
            height,
        },
        neighbors,
        tiling.pq().1.is_multiple_of(2),
        vec![None; n],
        vec![false; n],
    )
}

/// Toom's lattice: a directed torus where each cell reads itself, its
/// northern neighbor and its eastern neighbor.
pub fn build_toom(width: u32, height: u32) -> Result<Lattice> {
    if width < 2 || height < 2 {
        return Err(Error::Lattice(format!(
            "toom lattice needs width, height >= 2, got {width}x{height}"
        )));
    }
    check_cap(width as u128 * height as u128, DEFAULT_VERTEX_CAP)?;
    let (w, h) = (width, height);
    let mut edges = Vec::with_capacity((w * h) as usize);
    for y in 0..h {
        for x in 0..w {
            let me = y * w + x;
            let north = ((y + 1) % h) * w + x;
            let east = y * w + (x + 1) % w;
            edges.push(vec![me, north, east]);
        }
    }
    let n = edges.len();
    Lattice::from_parts(
        LatticeKind::Toom { width, height },
        edges,
        vec![None; n],
        vec![false; n],
    )
}

/// Breadth-first distances along out-edges (self-loops ignored).
fn distances_from(lattice: &Lattice, root: usize) -> Vec<Option<u32>> {
    let mut dist = vec![None; lattice.vertex_count()];
    dist[root] = Some(0);
    let mut queue = VecDeque::from([root]);
    while let Some(v) = queue.pop_front() {
        let d = dist[v].unwrap();
        for &w in lattice.out_edges(v) {
            let w = w as usize;
            if dist[w].is_none() {
                dist[w] = Some(d + 1);
                queue.push_back(w);
            }
        }
    }
    dist
}

fn check_root(lattice: &Lattice, root: usize) -> Result<()> {
    if root >= lattice.vertex_count() {
        Err(Error::Lattice(format!(
            "root {root} out of range ({} vertices)",
            lattice.vertex_count()
        )))
    } else {
        Ok(())
    }
}

/// Returns a copy of `lattice` with `shell(v)` set to the out-edge distance
/// from `root`. Fails if some vertex cannot be reached.
pub fn classify_shells(lattice: &Lattice, root: usize) -> Result<Lattice> {
    check_root(lattice, root)?;
    let dist = distances_from(lattice, root);
    let missing = dist.iter().filter(|d| d.is_none()).count();
    if missing > 0 {
        return Err(Error::Unreachable {
            root,
            count: missing,
        });
    }
    let mut out = lattice.clone();
    out.shell = dist;
    Ok(out)
}

/// The radius-`t` ball around a root, with the map back to source indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LightCone {
    pub lattice: Lattice,
    /// `origin[i]` is the source index of cone vertex `i`.
    pub origin: Vec<u32>,
}

/// Induced sublattice on `{v : dist(root, v) <= t}`.
///
/// The state of `root` at time `t` depends only on these cells. Vertices
/// are ordered by (shell, source index), so the root is 0 and shells are
/// contiguous. A vertex is flagged boundary if it was boundary in the
/// source or lost an out-edge. Fails if a vertex closer than `t` is a
/// truncation boundary in the source, since then the cone is not exact.
pub fn light_cone(lattice: &Lattice, root: usize, t: u32) -> Result<LightCone> {
    check_root(lattice, root)?;
    let dist = distances_from(lattice, root);
    if let Some(v) = (0..lattice.vertex_count())
        .find(|&v| matches!(dist[v], Some(d) if d < t) && lattice.is_boundary(v))
    {
        return Err(Error::TruncationTooSmall(format!(
            "vertex {v} at distance {} from root {root} is a truncation boundary; horizon {t} needs a larger lattice",
            dist[v].unwrap()
        )));
    }
    let mut kept: Vec<u32> = (0..lattice.vertex_count() as u32)
        .filter(|&v| matches!(dist[v as usize], Some(d) if d <= t))
        .collect();
    kept.sort_by_key(|&v| (dist[v as usize].unwrap(), v));
    let mut local = vec![u32::MAX; lattice.vertex_count()];
    for (i, &v) in kept.iter().enumerate() {
        local[v as usize] = i as u32;
    }
    let mut edges = Vec::with_capacity(kept.len());
    let mut boundary = Vec::with_capacity(kept.len());
    let mut shell = Vec::with_capacity(kept.len());
    for &v in &kept {
        let src = lattice.out_edges(v as usize);
        let mapped: Vec<u32> = src
            .iter()
            .filter_map(|&w| match local[w as usize] {
                u32::MAX => None,
                i => Some(i),
            })
            .collect();
        boundary.push(lattice.is_boundary(v as usize) || mapped.len() < src.len());
        shell.push(dist[v as usize]);
        edges.push(mapped);
    }
    let kind = match *lattice.kind() {
        LatticeKind::Tree { q, depth } if root == 0 && t <= depth => LatticeKind::Tree { q, depth: t },
        LatticeKind::Hyperbolic { p, q, shells } if root == 0 && t <= shells => {
            LatticeKind::Hyperbolic { p, q, shells: t }
        }
        LatticeKind::Euclidean { .. } | LatticeKind::Toom { .. }
            if kept.len() == lattice.vertex_count() && kept.iter().enumerate().all(|(i, &v)| i == v as usize) =>
        {
            lattice.kind().clone()
        }
        _ => LatticeKind::Custom,
    };
    // Sorting by (shell, index) can permute neighbor lists out of ascending
    // order for undirected kinds; restore the canonical argument order.
    if kind.is_undirected() {
        for (i, list) in edges.iter_mut().enumerate() {
            let has_loop = list.contains(&(i as u32));
            list.retain(|&w| w != i as u32);
            list.sort_unstable();
            if has_loop {
                list.insert(0, i as u32);
            }
        }
    }
    Ok(LightCone {
        lattice: Lattice::from_parts(kind, edges, shell, boundary)?,
        origin: kept,
    })
}
