//! Combinatorial growth of `{p,q}` tessellations.
//!
//! The generated region is always a topological disk whose boundary is a
//! simple cycle. For each boundary vertex we track how many of its `q`
//! incident faces are already present. A vertex is completed by gluing new
//! `p`-gons into its open angle, one at a time. A new face attached at a
//! boundary edge is glued along the maximal boundary path around that edge
//! whose inner vertices receive their last face; the rest of the polygon
//! is made of fresh vertices. When only one edge is missing (always the
//! case for the closing triangle when `p = 3`) it joins two existing
//! boundary vertices directly.
//!
//! Vertices are completed in creation order. Once every vertex within
//! distance `shells` of the root is interior, the ball is cut out and
//! re-indexed breadth-first.

use std::collections::VecDeque;

use super::{Lattice, LatticeKind};
use crate::error::{Error, Result};

const NONE: u32 = u32::MAX;

struct Growth {
    p: usize,
    q: usize,
    cap: usize,
    adj: Vec<Vec<u32>>,
    faces: Vec<u32>,
    next: Vec<u32>,
    prev: Vec<u32>,
}

impl Growth {
    /// Starts from a single `p`-gon whose vertex 0 is the root.
    fn new(p: usize, q: usize, cap: usize) -> Self {
        let mut g = Growth {
            p,
            q,
            cap,
            adj: vec![Vec::new(); p],
            faces: vec![1; p],
            next: vec![NONE; p],
            prev: vec![NONE; p],
        };
        for i in 0..p {
            let j = (i + 1) % p;
            g.link(i as u32, j as u32);
            g.next[i] = j as u32;
            g.prev[j] = i as u32;
        }
        g
    }

    fn link(&mut self, a: u32, b: u32) {
        self.adj[a as usize].push(b);
        self.adj[b as usize].push(a);
    }

    fn fresh(&mut self) -> Result<u32> {
        if self.adj.len() >= self.cap {
            return Err(Error::CapExceeded {
                count: self.adj.len() as u128 + 1,
                cap: self.cap,
            });
        }
        self.adj.push(Vec::new());
        self.faces.push(0);
        self.next.push(NONE);
        self.prev.push(NONE);
        Ok((self.adj.len() - 1) as u32)
    }

    fn interior(&self, v: u32) -> bool {
        self.faces[v as usize] as usize == self.q
    }

    fn saturates(&self, v: u32) -> bool {
        self.faces[v as usize] as usize + 1 == self.q
    }

    /// Glues one face into the open angle at boundary vertex `v`, adjacent
    /// to the boundary edge `(v, next(v))`.
    fn add_face_at(&mut self, v: u32) -> Result<()> {
        let closed = || Error::Lattice("tessellation growth closed up; (p,q) is not hyperbolic".into());
        let mut start = v;
        let mut end = self.next[v as usize];
        let mut len = 1usize;
        while self.saturates(end) {
            end = self.next[end as usize];
            len += 1;
            if end == start || len >= self.p {
                return Err(closed());
            }
        }
        while self.saturates(start) {
            start = self.prev[start as usize];
            len += 1;
            if start == end || len >= self.p {
                return Err(closed());
            }
        }
        let missing = self.p - len;
        // inner path vertices become interior
        let mut x = self.next[start as usize];
        while x != end {
            let after = self.next[x as usize];
            self.faces[x as usize] += 1;
            debug_assert!(self.interior(x));
            self.next[x as usize] = NONE;
            self.prev[x as usize] = NONE;
            x = after;
        }
        self.faces[start as usize] += 1;
        self.faces[end as usize] += 1;
        if missing == 1 {
            if self.adj[start as usize].contains(&end) {
                return Err(Error::Lattice(format!(
                    "tessellation growth would double edge {start}-{end}"
                )));
            }
            self.link(start, end);
            self.next[start as usize] = end;
            self.prev[end as usize] = start;
            return Ok(());
        }
        let mut last = start;
        for _ in 0..missing - 1 {
            let m = self.fresh()?;
            self.faces[m as usize] = 1;
            self.link(last, m);
            self.next[last as usize] = m;
            self.prev[m as usize] = last;
            last = m;
        }
        self.link(last, end);
        self.next[last as usize] = end;
        self.prev[end as usize] = last;
        Ok(())
    }

    fn complete(&mut self, v: u32) -> Result<()> {
        while !self.interior(v) {
            self.add_face_at(v)?;
        }
        Ok(())
    }

    /// Distances from the root over the current region, and the largest
    /// radius `r` such that every vertex at distance `<= r` is interior.
    fn interior_radius(&self) -> (Vec<u32>, Option<u32>) {
        let mut dist = vec![NONE; self.adj.len()];
        dist[0] = 0;
        let mut queue = VecDeque::from([0u32]);
        let mut first_open = NONE;
        while let Some(v) = queue.pop_front() {
            let d = dist[v as usize];
            if !self.interior(v) && first_open == NONE {
                first_open = d;
            }
            for &w in &self.adj[v as usize] {
                if dist[w as usize] == NONE {
                    dist[w as usize] = d + 1;
                    queue.push_back(w);
                }
            }
        }
        // BFS visits in nondecreasing distance, so every vertex closer than
        // the first open one is interior.
        (dist, first_open.checked_sub(1))
    }
}

pub fn build_hyperbolic_with_cap(p: u32, q: u32, shells: u32, cap: usize) -> Result<Lattice> {
    if p < 3 || q < 3 {
        return Err(Error::Lattice(format!("{{{p},{q}}} needs p, q >= 3")));
    }
    if (p as u64 - 2) * (q as u64 - 2) <= 4 {
        let regime = if (p - 2) * (q - 2) == 4 { "Euclidean" } else { "spherical" };
        return Err(Error::Lattice(format!(
            "{{{p},{q}}} is {regime}; hyperbolic tessellations need (p-2)(q-2) > 4"
        )));
    }
    let kind = LatticeKind::Hyperbolic { p, q, shells };
    let self_loops = q.is_multiple_of(2);
    if shells == 0 {
        let edges = vec![if self_loops { vec![0] } else { Vec::new() }];
        return Lattice::from_parts(kind, edges, vec![Some(0)], vec![true]);
    }

    let mut g = Growth::new(p as usize, q as usize, cap);
    let mut processed = 0usize;
    let dist = loop {
        // complete one generation: every vertex that exists right now
        let generation_end = g.adj.len();
        while processed < generation_end {
            g.complete(processed as u32)?;
            processed += 1;
        }
        let (dist, radius) = g.interior_radius();
        if radius.is_some_and(|r| r >= shells) {
            break dist;
        }
    };

    // breadth-first re-index of the ball, neighbors visited by creation order
    let mut order: Vec<u32> = (0..g.adj.len() as u32)
        .filter(|&v| dist[v as usize] <= shells)
        .collect();
    order.sort_by_key(|&v| dist[v as usize]);
    let mut bfs = Vec::with_capacity(order.len());
    let mut local = vec![NONE; g.adj.len()];
    local[0] = 0;
    bfs.push(0u32);
    let mut head = 0;
    while head < bfs.len() {
        let v = bfs[head] as usize;
        head += 1;
        let mut nbrs = g.adj[v].clone();
        nbrs.sort_unstable();
        for w in nbrs {
            if local[w as usize] == NONE && dist[w as usize] <= shells {
                local[w as usize] = bfs.len() as u32;
                bfs.push(w);
            }
        }
    }
    debug_assert_eq!(bfs.len(), order.len());
    if bfs.len() > cap {
        return Err(Error::CapExceeded {
            count: bfs.len() as u128,
            cap,
        });
    }

    let mut neighbors = Vec::with_capacity(bfs.len());
    let mut shell = Vec::with_capacity(bfs.len());
    let mut boundary = Vec::with_capacity(bfs.len());
    for &v in &bfs {
        let d = dist[v as usize];
        neighbors.push(
            g.adj[v as usize]
                .iter()
                .filter_map(|&w| match local[w as usize] {
                    NONE => None,
                    i => Some(i),
                })
                .collect(),
        );
        shell.push(Some(d));
        boundary.push(d == shells);
    }
    Lattice::from_undirected(kind, neighbors, self_loops, shell, boundary)
}
