//! Reduction of a majority automaton to one on a directed tree.
//!
//! Working outward from a root shell by shell, every edge back toward the
//! root, every edge within a shell and every self-loop is deleted, and a
//! child already claimed by an earlier vertex of the same shell is dropped.
//! Each deleted argument is replaced by the constant error value, which is
//! accounted for by lowering the vertex's threshold.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::lattice::{classify_shells, Lattice, LatticeKind};

/// Why each out-edge of a vertex was deleted.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Deletions {
    pub parent: u32,
    pub sibling: u32,
    pub child: u32,
    pub self_loop: u32,
}

impl Deletions {
    pub fn total(&self) -> u32 {
        self.parent + self.sibling + self.child + self.self_loop
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeRuleSet {
    /// Retained edges, directed away from the root. Shells are distances
    /// from the root; boundary flags are those of the source.
    pub tree: Lattice,
    pub root: usize,
    /// Source out-degree, self-loop included.
    pub source_degree: Vec<u32>,
    pub out_degree: Vec<u32>,
    /// Number of retained children that must be in error to force an error.
    pub threshold: Vec<u32>,
    pub deletions: Vec<Deletions>,
    /// Largest deletion count over non-boundary vertices.
    pub max_deletions: u32,
    pub source_kind: LatticeKind,
}

impl TreeRuleSet {
    pub fn r(&self, v: usize) -> u32 {
        self.deletions[v].total()
    }

    pub fn vertex_count(&self) -> usize {
        self.tree.vertex_count()
    }

    /// `vertex,shell,r,deleted_parent,deleted_sibling,deleted_child,self_loop`
    pub fn deletion_report_csv(&self) -> String {
        let mut out = String::from("vertex,shell,r,deleted_parent,deleted_sibling,deleted_child,self_loop\n");
        for (v, d) in self.deletions.iter().enumerate() {
            let _ = writeln!(
                out,
                "{v},{},{},{},{},{},{}",
                self.tree.shell(v).unwrap_or(0),
                d.total(),
                d.parent,
                d.sibling,
                d.child,
                d.self_loop
            );
        }
        out
    }
}

/// Majority threshold of a vertex with `source_degree` arguments
/// (self-loop included), less one for each argument held at the error value.
pub fn reduced_threshold(source_degree: u32, r: u32) -> u32 {
    ((source_degree + 2) / 2).saturating_sub(r)
}

pub fn treeify(lattice: &Lattice, root: usize) -> Result<TreeRuleSet> {
    let shelled = classify_shells(lattice, root)?;
    let n = shelled.vertex_count();
    let shell = |v: usize| shelled.shell(v).expect("classified");

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&v| (shell(v), v));

    let mut claimed = vec![false; n];
    claimed[root] = true;
    let mut children = vec![Vec::new(); n];
    let mut deletions = vec![Deletions::default(); n];
    for &v in &order {
        let sv = shell(v);
        let del = &mut deletions[v];
        for &w in shelled.out_edges(v) {
            let w = w as usize;
            let sw = shell(w);
            if w == v {
                del.self_loop += 1;
            } else if sw < sv {
                del.parent += 1;
            } else if sw == sv {
                del.sibling += 1;
            } else if claimed[w] {
                del.child += 1;
            } else {
                debug_assert_eq!(sw, sv + 1);
                claimed[w] = true;
                children[v].push(w as u32);
            }
        }
    }

    let source_degree: Vec<u32> = (0..n).map(|v| shelled.out_degree(v) as u32).collect();
    let out_degree: Vec<u32> = children.iter().map(|c| c.len() as u32).collect();
    let threshold = (0..n)
        .map(|v| reduced_threshold(source_degree[v], deletions[v].total()))
        .collect();
    let max_deletions = (0..n)
        .filter(|&v| !shelled.is_boundary(v))
        .map(|v| deletions[v].total())
        .max()
        .unwrap_or(0);
    let tree = Lattice::from_parts(
        LatticeKind::Custom,
        children,
        shelled.shells().to_vec(),
        shelled.boundary_flags().to_vec(),
    )?;
    Ok(TreeRuleSet {
        tree,
        root,
        source_degree,
        out_degree,
        threshold,
        deletions,
        max_deletions,
        source_kind: lattice.kind().clone(),
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeCheck {
    pub ok: bool,
    pub diagnostics: Vec<String>,
}

/// Checks that the retained edges form a tree rooted at `rules.root` that
/// spans every vertex.
pub fn verify_directed_tree(rules: &TreeRuleSet) -> TreeCheck {
    let tree = &rules.tree;
    let n = tree.vertex_count();
    let mut diagnostics = Vec::new();
    let mut parents = vec![0u32; n];
    for v in 0..n {
        for &w in tree.out_edges(v) {
            parents[w as usize] += 1;
        }
    }
    for v in 0..n {
        let expected = u32::from(v != rules.root);
        if parents[v] > expected {
            diagnostics.push(format!("vertex {v} has {} parents", parents[v]));
        }
    }
    let mut seen = vec![false; n];
    let mut stack = vec![rules.root];
    seen[rules.root] = true;
    while let Some(v) = stack.pop() {
        for &w in tree.out_edges(v) {
            let w = w as usize;
            if seen[w] {
                diagnostics.push(format!("edge {v} -> {w} revisits vertex {w}"));
                continue;
            }
            seen[w] = true;
            stack.push(w);
        }
    }
    for (v, _) in seen.iter().enumerate().filter(|(_, &s)| !s) {
        if parents[v] == 0 {
            diagnostics.push(format!("vertex {v} is not reached from the root"));
        } else {
            diagnostics.push(format!("vertex {v} lies on a cycle unreachable from the root"));
        }
    }
    TreeCheck {
        ok: diagnostics.is_empty(),
        diagnostics,
    }
}

/// Deletion budgets on `{p,q}` tessellations: at most two edges to the
/// previous shell and two within the shell. Dropped children are not
/// budgeted individually; index-order claiming can drop two at one vertex
/// while the total stays within `r`.
pub const PARENT_BUDGET: u32 = 2;
pub const SIBLING_BUDGET: u32 = 2;

/// Non-boundary vertices exceeding a per-kind budget, as messages.
pub fn budget_violations(rules: &TreeRuleSet) -> Vec<String> {
    let mut out = Vec::new();
    for (v, d) in rules.deletions.iter().enumerate() {
        if rules.tree.is_boundary(v) {
            continue;
        }
        for (what, got, cap) in [
            ("parent", d.parent, PARENT_BUDGET),
            ("sibling", d.sibling, SIBLING_BUDGET),
        ] {
            if got > cap {
                out.push(format!("vertex {v}: {got} {what} deletions exceed {cap}"));
            }
        }
    }
    out
}

/// Fails with the violations if any non-boundary vertex exceeds a budget.
pub fn check_budgets(rules: &TreeRuleSet) -> Result<()> {
    let v = budget_violations(rules);
    if v.is_empty() {
        Ok(())
    } else {
        Err(Error::Treeify(v.join("; ")))
    }
}
