//! Singularity-removal graph and its greedy coloring.
//!
//! Cells of the `side x side` Latin-square table that must share an output
//! are merged into one vertex. Two vertices conflict when any of their cells
//! share a row or a column. A proper coloring is then a table satisfying the
//! exclusive law that also honours every merge.

use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConflictReason {
    /// A merge forces two cells of one row or column together.
    MergedLine,
    /// The vertex could not be colored within the available outputs.
    OutOfColors {
        capacity: usize,
        neighbor_colors: Vec<usize>,
    },
}

/// Evidence for why a completion failed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConflictCertificate {
    pub cells: Vec<usize>,
    pub reason: ConflictReason,
}

impl fmt::Display for ConflictCertificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.reason {
            ConflictReason::MergedLine => {
                write!(
                    f,
                    "merge constraints place cells {:?} on one row or column",
                    self.cells
                )
            }
            ConflictReason::OutOfColors {
                capacity,
                neighbor_colors,
            } => write!(
                f,
                "vertex with cells {:?} sees colors {:?}; only {capacity} outputs available",
                self.cells, neighbor_colors
            ),
        }
    }
}

impl std::error::Error for ConflictCertificate {}

#[derive(Debug, Clone)]
pub struct RemovalGraph {
    side: usize,
    cluster_of: Vec<usize>,
    clusters: Vec<Vec<usize>>,
    adjacency: Vec<Vec<usize>>,
    coloring: Vec<Option<usize>>,
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

impl RemovalGraph {
    /// Builds the graph for a `side x side` table with cell merges.
    pub fn new(
        side: usize,
        merges: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self, ConflictCertificate> {
        let n = side * side;
        let mut parent: Vec<usize> = (0..n).collect();
        for (u, v) in merges {
            let (ru, rv) = (find(&mut parent, u), find(&mut parent, v));
            if ru != rv {
                // keep the smaller root so clusters are labeled by their first cell
                let (lo, hi) = if ru < rv { (ru, rv) } else { (rv, ru) };
                parent[hi] = lo;
            }
        }
        let mut cluster_of = vec![usize::MAX; n];
        let mut clusters: Vec<Vec<usize>> = Vec::new();
        let mut root_id = vec![usize::MAX; n];
        for cell in 0..n {
            let r = find(&mut parent, cell);
            if root_id[r] == usize::MAX {
                root_id[r] = clusters.len();
                clusters.push(Vec::new());
            }
            cluster_of[cell] = root_id[r];
            clusters[root_id[r]].push(cell);
        }

        // a cluster may hold at most one cell per row and per column
        let mut row_owner = vec![usize::MAX; clusters.len() * side];
        let mut col_owner = vec![usize::MAX; clusters.len() * side];
        for cell in 0..n {
            let (r, c) = (cell / side, cell % side);
            let v = cluster_of[cell];
            for (slot, key) in [(&mut row_owner, r), (&mut col_owner, c)] {
                let idx = v * side + key;
                if slot[idx] != usize::MAX {
                    return Err(ConflictCertificate {
                        cells: vec![slot[idx], cell],
                        reason: ConflictReason::MergedLine,
                    });
                }
                slot[idx] = cell;
            }
        }

        let nv = clusters.len();
        let mut adj = vec![false; nv * nv];
        for line in 0..side {
            let row: Vec<usize> = (0..side).map(|c| cluster_of[line * side + c]).collect();
            let col: Vec<usize> = (0..side).map(|r| cluster_of[r * side + line]).collect();
            for members in [row, col] {
                for (i, &a) in members.iter().enumerate() {
                    for &b in &members[i + 1..] {
                        adj[a * nv + b] = true;
                        adj[b * nv + a] = true;
                    }
                }
            }
        }
        let adjacency = (0..nv)
            .map(|v| (0..nv).filter(|&u| adj[v * nv + u]).collect())
            .collect();
        Ok(Self {
            side,
            cluster_of,
            clusters,
            adjacency,
            coloring: vec![None; nv],
        })
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn vertex_count(&self) -> usize {
        self.clusters.len()
    }

    pub fn cells_of(&self, v: usize) -> &[usize] {
        &self.clusters[v]
    }

    pub fn vertex_of(&self, cell: usize) -> usize {
        self.cluster_of[cell]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    /// Vertices by descending degree; ties go to the vertex whose first cell
    /// comes first in row-major order.
    pub fn greedy_order(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.vertex_count()).collect();
        order.sort_by_key(|&v| (std::cmp::Reverse(self.degree(v)), self.clusters[v][0]));
        order
    }

    /// Highest-degree-first greedy coloring with lowest feasible color.
    /// Fails if a vertex would need a color `>= capacity`.
    pub fn greedy_color(&mut self, capacity: usize) -> Result<usize, ConflictCertificate> {
        self.coloring.fill(None);
        let mut used = 0;
        let mut taken = Vec::new();
        for v in self.greedy_order() {
            taken.clear();
            taken.resize(self.vertex_count() + 1, false);
            for &u in &self.adjacency[v] {
                if let Some(c) = self.coloring[u] {
                    taken[c] = true;
                }
            }
            let color = taken
                .iter()
                .position(|&t| !t)
                .expect("a free color always exists");
            if color >= capacity {
                let mut neighbor_colors: Vec<usize> = self.adjacency[v]
                    .iter()
                    .filter_map(|&u| self.coloring[u])
                    .collect();
                neighbor_colors.sort_unstable();
                neighbor_colors.dedup();
                return Err(ConflictCertificate {
                    cells: self.clusters[v].clone(),
                    reason: ConflictReason::OutOfColors {
                        capacity,
                        neighbor_colors,
                    },
                });
            }
            self.coloring[v] = Some(color);
            used = used.max(color + 1);
        }
        Ok(used)
    }

    /// Proper coloring with at most `capacity` colors by depth-first search
    /// in greedy order, trying lower colors first. Gives up after `budget`
    /// search nodes; returns whether a coloring was found.
    pub fn backtrack_color(&mut self, capacity: usize, budget: usize) -> bool {
        fn go(
            g: &mut RemovalGraph,
            order: &[usize],
            k: usize,
            capacity: usize,
            budget: &mut usize,
        ) -> bool {
            let Some(&v) = order.get(k) else { return true };
            for color in 0..capacity {
                if *budget == 0 {
                    return false;
                }
                *budget -= 1;
                if g.adjacency[v].iter().any(|&u| g.coloring[u] == Some(color)) {
                    continue;
                }
                g.coloring[v] = Some(color);
                if go(g, order, k + 1, capacity, budget) {
                    return true;
                }
                g.coloring[v] = None;
            }
            false
        }
        self.coloring.fill(None);
        let order = self.greedy_order();
        let mut budget = budget;
        let found = go(self, &order, 0, capacity, &mut budget);
        if !found {
            self.coloring.fill(None);
        }
        found
    }

    pub fn color_of(&self, v: usize) -> Option<usize> {
        self.coloring[v]
    }

    /// Table cells in row-major order, `None` where uncolored.
    pub fn cell_colors(&self) -> Vec<Option<u16>> {
        self.cluster_of
            .iter()
            .map(|&v| self.coloring[v].map(|c| c as u16))
            .collect()
    }

    pub fn is_proper(&self) -> bool {
        (0..self.vertex_count()).all(|v| {
            self.coloring[v].is_some()
                && self.adjacency[v]
                    .iter()
                    .all(|&u| self.coloring[u] != self.coloring[v])
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unconstrained_square_needs_side_colors() {
        for side in [2, 4, 5, 16] {
            let mut g = RemovalGraph::new(side, []).unwrap();
            assert_eq!(g.vertex_count(), side * side);
            assert!(g.degree(0) == 2 * (side - 1));
            let used = g.greedy_color(usize::MAX).unwrap();
            assert!(used >= side);
            assert!(g.is_proper());
        }
    }

    #[test]
    fn merged_line_is_reported() {
        let err = RemovalGraph::new(4, [(0, 5), (5, 1)]).unwrap_err();
        assert_eq!(err.reason, ConflictReason::MergedLine);
        assert_eq!(err.cells, vec![0, 1]);
    }

    #[test]
    fn merges_share_a_color() {
        let mut g = RemovalGraph::new(4, [(0, 5), (5, 10), (10, 15)]).unwrap();
        g.greedy_color(usize::MAX).unwrap();
        let colors = g.cell_colors();
        assert_eq!(colors[0], colors[15]);
        assert!(g.is_proper());
    }

    #[test]
    fn backtracking_finds_latin_square() {
        let mut g = RemovalGraph::new(5, []).unwrap();
        assert!(g.backtrack_color(5, 1_000_000));
        assert!(g.is_proper());
        assert!(!g.backtrack_color(4, 1_000_000));
    }

    #[test]
    fn capacity_exhaustion_gives_certificate() {
        let mut g = RemovalGraph::new(3, []).unwrap();
        let err = g.greedy_color(2).unwrap_err();
        assert!(matches!(
            err.reason,
            ConflictReason::OutOfColors { capacity: 2, .. }
        ));
    }
}
