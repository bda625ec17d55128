//! Adaptive maps: greedy Latin-square completion seeded with the merges a
//! singular fade state or subspace requires.

use super::coloring::RemovalGraph;
use super::singular::{SingularFadeState, SingularFadeSubspace};
use super::{Arity, NetcodeError, NetworkCodeMap};
use crate::constellation::Constellation;

/// Search nodes allowed when greedy coloring overshoots a small output set.
const BACKTRACK_BUDGET: usize = 1_000_000;

/// Outcome of a greedy completion: the map and how many outputs it uses.
#[derive(Debug, Clone)]
pub struct AdaptiveMap {
    pub map: NetworkCodeMap,
    pub colors: usize,
}

/// Map for single-antenna senders that clusters every witness of `target`.
///
/// The output set is the smallest of `bc_sets` the table can be completed
/// in: by the greedy coloring if it fits, otherwise by a bounded
/// backtracking search. States `0` and `∞` cannot be removed, so for them
/// the completion runs without merges.
pub fn build_adaptive_map_siso(
    c: &Constellation,
    target: &SingularFadeState,
    bc_sets: &[Constellation],
) -> Result<AdaptiveMap, NetcodeError> {
    let m = c.len();
    let merges: Vec<(usize, usize)> = if target.is_removable() {
        target
            .witnesses
            .iter()
            .map(|&((a, b), (a2, b2))| (a * m + b, a2 * m + b2))
            .collect()
    } else {
        Vec::new()
    };
    let mut graph = RemovalGraph::new(m, merges)?;
    let greedy = graph.greedy_color(usize::MAX)?;
    let mut sets: Vec<&Constellation> = bc_sets.iter().collect();
    sets.sort_by_key(|s| s.len());
    for out in sets {
        if out.len() < m {
            continue;
        }
        if greedy <= out.len() {
            graph.greedy_color(usize::MAX)?;
        } else if !graph.backtrack_color(out.len(), BACKTRACK_BUDGET) {
            continue;
        }
        let map = NetworkCodeMap::new(Arity::Pair, m, graph.cell_colors(), out.clone())?;
        let colors = map.distinct_outputs();
        return Ok(AdaptiveMap { map, colors });
    }
    Err(NetcodeError::MapConstruction {
        required_colors: greedy,
    })
}

/// Quadruple map over the `M² x M²` tuple table removing `target`. Output
/// `k` is sent as the symbol pair `(k / n, k % n)` of `bc_set`.
pub fn build_adaptive_map_scheme2(
    c: &Constellation,
    target: &SingularFadeSubspace,
    bc_set: &Constellation,
) -> Result<AdaptiveMap, NetcodeError> {
    let m = c.len();
    let side = m * m;
    let merges = target
        .witnesses
        .iter()
        .map(|&(u, v)| (u as usize, v as usize));
    let mut graph = RemovalGraph::new(side, merges)?;
    let colors = graph.greedy_color(bc_set.len() * bc_set.len())?;
    let map = NetworkCodeMap::new(Arity::Quadruple, m, graph.cell_colors(), bc_set.clone())?;
    Ok(AdaptiveMap { map, colors })
}

/// Every witness pair of a single-antenna state lands on one output.
pub fn removes_state(map: &NetworkCodeMap, target: &SingularFadeState) -> bool {
    target
        .witnesses
        .iter()
        .all(|&((a, b), (a2, b2))| map.get(a, b) == map.get(a2, b2))
}

/// Every witness cell pair of a subspace lands on one output.
pub fn removes_subspace(map: &NetworkCodeMap, target: &SingularFadeSubspace) -> bool {
    let cells = map.cells();
    target
        .witnesses
        .iter()
        .all(|&(u, v)| cells[u as usize] == cells[v as usize])
}
