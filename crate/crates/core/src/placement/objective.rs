//! Objective terms and the retrieval simulation behind them.

use std::collections::BTreeMap;

use crate::model::{ContainerId, GatePos, Segment, StackPos, YardState};

use super::{ObjectiveWeights, PickupOrder};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct StackInfo {
    pub pos: StackPos,
    pub segment: Segment,
}

/// Stack grid of a yard plus the precomputed blocker drop preference.
#[derive(Debug, Clone)]
pub(crate) struct Geometry {
    stacks: Vec<StackInfo>,
    max_tier: u32,
    exit_gate: GatePos,
    index: BTreeMap<StackPos, usize>,
    /// Per stack: other stacks of the same segment, nearest first
    /// (Manhattan distance, then bay, then row).
    drop_order: Vec<Vec<usize>>,
}

impl Geometry {
    pub fn from_yard(yard: &YardState) -> Self {
        let stacks: Vec<StackInfo> = yard
            .stack_positions()
            .into_iter()
            .map(|pos| StackInfo {
                pos,
                segment: yard.segment_of(pos),
            })
            .collect();
        let index = stacks.iter().enumerate().map(|(i, s)| (s.pos, i)).collect();
        let drop_order = stacks
            .iter()
            .enumerate()
            .map(|(i, from)| {
                let mut v: Vec<usize> = (0..stacks.len())
                    .filter(|&j| j != i && stacks[j].segment == from.segment)
                    .collect();
                v.sort_by_key(|&j| {
                    let to = stacks[j].pos;
                    (
                        from.pos.bay.abs_diff(to.bay) + from.pos.row.abs_diff(to.row),
                        to.bay,
                        to.row,
                    )
                });
                v
            })
            .collect();
        Geometry {
            stacks,
            max_tier: yard.max_tier(),
            exit_gate: yard.layout().exit_gate,
            index,
            drop_order,
        }
    }

    pub fn len(&self) -> usize {
        self.stacks.len()
    }

    pub fn stack(&self, i: usize) -> StackInfo {
        self.stacks[i]
    }

    pub fn max_tier(&self) -> u32 {
        self.max_tier
    }

    pub fn exit_distance(&self, i: usize) -> u32 {
        self.exit_gate.distance_to(self.stacks[i].pos)
    }

    pub fn index_of(&self, pos: StackPos) -> Option<usize> {
        self.index.get(&pos).copied()
    }

    pub fn segment_capacity(&self, segment: Segment) -> usize {
        self.stacks.iter().filter(|s| s.segment == segment).count() * self.max_tier as usize
    }

    /// Retrieves `sequence` one by one and returns the number of blockers
    /// lifted for each retrieval. Blockers go, topmost first, onto the
    /// nearest same-segment stack with room; when none has room they are
    /// set back on their own stack. Items not present are skipped (0).
    pub fn simulate(&self, stacks: &[Vec<usize>], sequence: &[usize]) -> Vec<usize> {
        let mut stacks: Vec<Vec<usize>> = stacks.to_vec();
        let n = stacks
            .iter()
            .flatten()
            .chain(sequence.iter())
            .copied()
            .max()
            .map_or(0, |m| m + 1);
        let mut loc = vec![usize::MAX; n];
        for (s, stack) in stacks.iter().enumerate() {
            for &i in stack {
                loc[i] = s;
            }
        }
        let cap = self.max_tier as usize;
        let mut out = Vec::with_capacity(sequence.len());
        let mut held = Vec::new();
        for &target in sequence {
            let s = loc[target];
            if s == usize::MAX {
                out.push(0);
                continue;
            }
            let depth = stacks[s]
                .iter()
                .position(|&i| i == target)
                .expect("location map out of sync");
            let mut blockers = stacks[s].split_off(depth + 1);
            stacks[s].pop();
            loc[target] = usize::MAX;
            out.push(blockers.len());

            held.clear();
            while let Some(b) = blockers.pop() {
                match self.drop_order[s].iter().find(|&&d| stacks[d].len() < cap) {
                    Some(&d) => {
                        stacks[d].push(b);
                        loc[b] = d;
                    }
                    None => held.push(b),
                }
            }
            while let Some(b) = held.pop() {
                stacks[s].push(b);
            }
        }
        out
    }
}

/// Pairs stacked with the later pickup above the earlier one.
pub(crate) fn zorder_pairs(stacks: &[Vec<usize>], ranks: &[usize]) -> usize {
    stacks
        .iter()
        .map(|stack| {
            let mut n = 0;
            for (lo, &below) in stack.iter().enumerate() {
                for &above in &stack[lo + 1..] {
                    if ranks[above] > ranks[below] {
                        n += 1;
                    }
                }
            }
            n
        })
        .sum()
}

/// Index form of a yard: stacks of item indices plus the id table.
pub(crate) struct IndexedYard {
    pub geometry: Geometry,
    pub ids: Vec<ContainerId>,
    pub stacks: Vec<Vec<usize>>,
}

impl IndexedYard {
    pub fn new(yard: &YardState) -> Self {
        let geometry = Geometry::from_yard(yard);
        let ids: Vec<ContainerId> = yard.placements().keys().cloned().collect();
        let lookup: BTreeMap<&ContainerId, usize> =
            ids.iter().enumerate().map(|(i, id)| (id, i)).collect();
        let mut stacks = vec![Vec::new(); geometry.len()];
        for (pos, members) in yard.stacks() {
            if let Some(s) = geometry.index_of(pos) {
                stacks[s] = members.iter().map(|id| lookup[id]).collect();
            }
        }
        IndexedYard {
            geometry,
            ids,
            stacks,
        }
    }

    pub fn ranks(&self, pickup: &PickupOrder) -> Vec<usize> {
        self.ids
            .iter()
            .map(|id| pickup.rank(id).unwrap_or(usize::MAX))
            .collect()
    }

    /// Placed items in pickup order; unranked items are never retrieved.
    pub fn retrieval_sequence(&self, ranks: &[usize]) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.ids.len())
            .filter(|&i| ranks[i] != usize::MAX)
            .collect();
        order.sort_by_key(|&i| ranks[i]);
        order
    }
}

/// Pairs `(a, b)` in one stack where `a` sits above `b` yet is picked up
/// strictly later.
pub fn zorder_violations(yard: &YardState, pickup: &PickupOrder) -> usize {
    let y = IndexedYard::new(yard);
    zorder_pairs(&y.stacks, &y.ranks(pickup))
}

/// Total blockers lifted when every ranked container is retrieved in
/// pickup order.
pub fn expected_rehandles(yard: &YardState, pickup: &PickupOrder) -> usize {
    let y = IndexedYard::new(yard);
    let ranks = y.ranks(pickup);
    let seq = y.retrieval_sequence(&ranks);
    y.geometry.simulate(&y.stacks, &seq).iter().sum()
}

/// Objective of `yard` as it stands (no relocations).
pub fn placement_objective(
    yard: &YardState,
    pickup: &PickupOrder,
    weights: &ObjectiveWeights,
) -> f64 {
    let y = IndexedYard::new(yard);
    let ranks = y.ranks(pickup);
    let seq = y.retrieval_sequence(&ranks);
    let rehandles: usize = y.geometry.simulate(&y.stacks, &seq).iter().sum();
    weights.rehandle * rehandles as f64 + weights.zorder * zorder_pairs(&y.stacks, &ranks) as f64
}

/// Blockers lifted for each retrieval in `sequence`, in order.
pub fn simulate_retrievals(yard: &YardState, sequence: &[ContainerId]) -> Vec<usize> {
    let y = IndexedYard::new(yard);
    let lookup: BTreeMap<&ContainerId, usize> =
        y.ids.iter().enumerate().map(|(i, id)| (id, i)).collect();
    let missing = y.ids.len();
    let seq: Vec<usize> = sequence
        .iter()
        .map(|id| lookup.get(id).copied().unwrap_or(missing))
        .collect();
    y.geometry.simulate(&y.stacks, &seq)
}
