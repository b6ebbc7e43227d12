//! Best-first branch and bound over the slot-assignment program.
//!
//! Nodes build the yard stack by stack in grid order: a node either
//! pushes an unplaced container onto the open stack or closes it and
//! opens the next one. Each complete configuration therefore has exactly
//! one path from the root.
//!
//! The bound drops every interaction term that is not yet fixed. What
//! remains is the per-container relocation cost (a pre-placed container
//! whose original slot is already unreachable must move) plus the z-order
//! pairs already stacked, which can only grow as containers are added.
//! Rehandles contribute nothing to the bound.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::model::Segment;

use super::greedy::greedy_stacks;
use super::{Optimality, PlacementError, PlacementModel, PlacementPlan};

const EPS: f64 = 1e-9;
const UNPLACED: u16 = u16::MAX;

/// Node expansion limit. Counting nodes rather than wall time keeps
/// results reproducible across machines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchBudget {
    pub max_nodes: u64,
}

impl Default for SearchBudget {
    fn default() -> Self {
        SearchBudget { max_nodes: 5_000 }
    }
}

impl SearchBudget {
    pub fn nodes(max_nodes: u64) -> Self {
        SearchBudget { max_nodes }
    }
}

struct Node {
    lb: f64,
    depth: u32,
    seq: u64,
    open: usize,
    /// Per item: `stack * max_tier + tier`, or `UNPLACED`.
    pos: Vec<u16>,
    left: [usize; 4],
    zpairs: usize,
    relocs: usize,
}

impl Node {
    fn key(&self) -> (f64, Reverse<u32>, u64) {
        (self.lb, Reverse(self.depth), self.seq)
    }
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    // BinaryHeap is a max-heap; invert so the smallest key pops first.
    fn cmp(&self, other: &Self) -> Ordering {
        let (a, b) = (self.key(), other.key());
        b.0.total_cmp(&a.0)
            .then_with(|| b.1.cmp(&a.1))
            .then_with(|| b.2.cmp(&a.2))
    }
}

fn seg_index(s: Segment) -> usize {
    match s {
        Segment::Unsegmented => 0,
        Segment::S1 => 1,
        Segment::S2 => 2,
        Segment::S3 => 3,
    }
}

struct Search<'a> {
    model: &'a PlacementModel,
    tiers: usize,
    stack_seg: Vec<usize>,
    item_seg: Vec<usize>,
    ranks: Vec<usize>,
    initial: Vec<Option<(usize, usize)>>,
    /// `suffix_cap[g][k]`: slots of segment `g` in stacks `k..`.
    suffix_cap: Vec<Vec<usize>>,
    seq: u64,
}

impl<'a> Search<'a> {
    fn new(model: &'a PlacementModel) -> Self {
        let geo = &model.geometry;
        let tiers = geo.max_tier() as usize;
        let stack_seg: Vec<usize> = (0..geo.len())
            .map(|s| seg_index(geo.stack(s).segment))
            .collect();
        let mut suffix_cap = vec![vec![0usize; geo.len() + 1]; 4];
        for k in (0..geo.len()).rev() {
            for (g, caps) in suffix_cap.iter_mut().enumerate() {
                caps[k] = caps[k + 1] + if stack_seg[k] == g { tiers } else { 0 };
            }
        }
        Search {
            model,
            tiers,
            stack_seg,
            item_seg: model.items.iter().map(|i| seg_index(i.segment)).collect(),
            ranks: model.items.iter().map(|i| i.rank).collect(),
            initial: model
                .items
                .iter()
                .map(|i| i.initial.map(|(s, t)| (s, t as usize)))
                .collect(),
            suffix_cap,
            seq: 0,
        }
    }

    fn next_seq(&mut self) -> u64 {
        self.seq += 1;
        self.seq
    }

    fn stack_members(&self, pos: &[u16], stack: usize) -> Vec<usize> {
        let lo = stack * self.tiers;
        let mut m: Vec<(u16, usize)> = pos
            .iter()
            .enumerate()
            .filter(|(_, &p)| p != UNPLACED && (p as usize) / self.tiers == stack)
            .map(|(i, &p)| (p, i))
            .collect();
        m.sort();
        debug_assert!(m
            .iter()
            .enumerate()
            .all(|(t, (p, _))| *p as usize == lo + t));
        m.into_iter().map(|(_, i)| i).collect()
    }

    fn bound(
        &self,
        node_pos: &[u16],
        open: usize,
        open_height: usize,
        z: usize,
        relocs: usize,
    ) -> f64 {
        let forced = self
            .initial
            .iter()
            .enumerate()
            .filter(|(i, init)| {
                node_pos[*i] == UNPLACED
                    && matches!(init, Some((s, t)) if *s < open || (*s == open && open_height > *t))
            })
            .count();
        let w = &self.model.weights;
        w.zorder * z as f64 + w.relocation * (relocs + forced) as f64
    }

    fn root(&mut self) -> Node {
        let n = self.model.items.len();
        let mut left = [0usize; 4];
        for &g in &self.item_seg {
            left[g] += 1;
        }
        let pos = vec![UNPLACED; n];
        let lb = self.bound(&pos, 0, 0, 0, 0);
        Node {
            lb,
            depth: 0,
            seq: self.next_seq(),
            open: 0,
            pos,
            left,
            zpairs: 0,
            relocs: 0,
        }
    }

    fn to_stacks(&self, pos: &[u16]) -> Vec<Vec<usize>> {
        (0..self.model.geometry.len())
            .map(|s| self.stack_members(pos, s))
            .collect()
    }

    fn children(&mut self, node: &Node, incumbent: f64, out: &mut Vec<Node>) {
        let k = node.open;
        let members = self.stack_members(&node.pos, k);
        let h = members.len();

        if h < self.tiers {
            let mut cands: Vec<usize> = (0..node.pos.len())
                .filter(|&i| node.pos[i] == UNPLACED && self.item_seg[i] == self.stack_seg[k])
                .collect();
            // keep-in-place first, then latest pickup first
            cands.sort_by_key(|&i| (self.initial[i] != Some((k, h)), Reverse(self.ranks[i]), i));
            for i in cands {
                let added = members
                    .iter()
                    .filter(|&&below| self.ranks[i] > self.ranks[below])
                    .count();
                let moved = usize::from(matches!(self.initial[i], Some(init) if init != (k, h)));
                let mut pos = node.pos.clone();
                pos[i] = (k * self.tiers + h) as u16;
                let z = node.zpairs + added;
                let relocs = node.relocs + moved;
                let lb = self.bound(&pos, k, h + 1, z, relocs);
                if lb >= incumbent - EPS {
                    continue;
                }
                let mut left = node.left;
                left[self.item_seg[i]] -= 1;
                out.push(Node {
                    lb,
                    depth: node.depth + 1,
                    seq: self.next_seq(),
                    open: k,
                    pos,
                    left,
                    zpairs: z,
                    relocs,
                });
            }
        }

        let next = k + 1;
        if next < self.model.geometry.len() {
            let fits = (0..4).all(|g| node.left[g] <= self.suffix_cap[g][next]);
            if fits {
                let lb = self.bound(&node.pos, next, 0, node.zpairs, node.relocs);
                if lb < incumbent - EPS {
                    out.push(Node {
                        lb,
                        depth: node.depth + 1,
                        seq: self.next_seq(),
                        open: next,
                        pos: node.pos.clone(),
                        left: node.left,
                        zpairs: node.zpairs,
                        relocs: node.relocs,
                    });
                }
            }
        }
    }
}

/// Solves the placement program by best-first branch and bound.
///
/// The greedy plan seeds the incumbent. The result is marked proven
/// optimal when the open list empties or its best bound reaches the
/// incumbent within the budget; otherwise the best plan found so far is
/// returned as heuristic.
pub fn solve_batch(
    model: &PlacementModel,
    budget: SearchBudget,
) -> Result<PlacementPlan, PlacementError> {
    if budget.max_nodes == 0 {
        return Err(PlacementError::ZeroBudget);
    }
    model.check_capacity()?;

    let mut best_stacks = greedy_stacks(model)?;
    let mut best = model.evaluate(&best_stacks);

    let slots = model.geometry.len() * model.geometry.max_tier() as usize;
    if slots >= UNPLACED as usize {
        // too large to encode; the constructive plan is all we offer
        return Ok(model.plan_from(&best_stacks, best, Optimality::Heuristic, 0));
    }

    let mut search = Search::new(model);
    let mut heap = BinaryHeap::new();
    heap.push(search.root());
    let mut expanded: u64 = 0;
    let mut children = Vec::new();

    let proven = loop {
        let Some(node) = heap.pop() else { break true };
        if node.lb >= best - EPS {
            break true;
        }
        if expanded >= budget.max_nodes {
            break false;
        }
        expanded += 1;

        if node.left.iter().all(|&l| l == 0) {
            let stacks = search.to_stacks(&node.pos);
            let value = model.evaluate(&stacks);
            if value < best - EPS {
                best = value;
                best_stacks = stacks;
            }
            continue;
        }
        children.clear();
        search.children(&node, best, &mut children);
        heap.extend(children.drain(..));
    };

    let optimality = if proven {
        Optimality::ProvenOptimal
    } else {
        Optimality::Heuristic
    };
    Ok(model.plan_from(&best_stacks, best, optimality, expanded))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{validate_yard, GatePos, Slot, YardLayout, YardState};
    use crate::placement::{ObjectiveWeights, PickupOrder, PlacementRequest};

    fn line_yard(stacks: u32, tiers: u32) -> YardState {
        let layout = YardLayout {
            length_bays: stacks,
            width_rows: 1,
            entry_gate: GatePos::new(stacks as i32, 0),
            exit_gate: GatePos::new(-1, 0),
            total_container_census: 0,
        };
        YardState::new(layout, tiers)
    }

    fn requests(ids: &[&str]) -> Vec<PlacementRequest> {
        ids.iter()
            .map(|id| PlacementRequest::new(*id, Segment::Unsegmented))
            .collect()
    }

    fn order(ids: &[&str]) -> PickupOrder {
        PickupOrder::from_sequence(ids.iter().map(|s| (*s).into()).collect())
    }

    #[test]
    fn single_container_single_slot() {
        let yard = line_yard(1, 1);
        let model = PlacementModel::new(
            &yard,
            &requests(&["a"]),
            &order(&["a"]),
            ObjectiveWeights::default(),
        )
        .unwrap();
        let plan = solve_batch(&model, SearchBudget::default()).unwrap();
        assert_eq!(plan.objective_value, 0.0);
        assert_eq!(
            plan.assignment[&"a".into()],
            Slot::new(0, 0, 0, Segment::Unsegmented)
        );
        assert_eq!(plan.optimality, Optimality::ProvenOptimal);
    }

    #[test]
    fn three_in_one_stack_latest_at_bottom() {
        let yard = line_yard(1, 3);
        let model = PlacementModel::new(
            &yard,
            &requests(&["a", "b", "c"]),
            &order(&["a", "b", "c"]),
            ObjectiveWeights::default(),
        )
        .unwrap();
        let plan = solve_batch(&model, SearchBudget::default()).unwrap();
        assert_eq!(plan.objective_value, 0.0);
        assert_eq!(plan.assignment[&"c".into()].tier, 0);
        assert_eq!(plan.assignment[&"b".into()].tier, 1);
        assert_eq!(plan.assignment[&"a".into()].tier, 2);
        assert!(validate_yard(&plan.apply(&yard)).is_ok());
    }

    #[test]
    fn zero_budget_rejected() {
        let yard = line_yard(1, 1);
        let model = PlacementModel::new(
            &yard,
            &requests(&["a"]),
            &order(&["a"]),
            ObjectiveWeights::default(),
        )
        .unwrap();
        assert_eq!(
            solve_batch(&model, SearchBudget::nodes(0)),
            Err(PlacementError::ZeroBudget)
        );
    }

    #[test]
    fn over_capacity_is_infeasible() {
        let yard = line_yard(1, 2);
        let err = PlacementModel::new(
            &yard,
            &requests(&["a", "b", "c"]),
            &order(&["a", "b", "c"]),
            ObjectiveWeights::default(),
        )
        .unwrap_err();
        assert!(matches!(
            err,
            PlacementError::Infeasible {
                demand: 3,
                capacity: 2,
                ..
            }
        ));
    }

    #[test]
    fn keeps_existing_placement_when_it_is_already_good() {
        let mut yard = line_yard(2, 2);
        yard.place(
            "late".into(),
            Slot::new(1, 0, 0, Segment::Unsegmented),
            Segment::Unsegmented,
        );
        let model = PlacementModel::new(
            &yard,
            &requests(&["late", "early"]),
            &order(&["early", "late"]),
            ObjectiveWeights::default(),
        )
        .unwrap();
        let plan = solve_batch(&model, SearchBudget::default()).unwrap();
        assert_eq!(plan.objective_value, 0.0);
        assert!(plan.relocations.is_empty());
        assert_eq!(
            plan.assignment[&"late".into()],
            Slot::new(1, 0, 0, Segment::Unsegmented)
        );
    }
}
