//! Yard segmentation and slot assignment.
//!
//! The assignment problem is an integer program over binary variables
//! `x[c, s]` (container `c` occupies slot `s`) and `r[c]` (an already
//! placed container ends up somewhere else). Constraints: each container
//! takes exactly one slot, each slot holds at most one container, a slot
//! above ground needs the slot below it filled, tiers stay under the
//! height limit and containers stay inside their category's segment.
//!
//! The objective is `α · rehandles + β · relocations + γ · z-order
//! violations`, where rehandles come from simulating retrievals in pickup
//! order and a z-order violation is a pair stacked with the later pickup
//! on top.
//!
//! [`solve_batch`] searches that program exactly by branch and bound,
//! [`solve_greedy`] is the fast constructive fallback and
//! [`place_incremental`] slots a single arrival into an existing layout.

mod batch;
mod greedy;
mod incremental;
pub(crate) mod objective;
mod random;
mod segments;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{ContainerId, Segment, Slot, YardState};
use crate::zscore::{OperationalCategory, StackClass};

pub use batch::{solve_batch, SearchBudget};
pub use greedy::solve_greedy;
pub use incremental::{place_incremental, IncrementalOptions};
pub use objective::{
    expected_rehandles, placement_objective, simulate_retrievals, zorder_violations,
};
pub use random::place_randomly;
pub use segments::{partition_segments, SegmentPlan, SegmentSpan};

use objective::Geometry;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlacementError {
    #[error("yard needs at least 3 bays to hold three segments, found {bays}")]
    TooFewBays { bays: u32 },
    #[error("segment sizing shortfall: {}", format_deficits(.deficits))]
    Sizing { deficits: Vec<SegmentDeficit> },
    #[error("segment {segment} holds {capacity} slots but {demand} containers need it")]
    Infeasible {
        segment: Segment,
        demand: usize,
        capacity: usize,
    },
    #[error("segment {segment} has no free slot")]
    SegmentFull { segment: Segment },
    #[error("search budget must be positive")]
    ZeroBudget,
    #[error("container {0} listed twice")]
    DuplicateContainer(ContainerId),
    #[error("container {0} is placed in the yard but missing from the model")]
    UnlistedPlacement(ContainerId),
    #[error("objective weights must be finite and non-negative")]
    InvalidWeights,
}

fn format_deficits(deficits: &[SegmentDeficit]) -> String {
    deficits
        .iter()
        .map(|d| format!("{} short by {}", d.segment, d.demand - d.capacity))
        .collect::<Vec<_>>()
        .join(", ")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentDeficit {
    pub segment: Segment,
    pub demand: usize,
    pub capacity: usize,
}

/// Segment each operational category is stored in.
pub fn segment_for(category: OperationalCategory) -> Segment {
    match category {
        OperationalCategory::Cat1 => Segment::S1,
        OperationalCategory::Cat2 => Segment::S2,
        OperationalCategory::Cat3 => Segment::S3,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ObjectiveWeights {
    /// α, per rehandle.
    pub rehandle: f64,
    /// β, per relocated container.
    pub relocation: f64,
    /// γ, per z-order violation.
    pub zorder: f64,
}

impl Default for ObjectiveWeights {
    fn default() -> Self {
        ObjectiveWeights {
            rehandle: 1.0,
            relocation: 2.0,
            zorder: 1.0,
        }
    }
}

impl ObjectiveWeights {
    pub fn validate(&self) -> Result<(), PlacementError> {
        let ok = [self.rehandle, self.relocation, self.zorder]
            .iter()
            .all(|w| w.is_finite() && *w >= 0.0);
        if ok {
            Ok(())
        } else {
            Err(PlacementError::InvalidWeights)
        }
    }
}

/// What determines when a container is expected to leave.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PickupKey {
    pub appointment_block: Option<usize>,
    pub stack_class: StackClass,
    pub remaining_free_days: i64,
}

/// Total order of expected pickups, earliest first.
///
/// Booked containers come first by block. Unbooked ones follow by stack
/// class (C3 earliest), then fewer remaining free days, then id.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PickupOrder {
    sequence: Vec<ContainerId>,
    ranks: BTreeMap<ContainerId, usize>,
}

impl PickupOrder {
    pub fn from_keys<I>(keys: I) -> Self
    where
        I: IntoIterator<Item = (ContainerId, PickupKey)>,
    {
        let mut v: Vec<(ContainerId, PickupKey)> = keys.into_iter().collect();
        v.sort_by(|(ia, a), (ib, b)| {
            let block = |k: &PickupKey| (k.appointment_block.is_none(), k.appointment_block);
            block(a)
                .cmp(&block(b))
                .then_with(|| b.stack_class.rank().cmp(&a.stack_class.rank()))
                .then_with(|| a.remaining_free_days.cmp(&b.remaining_free_days))
                .then_with(|| ia.cmp(ib))
        });
        Self::from_sequence(v.into_iter().map(|(id, _)| id).collect())
    }

    pub fn from_sequence(sequence: Vec<ContainerId>) -> Self {
        let ranks = sequence
            .iter()
            .enumerate()
            .map(|(i, id)| (id.clone(), i))
            .collect();
        PickupOrder { sequence, ranks }
    }

    pub fn rank(&self, id: &ContainerId) -> Option<usize> {
        self.ranks.get(id).copied()
    }

    pub fn sequence(&self) -> &[ContainerId] {
        &self.sequence
    }

    pub fn len(&self) -> usize {
        self.sequence.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequence.is_empty()
    }
}

/// A container the model has to seat.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlacementRequest {
    pub id: ContainerId,
    pub segment: Segment,
    /// Demurrage containers are seated first by the greedy heuristic.
    pub demurrage: bool,
}

impl PlacementRequest {
    pub fn new(id: impl Into<ContainerId>, segment: Segment) -> Self {
        PlacementRequest {
            id: id.into(),
            segment,
            demurrage: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct ModelItem {
    pub id: ContainerId,
    pub segment: Segment,
    pub rank: usize,
    pub demurrage: bool,
    /// Slot index (stack, tier) held before optimisation.
    pub initial: Option<(usize, u32)>,
}

/// The slot-assignment program for one yard.
#[derive(Debug, Clone)]
pub struct PlacementModel {
    pub(crate) geometry: Geometry,
    pub(crate) items: Vec<ModelItem>,
    pub(crate) weights: ObjectiveWeights,
}

impl PlacementModel {
    /// Builds the program over the yard's grid. Containers already in
    /// `yard` keep their current slot as the relocation reference and must
    /// be listed in `requests`.
    pub fn new(
        yard: &YardState,
        requests: &[PlacementRequest],
        pickup: &PickupOrder,
        weights: ObjectiveWeights,
    ) -> Result<Self, PlacementError> {
        weights.validate()?;
        let geometry = Geometry::from_yard(yard);
        let mut seen = BTreeSet::new();
        let mut items = Vec::with_capacity(requests.len());
        for r in requests {
            if !seen.insert(r.id.clone()) {
                return Err(PlacementError::DuplicateContainer(r.id.clone()));
            }
            let initial = yard
                .slot_of(&r.id)
                .and_then(|s| geometry.index_of(s.stack()).map(|i| (i, s.tier)));
            items.push(ModelItem {
                id: r.id.clone(),
                segment: r.segment,
                rank: pickup.rank(&r.id).unwrap_or(usize::MAX),
                demurrage: r.demurrage,
                initial,
            });
        }
        if let Some(id) = yard.placements().keys().find(|id| !seen.contains(*id)) {
            return Err(PlacementError::UnlistedPlacement(id.clone()));
        }
        let model = PlacementModel {
            geometry,
            items,
            weights,
        };
        model.check_capacity()?;
        Ok(model)
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn weights(&self) -> ObjectiveWeights {
        self.weights
    }

    pub(crate) fn check_capacity(&self) -> Result<(), PlacementError> {
        let mut demand: BTreeMap<Segment, usize> = BTreeMap::new();
        for it in &self.items {
            *demand.entry(it.segment).or_default() += 1;
        }
        for (segment, demand) in demand {
            let capacity = self.geometry.segment_capacity(segment);
            if demand > capacity {
                return Err(PlacementError::Infeasible {
                    segment,
                    demand,
                    capacity,
                });
            }
        }
        Ok(())
    }

    /// Objective of a full stack configuration (item indices, bottom first).
    pub(crate) fn evaluate(&self, stacks: &[Vec<usize>]) -> f64 {
        let ranks: Vec<usize> = self.items.iter().map(|i| i.rank).collect();
        let mut order: Vec<usize> = stacks
            .iter()
            .flatten()
            .copied()
            .filter(|&i| ranks[i] != usize::MAX)
            .collect();
        order.sort_by_key(|&i| (ranks[i], i));
        let rehandles: usize = self.geometry.simulate(stacks, &order).iter().sum();
        let z = objective::zorder_pairs(stacks, &ranks);
        let relocs = self.relocations_in(stacks);
        self.weights.rehandle * rehandles as f64
            + self.weights.relocation * relocs as f64
            + self.weights.zorder * z as f64
    }

    fn relocations_in(&self, stacks: &[Vec<usize>]) -> usize {
        let mut n = 0;
        for (s, stack) in stacks.iter().enumerate() {
            for (t, &i) in stack.iter().enumerate() {
                if let Some(init) = self.items[i].initial {
                    if init != (s, t as u32) {
                        n += 1;
                    }
                }
            }
        }
        n
    }

    /// Objective of an explicit assignment covering every model container.
    pub fn objective_of(&self, assignment: &BTreeMap<ContainerId, Slot>) -> Option<f64> {
        let stacks = self.stacks_from_assignment(assignment)?;
        Some(self.evaluate(&stacks))
    }

    fn stacks_from_assignment(
        &self,
        assignment: &BTreeMap<ContainerId, Slot>,
    ) -> Option<Vec<Vec<usize>>> {
        let mut tiers: Vec<Vec<(u32, usize)>> = vec![Vec::new(); self.geometry.len()];
        for (i, it) in self.items.iter().enumerate() {
            let slot = assignment.get(&it.id)?;
            let s = self.geometry.index_of(slot.stack())?;
            tiers[s].push((slot.tier, i));
        }
        let mut stacks = Vec::with_capacity(tiers.len());
        for mut t in tiers {
            t.sort();
            if t.iter().enumerate().any(|(k, (tier, _))| *tier != k as u32) {
                return None;
            }
            stacks.push(t.into_iter().map(|(_, i)| i).collect());
        }
        Some(stacks)
    }

    pub(crate) fn plan_from(
        &self,
        stacks: &[Vec<usize>],
        objective_value: f64,
        optimality: Optimality,
        nodes_explored: u64,
    ) -> PlacementPlan {
        let mut assignment = BTreeMap::new();
        let mut relocations = Vec::new();
        for (s, stack) in stacks.iter().enumerate() {
            let info = self.geometry.stack(s);
            for (t, &i) in stack.iter().enumerate() {
                let item = &self.items[i];
                let slot = Slot::new(info.pos.bay, info.pos.row, t as u32, info.segment);
                if let Some((is, it)) = item.initial {
                    if (is, it) != (s, t as u32) {
                        let from = self.geometry.stack(is);
                        relocations.push(Relocation {
                            container_id: item.id.clone(),
                            from: Slot::new(from.pos.bay, from.pos.row, it, from.segment),
                            to: slot,
                        });
                    }
                }
                assignment.insert(item.id.clone(), slot);
            }
        }
        relocations.sort_by(|a, b| a.container_id.cmp(&b.container_id));
        PlacementPlan {
            assignment,
            relocations,
            objective_value,
            optimality,
            nodes_explored,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Optimality {
    ProvenOptimal,
    Heuristic,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Relocation {
    pub container_id: ContainerId,
    pub from: Slot,
    pub to: Slot,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlacementPlan {
    pub assignment: BTreeMap<ContainerId, Slot>,
    pub relocations: Vec<Relocation>,
    pub objective_value: f64,
    pub optimality: Optimality,
    pub nodes_explored: u64,
}

impl PlacementPlan {
    /// The yard with this plan's assignment applied.
    pub fn apply(&self, yard: &YardState) -> YardState {
        yard.with_assignment(&self.assignment)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn key(block: Option<usize>, class: StackClass, rem: i64) -> PickupKey {
        PickupKey {
            appointment_block: block,
            stack_class: class,
            remaining_free_days: rem,
        }
    }

    #[test]
    fn pickup_order_rules() {
        let order = PickupOrder::from_keys(vec![
            ("u1".into(), key(None, StackClass::C1, 1)),
            ("u3".into(), key(None, StackClass::C3, 4)),
            ("u3b".into(), key(None, StackClass::C3, -1)),
            ("b2".into(), key(Some(2), StackClass::C1, 3)),
            ("b0".into(), key(Some(0), StackClass::C1, 3)),
            ("b0a".into(), key(Some(0), StackClass::C1, 3)),
        ]);
        let seq: Vec<&str> = order.sequence().iter().map(|c| c.as_str()).collect();
        assert_eq!(seq, vec!["b0", "b0a", "b2", "u3b", "u3", "u1"]);
        assert_eq!(order.rank(&"b2".into()), Some(2));
        assert_eq!(order.rank(&"nope".into()), None);
    }

    #[test]
    fn weights_must_be_non_negative() {
        let w = ObjectiveWeights {
            relocation: -1.0,
            ..ObjectiveWeights::default()
        };
        assert_eq!(w.validate(), Err(PlacementError::InvalidWeights));
    }
}
