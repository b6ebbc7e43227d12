//! Domain types shared across the planner: containers, terminal parameters,
//! the bay × row × tier yard grid and the truck visits booked against it.
//!
//! Everything here is a plain value type. [`YardState`] deliberately accepts
//! any placement map (including physically impossible ones) so that
//! [`validate_yard`] can report on states received from outside the solver.

use std::collections::BTreeMap;
use std::fmt;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ContainerId(String);

impl ContainerId {
    pub fn new(id: impl Into<String>) -> Self {
        ContainerId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ContainerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for ContainerId {
    fn from(value: &str) -> Self {
        ContainerId(value.to_owned())
    }
}

impl From<String> for ContainerId {
    fn from(value: String) -> Self {
        ContainerId(value)
    }
}

/// Whether a truck visit came from the terminal's own booking feed or was
/// created by the planner while filling slack.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VisitOrigin {
    PreExisting,
    IpsCreated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AppointmentRef {
    pub block: usize,
    pub origin: VisitOrigin,
}

impl AppointmentRef {
    pub fn pre_existing(block: usize) -> Self {
        AppointmentRef {
            block,
            origin: VisitOrigin::PreExisting,
        }
    }
}

/// One import container as delivered by the terminal operating system.
///
/// Weight is in metric tons.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Container {
    pub id: ContainerId,
    pub arrival_date: NaiveDate,
    pub free_days: u32,
    pub weight_tons: f64,
    pub cargo_type: String,
    pub pickup_probability: f64,
    pub consignee_id: String,
    pub carrier_id: Option<String>,
    pub carrier_visits_per_month: u32,
    pub owner_id: String,
    pub appointment: Option<AppointmentRef>,
    pub destination: String,
}

impl Container {
    /// A container with the numeric fields set and empty party/route fields.
    pub fn new(
        id: impl Into<ContainerId>,
        arrival_date: NaiveDate,
        free_days: u32,
        weight_tons: f64,
        pickup_probability: f64,
    ) -> Self {
        Container {
            id: id.into(),
            arrival_date,
            free_days,
            weight_tons,
            cargo_type: String::from("general"),
            pickup_probability,
            consignee_id: String::new(),
            carrier_id: None,
            carrier_visits_per_month: 0,
            owner_id: String::new(),
            appointment: None,
            destination: String::new(),
        }
    }

    pub fn with_appointment(mut self, block: usize) -> Self {
        self.appointment = Some(AppointmentRef::pre_existing(block));
        self
    }

    pub fn with_carrier(mut self, carrier: impl Into<String>, visits_per_month: u32) -> Self {
        self.carrier_id = Some(carrier.into());
        self.carrier_visits_per_month = visits_per_month;
        self
    }

    pub fn with_owner(mut self, owner: impl Into<String>) -> Self {
        self.owner_id = owner.into();
        self
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.id.as_str().is_empty() {
            return Err(ModelError::EmptyId);
        }
        if !(self.weight_tons.is_finite() && self.weight_tons > 0.0) {
            return Err(ModelError::NonPositiveWeight {
                id: self.id.clone(),
                weight: self.weight_tons,
            });
        }
        if !(0.0..=1.0).contains(&self.pickup_probability) {
            return Err(ModelError::ProbabilityOutOfRange {
                id: self.id.clone(),
                value: self.pickup_probability,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("container id must not be empty")]
    EmptyId,
    #[error("container {id}: weight {weight} t must be positive")]
    NonPositiveWeight { id: ContainerId, weight: f64 },
    #[error("container {id}: pickup probability {value} outside [0, 1]")]
    ProbabilityOutOfRange { id: ContainerId, value: f64 },
    #[error("unknown container {0}")]
    UnknownContainer(ContainerId),
    #[error("invalid terminal parameter: {0}")]
    InvalidParams(&'static str),
    #[error("invalid yard layout: {0}")]
    InvalidLayout(String),
    #[error("{census} containers exceed the yard capacity of {capacity}")]
    OverCapacity { census: usize, capacity: usize },
}

/// Gate and yard constants for one terminal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TerminalParams {
    /// Trucks the clearance gate can service simultaneously.
    pub gate_lanes: u32,
    /// Minutes for a single truck to clear the departure gate.
    pub clear_minutes: f64,
    pub load_minutes: f64,
    pub inspect_minutes: f64,
    /// Minutes added per blocking container moved during a retrieval.
    pub rehandle_minutes: f64,
    /// Maximum trucks able to wait in the yard.
    pub yard_truck_limit: u32,
    pub blocks_per_day: usize,
    pub block_length_minutes: u32,
    pub max_tier: u32,
}

impl Default for TerminalParams {
    fn default() -> Self {
        TerminalParams {
            gate_lanes: 2,
            clear_minutes: 1.0,
            load_minutes: 25.0,
            inspect_minutes: 5.0,
            rehandle_minutes: 6.0,
            yard_truck_limit: 60,
            blocks_per_day: 9,
            block_length_minutes: 60,
            max_tier: 4,
        }
    }
}

impl TerminalParams {
    pub fn validate(&self) -> Result<(), ModelError> {
        let checks: [(bool, &'static str); 8] = [
            (self.gate_lanes >= 1, "gate_lanes must be at least 1"),
            (
                self.clear_minutes.is_finite() && self.clear_minutes > 0.0,
                "clear_minutes must be positive",
            ),
            (
                self.load_minutes.is_finite() && self.load_minutes > 0.0,
                "load_minutes must be positive",
            ),
            (
                self.inspect_minutes.is_finite() && self.inspect_minutes >= 0.0,
                "inspect_minutes must be non-negative",
            ),
            (
                self.rehandle_minutes.is_finite() && self.rehandle_minutes >= 0.0,
                "rehandle_minutes must be non-negative",
            ),
            (
                self.yard_truck_limit >= 1,
                "yard_truck_limit must be at least 1",
            ),
            (
                self.blocks_per_day >= 1,
                "blocks_per_day must be at least 1",
            ),
            (self.max_tier >= 1, "max_tier must be at least 1"),
        ];
        for (ok, msg) in checks {
            if !ok {
                return Err(ModelError::InvalidParams(msg));
            }
        }
        if self.serviceable_max() < 1 {
            return Err(ModelError::InvalidParams(
                "gate parameters admit no truck per block",
            ));
        }
        Ok(())
    }

    /// Per-block serviceable maximum: the largest truck count whose
    /// departure time does not exceed the internal process time.
    pub fn serviceable_max(&self) -> usize {
        let io = self.load_minutes + self.inspect_minutes;
        let exact = io * f64::from(self.gate_lanes) / self.clear_minutes;
        // absorb representation error such as 59.99999999
        (exact + 1e-9).floor().max(0.0) as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Segment {
    Unsegmented,
    S1,
    S2,
    S3,
}

impl fmt::Display for Segment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Segment::Unsegmented => "open",
            Segment::S1 => "S1",
            Segment::S2 => "S2",
            Segment::S3 => "S3",
        };
        f.write_str(s)
    }
}

/// Ground position of a stack.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct StackPos {
    pub bay: u32,
    pub row: u32,
}

impl StackPos {
    pub fn new(bay: u32, row: u32) -> Self {
        StackPos { bay, row }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Slot {
    pub bay: u32,
    pub row: u32,
    pub tier: u32,
    pub segment: Segment,
}

impl Slot {
    pub fn new(bay: u32, row: u32, tier: u32, segment: Segment) -> Self {
        Slot {
            bay,
            row,
            tier,
            segment,
        }
    }

    pub fn stack(&self) -> StackPos {
        StackPos::new(self.bay, self.row)
    }

    pub fn same_cell(&self, other: &Slot) -> bool {
        self.bay == other.bay && self.row == other.row && self.tier == other.tier
    }
}

impl fmt::Display for Slot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}:b{}r{}t{}",
            self.segment, self.bay, self.row, self.tier
        )
    }
}

/// A boundary coordinate. Gates sit on or just outside the grid edge, so
/// coordinates may be negative or equal to the grid dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GatePos {
    pub bay: i32,
    pub row: i32,
}

impl GatePos {
    pub fn new(bay: i32, row: i32) -> Self {
        GatePos { bay, row }
    }

    pub fn distance_to(&self, pos: StackPos) -> u32 {
        (i64::from(pos.bay) - i64::from(self.bay)).unsigned_abs() as u32
            + (i64::from(pos.row) - i64::from(self.row)).unsigned_abs() as u32
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct YardLayout {
    pub length_bays: u32,
    pub width_rows: u32,
    pub entry_gate: GatePos,
    pub exit_gate: GatePos,
    pub total_container_census: u32,
}

impl Default for YardLayout {
    fn default() -> Self {
        YardLayout {
            length_bays: 6,
            width_rows: 4,
            entry_gate: GatePos::new(6, 0),
            exit_gate: GatePos::new(-1, 0),
            total_container_census: 0,
        }
    }
}

impl YardLayout {
    pub fn capacity(&self, max_tier: u32) -> usize {
        self.length_bays as usize * self.width_rows as usize * max_tier as usize
    }

    pub fn validate(&self, max_tier: u32) -> Result<(), ModelError> {
        if self.length_bays == 0 || self.width_rows == 0 {
            return Err(ModelError::InvalidLayout(
                "yard needs at least one bay and one row".into(),
            ));
        }
        if self.entry_gate == self.exit_gate {
            return Err(ModelError::InvalidLayout(
                "entry and exit gate coincide".into(),
            ));
        }
        let cap = self.capacity(max_tier);
        if (self.total_container_census as usize) > cap {
            return Err(ModelError::OverCapacity {
                census: self.total_container_census as usize,
                capacity: cap,
            });
        }
        Ok(())
    }

    /// Every ground position, ordered by bay then row.
    pub fn stack_positions(&self) -> impl Iterator<Item = StackPos> + '_ {
        (0..self.length_bays)
            .flat_map(move |b| (0..self.width_rows).map(move |r| StackPos::new(b, r)))
    }
}

/// Slot occupancy of the yard for one operational day.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct YardState {
    layout: YardLayout,
    max_tier: u32,
    /// Segment label per bay; empty when the yard is not segmented.
    bay_segments: Vec<Segment>,
    placements: BTreeMap<ContainerId, Slot>,
    /// Segment each container is required to sit in.
    required: BTreeMap<ContainerId, Segment>,
}

impl YardState {
    pub fn new(layout: YardLayout, max_tier: u32) -> Self {
        YardState {
            layout,
            max_tier,
            bay_segments: Vec::new(),
            placements: BTreeMap::new(),
            required: BTreeMap::new(),
        }
    }

    /// Attaches per-bay segment labels. `labels.len()` must equal the bay count.
    pub fn with_bay_segments(mut self, labels: Vec<Segment>) -> Self {
        assert_eq!(
            labels.len(),
            self.layout.length_bays as usize,
            "one segment label per bay"
        );
        self.bay_segments = labels;
        self
    }

    pub fn layout(&self) -> &YardLayout {
        &self.layout
    }

    pub fn max_tier(&self) -> u32 {
        self.max_tier
    }

    pub fn is_segmented(&self) -> bool {
        !self.bay_segments.is_empty()
    }

    pub fn segment_of(&self, pos: StackPos) -> Segment {
        self.bay_segments
            .get(pos.bay as usize)
            .copied()
            .unwrap_or(Segment::Unsegmented)
    }

    /// Records a placement as-is. Use [`validate_yard`] to check the result.
    pub fn place(&mut self, id: ContainerId, slot: Slot, required: Segment) {
        self.required.insert(id.clone(), required);
        self.placements.insert(id, slot);
    }

    pub fn remove(&mut self, id: &ContainerId) -> Option<Slot> {
        self.required.remove(id);
        self.placements.remove(id)
    }

    pub fn slot_of(&self, id: &ContainerId) -> Option<Slot> {
        self.placements.get(id).copied()
    }

    pub fn required_segment(&self, id: &ContainerId) -> Option<Segment> {
        self.required.get(id).copied()
    }

    pub fn placements(&self) -> &BTreeMap<ContainerId, Slot> {
        &self.placements
    }

    pub fn occupancy(&self) -> usize {
        self.placements.len()
    }

    pub fn stack_positions(&self) -> Vec<StackPos> {
        self.layout.stack_positions().collect()
    }

    /// Containers in the stack at `pos`, bottom first.
    pub fn stack(&self, pos: StackPos) -> Vec<(u32, ContainerId)> {
        let mut v: Vec<(u32, ContainerId)> = self
            .placements
            .iter()
            .filter(|(_, s)| s.stack() == pos)
            .map(|(id, s)| (s.tier, id.clone()))
            .collect();
        v.sort();
        v
    }

    pub fn height(&self, pos: StackPos) -> u32 {
        self.placements
            .values()
            .filter(|s| s.stack() == pos)
            .count() as u32
    }

    /// Placements grouped by stack, bottom first.
    pub fn stacks(&self) -> BTreeMap<StackPos, Vec<ContainerId>> {
        let mut by_stack: BTreeMap<StackPos, Vec<(u32, ContainerId)>> = BTreeMap::new();
        for (id, s) in &self.placements {
            by_stack
                .entry(s.stack())
                .or_default()
                .push((s.tier, id.clone()));
        }
        by_stack
            .into_iter()
            .map(|(pos, mut v)| {
                v.sort();
                (pos, v.into_iter().map(|(_, id)| id).collect())
            })
            .collect()
    }

    /// Replaces the placement map with `assignment`, keeping geometry and
    /// required segments.
    pub fn with_assignment(&self, assignment: &BTreeMap<ContainerId, Slot>) -> YardState {
        let mut next = self.clone();
        next.placements = assignment.clone();
        next.required.retain(|id, _| assignment.contains_key(id));
        for (id, slot) in assignment {
            next.required.entry(id.clone()).or_insert(slot.segment);
        }
        next
    }
}

/// Number of occupied tiers strictly above `id` in its stack.
pub fn containers_above(yard: &YardState, id: &ContainerId) -> Result<usize, ModelError> {
    let slot = yard
        .slot_of(id)
        .ok_or_else(|| ModelError::UnknownContainer(id.clone()))?;
    Ok(yard
        .placements()
        .values()
        .filter(|s| s.stack() == slot.stack() && s.tier > slot.tier)
        .count())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    Floating {
        id: ContainerId,
        slot: Slot,
    },
    DuplicateOccupancy {
        slot: Slot,
        first: ContainerId,
        second: ContainerId,
    },
    TierOutOfRange {
        id: ContainerId,
        tier: u32,
        max_tier: u32,
    },
    OutOfBounds {
        id: ContainerId,
        slot: Slot,
    },
    SegmentMismatch {
        id: ContainerId,
        slot: Slot,
        expected: Segment,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Floating { id, slot } => write!(f, "{id} floats at {slot}"),
            Violation::DuplicateOccupancy {
                slot,
                first,
                second,
            } => write!(f, "{first} and {second} share {slot}"),
            Violation::TierOutOfRange { id, tier, max_tier } => {
                write!(f, "{id} at tier {tier}, limit {max_tier}")
            }
            Violation::OutOfBounds { id, slot } => write!(f, "{id} outside the grid at {slot}"),
            Violation::SegmentMismatch { id, slot, expected } => {
                write!(f, "{id} at {slot} belongs in segment {expected}")
            }
        }
    }
}

/// Reports every physical or segment rule broken by `yard`.
pub fn validate_yard(yard: &YardState) -> Result<(), Vec<Violation>> {
    let mut violations = Vec::new();
    let layout = yard.layout();
    let mut cells: BTreeMap<(u32, u32, u32), &ContainerId> = BTreeMap::new();

    for (id, slot) in yard.placements() {
        if slot.bay >= layout.length_bays || slot.row >= layout.width_rows {
            violations.push(Violation::OutOfBounds {
                id: id.clone(),
                slot: *slot,
            });
        }
        if slot.tier >= yard.max_tier() {
            violations.push(Violation::TierOutOfRange {
                id: id.clone(),
                tier: slot.tier,
                max_tier: yard.max_tier(),
            });
        }
        let grid_segment = yard.segment_of(slot.stack());
        let expected = yard.required_segment(id).unwrap_or(grid_segment);
        if slot.segment != grid_segment || slot.segment != expected {
            violations.push(Violation::SegmentMismatch {
                id: id.clone(),
                slot: *slot,
                expected,
            });
        }
        match cells.get(&(slot.bay, slot.row, slot.tier)) {
            Some(first) => violations.push(Violation::DuplicateOccupancy {
                slot: *slot,
                first: (*first).clone(),
                second: id.clone(),
            }),
            None => {
                cells.insert((slot.bay, slot.row, slot.tier), id);
            }
        }
    }

    for (id, slot) in yard.placements() {
        if slot.tier > 0 && !cells.contains_key(&(slot.bay, slot.row, slot.tier - 1)) {
            violations.push(Violation::Floating {
                id: id.clone(),
                slot: *slot,
            });
        }
    }

    if violations.is_empty() {
        Ok(())
    } else {
        Err(violations)
    }
}

/// One booked pickup.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruckVisit {
    pub container_id: ContainerId,
    pub carrier_id: Option<String>,
    /// Booking sequence number; higher means booked later.
    pub booked_at: u64,
    pub origin: VisitOrigin,
    /// Last block this visit may move to; `None` when unconstrained.
    pub deadline_block: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeBlock {
    pub index: usize,
    pub visits: Vec<TruckVisit>,
}

impl TimeBlock {
    pub fn new(index: usize) -> Self {
        TimeBlock {
            index,
            visits: Vec::new(),
        }
    }

    /// Live truck count for the block.
    pub fn truck_count(&self) -> usize {
        self.visits.len()
    }
}
