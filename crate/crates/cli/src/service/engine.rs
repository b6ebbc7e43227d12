//! Service state and the operations that change it. Everything here is
//! synchronous; the writer task in the parent module serializes access.

use std::collections::BTreeMap;

use axum::http::StatusCode;
use chrono::NaiveDate;
use ips_core::{
    classify_all, deadline_block, default_pickup_probability, departure_time, detect_congestion,
    histogram, is_congested, partition_segments, pickup_order, place_incremental, play_day,
    prepare, processing_time, propose_block, run_prepared, run_recursive, segment_for,
    slack_candidates, AppointmentRef, Booking, Classification, Container, ContainerId, Dataset,
    EngineConfig, HistogramBin, IncrementalOptions, NoObserver, OperationalCategory,
    PlacementError, PlacementRequest, RebalanceReport, Relocation, Scenario, ScenarioError,
    Schedule, Segment, Slot, StackClass, TruckVisit, VisitOrigin, YardState,
};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq)]
pub struct ApiError {
    pub status: StatusCode,
    pub message: String,
    pub version: u64,
}

#[derive(Debug, Clone)]
pub struct Engine {
    config: EngineConfig,
    today: NaiveDate,
    containers: Vec<Container>,
    classes: BTreeMap<ContainerId, Classification>,
    yard: YardState,
    schedule: Schedule,
    /// Bookings as they were asked for, before any shifting or rebalancing.
    requested: Schedule,
    version: u64,
}

/// Arrival registration; fields follow the manifest columns.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContainerInput {
    pub container_id: String,
    pub arrival_date: NaiveDate,
    pub free_days: u32,
    pub weight_tons: f64,
    #[serde(default)]
    pub cargo_type: String,
    #[serde(default)]
    pub pickup_probability: Option<f64>,
    #[serde(default)]
    pub consignee_id: String,
    #[serde(default)]
    pub carrier_id: Option<String>,
    #[serde(default)]
    pub carrier_visits_per_month: u32,
    #[serde(default)]
    pub owner_id: String,
    #[serde(default)]
    pub appointment_block: Option<usize>,
    #[serde(default)]
    pub destination: String,
}

impl ContainerInput {
    pub fn into_container(self) -> Container {
        let pickup_probability = self
            .pickup_probability
            .unwrap_or_else(|| default_pickup_probability(&self.cargo_type));
        Container {
            id: ContainerId::new(self.container_id),
            arrival_date: self.arrival_date,
            free_days: self.free_days,
            weight_tons: self.weight_tons,
            cargo_type: self.cargo_type,
            pickup_probability,
            consignee_id: self.consignee_id,
            carrier_id: self.carrier_id,
            carrier_visits_per_month: self.carrier_visits_per_month,
            owner_id: self.owner_id,
            appointment: self.appointment_block.map(AppointmentRef::pre_existing),
            destination: self.destination,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AddedContainer {
    pub version: u64,
    pub container_id: ContainerId,
    pub classification: Classification,
    pub slot: Slot,
    pub relocations: Vec<Relocation>,
    pub objective_value: f64,
    pub appointment_block: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AppointmentRequest {
    pub container_id: String,
    pub block: usize,
    #[serde(default)]
    pub dry_run: bool,
    #[serde(default)]
    pub expected_version: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BlockDelta {
    pub block: usize,
    pub before: usize,
    pub after: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct BookingOutcome {
    pub version: u64,
    pub dry_run: bool,
    pub committed: bool,
    pub container_id: ContainerId,
    pub requested_block: usize,
    pub assigned_block: usize,
    pub shifted: bool,
    pub previous_block: Option<usize>,
    pub slot: Option<Slot>,
    pub relocations: Vec<Relocation>,
    pub schedule_delta: Vec<BlockDelta>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RebalanceOutcome {
    pub version: u64,
    pub changed: bool,
    pub report: RebalanceReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct StackView {
    pub bay: u32,
    pub row: u32,
    pub segment: Segment,
    pub height: u32,
    pub containers: Vec<OccupantView>,
}

#[derive(Debug, Clone, Serialize)]
pub struct OccupantView {
    pub tier: u32,
    pub container_id: ContainerId,
    pub category: Option<OperationalCategory>,
    pub stack_class: Option<StackClass>,
    pub remaining_free_days: Option<i64>,
    pub demurrage: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct YardView {
    pub version: u64,
    pub bays: u32,
    pub rows: u32,
    pub max_tier: u32,
    pub capacity: usize,
    pub occupancy: usize,
    pub stacks: Vec<StackView>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BlockView {
    pub index: usize,
    pub m: usize,
    pub congested: bool,
    pub departure_time: f64,
    pub processing_time: f64,
    pub visits: Vec<TruckVisit>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScheduleView {
    pub version: u64,
    pub day: NaiveDate,
    pub m_max: usize,
    pub congested_blocks: usize,
    pub blocks: Vec<BlockView>,
}

#[derive(Debug, Clone, Serialize)]
pub struct HistogramView {
    pub version: u64,
    pub threshold: usize,
    pub bins: Vec<HistogramBin>,
}

#[derive(Debug, Clone, Serialize)]
pub struct LiveMetrics {
    pub pt: Option<f64>,
    pub m: usize,
    pub rehandles: usize,
}

impl Engine {
    /// No containers, yard split into three equal segments.
    pub fn empty(config: EngineConfig) -> Result<Engine, ScenarioError> {
        config.terminal.validate()?;
        let max_tier = config.terminal.max_tier;
        let plan = partition_segments(&config.yard, [1, 1, 1], max_tier)?;
        let yard = plan.empty_yard(config.yard, max_tier);
        let today = config.planning_date();
        let schedule = Schedule::new(today, config.terminal);
        Ok(Engine {
            today,
            containers: Vec::new(),
            classes: BTreeMap::new(),
            yard,
            requested: schedule.clone(),
            schedule,
            version: 0,
            config,
        })
    }

    /// Loads a manifest, stacking it the way the z-score scenario would.
    pub fn load(config: EngineConfig, dataset: &Dataset) -> Result<Engine, ScenarioError> {
        let prep = prepare(dataset, &config)?;
        let placed = run_prepared(dataset, &prep, Scenario::ZScoreSeg, &config, config.seed)?;
        Ok(Engine {
            today: dataset.current_date,
            containers: dataset.containers.clone(),
            classes: prep.classes,
            yard: placed.yard,
            requested: prep.schedule.clone(),
            schedule: prep.schedule,
            version: 0,
            config,
        })
    }

    pub fn version(&self) -> u64 {
        self.version
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    pub fn yard(&self) -> &YardState {
        &self.yard
    }

    pub fn schedule(&self) -> &Schedule {
        &self.schedule
    }

    pub fn containers(&self) -> &[Container] {
        &self.containers
    }

    pub fn classes(&self) -> &BTreeMap<ContainerId, Classification> {
        &self.classes
    }

    pub fn error(&self, status: StatusCode, message: impl Into<String>) -> ApiError {
        ApiError {
            status,
            message: message.into(),
            version: self.version,
        }
    }

    /// The containers with appointments taken from the live schedule.
    pub fn dataset(&self) -> Dataset {
        let containers = self
            .containers
            .iter()
            .map(|c| {
                let live = self.schedule.visits().find(|v| v.container_id == c.id);
                Container {
                    appointment: live.map(|v| AppointmentRef {
                        block: self.schedule.block_of(&c.id).expect("visit is booked"),
                        origin: v.origin,
                    }),
                    ..c.clone()
                }
            })
            .collect();
        Dataset {
            containers,
            current_date: self.today,
        }
    }

    fn incremental_options(&self) -> IncrementalOptions {
        IncrementalOptions {
            weights: self.config.weights,
            ..IncrementalOptions::default()
        }
    }

    fn placement_request(
        &self,
        id: &ContainerId,
        category: OperationalCategory,
    ) -> PlacementRequest {
        PlacementRequest {
            id: id.clone(),
            segment: if self.yard.is_segmented() {
                segment_for(category)
            } else {
                Segment::Unsegmented
            },
            demurrage: category == OperationalCategory::Cat3,
        }
    }

    fn placement_error(&self, e: PlacementError) -> ApiError {
        match e {
            PlacementError::SegmentFull { .. } | PlacementError::Infeasible { .. } => {
                self.error(StatusCode::CONFLICT, e.to_string())
            }
            other => self.error(StatusCode::BAD_REQUEST, other.to_string()),
        }
    }

    pub fn add_container(&mut self, input: ContainerInput) -> Result<AddedContainer, ApiError> {
        let container = input.into_container();
        container
            .validate()
            .map_err(|e| self.error(StatusCode::BAD_REQUEST, e.to_string()))?;
        if self.containers.iter().any(|c| c.id == container.id) {
            return Err(self.error(
                StatusCode::CONFLICT,
                format!("container {} is already registered", container.id),
            ));
        }
        let blocks = self.schedule.blocks().len();
        if let Some(appt) = container.appointment {
            if appt.block >= blocks {
                return Err(self.error(
                    StatusCode::BAD_REQUEST,
                    format!("block {} is outside the {blocks}-block day", appt.block),
                ));
            }
        }

        let mut containers = self.containers.clone();
        containers.push(container.clone());
        let classes = classify_all(&containers, self.today, &self.config.coefficients)
            .map_err(|e| self.error(StatusCode::BAD_REQUEST, e.to_string()))?;
        let class = classes[&container.id];

        let mut schedule = self.schedule.clone();
        let mut requested = self.requested.clone();
        if let Some(appt) = container.appointment {
            let booking = Booking {
                carrier_id: container.carrier_id.clone(),
                deadline_block: deadline_block(class.remaining_free_days, blocks),
                ..Booking::pre_existing(container.id.clone(), appt.block)
            };
            for s in [&mut schedule, &mut requested] {
                s.book(booking.clone())
                    .map_err(|e| self.error(StatusCode::BAD_REQUEST, e.to_string()))?;
            }
        }

        let request = self.placement_request(&container.id, class.operational_category);
        let pickup = pickup_order(&classes, &schedule);
        let plan = place_incremental(&self.yard, &request, &pickup, &self.incremental_options())
            .map_err(|e| self.placement_error(e))?;

        self.yard = plan.apply(&self.yard);
        self.containers = containers;
        self.classes = classes;
        self.schedule = schedule;
        self.requested = requested;
        self.version += 1;
        Ok(AddedContainer {
            version: self.version,
            slot: plan.assignment[&container.id],
            container_id: container.id,
            classification: class,
            relocations: plan.relocations,
            objective_value: plan.objective_value,
            appointment_block: container.appointment.map(|a| a.block),
        })
    }

    pub fn book(&mut self, req: AppointmentRequest) -> Result<BookingOutcome, ApiError> {
        let id = ContainerId::new(req.container_id);
        let Some(container) = self.containers.iter().find(|c| c.id == id).cloned() else {
            return Err(self.error(StatusCode::NOT_FOUND, format!("unknown container {id}")));
        };
        let blocks = self.schedule.blocks().len();
        if req.block >= blocks {
            return Err(self.error(
                StatusCode::BAD_REQUEST,
                format!("block {} is outside the {blocks}-block day", req.block),
            ));
        }
        if !req.dry_run {
            if let Some(v) = req.expected_version.filter(|&v| v != self.version) {
                return Err(self.error(
                    StatusCode::CONFLICT,
                    format!("state moved from version {v} to {}", self.version),
                ));
            }
        }

        let class = self.classes[&id];
        let deadline = deadline_block(class.remaining_free_days, blocks);
        let mut schedule = self.schedule.clone();
        let previous = schedule.block_of(&id);
        let origin = match previous {
            Some(_) => schedule.cancel(&id).expect("booked visit").origin,
            None => VisitOrigin::PreExisting,
        };
        let Some(assigned) = propose_block(&schedule, req.block, deadline) else {
            return Err(self.error(
                StatusCode::CONFLICT,
                format!("no block with spare capacity for {id} within its deadline"),
            ));
        };
        let booking = Booking {
            container_id: id.clone(),
            carrier_id: container.carrier_id.clone(),
            block: assigned,
            origin,
            deadline_block: deadline,
        };
        schedule
            .book(booking.clone())
            .map_err(|e| self.error(StatusCode::BAD_REQUEST, e.to_string()))?;

        // re-seat the container for its new pickup position
        let mut yard = self.yard.clone();
        yard.remove(&id);
        let request = self.placement_request(&id, class.operational_category);
        let pickup = pickup_order(&self.classes, &schedule);
        let plan = place_incremental(&yard, &request, &pickup, &self.incremental_options())
            .map_err(|e| self.placement_error(e))?;

        let schedule_delta = self
            .schedule
            .counts()
            .into_iter()
            .zip(schedule.counts())
            .enumerate()
            .filter(|(_, (a, b))| a != b)
            .map(|(block, (before, after))| BlockDelta {
                block,
                before,
                after,
            })
            .collect();

        if !req.dry_run {
            let mut requested = self.requested.clone();
            if requested.block_of(&id).is_some() {
                let _ = requested.cancel(&id);
            }
            requested
                .book(Booking {
                    block: req.block,
                    ..booking
                })
                .map_err(|e| self.error(StatusCode::BAD_REQUEST, e.to_string()))?;
            self.requested = requested;
            self.schedule = schedule;
            self.yard = plan.apply(&yard);
            self.version += 1;
        }
        Ok(BookingOutcome {
            version: self.version,
            dry_run: req.dry_run,
            committed: !req.dry_run,
            slot: plan.assignment.get(&id).copied(),
            container_id: id,
            requested_block: req.block,
            assigned_block: assigned,
            shifted: assigned != req.block,
            previous_block: previous,
            relocations: plan.relocations,
            schedule_delta,
        })
    }

    pub fn rebalance(&mut self) -> RebalanceOutcome {
        let candidates = slack_candidates(&self.containers, &self.classes);
        let (after, report) = match run_recursive(&self.schedule, &candidates, &mut NoObserver) {
            Ok(r) => r,
            Err(never) => match never {},
        };
        let changed = after != self.schedule;
        if changed {
            self.schedule = after;
            self.version += 1;
        }
        RebalanceOutcome {
            version: self.version,
            changed,
            report,
        }
    }

    /// Adopts the yard and schedule of a finished optimization run.
    pub fn adopt(&mut self, yard: YardState, schedule: Schedule) {
        self.yard = yard;
        self.schedule = schedule;
        self.version += 1;
    }

    pub fn yard_view(&self) -> YardView {
        let layout = self.yard.layout();
        let stacks = self
            .yard
            .stack_positions()
            .into_iter()
            .map(|pos| {
                let containers: Vec<OccupantView> = self
                    .yard
                    .stack(pos)
                    .into_iter()
                    .map(|(tier, id)| {
                        let k = self.classes.get(&id);
                        OccupantView {
                            tier,
                            category: k.map(|k| k.operational_category),
                            stack_class: k.map(|k| k.stack_class),
                            remaining_free_days: k.map(|k| k.remaining_free_days),
                            demurrage: k.is_some_and(|k| {
                                k.operational_category == OperationalCategory::Cat3
                            }),
                            container_id: id,
                        }
                    })
                    .collect();
                StackView {
                    bay: pos.bay,
                    row: pos.row,
                    segment: self.yard.segment_of(pos),
                    height: containers.len() as u32,
                    containers,
                }
            })
            .collect();
        YardView {
            version: self.version,
            bays: layout.length_bays,
            rows: layout.width_rows,
            max_tier: self.yard.max_tier(),
            capacity: layout.capacity(self.yard.max_tier()),
            occupancy: self.yard.occupancy(),
            stacks,
        }
    }

    pub fn schedule_view(&self) -> ScheduleView {
        let params = self.schedule.params();
        let blocks = self
            .schedule
            .blocks()
            .iter()
            .map(|b| {
                let m = b.truck_count();
                BlockView {
                    index: b.index,
                    m,
                    congested: is_congested(m, params),
                    departure_time: departure_time(m, params),
                    processing_time: processing_time(m, params),
                    visits: b.visits.clone(),
                }
            })
            .collect();
        ScheduleView {
            version: self.version,
            day: self.schedule.day(),
            m_max: self.schedule.serviceable_max(),
            congested_blocks: detect_congestion(&self.schedule).len(),
            blocks,
        }
    }

    pub fn histogram_view(&self) -> HistogramView {
        HistogramView {
            version: self.version,
            threshold: self.schedule.serviceable_max(),
            bins: histogram(&self.requested, &self.schedule),
        }
    }

    /// The day played against the live yard and schedule.
    pub fn live_metrics(&self) -> LiveMetrics {
        let pickup = pickup_order(&self.classes, &self.schedule);
        let day = play_day(&self.yard, &self.schedule, &pickup);
        LiveMetrics {
            pt: day.pt,
            m: day.served,
            rehandles: day.rehandles,
        }
    }
}
