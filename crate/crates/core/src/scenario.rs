//! End-to-end evaluation of the four yard strategies.
//!
//! Every scenario starts from the same manifest and as-ingested
//! appointments. The strategies differ in how containers are stacked and
//! whether appointments are rebalanced:
//!
//! 1. random stacking over the whole yard,
//! 2. random stacking inside category segments,
//! 3. optimised stacking inside segments,
//! 4. as 3, after recursive rebalancing and slack filling, with the
//!    stacking re-solved overnight for the updated pickup order.
//!
//! The day is then played out. In each block the earliest-booked
//! `min(M_t, M_max)` visits are served and the rest are lost. Served trucks
//! retrieve in block order and then pickup order. Each one takes
//! `DT(M_t) + IO` plus `T_rehandle` for every blocker lifted.

use std::collections::BTreeMap;
use std::fmt;

use chrono::NaiveDate;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::EngineConfig;
use crate::model::{Container, ContainerId, ModelError, Segment, VisitOrigin, YardState};
use crate::placement::{
    partition_segments, place_randomly, segment_for, simulate_retrievals, solve_batch, Optimality,
    PickupKey, PickupOrder, PlacementError, PlacementModel, PlacementRequest, SegmentPlan,
};
use crate::scheduler::{
    deadline_block, departure_time, internal_op_time, run_recursive, Booking, NoObserver,
    RebalanceReport, Schedule, ScheduleError, SlackCandidate,
};
use crate::zscore::{classify_all, Classification, ClassifyError, OperationalCategory};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    RandomNoSeg,
    RandomSeg,
    ZScoreSeg,
    Ips,
}

impl Scenario {
    pub const ALL: [Scenario; 4] = [
        Scenario::RandomNoSeg,
        Scenario::RandomSeg,
        Scenario::ZScoreSeg,
        Scenario::Ips,
    ];

    pub fn number(self) -> u8 {
        match self {
            Scenario::RandomNoSeg => 1,
            Scenario::RandomSeg => 2,
            Scenario::ZScoreSeg => 3,
            Scenario::Ips => 4,
        }
    }

    pub fn from_number(n: u8) -> Option<Scenario> {
        Scenario::ALL.into_iter().find(|s| s.number() == n)
    }

    pub fn is_random(self) -> bool {
        matches!(self, Scenario::RandomNoSeg | Scenario::RandomSeg)
    }

    pub fn label(self) -> &'static str {
        match self {
            Scenario::RandomNoSeg => "random_no_seg",
            Scenario::RandomSeg => "random_seg",
            Scenario::ZScoreSeg => "zscore_seg",
            Scenario::Ips => "ips",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error(transparent)]
    Classify(#[from] ClassifyError),
    #[error(transparent)]
    Placement(#[from] PlacementError),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

impl ScenarioError {
    /// Capacity problems, as opposed to bad input.
    pub fn is_infeasible(&self) -> bool {
        matches!(
            self,
            ScenarioError::Placement(
                PlacementError::Infeasible { .. }
                    | PlacementError::Sizing { .. }
                    | PlacementError::SegmentFull { .. }
                    | PlacementError::TooFewBays { .. }
            ) | ScenarioError::Model(ModelError::OverCapacity { .. })
        )
    }
}

/// A validated manifest and the date it is planned for.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub containers: Vec<Container>,
    pub current_date: NaiveDate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockLoad {
    pub block: usize,
    pub demand: usize,
    pub serviced: usize,
    pub threshold: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioResult {
    pub scenario: Scenario,
    /// Mean minutes per served truck; `None` when nobody was served.
    pub pt: Option<f64>,
    /// Trucks served over the day.
    pub m: usize,
    pub histogram: Vec<BlockLoad>,
    pub seed: Option<u64>,
    pub rehandles: usize,
    pub optimality: Option<Optimality>,
    pub yard: YardState,
    pub schedule: Schedule,
    pub rebalance: Option<RebalanceReport>,
}

/// Intermediate products shared by the scenarios.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub classes: BTreeMap<ContainerId, Classification>,
    pub schedule: Schedule,
    pub segments: SegmentPlan,
    pub empty_yard: YardState,
}

/// Classifies the manifest, books the as-ingested appointments (in
/// manifest order) and sizes the segments.
pub fn prepare(dataset: &Dataset, config: &EngineConfig) -> Result<Prepared, ScenarioError> {
    let params = config.terminal;
    params.validate()?;
    for c in &dataset.containers {
        c.validate()?;
    }
    let classes = classify_all(
        &dataset.containers,
        dataset.current_date,
        &config.coefficients,
    )?;
    let mut schedule = Schedule::new(dataset.current_date, params);
    for c in &dataset.containers {
        if let Some(appt) = c.appointment {
            schedule.book(Booking {
                container_id: c.id.clone(),
                carrier_id: c.carrier_id.clone(),
                block: appt.block,
                origin: appt.origin,
                deadline_block: deadline_block(
                    classes[&c.id].remaining_free_days,
                    params.blocks_per_day,
                ),
            })?;
        }
    }
    let mut census = [0usize; 3];
    for k in classes.values() {
        census[category_index(k.operational_category)] += 1;
    }
    let mut layout = config.yard;
    layout.total_container_census = dataset.containers.len() as u32;
    layout.validate(params.max_tier)?;
    let segments = partition_segments(&layout, census, params.max_tier)?;
    let empty_yard = segments.empty_yard(layout, params.max_tier);
    Ok(Prepared {
        classes,
        schedule,
        segments,
        empty_yard,
    })
}

fn category_index(c: OperationalCategory) -> usize {
    match c {
        OperationalCategory::Cat1 => 0,
        OperationalCategory::Cat2 => 1,
        OperationalCategory::Cat3 => 2,
    }
}

/// Pickup order given the blocks currently booked in `schedule`.
pub fn pickup_order(
    classes: &BTreeMap<ContainerId, Classification>,
    schedule: &Schedule,
) -> PickupOrder {
    PickupOrder::from_keys(classes.iter().map(|(id, k)| {
        (
            id.clone(),
            PickupKey {
                appointment_block: schedule.block_of(id),
                stack_class: k.stack_class,
                remaining_free_days: k.remaining_free_days,
            },
        )
    }))
}

fn requests(
    containers: &[Container],
    classes: &BTreeMap<ContainerId, Classification>,
    segmented: bool,
) -> Vec<PlacementRequest> {
    containers
        .iter()
        .map(|c| {
            let k = &classes[&c.id];
            PlacementRequest {
                id: c.id.clone(),
                segment: if segmented {
                    segment_for(k.operational_category)
                } else {
                    Segment::Unsegmented
                },
                demurrage: k.operational_category == OperationalCategory::Cat3,
            }
        })
        .collect()
}

/// Unbooked containers as candidates for slack filling, in manifest order.
pub fn slack_candidates(
    containers: &[Container],
    classes: &BTreeMap<ContainerId, Classification>,
) -> Vec<SlackCandidate> {
    containers
        .iter()
        .filter(|c| c.appointment.is_none())
        .map(|c| {
            let k = &classes[&c.id];
            SlackCandidate {
                container_id: c.id.clone(),
                carrier_id: c.carrier_id.clone(),
                category: k.operational_category,
                stack_class: k.stack_class,
                remaining_free_days: k.remaining_free_days,
            }
        })
        .collect()
}

pub fn run_scenario(
    dataset: &Dataset,
    scenario: Scenario,
    config: &EngineConfig,
    seed: u64,
) -> Result<ScenarioResult, ScenarioError> {
    let prep = prepare(dataset, config)?;
    run_prepared(dataset, &prep, scenario, config, seed)
}

pub fn run_prepared(
    dataset: &Dataset,
    prep: &Prepared,
    scenario: Scenario,
    config: &EngineConfig,
    seed: u64,
) -> Result<ScenarioResult, ScenarioError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut schedule = prep.schedule.clone();
    let mut rebalance = None;
    let mut optimality = None;

    let yard = match scenario {
        Scenario::RandomNoSeg => {
            let mut layout = *prep.empty_yard.layout();
            layout.total_container_census = dataset.containers.len() as u32;
            let open = YardState::new(layout, config.terminal.max_tier);
            let reqs = requests(&dataset.containers, &prep.classes, false);
            place_randomly(&open, &reqs, &mut rng)?
        }
        Scenario::RandomSeg => {
            let reqs = requests(&dataset.containers, &prep.classes, true);
            place_randomly(&prep.empty_yard, &reqs, &mut rng)?
        }
        Scenario::ZScoreSeg | Scenario::Ips => {
            if scenario == Scenario::Ips {
                let cands = slack_candidates(&dataset.containers, &prep.classes);
                let (after, report) = match run_recursive(&schedule, &cands, &mut NoObserver) {
                    Ok(r) => r,
                    Err(never) => match never {},
                };
                schedule = after;
                rebalance = Some(report);
            }
            let pickup = pickup_order(&prep.classes, &schedule);
            let reqs = requests(&dataset.containers, &prep.classes, true);
            let model = PlacementModel::new(&prep.empty_yard, &reqs, &pickup, config.weights)?;
            let plan = solve_batch(&model, config.budget)?;
            optimality = Some(plan.optimality);
            plan.apply(&prep.empty_yard)
        }
    };

    let pickup = pickup_order(&prep.classes, &schedule);
    let day = play_day(&yard, &schedule, &pickup);
    Ok(ScenarioResult {
        scenario,
        pt: day.pt,
        m: day.served,
        histogram: day.histogram,
        seed: scenario.is_random().then_some(seed),
        rehandles: day.rehandles,
        optimality,
        yard,
        schedule,
        rebalance,
    })
}

/// Outcome of playing one day against a stacked yard.
#[derive(Debug, Clone, PartialEq)]
pub struct DayOutcome {
    pub pt: Option<f64>,
    pub served: usize,
    pub rehandles: usize,
    pub histogram: Vec<BlockLoad>,
    /// Minutes per served truck, in retrieval order.
    pub truck_minutes: Vec<(ContainerId, f64)>,
}

pub fn play_day(yard: &YardState, schedule: &Schedule, pickup: &PickupOrder) -> DayOutcome {
    let params = schedule.params();
    let m_max = schedule.serviceable_max();
    let io = internal_op_time(params);
    let mut sequence = Vec::new();
    let mut base_minutes = Vec::new();
    let mut histogram = Vec::new();
    for block in schedule.blocks() {
        let mut by_booking: Vec<_> = block.visits.iter().collect();
        by_booking.sort_by_key(|v| v.booked_at);
        let served = block.truck_count().min(m_max);
        let mut picked: Vec<&ContainerId> = by_booking[..served]
            .iter()
            .map(|v| &v.container_id)
            .collect();
        picked.sort_by_key(|id| (pickup.rank(id).unwrap_or(usize::MAX), (*id).clone()));
        let dt = departure_time(block.truck_count(), params);
        for id in picked {
            sequence.push(id.clone());
            base_minutes.push(dt + io);
        }
        histogram.push(BlockLoad {
            block: block.index,
            demand: block.truck_count(),
            serviced: served,
            threshold: m_max,
        });
    }
    let lifted = simulate_retrievals(yard, &sequence);
    let truck_minutes: Vec<(ContainerId, f64)> = sequence
        .into_iter()
        .zip(base_minutes)
        .zip(&lifted)
        .map(|((id, base), &n)| (id, base + n as f64 * params.rehandle_minutes))
        .collect();
    let served = truck_minutes.len();
    let pt =
        (served > 0).then(|| truck_minutes.iter().map(|(_, t)| t).sum::<f64>() / served as f64);
    DayOutcome {
        pt,
        served,
        rehandles: lifted.iter().sum(),
        histogram,
        truck_minutes,
    }
}

/// Runs all four scenarios with one seed.
pub fn run_ladder(
    dataset: &Dataset,
    config: &EngineConfig,
    seed: u64,
) -> Result<Vec<ScenarioResult>, ScenarioError> {
    let prep = prepare(dataset, config)?;
    Scenario::ALL
        .into_iter()
        .map(|s| run_prepared(dataset, &prep, s, config, seed))
        .collect()
}

/// Visits that were created by the planner rather than ingested.
pub fn created_visits(schedule: &Schedule) -> Vec<ContainerId> {
    schedule
        .visits()
        .filter(|v| v.origin == VisitOrigin::IpsCreated)
        .map(|v| v.container_id.clone())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn date() -> NaiveDate {
        NaiveDate::from_ymd_opt(2024, 3, 15).unwrap()
    }

    fn config() -> EngineConfig {
        EngineConfig {
            current_date: Some(date()),
            ..EngineConfig::default()
        }
    }

    #[test]
    fn empty_dataset_has_undefined_pt() {
        let ds = Dataset {
            containers: vec![],
            current_date: date(),
        };
        for s in Scenario::ALL {
            let r = run_scenario(&ds, s, &config(), 1).unwrap();
            assert_eq!(r.m, 0);
            assert_eq!(r.pt, None);
        }
    }

    #[test]
    fn scenario_numbers_round_trip() {
        for s in Scenario::ALL {
            assert_eq!(Scenario::from_number(s.number()), Some(s));
        }
        assert_eq!(Scenario::from_number(5), None);
    }

    #[test]
    fn single_booked_container_costs_io_plus_half_minute() {
        let c = Container::new(
            "a",
            NaiveDate::from_ymd_opt(2024, 3, 14).unwrap(),
            5,
            20.0,
            0.5,
        )
        .with_appointment(0);
        let ds = Dataset {
            containers: vec![c],
            current_date: date(),
        };
        let r = run_scenario(&ds, Scenario::ZScoreSeg, &config(), 1).unwrap();
        assert_eq!(r.m, 1);
        assert_eq!(r.pt, Some(30.5));
        assert_eq!(r.histogram[0].serviced, 1);
    }
}
