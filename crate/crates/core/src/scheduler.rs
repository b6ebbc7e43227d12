//! Gate timing, congestion detection and appointment rebalancing.
//!
//! A block is congested when its departure time exceeds the internal
//! process time. Rebalancing evicts the latest bookings from congested
//! blocks into blocks with slack; slack filling then offers appointments
//! to unbooked containers, demurrage first. [`run_recursive`] alternates
//! the two until neither changes anything.

use std::collections::BTreeSet;
use std::convert::Infallible;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{ContainerId, TerminalParams, TimeBlock, TruckVisit, VisitOrigin};
use crate::zscore::{OperationalCategory, StackClass};

/// `IO = T_load + T_inspect`.
pub fn internal_op_time(params: &TerminalParams) -> f64 {
    params.load_minutes + params.inspect_minutes
}

/// `DT = (m / S_gate) · T_clear`. Pass the live block count for
/// operations and the yard truck limit for capacity planning.
pub fn departure_time(m: usize, params: &TerminalParams) -> f64 {
    m as f64 / f64::from(params.gate_lanes) * params.clear_minutes
}

/// `PT = DT + IO`.
pub fn processing_time(m: usize, params: &TerminalParams) -> f64 {
    departure_time(m, params) + internal_op_time(params)
}

/// Whether `m` trucks in one block congest the gate (strictly `DT > IO`).
pub fn is_congested(m: usize, params: &TerminalParams) -> bool {
    departure_time(m, params) > internal_op_time(params)
}

/// Last block a container may be collected in without leaving its free
/// days. Demurrage containers are unconstrained.
pub fn deadline_block(remaining_free_days: i64, blocks_per_day: usize) -> Option<usize> {
    if remaining_free_days <= 0 {
        return None;
    }
    let last = blocks_per_day.saturating_sub(1);
    let days = usize::try_from(remaining_free_days).unwrap_or(usize::MAX);
    Some(
        days.saturating_mul(blocks_per_day)
            .saturating_sub(1)
            .min(last),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Congestion {
    pub block: usize,
    pub trucks: usize,
    pub excess: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScheduleError {
    #[error("block {block} outside the {blocks}-block day")]
    BlockOutOfRange { block: usize, blocks: usize },
    #[error("container {0} already has a visit today")]
    DuplicateVisit(ContainerId),
    #[error("container {0} has no visit today")]
    UnknownVisit(ContainerId),
}

/// A visit to add to the schedule.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Booking {
    pub container_id: ContainerId,
    pub carrier_id: Option<String>,
    pub block: usize,
    pub origin: VisitOrigin,
    pub deadline_block: Option<usize>,
}

impl Booking {
    pub fn pre_existing(container_id: impl Into<ContainerId>, block: usize) -> Self {
        Booking {
            container_id: container_id.into(),
            carrier_id: None,
            block,
            origin: VisitOrigin::PreExisting,
            deadline_block: None,
        }
    }
}

/// Truck visits of one operational day, split into fixed blocks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    day: NaiveDate,
    blocks: Vec<TimeBlock>,
    params: TerminalParams,
    next_booking: u64,
}

impl Schedule {
    pub fn new(day: NaiveDate, params: TerminalParams) -> Self {
        Schedule {
            day,
            blocks: (0..params.blocks_per_day).map(TimeBlock::new).collect(),
            params,
            next_booking: 0,
        }
    }

    /// A schedule with `counts[b]` anonymous pre-existing visits in block
    /// `b`, booked block by block.
    pub fn from_counts(day: NaiveDate, params: TerminalParams, counts: &[usize]) -> Self {
        let mut s = Schedule::new(day, params);
        for (b, &n) in counts.iter().enumerate() {
            for i in 0..n {
                s.book(Booking::pre_existing(format!("b{b}-{i}"), b))
                    .expect("counts fit the day");
            }
        }
        s
    }

    /// Adds a visit and returns its booking sequence number.
    pub fn book(&mut self, booking: Booking) -> Result<u64, ScheduleError> {
        if booking.block >= self.blocks.len() {
            return Err(ScheduleError::BlockOutOfRange {
                block: booking.block,
                blocks: self.blocks.len(),
            });
        }
        if self.block_of(&booking.container_id).is_some() {
            return Err(ScheduleError::DuplicateVisit(booking.container_id));
        }
        let seq = self.next_booking;
        self.next_booking += 1;
        self.blocks[booking.block].visits.push(TruckVisit {
            container_id: booking.container_id,
            carrier_id: booking.carrier_id,
            booked_at: seq,
            origin: booking.origin,
            deadline_block: booking.deadline_block,
        });
        Ok(seq)
    }

    pub fn cancel(&mut self, id: &ContainerId) -> Result<TruckVisit, ScheduleError> {
        for block in &mut self.blocks {
            if let Some(i) = block.visits.iter().position(|v| &v.container_id == id) {
                return Ok(block.visits.remove(i));
            }
        }
        Err(ScheduleError::UnknownVisit(id.clone()))
    }

    pub fn day(&self) -> NaiveDate {
        self.day
    }

    pub fn params(&self) -> &TerminalParams {
        &self.params
    }

    pub fn blocks(&self) -> &[TimeBlock] {
        &self.blocks
    }

    pub fn serviceable_max(&self) -> usize {
        self.params.serviceable_max()
    }

    pub fn counts(&self) -> Vec<usize> {
        self.blocks.iter().map(TimeBlock::truck_count).collect()
    }

    pub fn total_visits(&self) -> usize {
        self.blocks.iter().map(TimeBlock::truck_count).sum()
    }

    pub fn count_by_origin(&self, origin: VisitOrigin) -> usize {
        self.visits().filter(|v| v.origin == origin).count()
    }

    pub fn visits(&self) -> impl Iterator<Item = &TruckVisit> {
        self.blocks.iter().flat_map(|b| b.visits.iter())
    }

    pub fn block_of(&self, id: &ContainerId) -> Option<usize> {
        self.blocks
            .iter()
            .position(|b| b.visits.iter().any(|v| &v.container_id == id))
    }

    fn move_visit(&mut self, id: &ContainerId, from: usize, to: usize) {
        let i = self.blocks[from]
            .visits
            .iter()
            .position(|v| &v.container_id == id)
            .expect("visit present in source block");
        let v = self.blocks[from].visits.remove(i);
        self.blocks[to].visits.push(v);
        self.blocks[to].visits.sort_by_key(|v| v.booked_at);
    }
}

/// Blocks whose departure time exceeds the internal process time.
pub fn detect_congestion(schedule: &Schedule) -> Vec<Congestion> {
    let m_max = schedule.serviceable_max();
    schedule
        .blocks
        .iter()
        .filter(|b| is_congested(b.truck_count(), &schedule.params))
        .map(|b| Congestion {
            block: b.index,
            trucks: b.truck_count(),
            excess: b.truck_count().saturating_sub(m_max),
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MoveReason {
    Congestion,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VisitMove {
    pub container_id: ContainerId,
    pub from_block: usize,
    pub to_block: usize,
    pub reason: MoveReason,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CreatedAppointment {
    pub container_id: ContainerId,
    pub block: usize,
}

/// A visit that had to stay in a congested block.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnresolvedVisit {
    pub container_id: ContainerId,
    pub block: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RebalanceReport {
    pub moves: Vec<VisitMove>,
    pub created: Vec<CreatedAppointment>,
    /// Visits left in a congested block because no legal target existed.
    pub unresolved: Vec<UnresolvedVisit>,
    /// Passes that changed the schedule.
    pub iterations: usize,
    /// No congested block remains.
    pub converged: bool,
}

impl RebalanceReport {
    fn absorb(&mut self, other: RebalanceReport) {
        self.moves.extend(other.moves);
        self.created.extend(other.created);
    }
}

fn target_block(
    counts: &[usize],
    m_max: usize,
    from: usize,
    deadline: Option<usize>,
) -> Option<usize> {
    let allowed = |c: usize| counts[c] < m_max && deadline.is_none_or(|d| c <= d);
    (from + 1..counts.len())
        .find(|&c| allowed(c))
        .or_else(|| (0..from).find(|&c| allowed(c)))
}

/// Block a new booking for `requested` should land in: the requested block
/// while it has room and meets the deadline, otherwise the block
/// [`rebalance`] would move the visit to. `None` when no block qualifies.
pub fn propose_block(
    schedule: &Schedule,
    requested: usize,
    deadline: Option<usize>,
) -> Option<usize> {
    let counts = schedule.counts();
    if requested >= counts.len() {
        return None;
    }
    let m_max = schedule.serviceable_max();
    if counts[requested] < m_max && deadline.is_none_or(|d| requested <= d) {
        return Some(requested);
    }
    target_block(&counts, m_max, requested, deadline)
}

/// Moves visits out of congested blocks until nothing more can move.
///
/// Blocks are scanned in order. Within a congested block the latest
/// bookings leave first, each to the earliest later block with slack that
/// respects its deadline, or failing that the earliest earlier one.
/// Visits with no legal target stay put and are listed as unresolved.
pub fn rebalance(schedule: &Schedule) -> (Schedule, RebalanceReport) {
    let mut s = schedule.clone();
    let m_max = s.serviceable_max();
    let mut report = RebalanceReport::default();
    let mut stuck: BTreeSet<ContainerId> = BTreeSet::new();

    loop {
        let mut moved = false;
        for b in 0..s.blocks.len() {
            let excess = s.blocks[b].truck_count().saturating_sub(m_max);
            if excess == 0 || !is_congested(s.blocks[b].truck_count(), &s.params) {
                continue;
            }
            let mut evict: Vec<&TruckVisit> = s.blocks[b].visits.iter().collect();
            evict.sort_by_key(|v| std::cmp::Reverse(v.booked_at));
            let evict: Vec<(ContainerId, Option<usize>)> = evict
                .into_iter()
                .map(|v| (v.container_id.clone(), v.deadline_block))
                .collect();

            let mut remaining = excess;
            let mut blocked = Vec::new();
            for (id, deadline) in evict {
                if remaining == 0 {
                    break;
                }
                match target_block(&s.counts(), m_max, b, deadline) {
                    Some(to) => {
                        s.move_visit(&id, b, to);
                        stuck.remove(&id);
                        report.moves.push(VisitMove {
                            container_id: id,
                            from_block: b,
                            to_block: to,
                            reason: MoveReason::Congestion,
                        });
                        remaining -= 1;
                        moved = true;
                    }
                    None => blocked.push(id),
                }
            }
            // the latest `remaining` of those that could not leave
            stuck.extend(blocked.into_iter().take(remaining));
        }
        if !moved {
            break;
        }
        report.iterations += 1;
    }

    report.unresolved = stuck
        .into_iter()
        .filter_map(|id| {
            let block = s.block_of(&id)?;
            is_congested(s.blocks[block].truck_count(), &s.params).then_some(UnresolvedVisit {
                container_id: id,
                block,
            })
        })
        .collect();
    report
        .unresolved
        .sort_by(|a, b| (a.block, &a.container_id).cmp(&(b.block, &b.container_id)));
    report.converged = detect_congestion(&s).is_empty();
    (s, report)
}

/// An unbooked container that may be offered an appointment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlackCandidate {
    pub container_id: ContainerId,
    pub carrier_id: Option<String>,
    pub category: OperationalCategory,
    pub stack_class: StackClass,
    pub remaining_free_days: i64,
}

/// Offers appointments into blocks below the serviceable maximum, earliest
/// block first. Demurrage containers go first, then unbooked ones within
/// free days; inside each group higher stacking classes and fewer
/// remaining days lead. Containers already booked are skipped.
pub fn fill_slack(
    schedule: &Schedule,
    candidates: &[SlackCandidate],
) -> (Schedule, RebalanceReport) {
    let mut s = schedule.clone();
    let m_max = s.serviceable_max();
    let days = s.blocks.len();
    let mut report = RebalanceReport::default();

    let mut queue: Vec<&SlackCandidate> = candidates
        .iter()
        .filter(|c| c.category != OperationalCategory::Cat1)
        .filter(|c| s.block_of(&c.container_id).is_none())
        .collect();
    queue.sort_by(|a, b| {
        let group = |c: &SlackCandidate| c.category != OperationalCategory::Cat3;
        group(a)
            .cmp(&group(b))
            .then(b.stack_class.rank().cmp(&a.stack_class.rank()))
            .then(a.remaining_free_days.cmp(&b.remaining_free_days))
            .then_with(|| a.container_id.cmp(&b.container_id))
    });
    let mut seen = BTreeSet::new();
    queue.retain(|c| seen.insert(c.container_id.clone()));

    let mut queue = queue.into_iter();
    'blocks: for b in 0..days {
        while s.blocks[b].truck_count() < m_max {
            let Some(c) = queue.next() else { break 'blocks };
            s.book(Booking {
                container_id: c.container_id.clone(),
                carrier_id: c.carrier_id.clone(),
                block: b,
                origin: VisitOrigin::IpsCreated,
                deadline_block: deadline_block(c.remaining_free_days, days),
            })
            .expect("candidate unbooked and block in range");
            report.created.push(CreatedAppointment {
                container_id: c.container_id.clone(),
                block: b,
            });
        }
    }
    if !report.created.is_empty() {
        report.iterations = 1;
    }
    report.converged = detect_congestion(&s).is_empty();
    (s, report)
}

/// Hook invoked for every appointment created during [`run_recursive`],
/// typically to seat the container in the yard.
pub trait AppointmentObserver {
    type Error;

    fn appointment_created(&mut self, created: &CreatedAppointment) -> Result<(), Self::Error>;
}

/// Observer that ignores every notification.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoObserver;

impl AppointmentObserver for NoObserver {
    type Error = Infallible;

    fn appointment_created(&mut self, _: &CreatedAppointment) -> Result<(), Infallible> {
        Ok(())
    }
}

/// Alternates [`rebalance`] and [`fill_slack`] until a full round changes
/// nothing. The report accumulates every move and creation.
pub fn run_recursive<O: AppointmentObserver + ?Sized>(
    schedule: &Schedule,
    candidates: &[SlackCandidate],
    observer: &mut O,
) -> Result<(Schedule, RebalanceReport), O::Error> {
    let mut s = schedule.clone();
    let mut report = RebalanceReport::default();
    // every round moves or creates at least one visit, and creations are
    // bounded by the candidate list
    let limit = s.total_visits() + candidates.len() + s.blocks.len() + 2;
    for _ in 0..limit {
        let (after_rebalance, moved) = rebalance(&s);
        let (after_fill, filled) = fill_slack(&after_rebalance, candidates);
        for c in &filled.created {
            observer.appointment_created(c)?;
        }
        let changed = !moved.moves.is_empty() || !filled.created.is_empty();
        s = after_fill;
        report.unresolved = moved.unresolved.clone();
        report.absorb(moved);
        report.absorb(filled);
        if !changed {
            break;
        }
        report.iterations += 1;
    }
    // fill_slack never pushes a block past the maximum, so the last
    // rebalance's view of unresolved visits still holds
    report.converged = detect_congestion(&s).is_empty();
    Ok((s, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> TerminalParams {
        TerminalParams::default()
    }

    fn day() -> NaiveDate {
        NaiveDate::from_ymd_opt(2024, 3, 15).unwrap()
    }

    #[test]
    fn gate_arithmetic() {
        let p = params();
        assert_eq!(internal_op_time(&p), 30.0);
        assert_eq!(departure_time(60, &p), 30.0);
        assert_eq!(departure_time(0, &p), 0.0);
        assert_eq!(departure_time(70, &p), 35.0);
        assert_eq!(processing_time(60, &p), 60.0);
        assert_eq!(processing_time(0, &p), 30.0);
        assert_eq!(processing_time(70, &p), 65.0);
        let q = TerminalParams {
            load_minutes: 20.0,
            inspect_minutes: 10.0,
            ..p
        };
        assert_eq!(internal_op_time(&q), 30.0);
        let r = TerminalParams {
            inspect_minutes: 0.0,
            ..p
        };
        assert_eq!(internal_op_time(&r), 25.0);
    }

    #[test]
    fn congestion_is_strict() {
        let mut counts = vec![0; 9];
        counts[0] = 70;
        counts[1] = 60;
        let s = Schedule::from_counts(day(), params(), &counts);
        assert_eq!(
            detect_congestion(&s),
            vec![Congestion {
                block: 0,
                trucks: 70,
                excess: 10
            }]
        );
        assert!(detect_congestion(&Schedule::new(day(), params())).is_empty());
    }

    #[test]
    fn seventy_fifty_trace() {
        let p = TerminalParams {
            blocks_per_day: 2,
            ..params()
        };
        let s = Schedule::from_counts(day(), p, &[70, 50]);
        let (after, report) = rebalance(&s);
        assert_eq!(after.counts(), vec![60, 60]);
        assert_eq!(report.moves.len(), 10);
        assert!(report
            .moves
            .iter()
            .all(|m| m.from_block == 0 && m.to_block == 1));
        // latest bookings of block 0 are the ones that left
        let moved: BTreeSet<String> = report
            .moves
            .iter()
            .map(|m| m.container_id.to_string())
            .collect();
        let expected: BTreeSet<String> = (60..70).map(|i| format!("b0-{i}")).collect();
        assert_eq!(moved, expected);
        assert!(report.converged);
        assert_eq!(report.iterations, 1);
    }

    #[test]
    fn balanced_schedule_is_untouched() {
        let s = Schedule::from_counts(day(), params(), &[60, 10, 0, 30]);
        let (after, report) = rebalance(&s);
        assert_eq!(after, s);
        assert!(report.moves.is_empty());
        assert_eq!(report.iterations, 0);
    }

    #[test]
    fn earlier_block_used_when_later_ones_are_full() {
        let p = TerminalParams {
            blocks_per_day: 3,
            ..params()
        };
        let s = Schedule::from_counts(day(), p, &[50, 60, 65]);
        let (after, report) = rebalance(&s);
        assert_eq!(after.counts(), vec![55, 60, 60]);
        assert!(report.moves.iter().all(|m| m.to_block == 0));
    }

    #[test]
    fn deadline_blocks_a_later_move() {
        let p = TerminalParams {
            blocks_per_day: 2,
            ..params()
        };
        let mut s = Schedule::from_counts(day(), p, &[60, 0]);
        s.book(Booking {
            deadline_block: Some(0),
            ..Booking::pre_existing("late", 0)
        })
        .unwrap();
        let (after, report) = rebalance(&s);
        // "late" cannot leave; the next latest booking goes instead
        assert_eq!(after.block_of(&"late".into()), Some(0));
        assert_eq!(after.counts(), vec![60, 1]);
        assert_eq!(report.moves[0].container_id, "b0-59".into());
        assert!(report.converged);
    }

    #[test]
    fn unresolvable_congestion_is_reported() {
        let p = TerminalParams {
            blocks_per_day: 2,
            ..params()
        };
        let s = Schedule::from_counts(day(), p, &[61, 60]);
        let (after, report) = rebalance(&s);
        assert_eq!(after.counts(), vec![61, 60]);
        assert!(!report.converged);
        assert_eq!(report.unresolved.len(), 1);
        assert_eq!(report.unresolved[0].block, 0);
    }

    fn cand(id: &str, cat: OperationalCategory, class: StackClass, rem: i64) -> SlackCandidate {
        SlackCandidate {
            container_id: id.into(),
            carrier_id: None,
            category: cat,
            stack_class: class,
            remaining_free_days: rem,
        }
    }

    #[test]
    fn slack_filling_order_and_count() {
        let p = TerminalParams {
            blocks_per_day: 2,
            ..params()
        };
        let s = Schedule::from_counts(day(), p, &[55, 60]);
        let cands = vec![
            cand("a", OperationalCategory::Cat2, StackClass::C1, 3),
            cand("b", OperationalCategory::Cat2, StackClass::C3, 5),
            cand("c", OperationalCategory::Cat3, StackClass::C1, -2),
        ];
        let (after, report) = fill_slack(&s, &cands);
        assert_eq!(after.counts(), vec![58, 60]);
        let order: Vec<&str> = report
            .created
            .iter()
            .map(|c| c.container_id.as_str())
            .collect();
        assert_eq!(order, vec!["c", "b", "a"]);
        assert!(after
            .visits()
            .filter(|v| ["a", "b", "c"].contains(&v.container_id.as_str()))
            .all(|v| v.origin == VisitOrigin::IpsCreated));

        let full = Schedule::from_counts(day(), p, &[60, 60]);
        let (same, report) = fill_slack(&full, &cands);
        assert_eq!(same, full);
        assert!(report.created.is_empty());
    }

    #[test]
    fn recursive_two_pass_trace() {
        let s = Schedule::from_counts(day(), params(), &[80, 40, 60, 60, 60, 60, 60, 60, 60]);
        let (after, report) = run_recursive(&s, &[], &mut NoObserver).unwrap();
        assert_eq!(after.counts(), vec![60; 9]);
        assert_eq!(report.moves.len(), 20);
        assert!(report.converged);
        let (again, second) = run_recursive(&after, &[], &mut NoObserver).unwrap();
        assert_eq!(again, after);
        assert!(second.moves.is_empty() && second.created.is_empty());
    }

    #[test]
    fn observer_sees_every_creation() {
        struct Log(Vec<ContainerId>);
        impl AppointmentObserver for Log {
            type Error = Infallible;
            fn appointment_created(&mut self, c: &CreatedAppointment) -> Result<(), Infallible> {
                self.0.push(c.container_id.clone());
                Ok(())
            }
        }
        let s = Schedule::from_counts(day(), params(), &[58]);
        let cands = vec![
            cand("x", OperationalCategory::Cat3, StackClass::C2, 0),
            cand("y", OperationalCategory::Cat2, StackClass::C2, 1),
            cand("z", OperationalCategory::Cat2, StackClass::C2, 2),
        ];
        let mut log = Log(Vec::new());
        let (after, report) = run_recursive(&s, &cands, &mut log).unwrap();
        // slack 2 in block 0 plus all of blocks 1..9
        assert_eq!(report.created.len(), 3);
        assert_eq!(log.0.len(), 3);
        assert_eq!(after.total_visits(), 61);
    }

    #[test]
    fn deadlines() {
        assert_eq!(deadline_block(0, 9), None);
        assert_eq!(deadline_block(-3, 9), None);
        assert_eq!(deadline_block(1, 9), Some(8));
        assert_eq!(deadline_block(4, 9), Some(8));
    }

    #[test]
    fn booking_errors() {
        let mut s = Schedule::new(day(), params());
        assert!(matches!(
            s.book(Booking::pre_existing("a", 9)),
            Err(ScheduleError::BlockOutOfRange { .. })
        ));
        s.book(Booking::pre_existing("a", 0)).unwrap();
        assert!(matches!(
            s.book(Booking::pre_existing("a", 1)),
            Err(ScheduleError::DuplicateVisit(_))
        ));
    }

    #[test]
    fn proposals_shift_off_full_blocks() {
        let p = TerminalParams {
            blocks_per_day: 3,
            ..TerminalParams::default()
        };
        let s = Schedule::from_counts(day(), p, &[60, 59, 60]);
        assert_eq!(propose_block(&s, 1, None), Some(1));
        assert_eq!(propose_block(&s, 0, None), Some(1));
        assert_eq!(propose_block(&s, 2, None), Some(1));
        assert_eq!(propose_block(&s, 2, Some(0)), None);
        assert_eq!(propose_block(&s, 3, None), None);
        let full = Schedule::from_counts(day(), p, &[60, 60, 60]);
        assert_eq!(propose_block(&full, 0, None), None);
    }
}
