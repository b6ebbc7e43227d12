//! Reference implementations used as test oracles. They share no code with
//! the engine beyond plain data types.

#![allow(dead_code)]

pub mod instances;

use std::collections::BTreeMap;

use chrono::{Datelike, NaiveDate};
use ips_core::{Container, ContainerId, Schedule, Segment, YardState};

/// A stack in oracle form.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OStack {
    pub bay: u32,
    pub row: u32,
    pub segment: Segment,
}

/// Blockers lifted per retrieval, retrieving `order` (item indices) from
/// `stacks` (bottom first).
pub fn rehandles(
    geometry: &[OStack],
    tiers: usize,
    stacks: &[Vec<usize>],
    order: &[usize],
) -> Vec<usize> {
    let mut stacks = stacks.to_vec();
    let mut out = Vec::new();
    for &target in order {
        let Some(s) = stacks.iter().position(|st| st.contains(&target)) else {
            out.push(0);
            continue;
        };
        let depth = stacks[s].iter().position(|&i| i == target).unwrap();
        let above = stacks[s].len() - depth - 1;
        out.push(above);
        let mut lifted = Vec::new();
        for _ in 0..above {
            lifted.push(stacks[s].pop().unwrap());
        }
        stacks[s].pop();
        let mut held = Vec::new();
        for b in lifted {
            let mut options: Vec<usize> = (0..geometry.len())
                .filter(|&d| d != s && geometry[d].segment == geometry[s].segment)
                .filter(|&d| stacks[d].len() < tiers)
                .collect();
            options.sort_by_key(|&d| {
                let (a, z) = (geometry[s], geometry[d]);
                (a.bay.abs_diff(z.bay) + a.row.abs_diff(z.row), z.bay, z.row)
            });
            match options.first() {
                Some(&d) => stacks[d].push(b),
                None => held.push(b),
            }
        }
        // held blockers go back in their original order
        for b in held.into_iter().rev() {
            stacks[s].push(b);
        }
    }
    out
}

pub fn zorder(stacks: &[Vec<usize>], rank: &[Option<usize>]) -> usize {
    let key = |i: usize| rank[i].unwrap_or(usize::MAX);
    let mut n = 0;
    for st in stacks {
        for lo in 0..st.len() {
            for hi in lo + 1..st.len() {
                if key(st[hi]) > key(st[lo]) {
                    n += 1;
                }
            }
        }
    }
    n
}

/// Weighted objective of a full configuration.
pub fn objective(
    geometry: &[OStack],
    tiers: usize,
    stacks: &[Vec<usize>],
    rank: &[Option<usize>],
    initial: &[Option<(usize, usize)>],
    weights: (f64, f64, f64),
) -> f64 {
    let mut order: Vec<usize> = (0..rank.len()).filter(|&i| rank[i].is_some()).collect();
    order.sort_by_key(|&i| rank[i]);
    let r: usize = rehandles(geometry, tiers, stacks, &order).iter().sum();
    let z = zorder(stacks, rank);
    let mut moved = 0;
    for (s, st) in stacks.iter().enumerate() {
        for (t, &i) in st.iter().enumerate() {
            if matches!(initial[i], Some(p) if p != (s, t)) {
                moved += 1;
            }
        }
    }
    weights.0 * r as f64 + weights.1 * moved as f64 + weights.2 * z as f64
}

/// Minimum objective over every legal configuration: each permutation of
/// the items is cut into consecutive stack contents.
pub fn brute_force_minimum(
    geometry: &[OStack],
    tiers: usize,
    segment: &[Segment],
    rank: &[Option<usize>],
    initial: &[Option<(usize, usize)>],
    weights: (f64, f64, f64),
) -> Option<f64> {
    let n = segment.len();
    let mut best: Option<f64> = None;
    let mut perm: Vec<usize> = (0..n).collect();
    let cuts = compositions(n, geometry.len(), tiers);
    permute(&mut perm, 0, &mut |p| {
        for counts in &cuts {
            let mut stacks = Vec::with_capacity(counts.len());
            let mut k = 0;
            let mut ok = true;
            for (s, &c) in counts.iter().enumerate() {
                let chunk = p[k..k + c].to_vec();
                k += c;
                if chunk.iter().any(|&i| segment[i] != geometry[s].segment) {
                    ok = false;
                    break;
                }
                stacks.push(chunk);
            }
            if !ok {
                continue;
            }
            let v = objective(geometry, tiers, &stacks, rank, initial, weights);
            if best.is_none_or(|b| v < b) {
                best = Some(v);
            }
        }
    });
    best
}

fn compositions(n: usize, parts: usize, cap: usize) -> Vec<Vec<usize>> {
    fn rec(left: usize, parts: usize, cap: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if parts == 0 {
            if left == 0 {
                out.push(cur.clone());
            }
            return;
        }
        for c in 0..=left.min(cap) {
            cur.push(c);
            rec(left - c, parts - 1, cap, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, parts, cap, &mut Vec::new(), &mut out);
    out
}

fn permute(p: &mut Vec<usize>, k: usize, f: &mut dyn FnMut(&[usize])) {
    if k == p.len() {
        f(p);
        return;
    }
    for i in k..p.len() {
        p.swap(k, i);
        permute(p, k + 1, f);
        p.swap(k, i);
    }
}

/// Yard in oracle form: geometry, stacks of indices into `ids`.
pub fn yard_stacks(yard: &YardState) -> (Vec<OStack>, Vec<ContainerId>, Vec<Vec<usize>>) {
    let mut geometry = Vec::new();
    for b in 0..yard.layout().length_bays {
        for r in 0..yard.layout().width_rows {
            geometry.push(OStack {
                bay: b,
                row: r,
                segment: yard.segment_of(ips_core::StackPos::new(b, r)),
            });
        }
    }
    let ids: Vec<ContainerId> = yard.placements().keys().cloned().collect();
    let mut cells: Vec<Vec<(u32, usize)>> = vec![Vec::new(); geometry.len()];
    for (i, id) in ids.iter().enumerate() {
        let slot = yard.slot_of(id).unwrap();
        let s = geometry
            .iter()
            .position(|g| g.bay == slot.bay && g.row == slot.row)
            .unwrap();
        cells[s].push((slot.tier, i));
    }
    let stacks = cells
        .into_iter()
        .map(|mut c| {
            c.sort();
            c.into_iter().map(|(_, i)| i).collect()
        })
        .collect();
    (geometry, ids, stacks)
}

/// Hand evaluation of the three discriminant functions and their winner.
pub fn hand_class(x_consignee: f64, x_cargo: f64) -> (f64, f64, f64, u8) {
    let z1 = -0.985 + 0.032 * x_consignee + 1.281 * x_cargo;
    let z2 = -13.239 + 0.116 * x_consignee + 4.698 * x_cargo;
    let z3 = -37.387 + 0.344 * x_consignee + 7.688 * x_cargo;
    let class = if z3 > z2 && z3 > z1 {
        3
    } else if z2 > z1 {
        2
    } else {
        1
    };
    (z1, z2, z3, class)
}

/// Per-container (class 1..3, remaining free days) from first principles.
pub fn hand_classify(
    containers: &[Container],
    today: NaiveDate,
) -> BTreeMap<ContainerId, (u8, i64)> {
    let mut census: BTreeMap<&str, u32> = BTreeMap::new();
    for c in containers {
        if c.appointment.is_none()
            && c.arrival_date.year() == today.year()
            && c.arrival_date.month() == today.month()
        {
            *census.entry(c.owner_id.as_str()).or_default() += 1;
        }
    }
    containers
        .iter()
        .map(|c| {
            let df = c.free_days.max(1) as f64;
            let passed = (today - c.arrival_date).num_days();
            let rem = c.free_days as i64 - passed;
            let sv = if c.appointment.is_some() && c.carrier_visits_per_month > 0 {
                c.carrier_visits_per_month
            } else {
                census.get(c.owner_id.as_str()).copied().unwrap_or(0).max(1)
            };
            let consignee = (rem.max(0) as f64 / df) / sv as f64;
            let cargo = c.weight_tons * c.pickup_probability * df;
            (c.id.clone(), (hand_class(consignee, cargo).3, rem))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct DayFigures {
    pub pt: Option<f64>,
    pub m: usize,
    pub rehandles: usize,
}

/// Plays the day truck by truck.
pub fn evaluate_day(yard: &YardState, schedule: &Schedule, containers: &[Container]) -> DayFigures {
    let p = schedule.params();
    let m_max = ((p.load_minutes + p.inspect_minutes) * p.gate_lanes as f64 / p.clear_minutes
        + 1e-9)
        .floor() as usize;
    let classes = hand_classify(containers, schedule.day());
    // pickup key: booked block, then higher class, fewer days left, id
    let block_of: BTreeMap<&ContainerId, usize> = schedule
        .blocks()
        .iter()
        .flat_map(|b| b.visits.iter().map(move |v| (&v.container_id, b.index)))
        .collect();
    let key = |id: &ContainerId| {
        let (class, rem) = classes[id];
        (
            block_of.get(id).copied().unwrap_or(usize::MAX),
            std::cmp::Reverse(class),
            rem,
            id.clone(),
        )
    };

    let (geometry, ids, stacks) = yard_stacks(yard);
    let index: BTreeMap<&ContainerId, usize> =
        ids.iter().enumerate().map(|(i, id)| (id, i)).collect();
    let mut order = Vec::new();
    let mut base = Vec::new();
    for block in schedule.blocks() {
        let mut visits = block.visits.clone();
        visits.sort_by_key(|v| v.booked_at);
        let n = visits.len();
        let mut served: Vec<ContainerId> = visits
            .into_iter()
            .take(n.min(m_max))
            .map(|v| v.container_id)
            .collect();
        served.sort_by_key(|id| key(id));
        let dt = n as f64 / p.gate_lanes as f64 * p.clear_minutes;
        for id in served {
            order.push(index[&id]);
            base.push(dt + p.load_minutes + p.inspect_minutes);
        }
    }
    let lifted = rehandles(&geometry, yard.max_tier() as usize, &stacks, &order);
    let minutes: Vec<f64> = base
        .iter()
        .zip(&lifted)
        .map(|(b, &l)| b + l as f64 * p.rehandle_minutes)
        .collect();
    let m = minutes.len();
    DayFigures {
        pt: (m > 0).then(|| minutes.iter().sum::<f64>() / m as f64),
        m,
        rehandles: lifted.iter().sum(),
    }
}
