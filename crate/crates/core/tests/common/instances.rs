//! Random small placement instances with their exhaustive optimum.

use ips_core::{
    GatePos, ObjectiveWeights, PickupOrder, PlacementRequest, Segment, Slot, YardLayout, YardState,
};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{brute_force_minimum, objective, yard_stacks, OStack};

pub struct Instance {
    pub yard: YardState,
    pub requests: Vec<PlacementRequest>,
    pub pickup: PickupOrder,
    pub weights: ObjectiveWeights,
}

/// Up to 4 stacks, 4 tiers, 12 slots and 8 containers, optionally
/// segmented and partly pre-stacked.
pub fn random_instance(rng: &mut ChaCha8Rng) -> Instance {
    let (stacks, tiers) = loop {
        let s = rng.random_range(1..=4u32);
        let h = rng.random_range(1..=4u32);
        if s * h <= 12 {
            break (s, h);
        }
    };
    let rows = if stacks == 4 && rng.random_bool(0.5) {
        2
    } else {
        1
    };
    let bays = stacks / rows;
    let layout = YardLayout {
        length_bays: bays,
        width_rows: rows,
        entry_gate: GatePos::new(bays as i32, 0),
        exit_gate: GatePos::new(-1, 0),
        total_container_census: 0,
    };
    let mut yard = YardState::new(layout, tiers);
    if rng.random_bool(0.5) {
        let labels = (0..bays)
            .map(|_| *[Segment::S1, Segment::S2, Segment::S3].choose(rng).unwrap())
            .collect();
        yard = yard.with_bay_segments(labels);
    }

    let positions = yard.stack_positions();
    let mut room: Vec<(Segment, usize)> = positions
        .iter()
        .map(|&p| (yard.segment_of(p), tiers as usize))
        .collect();
    let n = rng.random_range(1..=8.min(stacks * tiers) as usize);
    let mut requests = Vec::new();
    for i in 0..n {
        let open: Vec<usize> = (0..room.len()).filter(|&s| room[s].1 > 0).collect();
        let s = *open.choose(rng).unwrap();
        let seg = room[s].0;
        // charge the capacity to any stack of that segment
        let k = (0..room.len())
            .find(|&k| room[k].0 == seg && room[k].1 > 0)
            .unwrap();
        room[k].1 -= 1;
        requests.push(PlacementRequest {
            id: format!("c{i}").into(),
            segment: seg,
            demurrage: rng.random_bool(0.2),
        });
    }

    // some instances start with part of the load already stacked
    if rng.random_bool(0.4) {
        let mut height = vec![0u32; positions.len()];
        for r in &requests {
            if !rng.random_bool(0.5) {
                continue;
            }
            let open: Vec<usize> = (0..positions.len())
                .filter(|&s| yard.segment_of(positions[s]) == r.segment && height[s] < tiers)
                .collect();
            if let Some(&s) = open.choose(rng) {
                let p = positions[s];
                yard.place(
                    r.id.clone(),
                    Slot::new(p.bay, p.row, height[s], r.segment),
                    r.segment,
                );
                height[s] += 1;
            }
        }
    }

    let mut order: Vec<_> = requests.iter().map(|r| r.id.clone()).collect();
    order.shuffle(rng);
    // a few containers have no expected pickup at all
    order.retain(|_| !rng.random_bool(0.15));
    let weights = *[
        ObjectiveWeights::default(),
        ObjectiveWeights {
            rehandle: 1.0,
            relocation: 0.5,
            zorder: 0.0,
        },
        ObjectiveWeights {
            rehandle: 2.0,
            relocation: 1.0,
            zorder: 3.0,
        },
        ObjectiveWeights {
            rehandle: 0.0,
            relocation: 1.0,
            zorder: 1.0,
        },
    ]
    .choose(rng)
    .unwrap();
    Instance {
        yard,
        requests,
        pickup: PickupOrder::from_sequence(order),
        weights,
    }
}

/// Exhaustive minimum for the instance.
pub fn oracle_minimum(inst: &Instance) -> f64 {
    let (geometry, _, _) = yard_stacks(&inst.yard);
    let tiers = inst.yard.max_tier() as usize;
    let segment: Vec<Segment> = inst.requests.iter().map(|r| r.segment).collect();
    let rank: Vec<Option<usize>> = inst
        .requests
        .iter()
        .map(|r| inst.pickup.rank(&r.id))
        .collect();
    let initial: Vec<Option<(usize, usize)>> = inst
        .requests
        .iter()
        .map(|r| {
            inst.yard.slot_of(&r.id).map(|s| {
                let k = geometry
                    .iter()
                    .position(|g| g.bay == s.bay && g.row == s.row)
                    .unwrap();
                (k, s.tier as usize)
            })
        })
        .collect();
    let w = (
        inst.weights.rehandle,
        inst.weights.relocation,
        inst.weights.zorder,
    );
    brute_force_minimum(&geometry, tiers, &segment, &rank, &initial, w)
        .expect("instance is feasible")
}

/// Objective of `plan_yard` scored by the oracle.
pub fn oracle_value_of(inst: &Instance, plan_yard: &YardState) -> f64 {
    let (geometry, ids, stacks): (Vec<OStack>, _, _) = yard_stacks(plan_yard);
    let rank: Vec<Option<usize>> = ids.iter().map(|id| inst.pickup.rank(id)).collect();
    let initial: Vec<Option<(usize, usize)>> = ids
        .iter()
        .map(|id| {
            inst.yard.slot_of(id).map(|s| {
                let k = geometry
                    .iter()
                    .position(|g| g.bay == s.bay && g.row == s.row)
                    .unwrap();
                (k, s.tier as usize)
            })
        })
        .collect();
    let w = (
        inst.weights.rehandle,
        inst.weights.relocation,
        inst.weights.zorder,
    );
    objective(
        &geometry,
        plan_yard.max_tier() as usize,
        &stacks,
        &rank,
        &initial,
        w,
    )
}
