use crate::model::YardState;

use super::{
    ObjectiveWeights, Optimality, PickupOrder, PlacementError, PlacementModel, PlacementPlan,
    PlacementRequest,
};

const EPS: f64 = 1e-9;

/// (objective, exit distance, stack) for ranking candidate seats.
type SeatKey = (f64, u32, usize);

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct IncrementalOptions {
    pub weights: ObjectiveWeights,
    /// Also consider moving one stack top inside the segment first.
    pub allow_relocations: bool,
}

/// Seats one arriving container into an existing yard.
///
/// Every open stack top of the container's segment is scored with the
/// full objective; ties go to the stack nearest the exit gate, then the
/// lowest (bay, row). With relocations enabled, moving a single stack top
/// elsewhere in the segment is accepted only when it beats the best
/// direct slot after paying the relocation weight.
pub fn place_incremental(
    yard: &YardState,
    request: &PlacementRequest,
    pickup: &PickupOrder,
    options: &IncrementalOptions,
) -> Result<PlacementPlan, PlacementError> {
    let mut requests: Vec<PlacementRequest> = yard
        .placements()
        .iter()
        .map(|(id, slot)| PlacementRequest {
            id: id.clone(),
            segment: yard.required_segment(id).unwrap_or(slot.segment),
            demurrage: false,
        })
        .collect();
    requests.push(request.clone());
    let model = match PlacementModel::new(yard, &requests, pickup, options.weights) {
        Ok(m) => m,
        Err(PlacementError::Infeasible { segment, .. }) if segment == request.segment => {
            return Err(PlacementError::SegmentFull { segment })
        }
        Err(e) => return Err(e),
    };

    let geo = &model.geometry;
    let cap = geo.max_tier() as usize;
    let new = model.items.len() - 1;
    let mut stacks: Vec<Vec<usize>> = vec![Vec::new(); geo.len()];
    let mut seated: Vec<(usize, u32, usize)> = model
        .items
        .iter()
        .enumerate()
        .filter_map(|(i, it)| it.initial.map(|(s, t)| (s, t, i)))
        .collect();
    seated.sort();
    for (s, _, i) in seated {
        stacks[s].push(i);
    }

    let in_segment: Vec<usize> = (0..geo.len())
        .filter(|&s| geo.stack(s).segment == request.segment)
        .collect();
    let key = |value: f64, s: usize| (value, geo.exit_distance(s), s);
    let better = |a: SeatKey, b: SeatKey| {
        a.0 < b.0 - EPS || ((a.0 - b.0).abs() <= EPS && (a.1, a.2) < (b.1, b.2))
    };

    let mut best: Option<(SeatKey, Vec<Vec<usize>>)> = None;
    for &s in &in_segment {
        if stacks[s].len() >= cap {
            continue;
        }
        stacks[s].push(new);
        let k = key(model.evaluate(&stacks), s);
        if best.as_ref().is_none_or(|(b, _)| better(k, *b)) {
            best = Some((k, stacks.clone()));
        }
        stacks[s].pop();
    }
    let Some((direct_key, direct)) = best else {
        return Err(PlacementError::SegmentFull {
            segment: request.segment,
        });
    };

    let mut chosen = (direct_key.0, direct);
    if options.allow_relocations {
        for &from in &in_segment {
            let Some(&top) = stacks[from].last() else {
                continue;
            };
            for &to in &in_segment {
                if to == from || stacks[to].len() >= cap {
                    continue;
                }
                let mut moved = stacks.clone();
                moved[from].pop();
                moved[to].push(top);
                for &s in &in_segment {
                    if moved[s].len() >= cap {
                        continue;
                    }
                    moved[s].push(new);
                    let v = model.evaluate(&moved);
                    if v < chosen.0 - EPS {
                        chosen = (v, moved.clone());
                    }
                    moved[s].pop();
                }
            }
        }
    }
    Ok(model.plan_from(&chosen.1, chosen.0, Optimality::Heuristic, 0))
}
