use super::{Optimality, PlacementError, PlacementModel, PlacementPlan};

/// Constructive plan: demurrage containers first, then latest pickup
/// first so that earlier pickups land on top. Each container takes the
/// open slot with the smallest objective increase; ties go to the lowest
/// (bay, row).
pub fn solve_greedy(model: &PlacementModel) -> Result<PlacementPlan, PlacementError> {
    let stacks = greedy_stacks(model)?;
    let value = model.evaluate(&stacks);
    Ok(model.plan_from(&stacks, value, Optimality::Heuristic, 0))
}

pub(crate) fn greedy_stacks(model: &PlacementModel) -> Result<Vec<Vec<usize>>, PlacementError> {
    model.check_capacity()?;
    let geo = &model.geometry;
    let cap = geo.max_tier() as usize;
    let items = &model.items;

    let mut order: Vec<usize> = (0..items.len()).collect();
    order.sort_by(|&a, &b| {
        let (x, y) = (&items[a], &items[b]);
        y.demurrage
            .cmp(&x.demurrage)
            .then(y.rank.cmp(&x.rank))
            .then_with(|| x.id.cmp(&y.id))
    });

    let mut stacks: Vec<Vec<usize>> = vec![Vec::new(); geo.len()];
    for i in order {
        let base = model.evaluate(&stacks);
        let mut best: Option<(f64, usize)> = None;
        for s in 0..geo.len() {
            if geo.stack(s).segment != items[i].segment || stacks[s].len() >= cap {
                continue;
            }
            stacks[s].push(i);
            let delta = model.evaluate(&stacks) - base;
            stacks[s].pop();
            if best.is_none_or(|(b, _)| delta < b - 1e-12) {
                best = Some((delta, s));
            }
        }
        let (_, s) = best.ok_or(PlacementError::SegmentFull {
            segment: items[i].segment,
        })?;
        stacks[s].push(i);
    }
    Ok(stacks)
}
