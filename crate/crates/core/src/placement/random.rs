use rand::seq::SliceRandom;
use rand::Rng;

use crate::model::{Slot, YardState};

use super::{PlacementError, PlacementRequest};

/// Seats `requests` in shuffled order, each on a uniformly chosen
/// non-full stack of its segment. Used for the unplanned baselines.
pub fn place_randomly<R: Rng + ?Sized>(
    yard: &YardState,
    requests: &[PlacementRequest],
    rng: &mut R,
) -> Result<YardState, PlacementError> {
    let mut out = yard.clone();
    let positions = yard.stack_positions();
    let mut heights: Vec<u32> = positions.iter().map(|&p| yard.height(p)).collect();
    let segments: Vec<_> = positions.iter().map(|&p| yard.segment_of(p)).collect();

    let mut order: Vec<&PlacementRequest> = requests.iter().collect();
    order.shuffle(rng);
    for req in order {
        let open: Vec<usize> = (0..positions.len())
            .filter(|&s| segments[s] == req.segment && heights[s] < yard.max_tier())
            .collect();
        if open.is_empty() {
            return Err(PlacementError::SegmentFull {
                segment: req.segment,
            });
        }
        let s = open[rng.random_range(0..open.len())];
        let pos = positions[s];
        out.place(
            req.id.clone(),
            Slot::new(pos.bay, pos.row, heights[s], segments[s]),
            req.segment,
        );
        heights[s] += 1;
    }
    Ok(out)
}
