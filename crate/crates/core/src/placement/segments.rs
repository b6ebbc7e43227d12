use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::model::{Segment, YardLayout, YardState};

use super::{PlacementError, SegmentDeficit};

const ORDER: [Segment; 3] = [Segment::S1, Segment::S2, Segment::S3];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentSpan {
    pub id: Segment,
    pub bays: Range<u32>,
    pub rows: Range<u32>,
    pub capacity: usize,
}

/// Three contiguous bay ranges, one per operational category.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentPlan {
    pub spans: Vec<SegmentSpan>,
}

impl SegmentPlan {
    pub fn span(&self, id: Segment) -> Option<&SegmentSpan> {
        self.spans.iter().find(|s| s.id == id)
    }

    /// Bay count per segment in S1, S2, S3 order.
    pub fn bay_counts(&self) -> [u32; 3] {
        ORDER.map(|id| self.span(id).map_or(0, |s| s.bays.end - s.bays.start))
    }

    /// Segment label of every bay, bay 0 first.
    pub fn bay_labels(&self) -> Vec<Segment> {
        let mut spans: Vec<&SegmentSpan> = self.spans.iter().collect();
        spans.sort_by_key(|s| s.bays.start);
        spans
            .iter()
            .flat_map(|s| s.bays.clone().map(move |_| s.id))
            .collect()
    }

    pub fn empty_yard(&self, layout: YardLayout, max_tier: u32) -> YardState {
        YardState::new(layout, max_tier).with_bay_segments(self.bay_labels())
    }
}

/// Splits the yard's bays into S1/S2/S3 proportionally to category census
/// (largest remainder, at least one bay each). S1 sits nearest the exit
/// gate and S3 nearest the entry gate.
///
/// When rounding leaves a segment short while another has spare bays, bays
/// move one at a time from the segment with the most spare slots.
pub fn partition_segments(
    layout: &YardLayout,
    census: [usize; 3],
    max_tier: u32,
) -> Result<SegmentPlan, PlacementError> {
    let bays = layout.length_bays;
    if bays < 3 {
        return Err(PlacementError::TooFewBays { bays });
    }
    let bay_capacity = layout.width_rows as usize * max_tier as usize;
    let mut counts = proportional_counts(bays, census);

    for _ in 0..bays {
        let deficit = (0..3).find(|&i| counts[i] as usize * bay_capacity < census[i]);
        let Some(short) = deficit else { break };
        let donor = (0..3)
            .filter(|&i| i != short && counts[i] > 1)
            .filter(|&i| (counts[i] as usize - 1) * bay_capacity >= census[i])
            .max_by_key(|&i| {
                (
                    counts[i] as usize * bay_capacity - census[i],
                    std::cmp::Reverse(i),
                )
            });
        match donor {
            Some(d) => {
                counts[d] -= 1;
                counts[short] += 1;
            }
            None => break,
        }
    }

    let deficits: Vec<SegmentDeficit> = (0..3)
        .filter(|&i| counts[i] as usize * bay_capacity < census[i])
        .map(|i| SegmentDeficit {
            segment: ORDER[i],
            demand: census[i],
            capacity: counts[i] as usize * bay_capacity,
        })
        .collect();
    if !deficits.is_empty() {
        return Err(PlacementError::Sizing { deficits });
    }

    // S1 goes on the exit side of the yard.
    let exit_low = layout.exit_gate.bay <= layout.entry_gate.bay;
    let sequence: Vec<usize> = if exit_low {
        vec![0, 1, 2]
    } else {
        vec![2, 1, 0]
    };
    let mut start = 0;
    let mut spans = Vec::with_capacity(3);
    for i in sequence {
        let end = start + counts[i];
        spans.push(SegmentSpan {
            id: ORDER[i],
            bays: start..end,
            rows: 0..layout.width_rows,
            capacity: counts[i] as usize * bay_capacity,
        });
        start = end;
    }
    spans.sort_by_key(|s| s.id);
    Ok(SegmentPlan { spans })
}

fn proportional_counts(bays: u32, census: [usize; 3]) -> [u32; 3] {
    let total: usize = census.iter().sum();
    let weights: [f64; 3] = if total == 0 {
        [1.0; 3]
    } else {
        census.map(|c| c as f64)
    };
    let wsum: f64 = weights.iter().sum();
    let quotas = weights.map(|w| f64::from(bays) * w / wsum);
    let mut counts = quotas.map(|q| q.floor() as u32);
    let mut left = bays - counts.iter().sum::<u32>();
    let mut by_remainder = [0usize, 1, 2];
    by_remainder.sort_by(|&a, &b| {
        let ra = quotas[a] - quotas[a].floor();
        let rb = quotas[b] - quotas[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &i in by_remainder.iter().cycle() {
        if left == 0 {
            break;
        }
        counts[i] += 1;
        left -= 1;
    }
    // every segment gets at least one bay
    while let Some(empty) = (0..3).find(|&i| counts[i] == 0) {
        let donor = (0..3)
            .max_by_key(|&i| (counts[i], std::cmp::Reverse(i)))
            .expect("three segments");
        counts[donor] -= 1;
        counts[empty] += 1;
    }
    counts
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::GatePos;

    fn layout(bays: u32, rows: u32) -> YardLayout {
        YardLayout {
            length_bays: bays,
            width_rows: rows,
            entry_gate: GatePos::new(bays as i32, 0),
            exit_gate: GatePos::new(-1, 0),
            total_container_census: 0,
        }
    }

    #[test]
    fn empty_census_splits_evenly() {
        let plan = partition_segments(&layout(6, 4), [0, 0, 0], 4).unwrap();
        assert_eq!(plan.bay_counts(), [2, 2, 2]);
    }

    #[test]
    fn proportional_by_largest_remainder() {
        // 6 bays of 5 rows x 2 tiers = 10 slots each
        let plan = partition_segments(&layout(6, 5), [30, 20, 10], 2).unwrap();
        assert_eq!(plan.bay_counts(), [3, 2, 1]);
        assert_eq!(plan.span(Segment::S1).unwrap().bays, 0..3);
        assert_eq!(plan.span(Segment::S3).unwrap().bays, 5..6);
        // 36/18/9 of 63 over 6 bays: quotas 3.43/1.71/0.86
        let plan = partition_segments(&layout(6, 4), [36, 18, 9], 4).unwrap();
        assert_eq!(plan.bay_counts(), [3, 2, 1]);
    }

    #[test]
    fn exit_gate_side_gets_s1() {
        let mut l = layout(6, 4);
        l.exit_gate = GatePos::new(6, 1);
        l.entry_gate = GatePos::new(-1, 1);
        let plan = partition_segments(&l, [10, 10, 10], 4).unwrap();
        assert_eq!(plan.span(Segment::S1).unwrap().bays, 4..6);
        assert_eq!(
            plan.bay_labels(),
            vec![
                Segment::S3,
                Segment::S3,
                Segment::S2,
                Segment::S2,
                Segment::S1,
                Segment::S1
            ]
        );
    }

    #[test]
    fn minimum_one_bay() {
        let plan = partition_segments(&layout(5, 4), [90, 0, 0], 8).unwrap();
        assert_eq!(plan.bay_counts(), [3, 1, 1]);
    }

    #[test]
    fn over_capacity_is_a_sizing_error() {
        let err = partition_segments(&layout(6, 4), [60, 30, 10], 4).unwrap_err();
        match err {
            PlacementError::Sizing { deficits } => {
                assert!(!deficits.is_empty());
                assert!(deficits.iter().all(|d| d.demand > d.capacity));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rounding_shortfall_is_repaired() {
        // 8 slots per bay; rounding gives 3/3/0, the one-bay floor takes from
        // S1 leaving it 16 < 17, and S2 can spare a bay.
        let plan = partition_segments(&layout(6, 2), [17, 15, 1], 4).unwrap();
        assert_eq!(plan.bay_counts(), [3, 2, 1]);
    }

    #[test]
    fn one_bay_floor_can_make_sizing_infeasible() {
        // S1 needs 5 bays of 8, the other two need one each: 7 > 6
        assert!(matches!(
            partition_segments(&layout(6, 2), [34, 4, 4], 4),
            Err(PlacementError::Sizing { .. })
        ));
    }
}
