//! Throughput and processing-time improvement figures, per-block
//! histograms and report rendering.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scenario::{Scenario, ScenarioResult};
use crate::scheduler::Schedule;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("baseline throughput must be at least 1")]
    ZeroBaseline,
    #[error("hypothetical processing time must be positive")]
    ZeroHypothesis,
    #[error("scenario {0} is missing from the ladder")]
    MissingScenario(Scenario),
    #[error("scenario {0} served no trucks")]
    UndefinedPt(Scenario),
}

/// `(M_optimized − M_baseline) / M_baseline`.
pub fn throughput_gain(m_optimized: usize, m_baseline: usize) -> Result<f64, MetricsError> {
    if m_baseline == 0 {
        return Err(MetricsError::ZeroBaseline);
    }
    Ok((m_optimized as f64 - m_baseline as f64) / m_baseline as f64)
}

/// `(|PT_hyp − PT_real| − (PT_hyp − PT_baseline)) / PT_hyp`. Positive
/// values mean the truck count has to come down.
pub fn pt_improvement(pt_hyp: f64, pt_real: f64, pt_baseline: f64) -> Result<f64, MetricsError> {
    if pt_hyp.is_nan() || pt_hyp <= 0.0 {
        return Err(MetricsError::ZeroHypothesis);
    }
    Ok(((pt_hyp - pt_real).abs() - (pt_hyp - pt_baseline)) / pt_hyp)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub t_throughput: f64,
    pub pt_improve: f64,
    pub m_optimized: usize,
    pub m_baseline: usize,
    pub pt_hyp: f64,
    pub pt_real: f64,
    pub pt_baseline: f64,
}

impl MetricsReport {
    /// Scenario 4 against scenario 1 for throughput. For processing time
    /// scenario 3 is the planned figure, scenario 4 the realised one and
    /// scenario 1 the baseline.
    pub fn from_ladder(results: &[ScenarioResult]) -> Result<Self, MetricsError> {
        let get = |s: Scenario| {
            results
                .iter()
                .find(|r| r.scenario == s)
                .ok_or(MetricsError::MissingScenario(s))
        };
        let pt = |s: Scenario| get(s)?.pt.ok_or(MetricsError::UndefinedPt(s));
        let m_optimized = get(Scenario::Ips)?.m;
        let m_baseline = get(Scenario::RandomNoSeg)?.m;
        let pt_hyp = pt(Scenario::ZScoreSeg)?;
        let pt_real = pt(Scenario::Ips)?;
        let pt_baseline = pt(Scenario::RandomNoSeg)?;
        Ok(MetricsReport {
            t_throughput: throughput_gain(m_optimized, m_baseline)?,
            pt_improve: pt_improvement(pt_hyp, pt_real, pt_baseline)?,
            m_optimized,
            m_baseline,
            pt_hyp,
            pt_real,
            pt_baseline,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub block: usize,
    pub before: usize,
    pub after: usize,
    pub threshold: usize,
}

impl HistogramBin {
    pub fn delta(&self) -> i64 {
        self.after as i64 - self.before as i64
    }
}

/// Per-block truck counts before and after, with the serviceable maximum.
pub fn histogram(before: &Schedule, after: &Schedule) -> Vec<HistogramBin> {
    let threshold = after.serviceable_max();
    let b = before.counts();
    let a = after.counts();
    (0..a.len().max(b.len()))
        .map(|i| HistogramBin {
            block: i,
            before: b.get(i).copied().unwrap_or(0),
            after: a.get(i).copied().unwrap_or(0),
            threshold,
        })
        .collect()
}

fn fmt_pt(pt: Option<f64>) -> String {
    pt.map_or_else(|| "undefined".to_owned(), |v| format!("{v:.6}"))
}

/// Key/value text for a single scenario.
pub fn render_text(result: &ScenarioResult) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "scenario = {}", result.scenario.number());
    let _ = writeln!(out, "name = {}", result.scenario);
    if let Some(seed) = result.seed {
        let _ = writeln!(out, "seed = {seed}");
    }
    let _ = writeln!(out, "pt = {}", fmt_pt(result.pt));
    let _ = writeln!(out, "m = {}", result.m);
    let _ = writeln!(out, "rehandles = {}", result.rehandles);
    if let Some(opt) = result.optimality {
        let label = match opt {
            crate::placement::Optimality::ProvenOptimal => "proven_optimal",
            crate::placement::Optimality::Heuristic => "heuristic",
        };
        let _ = writeln!(out, "placement = {label}");
    }
    if let Some(r) = &result.rebalance {
        let _ = writeln!(out, "moves = {}", r.moves.len());
        let _ = writeln!(out, "created = {}", r.created.len());
        let _ = writeln!(out, "converged = {}", r.converged);
    }
    for b in &result.histogram {
        let _ = writeln!(
            out,
            "block.{} = demand {} serviced {} max {}",
            b.block, b.demand, b.serviced, b.threshold
        );
    }
    out
}

/// Key/value text for a full ladder plus the improvement figures.
pub fn render_ladder_text(results: &[ScenarioResult]) -> String {
    let mut out = String::new();
    for r in results {
        out.push_str(&render_text(r));
        out.push('\n');
    }
    match MetricsReport::from_ladder(results) {
        Ok(m) => {
            let _ = writeln!(out, "t_throughput = {:.6}", m.t_throughput);
            let _ = writeln!(out, "pt_improve = {:.6}", m.pt_improve);
        }
        Err(e) => {
            let _ = writeln!(out, "metrics = unavailable ({e})");
        }
    }
    out
}

/// `scenario,pt,m,seed` rows.
pub fn render_csv(results: &[ScenarioResult]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["scenario", "pt", "m", "seed"])
        .expect("writing to memory");
    for r in results {
        let pt = r.pt.map(|v| format!("{v:.6}")).unwrap_or_default();
        let seed = r.seed.map(|s| s.to_string()).unwrap_or_default();
        w.write_record([r.scenario.number().to_string(), pt, r.m.to_string(), seed])
            .expect("writing to memory");
    }
    String::from_utf8(w.into_inner().expect("flush to memory")).expect("csv output is utf-8")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::TerminalParams;
    use crate::scheduler::rebalance;
    use chrono::NaiveDate;

    #[test]
    fn throughput_examples() {
        assert!((throughput_gain(49, 37).unwrap() - 12.0 / 37.0).abs() < 1e-12);
        assert_eq!(throughput_gain(37, 37).unwrap(), 0.0);
        assert_eq!(throughput_gain(30, 40).unwrap(), -0.25);
        assert_eq!(throughput_gain(5, 0), Err(MetricsError::ZeroBaseline));
    }

    #[test]
    fn pt_examples() {
        assert!((pt_improvement(330.0, 330.0, 370.0).unwrap() - 40.0 / 330.0).abs() < 1e-12);
        assert_eq!(pt_improvement(330.0, 330.0, 330.0).unwrap(), 0.0);
        assert!((pt_improvement(300.0, 330.0, 370.0).unwrap() - 100.0 / 300.0).abs() < 1e-12);
        assert_eq!(
            pt_improvement(0.0, 1.0, 1.0),
            Err(MetricsError::ZeroHypothesis)
        );
    }

    #[test]
    fn histogram_of_trace() {
        let p = TerminalParams {
            blocks_per_day: 2,
            ..TerminalParams::default()
        };
        let day = NaiveDate::from_ymd_opt(2024, 3, 15).unwrap();
        let before = Schedule::from_counts(day, p, &[70, 50]);
        let (after, _) = rebalance(&before);
        let h = histogram(&before, &after);
        assert_eq!(
            h.iter().map(HistogramBin::delta).collect::<Vec<_>>(),
            vec![-10, 10]
        );
        assert!(h.iter().all(|b| b.threshold == 60));
        assert!(histogram(&before, &before).iter().all(|b| b.delta() == 0));
    }
}
