//! Discriminant Z-score classification of import containers.
//!
//! Each container gets a cargo value (weight × pickup likelihood × free
//! days) and a consignee value (remaining free-day share per carrier
//! visit). Three linear discriminant functions score the pair and the
//! highest score picks the stacking class.

use std::collections::BTreeMap;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Container, ContainerId};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ClassifyError {
    #[error("container {id}: weight {weight} t must be positive")]
    NonPositiveWeight { id: ContainerId, weight: f64 },
    #[error("container {id}: current date {current} precedes arrival {arrival}")]
    BeforeArrival {
        id: ContainerId,
        current: NaiveDate,
        arrival: NaiveDate,
    },
}

/// Intercept and weights of one discriminant function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Discriminant {
    pub intercept: f64,
    pub consignee_weight: f64,
    pub cargo_weight: f64,
}

impl Discriminant {
    pub const fn new(intercept: f64, consignee_weight: f64, cargo_weight: f64) -> Self {
        Discriminant {
            intercept,
            consignee_weight,
            cargo_weight,
        }
    }

    pub fn score(&self, consignee_value: f64, cargo_value: f64) -> f64 {
        self.intercept + self.consignee_weight * consignee_value + self.cargo_weight * cargo_value
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DiscriminantCoefficients {
    pub c1: Discriminant,
    pub c2: Discriminant,
    pub c3: Discriminant,
}

impl Default for DiscriminantCoefficients {
    fn default() -> Self {
        DiscriminantCoefficients {
            c1: Discriminant::new(-0.985, 0.032, 1.281),
            c2: Discriminant::new(-13.239, 0.116, 4.698),
            c3: Discriminant::new(-37.387, 0.344, 7.688),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum StackClass {
    C1,
    C2,
    C3,
}

impl StackClass {
    /// 1 for C1 up to 3 for C3.
    pub fn rank(self) -> u8 {
        match self {
            StackClass::C1 => 1,
            StackClass::C2 => 2,
            StackClass::C3 => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum OperationalCategory {
    /// Within free days, pickup appointment booked.
    Cat1,
    /// Within free days, no appointment.
    Cat2,
    /// Free days exhausted (demurrage).
    Cat3,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscriminantScores {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
}

impl DiscriminantScores {
    /// Highest score wins; exact ties resolve C1 over C2 over C3.
    pub fn argmax(&self) -> StackClass {
        let mut best = (StackClass::C1, self.c1);
        for (class, score) in [(StackClass::C2, self.c2), (StackClass::C3, self.c3)] {
            if score > best.1 {
                best = (class, score);
            }
        }
        best.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub cargo_value: f64,
    pub consignee_value: f64,
    pub remaining_free_days: i64,
    pub scores: DiscriminantScores,
    pub stack_class: StackClass,
    pub operational_category: OperationalCategory,
}

/// Cargo value `w_c · p_c · d_f`, with zero free days counted as one.
pub fn cargo_variable(container: &Container) -> Result<f64, ClassifyError> {
    if !(container.weight_tons.is_finite() && container.weight_tons > 0.0) {
        return Err(ClassifyError::NonPositiveWeight {
            id: container.id.clone(),
            weight: container.weight_tons,
        });
    }
    let free_days = container.free_days.max(1);
    Ok(container.weight_tons * container.pickup_probability * f64::from(free_days))
}

pub fn days_passed(container: &Container, current_date: NaiveDate) -> Result<i64, ClassifyError> {
    if current_date < container.arrival_date {
        return Err(ClassifyError::BeforeArrival {
            id: container.id.clone(),
            current: current_date,
            arrival: container.arrival_date,
        });
    }
    Ok((current_date - container.arrival_date).num_days())
}

/// Free days left; negative once the container is in demurrage.
pub fn remaining_free_days(
    container: &Container,
    current_date: NaiveDate,
) -> Result<i64, ClassifyError> {
    Ok(i64::from(container.free_days) - days_passed(container, current_date)?)
}

/// Consignee value `((1 / d_f) · REM_f) / S_v`.
///
/// With an appointment and a known visit rate the carrier's monthly visits
/// divide; otherwise the owner's monthly count of unappointed arrivals
/// does. Every denominator is clamped to at least one and negative
/// remaining days count as zero.
pub fn consignee_variable(
    container: &Container,
    current_date: NaiveDate,
    owner_census: u32,
) -> Result<f64, ClassifyError> {
    let rem = remaining_free_days(container, current_date)?.max(0);
    let free_days = f64::from(container.free_days.max(1));
    let visits = if container.appointment.is_some() && container.carrier_visits_per_month >= 1 {
        container.carrier_visits_per_month
    } else {
        owner_census.max(1)
    };
    // one rounding: the denominator is an exact integer product
    Ok(rem as f64 / (free_days * f64::from(visits)))
}

pub fn discriminant_scores(
    consignee_value: f64,
    cargo_value: f64,
    coeffs: &DiscriminantCoefficients,
) -> DiscriminantScores {
    DiscriminantScores {
        c1: coeffs.c1.score(consignee_value, cargo_value),
        c2: coeffs.c2.score(consignee_value, cargo_value),
        c3: coeffs.c3.score(consignee_value, cargo_value),
    }
}

pub fn category_for(remaining_free_days: i64, has_appointment: bool) -> OperationalCategory {
    match (remaining_free_days > 0, has_appointment) {
        (true, true) => OperationalCategory::Cat1,
        (true, false) => OperationalCategory::Cat2,
        // demurrage, booked or not
        (false, _) => OperationalCategory::Cat3,
    }
}

pub fn operational_category(
    container: &Container,
    current_date: NaiveDate,
) -> Result<OperationalCategory, ClassifyError> {
    let rem = remaining_free_days(container, current_date)?;
    Ok(category_for(rem, container.appointment.is_some()))
}

pub fn classify(
    container: &Container,
    current_date: NaiveDate,
    owner_census: u32,
    coeffs: &DiscriminantCoefficients,
) -> Result<Classification, ClassifyError> {
    let cargo_value = cargo_variable(container)?;
    let consignee_value = consignee_variable(container, current_date, owner_census)?;
    let remaining = remaining_free_days(container, current_date)?;
    let scores = discriminant_scores(consignee_value, cargo_value, coeffs);
    Ok(Classification {
        cargo_value,
        consignee_value,
        remaining_free_days: remaining,
        scores,
        stack_class: scores.argmax(),
        operational_category: category_for(remaining, container.appointment.is_some()),
    })
}

/// Per-owner count of unappointed arrivals in the calendar month of
/// `current_date`.
pub fn owner_census(containers: &[Container], current_date: NaiveDate) -> BTreeMap<String, u32> {
    let mut census = BTreeMap::new();
    for c in containers {
        if c.appointment.is_none()
            && c.arrival_date.year() == current_date.year()
            && c.arrival_date.month() == current_date.month()
        {
            *census.entry(c.owner_id.clone()).or_insert(0) += 1;
        }
    }
    census
}

/// Classifies a whole manifest, computing owner census along the way.
pub fn classify_all(
    containers: &[Container],
    current_date: NaiveDate,
    coeffs: &DiscriminantCoefficients,
) -> Result<BTreeMap<ContainerId, Classification>, ClassifyError> {
    let census = owner_census(containers, current_date);
    containers
        .iter()
        .map(|c| {
            let n = census.get(&c.owner_id).copied().unwrap_or(0);
            classify(c, current_date, n, coeffs).map(|k| (c.id.clone(), k))
        })
        .collect()
}

/// Fallback pickup likelihood by cargo type, used when a manifest row leaves
/// the probability blank. These are planning defaults, not measured values.
pub fn default_pickup_probability(cargo_type: &str) -> f64 {
    match cargo_type.to_ascii_lowercase().as_str() {
        "perishable" | "reefer" => 0.9,
        "electronics" => 0.85,
        "textiles" | "apparel" => 0.6,
        "furniture" => 0.55,
        "machinery" => 0.45,
        "bulk" | "raw_materials" => 0.35,
        _ => 0.5,
    }
}
