//! CSV manifest ingestion and container sources.
//!
//! Rows are accepted or rejected individually. A rejected row is reported
//! with its line number (the header is line 1) and the reason; the rest of
//! the file still loads. A blank `pickup_probability` falls back to the
//! cargo-type default.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, NaiveDate, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{AppointmentRef, Container, ContainerId, VisitOrigin};
use crate::zscore::default_pickup_probability;

pub const HEADER: [&str; 12] = [
    "container_id",
    "arrival_date",
    "free_days",
    "weight_tons",
    "cargo_type",
    "pickup_probability",
    "consignee_id",
    "carrier_id",
    "carrier_visits_per_month",
    "owner_id",
    "appointment_block",
    "destination",
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowError {
    /// File line, header being line 1.
    pub line: usize,
    pub container_id: Option<String>,
    pub reason: String,
}

impl fmt::Display for RowError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.container_id {
            Some(id) => write!(f, "line {} ({id}): {}", self.line, self.reason),
            None => write!(f, "line {}: {}", self.line, self.reason),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ManifestError {
    #[error("manifest has no header row")]
    MissingHeader,
    #[error("unexpected header: {found}")]
    BadHeader { found: String },
    #[error("manifest has no valid rows ({} rejected)", .errors.len())]
    NoValidRows { errors: Vec<RowError> },
    #[error("manifest is not readable CSV: {0}")]
    Csv(String),
}

/// Parsed manifest: accepted containers in file order plus rejected rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub containers: Vec<Container>,
    pub rejected: Vec<RowError>,
}

pub fn parse_manifest(bytes: &[u8]) -> Result<Manifest, ManifestError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(bytes);
    let header = reader
        .headers()
        .map_err(|e| ManifestError::Csv(e.to_string()))?
        .clone();
    if header.is_empty() || header.iter().all(str::is_empty) {
        return Err(ManifestError::MissingHeader);
    }
    if header.iter().ne(HEADER.iter().copied()) {
        return Err(ManifestError::BadHeader {
            found: header.iter().collect::<Vec<_>>().join(","),
        });
    }

    let mut containers = Vec::new();
    let mut rejected = Vec::new();
    let mut seen = BTreeSet::new();
    for record in reader.records() {
        let record = match record {
            Ok(r) => r,
            Err(e) => {
                let line = e.position().map_or(0, |p| p.line() as usize);
                rejected.push(RowError {
                    line,
                    container_id: None,
                    reason: e.to_string(),
                });
                continue;
            }
        };
        let line = record.position().map_or(0, |p| p.line() as usize);
        let id = record.get(0).filter(|s| !s.is_empty()).map(str::to_owned);
        match parse_row(&record) {
            Ok(c) => {
                if seen.insert(c.id.clone()) {
                    containers.push(c);
                } else {
                    rejected.push(RowError {
                        line,
                        container_id: id,
                        reason: "duplicate container_id".into(),
                    });
                }
            }
            Err(reason) => rejected.push(RowError {
                line,
                container_id: id,
                reason,
            }),
        }
    }
    if containers.is_empty() {
        return Err(ManifestError::NoValidRows { errors: rejected });
    }
    Ok(Manifest {
        containers,
        rejected,
    })
}

fn parse_row(record: &csv::StringRecord) -> Result<Container, String> {
    if record.len() != HEADER.len() {
        return Err(format!(
            "expected {} fields, found {}",
            HEADER.len(),
            record.len()
        ));
    }
    let field = |i: usize| record.get(i).unwrap_or("").trim();
    let number = |i: usize| -> Result<u32, String> {
        field(i)
            .parse::<u32>()
            .map_err(|_| format!("{}: not a non-negative integer: {:?}", HEADER[i], field(i)))
    };
    let optional = |i: usize| Some(field(i)).filter(|s| !s.is_empty()).map(str::to_owned);

    let id = field(0);
    if id.is_empty() {
        return Err("container_id is empty".into());
    }
    let arrival_date = NaiveDate::parse_from_str(field(1), "%Y-%m-%d")
        .map_err(|_| format!("arrival_date: not an ISO date: {:?}", field(1)))?;
    let free_days = number(2)?;
    let weight_tons: f64 = field(3)
        .parse()
        .map_err(|_| format!("weight_tons: not a number: {:?}", field(3)))?;
    if !(weight_tons.is_finite() && weight_tons > 0.0) {
        return Err(format!("weight_tons: {weight_tons} must be positive"));
    }
    let cargo_type = field(4).to_owned();
    let pickup_probability = match field(5) {
        "" => default_pickup_probability(&cargo_type),
        s => {
            let p: f64 = s
                .parse()
                .map_err(|_| format!("pickup_probability: not a number: {s:?}"))?;
            if !(0.0..=1.0).contains(&p) {
                return Err(format!("pickup_probability: {p} outside [0, 1]"));
            }
            p
        }
    };
    let carrier_visits_per_month = match field(8) {
        "" => 0,
        _ => number(8)?,
    };
    let appointment = match field(10) {
        "" => None,
        s => Some(AppointmentRef {
            block: s
                .parse()
                .map_err(|_| format!("appointment_block: not a block index: {s:?}"))?,
            origin: VisitOrigin::PreExisting,
        }),
    };
    Ok(Container {
        id: ContainerId::new(id),
        arrival_date,
        free_days,
        weight_tons,
        cargo_type,
        pickup_probability,
        consignee_id: field(6).to_owned(),
        carrier_id: optional(7),
        carrier_visits_per_month,
        owner_id: field(9).to_owned(),
        appointment,
        destination: field(11).to_owned(),
    })
}

/// Writes containers with the manifest header. Appointment origins are
/// not part of the format.
pub fn serialize_manifest(containers: &[Container]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(HEADER).expect("writing to memory");
    for c in containers {
        w.write_record([
            c.id.to_string(),
            c.arrival_date.format("%Y-%m-%d").to_string(),
            c.free_days.to_string(),
            c.weight_tons.to_string(),
            c.cargo_type.clone(),
            c.pickup_probability.to_string(),
            c.consignee_id.clone(),
            c.carrier_id.clone().unwrap_or_default(),
            c.carrier_visits_per_month.to_string(),
            c.owner_id.clone(),
            c.appointment
                .map(|a| a.block.to_string())
                .unwrap_or_default(),
            c.destination.clone(),
        ])
        .expect("writing to memory");
    }
    String::from_utf8(w.into_inner().expect("flush to memory")).expect("csv output is utf-8")
}

/// One container delivered by a source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Arrival {
    pub at: Option<DateTime<Utc>>,
    pub container: Container,
}

/// Pull interface over wherever containers come from.
pub trait ContainerSource: Send {
    fn pull(&mut self) -> Option<Arrival>;

    fn drain(&mut self) -> Vec<Arrival> {
        std::iter::from_fn(|| self.pull()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceKind {
    Csv,
    Replay,
}

impl FromStr for SourceKind {
    type Err = SourceError;

    fn from_str(s: &str) -> Result<Self, SourceError> {
        match s {
            "csv" => Ok(SourceKind::Csv),
            "replay" => Ok(SourceKind::Replay),
            other => Err(SourceError::UnknownKind(other.to_owned())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SourceError {
    #[error("unknown source kind {0:?}; expected csv or replay")]
    UnknownKind(String),
    #[error(transparent)]
    Manifest(#[from] ManifestError),
    #[error("replay recording: {0}")]
    Replay(String),
}

struct QueueSource(VecDeque<Arrival>);

impl ContainerSource for QueueSource {
    fn pull(&mut self) -> Option<Arrival> {
        self.0.pop_front()
    }
}

/// Opens a source over `bytes`. `csv` reads a manifest (rows without
/// timestamps); `replay` reads a JSON array of `{at, container}` events
/// and emits them in timestamp order.
pub fn source_adapter(kind: &str, bytes: &[u8]) -> Result<Box<dyn ContainerSource>, SourceError> {
    let arrivals: Vec<Arrival> = match kind.parse::<SourceKind>()? {
        SourceKind::Csv => parse_manifest(bytes)?
            .containers
            .into_iter()
            .map(|container| Arrival {
                at: None,
                container,
            })
            .collect(),
        SourceKind::Replay => {
            let mut events: Vec<Arrival> = if bytes.iter().all(u8::is_ascii_whitespace) {
                Vec::new()
            } else {
                serde_json::from_slice(bytes).map_err(|e| SourceError::Replay(e.to_string()))?
            };
            if events.iter().any(|e| e.at.is_none()) {
                return Err(SourceError::Replay("every event needs a timestamp".into()));
            }
            // stable: equal timestamps keep recording order
            events.sort_by_key(|e| e.at);
            events
        }
    };
    Ok(Box::new(QueueSource(arrivals.into())))
}
