mod common;

use chrono::{DateTime, Utc};
use common::hand_classify;
use ips_core::{
    classify_all, fixture, parse_manifest, serialize_manifest, source_adapter, Arrival, Container,
    DiscriminantCoefficients, OperationalCategory, StackClass,
};

#[test]
fn fixture_loads_every_row() {
    let m = parse_manifest(fixture::MANIFEST_CSV.as_bytes()).unwrap();
    assert_eq!(m.containers.len(), 63);
    assert!(m.rejected.is_empty());
}

#[test]
fn serialize_then_parse_is_identity() {
    let m = parse_manifest(fixture::MANIFEST_CSV.as_bytes()).unwrap();
    let text = serialize_manifest(&m.containers);
    let again = parse_manifest(text.as_bytes()).unwrap();
    assert_eq!(again.containers, m.containers);
    assert_eq!(serialize_manifest(&again.containers), text);
}

#[test]
fn csv_source_yields_the_parsed_rows() {
    let parsed = parse_manifest(fixture::MANIFEST_CSV.as_bytes()).unwrap();
    let arrivals = source_adapter("csv", fixture::MANIFEST_CSV.as_bytes())
        .unwrap()
        .drain();
    let from_source: Vec<Container> = arrivals.iter().map(|a| a.container.clone()).collect();
    assert_eq!(from_source, parsed.containers);
    assert!(arrivals.iter().all(|a| a.at.is_none()));
}

#[test]
fn replay_source_orders_by_timestamp() {
    let containers = fixture::dataset().containers;
    let at = |s: &str| Some(s.parse::<DateTime<Utc>>().unwrap());
    let events = vec![
        Arrival {
            at: at("2024-03-15T10:00:00Z"),
            container: containers[0].clone(),
        },
        Arrival {
            at: at("2024-03-15T08:30:00Z"),
            container: containers[1].clone(),
        },
        Arrival {
            at: at("2024-03-15T09:15:00Z"),
            container: containers[2].clone(),
        },
    ];
    let bytes = serde_json::to_vec(&events).unwrap();
    let out = source_adapter("replay", &bytes).unwrap().drain();
    let ids: Vec<_> = out.iter().map(|a| a.container.id.clone()).collect();
    assert_eq!(
        ids,
        vec![
            containers[1].id.clone(),
            containers[2].id.clone(),
            containers[0].id.clone()
        ]
    );
}

#[test]
fn unknown_source_kind_is_rejected() {
    assert!(source_adapter("kafka", b"").is_err());
}

#[test]
fn fixture_classes_match_hand_evaluation() {
    let dataset = fixture::dataset();
    let engine = classify_all(
        &dataset.containers,
        dataset.current_date,
        &DiscriminantCoefficients::default(),
    )
    .unwrap();
    let hand = hand_classify(&dataset.containers, dataset.current_date);
    assert_eq!(engine.len(), hand.len());
    for (id, k) in &engine {
        let (class, rem) = hand[id];
        let expected = match class {
            1 => StackClass::C1,
            2 => StackClass::C2,
            _ => StackClass::C3,
        };
        assert_eq!(k.stack_class, expected, "{id}");
        assert_eq!(k.remaining_free_days, rem, "{id}");
    }
}

#[test]
fn fixture_covers_every_category_and_class() {
    let dataset = fixture::dataset();
    let engine = classify_all(
        &dataset.containers,
        dataset.current_date,
        &DiscriminantCoefficients::default(),
    )
    .unwrap();
    let count_cat = |c| {
        engine
            .values()
            .filter(|k| k.operational_category == c)
            .count()
    };
    assert_eq!(count_cat(OperationalCategory::Cat1), 27);
    assert_eq!(count_cat(OperationalCategory::Cat2), 24);
    assert_eq!(count_cat(OperationalCategory::Cat3), 12);
    for class in [StackClass::C1, StackClass::C2, StackClass::C3] {
        assert!(
            engine.values().any(|k| k.stack_class == class),
            "{class:?} missing"
        );
    }
}
