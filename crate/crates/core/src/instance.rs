//! Broadcast instances: items with lengths and timed requests for item sets.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rational::Rational;

pub type ItemIdx = usize;
pub type ReqIdx = usize;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ItemId(pub String);

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RequestId(pub String);

impl fmt::Display for ItemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Display for RequestId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for ItemId {
    fn from(s: &str) -> Self {
        ItemId(s.to_string())
    }
}

impl From<&str> for RequestId {
    fn from(s: &str) -> Self {
        RequestId(s.to_string())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Item {
    pub id: ItemId,
    pub length: Rational,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Request {
    pub id: RequestId,
    pub arrival: Rational,
    pub items: Vec<ItemId>,
}

/// Items plus requests. The order of `items` defines item indices, and
/// "lowest item" always means lowest index in this list.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BroadcastInstance {
    pub items: Vec<Item>,
    pub requests: Vec<Request>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    NonPositiveLength { item: ItemId },
    DuplicateItemId { item: ItemId },
    DuplicateRequestId { request: RequestId },
    EmptyRequest { request: RequestId },
    NegativeArrival { request: RequestId },
    DanglingItem { request: RequestId, item: ItemId },
    RepeatedItemInRequest { request: RequestId, item: ItemId },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NonPositiveLength { item } => write!(f, "item {item}: length must be > 0"),
            Violation::DuplicateItemId { item } => write!(f, "duplicate item id {item}"),
            Violation::DuplicateRequestId { request } => {
                write!(f, "duplicate request id {request}")
            }
            Violation::EmptyRequest { request } => write!(f, "request {request}: empty item set"),
            Violation::NegativeArrival { request } => {
                write!(f, "request {request}: arrival must be >= 0")
            }
            Violation::DanglingItem { request, item } => {
                write!(f, "request {request}: dangling reference to unknown item {item}")
            }
            Violation::RepeatedItemInRequest { request, item } => {
                write!(f, "request {request}: item {item} listed twice")
            }
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_valid() {
            return f.write_str("valid");
        }
        write!(f, "invalid:")?;
        for v in &self.violations {
            write!(f, " {v};")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("invalid instance: {0}")]
pub struct InvalidInstance(pub ValidationReport);

pub fn validate_instance(inst: &BroadcastInstance) -> ValidationReport {
    let mut violations = Vec::new();
    let mut item_ids = HashSet::new();
    for item in &inst.items {
        if !item.length.is_positive() {
            violations.push(Violation::NonPositiveLength { item: item.id.clone() });
        }
        if !item_ids.insert(&item.id) {
            violations.push(Violation::DuplicateItemId { item: item.id.clone() });
        }
    }
    let mut req_ids = HashSet::new();
    for req in &inst.requests {
        if !req_ids.insert(&req.id) {
            violations.push(Violation::DuplicateRequestId { request: req.id.clone() });
        }
        if req.items.is_empty() {
            violations.push(Violation::EmptyRequest { request: req.id.clone() });
        }
        if req.arrival.is_negative() {
            violations.push(Violation::NegativeArrival { request: req.id.clone() });
        }
        let mut seen = HashSet::new();
        for it in &req.items {
            if !item_ids.contains(it) {
                violations.push(Violation::DanglingItem { request: req.id.clone(), item: it.clone() });
            } else if !seen.insert(it) {
                violations.push(Violation::RepeatedItemInRequest { request: req.id.clone(), item: it.clone() });
            }
        }
    }
    ValidationReport { violations }
}

/// Index-resolved view of a valid instance, used by every simulator.
#[derive(Clone, Debug)]
pub struct Resolved {
    pub lengths: Vec<Rational>,
    pub arrivals: Vec<Rational>,
    /// Sorted item indices per request.
    pub sets: Vec<Vec<ItemIdx>>,
    /// Request indices sorted by (arrival, index).
    pub arrival_order: Vec<ReqIdx>,
}

impl Resolved {
    pub fn n_items(&self) -> usize {
        self.lengths.len()
    }

    pub fn n_requests(&self) -> usize {
        self.arrivals.len()
    }
}

impl BroadcastInstance {
    pub fn item_index(&self, id: &ItemId) -> Option<ItemIdx> {
        self.items.iter().position(|i| &i.id == id)
    }

    pub fn request_index(&self, id: &RequestId) -> Option<ReqIdx> {
        self.requests.iter().position(|r| &r.id == id)
    }

    pub fn resolve(&self) -> Result<Resolved, InvalidInstance> {
        let report = validate_instance(self);
        if !report.is_valid() {
            return Err(InvalidInstance(report));
        }
        let index: HashMap<&ItemId, ItemIdx> = self.items.iter().enumerate().map(|(k, i)| (&i.id, k)).collect();
        let sets = self
            .requests
            .iter()
            .map(|r| {
                let s: BTreeSet<ItemIdx> = r.items.iter().map(|i| index[i]).collect();
                s.into_iter().collect()
            })
            .collect();
        let mut arrival_order: Vec<ReqIdx> = (0..self.requests.len()).collect();
        arrival_order.sort_by(|&a, &b| self.requests[a].arrival.cmp(&self.requests[b].arrival).then(a.cmp(&b)));
        Ok(Resolved {
            lengths: self.items.iter().map(|i| i.length.clone()).collect(),
            arrivals: self.requests.iter().map(|r| r.arrival.clone()).collect(),
            sets,
            arrival_order,
        })
    }

    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("instance serialization cannot fail")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    fn item(id: &str, len: Rational) -> Item {
        Item { id: id.into(), length: len }
    }

    fn req(id: &str, at: Rational, items: &[&str]) -> Request {
        Request { id: id.into(), arrival: at, items: items.iter().map(|&s| s.into()).collect() }
    }

    #[test]
    fn dangling_reference_is_reported() {
        let inst =
            BroadcastInstance { items: vec![item("A", rat(1, 1))], requests: vec![req("S1", rat(0, 1), &["A", "Z"])] };
        let report = validate_instance(&inst);
        assert_eq!(report.violations, vec![Violation::DanglingItem { request: "S1".into(), item: "Z".into() }]);
    }

    #[test]
    fn empty_set_and_bad_length_and_duplicates() {
        let inst = BroadcastInstance {
            items: vec![item("A", rat(0, 1)), item("A", rat(1, 1))],
            requests: vec![req("S1", rat(0, 1), &[]), req("S1", rat(-1, 1), &["A"])],
        };
        let v = validate_instance(&inst).violations;
        assert!(v.contains(&Violation::NonPositiveLength { item: "A".into() }));
        assert!(v.contains(&Violation::DuplicateItemId { item: "A".into() }));
        assert!(v.contains(&Violation::EmptyRequest { request: "S1".into() }));
        assert!(v.contains(&Violation::DuplicateRequestId { request: "S1".into() }));
        assert!(v.contains(&Violation::NegativeArrival { request: "S1".into() }));
    }

    #[test]
    fn json_rejects_unknown_fields() {
        let ok = r#"{"items":[{"id":"A","length":"3/2"}],"requests":[{"id":"S1","arrival":"0","items":["A"]}]}"#;
        let inst = BroadcastInstance::from_json(ok).unwrap();
        assert_eq!(inst.items[0].length, rat(3, 2));
        let bad = r#"{"items":[{"id":"A","length":"3/2","color":"red"}],"requests":[]}"#;
        assert!(BroadcastInstance::from_json(bad).is_err());
        let bad_top = r#"{"items":[],"requests":[],"extra":1}"#;
        assert!(BroadcastInstance::from_json(bad_top).is_err());
    }

    #[test]
    fn resolve_orders_arrivals_stably() {
        let inst = BroadcastInstance {
            items: vec![item("A", rat(1, 1)), item("B", rat(1, 1))],
            requests: vec![
                req("S1", rat(2, 1), &["B", "A"]),
                req("S2", rat(0, 1), &["A"]),
                req("S3", rat(2, 1), &["B"]),
            ],
        };
        let r = inst.resolve().unwrap();
        assert_eq!(r.arrival_order, vec![1, 0, 2]);
        assert_eq!(r.sets[0], vec![0, 1]);
    }
}
