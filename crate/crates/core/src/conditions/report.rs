use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use crate::geometry::Point;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum ConditionId {
    #[serde(rename = "D.i")]
    Di,
    #[serde(rename = "D.ii")]
    Dii,
    #[serde(rename = "D.iii")]
    Diii,
    #[serde(rename = "G.i")]
    Gi,
    #[serde(rename = "G.ii")]
    Gii,
    #[serde(rename = "A.i")]
    Ai,
    #[serde(rename = "A.ii")]
    Aii,
    #[serde(rename = "C2cusp")]
    C2Cusp,
    /// Dai-Williams assumption on a polygon.
    #[serde(rename = "DW")]
    Dw,
    /// Minimal half-plane representation of a polygon.
    #[serde(rename = "DW.min")]
    DwMin,
    /// Exit-set compatibility for the jump-boundary example.
    #[serde(rename = "J.exit")]
    JumpExit,
}

impl fmt::Display for ConditionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).expect("serializable id");
        f.write_str(s.as_str().expect("string id"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Status {
    Pass,
    Fail,
    Inconclusive,
}

impl Status {
    /// Worst of two statuses: Fail over Inconclusive over Pass.
    pub fn worst(self, other: Status) -> Status {
        use Status::*;
        match (self, other) {
            (Fail, _) | (_, Fail) => Fail,
            (Inconclusive, _) | (_, Inconclusive) => Inconclusive,
            _ => Pass,
        }
    }
}

/// A point with the numbers that justify a verdict there.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Witness {
    pub label: String,
    pub point: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub indices: Vec<usize>,
    pub values: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub trace: Vec<f64>,
}

impl Witness {
    pub fn at(label: impl Into<String>, point: Point) -> Self {
        Witness {
            label: label.into(),
            point: Some([point.x, point.y]),
            indices: Vec::new(),
            values: BTreeMap::new(),
            trace: Vec::new(),
        }
    }

    pub fn value(mut self, key: &str, v: f64) -> Self {
        self.values.insert(key.to_string(), v);
        self
    }

    /// 1-based piece or constraint indices.
    pub fn indices(mut self, idx: impl IntoIterator<Item = usize>) -> Self {
        self.indices = idx.into_iter().map(|i| i + 1).collect();
        self
    }

    pub fn trace(mut self, t: Vec<f64>) -> Self {
        self.trace = t;
        self
    }

    pub fn point(&self) -> Option<Point> {
        self.point.map(|[x, y]| Point::new(x, y))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckReport {
    pub condition_id: ConditionId,
    pub subject: String,
    pub status: Status,
    pub witnesses: Vec<Witness>,
    pub tolerances: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl CheckReport {
    pub fn new(id: ConditionId, subject: impl Into<String>, status: Status) -> Self {
        CheckReport {
            condition_id: id,
            subject: subject.into(),
            status,
            witnesses: Vec::new(),
            tolerances: BTreeMap::new(),
            notes: Vec::new(),
        }
    }

    pub fn tol(mut self, key: &str, v: f64) -> Self {
        self.tolerances.insert(key.to_string(), v);
        self
    }

    pub fn witness(mut self, w: Witness) -> Self {
        self.witnesses.push(w);
        self
    }

    pub fn note(mut self, n: impl Into<String>) -> Self {
        self.notes.push(n.into());
        self
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }

    /// Every Fail must carry a witness point.
    pub fn is_well_formed(&self) -> bool {
        self.status != Status::Fail || self.witnesses.iter().any(|w| w.point.is_some())
    }

    pub(crate) fn sort_key(&self) -> (ConditionId, String) {
        (self.condition_id, self.subject.clone())
    }
}

pub fn fmt_point(p: Point) -> String {
    format!("({}, {})", p.x, p.y)
}
