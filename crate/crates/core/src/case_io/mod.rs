//! Power-system case model, parsers and derived DC power-flow matrices.
//!
//! A [`Network`] always carries exactly one generation variable per bus at
//! minimum: buses without a declared generator get a synthetic zero-capacity
//! unit so every bus has an injection to index. Synthetic units are skipped
//! when the network is written back out.

mod matpower;
mod native;
mod ptdf;
pub mod synthetic;

use std::collections::{BTreeMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use matpower::parse_matpower;
pub use native::{emit_native, parse_native, parse_native_value};
pub use ptdf::{angle_flows, compute_ptdf, PtdfMatrix};

pub type BusId = i64;

#[derive(Debug, Error)]
pub enum CaseError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("missing block `{0}`")]
    MissingBlock(String),
    #[error("no reference bus (bus type 3) declared")]
    NoReferenceBus,
    #[error("network is disconnected: bus {0} is unreachable from the reference bus")]
    Disconnected(BusId),
    #[error("invalid case at {pointer}: {message}")]
    Invalid { pointer: String, message: String },
    #[error("schema violation at {pointer}: {message}")]
    Schema { pointer: String, message: String },
    #[error("reduced susceptance matrix is singular")]
    SingularSusceptance,
}

fn invalid(pointer: impl Into<String>, message: impl Into<String>) -> CaseError {
    CaseError::Invalid {
        pointer: pointer.into(),
        message: message.into(),
    }
}

/// Thermal limit of a line in MW. `Unlimited` is the +inf sentinel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FlowLimit {
    Finite(f64),
    Unlimited,
}

impl FlowLimit {
    pub fn value(self) -> f64 {
        match self {
            FlowLimit::Finite(v) => v,
            FlowLimit::Unlimited => f64::INFINITY,
        }
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            FlowLimit::Finite(v) => Some(v),
            FlowLimit::Unlimited => None,
        }
    }

    pub fn is_unlimited(self) -> bool {
        matches!(self, FlowLimit::Unlimited)
    }
}

impl fmt::Display for FlowLimit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FlowLimit::Finite(v) => write!(f, "{v}"),
            FlowLimit::Unlimited => f.write_str("inf"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub from: BusId,
    pub to: BusId,
    /// Series reactance in p.u.
    pub x: f64,
    pub limit: FlowLimit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    pub bus: BusId,
    pub pmin: f64,
    pub pmax: f64,
    /// Linear cost, $/MWh.
    pub cost: f64,
    pub participates: bool,
    /// Zero-capacity placeholder for a bus without a declared generator.
    pub synthetic: bool,
}

impl Generator {
    pub fn placeholder(bus: BusId) -> Self {
        Generator {
            bus,
            pmin: 0.0,
            pmax: 0.0,
            cost: 0.0,
            participates: false,
            synthetic: true,
        }
    }

    pub fn has_capacity(&self) -> bool {
        self.pmax > 0.0 || self.pmin < 0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub base_mva: f64,
    pub reference_bus: BusId,
    pub buses: Vec<BusId>,
    pub branches: Vec<Branch>,
    pub generators: Vec<Generator>,
}

impl Network {
    /// Validates invariants, appends placeholder generators for bare buses.
    pub fn new(
        base_mva: f64,
        reference_bus: BusId,
        buses: Vec<BusId>,
        branches: Vec<Branch>,
        mut generators: Vec<Generator>,
    ) -> Result<Self, CaseError> {
        for bus in &buses {
            if !generators.iter().any(|g| g.bus == *bus) {
                generators.push(Generator::placeholder(*bus));
            }
        }
        let net = Network {
            base_mva,
            reference_bus,
            buses,
            branches,
            generators,
        };
        net.validate()?;
        Ok(net)
    }

    pub fn validate(&self) -> Result<(), CaseError> {
        if !(self.base_mva.is_finite() && self.base_mva > 0.0) {
            return Err(invalid("/base_mva", "must be positive"));
        }
        if self.buses.is_empty() {
            return Err(invalid("/buses", "at least one bus required"));
        }
        let mut seen = BTreeMap::new();
        for (k, b) in self.buses.iter().enumerate() {
            if seen.insert(*b, k).is_some() {
                return Err(invalid(format!("/buses/{k}"), format!("duplicate bus id {b}")));
            }
        }
        if !seen.contains_key(&self.reference_bus) {
            return Err(invalid(
                "/reference_bus",
                format!("bus {} is not declared", self.reference_bus),
            ));
        }
        for (k, br) in self.branches.iter().enumerate() {
            for (field, bus) in [("from", br.from), ("to", br.to)] {
                if !seen.contains_key(&bus) {
                    return Err(invalid(
                        format!("/branches/{k}/{field}"),
                        format!("bus {bus} is not declared"),
                    ));
                }
            }
            if br.from == br.to {
                return Err(invalid(format!("/branches/{k}"), "self loop"));
            }
            if !(br.x.is_finite() && br.x > 0.0) {
                return Err(invalid(
                    format!("/branches/{k}/x"),
                    format!("reactance must be positive, got {}", br.x),
                ));
            }
            if let FlowLimit::Finite(l) = br.limit {
                if !(l.is_finite() && l > 0.0) {
                    return Err(invalid(
                        format!("/branches/{k}/limit"),
                        format!("flow limit must be positive, got {l}"),
                    ));
                }
            }
        }
        for (k, g) in self.generators.iter().enumerate() {
            if !seen.contains_key(&g.bus) {
                return Err(invalid(
                    format!("/generators/{k}/bus"),
                    format!("bus {} is not declared", g.bus),
                ));
            }
            if !(g.pmin.is_finite() && g.pmax.is_finite() && g.pmin <= g.pmax) {
                return Err(invalid(
                    format!("/generators/{k}"),
                    format!("need finite pmin <= pmax, got [{}, {}]", g.pmin, g.pmax),
                ));
            }
            if !g.cost.is_finite() {
                return Err(invalid(format!("/generators/{k}/cost"), "cost must be finite"));
            }
        }
        self.check_connected()
    }

    fn check_connected(&self) -> Result<(), CaseError> {
        let n = self.buses.len();
        let mut adj = vec![Vec::new(); n];
        for br in &self.branches {
            let (f, t) = (self.bus_index(br.from).unwrap(), self.bus_index(br.to).unwrap());
            adj[f].push(t);
            adj[t].push(f);
        }
        let start = self.reference_index();
        let mut seen = vec![false; n];
        seen[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        match seen.iter().position(|s| !s) {
            Some(k) => Err(CaseError::Disconnected(self.buses[k])),
            None => Ok(()),
        }
    }

    pub fn n_buses(&self) -> usize {
        self.buses.len()
    }

    pub fn n_lines(&self) -> usize {
        self.branches.len()
    }

    pub fn n_generators(&self) -> usize {
        self.generators.len()
    }

    pub fn bus_index(&self, id: BusId) -> Option<usize> {
        self.buses.iter().position(|b| *b == id)
    }

    pub fn reference_index(&self) -> usize {
        self.bus_index(self.reference_bus)
            .expect("validated network has a declared reference bus")
    }

    /// Bus position of every generator.
    pub fn generator_bus_indices(&self) -> Vec<usize> {
        self.generators
            .iter()
            .map(|g| self.bus_index(g.bus).expect("validated generator bus"))
            .collect()
    }

    /// `(from, to)` bus positions of every branch.
    pub fn branch_endpoints(&self) -> Vec<(usize, usize)> {
        self.branches
            .iter()
            .map(|b| {
                (
                    self.bus_index(b.from).expect("validated branch"),
                    self.bus_index(b.to).expect("validated branch"),
                )
            })
            .collect()
    }

    pub fn total_capacity(&self) -> f64 {
        self.generators.iter().map(|g| g.pmax.max(0.0)).sum()
    }

    /// Copy with the reference bus moved; used for reference-independence checks.
    pub fn with_reference(&self, bus: BusId) -> Result<Network, CaseError> {
        let mut net = self.clone();
        net.reference_bus = bus;
        net.validate()?;
        Ok(net)
    }
}

/// Per-bus net-demand forecast in MW (negative values allowed).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forecast(pub Vec<f64>);

impl Forecast {
    pub fn new(values: Vec<f64>, net: &Network) -> Result<Self, CaseError> {
        if values.len() != net.n_buses() {
            return Err(invalid(
                "/forecast",
                format!("expected {} entries, got {}", net.n_buses(), values.len()),
            ));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(invalid(format!("/forecast/{k}"), "entry is not finite"));
        }
        Ok(Forecast(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Loads a case file, choosing the parser from `format` or the file extension.
pub fn load_case(path: &std::path::Path, format: Option<&str>) -> Result<Network, CaseError> {
    let text = std::fs::read_to_string(path).map_err(|e| CaseError::Invalid {
        pointer: path.display().to_string(),
        message: e.to_string(),
    })?;
    let matpower = match format {
        Some("matpower") => true,
        Some("json") | Some("native") => false,
        Some(other) => {
            return Err(invalid("--format", format!("unknown case format `{other}`")));
        }
        None => path.extension().and_then(|e| e.to_str()) == Some("m"),
    };
    if matpower {
        parse_matpower(&text)
    } else {
        parse_native(&text)
    }
}
