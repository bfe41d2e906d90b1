//! Native JSON case schema.

use serde::{Deserialize, Serialize};
use serde_path_to_error::Segment;

use super::{Branch, BusId, CaseError, FlowLimit, Generator, Network};

#[derive(Debug, Serialize, Deserialize)]
struct CaseDoc {
    base_mva: f64,
    reference_bus: BusId,
    buses: Vec<BusId>,
    branches: Vec<BranchDoc>,
    generators: Vec<GeneratorDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
struct BranchDoc {
    from: BusId,
    to: BusId,
    x: f64,
    limit: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct GeneratorDoc {
    bus: BusId,
    pmin: f64,
    pmax: f64,
    cost: f64,
    participates: bool,
}

fn pointer(path: &serde_path_to_error::Path) -> String {
    let mut out = String::new();
    for seg in path.iter() {
        match seg {
            Segment::Seq { index } => out.push_str(&format!("/{index}")),
            Segment::Map { key } => out.push_str(&format!("/{key}")),
            Segment::Enum { variant } => out.push_str(&format!("/{variant}")),
            Segment::Unknown => out.push_str("/?"),
        }
    }
    if out.is_empty() {
        out.push('/');
    }
    out
}

pub fn parse_native(json: &str) -> Result<Network, CaseError> {
    let de = &mut serde_json::Deserializer::from_str(json);
    let doc: CaseDoc = serde_path_to_error::deserialize(de).map_err(|e| CaseError::Schema {
        pointer: pointer(e.path()),
        message: e.inner().to_string(),
    })?;
    from_doc(doc)
}

pub fn parse_native_value(value: serde_json::Value) -> Result<Network, CaseError> {
    let doc: CaseDoc = serde_path_to_error::deserialize(value).map_err(|e| CaseError::Schema {
        pointer: pointer(e.path()),
        message: e.inner().to_string(),
    })?;
    from_doc(doc)
}

fn from_doc(doc: CaseDoc) -> Result<Network, CaseError> {
    let branches = doc
        .branches
        .into_iter()
        .map(|b| Branch {
            from: b.from,
            to: b.to,
            x: b.x,
            limit: b.limit.map_or(FlowLimit::Unlimited, FlowLimit::Finite),
        })
        .collect();
    let generators = doc
        .generators
        .into_iter()
        .map(|g| Generator {
            bus: g.bus,
            pmin: g.pmin,
            pmax: g.pmax,
            cost: g.cost,
            participates: g.participates,
            synthetic: false,
        })
        .collect();
    Network::new(doc.base_mva, doc.reference_bus, doc.buses, branches, generators)
}

/// Serializes a network; placeholder generators are left out.
pub fn emit_native(net: &Network) -> String {
    let doc = CaseDoc {
        base_mva: net.base_mva,
        reference_bus: net.reference_bus,
        buses: net.buses.clone(),
        branches: net
            .branches
            .iter()
            .map(|b| BranchDoc {
                from: b.from,
                to: b.to,
                x: b.x,
                limit: b.limit.finite(),
            })
            .collect(),
        generators: net
            .generators
            .iter()
            .filter(|g| !g.synthetic)
            .map(|g| GeneratorDoc {
                bus: g.bus,
                pmin: g.pmin,
                pmax: g.pmax,
                cost: g.cost,
                participates: g.participates,
            })
            .collect(),
    };
    serde_json::to_string_pretty(&doc).expect("case document serializes")
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const TRIANGLE: &str = r#"{
      "base_mva": 100, "reference_bus": 3, "buses": [1, 2, 3],
      "branches": [
        {"from": 1, "to": 2, "x": 0.1, "limit": 1000},
        {"from": 2, "to": 3, "x": 0.1, "limit": 1000},
        {"from": 1, "to": 3, "x": 0.1, "limit": null}
      ],
      "generators": [
        {"bus": 1, "pmin": 0, "pmax": 200, "cost": 10, "participates": true},
        {"bus": 2, "pmin": 0, "pmax": 100, "cost": 20, "participates": true}
      ]
    }"#;

    #[test]
    fn triangle_document_parses() {
        let net = parse_native(TRIANGLE).unwrap();
        assert_eq!(net.n_lines(), 3);
        assert_eq!(net.branches[2].limit, FlowLimit::Unlimited);
        assert_eq!(net.n_generators(), 3);
    }

    #[test]
    fn negative_reactance_points_at_field() {
        let doc = TRIANGLE.replacen("\"x\": 0.1", "\"x\": -0.1", 1);
        let err = parse_native(&doc).unwrap_err();
        match err {
            CaseError::Invalid { pointer, .. } => assert_eq!(pointer, "/branches/0/x"),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn missing_reference_bus_is_an_error() {
        let doc = TRIANGLE.replace("\"reference_bus\": 3,", "");
        let err = parse_native(&doc).unwrap_err();
        assert!(err.to_string().contains("reference_bus"), "{err}");
    }

    #[test]
    fn type_errors_carry_a_pointer() {
        let doc = TRIANGLE.replacen("\"cost\": 20", "\"cost\": \"cheap\"", 1);
        match parse_native(&doc).unwrap_err() {
            CaseError::Schema { pointer, .. } => assert_eq!(pointer, "/generators/1/cost"),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn emit_then_parse_is_identity() {
        let net = parse_native(TRIANGLE).unwrap();
        let again = parse_native(&emit_native(&net)).unwrap();
        assert_eq!(net, again);
    }
}
