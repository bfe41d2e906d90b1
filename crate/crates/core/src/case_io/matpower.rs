//! Reader for the subset of MATPOWER `.m` case files the screening models need.

use std::collections::BTreeMap;

use log::warn;

use super::{Branch, BusId, CaseError, FlowLimit, Generator, Network};

const DEFAULT_COST: f64 = 1.0;

#[derive(Debug)]
enum Value {
    Scalar(f64),
    Matrix(Vec<Vec<f64>>),
    Other,
}

struct Cursor {
    chars: Vec<char>,
    pos: usize,
    line: usize,
    column: usize,
}

impl Cursor {
    fn new(src: &str) -> Self {
        Cursor {
            chars: src.chars().collect(),
            pos: 0,
            line: 1,
            column: 1,
        }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn error(&self, message: impl Into<String>) -> CaseError {
        CaseError::Syntax {
            line: self.line,
            column: self.column,
            message: message.into(),
        }
    }

    fn skip_line(&mut self) {
        while let Some(c) = self.peek() {
            if c == '\n' {
                break;
            }
            self.bump();
        }
    }

    /// Skips spaces, tabs, and comments; newlines too when `newlines` is set.
    fn skip_blank(&mut self, newlines: bool) {
        while let Some(c) = self.peek() {
            match c {
                ' ' | '\t' | '\r' => {
                    self.bump();
                }
                '\n' if newlines => {
                    self.bump();
                }
                '%' => self.skip_line(),
                _ => break,
            }
        }
    }

    fn word(&mut self) -> String {
        let mut s = String::new();
        while let Some(c) = self.peek() {
            if c.is_ascii_alphanumeric() || c == '_' || c == '.' {
                s.push(c);
                self.bump();
            } else {
                break;
            }
        }
        s
    }

    fn number_token(&mut self) -> String {
        let mut s = String::new();
        while let Some(c) = self.peek() {
            if c.is_ascii_alphanumeric() || matches!(c, '.' | '+' | '-') {
                s.push(c);
                self.bump();
            } else {
                break;
            }
        }
        s
    }

    fn parse_number(&mut self) -> Result<f64, CaseError> {
        let (line, column) = (self.line, self.column);
        let tok = self.number_token();
        let lower = tok.to_ascii_lowercase();
        let v = match lower.as_str() {
            "inf" | "+inf" => Some(f64::INFINITY),
            "-inf" => Some(f64::NEG_INFINITY),
            _ => tok.parse::<f64>().ok(),
        };
        v.ok_or(CaseError::Syntax {
            line,
            column,
            message: format!("expected a number, found `{tok}`"),
        })
    }

    fn parse_matrix(&mut self) -> Result<Vec<Vec<f64>>, CaseError> {
        let mut rows = Vec::new();
        let mut row = Vec::new();
        loop {
            self.skip_blank(false);
            match self.peek() {
                None => return Err(self.error("unterminated matrix, expected `]`")),
                Some(']') => {
                    self.bump();
                    if !row.is_empty() {
                        rows.push(std::mem::take(&mut row));
                    }
                    return Ok(rows);
                }
                Some(';') | Some('\n') => {
                    self.bump();
                    if !row.is_empty() {
                        rows.push(std::mem::take(&mut row));
                    }
                }
                Some(',') => {
                    self.bump();
                }
                Some(c) if c.is_ascii_digit() || matches!(c, '-' | '+' | '.' | 'I' | 'i' | 'N') => {
                    row.push(self.parse_number()?);
                }
                Some(c) => return Err(self.error(format!("unexpected character `{c}` in matrix"))),
            }
        }
    }

    fn skip_delimited(&mut self, open: char, close: char) -> Result<(), CaseError> {
        let mut depth = 0usize;
        let mut in_quote = false;
        while let Some(c) = self.bump() {
            if in_quote {
                if c == '\'' {
                    in_quote = false;
                }
                continue;
            }
            match c {
                '\'' => in_quote = true,
                '%' => self.skip_line(),
                c if c == open => depth += 1,
                c if c == close => {
                    depth -= 1;
                    if depth == 0 {
                        return Ok(());
                    }
                }
                _ => {}
            }
        }
        Err(self.error(format!("unterminated `{open}`")))
    }

    fn parse_value(&mut self) -> Result<Value, CaseError> {
        self.skip_blank(false);
        match self.peek() {
            Some('[') => {
                self.bump();
                Ok(Value::Matrix(self.parse_matrix()?))
            }
            Some('{') => {
                self.skip_delimited('{', '}')?;
                Ok(Value::Other)
            }
            Some('\'') => {
                self.bump();
                while let Some(c) = self.bump() {
                    if c == '\'' {
                        return Ok(Value::Other);
                    }
                }
                Err(self.error("unterminated string"))
            }
            Some(c) if c.is_ascii_digit() || matches!(c, '-' | '+' | '.') => {
                Ok(Value::Scalar(self.parse_number()?))
            }
            Some(_) => {
                self.skip_line();
                Ok(Value::Other)
            }
            None => Err(self.error("expected a value")),
        }
    }
}

fn parse_blocks(text: &str) -> Result<BTreeMap<String, Value>, CaseError> {
    let mut cur = Cursor::new(text);
    let mut blocks = BTreeMap::new();
    loop {
        cur.skip_blank(true);
        let Some(c) = cur.peek() else { break };
        if c == ';' {
            cur.bump();
            continue;
        }
        if !(c.is_ascii_alphabetic() || c == '_') {
            return Err(cur.error(format!("unexpected character `{c}`")));
        }
        let name = cur.word();
        if name == "function" || name == "end" || name == "return" {
            cur.skip_line();
            continue;
        }
        cur.skip_blank(false);
        if cur.peek() != Some('=') {
            return Err(cur.error(format!("expected `=` after `{name}`")));
        }
        cur.bump();
        let value = cur.parse_value()?;
        blocks.insert(name, value);
    }
    Ok(blocks)
}

fn matrix<'b>(
    blocks: &'b BTreeMap<String, Value>,
    name: &str,
) -> Result<&'b Vec<Vec<f64>>, CaseError> {
    match blocks.get(name) {
        Some(Value::Matrix(m)) => Ok(m),
        Some(_) => Err(CaseError::Invalid {
            pointer: name.to_string(),
            message: "expected a matrix".into(),
        }),
        None => Err(CaseError::MissingBlock(name.to_string())),
    }
}

fn column(row: &[f64], col: usize, block: &str, r: usize) -> Result<f64, CaseError> {
    row.get(col - 1).copied().ok_or_else(|| CaseError::Invalid {
        pointer: format!("{block}[{}]", r + 1),
        message: format!("row has {} columns, need column {col}", row.len()),
    })
}

fn as_bus_id(v: f64, block: &str, r: usize) -> Result<BusId, CaseError> {
    if v.fract() != 0.0 || !v.is_finite() {
        return Err(CaseError::Invalid {
            pointer: format!("{block}[{}]", r + 1),
            message: format!("bus id {v} is not an integer"),
        });
    }
    Ok(v as BusId)
}

/// Linear cost from a polynomial `gencost` row; `None` when unusable.
fn linear_cost(row: &[f64]) -> Option<f64> {
    let model = *row.first()?;
    if model != 2.0 {
        return None;
    }
    let ncost = *row.get(3)? as usize;
    if ncost < 2 {
        return None;
    }
    let coeffs = row.get(4..4 + ncost)?;
    if ncost > 2 && coeffs[..ncost - 2].iter().any(|c| *c != 0.0) {
        warn!("gencost: dropping non-linear polynomial terms");
    }
    Some(coeffs[ncost - 2])
}

/// Parses MATPOWER case text (`mpc.baseMVA`, `mpc.bus`, `mpc.branch`, `mpc.gen`,
/// optional `mpc.gencost`).
pub fn parse_matpower(text: &str) -> Result<Network, CaseError> {
    let blocks = parse_blocks(text)?;
    for name in blocks.keys() {
        if !matches!(
            name.as_str(),
            "mpc.baseMVA" | "mpc.bus" | "mpc.branch" | "mpc.gen" | "mpc.gencost" | "mpc.version"
        ) {
            warn!("ignoring MATPOWER field `{name}`");
        }
    }
    let base_mva = match blocks.get("mpc.baseMVA") {
        Some(Value::Scalar(v)) => *v,
        Some(_) => {
            return Err(CaseError::Invalid {
                pointer: "mpc.baseMVA".into(),
                message: "expected a scalar".into(),
            })
        }
        None => return Err(CaseError::MissingBlock("mpc.baseMVA".into())),
    };
    let bus_rows = matrix(&blocks, "mpc.bus")?;
    let branch_rows = matrix(&blocks, "mpc.branch")?;
    let gen_rows = matrix(&blocks, "mpc.gen")?;

    let mut buses = Vec::with_capacity(bus_rows.len());
    let mut reference = None;
    for (r, row) in bus_rows.iter().enumerate() {
        let id = as_bus_id(column(row, 1, "mpc.bus", r)?, "mpc.bus", r)?;
        if column(row, 2, "mpc.bus", r)? == 3.0 && reference.is_none() {
            reference = Some(id);
        }
        buses.push(id);
    }
    let reference_bus = reference.ok_or(CaseError::NoReferenceBus)?;

    let mut branches = Vec::with_capacity(branch_rows.len());
    for (r, row) in branch_rows.iter().enumerate() {
        if row.len() >= 11 && row[10] <= 0.0 {
            warn!("skipping out-of-service branch at mpc.branch row {}", r + 1);
            continue;
        }
        let rate_a = column(row, 6, "mpc.branch", r)?;
        branches.push(Branch {
            from: as_bus_id(column(row, 1, "mpc.branch", r)?, "mpc.branch", r)?,
            to: as_bus_id(column(row, 2, "mpc.branch", r)?, "mpc.branch", r)?,
            x: column(row, 4, "mpc.branch", r)?,
            limit: if rate_a == 0.0 || rate_a.is_infinite() {
                FlowLimit::Unlimited
            } else {
                FlowLimit::Finite(rate_a)
            },
        });
    }

    let costs: Option<&Vec<Vec<f64>>> = match blocks.get("mpc.gencost") {
        Some(Value::Matrix(m)) => Some(m),
        _ => None,
    };
    if costs.is_none() {
        warn!("no mpc.gencost block; using cost {DEFAULT_COST} for every generator");
    }
    let mut generators = Vec::with_capacity(gen_rows.len());
    for (r, row) in gen_rows.iter().enumerate() {
        if row.len() >= 8 && row[7] <= 0.0 {
            warn!("skipping out-of-service generator at mpc.gen row {}", r + 1);
            continue;
        }
        let cost = match costs.and_then(|c| c.get(r)) {
            Some(cost_row) => linear_cost(cost_row).unwrap_or_else(|| {
                warn!("gencost row {} is not polynomial; using default cost", r + 1);
                DEFAULT_COST
            }),
            None => DEFAULT_COST,
        };
        let pmax = column(row, 9, "mpc.gen", r)?;
        generators.push(Generator {
            bus: as_bus_id(column(row, 1, "mpc.gen", r)?, "mpc.gen", r)?,
            pmin: column(row, 10, "mpc.gen", r)?,
            pmax,
            cost,
            participates: pmax > 0.0,
            synthetic: false,
        });
    }

    Network::new(base_mva, reference_bus, buses, branches, generators)
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO_BUS: &str = r#"function mpc = case2
% tiny test case
mpc.version = '2';
mpc.baseMVA = 100;
%% bus data
%	bus_i	type	Pd	Qd	Gs	Bs	area	Vm	Va	baseKV	zone	Vmax	Vmin
mpc.bus = [
	1	2	0	0	0	0	1	1	0	345	1	1.1	0.9;
	2	3	50	0	0	0	1	1	0	345	1	1.1	0.9;
];
mpc.gen = [
	1	0	0	300	-300	1	100	1	250	10	0	0	0	0	0	0	0	0	0	0	0;
];
mpc.branch = [
	1	2	0.01	0.1	0	100	250	250	0	0	1	-360	360;
];
mpc.gencost = [
	2	0	0	3	0.11	5	150;
];
mpc.bus_name = { 'A'; 'B' };
"#;

    #[test]
    fn two_bus_case_is_transcribed() {
        let net = parse_matpower(TWO_BUS).unwrap();
        assert_eq!(net.buses, vec![1, 2]);
        assert_eq!(net.reference_bus, 2);
        assert_eq!(net.n_lines(), 1);
        assert_eq!(net.branches[0].x, 0.1);
        assert_eq!(net.branches[0].limit, FlowLimit::Finite(100.0));
        let g = &net.generators[0];
        assert_eq!((g.bus, g.pmin, g.pmax, g.cost), (1, 10.0, 250.0, 5.0));
        // bus 2 has no generator, so a placeholder is added
        assert_eq!(net.n_generators(), 2);
    }

    #[test]
    fn zero_rate_a_means_unlimited() {
        let text = TWO_BUS.replace("0.1	0	100	250", "0.1	0	0	250");
        let net = parse_matpower(&text).unwrap();
        assert_eq!(net.branches[0].limit, FlowLimit::Unlimited);
    }

    #[test]
    fn missing_bus_block_is_named() {
        let start = TWO_BUS.find("mpc.bus = [").unwrap();
        let end = TWO_BUS[start..].find("];").unwrap() + start + 2;
        let text = format!("{}{}", &TWO_BUS[..start], &TWO_BUS[end..]);
        let err = parse_matpower(&text).unwrap_err();
        assert!(matches!(err, CaseError::MissingBlock(ref b) if b == "mpc.bus"), "{err}");
    }

    #[test]
    fn missing_gencost_defaults_cost() {
        let start = TWO_BUS.find("mpc.gencost").unwrap();
        let end = TWO_BUS[start..].find("];").unwrap() + start + 2;
        let text = format!("{}{}", &TWO_BUS[..start], &TWO_BUS[end..]);
        let net = parse_matpower(&text).unwrap();
        assert_eq!(net.generators[0].cost, DEFAULT_COST);
    }

    #[test]
    fn syntax_error_reports_position() {
        let text = "mpc.baseMVA = 100;\nmpc.bus = [\n 1 3 x 0;\n];";
        match parse_matpower(text).unwrap_err() {
            CaseError::Syntax { line, column, .. } => assert_eq!((line, column), (3, 6)),
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn no_reference_bus_is_an_error() {
        let text = TWO_BUS.replace("2	3	50", "2	1	50");
        assert!(matches!(parse_matpower(&text).unwrap_err(), CaseError::NoReferenceBus));
    }
}
