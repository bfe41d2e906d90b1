use std::fmt::Write as _;

use super::ScreeningResult;

/// Shortest decimal form of `v` rounded to 9 significant digits.
pub fn format_sig9(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let rounded: f64 = format!("{v:.8e}").parse().expect("formatted float parses");
    if rounded == 0.0 {
        return "0".into();
    }
    format!("{rounded}")
}

impl ScreeningResult {
    /// One row per bound: line, direction, method, classification, f_star, margin, source.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("line,direction,method,classification,f_star,margin,source\n");
        for b in &self.bounds {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                b.bound.line,
                b.bound.dir.as_str(),
                self.method.as_str(),
                b.classification.as_str(),
                b.f_star.map_or_else(String::new, format_sig9),
                format_sig9(b.margin),
                b.source.as_str()
            );
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        let bounds: Vec<serde_json::Value> = self
            .bounds
            .iter()
            .map(|b| {
                let mut v = serde_json::json!({
                    "line": b.bound.line,
                    "direction": b.bound.dir.as_str(),
                    "classification": b.classification.as_str(),
                    "f_star": b.f_star,
                    "margin": format_sig9(b.margin),
                    "threshold": format_sig9(b.threshold),
                    "source": b.source.as_str(),
                });
                if let Some(n) = &b.note {
                    v["note"] = serde_json::Value::String(n.clone());
                }
                v
            })
            .collect();
        serde_json::json!({
            "method": self.method.as_str(),
            "non_redundant": self.count_non_redundant(),
            "lp_solves": self.lp_solves,
            "diagnostics": self.diagnostics,
            "bounds": bounds,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sig9_rounding() {
        assert_eq!(format_sig9(1500.0), "1500");
        assert_eq!(format_sig9(1.0 / 3.0), "0.333333333");
        assert_eq!(format_sig9(200.0 / 3.0), "66.6666667");
        assert_eq!(format_sig9(-0.0), "0");
        assert_eq!(format_sig9(f64::INFINITY), "inf");
        assert_eq!(format_sig9(123456789012.0), "123456789000");
    }
}
