//! Command reports: key/value text with aligned tables, or JSON.

use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Field {
    pub key: String,
    pub value: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Table {
    pub title: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

/// A verdict with the operation and condition that produced it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct VerdictLine {
    pub operation: String,
    pub condition: String,
    pub verdict: String,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Report {
    pub command: String,
    pub inputs_digest: String,
    pub seed: u64,
    pub fields: Vec<Field>,
    pub tables: Vec<Table>,
    pub verdicts: Vec<VerdictLine>,
    pub warnings: Vec<String>,
    pub exit_status: i32,
}

/// SHA-256 over the named inputs, each prefixed by its name and length.
pub fn inputs_digest(inputs: &[(String, String)]) -> String {
    let mut h = Sha256::new();
    for (name, text) in inputs {
        h.update(name.as_bytes());
        h.update([0]);
        h.update((text.len() as u64).to_le_bytes());
        h.update(text.as_bytes());
    }
    format!("sha256:{}", hex::encode(h.finalize()))
}

impl Report {
    pub fn new(command: String, inputs_digest: String, seed: u64) -> Self {
        Report {
            command,
            inputs_digest,
            seed,
            fields: Vec::new(),
            tables: Vec::new(),
            verdicts: Vec::new(),
            warnings: Vec::new(),
            exit_status: 0,
        }
    }

    pub fn field(&mut self, key: impl Into<String>, value: impl ToString) {
        self.fields.push(Field { key: key.into(), value: value.to_string() });
    }

    pub fn table(&mut self, title: impl Into<String>, columns: &[&str], rows: Vec<Vec<String>>) {
        self.tables.push(Table {
            title: title.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows,
        });
    }

    pub fn verdict(&mut self, operation: &str, condition: &str, verdict: impl ToString, detail: impl Into<String>) {
        self.verdicts.push(VerdictLine {
            operation: operation.into(),
            condition: condition.into(),
            verdict: verdict.to_string(),
            detail: detail.into(),
        });
    }

    pub fn warn(&mut self, w: impl Into<String>) {
        self.warnings.push(w.into());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.fields.iter().find(|f| f.key == key).map(|f| f.value.as_str())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize") + "\n"
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("command: {}\n", self.command));
        out.push_str(&format!("inputs: {}\n", self.inputs_digest));
        out.push_str(&format!("seed: {}\n", self.seed));
        for f in &self.fields {
            out.push_str(&format!("{}: {}\n", f.key, f.value));
        }
        for t in &self.tables {
            out.push_str(&format!("\n[{}]\n", t.title));
            let mut widths: Vec<usize> = t.columns.iter().map(|c| c.chars().count()).collect();
            for r in &t.rows {
                for (i, c) in r.iter().enumerate() {
                    if i < widths.len() {
                        widths[i] = widths[i].max(c.chars().count());
                    }
                }
            }
            let line = |cells: &[String]| {
                let parts: Vec<String> = cells
                    .iter()
                    .enumerate()
                    .map(|(i, c)| {
                        let w = widths.get(i).copied().unwrap_or(0);
                        format!("{c}{}", " ".repeat(w.saturating_sub(c.chars().count())))
                    })
                    .collect();
                format!("  {}\n", parts.join("  ").trim_end())
            };
            out.push_str(&line(&t.columns));
            for r in &t.rows {
                out.push_str(&line(r));
            }
        }
        if !self.verdicts.is_empty() {
            out.push('\n');
        }
        for v in &self.verdicts {
            out.push_str(&format!("verdict {}/{}: {}", v.operation, v.condition, v.verdict));
            if !v.detail.is_empty() {
                out.push_str(&format!(" ({})", v.detail));
            }
            out.push('\n');
        }
        for w in &self.warnings {
            out.push_str(&format!("warning: {w}\n"));
        }
        out.push_str(&format!("exit: {}\n", self.exit_status));
        out
    }

    pub fn render(&self, json: bool) -> String {
        if json {
            self.to_json()
        } else {
            self.to_text()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_layout() {
        let mut r = Report::new("dimension a.pde".into(), inputs_digest(&[("a.pde".into(), "x".into())]), 0);
        r.field("dimension", 4);
        r.table("levels", &["level", "dim"], vec![vec!["0".into(), "4".into()], vec!["10".into(), "5".into()]]);
        r.verdict("dimension", "LOCUS", "NONEMPTY", "");
        let t = r.to_text();
        assert!(t.contains("dimension: 4\n"));
        assert!(t.contains("  level  dim\n  0      4\n  10     5\n"));
        assert!(t.contains("verdict dimension/LOCUS: NONEMPTY\n"));
        assert!(r.inputs_digest.starts_with("sha256:"));
        let j: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(j["fields"][0]["value"], "4");
    }

    #[test]
    fn digest_separates_inputs() {
        let a = inputs_digest(&[("a".into(), "bc".into())]);
        let b = inputs_digest(&[("ab".into(), "c".into())]);
        assert_ne!(a, b);
    }
}
