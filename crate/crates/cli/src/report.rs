use serde::{Deserialize, Serialize};
use serde_json::Value;

pub const SCHEMA_VERSION: &str = "1";

/// Output document of every subcommand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub command: String,
    pub inputs: Value,
    pub results: Value,
    pub schema_version: String,
}

impl Report {
    pub fn new(command: &str, inputs: impl Serialize, results: impl Serialize) -> serde_json::Result<Self> {
        Ok(Self {
            command: command.to_string(),
            inputs: serde_json::to_value(inputs)?,
            results: serde_json::to_value(results)?,
            schema_version: SCHEMA_VERSION.to_string(),
        })
    }

    /// Pretty JSON with keys sorted at every level.
    pub fn to_json(&self) -> String {
        // Value maps are ordered by key, so going through Value sorts the
        // top-level fields as well.
        let value = serde_json::to_value(self).expect("report is always representable as JSON");
        let mut s = serde_json::to_string_pretty(&value).expect("JSON values always serialize");
        s.push('\n');
        s
    }

    /// One `path<TAB>value` line per scalar leaf of the results.
    pub fn to_table(&self) -> String {
        let mut out = format!("command\t{}\n", self.command);
        flatten("", &self.results, &mut out);
        out
    }
}

fn flatten(prefix: &str, value: &Value, out: &mut String) {
    let join = |key: &str| {
        if prefix.is_empty() {
            key.to_string()
        } else {
            format!("{prefix}.{key}")
        }
    };
    match value {
        Value::Object(map) => {
            for (k, v) in map {
                flatten(&join(k), v, out);
            }
        }
        Value::Array(items) => {
            for (i, v) in items.iter().enumerate() {
                flatten(&join(&i.to_string()), v, out);
            }
        }
        Value::String(s) => out.push_str(&format!("{prefix}\t{s}\n")),
        other => out.push_str(&format!("{prefix}\t{other}\n")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn keys_are_sorted_and_round_trip() {
        #[derive(Serialize)]
        struct Results {
            zeta: f64,
            alpha: f64,
        }
        let report = Report::new(
            "fit",
            json!({"b": 1, "a": [0.1, 2.5e-7]}),
            Results {
                zeta: 0.1 + 0.2,
                alpha: 1.0 / 3.0,
            },
        )
        .unwrap();
        let text = report.to_json();
        let alpha = text.find("\"alpha\"").unwrap();
        let zeta = text.find("\"zeta\"").unwrap();
        assert!(alpha < zeta);
        assert!(text.find("\"command\"").unwrap() < text.find("\"schema_version\"").unwrap());
        let parsed: Report = serde_json::from_str(&text).unwrap();
        assert_eq!(parsed, report);
    }

    #[test]
    fn table_flattens_leaves() {
        let report = Report::new("x", json!({}), json!({"fit": {"alpha": 0.5}, "list": [1, "a"]})).unwrap();
        assert_eq!(report.to_table(), "command\tx\nfit.alpha\t0.5\nlist.0\t1\nlist.1\ta\n");
    }
}
