//! Regression baselines measured once by `fraclab calibrate`.

use std::collections::BTreeMap;

/// Checked-in baselines; regenerate with `fraclab calibrate` and copy over.
pub const FROZEN_TEXT: &str = include_str!("../frozen_constants.txt");

/// Measured maxima may exceed their baseline by this factor before failing.
pub const REGRESSION_SLACK: f64 = 1.5;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Frozen {
    values: BTreeMap<String, f64>,
}

impl Frozen {
    pub fn builtin() -> Frozen {
        Frozen::parse(FROZEN_TEXT)
    }

    /// `key = value` lines; `#` comments. Malformed lines are skipped so that a
    /// partially calibrated file still loads.
    pub fn parse(text: &str) -> Frozen {
        let values = text
            .lines()
            .filter_map(|l| l.split('#').next())
            .filter_map(|l| l.split_once('='))
            .filter_map(|(k, v)| Some((k.trim().to_string(), v.trim().parse().ok()?)))
            .collect();
        Frozen { values }
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        self.values.get(key).copied()
    }

    pub fn insert(&mut self, key: &str, value: f64) {
        self.values.insert(key.to_string(), value);
    }

    pub fn render(&self, header: &str) -> String {
        let mut out = String::new();
        for line in header.lines() {
            out.push_str(&format!("# {line}\n"));
        }
        for (k, v) in &self.values {
            out.push_str(&format!("{k} = {v:e}\n"));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn render_parse_round_trip() {
        let mut f = Frozen::default();
        f.insert("a.max", 1.25);
        f.insert("roots.floor", 0.42);
        assert_eq!(Frozen::parse(&f.render("calibrated\nseed 7")), f);
        assert_eq!(Frozen::parse("x = nope\ny = 2 # c").get("y"), Some(2.0));
    }
}
