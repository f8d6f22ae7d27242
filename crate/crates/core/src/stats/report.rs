use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::Result;

/// Every pass/fail threshold used by the verification suites.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Thresholds {
    pub ks_rayleigh_srw: f64,
    pub ks_rayleigh_random: f64,
    pub ks_marginal: f64,
    pub ratio_srw: f64,
    pub ratio_random: f64,
    pub crossing_flatness: f64,
    pub crossing_routes: f64,
    /// Largest tolerated log-log slope for a decay or growth trend.
    pub trend_slope: f64,
    pub overshoot_eta: f64,
    pub reversibility: f64,
    pub little_relative: f64,
    pub mc_sigmas: f64,
    pub ks_corollary: f64,
    pub ks_continuum: f64,
    pub density_mass: f64,
    pub tail_x3_abs: f64,
    pub small_h_floor: f64,
    pub small_t_ceiling: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            ks_rayleigh_srw: 0.02,
            ks_rayleigh_random: 0.03,
            ks_marginal: 0.03,
            ratio_srw: 0.05,
            ratio_random: 0.08,
            crossing_flatness: 0.20,
            crossing_routes: 1e-10,
            trend_slope: 0.05,
            overshoot_eta: 0.05,
            reversibility: 1e-12,
            little_relative: 0.05,
            mc_sigmas: 3.0,
            ks_corollary: 0.05,
            ks_continuum: 0.02,
            density_mass: 1e-8,
            tail_x3_abs: 0.01,
            small_h_floor: 0.97,
            small_t_ceiling: 0.2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    AtMost,
    AtLeast,
    /// Reported, not judged.
    Info,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Statistic {
    pub name: String,
    pub value: f64,
    pub threshold: Option<f64>,
    pub comparison: Comparison,
    pub pass: bool,
}

/// Runtime and other per-invocation data kept out of the canonical form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    pub runtime_secs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub check: String,
    pub params: BTreeMap<String, serde_json::Value>,
    pub statistics: Vec<Statistic>,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meta: Option<Meta>,
    /// CSV-ready `(x, empirical, target)` series, written separately.
    #[serde(skip)]
    pub plots: Vec<(String, Vec<(f64, f64, f64)>)>,
}

impl VerificationReport {
    pub fn new(check: impl Into<String>) -> Self {
        VerificationReport {
            check: check.into(),
            params: BTreeMap::new(),
            statistics: Vec::new(),
            pass: true,
            meta: None,
            plots: Vec::new(),
        }
    }

    pub fn param(&mut self, key: &str, value: impl Serialize) -> &mut Self {
        self.params.insert(key.to_string(), serde_json::to_value(value).expect("serialisable parameter"));
        self
    }

    pub fn at_most(&mut self, name: impl Into<String>, value: f64, threshold: f64) -> bool {
        self.push(name.into(), value, Some(threshold), Comparison::AtMost)
    }

    pub fn at_least(&mut self, name: impl Into<String>, value: f64, threshold: f64) -> bool {
        self.push(name.into(), value, Some(threshold), Comparison::AtLeast)
    }

    pub fn info(&mut self, name: impl Into<String>, value: f64) {
        self.push(name.into(), value, None, Comparison::Info);
    }

    fn push(&mut self, name: String, value: f64, threshold: Option<f64>, comparison: Comparison) -> bool {
        let pass = match (comparison, threshold) {
            (Comparison::AtMost, Some(t)) => value <= t,
            (Comparison::AtLeast, Some(t)) => value >= t,
            _ => true,
        };
        self.pass &= pass;
        self.statistics.push(Statistic { name, value, threshold, comparison, pass });
        pass
    }

    pub fn statistic(&self, name: &str) -> Option<&Statistic> {
        self.statistics.iter().find(|s| s.name == name)
    }

    /// Fold another report's statistics in under a name prefix.
    pub fn absorb(&mut self, prefix: &str, other: &VerificationReport) {
        for s in &other.statistics {
            let mut s = s.clone();
            s.name = format!("{prefix}.{}", s.name);
            self.statistics.push(s);
        }
        self.pass &= other.pass;
    }

    /// JSON without the `meta` block; identical inputs give identical bytes.
    pub fn canonical_json(&self) -> Result<String> {
        let mut clone = self.clone();
        clone.meta = None;
        Ok(serde_json::to_string_pretty(&clone)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// One line per judged statistic.
    pub fn summary(&self) -> String {
        let mut out = format!("{} {}\n", if self.pass { "PASS" } else { "FAIL" }, self.check);
        for s in &self.statistics {
            let rel = match (s.comparison, s.threshold) {
                (Comparison::AtMost, Some(t)) => format!(" <= {t}"),
                (Comparison::AtLeast, Some(t)) => format!(" >= {t}"),
                _ => String::new(),
            };
            let flag = if s.pass { "ok" } else { "FAILED" };
            out.push_str(&format!("  {:<44} {:<14.6e}{rel} {flag}\n", s.name, s.value));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pass_iff_every_statistic_passes() {
        let mut r = VerificationReport::new("demo");
        r.param("n", 4);
        assert!(r.at_most("a", 0.1, 0.2));
        r.info("b", 7.0);
        assert!(r.pass);
        assert!(!r.at_least("c", 0.1, 0.2));
        assert!(!r.pass);
        assert_eq!(r.statistics.iter().filter(|s| !s.pass).count(), 1);
    }

    #[test]
    fn canonical_form_drops_meta() {
        let mut a = VerificationReport::new("demo");
        a.at_most("x", 1.0, 2.0);
        let mut b = a.clone();
        a.meta = Some(Meta { runtime_secs: 1.0 });
        b.meta = Some(Meta { runtime_secs: 2.0 });
        assert_eq!(a.canonical_json().unwrap(), b.canonical_json().unwrap());
        assert_ne!(a.to_json().unwrap(), b.to_json().unwrap());
    }

    #[test]
    fn thresholds_fill_missing_fields() {
        let t: Thresholds = serde_json::from_str(r#"{"ks_marginal": 0.04}"#).unwrap();
        assert_eq!(t.ks_marginal, 0.04);
        assert_eq!(t.ks_rayleigh_srw, 0.02);
    }
}
