//! Check outcomes shared by the stein, solver and metrics modules.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    /// Passes when `lhs ≤ rhs + tolerance`.
    Inequality,
    /// Passes when `|lhs − rhs| ≤ tolerance`.
    Identity,
    /// Passes when `lhs > rhs`; used for separation evidence.
    Exceeds,
}

/// One certified (or refuted) relation between two computed numbers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub name: String,
    pub target: String,
    pub alternative: String,
    pub observable: String,
    pub kind: CheckKind,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub quad_error: f64,
    pub details: BTreeMap<String, f64>,
}

impl BoundReport {
    fn build(kind: CheckKind, name: &str, lhs: f64, rhs: f64, tolerance: f64) -> Self {
        let pass = match kind {
            CheckKind::Inequality => lhs <= rhs + tolerance,
            CheckKind::Identity => (lhs - rhs).abs() <= tolerance,
            CheckKind::Exceeds => lhs > rhs,
        };
        Self {
            name: name.to_string(),
            target: String::new(),
            alternative: String::new(),
            observable: String::new(),
            kind,
            lhs,
            rhs,
            slack: rhs - lhs,
            tolerance,
            pass,
            quad_error: 0.0,
            details: BTreeMap::new(),
        }
    }

    pub fn inequality(name: &str, lhs: f64, rhs: f64, tolerance: f64) -> Self {
        Self::build(CheckKind::Inequality, name, lhs, rhs, tolerance)
    }

    pub fn identity(name: &str, lhs: f64, rhs: f64, tolerance: f64) -> Self {
        Self::build(CheckKind::Identity, name, lhs, rhs, tolerance)
    }

    /// `lhs` must be strictly above the threshold `rhs`.
    pub fn exceeds(name: &str, lhs: f64, threshold: f64) -> Self {
        Self::build(CheckKind::Exceeds, name, lhs, threshold, 0.0)
    }

    pub fn with_pair(mut self, target: &str, alternative: &str) -> Self {
        self.target = target.to_string();
        self.alternative = alternative.to_string();
        self
    }

    pub fn with_observable(mut self, observable: &str) -> Self {
        self.observable = observable.to_string();
        self
    }

    pub fn with_quad_error(mut self, e: f64) -> Self {
        self.quad_error = e;
        self
    }

    pub fn detail(mut self, key: &str, value: f64) -> Self {
        self.details.insert(key.to_string(), value);
        self
    }

    /// Force a failing verdict regardless of the numbers.
    pub fn failed(mut self) -> Self {
        self.pass = false;
        self
    }

    /// Sort key used for deterministic output.
    pub fn sort_key(&self) -> (&str, &str, &str, &str) {
        (&self.name, &self.target, &self.alternative, &self.observable)
    }
}

pub fn sort_reports(reports: &mut [BoundReport]) {
    reports.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
}
