use std::collections::BTreeMap;

use serde::Serialize;

use crate::Real;

/// An information estimate in nats plus what produced it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Estimate<T> {
    pub value: T,
    pub method: String,
    pub k: usize,
    pub n: usize,
    pub warnings: Vec<String>,
    pub diagnostics: BTreeMap<String, f64>,
}

impl<T: Real> Estimate<T> {
    pub fn new(method: impl Into<String>, value: T, k: usize, n: usize) -> Self {
        Self {
            value,
            method: method.into(),
            k,
            n,
            warnings: Vec::new(),
            diagnostics: BTreeMap::new(),
        }
    }

    pub fn with_diagnostic(mut self, key: impl Into<String>, value: f64) -> Self {
        self.diagnostics.insert(key.into(), value);
        self
    }

    pub fn warn(&mut self, msg: impl Into<String>) {
        let msg = msg.into();
        if !self.warnings.contains(&msg) {
            self.warnings.push(msg);
        }
    }
}
