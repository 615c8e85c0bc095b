//! Validation reports. Checkers are total: every violated law instance is
//! collected into a report with enough context to locate it, and an empty
//! report is the only notion of success. Reports order their records by
//! (law, surjections, point) so output is stable across runs.

use crate::surjection::Surjection;
use crate::variety::{Config, Variety};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Law {
    /// A locus fails one of its required containments.
    LocusContainment,
    /// A diagonal tuple is missing from a locus that must contain it.
    DiagonalMissing,
    /// A required fiber or isomorphism entry is absent (or present off its domain).
    MissingDatum,
    /// An isomorphism's domain or codomain disagrees with the fibers it must connect.
    Shape,
    /// Transport along diagonal embeddings fails associativity.
    RanAssociativity,
    /// The product decompositions fail the composition law.
    FactorizationComposition,
    /// The square relating transport and product decomposition fails.
    MixedCompatibility,
    /// A chart transition triple fails the cocycle identity.
    Cocycle,
    /// The gluing input does not cover a power of the variety.
    Cover,
    /// Restriction of a diagonal-neighborhood locus leaves the lower-arity locus.
    Heredity,
    /// A morphism square against transport data fails.
    MorphismRan,
    /// A morphism square against product decompositions fails.
    MorphismFactorization,
    /// A morphism entry is missing, off its locus, or mis-shaped.
    MorphismShape,
    /// Morphism entries are not pointwise invertible where required.
    NotIso,
    /// A pulled-back structure disagrees with its required form.
    PullbackMismatch,
    /// A universal family fails composition coherence.
    UniversalComposition,
    /// A universal family comparison is invalid.
    UniversalComparison,
}

impl Law {
    pub fn name(&self) -> &'static str {
        match self {
            Law::LocusContainment => "locus-containment",
            Law::DiagonalMissing => "diagonal-missing",
            Law::MissingDatum => "missing-datum",
            Law::Shape => "shape",
            Law::RanAssociativity => "ran-associativity",
            Law::FactorizationComposition => "factorization-composition",
            Law::MixedCompatibility => "mixed-compatibility",
            Law::Cocycle => "cocycle",
            Law::Cover => "cover",
            Law::Heredity => "heredity",
            Law::MorphismRan => "morphism-ran",
            Law::MorphismFactorization => "morphism-factorization",
            Law::MorphismShape => "morphism-shape",
            Law::NotIso => "not-iso",
            Law::PullbackMismatch => "pullback-mismatch",
            Law::UniversalComposition => "universal-composition",
            Law::UniversalComparison => "universal-comparison",
        }
    }
}

impl std::fmt::Display for Law {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.name())
    }
}

/// One violated law instance.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Violation {
    pub law: Law,
    pub surjections: Vec<Surjection>,
    pub point: Option<Config>,
    pub detail: String,
}

impl Violation {
    pub fn new(law: Law, surjections: Vec<Surjection>, point: Option<Config>, detail: impl Into<String>) -> Self {
        Violation { law, surjections, point, detail: detail.into() }
    }

    pub fn render(&self, variety: Option<&Variety>) -> String {
        let mut parts = vec![self.law.name().to_string()];
        if !self.surjections.is_empty() {
            let surjs: Vec<String> = self
                .surjections
                .iter()
                .map(|s| {
                    let vals: Vec<String> = s.map().iter().map(|v| (v + 1).to_string()).collect();
                    format!("[{}]", vals.join(","))
                })
                .collect();
            parts.push(surjs.join(" "));
        }
        if let Some(p) = &self.point {
            match variety {
                Some(v) => parts.push(v.render(p)),
                None => parts.push(format!("{p:?}")),
            }
        }
        parts.push(self.detail.clone());
        parts.join("  ")
    }
}

/// A deterministic collection of violations.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ValidationReport {
    violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn new() -> Self {
        ValidationReport::default()
    }

    pub fn push(&mut self, v: Violation) {
        self.violations.push(v);
    }

    pub fn add(&mut self, law: Law, surjections: Vec<Surjection>, point: Option<Config>, detail: impl Into<String>) {
        self.push(Violation::new(law, surjections, point, detail));
    }

    pub fn merge(&mut self, other: ValidationReport) {
        self.violations.extend(other.violations);
    }

    /// Sorts and deduplicates; called before a report is surfaced.
    pub fn normalize(&mut self) {
        self.violations.sort();
        self.violations.dedup();
    }

    pub fn into_normalized(mut self) -> Self {
        self.normalize();
        self
    }

    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn len(&self) -> usize {
        self.violations.len()
    }

    pub fn violations(&self) -> &[Violation] {
        &self.violations
    }

    pub fn render(&self, variety: Option<&Variety>) -> String {
        if self.violations.is_empty() {
            return "ok: no violations".to_string();
        }
        let mut out = format!("{} violation(s):\n", self.violations.len());
        for v in &self.violations {
            out.push_str("  ");
            out.push_str(&v.render(variety));
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalize_orders_and_dedups() {
        let mut r = ValidationReport::new();
        let s = Surjection::identity(2);
        r.add(Law::Shape, vec![s.clone()], Some(vec![1, 0]), "b");
        r.add(Law::Cocycle, vec![], None, "a");
        r.add(Law::Shape, vec![s], Some(vec![1, 0]), "b");
        r.normalize();
        assert_eq!(r.len(), 2);
        assert_eq!(r.violations()[0].law, Law::Shape);
    }
}
