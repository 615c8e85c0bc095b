//! Universal families: one factorization structure per variety in a catalog,
//! with comparison isomorphisms onto the pullbacks along the catalog's maps,
//! coherent under composition.
//!
//! The built-in example is the commutative family: over any variety the
//! fiber at a tuple is one tensor copy of a fixed object per distinct
//! coordinate value, and every structure isomorphism is the permutation of
//! tensor factors that tracks the support values. Any two composites with
//! equal source and target support orders are then automatically equal,
//! which is what makes the family coherent, and the comparison onto a
//! pullback is the identity wherever the map separates the tuple's points.

use std::collections::BTreeMap;

use crate::fiber::{tensor, Fiber, FiberMap, FiberTheory, Iso};
use crate::pullback::{naive_pullback, pullback_compose_check, pullback_morphism, pullback_strict, PullbackError};
use crate::report::{Law, ValidationReport};
use crate::structure::{check_strict_morphism, StrictMorphism, StrictStructure};
use crate::variety::{
    diagonal_embed, in_u, in_v, kernel_partition, restrict_config, support, Config, EtaleMap,
    PointId, Variety,
};

/// A finite diagram of varieties and maps, closed under whatever
/// compositions the checker is expected to test.
#[derive(Clone, Debug)]
pub struct Catalog {
    pub varieties: Vec<Variety>,
    pub maps: Vec<CatalogMap>,
}

#[derive(Clone, Debug)]
pub struct CatalogMap {
    pub source: usize,
    pub target: usize,
    pub phi: EtaleMap,
}

impl Catalog {
    /// Index of a catalog map equal to the given one, if present.
    pub fn find(&self, source: usize, target: usize, phi: &EtaleMap) -> Option<usize> {
        self.maps
            .iter()
            .position(|m| m.source == source && m.target == target && m.phi == *phi)
    }
}

/// All varieties of sizes `1..=max_size` with every total map between every
/// ordered pair (identities included).
pub fn full_catalog(max_size: usize) -> Catalog {
    let varieties: Vec<Variety> = (1..=max_size).map(Variety::with_size).collect();
    let mut maps = Vec::new();
    for (si, sv) in varieties.iter().enumerate() {
        for (ti, tv) in varieties.iter().enumerate() {
            let n = sv.size();
            let m = tv.size();
            let mut assignment = vec![0usize; n];
            loop {
                maps.push(CatalogMap {
                    source: si,
                    target: ti,
                    phi: EtaleMap::new(sv.clone(), tv.clone(), assignment.clone()).expect("total"),
                });
                let mut i = n;
                loop {
                    if i == 0 {
                        break;
                    }
                    i -= 1;
                    assignment[i] += 1;
                    if assignment[i] < m {
                        break;
                    }
                    assignment[i] = 0;
                }
                if assignment.iter().all(|&v| v == 0) {
                    break;
                }
            }
        }
    }
    Catalog { varieties, maps }
}

/// A universal family over a catalog: one structure per variety and one
/// comparison per map, pointwise isomorphisms onto the pullback of the
/// target structure.
#[derive(Clone, Debug)]
pub struct UniversalFamily {
    pub theory: FiberTheory,
    pub max_arity: usize,
    pub catalog: Catalog,
    pub structures: Vec<StrictStructure>,
    /// `comparisons[m][x]: structures[source](x) -> pullback(phi_m, structures[target])(x)`.
    pub comparisons: Vec<BTreeMap<Config, Iso>>,
}

/// The tensor-factor permutation that moves copies of `object` listed by the
/// concatenated source supports onto the destination support order. The
/// source supports must be disjoint and cover the destination.
pub fn support_tracking_iso(
    theory: FiberTheory,
    object: &Fiber,
    src_supports: &[Vec<PointId>],
    dst_support: &[PointId],
) -> Iso {
    let flat: Vec<PointId> = src_supports.concat();
    debug_assert_eq!(flat.len(), dst_support.len());
    let perm: Vec<usize> = dst_support
        .iter()
        .map(|v| flat.iter().position(|u| u == v).expect("destination support covered"))
        .collect();
    Iso::reorder(theory, &vec![object.clone(); flat.len()], &perm).expect("valid permutation")
}

/// The commutative structure over one variety: fibers are tensor powers of
/// `object` indexed by the support, transport and decomposition are the
/// support-tracking permutations.
pub fn commutative_strict(variety: &Variety, object: &Fiber, max_arity: usize) -> StrictStructure {
    let theory = object.theory();
    let mut fibers = BTreeMap::new();
    for n in 1..=max_arity {
        for x in variety.tuples(n) {
            let k = support(&x).len();
            fibers.insert(x, tensor(theory, &vec![object.clone(); k]).expect("one theory"));
        }
    }
    let mut nu = BTreeMap::new();
    let mut d = BTreeMap::new();
    for alpha in (1..=max_arity).flat_map(crate::surjection::all_surjections_from) {
        for p in variety.tuples(alpha.target_arity()) {
            let embedded = diagonal_embed(&alpha, &p).expect("arity");
            let iso = support_tracking_iso(theory, object, &[support(&p)], &support(&embedded));
            nu.insert((alpha.clone(), p), iso);
        }
        for x in variety.tuples(alpha.source_arity()) {
            if !in_u(&alpha, &x).expect("arity") {
                continue;
            }
            let block_supports: Vec<Vec<PointId>> = alpha
                .blocks()
                .iter()
                .map(|bl| support(&restrict_config(&x, bl)))
                .collect();
            let iso = support_tracking_iso(theory, object, &block_supports, &support(&x));
            d.insert((alpha.clone(), x), iso);
        }
    }
    StrictStructure { variety: variety.clone(), theory, max_arity, fibers, nu, d }
}

/// The commutative family over a catalog, comparisons included.
pub fn commutative_family(
    object: &Fiber,
    catalog: &Catalog,
    max_arity: usize,
) -> Result<UniversalFamily, PullbackError> {
    let theory = object.theory();
    let structures: Vec<StrictStructure> = catalog
        .varieties
        .iter()
        .map(|v| commutative_strict(v, object, max_arity))
        .collect();

    let mut comparisons = Vec::new();
    for map in &catalog.maps {
        let src = &structures[map.source];
        let tgt = &structures[map.target];
        let (pulled, _) = pullback_strict(&map.phi, tgt)?;
        let mut cmp: BTreeMap<Config, Iso> = BTreeMap::new();
        for n in 1..=max_arity {
            for x in map.phi.source().tuples(n) {
                let iso = if in_v(&map.phi, &x) {
                    // the pullback copies the fiber at the image, which has
                    // the same support count; the identification is literal
                    let f = pulled
                        .strict
                        .fiber(&x)
                        .ok_or_else(|| PullbackError::Internal("missing pulled fiber".into()))?;
                    Iso::identity(f)
                } else {
                    let kappa = kernel_partition(&x);
                    let parts: Vec<Iso> = kappa
                        .blocks()
                        .iter()
                        .map(|bl| {
                            cmp.get(&restrict_config(&x, bl))
                                .cloned()
                                .ok_or_else(|| PullbackError::Internal("missing lower comparison".into()))
                        })
                        .collect::<Result<_, _>>()?;
                    let t = Iso::tensor(theory, &parts).map_err(|e| PullbackError::Internal(e.to_string()))?;
                    let d_src = src
                        .d_at(&kappa, &x)
                        .ok_or_else(|| PullbackError::Internal("missing kernel decomposition".into()))?;
                    t.compose(&d_src.invert()).map_err(|e| PullbackError::Internal(e.to_string()))?
                };
                cmp.insert(x, iso);
            }
        }
        comparisons.push(cmp);
    }

    Ok(UniversalFamily {
        theory,
        max_arity,
        catalog: catalog.clone(),
        structures,
        comparisons,
    })
}

/// Which pullback the universality checker validates comparisons against.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PullbackMode {
    /// The corrected two-step pullback.
    Strict,
    /// The naive coordinatewise pullback; comparison checks then fail on
    /// every map that merges points (in any theory with objects of size at
    /// least two), which is the boundary this mode exists to demonstrate.
    Naive,
}

/// Validates a universal family: every comparison is a valid pointwise
/// isomorphism onto the pullback of its target, and the comparisons commute
/// with composition of catalog maps. Returns the overall report and one
/// per-map validity report.
pub fn check_universal(family: &UniversalFamily) -> ValidationReport {
    check_universal_mode(family, PullbackMode::Strict).0
}

pub fn check_universal_mode(
    family: &UniversalFamily,
    mode: PullbackMode,
) -> (ValidationReport, Vec<ValidationReport>) {
    let mut rep = ValidationReport::new();
    let mut per_map = Vec::new();
    let catalog = &family.catalog;

    if family.structures.len() != catalog.varieties.len()
        || family.comparisons.len() != catalog.maps.len()
    {
        rep.add(Law::UniversalComparison, vec![], None, "family data does not match the catalog");
        return (rep.into_normalized(), per_map);
    }

    // cache target pullbacks for the composition checks
    let mut pullbacks: Vec<Option<StrictStructure>> = vec![None; catalog.maps.len()];

    for (mi, map) in catalog.maps.iter().enumerate() {
        let mut mrep = ValidationReport::new();
        let tgt = &family.structures[map.target];
        let candidate = match mode {
            PullbackMode::Strict => match pullback_strict(&map.phi, tgt) {
                Ok((g, _)) => g.strict,
                Err(e) => {
                    mrep.add(Law::UniversalComparison, vec![], None, format!("map {mi}: pullback failed: {e}"));
                    per_map.push(mrep.clone().into_normalized());
                    rep.merge(mrep);
                    continue;
                }
            },
            PullbackMode::Naive => match naive_pullback(&map.phi, tgt) {
                Ok((candidate, nrep)) => {
                    for v in nrep.violations() {
                        mrep.push(v.clone());
                    }
                    candidate
                }
                Err(e) => {
                    mrep.add(Law::UniversalComparison, vec![], None, format!("map {mi}: pullback failed: {e}"));
                    per_map.push(mrep.clone().into_normalized());
                    rep.merge(mrep);
                    continue;
                }
            },
        };
        let maps: BTreeMap<Config, FiberMap> = family.comparisons[mi]
            .iter()
            .map(|(x, i)| (x.clone(), i.as_map().clone()))
            .collect();
        let morphism = StrictMorphism {
            source: family.structures[map.source].clone(),
            target: candidate.clone(),
            maps,
        };
        mrep.merge(check_strict_morphism(&morphism));
        if !morphism.is_pointwise_iso() {
            mrep.add(Law::NotIso, vec![], None, format!("map {mi}: comparison is not pointwise invertible"));
        }
        if mode == PullbackMode::Strict {
            pullbacks[mi] = Some(candidate);
        }
        per_map.push(mrep.clone().into_normalized());
        rep.merge(mrep);
    }

    if mode == PullbackMode::Naive {
        return (rep.into_normalized(), per_map);
    }

    // composition coherence
    for (i1, m1) in catalog.maps.iter().enumerate() {
        for (i2, m2) in catalog.maps.iter().enumerate() {
            if m1.target != m2.source {
                continue;
            }
            let composite = m1.phi.then(&m2.phi).expect("matching varieties");
            let Some(i3) = catalog.find(m1.source, m2.target, &composite) else {
                rep.add(
                    Law::UniversalComposition,
                    vec![],
                    None,
                    format!("catalog not closed: composite of maps {i1} and {i2} is missing"),
                );
                continue;
            };
            if let Err(v) = composition_coherence(family, &pullbacks, i1, i2, i3) {
                for violation in v.violations() {
                    let mut violation = violation.clone();
                    violation.detail = format!("maps {i1};{i2} vs {i3}: {}", violation.detail);
                    rep.push(violation);
                }
            }
        }
    }

    (rep.into_normalized(), per_map)
}

/// One instance of the composition law: the pullback of the second
/// comparison along the first map, composed with the first comparison,
/// equals the composite comparison transported through the canonical
/// identification of the two pullback routes.
fn composition_coherence(
    family: &UniversalFamily,
    pullbacks: &[Option<StrictStructure>],
    i1: usize,
    i2: usize,
    i3: usize,
) -> Result<(), ValidationReport> {
    let mut rep = ValidationReport::new();
    let catalog = &family.catalog;
    let m1 = &catalog.maps[i1];
    let m2 = &catalog.maps[i2];

    let inner = match &pullbacks[i2] {
        Some(s) => s.clone(),
        None => {
            rep.add(Law::UniversalComposition, vec![], None, "missing cached pullback");
            return Err(rep.into_normalized());
        }
    };
    // comparison of the second map, as a morphism over the middle variety
    let y2 = StrictMorphism {
        source: family.structures[m2.source].clone(),
        target: inner,
        maps: family.comparisons[i2]
            .iter()
            .map(|(x, i)| (x.clone(), i.as_map().clone()))
            .collect(),
    };
    let pulled_y2 = match pullback_morphism(&m1.phi, &y2) {
        Ok(m) => m,
        Err(e) => {
            rep.add(Law::UniversalComposition, vec![], None, format!("pullback of comparison failed: {e}"));
            return Err(rep.into_normalized());
        }
    };
    let (ident, ident_rep) =
        match pullback_compose_check(&m1.phi, &m2.phi, &family.structures[m2.target]) {
            Ok(v) => v,
            Err(e) => {
                rep.add(Law::UniversalComposition, vec![], None, format!("composite pullback failed: {e}"));
                return Err(rep.into_normalized());
            }
        };
    rep.merge(ident_rep);

    // pointwise: pulled_y2 ∘ y1 = ident ∘ y3
    let src_variety = &catalog.varieties[m1.source];
    for n in 1..=family.max_arity {
        for x in src_variety.tuples(n) {
            let (Some(y1x), Some(y3x), Some(py2x), Some(cx)) = (
                family.comparisons[i1].get(&x),
                family.comparisons[i3].get(&x),
                pulled_y2.map_at(&x),
                ident.map_at(&x),
            ) else {
                rep.add(Law::UniversalComposition, vec![], Some(x), "missing comparison component");
                continue;
            };
            let ok = (|| -> Result<bool, crate::fiber::FiberError> {
                let lhs = py2x.compose(y1x.as_map())?;
                let rhs = cx.compose(y3x.as_map())?;
                Ok(lhs == rhs)
            })();
            if !matches!(ok, Ok(true)) {
                rep.add(
                    Law::UniversalComposition,
                    vec![],
                    Some(x),
                    "comparisons do not commute with composition",
                );
            }
        }
    }

    if rep.is_empty() {
        Ok(())
    } else {
        Err(rep.into_normalized())
    }
}

/// Support-count oracle for the commutative family: the expected fiber size
/// at a tuple, computed independently of the tensor machinery.
pub fn support_size_oracle(object_size: usize, x: &Config) -> usize {
    let mut distinct: Vec<PointId> = Vec::new();
    for &p in x {
        if !distinct.contains(&p) {
            distinct.push(p);
        }
    }
    object_size.pow(distinct.len() as u32)
}
