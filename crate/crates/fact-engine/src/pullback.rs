//! Pullback of factorization structures along maps of varieties.
//!
//! The naive form copies the fiber at `x` from the fiber at `phi(x)`
//! coordinatewise. Transport data always copies, but the product
//! decompositions exist only where `phi` does not merge coordinates across
//! blocks, so the naive candidate fails exactly on the collision locus; the
//! detector reports every such failure. The corrected form pulls back the
//! data as a weak structure over the loci where `phi` separates points —
//! where copying is sound — and reglues to a full structure.

use std::collections::BTreeMap;

use crate::fiber::{FiberMap, Iso};
use crate::glue::{glue, GlueError, GluedStructure};
use crate::report::{Law, ValidationReport};
use crate::structure::{
    check_strict, check_strict_morphism, check_weak, weak_forget, LociChoice, StrictMorphism,
    StrictStructure, StructureError, WeakStructure,
};
use crate::surjection::{enumerate_canonical, Surjection};
use crate::variety::{
    diagonal_embed, in_u, in_v, kernel_partition, restrict_config, Config, EtaleMap, Locus,
};

#[derive(Debug, thiserror::Error)]
pub enum PullbackError {
    #[error("map target does not match the structure's variety")]
    VarietyMismatch,
    #[error("input structure fails validation:\n{0}")]
    InvalidInput(String),
    #[error(transparent)]
    Glue(#[from] GlueError),
    #[error(transparent)]
    Structure(#[from] StructureError),
    #[error("pullback error: {0}")]
    Internal(String),
}

/// Where each pulled-back datum was copied from.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Provenance {
    pub fibers: BTreeMap<Config, Config>,
    pub nu: BTreeMap<(Surjection, Config), (Surjection, Config)>,
    pub d: BTreeMap<(Surjection, Config), (Surjection, Config)>,
}

/// A pulled-back weak structure with its provenance.
#[derive(Clone, Debug)]
pub struct PullbackResult {
    pub weak: WeakStructure,
    pub provenance: Provenance,
}

/// Pullback of a weak structure along `phi: X -> Y`. The new loci are the
/// intersections of the preimages of the old ones with the separation loci
/// of `phi`; fibers and isomorphisms are copied through `phi` coordinatewise.
pub fn pullback_weak(phi: &EtaleMap, z: &WeakStructure) -> Result<PullbackResult, PullbackError> {
    if phi.target() != &z.variety {
        return Err(PullbackError::VarietyMismatch);
    }
    let pre = check_weak(z);
    if !pre.is_empty() {
        return Err(PullbackError::InvalidInput(pre.render(Some(&z.variety))));
    }
    let x_var = phi.source().clone();
    let n_max = z.max_arity;
    let mut prov = Provenance::default();

    // W'(n) = preimage of W(n) within the separation locus
    let mut w = BTreeMap::new();
    for n in 1..=n_max {
        let wn = z.w_locus(n).expect("validated");
        let members = x_var
            .tuples(n)
            .into_iter()
            .filter(|x| in_v(phi, x) && wn.contains(&phi.apply_tuple(x)))
            .collect::<Vec<_>>();
        w.insert(n, Locus::new(n, members).expect("arity uniform"));
    }

    let mut fibers = BTreeMap::new();
    for wn in w.values() {
        for x in wn.iter() {
            let image = phi.apply_tuple(x);
            let f = z
                .fiber(&image)
                .ok_or_else(|| PullbackError::Internal(format!("no fiber at image of {x:?}")))?;
            fibers.insert(x.clone(), f.clone());
            prov.fibers.insert(x.clone(), image);
        }
    }

    let surjections = z.all_surjections();

    // R'(alpha): inside W', over the preimage of R(alpha)
    let mut r = BTreeMap::new();
    let mut nu = BTreeMap::new();
    for alpha in &surjections {
        let ra = z.r_locus(alpha).expect("validated");
        let mut members = Vec::new();
        for p in x_var.tuples(alpha.target_arity()) {
            let embedded = diagonal_embed(alpha, &p).expect("arity");
            let inside = w[&alpha.target_arity()].contains(&p)
                && w[&alpha.source_arity()].contains(&embedded)
                && ra.contains(&phi.apply_tuple(&p));
            if inside {
                let image = phi.apply_tuple(&p);
                let iso = z
                    .nu_at(alpha, &image)
                    .ok_or_else(|| PullbackError::Internal("missing nu at image".into()))?;
                nu.insert((alpha.clone(), p.clone()), iso.clone());
                prov.nu.insert((alpha.clone(), p.clone()), (alpha.clone(), image));
                members.push(p);
            }
        }
        r.insert(alpha.clone(), Locus::new(alpha.target_arity(), members).expect("arity"));
    }

    // F'(partition): inside W' blockwise, over the preimage of F
    let mut f = BTreeMap::new();
    for n in 1..=n_max {
        for canon in enumerate_canonical(n, 1) {
            let fa = z.f.get(&canon).expect("validated");
            let mut members = Vec::new();
            for x in x_var.tuples(n) {
                if !w[&n].contains(&x) {
                    continue;
                }
                let blocks_ok = canon
                    .blocks()
                    .iter()
                    .all(|bl| w[&bl.len()].contains(&restrict_config(&x, bl)));
                if blocks_ok && fa.contains(&phi.apply_tuple(&x)) {
                    members.push(x);
                }
            }
            f.insert(canon.clone(), Locus::new(n, members).expect("arity"));
        }
    }
    let mut d = BTreeMap::new();
    for alpha in &surjections {
        let (canon, _) = alpha.canonicalize();
        for x in f[&canon].iter() {
            if !in_u(alpha, x).expect("arity") {
                continue;
            }
            let image = phi.apply_tuple(x);
            let iso = z
                .d_at(alpha, &image)
                .ok_or_else(|| PullbackError::Internal("missing d at image".into()))?;
            d.insert((alpha.clone(), x.clone()), iso.clone());
            prov.d.insert((alpha.clone(), x.clone()), (alpha.clone(), image));
        }
    }

    let weak = WeakStructure {
        variety: x_var,
        theory: z.theory,
        max_arity: n_max,
        w,
        fibers,
        r,
        nu,
        f,
        d,
    };
    Ok(PullbackResult { weak, provenance: prov })
}

/// The naive coordinatewise pullback of a strict structure, with its failure
/// report. Fibers and transport isomorphisms copy everywhere. A product
/// decomposition at `x in U(alpha)` copies when `phi` keeps the blocks of
/// `x` disjoint; otherwise there is nothing to copy — the entry stays empty
/// and the mismatch between the required tensor and the available fiber is
/// reported. The report is empty exactly when every decomposition copies and
/// the copied data satisfies the strict laws.
pub fn naive_pullback(
    phi: &EtaleMap,
    s: &StrictStructure,
) -> Result<(StrictStructure, ValidationReport), PullbackError> {
    if phi.target() != &s.variety {
        return Err(PullbackError::VarietyMismatch);
    }
    let pre = check_strict(s);
    if !pre.is_empty() {
        return Err(PullbackError::InvalidInput(pre.render(Some(&s.variety))));
    }
    let x_var = phi.source().clone();
    let mut rep = ValidationReport::new();

    let mut fibers = BTreeMap::new();
    for n in 1..=s.max_arity {
        for x in x_var.tuples(n) {
            let f = s.fiber(&phi.apply_tuple(&x)).expect("total");
            fibers.insert(x, f.clone());
        }
    }

    let mut nu = BTreeMap::new();
    let mut d = BTreeMap::new();
    for alpha in s.all_surjections() {
        for p in x_var.tuples(alpha.target_arity()) {
            let iso = s.nu_at(&alpha, &phi.apply_tuple(&p)).expect("total");
            nu.insert((alpha.clone(), p), iso.clone());
        }
        for x in x_var.tuples(alpha.source_arity()) {
            if !in_u(&alpha, &x).expect("arity") {
                continue;
            }
            let image = phi.apply_tuple(&x);
            if in_u(&alpha, &image).expect("arity") {
                let iso = s.d_at(&alpha, &image).expect("total");
                d.insert((alpha.clone(), x), iso.clone());
            } else {
                // nothing to copy: the image has collided coordinates across
                // blocks
                let required: usize = alpha
                    .blocks()
                    .iter()
                    .map(|bl| fibers[&restrict_config(&x, bl)].size())
                    .product();
                let provided = fibers[&x].size();
                if required == provided {
                    // sizes coincide by accident; fill with the identity and
                    // let the law checks probe this point
                    let f = &fibers[&x];
                    d.insert((alpha.clone(), x), Iso::identity(f));
                } else {
                    rep.add(
                        Law::PullbackMismatch,
                        vec![alpha.clone()],
                        Some(x),
                        format!(
                            "factorization fails: required size {required} vs fiber size {provided}"
                        ),
                    );
                }
            }
        }
    }

    let candidate = StrictStructure {
        variety: x_var.clone(),
        theory: s.theory,
        max_arity: s.max_arity,
        fibers,
        nu,
        d,
    };

    // law-level check of whatever data exists; shape gaps above already
    // report the same points
    let mut law_report = check_strict(&candidate);
    // identity fillers can satisfy the laws (all copied data is then forced
    // trivial); mismatched shapes cannot, and stay reported either way
    law_report.merge(rep);
    Ok((candidate, law_report.into_normalized()))
}

/// Two-step pullback of a strict structure: forget to the weak structure
/// over the full loci, pull that back, and reglue.
pub fn pullback_strict(
    phi: &EtaleMap,
    s: &StrictStructure,
) -> Result<(GluedStructure, PullbackResult), PullbackError> {
    let z = weak_forget(s, &LociChoice::Full)?;
    let pulled = pullback_weak(phi, &z)?;
    let glued = glue(&pulled.weak)?;
    Ok((glued, pulled))
}

/// Pullback of a strict morphism along `phi`: components copy on the
/// separation loci and are tensors of lower components over kernel blocks
/// elsewhere, mirroring the chart structure of the pulled-back objects.
pub fn pullback_morphism(
    phi: &EtaleMap,
    m: &StrictMorphism,
) -> Result<StrictMorphism, PullbackError> {
    if phi.target() != &m.source.variety {
        return Err(PullbackError::VarietyMismatch);
    }
    let (ga, _) = pullback_strict(phi, &m.source)?;
    let (gb, _) = pullback_strict(phi, &m.target)?;
    let x_var = phi.source().clone();
    let theory = m.source.theory;

    let mut maps: BTreeMap<Config, FiberMap> = BTreeMap::new();
    for n in 1..=m.source.max_arity {
        for x in x_var.tuples(n) {
            let g = if in_v(phi, &x) {
                m.map_at(&phi.apply_tuple(&x))
                    .ok_or_else(|| PullbackError::Internal("missing component at image".into()))?
                    .clone()
            } else {
                let kappa = kernel_partition(&x);
                let parts: Vec<FiberMap> = kappa
                    .blocks()
                    .iter()
                    .map(|bl| {
                        maps.get(&restrict_config(&x, bl))
                            .cloned()
                            .ok_or_else(|| PullbackError::Internal("missing lower component".into()))
                    })
                    .collect::<Result<_, _>>()?;
                FiberMap::tensor(theory, &parts).map_err(|e| PullbackError::Internal(e.to_string()))?
            };
            maps.insert(x, g);
        }
    }
    Ok(StrictMorphism { source: ga.strict, target: gb.strict, maps })
}

/// Compatibility of pullback with composition: the canonical comparison from
/// the one-step pullback along `psi ∘ phi` to the two-step pullback along
/// `phi` after `psi`. Both reconstructions produce the same fibers point by
/// point, so the comparison is the pointwise identity; the returned report
/// verifies it is an isomorphism of structures.
pub fn pullback_compose_check(
    phi: &EtaleMap,
    psi: &EtaleMap,
    s: &StrictStructure,
) -> Result<(StrictMorphism, ValidationReport), PullbackError> {
    if phi.target() != psi.source() {
        return Err(PullbackError::VarietyMismatch);
    }
    let composite = phi.then(psi).map_err(|_| PullbackError::VarietyMismatch)?;
    let (one_step, _) = pullback_strict(&composite, s)?;
    let (inner, _) = pullback_strict(psi, s)?;
    let (two_step, _) = pullback_strict(phi, &inner.strict)?;

    let mut rep = ValidationReport::new();
    let mut maps: BTreeMap<Config, FiberMap> = BTreeMap::new();
    for (x, fa) in &one_step.strict.fibers {
        match two_step.strict.fiber(x) {
            Some(fb) if fa == fb => {
                maps.insert(x.clone(), FiberMap::identity(fa));
            }
            _ => {
                rep.add(
                    Law::PullbackMismatch,
                    vec![],
                    Some(x.clone()),
                    "one-step and two-step pullbacks disagree on the fiber",
                );
                // keep the morphism total where possible for the later checks
                maps.insert(x.clone(), FiberMap::identity(fa));
            }
        }
    }
    let morphism =
        StrictMorphism { source: one_step.strict, target: two_step.strict, maps };
    rep.merge(check_strict_morphism(&morphism));
    if !morphism.is_pointwise_iso() {
        rep.add(Law::NotIso, vec![], None, "comparison is not pointwise invertible");
    }
    Ok((morphism, rep.into_normalized()))
}
