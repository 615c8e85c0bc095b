//! Strict and weak factorization structures, their morphisms, and the law
//! checkers.
//!
//! A strict structure assigns a fiber to every tuple of every power `X^n` up
//! to a truncation arity, transport isomorphisms `nu_alpha` along all
//! diagonal embeddings, and product decompositions `d_alpha` over the
//! disjointness loci `U(alpha)`. A weak structure carries the same data only
//! on chosen neighborhoods of the small diagonal. Validation is total: the
//! checkers return complete reports and never panic on bad data.
//!
//! Transport associativity is checked in the composition convention forced
//! by the diagonal embeddings: for `beta: I -> K`, `gamma: K -> J` and a
//! tuple `q` of arity `|J|`,
//! `nu_{gamma∘beta}(q) = nu_beta(diag(gamma)q) ∘ nu_gamma(q)`.
//! The square relating transport to the product decompositions reads, for
//! `x in U(gamma)`,
//! `d_{gamma∘beta}(diag(beta)x) ∘ (⊗_j nu_{beta_j}(x|_{K_j})) = nu_beta(x) ∘ d_gamma(x)`,
//! whose domain identity `diag(beta)⁻¹ U(gamma∘beta) = U(gamma)` is proved in
//! the configurations module. Products over blocks are ordered tensors, so
//! the composition law for `d` carries the canonical factor reordering
//! between the flat block order and the grouped one.

use std::collections::{BTreeMap, BTreeSet};

use crate::fiber::{tensor, Fiber, FiberMap, FiberTheory, Iso};
use crate::report::{Law, ValidationReport};
use crate::surjection::{all_surjections_from, compose, enumerate_canonical, Surjection};
use crate::variety::{
    diagonal_embed, in_u, kernel_partition, restrict_config, Config, EtaleMap, Locus,
    Variety,
};

#[derive(Debug, thiserror::Error)]
pub enum StructureError {
    #[error("invalid loci: {0}")]
    InvalidLoci(String),
    #[error("structure data error: {0}")]
    Data(String),
}

/// Key for per-surjection, per-point isomorphism tables.
pub type IsoKey = (Surjection, Config);

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StrictStructure {
    pub variety: Variety,
    pub theory: FiberTheory,
    pub max_arity: usize,
    /// Fiber at every tuple of every arity `1..=max_arity`.
    pub fibers: BTreeMap<Config, Fiber>,
    /// `nu[(alpha, p)]: fiber(p) -> fiber(diag(alpha)p)` for every surjection
    /// with source arity at most `max_arity` and every `p` of arity `|J|`.
    pub nu: BTreeMap<IsoKey, Iso>,
    /// `d[(alpha, x)]: tensor of block fibers -> fiber(x)` for `x in U(alpha)`.
    pub d: BTreeMap<IsoKey, Iso>,
}

impl StrictStructure {
    pub fn fiber(&self, x: &Config) -> Option<&Fiber> {
        self.fibers.get(x)
    }

    pub fn nu_at(&self, alpha: &Surjection, p: &Config) -> Option<&Iso> {
        self.nu.get(&(alpha.clone(), p.clone()))
    }

    pub fn d_at(&self, alpha: &Surjection, x: &Config) -> Option<&Iso> {
        self.d.get(&(alpha.clone(), x.clone()))
    }

    /// Domain fiber of `d_alpha` at `x`: ordered tensor of the fibers at the
    /// block restrictions, blocks in target order.
    pub fn d_domain(&self, alpha: &Surjection, x: &Config) -> Option<Fiber> {
        let mut parts = Vec::new();
        for block in alpha.blocks() {
            parts.push(self.fiber(&restrict_config(x, &block))?.clone());
        }
        tensor(self.theory, &parts).ok()
    }

    pub fn all_surjections(&self) -> Vec<Surjection> {
        (1..=self.max_arity).flat_map(all_surjections_from).collect()
    }
}

/// Loci choices for forgetting a strict structure to a weak one.
#[derive(Clone, Debug)]
pub enum LociChoice {
    /// `W(n) = X^n`, `R = X^{|J|}`, `F = X^{|I|}`: forget nothing.
    Full,
    /// Every locus is exactly the small diagonal (`W(1) = X` is forced).
    Diagonal,
    /// Explicit loci, validated against the containment rules.
    Custom {
        w: BTreeMap<usize, Locus>,
        r: BTreeMap<Surjection, Locus>,
        f: BTreeMap<Surjection, Locus>,
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeakStructure {
    pub variety: Variety,
    pub theory: FiberTheory,
    pub max_arity: usize,
    /// Diagonal neighborhoods `W(n)`, one per arity; `W(1) = X`.
    pub w: BTreeMap<usize, Locus>,
    /// Fibers on `W(n)` only.
    pub fibers: BTreeMap<Config, Fiber>,
    /// Ran locus per surjection: `R(alpha)` inside `X^{|J|}`.
    pub r: BTreeMap<Surjection, Locus>,
    /// Transport isos on `R(alpha)`.
    pub nu: BTreeMap<IsoKey, Iso>,
    /// Factorization locus per canonical surjection (it depends only on the
    /// partition), inside `X^{|I|}`.
    pub f: BTreeMap<Surjection, Locus>,
    /// Product decompositions on `F(canonical(alpha)) ∩ U(alpha)`.
    pub d: BTreeMap<IsoKey, Iso>,
}

impl WeakStructure {
    pub fn fiber(&self, x: &Config) -> Option<&Fiber> {
        self.fibers.get(x)
    }

    pub fn w_locus(&self, arity: usize) -> Option<&Locus> {
        self.w.get(&arity)
    }

    pub fn r_locus(&self, alpha: &Surjection) -> Option<&Locus> {
        self.r.get(alpha)
    }

    /// Factorization locus of a surjection, looked up through the canonical
    /// representative of its partition.
    pub fn f_locus(&self, alpha: &Surjection) -> Option<&Locus> {
        let (canon, _) = alpha.canonicalize();
        self.f.get(&canon)
    }

    pub fn nu_at(&self, alpha: &Surjection, p: &Config) -> Option<&Iso> {
        self.nu.get(&(alpha.clone(), p.clone()))
    }

    pub fn d_at(&self, alpha: &Surjection, x: &Config) -> Option<&Iso> {
        self.d.get(&(alpha.clone(), x.clone()))
    }

    /// Intersection of the factorization loci over all partitions of `n`:
    /// the locus where gluing keeps the given fibers.
    pub fn f_intersection(&self, arity: usize) -> Locus {
        let mut acc = match self.w.get(&arity) {
            Some(w) => w.clone(),
            None => Locus::full(&self.variety, arity),
        };
        for alpha in enumerate_canonical(arity, 1) {
            if let Some(f) = self.f.get(&alpha) {
                acc = acc.intersect(f);
            }
        }
        acc
    }

    pub fn d_domain(&self, alpha: &Surjection, x: &Config) -> Option<Fiber> {
        let mut parts = Vec::new();
        for block in alpha.blocks() {
            parts.push(self.fiber(&restrict_config(x, &block))?.clone());
        }
        tensor(self.theory, &parts).ok()
    }

    pub fn all_surjections(&self) -> Vec<Surjection> {
        (1..=self.max_arity).flat_map(all_surjections_from).collect()
    }
}

/// All composable pairs `(beta: I ↠ K, gamma: K ↠ J)` with `|I| <= max_arity`.
pub(crate) fn composable_pairs(max_arity: usize) -> Vec<(Surjection, Surjection)> {
    let mut out = Vec::new();
    for n in 1..=max_arity {
        for beta in all_surjections_from(n) {
            for gamma in all_surjections_from(beta.target_arity()) {
                out.push((beta.clone(), gamma));
            }
        }
    }
    out
}

/// The factor reordering between the flat block order of `beta` and the
/// grouped order induced by `gamma`: source factors are the fibers over the
/// blocks of `beta` in target order, the permutation lists for each block of
/// `gamma∘beta` (in target order) the `beta`-blocks it contains (ascending).
pub(crate) fn grouping_permutation(beta: &Surjection, gamma: &Surjection) -> Vec<usize> {
    let mut perm = Vec::with_capacity(beta.target_arity());
    for kj in gamma.blocks() {
        perm.extend(kj.iter().copied());
    }
    perm
}

/// `weak_forget`: view a strict structure as a weak one over chosen loci.
/// Fibers and isomorphisms are restrictions of the strict data.
pub fn weak_forget(s: &StrictStructure, choice: &LociChoice) -> Result<WeakStructure, StructureError> {
    let variety = &s.variety;
    let surjections = s.all_surjections();

    let (w, r, f): (BTreeMap<usize, Locus>, BTreeMap<Surjection, Locus>, BTreeMap<Surjection, Locus>) =
        match choice {
            LociChoice::Full => {
                let w = (1..=s.max_arity).map(|n| (n, Locus::full(variety, n))).collect();
                let r = surjections
                    .iter()
                    .map(|a| (a.clone(), Locus::full(variety, a.target_arity())))
                    .collect();
                let f = (1..=s.max_arity)
                    .flat_map(|n| enumerate_canonical(n, 1))
                    .map(|a| {
                        let n = a.source_arity();
                        (a, Locus::full(variety, n))
                    })
                    .collect();
                (w, r, f)
            }
            LociChoice::Diagonal => {
                let mut w: BTreeMap<usize, Locus> =
                    (2..=s.max_arity).map(|n| (n, Locus::diagonal(variety, n))).collect();
                w.insert(1, Locus::full(variety, 1));
                let r = surjections
                    .iter()
                    .map(|a| {
                        let m = a.target_arity();
                        let l = if m == 1 { Locus::full(variety, 1) } else { Locus::diagonal(variety, m) };
                        (a.clone(), l)
                    })
                    .collect();
                let f = (1..=s.max_arity)
                    .flat_map(|n| enumerate_canonical(n, 1))
                    .map(|a| {
                        let n = a.source_arity();
                        let l = if n == 1 { Locus::full(variety, 1) } else { Locus::diagonal(variety, n) };
                        (a, l)
                    })
                    .collect();
                (w, r, f)
            }
            LociChoice::Custom { w, r, f } => (w.clone(), r.clone(), f.clone()),
        };

    // containment validation (always, so Custom cannot smuggle bad loci)
    for n in 1..=s.max_arity {
        let wn = w.get(&n).ok_or_else(|| StructureError::InvalidLoci(format!("missing W({n})")))?;
        if wn.arity() != n {
            return Err(StructureError::InvalidLoci(format!("W({n}) has wrong arity")));
        }
        if !wn.contains_diagonal(variety) {
            return Err(StructureError::InvalidLoci(format!("W({n}) misses the diagonal")));
        }
    }
    if w[&1] != Locus::full(variety, 1) {
        return Err(StructureError::InvalidLoci("W(1) must be all of X".into()));
    }
    for alpha in &surjections {
        let ra = r
            .get(alpha)
            .ok_or_else(|| StructureError::InvalidLoci(format!("missing R for {alpha:?}")))?;
        if ra.arity() != alpha.target_arity() || !ra.contains_diagonal(variety) {
            return Err(StructureError::InvalidLoci(format!("bad R locus for {alpha:?}")));
        }
        for p in ra.iter() {
            let embedded = diagonal_embed(alpha, p).expect("arity checked");
            if !w[&alpha.target_arity()].contains(p) || !w[&alpha.source_arity()].contains(&embedded) {
                return Err(StructureError::InvalidLoci(format!(
                    "R locus for {alpha:?} leaves W at {p:?}"
                )));
            }
        }
    }
    for n in 1..=s.max_arity {
        for canon in enumerate_canonical(n, 1) {
            let fa = f
                .get(&canon)
                .ok_or_else(|| StructureError::InvalidLoci(format!("missing F for {canon:?}")))?;
            if fa.arity() != n || !fa.contains_diagonal(variety) {
                return Err(StructureError::InvalidLoci(format!("bad F locus for {canon:?}")));
            }
            for x in fa.iter() {
                if !w[&n].contains(x) {
                    return Err(StructureError::InvalidLoci(format!(
                        "F locus for {canon:?} leaves W at {x:?}"
                    )));
                }
                for block in canon.blocks() {
                    let sub = restrict_config(x, &block);
                    if !w[&block.len()].contains(&sub) {
                        return Err(StructureError::InvalidLoci(format!(
                            "F locus for {canon:?} leaves a block W at {x:?}"
                        )));
                    }
                }
            }
        }
    }

    // restrict the data
    let mut fibers = BTreeMap::new();
    for (n, wn) in &w {
        let _ = n;
        for x in wn.iter() {
            let fx = s
                .fiber(x)
                .ok_or_else(|| StructureError::Data(format!("strict structure misses fiber at {x:?}")))?;
            fibers.insert(x.clone(), fx.clone());
        }
    }
    let mut nu = BTreeMap::new();
    for alpha in &surjections {
        for p in r[alpha].iter() {
            let iso = s
                .nu_at(alpha, p)
                .ok_or_else(|| StructureError::Data(format!("missing nu for {alpha:?} at {p:?}")))?;
            nu.insert((alpha.clone(), p.clone()), iso.clone());
        }
    }
    let mut d = BTreeMap::new();
    for alpha in &surjections {
        let (canon, _) = alpha.canonicalize();
        for x in f[&canon].iter() {
            if in_u(alpha, x).unwrap_or(false) {
                let iso = s
                    .d_at(alpha, x)
                    .ok_or_else(|| StructureError::Data(format!("missing d for {alpha:?} at {x:?}")))?;
                d.insert((alpha.clone(), x.clone()), iso.clone());
            }
        }
    }

    Ok(WeakStructure {
        variety: s.variety.clone(),
        theory: s.theory,
        max_arity: s.max_arity,
        w,
        fibers,
        r,
        nu,
        f,
        d,
    })
}

// ---------------------------------------------------------------------------
// validation of strict structures
// ---------------------------------------------------------------------------

pub fn check_strict(s: &StrictStructure) -> ValidationReport {
    let mut rep = ValidationReport::new();
    let variety = &s.variety;

    // fibers present everywhere, nowhere else
    let mut expected: BTreeSet<Config> = BTreeSet::new();
    for n in 1..=s.max_arity {
        for x in variety.tuples(n) {
            expected.insert(x);
        }
    }
    for x in &expected {
        match s.fiber(x) {
            None => rep.add(Law::MissingDatum, vec![], Some(x.clone()), "no fiber assigned"),
            Some(f) if f.theory() != s.theory => {
                rep.add(Law::Shape, vec![], Some(x.clone()), "fiber in the wrong theory")
            }
            _ => {}
        }
    }
    for x in s.fibers.keys() {
        if !expected.contains(x) {
            rep.add(Law::MissingDatum, vec![], Some(x.clone()), "fiber outside X^n for n <= max arity");
        }
    }

    let surjections = s.all_surjections();

    // nu: presence and shape
    for alpha in &surjections {
        for p in variety.tuples(alpha.target_arity()) {
            let embedded = diagonal_embed(alpha, &p).expect("arity");
            match s.nu_at(alpha, &p) {
                None => rep.add(Law::MissingDatum, vec![alpha.clone()], Some(p), "missing nu"),
                Some(iso) => {
                    let dom_ok = s.fiber(&p).map_or(false, |f| iso.domain() == *f);
                    let cod_ok = s.fiber(&embedded).map_or(false, |f| iso.codomain() == *f);
                    if !dom_ok || !cod_ok {
                        rep.add(
                            Law::Shape,
                            vec![alpha.clone()],
                            Some(p),
                            "nu does not connect fiber(p) to fiber(diag(alpha)p)",
                        );
                    }
                }
            }
        }
    }
    for (alpha, p) in s.nu.keys() {
        if !surjections.contains(alpha) || p.len() != alpha.target_arity() {
            rep.add(Law::MissingDatum, vec![alpha.clone()], Some(p.clone()), "nu entry off its domain");
        }
    }

    // d: presence on U(alpha), absence elsewhere, shape
    for alpha in &surjections {
        for x in variety.tuples(alpha.source_arity()) {
            let member = in_u(alpha, &x).expect("arity");
            match (member, s.d_at(alpha, &x)) {
                (true, None) => rep.add(Law::MissingDatum, vec![alpha.clone()], Some(x), "missing d"),
                (false, Some(_)) => {
                    rep.add(Law::MissingDatum, vec![alpha.clone()], Some(x), "d entry outside U(alpha)")
                }
                (true, Some(iso)) => {
                    let dom_ok = s.d_domain(alpha, &x).map_or(false, |f| iso.domain() == f);
                    let cod_ok = s.fiber(&x).map_or(false, |f| iso.codomain() == *f);
                    if !dom_ok || !cod_ok {
                        rep.add(
                            Law::Shape,
                            vec![alpha.clone()],
                            Some(x),
                            "d does not connect the block tensor to fiber(x)",
                        );
                    }
                }
                (false, None) => {}
            }
        }
    }

    // laws over composable pairs
    for (beta, gamma) in composable_pairs(s.max_arity) {
        let comp = compose(&beta, &gamma).expect("composable");

        // transport associativity
        for q in variety.tuples(gamma.target_arity()) {
            let dq = diagonal_embed(&gamma, &q).expect("arity");
            let (Some(nc), Some(nb), Some(ng)) =
                (s.nu_at(&comp, &q), s.nu_at(&beta, &dq), s.nu_at(&gamma, &q))
            else {
                continue; // absence already reported
            };
            match nb.compose(ng) {
                Ok(rhs) if rhs == *nc => {}
                _ => rep.add(
                    Law::RanAssociativity,
                    vec![beta.clone(), gamma.clone()],
                    Some(q),
                    "nu of the composite differs from the composite of nu",
                ),
            }
        }

        // factorization composition (with the grouping reordering)
        let blocks_comp = comp.blocks();
        let betas_j: Vec<Surjection> =
            blocks_comp.iter().map(|b| beta.restrict(b).expect("nonempty block")).collect();
        let perm = grouping_permutation(&beta, &gamma);
        for x in variety.tuples(beta.source_arity()) {
            if !in_u(&beta, &x).expect("arity") {
                continue;
            }
            let Some(db) = s.d_at(&beta, &x) else { continue };
            let Some(dc) = s.d_at(&comp, &x) else { continue };
            let mut parts = Vec::new();
            for (bj, block) in betas_j.iter().zip(&blocks_comp) {
                match s.d_at(bj, &restrict_config(&x, block)) {
                    Some(i) => parts.push(i.clone()),
                    None => {
                        parts.clear();
                        break;
                    }
                }
            }
            if parts.len() != betas_j.len() {
                continue;
            }
            let beta_fibers: Vec<Fiber> = beta
                .blocks()
                .iter()
                .filter_map(|b| s.fiber(&restrict_config(&x, b)).cloned())
                .collect();
            let ok = (|| -> Result<bool, crate::fiber::FiberError> {
                let tensor_parts = Iso::tensor(s.theory, &parts)?;
                let reorder = Iso::reorder(s.theory, &beta_fibers, &perm)?;
                let rhs = dc.compose(&tensor_parts)?.compose(&reorder)?;
                Ok(rhs == *db)
            })();
            if !matches!(ok, Ok(true)) {
                rep.add(
                    Law::FactorizationComposition,
                    vec![beta.clone(), gamma.clone()],
                    Some(x),
                    "d_beta differs from d_{gamma∘beta} ∘ (⊗ d_{beta_j})",
                );
            }
        }

        // mixed compatibility square
        let gamma_blocks = gamma.blocks();
        for x in variety.tuples(gamma.source_arity()) {
            if !in_u(&gamma, &x).expect("arity") {
                continue;
            }
            let embedded = diagonal_embed(&beta, &x).expect("arity");
            let (Some(d_comp), Some(nu_beta), Some(d_gamma)) = (
                s.d_at(&comp, &embedded),
                s.nu_at(&beta, &x),
                s.d_at(&gamma, &x),
            ) else {
                continue;
            };
            let mut nus = Vec::new();
            for (bj, kj) in betas_j.iter().zip(&gamma_blocks) {
                match s.nu_at(bj, &restrict_config(&x, kj)) {
                    Some(i) => nus.push(i.clone()),
                    None => {
                        nus.clear();
                        break;
                    }
                }
            }
            if nus.len() != betas_j.len() {
                continue;
            }
            let ok = (|| -> Result<bool, crate::fiber::FiberError> {
                let lhs = d_comp.compose(&Iso::tensor(s.theory, &nus)?)?;
                let rhs = nu_beta.compose(d_gamma)?;
                Ok(lhs == rhs)
            })();
            if !matches!(ok, Ok(true)) {
                rep.add(
                    Law::MixedCompatibility,
                    vec![beta.clone(), gamma.clone()],
                    Some(x),
                    "transport and product decomposition do not commute",
                );
            }
        }
    }

    rep.into_normalized()
}

// ---------------------------------------------------------------------------
// validation of weak structures
// ---------------------------------------------------------------------------

pub fn check_weak(z: &WeakStructure) -> ValidationReport {
    let mut rep = ValidationReport::new();
    let variety = &z.variety;
    let surjections = z.all_surjections();

    // W loci
    for n in 1..=z.max_arity {
        match z.w_locus(n) {
            None => rep.add(Law::MissingDatum, vec![], None, format!("missing W({n})")),
            Some(wn) => {
                if wn.arity() != n {
                    rep.add(Law::LocusContainment, vec![], None, format!("W({n}) has wrong arity"));
                    continue;
                }
                if !wn.contains_diagonal(variety) {
                    rep.add(Law::DiagonalMissing, vec![], None, format!("W({n}) misses a diagonal point"));
                }
                if n == 1 && *wn != Locus::full(variety, 1) {
                    rep.add(Law::LocusContainment, vec![], None, "W(1) must be all of X");
                }
            }
        }
    }

    // fibers defined exactly on W
    for (n, wn) in &z.w {
        let _ = n;
        for x in wn.iter() {
            match z.fiber(x) {
                None => rep.add(Law::MissingDatum, vec![], Some(x.clone()), "no fiber on W"),
                Some(f) if f.theory() != z.theory => {
                    rep.add(Law::Shape, vec![], Some(x.clone()), "fiber in the wrong theory")
                }
                _ => {}
            }
        }
    }
    for x in z.fibers.keys() {
        if z.w_locus(x.len()).map_or(true, |w| !w.contains(x)) {
            rep.add(Law::MissingDatum, vec![], Some(x.clone()), "fiber outside W");
        }
    }

    // R loci and nu
    for alpha in &surjections {
        match z.r_locus(alpha) {
            None => rep.add(Law::MissingDatum, vec![alpha.clone()], None, "missing R locus"),
            Some(ra) => {
                if ra.arity() != alpha.target_arity() {
                    rep.add(Law::LocusContainment, vec![alpha.clone()], None, "R locus has wrong arity");
                    continue;
                }
                if !ra.contains_diagonal(variety) {
                    rep.add(Law::DiagonalMissing, vec![alpha.clone()], None, "R locus misses a diagonal point");
                }
                for p in ra.iter() {
                    let embedded = diagonal_embed(alpha, p).expect("arity");
                    let w_ok = z.w_locus(alpha.target_arity()).map_or(false, |w| w.contains(p))
                        && z.w_locus(alpha.source_arity()).map_or(false, |w| w.contains(&embedded));
                    if !w_ok {
                        rep.add(Law::LocusContainment, vec![alpha.clone()], Some(p.clone()), "R leaves W");
                        continue;
                    }
                    match z.nu_at(alpha, p) {
                        None => rep.add(Law::MissingDatum, vec![alpha.clone()], Some(p.clone()), "missing nu on R"),
                        Some(iso) => {
                            let dom_ok = z.fiber(p).map_or(false, |f| iso.domain() == *f);
                            let cod_ok = z.fiber(&embedded).map_or(false, |f| iso.codomain() == *f);
                            if !dom_ok || !cod_ok {
                                rep.add(Law::Shape, vec![alpha.clone()], Some(p.clone()), "nu shape mismatch");
                            }
                        }
                    }
                }
            }
        }
    }
    for (alpha, p) in z.nu.keys() {
        if z.r_locus(alpha).map_or(true, |r| !r.contains(p)) {
            rep.add(Law::MissingDatum, vec![alpha.clone()], Some(p.clone()), "nu entry off R");
        }
    }

    // F loci and d
    for n in 1..=z.max_arity {
        for canon in enumerate_canonical(n, 1) {
            match z.f.get(&canon) {
                None => rep.add(Law::MissingDatum, vec![canon.clone()], None, "missing F locus"),
                Some(fa) => {
                    if fa.arity() != n {
                        rep.add(Law::LocusContainment, vec![canon.clone()], None, "F locus has wrong arity");
                        continue;
                    }
                    if !fa.contains_diagonal(variety) {
                        rep.add(Law::DiagonalMissing, vec![canon.clone()], None, "F locus misses a diagonal point");
                    }
                    for x in fa.iter() {
                        let mut ok = z.w_locus(n).map_or(false, |w| w.contains(x));
                        for block in canon.blocks() {
                            let sub = restrict_config(x, &block);
                            ok &= z.w_locus(block.len()).map_or(false, |w| w.contains(&sub));
                        }
                        if !ok {
                            rep.add(Law::LocusContainment, vec![canon.clone()], Some(x.clone()), "F leaves W");
                        }
                    }
                }
            }
        }
    }
    for alpha in &surjections {
        let Some(fa) = z.f_locus(alpha) else { continue };
        for x in fa.iter() {
            if !in_u(alpha, x).expect("arity") {
                continue;
            }
            match z.d_at(alpha, x) {
                None => rep.add(Law::MissingDatum, vec![alpha.clone()], Some(x.clone()), "missing d on F ∩ U"),
                Some(iso) => {
                    let dom_ok = z.d_domain(alpha, x).map_or(false, |f| iso.domain() == f);
                    let cod_ok = z.fiber(x).map_or(false, |f| iso.codomain() == *f);
                    if !dom_ok || !cod_ok {
                        rep.add(Law::Shape, vec![alpha.clone()], Some(x.clone()), "d shape mismatch");
                    }
                }
            }
        }
    }
    for (alpha, x) in z.d.keys() {
        let on_domain = z
            .f_locus(alpha)
            .map_or(false, |f| f.contains(x) && in_u(alpha, x).unwrap_or(false));
        if !on_domain {
            rep.add(Law::MissingDatum, vec![alpha.clone()], Some(x.clone()), "d entry off F ∩ U");
        }
    }

    // laws, on every instance whose participants all lie in their loci
    for (beta, gamma) in composable_pairs(z.max_arity) {
        let comp = compose(&beta, &gamma).expect("composable");
        let in_r = |a: &Surjection, p: &Config| z.r_locus(a).map_or(false, |r| r.contains(p));
        let in_f = |a: &Surjection, x: &Config| z.f_locus(a).map_or(false, |f| f.contains(x));

        // transport associativity
        for q in variety.tuples(gamma.target_arity()) {
            let dq = diagonal_embed(&gamma, &q).expect("arity");
            if !(in_r(&comp, &q) && in_r(&gamma, &q) && in_r(&beta, &dq)) {
                continue;
            }
            let (Some(nc), Some(nb), Some(ng)) =
                (z.nu_at(&comp, &q), z.nu_at(&beta, &dq), z.nu_at(&gamma, &q))
            else {
                continue;
            };
            match nb.compose(ng) {
                Ok(rhs) if rhs == *nc => {}
                _ => rep.add(
                    Law::RanAssociativity,
                    vec![beta.clone(), gamma.clone()],
                    Some(q),
                    "nu of the composite differs from the composite of nu",
                ),
            }
        }

        let blocks_comp = comp.blocks();
        let betas_j: Vec<Surjection> =
            blocks_comp.iter().map(|b| beta.restrict(b).expect("nonempty block")).collect();
        let perm = grouping_permutation(&beta, &gamma);

        // factorization composition
        for x in variety.tuples(beta.source_arity()) {
            if !in_u(&beta, &x).expect("arity") {
                continue;
            }
            if !(in_f(&beta, &x) && in_f(&comp, &x)) {
                continue;
            }
            if !betas_j
                .iter()
                .zip(&blocks_comp)
                .all(|(bj, b)| in_f(bj, &restrict_config(&x, b)))
            {
                continue;
            }
            let (Some(db), Some(dc)) = (z.d_at(&beta, &x), z.d_at(&comp, &x)) else { continue };
            let parts: Vec<Iso> = betas_j
                .iter()
                .zip(&blocks_comp)
                .filter_map(|(bj, b)| z.d_at(bj, &restrict_config(&x, b)).cloned())
                .collect();
            if parts.len() != betas_j.len() {
                continue;
            }
            let beta_fibers: Vec<Fiber> = beta
                .blocks()
                .iter()
                .filter_map(|b| z.fiber(&restrict_config(&x, b)).cloned())
                .collect();
            if beta_fibers.len() != beta.target_arity() {
                continue;
            }
            let ok = (|| -> Result<bool, crate::fiber::FiberError> {
                let tensor_parts = Iso::tensor(z.theory, &parts)?;
                let reorder = Iso::reorder(z.theory, &beta_fibers, &perm)?;
                let rhs = dc.compose(&tensor_parts)?.compose(&reorder)?;
                Ok(rhs == *db)
            })();
            if !matches!(ok, Ok(true)) {
                rep.add(
                    Law::FactorizationComposition,
                    vec![beta.clone(), gamma.clone()],
                    Some(x),
                    "d_beta differs from d_{gamma∘beta} ∘ (⊗ d_{beta_j})",
                );
            }
        }

        // mixed compatibility square
        let gamma_blocks = gamma.blocks();
        for x in variety.tuples(gamma.source_arity()) {
            if !in_u(&gamma, &x).expect("arity") {
                continue;
            }
            let embedded = diagonal_embed(&beta, &x).expect("arity");
            if !(in_r(&beta, &x) && in_f(&gamma, &x) && in_f(&comp, &embedded)) {
                continue;
            }
            if !betas_j
                .iter()
                .zip(&gamma_blocks)
                .all(|(bj, kj)| in_r(bj, &restrict_config(&x, kj)))
            {
                continue;
            }
            let (Some(d_comp), Some(nu_beta), Some(d_gamma)) = (
                z.d_at(&comp, &embedded),
                z.nu_at(&beta, &x),
                z.d_at(&gamma, &x),
            ) else {
                continue;
            };
            let nus: Vec<Iso> = betas_j
                .iter()
                .zip(&gamma_blocks)
                .filter_map(|(bj, kj)| z.nu_at(bj, &restrict_config(&x, kj)).cloned())
                .collect();
            if nus.len() != betas_j.len() {
                continue;
            }
            let ok = (|| -> Result<bool, crate::fiber::FiberError> {
                let lhs = d_comp.compose(&Iso::tensor(z.theory, &nus)?)?;
                let rhs = nu_beta.compose(d_gamma)?;
                Ok(lhs == rhs)
            })();
            if !matches!(ok, Ok(true)) {
                rep.add(
                    Law::MixedCompatibility,
                    vec![beta.clone(), gamma.clone()],
                    Some(x),
                    "transport and product decomposition do not commute",
                );
            }
        }
    }

    rep.into_normalized()
}

// ---------------------------------------------------------------------------
// morphisms
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StrictMorphism {
    pub source: StrictStructure,
    pub target: StrictStructure,
    /// Pointwise fiber maps on every tuple of every arity.
    pub maps: BTreeMap<Config, FiberMap>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeakMorphism {
    pub source: WeakStructure,
    pub target: WeakStructure,
    /// Per arity, the locus on which the morphism is given.
    pub v: BTreeMap<usize, Locus>,
    /// Pointwise fiber maps on `V(n)`.
    pub maps: BTreeMap<Config, FiberMap>,
}

#[derive(Clone, Debug)]
pub enum StructureMorphism {
    Strict(StrictMorphism),
    Weak(WeakMorphism),
}

impl StrictMorphism {
    pub fn map_at(&self, x: &Config) -> Option<&FiberMap> {
        self.maps.get(x)
    }

    pub fn is_pointwise_iso(&self) -> bool {
        self.maps.values().all(FiberMap::is_iso)
    }

    /// The identity morphism of a strict structure.
    pub fn identity(s: &StrictStructure) -> Self {
        let maps = s.fibers.iter().map(|(x, f)| (x.clone(), FiberMap::identity(f))).collect();
        StrictMorphism { source: s.clone(), target: s.clone(), maps }
    }
}

impl WeakMorphism {
    pub fn map_at(&self, x: &Config) -> Option<&FiberMap> {
        self.maps.get(x)
    }

    pub fn identity(z: &WeakStructure) -> Self {
        let v = z.w.clone();
        let maps = z.fibers.iter().map(|(x, f)| (x.clone(), FiberMap::identity(f))).collect();
        WeakMorphism { source: z.clone(), target: z.clone(), v, maps }
    }
}

pub fn check_morphism(m: &StructureMorphism) -> ValidationReport {
    match m {
        StructureMorphism::Strict(m) => check_strict_morphism(m),
        StructureMorphism::Weak(m) => check_weak_morphism(m),
    }
}

pub fn check_strict_morphism(m: &StrictMorphism) -> ValidationReport {
    let mut rep = ValidationReport::new();
    let (a, b) = (&m.source, &m.target);
    if a.variety != b.variety || a.theory != b.theory || a.max_arity != b.max_arity {
        rep.add(Law::MorphismShape, vec![], None, "source and target structures are incompatible");
        return rep.into_normalized();
    }
    let variety = &a.variety;

    for n in 1..=a.max_arity {
        for x in variety.tuples(n) {
            match m.map_at(&x) {
                None => rep.add(Law::MorphismShape, vec![], Some(x), "missing component"),
                Some(f) => {
                    let dom_ok = a.fiber(&x).map_or(false, |fa| f.domain() == *fa);
                    let cod_ok = b.fiber(&x).map_or(false, |fb| f.codomain() == *fb);
                    if !dom_ok || !cod_ok {
                        rep.add(Law::MorphismShape, vec![], Some(x), "component shape mismatch");
                    }
                }
            }
        }
    }

    for alpha in a.all_surjections() {
        // transport squares
        for p in variety.tuples(alpha.target_arity()) {
            let embedded = diagonal_embed(&alpha, &p).expect("arity");
            let (Some(fp), Some(fe), Some(na), Some(nb)) = (
                m.map_at(&p),
                m.map_at(&embedded),
                a.nu_at(&alpha, &p),
                b.nu_at(&alpha, &p),
            ) else {
                continue;
            };
            let ok = (|| -> Result<bool, crate::fiber::FiberError> {
                let lhs = fe.compose(na.as_map())?;
                let rhs = nb.as_map().compose(fp)?;
                Ok(lhs == rhs)
            })();
            if !matches!(ok, Ok(true)) {
                rep.add(Law::MorphismRan, vec![alpha.clone()], Some(p), "transport square fails");
            }
        }
        // factorization squares
        for x in variety.tuples(alpha.source_arity()) {
            if !in_u(&alpha, &x).expect("arity") {
                continue;
            }
            let (Some(fx), Some(da), Some(db)) =
                (m.map_at(&x), a.d_at(&alpha, &x), b.d_at(&alpha, &x))
            else {
                continue;
            };
            let blocks = alpha.blocks();
            let parts: Vec<FiberMap> = blocks
                .iter()
                .filter_map(|bl| m.map_at(&restrict_config(&x, bl)).cloned())
                .collect();
            if parts.len() != blocks.len() {
                continue;
            }
            let ok = (|| -> Result<bool, crate::fiber::FiberError> {
                let lhs = fx.compose(da.as_map())?;
                let rhs = db.as_map().compose(&FiberMap::tensor(a.theory, &parts)?)?;
                Ok(lhs == rhs)
            })();
            if !matches!(ok, Ok(true)) {
                rep.add(Law::MorphismFactorization, vec![alpha.clone()], Some(x), "factorization square fails");
            }
        }
    }

    rep.into_normalized()
}

pub fn check_weak_morphism(m: &WeakMorphism) -> ValidationReport {
    let mut rep = ValidationReport::new();
    let (a, b) = (&m.source, &m.target);
    if a.variety != b.variety || a.theory != b.theory || a.max_arity != b.max_arity {
        rep.add(Law::MorphismShape, vec![], None, "source and target structures are incompatible");
        return rep.into_normalized();
    }
    let variety = &a.variety;

    // V loci: between the diagonal and W_A ∩ W_B
    for n in 1..=a.max_arity {
        match m.v.get(&n) {
            None => rep.add(Law::MorphismShape, vec![], None, format!("missing V({n})")),
            Some(vn) => {
                if vn.arity() != n {
                    rep.add(Law::MorphismShape, vec![], None, format!("V({n}) has wrong arity"));
                    continue;
                }
                if !vn.contains_diagonal(variety) {
                    rep.add(Law::DiagonalMissing, vec![], None, format!("V({n}) misses a diagonal point"));
                }
                for x in vn.iter() {
                    let inside = a.w_locus(n).map_or(false, |w| w.contains(x))
                        && b.w_locus(n).map_or(false, |w| w.contains(x));
                    if !inside {
                        rep.add(Law::LocusContainment, vec![], Some(x.clone()), "V leaves W ∩ W'");
                        continue;
                    }
                    match m.map_at(x) {
                        None => rep.add(Law::MorphismShape, vec![], Some(x.clone()), "missing component on V"),
                        Some(f) => {
                            let dom_ok = a.fiber(x).map_or(false, |fa| f.domain() == *fa);
                            let cod_ok = b.fiber(x).map_or(false, |fb| f.codomain() == *fb);
                            if !dom_ok || !cod_ok {
                                rep.add(Law::MorphismShape, vec![], Some(x.clone()), "component shape mismatch");
                            }
                        }
                    }
                }
            }
        }
    }
    for x in m.maps.keys() {
        if m.v.get(&x.len()).map_or(true, |v| !v.contains(x)) {
            rep.add(Law::MorphismShape, vec![], Some(x.clone()), "component off V");
        }
    }

    let in_v = |x: &Config| m.v.get(&x.len()).map_or(false, |v| v.contains(x));

    for alpha in a.all_surjections() {
        // transport squares wherever every participant is defined
        for p in variety.tuples(alpha.target_arity()) {
            let embedded = diagonal_embed(&alpha, &p).expect("arity");
            if !(in_v(&p) && in_v(&embedded)) {
                continue;
            }
            let ra = a.r_locus(&alpha).map_or(false, |r| r.contains(&p));
            let rb = b.r_locus(&alpha).map_or(false, |r| r.contains(&p));
            if !(ra && rb) {
                continue;
            }
            let (Some(fp), Some(fe), Some(na), Some(nb)) = (
                m.map_at(&p),
                m.map_at(&embedded),
                a.nu_at(&alpha, &p),
                b.nu_at(&alpha, &p),
            ) else {
                continue;
            };
            let ok = (|| -> Result<bool, crate::fiber::FiberError> {
                let lhs = fe.compose(na.as_map())?;
                let rhs = nb.as_map().compose(fp)?;
                Ok(lhs == rhs)
            })();
            if !matches!(ok, Ok(true)) {
                rep.add(Law::MorphismRan, vec![alpha.clone()], Some(p), "transport square fails");
            }
        }
        // factorization squares
        for x in variety.tuples(alpha.source_arity()) {
            if !in_u(&alpha, &x).expect("arity") || !in_v(&x) {
                continue;
            }
            let fa_ok = a.f_locus(&alpha).map_or(false, |f| f.contains(&x));
            let fb_ok = b.f_locus(&alpha).map_or(false, |f| f.contains(&x));
            if !(fa_ok && fb_ok) {
                continue;
            }
            let blocks = alpha.blocks();
            if !blocks.iter().all(|bl| in_v(&restrict_config(&x, bl))) {
                continue;
            }
            let (Some(fx), Some(da), Some(db)) =
                (m.map_at(&x), a.d_at(&alpha, &x), b.d_at(&alpha, &x))
            else {
                continue;
            };
            let parts: Vec<FiberMap> = blocks
                .iter()
                .filter_map(|bl| m.map_at(&restrict_config(&x, bl)).cloned())
                .collect();
            if parts.len() != blocks.len() {
                continue;
            }
            let ok = (|| -> Result<bool, crate::fiber::FiberError> {
                let lhs = fx.compose(da.as_map())?;
                let rhs = db.as_map().compose(&FiberMap::tensor(a.theory, &parts)?)?;
                Ok(lhs == rhs)
            })();
            if !matches!(ok, Ok(true)) {
                rep.add(Law::MorphismFactorization, vec![alpha.clone()], Some(x), "factorization square fails");
            }
        }
    }

    rep.into_normalized()
}

/// Two weak morphisms between the same structures agree on the intersection
/// of their loci. This is the comparison used instead of quotienting
/// morphisms by restriction.
pub fn agree_on_common_locus(m1: &WeakMorphism, m2: &WeakMorphism) -> bool {
    if m1.source != m2.source || m1.target != m2.target {
        return false;
    }
    for n in 1..=m1.source.max_arity {
        let (Some(v1), Some(v2)) = (m1.v.get(&n), m2.v.get(&n)) else { return false };
        for x in v1.iter() {
            if v2.contains(x) && m1.map_at(x) != m2.map_at(x) {
                return false;
            }
        }
    }
    true
}

/// Transport a strict structure along a bijective relabeling of the variety.
/// Fibers and isomorphisms are carried over pointwise; validation reports are
/// invariant under this operation.
pub fn transport_strict(s: &StrictStructure, relabel: &EtaleMap) -> Result<StrictStructure, StructureError> {
    if relabel.source() != &s.variety || !relabel.is_injective()
        || relabel.source().size() != relabel.target().size()
    {
        return Err(StructureError::Data("relabeling must be a bijection from the structure's variety".into()));
    }
    let push = |x: &Config| relabel.apply_tuple(x);
    let fibers = s.fibers.iter().map(|(x, f)| (push(x), f.clone())).collect();
    let nu = s.nu.iter().map(|((a, p), i)| ((a.clone(), push(p)), i.clone())).collect();
    let d = s.d.iter().map(|((a, x), i)| ((a.clone(), push(x)), i.clone())).collect();
    Ok(StrictStructure {
        variety: relabel.target().clone(),
        theory: s.theory,
        max_arity: s.max_arity,
        fibers,
        nu,
        d,
    })
}

/// The kernel chart of a tuple: its kernel partition when it has at least
/// two blocks.
pub(crate) fn kernel_chart(x: &Config) -> Option<Surjection> {
    let k = kernel_partition(x);
    (k.target_arity() >= 2).then_some(k)
}
