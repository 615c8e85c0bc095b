//! Reconstruction of a full factorization structure from
//! diagonal-neighborhood data, by induction on arity.
//!
//! At each arity `n` the power `X^n` is covered by one chart per canonical
//! partition with at least two blocks (the disjointness locus `U(alpha)`,
//! carrying the tensor of lower-arity glued fibers over the blocks) together
//! with one chart on the intersection `F(n)` of the factorization loci
//! (carrying the given fibers). Transitions between overlapping charts are
//! assembled from lower-arity product decompositions; the triple-overlap
//! cocycle identity is verified exhaustively before the charts are merged.
//!
//! The fiber at a point is the space of its selected chart. The default
//! selection prefers the `F` chart wherever it applies and otherwise uses
//! the kernel partition of the point, which is the finest chart containing
//! it; the alternate selection prefers the kernel chart, and the two outputs
//! are isomorphic through the recorded transitions.

use std::collections::BTreeMap;

use crate::fiber::{tensor, Fiber, FiberError, FiberMap, Iso};
use crate::report::{Law, ValidationReport};
use crate::structure::{
    check_weak, check_weak_morphism, weak_forget, LociChoice, StrictMorphism, StrictStructure,
    StructureError, WeakMorphism, WeakStructure,
};
use crate::surjection::{all_surjections_from, compose, enumerate_canonical, star, Surjection};
use crate::variety::{
    cover_check, diagonal_embed, in_u, kernel_partition, restrict_config, Config, Locus, Variety,
};

/// A chart of the gluing cover at some arity: the diagonal-neighborhood
/// chart or the disjointness chart of a canonical partition.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Chart {
    F,
    U(Surjection),
}

impl Chart {
    pub fn render(&self) -> String {
        match self {
            Chart::F => "F".to_string(),
            Chart::U(a) => {
                let vals: Vec<String> = a.map().iter().map(|v| (v + 1).to_string()).collect();
                format!("U[{}]", vals.join(","))
            }
        }
    }
}

/// Which chart provides the fiber at a point covered by several.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TieBreak {
    /// Prefer the diagonal-neighborhood chart wherever it applies.
    PreferF,
    /// Prefer the kernel chart; only constants fall back to `F`.
    PreferU,
}

/// The cover built during gluing: effective loci, chart spaces, selections,
/// and all pairwise transitions. Kept alongside the output so the composites
/// used for the reconstructed isomorphisms can be audited.
#[derive(Clone, Debug, Default)]
pub struct ChartAtlas {
    /// Effective diagonal-neighborhood locus per arity.
    pub f_locus: BTreeMap<usize, Locus>,
    /// Selected chart per point.
    pub selection: BTreeMap<Config, Chart>,
    /// Space of each chart at each point it covers.
    pub spaces: BTreeMap<(Chart, Config), Fiber>,
    /// Transition isomorphism between each ordered pair of distinct charts
    /// at each point of their overlap.
    pub transitions: BTreeMap<(Chart, Chart, Config), Iso>,
}

impl ChartAtlas {
    /// Charts covering a point, the `F` chart first.
    pub fn charts_at(&self, x: &Config) -> Vec<Chart> {
        let mut out = Vec::new();
        if self.f_locus.get(&x.len()).map_or(false, |f| f.contains(x)) {
            out.push(Chart::F);
        }
        for alpha in enumerate_canonical(x.len(), 2) {
            if in_u(&alpha, x).unwrap_or(false) {
                out.push(Chart::U(alpha));
            }
        }
        out
    }

    /// The transition from chart `a` to chart `b` at `x`; identity when the
    /// charts coincide.
    pub fn transition(&self, a: &Chart, b: &Chart, x: &Config) -> Option<Iso> {
        if a == b {
            return self.spaces.get(&(a.clone(), x.clone())).map(Iso::identity);
        }
        self.transitions.get(&(a.clone(), b.clone(), x.clone())).cloned()
    }

    /// Route from a chart's space into the glued fiber (the selected chart).
    pub fn route(&self, from: &Chart, x: &Config) -> Option<Iso> {
        let sel = self.selection.get(x)?;
        self.transition(from, sel, x)
    }

    /// Route from the glued fiber onto the diagonal-neighborhood chart.
    pub fn route_to_f(&self, x: &Config) -> Option<Iso> {
        let sel = self.selection.get(x)?;
        self.transition(sel, &Chart::F, x)
    }

    /// Human-readable dump of selections and transitions.
    pub fn describe(&self, variety: &Variety) -> String {
        let mut out = String::new();
        for (x, c) in &self.selection {
            out.push_str(&format!("select {} -> {}\n", variety.render(x), c.render()));
        }
        for ((a, b, x), iso) in &self.transitions {
            out.push_str(&format!(
                "transition {} -> {} at {}: {}\n",
                a.render(),
                b.render(),
                variety.render(x),
                if iso.is_identity() { "identity" } else { "nontrivial" }
            ));
        }
        out
    }
}

#[derive(Debug, thiserror::Error)]
pub enum GlueError {
    #[error("weak structure fails validation:\n{0}")]
    InvalidWeak(String),
    #[error("cover failure:\n{0}")]
    Cover(String),
    #[error("diagonal-neighborhood loci are not hereditary:\n{0}")]
    Heredity(String),
    #[error("cocycle failure:\n{0}")]
    Cocycle(String),
    #[error("inconsistent morphism extension: {0}")]
    Inconsistent(String),
    #[error("gluing error: {0}")]
    Internal(String),
}

impl From<StructureError> for GlueError {
    fn from(e: StructureError) -> Self {
        GlueError::Internal(e.to_string())
    }
}

impl From<FiberError> for GlueError {
    fn from(e: FiberError) -> Self {
        GlueError::Internal(e.to_string())
    }
}

/// A glued structure together with the atlas it was built from.
#[derive(Clone, Debug)]
pub struct GluedStructure {
    pub strict: StrictStructure,
    pub atlas: ChartAtlas,
}

/// Glue with the default chart selection.
pub fn glue(z: &WeakStructure) -> Result<GluedStructure, GlueError> {
    glue_with(z, TieBreak::PreferF)
}

struct Builder<'a> {
    z: &'a WeakStructure,
    atlas: ChartAtlas,
    fibers: BTreeMap<Config, Fiber>,
    nu: BTreeMap<(Surjection, Config), Iso>,
    d: BTreeMap<(Surjection, Config), Iso>,
}

impl<'a> Builder<'a> {
    fn fiber(&self, x: &Config) -> Result<&Fiber, GlueError> {
        self.fibers.get(x).ok_or_else(|| GlueError::Internal(format!("missing glued fiber at {x:?}")))
    }

    fn d_at(&self, alpha: &Surjection, x: &Config) -> Result<&Iso, GlueError> {
        self.d
            .get(&(alpha.clone(), x.clone()))
            .ok_or_else(|| GlueError::Internal(format!("missing glued d for {alpha:?} at {x:?}")))
    }

    /// `phi_alpha^beta`: from the tensor over the star pairs (lexicographic
    /// in `(j,k)`) to the space of the `beta` chart, via the product of the
    /// decompositions of `alpha` restricted to each block of `beta`.
    fn star_half(
        &self,
        pairs: &[(usize, usize)],
        alpha: &Surjection,
        beta: &Surjection,
        x: &Config,
    ) -> Result<Iso, GlueError> {
        let mut parts = Vec::new();
        for block in beta.blocks() {
            let alpha_k = alpha.restrict(&block).expect("nonempty block");
            let sub = restrict_config(x, &block);
            parts.push(self.d_at(&alpha_k, &sub)?.clone());
        }
        let grouped = Iso::tensor(self.z.theory, &parts)?;
        // the grouped tensor reads the pairs sorted by (k, j); reorder the
        // lexicographic (j, k) source accordingly
        let mut perm = Vec::with_capacity(pairs.len());
        for k in 0..beta.target_arity() {
            for (idx, &(_, k2)) in pairs.iter().enumerate() {
                if k2 == k {
                    perm.push(idx);
                }
            }
        }
        let pair_fibers: Vec<Fiber> = pairs
            .iter()
            .map(|&(j, k)| {
                let block: Vec<usize> = (0..alpha.source_arity())
                    .filter(|&i| alpha.apply(i) == j && beta.apply(i) == k)
                    .collect();
                self.fiber(&restrict_config(x, &block)).cloned()
            })
            .collect::<Result<_, _>>()?;
        let reorder = Iso::reorder(self.z.theory, &pair_fibers, &perm)?;
        Ok(grouped.compose(&reorder)?)
    }

    /// The transition from chart `a` to chart `b` at a point of their
    /// overlap. Between disjointness charts it factors through the star
    /// partition; into the diagonal-neighborhood chart it is the given weak
    /// decomposition corrected by the lower routes onto the given fibers.
    fn build_transition(&self, a: &Chart, b: &Chart, x: &Config) -> Result<Iso, GlueError> {
        match (a, b) {
            (Chart::U(alpha), Chart::U(beta)) => {
                let s = star(alpha, beta).expect("same source");
                let to_beta = self.star_half(&s.pairs, alpha, beta, x)?;
                let to_alpha = self.star_half(
                    &s.pairs.iter().map(|&(j, k)| (k, j)).collect::<Vec<_>>(),
                    beta,
                    alpha,
                    x,
                )?;
                Ok(to_beta.compose(&to_alpha.invert())?)
            }
            (Chart::U(alpha), Chart::F) => {
                let dt = self
                    .z
                    .d_at(alpha, x)
                    .ok_or_else(|| GlueError::Internal(format!("missing weak d for {alpha:?} at {x:?}")))?;
                let mut parts = Vec::new();
                for block in alpha.blocks() {
                    let sub = restrict_config(x, &block);
                    let to_f = self
                        .atlas
                        .route_to_f(&sub)
                        .ok_or_else(|| GlueError::Internal(format!("no route to F at {sub:?}")))?;
                    parts.push(to_f);
                }
                Ok(dt.compose(&Iso::tensor(self.z.theory, &parts)?)?)
            }
            (Chart::F, Chart::U(_)) => Ok(self.build_transition(b, a, x)?.invert()),
            (Chart::F, Chart::F) => Err(GlueError::Internal("transition between equal charts".into())),
        }
    }
}

pub fn glue_with(z: &WeakStructure, tie: TieBreak) -> Result<GluedStructure, GlueError> {
    let pre = check_weak(z);
    if !pre.is_empty() {
        return Err(GlueError::InvalidWeak(pre.render(Some(&z.variety))));
    }
    let variety = z.variety.clone();
    let mut b = Builder {
        z,
        atlas: ChartAtlas::default(),
        fibers: BTreeMap::new(),
        nu: BTreeMap::new(),
        d: BTreeMap::new(),
    };

    for n in 1..=z.max_arity {
        let f_n = z.f_intersection(n);
        let (covered, uncovered) = cover_check(&variety, &f_n);
        if !covered {
            let mut rep = ValidationReport::new();
            for x in uncovered {
                rep.add(Law::Cover, vec![], Some(x), format!("arity {n} point not covered by any chart"));
            }
            return Err(GlueError::Cover(rep.into_normalized().render(Some(&variety))));
        }

        let charts = enumerate_canonical(n, 2);

        // Heredity: a point where the diagonal-neighborhood chart overlaps a
        // disjointness chart must restrict into the lower effective loci,
        // otherwise the chart spaces cannot be identified with the given
        // fibers and the transition onto `F` is untyped.
        let mut heredity = ValidationReport::new();
        for x in f_n.iter() {
            for alpha in &charts {
                if !in_u(alpha, x).unwrap() {
                    continue;
                }
                for block in alpha.blocks() {
                    let sub = restrict_config(x, &block);
                    if !b.atlas.f_locus[&block.len()].contains(&sub) {
                        heredity.add(
                            Law::Heredity,
                            vec![alpha.clone()],
                            Some(x.clone()),
                            "block restriction leaves the lower diagonal-neighborhood locus",
                        );
                    }
                }
            }
        }
        if !heredity.is_empty() {
            return Err(GlueError::Heredity(heredity.into_normalized().render(Some(&variety))));
        }
        b.atlas.f_locus.insert(n, f_n.clone());

        // chart spaces
        for x in variety.tuples(n) {
            if f_n.contains(&x) {
                let zf = z
                    .fiber(&x)
                    .ok_or_else(|| GlueError::Internal(format!("no weak fiber at {x:?}")))?;
                b.atlas.spaces.insert((Chart::F, x.clone()), zf.clone());
            }
            for alpha in &charts {
                if in_u(alpha, &x).unwrap() {
                    let mut parts = Vec::new();
                    for block in alpha.blocks() {
                        parts.push(b.fiber(&restrict_config(&x, &block))?.clone());
                    }
                    let space = tensor(z.theory, &parts)?;
                    b.atlas.spaces.insert((Chart::U(alpha.clone()), x.clone()), space);
                }
            }
        }

        // selections and fibers
        for x in variety.tuples(n) {
            let sel = match tie {
                TieBreak::PreferF if f_n.contains(&x) => Chart::F,
                TieBreak::PreferF => Chart::U(kernel_partition(&x)),
                TieBreak::PreferU => match crate::structure::kernel_chart(&x) {
                    Some(k) => Chart::U(k),
                    None => Chart::F,
                },
            };
            let space = b
                .atlas
                .spaces
                .get(&(sel.clone(), x.clone()))
                .ok_or_else(|| GlueError::Internal(format!("selected chart misses {x:?}")))?
                .clone();
            b.atlas.selection.insert(x.clone(), sel);
            b.fibers.insert(x, space);
        }

        // transitions between every ordered pair of distinct charts
        for x in variety.tuples(n) {
            let present = b.atlas.charts_at(&x);
            for ca in &present {
                for cb in &present {
                    if ca == cb {
                        continue;
                    }
                    let iso = b.build_transition(ca, cb, &x)?;
                    b.atlas.transitions.insert((ca.clone(), cb.clone(), x.clone()), iso);
                }
            }
        }

        // cocycle check before the charts are trusted
        let coc = verify_cocycle(&b.atlas, &variety, n);
        if !coc.is_empty() {
            return Err(GlueError::Cocycle(coc.render(Some(&variety))));
        }

        // product decompositions for every surjection out of arity n
        for alpha in all_surjections_from(n) {
            if alpha.target_arity() == 1 {
                for x in variety.tuples(n) {
                    let f = b.fiber(&x)?.clone();
                    b.d.insert((alpha.clone(), x), Iso::identity(&f));
                }
                continue;
            }
            let (canon, sigma) = alpha.canonicalize();
            for x in variety.tuples(n) {
                if !in_u(&alpha, &x).unwrap() {
                    continue;
                }
                let route = b
                    .atlas
                    .route(&Chart::U(canon.clone()), &x)
                    .ok_or_else(|| GlueError::Internal(format!("no route for {canon:?} at {x:?}")))?;
                let iso = if alpha.is_canonical() {
                    route
                } else {
                    let alpha_fibers: Vec<Fiber> = alpha
                        .blocks()
                        .iter()
                        .map(|bl| b.fiber(&restrict_config(&x, bl)).cloned())
                        .collect::<Result<_, _>>()?;
                    let reorder = Iso::reorder(z.theory, &alpha_fibers, sigma.map())?;
                    route.compose(&reorder)?
                };
                b.d.insert((alpha.clone(), x.clone()), iso);
            }
        }

        // transport isomorphisms for every surjection out of arity n: given
        // on the diagonal, routed through the kernel chart elsewhere
        for alpha in all_surjections_from(n) {
            for p in variety.tuples(alpha.target_arity()) {
                let kappa = kernel_partition(&p);
                let embedded = diagonal_embed(&alpha, &p).unwrap();
                let iso = if kappa.target_arity() == 1 {
                    z.nu_at(&alpha, &p)
                        .ok_or_else(|| GlueError::Internal(format!("missing diagonal nu for {alpha:?}")))?
                        .clone()
                } else {
                    let ka = compose(&alpha, &kappa).expect("composable");
                    let d_ka = b.d_at(&ka, &embedded)?.clone();
                    let d_k = b.d_at(&kappa, &p)?.clone();
                    let ka_blocks = ka.blocks();
                    let mut parts = Vec::new();
                    for (c, class) in kappa.blocks().iter().enumerate() {
                        let alpha_c = alpha.restrict(&ka_blocks[c]).expect("nonempty");
                        let point = restrict_config(&p, class);
                        let nu_c = z.nu_at(&alpha_c, &point).ok_or_else(|| {
                            GlueError::Internal("missing diagonal nu in transport assembly".into())
                        })?;
                        parts.push(nu_c.clone());
                    }
                    let middle = Iso::tensor(z.theory, &parts)?;
                    d_ka.compose(&middle)?.compose(&d_k.invert())?
                };
                b.nu.insert((alpha.clone(), p.clone()), iso);
            }
        }
    }

    let strict = StrictStructure {
        variety,
        theory: z.theory,
        max_arity: z.max_arity,
        fibers: b.fibers,
        nu: b.nu,
        d: b.d,
    };
    Ok(GluedStructure { strict, atlas: b.atlas })
}

/// Exhaustive triple-overlap check at one arity: for every point and every
/// ordered triple of charts covering it (the diagonal-neighborhood chart
/// included, repeats allowed), the two-step transition equals the direct
/// one. Degenerate triples verify that opposite transitions are mutually
/// inverse.
pub fn verify_cocycle(atlas: &ChartAtlas, variety: &Variety, arity: usize) -> ValidationReport {
    let mut rep = ValidationReport::new();
    for x in variety.tuples(arity) {
        let present = atlas.charts_at(&x);
        for a in &present {
            for c2 in &present {
                for c3 in &present {
                    let (Some(t12), Some(t23), Some(t13)) = (
                        atlas.transition(a, c2, &x),
                        atlas.transition(c2, c3, &x),
                        atlas.transition(a, c3, &x),
                    ) else {
                        rep.add(Law::Cocycle, vec![], Some(x.clone()), "missing transition on an overlap");
                        continue;
                    };
                    let ok = match t23.compose(&t12) {
                        Ok(two_step) => two_step == t13,
                        Err(_) => false,
                    };
                    if !ok {
                        rep.add(
                            Law::Cocycle,
                            chart_surjections(&[a, c2, c3]),
                            Some(x.clone()),
                            format!("{} -> {} -> {} differs from the direct transition", a.render(), c2.render(), c3.render()),
                        );
                    }
                }
            }
        }
    }
    rep.into_normalized()
}

fn chart_surjections(charts: &[&Chart]) -> Vec<Surjection> {
    charts
        .iter()
        .filter_map(|c| match c {
            Chart::U(a) => Some(a.clone()),
            Chart::F => None,
        })
        .collect()
}

/// Glue a morphism of weak structures to a morphism of the glued
/// structures. Components at constants are the given ones; elsewhere the
/// tensor of lower components is conjugated through the kernel-chart routes.
/// Wherever the given components overlap the construction they must agree,
/// otherwise the input morphism was not actually compatible.
pub fn glue_morphism(m: &WeakMorphism) -> Result<(GluedStructure, GluedStructure, StrictMorphism), GlueError> {
    let pre = check_weak_morphism(m);
    if !pre.is_empty() {
        return Err(GlueError::Inconsistent(pre.render(Some(&m.source.variety))));
    }
    let ga = glue(&m.source)?;
    let gb = glue(&m.target)?;
    let variety = &m.source.variety;
    let theory = m.source.theory;

    let mut maps: BTreeMap<Config, FiberMap> = BTreeMap::new();
    for n in 1..=m.source.max_arity {
        for x in variety.tuples(n) {
            let kappa = kernel_partition(&x);
            let g = if kappa.target_arity() == 1 {
                m.map_at(&x)
                    .ok_or_else(|| GlueError::Inconsistent(format!("missing component on the diagonal at {x:?}")))?
                    .clone()
            } else {
                let chart = Chart::U(kappa.clone());
                let route_a = ga
                    .atlas
                    .route(&chart, &x)
                    .ok_or_else(|| GlueError::Internal("missing route in source".into()))?;
                let route_b = gb
                    .atlas
                    .route(&chart, &x)
                    .ok_or_else(|| GlueError::Internal("missing route in target".into()))?;
                let parts: Vec<FiberMap> = kappa
                    .blocks()
                    .iter()
                    .map(|bl| {
                        maps.get(&restrict_config(&x, bl))
                            .cloned()
                            .ok_or_else(|| GlueError::Internal("missing lower component".into()))
                    })
                    .collect::<Result<_, _>>()?;
                let t = FiberMap::tensor(theory, &parts)?;
                route_b
                    .as_map()
                    .compose(&t)?
                    .compose(route_a.invert().as_map())?
            };
            maps.insert(x, g);
        }
        // consistency against the given components
        if let Some(vn) = m.v.get(&n) {
            for x in vn.iter() {
                let fa = ga.atlas.f_locus[&n].contains(x);
                let fb = gb.atlas.f_locus[&n].contains(x);
                if !(fa && fb) {
                    continue;
                }
                let to_f_a = ga.atlas.route_to_f(x).ok_or_else(|| GlueError::Internal("route".into()))?;
                let to_f_b = gb.atlas.route_to_f(x).ok_or_else(|| GlueError::Internal("route".into()))?;
                let g = maps.get(x).expect("built above");
                let projected = to_f_b
                    .as_map()
                    .compose(g)?
                    .compose(to_f_a.invert().as_map())?;
                if Some(&projected) != m.map_at(x) {
                    return Err(GlueError::Inconsistent(format!(
                        "glued morphism disagrees with the given component at {}",
                        variety.render(x)
                    )));
                }
            }
        }
    }

    let morphism = StrictMorphism { source: ga.strict.clone(), target: gb.strict.clone(), maps };
    Ok((ga, gb, morphism))
}

/// The canonical comparison from the glued forgetting of a strict structure
/// back to the structure itself: identity at constants, the structure's own
/// kernel decomposition composed with lower comparisons elsewhere. For the
/// full-loci forgetting this is the identity morphism.
pub fn canonical_comparison(s: &StrictStructure) -> Result<(GluedStructure, StrictMorphism), GlueError> {
    canonical_comparison_with(s, &LociChoice::Full)
}

pub fn canonical_comparison_with(
    s: &StrictStructure,
    loci: &LociChoice,
) -> Result<(GluedStructure, StrictMorphism), GlueError> {
    let z = weak_forget(s, loci)?;
    let g = glue(&z)?;
    let variety = &s.variety;
    let theory = s.theory;

    let mut maps: BTreeMap<Config, FiberMap> = BTreeMap::new();
    for n in 1..=s.max_arity {
        for x in variety.tuples(n) {
            let kappa = kernel_partition(&x);
            let cmp = if kappa.target_arity() == 1 {
                FiberMap::identity(
                    g.strict
                        .fiber(&x)
                        .ok_or_else(|| GlueError::Internal("missing glued fiber".into()))?,
                )
            } else {
                let chart = Chart::U(kappa.clone());
                let route = g
                    .atlas
                    .route(&chart, &x)
                    .ok_or_else(|| GlueError::Internal("missing route".into()))?;
                let parts: Vec<FiberMap> = kappa
                    .blocks()
                    .iter()
                    .map(|bl| {
                        maps.get(&restrict_config(&x, bl))
                            .cloned()
                            .ok_or_else(|| GlueError::Internal("missing lower comparison".into()))
                    })
                    .collect::<Result<_, _>>()?;
                let t = FiberMap::tensor(theory, &parts)?;
                let d_s = s
                    .d_at(&kappa, &x)
                    .ok_or_else(|| GlueError::Internal("missing kernel decomposition".into()))?;
                d_s.as_map().compose(&t)?.compose(route.invert().as_map())?
            };
            maps.insert(x, cmp);
        }
    }

    let morphism = StrictMorphism { source: g.strict.clone(), target: s.clone(), maps };
    Ok((g, morphism))
}
