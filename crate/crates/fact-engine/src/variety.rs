//! Finite discrete varieties, configuration tuples, and the loci that drive
//! the factorization axioms.
//!
//! A variety is a finite set of labeled points with the discrete topology: an
//! "open neighborhood of the diagonal" in `X^n` is any subset containing the
//! constant tuples, and an etale map is any total map of point sets (every
//! map of discrete spaces is a local isomorphism). Loci are stored
//! extensionally; the spaces involved are small enough that explicit point
//! sets are both affordable and exactly comparable.

use std::collections::BTreeSet;

use crate::surjection::{enumerate_canonical, Surjection, SurjectionError};

pub type PointId = usize;

/// A tuple in `X^n`, stored as point indices; the arity is the length.
pub type Config = Vec<PointId>;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum VarietyError {
    #[error("variety must have at least one point")]
    Empty,
    #[error("duplicate point label {0:?}")]
    DuplicateLabel(String),
    #[error("unknown point label {0:?}")]
    UnknownLabel(String),
    #[error("arity mismatch: {0}")]
    ArityMismatch(String),
    #[error("etale map must assign every source point")]
    PartialMap,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Variety {
    points: Vec<String>,
}

impl Variety {
    pub fn new(points: Vec<String>) -> Result<Self, VarietyError> {
        if points.is_empty() {
            return Err(VarietyError::Empty);
        }
        let mut seen = BTreeSet::new();
        for p in &points {
            if !seen.insert(p.clone()) {
                return Err(VarietyError::DuplicateLabel(p.clone()));
            }
        }
        Ok(Variety { points })
    }

    /// A variety with points `p1,…,pk`.
    pub fn with_size(k: usize) -> Self {
        Variety::new((1..=k).map(|i| format!("p{i}")).collect()).expect("k >= 1")
    }

    pub fn size(&self) -> usize {
        self.points.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.points
    }

    pub fn label(&self, p: PointId) -> &str {
        &self.points[p]
    }

    pub fn id_of(&self, label: &str) -> Result<PointId, VarietyError> {
        self.points
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| VarietyError::UnknownLabel(label.to_string()))
    }

    /// All tuples of `X^n` in lexicographic order.
    pub fn tuples(&self, arity: usize) -> Vec<Config> {
        let mut out = Vec::with_capacity(self.size().pow(arity as u32));
        let mut cur = vec![0usize; arity];
        loop {
            out.push(cur.clone());
            let mut i = arity;
            loop {
                if i == 0 {
                    return out;
                }
                i -= 1;
                cur[i] += 1;
                if cur[i] < self.size() {
                    break;
                }
                cur[i] = 0;
            }
        }
    }

    pub fn render(&self, x: &Config) -> String {
        let labels: Vec<&str> = x.iter().map(|&p| self.label(p)).collect();
        format!("({})", labels.join(","))
    }
}

/// An explicit subset of `X^n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Locus {
    arity: usize,
    members: BTreeSet<Config>,
}

impl Locus {
    pub fn new(arity: usize, members: impl IntoIterator<Item = Config>) -> Result<Self, VarietyError> {
        let members: BTreeSet<Config> = members.into_iter().collect();
        if let Some(bad) = members.iter().find(|m| m.len() != arity) {
            return Err(VarietyError::ArityMismatch(format!(
                "locus of arity {arity} contains a tuple of length {}",
                bad.len()
            )));
        }
        Ok(Locus { arity, members })
    }

    pub fn full(variety: &Variety, arity: usize) -> Self {
        Locus { arity, members: variety.tuples(arity).into_iter().collect() }
    }

    /// The small diagonal: all constant tuples.
    pub fn diagonal(variety: &Variety, arity: usize) -> Self {
        Locus { arity, members: (0..variety.size()).map(|p| vec![p; arity]).collect() }
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn contains(&self, x: &Config) -> bool {
        self.members.contains(x)
    }

    pub fn is_subset(&self, other: &Locus) -> bool {
        self.members.is_subset(&other.members)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Config> {
        self.members.iter()
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn intersect(&self, other: &Locus) -> Locus {
        Locus { arity: self.arity, members: self.members.intersection(&other.members).cloned().collect() }
    }

    pub fn contains_diagonal(&self, variety: &Variety) -> bool {
        (0..variety.size()).all(|p| self.members.contains(&vec![p; self.arity]))
    }
}

/// A total map of point sets. No injectivity is required: injectivity is
/// precisely the condition under which the naive pullback of a factorization
/// structure works, and the engine must exercise both sides of that boundary.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EtaleMap {
    source: Variety,
    target: Variety,
    map: Vec<PointId>,
}

impl EtaleMap {
    pub fn new(source: Variety, target: Variety, map: Vec<PointId>) -> Result<Self, VarietyError> {
        if map.len() != source.size() {
            return Err(VarietyError::PartialMap);
        }
        if let Some(&v) = map.iter().find(|&&v| v >= target.size()) {
            return Err(VarietyError::UnknownLabel(format!("point index {v} out of range")));
        }
        Ok(EtaleMap { source, target, map })
    }

    pub fn identity(variety: &Variety) -> Self {
        EtaleMap { source: variety.clone(), target: variety.clone(), map: (0..variety.size()).collect() }
    }

    pub fn source(&self) -> &Variety {
        &self.source
    }

    pub fn target(&self) -> &Variety {
        &self.target
    }

    pub fn apply(&self, p: PointId) -> PointId {
        self.map[p]
    }

    /// Coordinatewise application to a tuple.
    pub fn apply_tuple(&self, x: &Config) -> Config {
        x.iter().map(|&p| self.map[p]).collect()
    }

    pub fn is_injective(&self) -> bool {
        let mut seen = vec![false; self.target.size()];
        self.map.iter().all(|&v| !std::mem::replace(&mut seen[v], true))
    }

    /// `other ∘ self` for `self: X → Y`, `other: Y → W`.
    pub fn then(&self, other: &EtaleMap) -> Result<EtaleMap, VarietyError> {
        if self.target != other.source {
            return Err(VarietyError::ArityMismatch("composition of etale maps".into()));
        }
        Ok(EtaleMap {
            source: self.source.clone(),
            target: other.target.clone(),
            map: self.map.iter().map(|&v| other.map[v]).collect(),
        })
    }
}

/// Coordinate substitution along `α: I ↠ J`: the image of `p ∈ X^J` under
/// the diagonal embedding `Δ(α): X^J → X^I` has `i`-th coordinate
/// `p[α(i)]`.
pub fn diagonal_embed(alpha: &Surjection, p: &Config) -> Result<Config, VarietyError> {
    if p.len() != alpha.target_arity() {
        return Err(VarietyError::ArityMismatch(format!(
            "tuple arity {} vs target arity {}",
            p.len(),
            alpha.target_arity()
        )));
    }
    Ok((0..alpha.source_arity()).map(|i| p[alpha.apply(i)]).collect())
}

/// Membership in the disjointness locus `U(α)`: coordinates in different
/// blocks must differ.
pub fn in_u(alpha: &Surjection, x: &Config) -> Result<bool, VarietyError> {
    if x.len() != alpha.source_arity() {
        return Err(VarietyError::ArityMismatch(format!(
            "tuple arity {} vs source arity {}",
            x.len(),
            alpha.source_arity()
        )));
    }
    for i1 in 0..x.len() {
        for i2 in (i1 + 1)..x.len() {
            if alpha.apply(i1) != alpha.apply(i2) && x[i1] == x[i2] {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// `U(α)` as an explicit locus.
pub fn u_locus(variety: &Variety, alpha: &Surjection) -> Locus {
    let members = variety
        .tuples(alpha.source_arity())
        .into_iter()
        .filter(|x| in_u(alpha, x).unwrap())
        .collect::<BTreeSet<_>>();
    Locus { arity: alpha.source_arity(), members }
}

/// The canonical surjection whose blocks are the classes of equal
/// coordinates, labeled by first occurrence. Every tuple lies in `U` of its
/// kernel partition, and `x ∈ U(α)` exactly when `α` coarsens it.
pub fn kernel_partition(x: &Config) -> Surjection {
    let mut label_of: Vec<(PointId, usize)> = Vec::new();
    let mut map = Vec::with_capacity(x.len());
    for &p in x {
        let label = match label_of.iter().find(|(q, _)| *q == p) {
            Some(&(_, l)) => l,
            None => {
                let l = label_of.len();
                label_of.push((p, l));
                l
            }
        };
        map.push(label);
    }
    Surjection::new(label_of.len(), map).expect("kernel partition is surjective by construction")
}

/// The distinct coordinate values of a tuple, in order of first occurrence.
pub fn support(x: &Config) -> Vec<PointId> {
    let mut out = Vec::new();
    for &p in x {
        if !out.contains(&p) {
            out.push(p);
        }
    }
    out
}

/// Restriction of a tuple to a set of coordinate positions (ascending).
pub fn restrict_config(x: &Config, positions: &[usize]) -> Config {
    positions.iter().map(|&i| x[i]).collect()
}

/// The locus of pairs on which `φ` collapses distinct points:
/// `Z_φ = {(x₁,x₂) | x₁ ≠ x₂, φ(x₁) = φ(x₂)}`. Empty exactly when `φ` is
/// injective.
pub fn z_phi(phi: &EtaleMap) -> Locus {
    let members = phi
        .source()
        .tuples(2)
        .into_iter()
        .filter(|x| x[0] != x[1] && phi.apply(x[0]) == phi.apply(x[1]))
        .collect::<BTreeSet<_>>();
    Locus { arity: 2, members }
}

/// The locus `V^I_φ` of tuples on which `φ` separates points exactly as the
/// tuple does: `φ(x_i) = φ(x_j) ⟺ x_i = x_j` for all pairs. Always contains
/// the diagonal.
pub fn v_locus(phi: &EtaleMap, arity: usize) -> Locus {
    let members = phi
        .source()
        .tuples(arity)
        .into_iter()
        .filter(|x| in_v(phi, x))
        .collect::<BTreeSet<_>>();
    Locus { arity, members }
}

pub fn in_v(phi: &EtaleMap, x: &Config) -> bool {
    for i in 0..x.len() {
        for j in (i + 1)..x.len() {
            if (phi.apply(x[i]) == phi.apply(x[j])) != (x[i] == x[j]) {
                return false;
            }
        }
    }
    true
}

/// Checks that the proposed diagonal-neighborhood locus together with the
/// disjointness loci `U(α)` (over all canonical `α` with at least two
/// blocks) covers `X^n`. In the discrete model this holds whenever the locus
/// contains the small diagonal; the check exists as a guard and reports any
/// uncovered tuples.
pub fn cover_check(variety: &Variety, f_locus: &Locus) -> (bool, Vec<Config>) {
    let n = f_locus.arity();
    let charts = enumerate_canonical(n, 2);
    let mut uncovered = Vec::new();
    for x in variety.tuples(n) {
        let in_f = f_locus.contains(&x);
        let in_some_u = charts.iter().any(|a| in_u(a, &x).unwrap());
        if !in_f && !in_some_u {
            uncovered.push(x);
        }
    }
    (uncovered.is_empty(), uncovered)
}

/// Convenience: every surjection `S ↠ image` has `Δ(β)⁻¹(U(γ∘β)) = U(γ)`;
/// exposed for tests of the mixed compatibility domain.
pub fn preimage_locus(alpha: &Surjection, locus: &Locus) -> Result<Locus, SurjectionError> {
    if locus.arity() != alpha.source_arity() {
        return Err(SurjectionError::ArityMismatch(format!(
            "locus arity {} vs source arity {}",
            locus.arity(),
            alpha.source_arity()
        )));
    }
    let mut members = BTreeSet::new();
    for x in locus.iter() {
        // x = Δ(α)p for at most one p; reconstruct if consistent
        let blocks = alpha.blocks();
        let mut p = Vec::with_capacity(alpha.target_arity());
        let mut ok = true;
        for block in &blocks {
            let v = x[block[0]];
            if block.iter().any(|&i| x[i] != v) {
                ok = false;
                break;
            }
            p.push(v);
        }
        if ok {
            members.insert(p);
        }
    }
    Ok(Locus { arity: alpha.target_arity(), members })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surjection::{all_surjections_from, compose};

    fn xy() -> Variety {
        Variety::new(vec!["p".into(), "q".into()]).unwrap()
    }

    #[test]
    fn variety_rejects_bad_input() {
        assert!(Variety::new(vec![]).is_err());
        assert!(Variety::new(vec!["a".into(), "a".into()]).is_err());
    }

    #[test]
    fn diagonal_embed_examples() {
        let id = Surjection::identity(2);
        assert_eq!(diagonal_embed(&id, &vec![0, 1]).unwrap(), vec![0, 1]);
        let collapse = Surjection::collapse(2);
        assert_eq!(diagonal_embed(&collapse, &vec![1]).unwrap(), vec![1, 1]);
        // α: 1,2↦1; 3↦2 applied to (a,b) gives (a,a,b)
        let a = Surjection::new(2, vec![0, 0, 1]).unwrap();
        assert_eq!(diagonal_embed(&a, &vec![0, 1]).unwrap(), vec![0, 0, 1]);
        assert!(diagonal_embed(&a, &vec![0]).is_err());
    }

    #[test]
    fn u_of_identity_is_off_diagonal_pairs() {
        let x = xy();
        let u = u_locus(&x, &Surjection::identity(2));
        let expected: BTreeSet<Config> = [vec![0, 1], vec![1, 0]].into_iter().collect();
        assert_eq!(u.members, expected);
    }

    #[test]
    fn constant_tuple_never_in_u_with_two_blocks() {
        let a = Surjection::new(2, vec![0, 0, 1]).unwrap();
        assert!(!in_u(&a, &vec![0, 0, 0]).unwrap());
        // (a,a,b) with blocks {1,2},{3} is fine
        assert!(in_u(&a, &vec![0, 0, 1]).unwrap());
    }

    #[test]
    fn kernel_partition_examples() {
        assert_eq!(kernel_partition(&vec![0, 0, 0]), Surjection::collapse(3));
        assert_eq!(kernel_partition(&vec![0, 1, 2]), Surjection::identity(3));
        // (a,b,a) -> blocks {1,3},{2}
        let k = kernel_partition(&vec![0, 1, 0]);
        assert_eq!(k.blocks(), vec![vec![0, 2], vec![1]]);
        // membership: always in U of own kernel
        for x in Variety::with_size(3).tuples(3) {
            assert!(in_u(&kernel_partition(&x), &x).unwrap());
        }
    }

    #[test]
    fn u_membership_is_kernel_coarsening() {
        let v = Variety::with_size(3);
        for n in 1..=3 {
            for x in v.tuples(n) {
                let k = kernel_partition(&x);
                for a in all_surjections_from(n) {
                    // x in U(α) iff every kernel class sits inside one block of α
                    let classwise = k.blocks().iter().all(|class| {
                        let b = a.apply(class[0]);
                        class.iter().all(|&i| a.apply(i) == b)
                    });
                    assert_eq!(in_u(&a, &x).unwrap(), classwise);
                }
            }
        }
    }

    #[test]
    fn z_and_v_for_collapse() {
        let x = xy();
        let y = Variety::new(vec!["y".into()]).unwrap();
        let phi = EtaleMap::new(x, y, vec![0, 0]).unwrap();
        let z = z_phi(&phi);
        let expected: BTreeSet<Config> = [vec![0, 1], vec![1, 0]].into_iter().collect();
        assert_eq!(z.members, expected);
        let v2 = v_locus(&phi, 2);
        let expected: BTreeSet<Config> = [vec![0, 0], vec![1, 1]].into_iter().collect();
        assert_eq!(v2.members, expected);
        assert!(!phi.is_injective());
    }

    #[test]
    fn injective_map_has_full_v_and_empty_z() {
        let x = xy();
        let phi = EtaleMap::identity(&x);
        assert!(z_phi(&phi).is_empty());
        for n in 1..=3 {
            assert_eq!(v_locus(&phi, n), Locus::full(&x, n));
        }
        assert!(phi.is_injective());
    }

    #[test]
    fn cover_check_diagonal_only() {
        let x = xy();
        for n in 1..=3 {
            let (ok, uncovered) = cover_check(&x, &Locus::diagonal(&x, n));
            assert!(ok, "uncovered: {uncovered:?}");
        }
        // and a locus missing a diagonal point is reported at arity 1
        let partial = Locus::new(1, vec![vec![0]]).unwrap();
        let (ok, uncovered) = cover_check(&x, &partial);
        assert!(!ok);
        assert_eq!(uncovered, vec![vec![1]]);
    }

    #[test]
    fn diagonal_embedding_contravariant_composition() {
        let v = Variety::with_size(2);
        for n in 1..=4usize {
            for b in all_surjections_from(n) {
                for c in all_surjections_from(b.target_arity()) {
                    let comp = compose(&b, &c).unwrap();
                    for p in v.tuples(c.target_arity()) {
                        let lhs = diagonal_embed(&comp, &p).unwrap();
                        let rhs = diagonal_embed(&b, &diagonal_embed(&c, &p).unwrap()).unwrap();
                        assert_eq!(lhs, rhs);
                    }
                }
            }
        }
    }

    #[test]
    fn u_intersection_is_u_star_exhaustive() {
        for size in 1..=3usize {
            let v = Variety::with_size(size);
            for n in 1..=4usize {
                if size.pow(n as u32) > 100 {
                    continue;
                }
                for a in all_surjections_from(n) {
                    for b in all_surjections_from(n) {
                        let s = crate::surjection::star(&a, &b).unwrap();
                        for x in v.tuples(n) {
                            let lhs = in_u(&a, &x).unwrap() && in_u(&b, &x).unwrap();
                            assert_eq!(lhs, in_u(&s.star_map, &x).unwrap());
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn diagonal_preimage_of_u_composite() {
        // Δ(β)⁻¹(U(γ∘β)) = U(γ) for β: I↠K, γ: K↠J
        let v = Variety::with_size(3);
        for n in 2..=4usize {
            for b in all_surjections_from(n) {
                for c in all_surjections_from(b.target_arity()) {
                    let comp = compose(&b, &c).unwrap();
                    for x in v.tuples(b.target_arity()) {
                        let lhs = in_u(&comp, &diagonal_embed(&b, &x).unwrap()).unwrap();
                        assert_eq!(lhs, in_u(&c, &x).unwrap());
                    }
                }
            }
        }
    }
}
