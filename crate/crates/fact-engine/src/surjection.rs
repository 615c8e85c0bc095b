//! Finite index sets and surjections between them.
//!
//! Index sets are canonical `{1,…,n}`; a caller working with arbitrary finite
//! sets relabels on its side. Internally indices are 0-based; the 1-based
//! convention only appears in serialized form. Bijections count as
//! surjections.
//!
//! A surjection `α: I ↠ J` carries its block partition `I = ⊔_j I_j` with
//! `I_j = α⁻¹(j)`. Blocks are listed in target order and elements within a
//! block in source order; that convention fixes the order of every tensor
//! product taken over blocks.

use std::collections::BTreeSet;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum SurjectionError {
    #[error("map is not surjective onto {{1,…,{target}}}: value {missing} has no preimage")]
    NotSurjective { target: usize, missing: usize },
    #[error("empty source")]
    EmptySource,
    #[error("value {value} out of range for target arity {target}")]
    OutOfRange { value: usize, target: usize },
    #[error("arity mismatch: {0}")]
    ArityMismatch(String),
    #[error("empty restriction subset")]
    EmptySubset,
}

/// A surjection between canonical finite index sets.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Surjection {
    target: usize,
    map: Vec<usize>, // map[i] in 0..target
}

impl Surjection {
    pub fn new(target: usize, map: Vec<usize>) -> Result<Self, SurjectionError> {
        if map.is_empty() {
            return Err(SurjectionError::EmptySource);
        }
        if let Some(&v) = map.iter().find(|&&v| v >= target) {
            return Err(SurjectionError::OutOfRange { value: v, target });
        }
        let mut hit = vec![false; target];
        for &v in &map {
            hit[v] = true;
        }
        if let Some(missing) = hit.iter().position(|h| !h) {
            return Err(SurjectionError::NotSurjective { target, missing: missing + 1 });
        }
        Ok(Surjection { target, map })
    }

    pub fn identity(n: usize) -> Self {
        Surjection { target: n, map: (0..n).collect() }
    }

    /// The total collapse `{1,…,n} ↠ {1}`.
    pub fn collapse(n: usize) -> Self {
        Surjection { target: 1, map: vec![0; n] }
    }

    pub fn source_arity(&self) -> usize {
        self.map.len()
    }

    pub fn target_arity(&self) -> usize {
        self.target
    }

    pub fn apply(&self, i: usize) -> usize {
        self.map[i]
    }

    pub fn map(&self) -> &[usize] {
        &self.map
    }

    pub fn is_identity(&self) -> bool {
        self.target == self.map.len() && self.map.iter().enumerate().all(|(i, &v)| i == v)
    }

    pub fn is_bijection(&self) -> bool {
        self.target == self.map.len()
    }

    /// Block `j` is the preimage of `j`, elements ascending; blocks listed in
    /// target order.
    pub fn blocks(&self) -> Vec<Vec<usize>> {
        let mut blocks = vec![Vec::new(); self.target];
        for (i, &v) in self.map.iter().enumerate() {
            blocks[v].push(i);
        }
        blocks
    }

    /// Pointwise composition: `self: I ↠ K` followed by `other: K ↠ J`.
    pub fn then(&self, other: &Surjection) -> Result<Surjection, SurjectionError> {
        if self.target != other.source_arity() {
            return Err(SurjectionError::ArityMismatch(format!(
                "target arity {} vs source arity {}",
                self.target,
                other.source_arity()
            )));
        }
        Ok(Surjection { target: other.target, map: self.map.iter().map(|&v| other.map[v]).collect() })
    }

    /// Restriction to a non-empty subset `S` of the source, with source and
    /// target relabeled canonically (elements in ascending order).
    pub fn restrict(&self, subset: &[usize]) -> Result<Surjection, SurjectionError> {
        if subset.is_empty() {
            return Err(SurjectionError::EmptySubset);
        }
        let mut s: Vec<usize> = subset.to_vec();
        s.sort_unstable();
        s.dedup();
        if let Some(&i) = s.iter().find(|&&i| i >= self.map.len()) {
            return Err(SurjectionError::OutOfRange { value: i, target: self.map.len() });
        }
        let image: BTreeSet<usize> = s.iter().map(|&i| self.map[i]).collect();
        let image: Vec<usize> = image.into_iter().collect();
        let map = s.iter().map(|&i| image.binary_search(&self.map[i]).unwrap()).collect();
        Ok(Surjection { target: image.len(), map })
    }

    /// True when the map is a restricted-growth string: the blocks are
    /// labeled by order of first occurrence. These are the canonical
    /// representatives of source partitions.
    pub fn is_canonical(&self) -> bool {
        let mut next = 0;
        for &v in &self.map {
            if v > next {
                return false;
            }
            if v == next {
                next += 1;
            }
        }
        true
    }

    /// The canonical representative of this map's partition together with the
    /// relabeling bijection `σ` such that `self = σ ∘ canonical`.
    pub fn canonicalize(&self) -> (Surjection, Surjection) {
        let mut label_of = vec![usize::MAX; self.target];
        let mut canonical = Vec::with_capacity(self.map.len());
        let mut order = Vec::new(); // original label of canonical block t
        for &v in &self.map {
            if label_of[v] == usize::MAX {
                label_of[v] = order.len();
                order.push(v);
            }
            canonical.push(label_of[v]);
        }
        let canon = Surjection { target: order.len(), map: canonical };
        let sigma = Surjection { target: self.target, map: order };
        (canon, sigma)
    }
}

/// Composition in diagrammatic notation: `compose(β, γ) = γ ∘ β` for
/// `β: I ↠ K`, `γ: K ↠ J`.
pub fn compose(beta: &Surjection, gamma: &Surjection) -> Result<Surjection, SurjectionError> {
    beta.then(gamma)
}

/// The star product of two surjections with a common source, with the maps
/// through which both factor.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StarResult {
    /// The pairs `(j,k)` with `I_j ∩ I_k ≠ ∅`, in lexicographic order; the
    /// canonical target of `α ⋆ β` is `{1,…,len}` labeled by this list.
    pub pairs: Vec<(usize, usize)>,
    pub star_map: Surjection,
    /// Projection `J ⋆ K → J`.
    pub left_factor: Surjection,
    /// Projection `J ⋆ K → K`.
    pub right_factor: Surjection,
}

/// `star(α, β)` for `α: I ↠ J`, `β: I ↠ K`: the joint refinement
/// `α ⋆ β: I ↠ J ⋆ K`, with `J ⋆ K = {(j,k) | I_j ∩ I_k ≠ ∅}` labeled
/// lexicographically.
pub fn star(alpha: &Surjection, beta: &Surjection) -> Result<StarResult, SurjectionError> {
    if alpha.source_arity() != beta.source_arity() {
        return Err(SurjectionError::ArityMismatch(format!(
            "sources {} vs {}",
            alpha.source_arity(),
            beta.source_arity()
        )));
    }
    let pair_set: BTreeSet<(usize, usize)> =
        (0..alpha.source_arity()).map(|i| (alpha.apply(i), beta.apply(i))).collect();
    let pairs: Vec<(usize, usize)> = pair_set.into_iter().collect();
    let star_map = Surjection {
        target: pairs.len(),
        map: (0..alpha.source_arity())
            .map(|i| pairs.binary_search(&(alpha.apply(i), beta.apply(i))).unwrap())
            .collect(),
    };
    let left_factor = Surjection { target: alpha.target, map: pairs.iter().map(|p| p.0).collect() };
    let right_factor = Surjection { target: beta.target, map: pairs.iter().map(|p| p.1).collect() };
    Ok(StarResult { pairs, star_map, left_factor, right_factor })
}

/// All canonical surjections out of `{1,…,n}` with at least `min_blocks`
/// blocks: one representative per partition of the source, enumerated as
/// restricted-growth strings in lexicographic order.
pub fn enumerate_canonical(n: usize, min_blocks: usize) -> Vec<Surjection> {
    let mut out = Vec::new();
    let mut current = vec![0usize; n];
    fn rec(current: &mut Vec<usize>, pos: usize, max_used: usize, min_blocks: usize, out: &mut Vec<Surjection>) {
        let n = current.len();
        if pos == n {
            if max_used + 1 >= min_blocks {
                out.push(Surjection { target: max_used + 1, map: current.clone() });
            }
            return;
        }
        for v in 0..=max_used + 1 {
            current[pos] = v;
            rec(current, pos + 1, max_used.max(v), min_blocks, out);
        }
    }
    if n == 0 {
        return out;
    }
    rec(&mut current, 1, 0, min_blocks, &mut out);
    out
}

/// All surjections `{1,…,n} ↠ {1,…,m}` in lexicographic map order.
pub fn all_surjections(n: usize, m: usize) -> Vec<Surjection> {
    let mut out = Vec::new();
    let mut map = vec![0usize; n];
    loop {
        if let Ok(s) = Surjection::new(m, map.clone()) {
            out.push(s);
        }
        // increment base-m counter
        let mut i = n;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            map[i] += 1;
            if map[i] < m {
                break;
            }
            map[i] = 0;
        }
    }
}

/// All surjections out of `{1,…,n}` onto any canonical target.
pub fn all_surjections_from(n: usize) -> Vec<Surjection> {
    (1..=n).flat_map(|m| all_surjections(n, m)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn surj(target: usize, map: &[usize]) -> Surjection {
        // 1-based input for readability, mirroring the serialized form
        Surjection::new(target, map.iter().map(|&v| v - 1).collect()).unwrap()
    }

    #[test]
    fn compose_identity_absorption() {
        let id2 = Surjection::identity(2);
        let coll = surj(1, &[1, 1]);
        assert_eq!(compose(&id2, &coll).unwrap(), coll);
        let beta = surj(2, &[1, 1, 2]);
        assert_eq!(compose(&beta, &Surjection::identity(2)).unwrap(), beta);
    }

    #[test]
    fn compose_pointwise() {
        let beta = surj(2, &[1, 1, 2]);
        let gamma = surj(1, &[1, 1]);
        assert_eq!(compose(&beta, &gamma).unwrap(), surj(1, &[1, 1, 1]));
    }

    #[test]
    fn compose_arity_mismatch_rejected() {
        let beta = surj(2, &[1, 1, 2]);
        let gamma = surj(1, &[1]);
        assert!(matches!(compose(&beta, &gamma), Err(SurjectionError::ArityMismatch(_))));
    }

    #[test]
    fn blocks_examples() {
        assert_eq!(Surjection::identity(3).blocks(), vec![vec![0], vec![1], vec![2]]);
        assert_eq!(surj(2, &[1, 1, 2]).blocks(), vec![vec![0, 1], vec![2]]);
        assert_eq!(surj(1, &[1, 1, 1]).blocks(), vec![vec![0, 1, 2]]);
    }

    #[test]
    fn star_diagonal_case() {
        let a = surj(2, &[1, 1, 2]);
        let s = star(&a, &a).unwrap();
        assert_eq!(s.pairs, vec![(0, 0), (1, 1)]);
        assert_eq!(s.star_map, a);
        assert_eq!(compose(&s.star_map, &s.left_factor).unwrap(), a);
        assert_eq!(compose(&s.star_map, &s.right_factor).unwrap(), a);
    }

    #[test]
    fn star_enumerated_example() {
        // α: 1,2↦a; 3↦b and β: 1↦c; 2,3↦d over {1,2,3}
        let a = surj(2, &[1, 1, 2]);
        let b = surj(2, &[1, 2, 2]);
        let s = star(&a, &b).unwrap();
        assert_eq!(s.pairs, vec![(0, 0), (0, 1), (1, 1)]);
        assert_eq!(s.star_map, Surjection::identity(3));
        assert_eq!(s.left_factor, surj(2, &[1, 1, 2]));
        assert_eq!(s.right_factor, surj(2, &[1, 2, 2]));
    }

    #[test]
    fn star_with_identity_is_identity() {
        let b = surj(2, &[1, 2, 2]);
        let s = star(&Surjection::identity(3), &b).unwrap();
        assert_eq!(s.star_map, Surjection::identity(3));
    }

    #[test]
    fn star_factorization_exhaustive_small() {
        for n in 1..=4 {
            for a in all_surjections_from(n) {
                for b in all_surjections_from(n) {
                    let s = star(&a, &b).unwrap();
                    assert_eq!(compose(&s.star_map, &s.left_factor).unwrap(), a);
                    assert_eq!(compose(&s.star_map, &s.right_factor).unwrap(), b);
                    // blocks of the star are the nonempty pairwise intersections
                    let ba = a.blocks();
                    let bb = b.blocks();
                    let expected: Vec<Vec<usize>> = s
                        .pairs
                        .iter()
                        .map(|&(j, k)| {
                            ba[j].iter().copied().filter(|i| bb[k].contains(i)).collect()
                        })
                        .collect();
                    assert_eq!(s.star_map.blocks(), expected);
                }
            }
        }
    }

    #[test]
    fn star_commutes_up_to_pair_swap() {
        for a in all_surjections_from(3) {
            for b in all_surjections_from(3) {
                let sab = star(&a, &b).unwrap();
                let sba = star(&b, &a).unwrap();
                let swapped: BTreeSet<(usize, usize)> =
                    sab.pairs.iter().map(|&(j, k)| (k, j)).collect();
                let actual: BTreeSet<(usize, usize)> = sba.pairs.iter().copied().collect();
                assert_eq!(swapped, actual);
                // the relabeling bijection carries one star map to the other
                let relabel: Vec<usize> = sba
                    .pairs
                    .iter()
                    .map(|&(k, j)| sab.pairs.binary_search(&(j, k)).unwrap())
                    .collect();
                for i in 0..3 {
                    assert_eq!(relabel[sba.star_map.apply(i)], sab.star_map.apply(i));
                }
            }
        }
    }

    #[test]
    fn restrict_examples() {
        let id3 = Surjection::identity(3);
        assert_eq!(id3.restrict(&[0, 2]).unwrap(), Surjection::identity(2));
        // α: 1,2↦a; 3↦b restricted to {2,3} sends 2↦a, 3↦b, i.e. identity after relabeling
        let a = surj(2, &[1, 1, 2]);
        assert_eq!(a.restrict(&[1, 2]).unwrap(), Surjection::identity(2));
        // restricting to a single block collapses
        assert_eq!(a.restrict(&[0, 1]).unwrap(), surj(1, &[1, 1]));
        assert!(a.restrict(&[]).is_err());
    }

    #[test]
    fn associativity_exhaustive_small() {
        for n in 1..=4 {
            for b in all_surjections_from(n) {
                for c in all_surjections_from(b.target_arity()) {
                    for d in all_surjections_from(c.target_arity()) {
                        let left = compose(&compose(&b, &c).unwrap(), &d).unwrap();
                        let right = compose(&b, &compose(&c, &d).unwrap()).unwrap();
                        assert_eq!(left, right);
                    }
                }
            }
        }
    }

    #[test]
    fn enumerate_canonical_counts() {
        assert_eq!(enumerate_canonical(2, 2), vec![Surjection::identity(2)]);
        let s3 = enumerate_canonical(3, 2);
        assert_eq!(s3.len(), 4);
        assert_eq!(
            s3,
            vec![surj(2, &[1, 1, 2]), surj(2, &[1, 2, 1]), surj(2, &[1, 2, 2]), Surjection::identity(3)]
        );
        assert_eq!(enumerate_canonical(1, 1), vec![Surjection::identity(1)]);
        // Bell numbers 1, 2, 5, 15
        assert_eq!(enumerate_canonical(4, 1).len(), 15);
    }

    #[test]
    fn canonicalize_round_trip() {
        for n in 1..=4 {
            for s in all_surjections_from(n) {
                let (canon, sigma) = s.canonicalize();
                assert!(canon.is_canonical());
                assert!(sigma.is_bijection());
                assert_eq!(compose(&canon, &sigma).unwrap(), s);
                assert_eq!(canon.blocks().len(), s.blocks().len());
            }
        }
    }
}
