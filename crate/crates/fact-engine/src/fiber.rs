//! Pluggable value categories for factorization structures.
//!
//! A structure takes values either in finite sets with bijections or in
//! finite-dimensional rational vector spaces with invertible matrices; the
//! two are never mixed inside one structure. Products are ordered tensor
//! products: cartesian product with lexicographic element order for sets,
//! Kronecker product with lexicographic basis order for vector spaces.
//!
//! Set elements are tuples of atoms rather than opaque strings, and a tensor
//! product concatenates the atom tuples. This makes the product of products
//! literally equal to the flat product — tensor is strictly associative — so
//! the composite isomorphisms appearing in the coherence laws typecheck as
//! exact equalities of maps.

use crate::matrix::Matrix;
use crate::{Rat, RatMatrix};
use num_traits::One;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FiberTheory {
    /// Finite sets and bijections.
    FiniteBijection,
    /// Exact-rational vector spaces and invertible matrices.
    RationalVector,
}

impl std::fmt::Display for FiberTheory {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FiberTheory::FiniteBijection => write!(f, "finite-bijection"),
            FiberTheory::RationalVector => write!(f, "rational-vector"),
        }
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum FiberError {
    #[error("mixed fiber theories")]
    MixedTheories,
    #[error("duplicate element {0:?}")]
    DuplicateElement(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("map is not invertible")]
    NotInvertible,
}

/// An element of a set fiber: a tuple of atoms. Atomic fibers use singleton
/// tuples; tensor products concatenate.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Elem(pub Vec<String>);

impl Elem {
    pub fn atom(s: impl Into<String>) -> Self {
        Elem(vec![s.into()])
    }

    pub fn render(&self) -> String {
        if self.0.len() == 1 {
            self.0[0].clone()
        } else {
            format!("({})", self.0.join(","))
        }
    }
}

/// A value of the chosen category: a finite set or a vector-space dimension.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Fiber {
    Set(Vec<Elem>),
    Vect(usize),
}

impl Fiber {
    /// An atomic set fiber with the given distinct labels.
    pub fn set_of(labels: &[&str]) -> Result<Self, FiberError> {
        Fiber::set(labels.iter().map(|l| Elem::atom(*l)).collect())
    }

    pub fn set(elems: Vec<Elem>) -> Result<Self, FiberError> {
        let mut seen = std::collections::BTreeSet::new();
        for e in &elems {
            if !seen.insert(e.clone()) {
                return Err(FiberError::DuplicateElement(e.render()));
            }
        }
        Ok(Fiber::Set(elems))
    }

    pub fn vect(dim: usize) -> Self {
        Fiber::Vect(dim)
    }

    pub fn theory(&self) -> FiberTheory {
        match self {
            Fiber::Set(_) => FiberTheory::FiniteBijection,
            Fiber::Vect(_) => FiberTheory::RationalVector,
        }
    }

    /// Cardinality or dimension.
    pub fn size(&self) -> usize {
        match self {
            Fiber::Set(e) => e.len(),
            Fiber::Vect(d) => *d,
        }
    }

    pub fn unit(theory: FiberTheory) -> Self {
        match theory {
            FiberTheory::FiniteBijection => Fiber::Set(vec![Elem(vec![])]),
            FiberTheory::RationalVector => Fiber::Vect(1),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Fiber::Set(e) => format!("set of {} elements", e.len()),
            Fiber::Vect(d) => format!("vector space of dimension {d}"),
        }
    }
}

/// Ordered tensor product. The empty product is the unit; a singleton product
/// is the fiber itself.
pub fn tensor(theory: FiberTheory, fibers: &[Fiber]) -> Result<Fiber, FiberError> {
    if fibers.iter().any(|f| f.theory() != theory) {
        return Err(FiberError::MixedTheories);
    }
    match theory {
        FiberTheory::RationalVector => {
            Ok(Fiber::Vect(fibers.iter().map(|f| f.size()).product()))
        }
        FiberTheory::FiniteBijection => {
            let mut elems = vec![Elem(vec![])];
            for f in fibers {
                let Fiber::Set(fe) = f else { unreachable!() };
                let mut next = Vec::with_capacity(elems.len() * fe.len());
                for prefix in &elems {
                    for e in fe {
                        let mut atoms = prefix.0.clone();
                        atoms.extend(e.0.iter().cloned());
                        next.push(Elem(atoms));
                    }
                }
                elems = next;
            }
            Fiber::set(elems)
        }
    }
}

/// A morphism of fibers: an arbitrary function of sets or an arbitrary
/// rational matrix. Isomorphy is *not* required here; see [`Iso`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FiberMap {
    Func { src: Vec<Elem>, dst: Vec<Elem>, map: Vec<usize> },
    Linear(RatMatrix),
}

impl FiberMap {
    pub fn func(src: &Fiber, dst: &Fiber, map: Vec<usize>) -> Result<Self, FiberError> {
        let (Fiber::Set(se), Fiber::Set(de)) = (src, dst) else {
            return Err(FiberError::ShapeMismatch("func needs set fibers".into()));
        };
        if map.len() != se.len() {
            return Err(FiberError::ShapeMismatch(format!(
                "map has {} entries for {} source elements",
                map.len(),
                se.len()
            )));
        }
        if let Some(&v) = map.iter().find(|&&v| v >= de.len()) {
            return Err(FiberError::ShapeMismatch(format!("image index {v} out of range")));
        }
        Ok(FiberMap::Func { src: se.clone(), dst: de.clone(), map })
    }

    pub fn linear(m: RatMatrix) -> Self {
        FiberMap::Linear(m)
    }

    pub fn theory(&self) -> FiberTheory {
        match self {
            FiberMap::Func { .. } => FiberTheory::FiniteBijection,
            FiberMap::Linear(_) => FiberTheory::RationalVector,
        }
    }

    pub fn domain(&self) -> Fiber {
        match self {
            FiberMap::Func { src, .. } => Fiber::Set(src.clone()),
            FiberMap::Linear(m) => Fiber::Vect(m.cols()),
        }
    }

    pub fn codomain(&self) -> Fiber {
        match self {
            FiberMap::Func { dst, .. } => Fiber::Set(dst.clone()),
            FiberMap::Linear(m) => Fiber::Vect(m.rows()),
        }
    }

    pub fn identity(fiber: &Fiber) -> Self {
        match fiber {
            Fiber::Set(e) => {
                FiberMap::Func { src: e.clone(), dst: e.clone(), map: (0..e.len()).collect() }
            }
            Fiber::Vect(d) => FiberMap::Linear(Matrix::identity(*d)),
        }
    }

    pub fn is_identity(&self) -> bool {
        match self {
            FiberMap::Func { src, dst, map } => {
                src == dst && map.iter().enumerate().all(|(i, &v)| i == v)
            }
            FiberMap::Linear(m) => m.is_identity(),
        }
    }

    /// `self ∘ other`: apply `other` first. The intermediate fiber must match
    /// exactly.
    pub fn compose(&self, other: &FiberMap) -> Result<FiberMap, FiberError> {
        match (self, other) {
            (FiberMap::Func { src, dst, map }, FiberMap::Func { src: s2, dst: d2, map: m2 }) => {
                if *src != *d2 {
                    return Err(FiberError::ShapeMismatch(
                        "intermediate set fibers differ".into(),
                    ));
                }
                Ok(FiberMap::Func {
                    src: s2.clone(),
                    dst: dst.clone(),
                    map: m2.iter().map(|&v| map[v]).collect(),
                })
            }
            (FiberMap::Linear(a), FiberMap::Linear(b)) => a
                .mul(b)
                .map(FiberMap::Linear)
                .map_err(|e| FiberError::ShapeMismatch(e.to_string())),
            _ => Err(FiberError::MixedTheories),
        }
    }

    pub fn is_iso(&self) -> bool {
        match self {
            FiberMap::Func { src, dst, map } => {
                if src.len() != dst.len() {
                    return false;
                }
                let mut hit = vec![false; dst.len()];
                map.iter().all(|&v| !std::mem::replace(&mut hit[v], true))
            }
            FiberMap::Linear(m) => m.rows() == m.cols() && m.is_invertible(),
        }
    }

    /// Ordered tensor product of maps; the empty product is the identity of
    /// the unit fiber.
    pub fn tensor(theory: FiberTheory, maps: &[FiberMap]) -> Result<FiberMap, FiberError> {
        if maps.iter().any(|m| m.theory() != theory) {
            return Err(FiberError::MixedTheories);
        }
        match theory {
            FiberTheory::RationalVector => {
                let mut acc = Matrix::identity(1);
                for m in maps {
                    let FiberMap::Linear(m) = m else { unreachable!() };
                    acc = acc.kronecker(m);
                }
                Ok(FiberMap::Linear(acc))
            }
            FiberTheory::FiniteBijection => {
                let srcs: Vec<Fiber> = maps.iter().map(|m| m.domain()).collect();
                let dsts: Vec<Fiber> = maps.iter().map(|m| m.codomain()).collect();
                let src = tensor(theory, &srcs)?;
                let dst = tensor(theory, &dsts)?;
                let src_sizes: Vec<usize> = srcs.iter().map(|f| f.size()).collect();
                let dst_sizes: Vec<usize> = dsts.iter().map(|f| f.size()).collect();
                let total = src.size();
                let mut flat = Vec::with_capacity(total);
                for n in 0..total {
                    let digits = to_digits(n, &src_sizes);
                    let image: Vec<usize> = digits
                        .iter()
                        .zip(maps)
                        .map(|(&d, m)| {
                            let FiberMap::Func { map, .. } = m else { unreachable!() };
                            map[d]
                        })
                        .collect();
                    flat.push(from_digits(&image, &dst_sizes));
                }
                FiberMap::func(&src, &dst, flat)
            }
        }
    }

    /// Entrywise comparison; exact.
    pub fn equal(&self, other: &FiberMap) -> bool {
        self == other
    }
}

/// An invertible fiber morphism; invertibility is checked at construction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Iso(FiberMap);

impl Iso {
    pub fn new(map: FiberMap) -> Result<Self, FiberError> {
        if !map.is_iso() {
            return Err(FiberError::NotInvertible);
        }
        Ok(Iso(map))
    }

    pub fn as_map(&self) -> &FiberMap {
        &self.0
    }

    pub fn into_map(self) -> FiberMap {
        self.0
    }

    pub fn identity(fiber: &Fiber) -> Self {
        Iso(FiberMap::identity(fiber))
    }

    pub fn theory(&self) -> FiberTheory {
        self.0.theory()
    }

    pub fn domain(&self) -> Fiber {
        self.0.domain()
    }

    pub fn codomain(&self) -> Fiber {
        self.0.codomain()
    }

    pub fn is_identity(&self) -> bool {
        self.0.is_identity()
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &Iso) -> Result<Iso, FiberError> {
        Ok(Iso(self.0.compose(&other.0)?))
    }

    pub fn invert(&self) -> Iso {
        match &self.0 {
            FiberMap::Func { src, dst, map } => {
                let mut inv = vec![0usize; src.len()];
                for (i, &v) in map.iter().enumerate() {
                    inv[v] = i;
                }
                Iso(FiberMap::Func { src: dst.clone(), dst: src.clone(), map: inv })
            }
            FiberMap::Linear(m) => {
                Iso(FiberMap::Linear(m.inverse().expect("checked invertible at construction")))
            }
        }
    }

    pub fn tensor(theory: FiberTheory, isos: &[Iso]) -> Result<Iso, FiberError> {
        let maps: Vec<FiberMap> = isos.iter().map(|i| i.0.clone()).collect();
        Ok(Iso(FiberMap::tensor(theory, &maps)?))
    }

    /// The canonical isomorphism reordering the factors of a tensor product.
    /// `perm[t]` names the source factor that lands in target slot `t`;
    /// the map sends the basis tuple `(e_{i_0},…)` to the tuple with the same
    /// components in permuted slots.
    pub fn reorder(theory: FiberTheory, fibers: &[Fiber], perm: &[usize]) -> Result<Iso, FiberError> {
        if perm.len() != fibers.len() {
            return Err(FiberError::ShapeMismatch("permutation length".into()));
        }
        let mut seen = vec![false; fibers.len()];
        for &p in perm {
            if p >= fibers.len() || std::mem::replace(&mut seen[p], true) {
                return Err(FiberError::ShapeMismatch("not a permutation".into()));
            }
        }
        let src = tensor(theory, fibers)?;
        let permuted: Vec<Fiber> = perm.iter().map(|&p| fibers[p].clone()).collect();
        let dst = tensor(theory, &permuted)?;
        let src_sizes: Vec<usize> = fibers.iter().map(|f| f.size()).collect();
        let dst_sizes: Vec<usize> = permuted.iter().map(|f| f.size()).collect();
        let total = src.size();
        let mut flat = vec![0usize; total];
        for n in 0..total {
            let digits = to_digits(n, &src_sizes);
            let image: Vec<usize> = perm.iter().map(|&p| digits[p]).collect();
            flat[n] = from_digits(&image, &dst_sizes);
        }
        match theory {
            FiberTheory::FiniteBijection => Iso::new(FiberMap::func(&src, &dst, flat)?),
            FiberTheory::RationalVector => {
                // column n of the matrix is e_{flat[n]}
                let mut perm_rows = vec![0usize; total];
                for (n, &m) in flat.iter().enumerate() {
                    perm_rows[m] = n;
                }
                Ok(Iso(FiberMap::Linear(Matrix::permutation(&perm_rows))))
            }
        }
    }

    /// Scales a linear isomorphism by a nonzero rational; identity on set
    /// fibers is not scalable and is returned unchanged.
    pub fn scale(&self, s: &Rat) -> Iso {
        match &self.0 {
            FiberMap::Linear(m) if !num_traits::Zero::is_zero(s) => Iso(FiberMap::Linear(m.scale(s))),
            _ => self.clone(),
        }
    }
}

pub(crate) fn to_digits(mut n: usize, sizes: &[usize]) -> Vec<usize> {
    let mut digits = vec![0usize; sizes.len()];
    for (i, &s) in sizes.iter().enumerate().rev() {
        if s == 0 {
            continue;
        }
        digits[i] = n % s;
        n /= s;
    }
    digits
}

pub(crate) fn from_digits(digits: &[usize], sizes: &[usize]) -> usize {
    let mut n = 0usize;
    for (d, s) in digits.iter().zip(sizes) {
        n = n * s + d;
    }
    n
}

/// A nonzero scalar as a 1x1-style scaling of an identity, used by the
/// mutation utilities.
pub fn scalar_automorphism(fiber: &Fiber, s: &Rat) -> Iso {
    match fiber {
        Fiber::Vect(d) => Iso(FiberMap::Linear(Matrix::identity(*d).scale(s))),
        Fiber::Set(e) => {
            // nearest analogue: swap the first two elements when possible
            let n = e.len();
            let mut map: Vec<usize> = (0..n).collect();
            if n >= 2 && !s.is_one() {
                map.swap(0, 1);
            }
            Iso(FiberMap::Func { src: e.clone(), dst: e.clone(), map })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(d: usize) -> Fiber {
        Fiber::vect(d)
    }

    fn rat(n: i64) -> Rat {
        Rat::from_integer(n.into())
    }

    #[test]
    fn tensor_dims_and_unit() {
        let t = tensor(FiberTheory::RationalVector, &[v(2), v(3)]).unwrap();
        assert_eq!(t.size(), 6);
        let unit = tensor(FiberTheory::RationalVector, &[]).unwrap();
        assert_eq!(unit, Fiber::Vect(1));
        let one = tensor(FiberTheory::RationalVector, &[v(5)]).unwrap();
        assert_eq!(one, v(5));
    }

    #[test]
    fn set_tensor_is_strictly_associative() {
        let a = Fiber::set_of(&["a1", "a2"]).unwrap();
        let b = Fiber::set_of(&["b"]).unwrap();
        let c = Fiber::set_of(&["c1", "c2"]).unwrap();
        let th = FiberTheory::FiniteBijection;
        let ab = tensor(th, &[a.clone(), b.clone()]).unwrap();
        let left = tensor(th, &[ab, c.clone()]).unwrap();
        let flat = tensor(th, &[a.clone(), b.clone(), c.clone()]).unwrap();
        let bc = tensor(th, &[b, c]).unwrap();
        let right = tensor(th, &[a, bc]).unwrap();
        assert_eq!(left, flat);
        assert_eq!(right, flat);
    }

    #[test]
    fn mixed_theories_rejected() {
        let a = Fiber::set_of(&["a"]).unwrap();
        assert_eq!(tensor(FiberTheory::RationalVector, &[a]), Err(FiberError::MixedTheories));
    }

    #[test]
    fn compose_and_invert() {
        let m = |rows: Vec<Vec<i64>>| {
            FiberMap::Linear(
                Matrix::from_rows(
                    rows.into_iter().map(|r| r.into_iter().map(rat).collect()).collect(),
                )
                .unwrap(),
            )
        };
        let f = Iso::new(m(vec![vec![1, 1], vec![0, 1]])).unwrap();
        let g = Iso::new(m(vec![vec![1, 0], vec![1, 1]])).unwrap();
        let fg = f.compose(&g).unwrap();
        assert_eq!(fg.as_map(), &m(vec![vec![2, 1], vec![1, 1]]));
        assert!(f.compose(&f.invert()).unwrap().is_identity());
        // inverse of a composition
        let lhs = fg.invert();
        let rhs = g.invert().compose(&f.invert()).unwrap();
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn non_invertible_rejected() {
        let zero = FiberMap::Linear(Matrix::from_fn(2, 2, |_, _| rat(0)));
        assert!(Iso::new(zero).is_err());
        let s = Fiber::set_of(&["a", "b"]).unwrap();
        let constant = FiberMap::func(&s, &s, vec![0, 0]).unwrap();
        assert!(Iso::new(constant).is_err());
    }

    #[test]
    fn bijection_composition_matches_permutations() {
        let s = Fiber::set_of(&["a", "b", "c"]).unwrap();
        let f = Iso::new(FiberMap::func(&s, &s, vec![1, 2, 0]).unwrap()).unwrap();
        let g = Iso::new(FiberMap::func(&s, &s, vec![0, 2, 1]).unwrap()).unwrap();
        // f ∘ g: apply g first
        let fg = f.compose(&g).unwrap();
        let FiberMap::Func { map, .. } = fg.as_map() else { panic!() };
        // g: 0->0,1->2,2->1 then f: 0->1,1->2,2->0 gives 0->1, 1->0, 2->2
        assert_eq!(map, &vec![1, 0, 2]);
    }

    #[test]
    fn tensor_map_agrees_with_pointwise_action() {
        let a = Matrix::from_rows(vec![vec![rat(1), rat(2)], vec![rat(3), rat(4)]]).unwrap();
        let b = Matrix::from_rows(vec![vec![rat(5), rat(6)], vec![rat(7), rat(8)]]).unwrap();
        let t = FiberMap::tensor(
            FiberTheory::RationalVector,
            &[FiberMap::Linear(a.clone()), FiberMap::Linear(b.clone())],
        )
        .unwrap();
        let FiberMap::Linear(t) = t else { panic!() };
        for i in 0..2 {
            for j in 0..2 {
                for r1 in 0..2 {
                    for r2 in 0..2 {
                        assert_eq!(
                            *t.at(r1 * 2 + r2, i * 2 + j),
                            a.at(r1, i).clone() * b.at(r2, j).clone()
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn tensor_functorial() {
        // (f∘f') ⊗ (g∘g') = (f⊗g) ∘ (f'⊗g')
        let th = FiberTheory::FiniteBijection;
        let s = Fiber::set_of(&["a", "b"]).unwrap();
        let perms: Vec<Vec<usize>> = vec![vec![0, 1], vec![1, 0]];
        for p1 in &perms {
            for p2 in &perms {
                for q1 in &perms {
                    for q2 in &perms {
                        let f = Iso::new(FiberMap::func(&s, &s, p1.clone()).unwrap()).unwrap();
                        let fp = Iso::new(FiberMap::func(&s, &s, p2.clone()).unwrap()).unwrap();
                        let g = Iso::new(FiberMap::func(&s, &s, q1.clone()).unwrap()).unwrap();
                        let gp = Iso::new(FiberMap::func(&s, &s, q2.clone()).unwrap()).unwrap();
                        let lhs = Iso::tensor(
                            th,
                            &[f.compose(&fp).unwrap(), g.compose(&gp).unwrap()],
                        )
                        .unwrap();
                        let rhs = Iso::tensor(th, &[f, g])
                            .unwrap()
                            .compose(&Iso::tensor(th, &[fp, gp]).unwrap())
                            .unwrap();
                        assert_eq!(lhs, rhs);
                    }
                }
            }
        }
    }

    #[test]
    fn reorder_tracks_components() {
        let th = FiberTheory::FiniteBijection;
        let a = Fiber::set_of(&["a1", "a2"]).unwrap();
        let b = Fiber::set_of(&["b1", "b2", "b3"]).unwrap();
        let r = Iso::reorder(th, &[a.clone(), b.clone()], &[1, 0]).unwrap();
        let FiberMap::Func { src, dst, map } = r.as_map() else { panic!() };
        // (a_i, b_j) ↦ (b_j, a_i)
        for (n, elem) in src.iter().enumerate() {
            let image = &dst[map[n]];
            assert_eq!(image.0[0], elem.0[1]);
            assert_eq!(image.0[1], elem.0[0]);
        }
        // reorder isos compose like permutations
        let r2 = Iso::reorder(th, &[b, a], &[1, 0]).unwrap();
        assert!(r2.compose(&r).unwrap().is_identity());
    }

    #[test]
    fn reorder_identity_perm_is_identity() {
        let th = FiberTheory::RationalVector;
        let r = Iso::reorder(th, &[v(2), v(3)], &[0, 1]).unwrap();
        assert!(r.is_identity());
    }

    #[test]
    fn reorder_composition_functorial_vect() {
        // three distinct dims so slot tracking is visible
        let th = FiberTheory::RationalVector;
        let fibers = [v(2), v(3), v(4)];
        // cycle twice = cycle squared
        let c = [1usize, 2, 0];
        let r1 = Iso::reorder(th, &fibers, &c).unwrap();
        let permuted: Vec<Fiber> = c.iter().map(|&p| fibers[p].clone()).collect();
        let r2 = Iso::reorder(th, &permuted, &c).unwrap();
        let c2 = [2usize, 0, 1];
        let direct = Iso::reorder(th, &fibers, &c2).unwrap();
        assert_eq!(r2.compose(&r1).unwrap(), direct);
    }
}
