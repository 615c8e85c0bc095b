//! Seeded twisting and corruption of structures, used by the invariant
//! suites. Twisting conjugates every isomorphism by per-point automorphisms
//! and preserves validity; corruption damages a single datum and must be
//! caught by at least one checker.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::fiber::{Fiber, FiberMap, Iso};
use crate::matrix::Matrix;
use crate::report::Violation;
use crate::structure::WeakStructure;
use crate::surjection::Surjection;
use crate::universal::UniversalFamily;
use crate::variety::{diagonal_embed, restrict_config, Config};
use crate::Rat;

/// Base seed for the seeded suites, overridable through the environment.
pub fn base_seed() -> u64 {
    std::env::var("FACT_ENGINE_SEED")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(0xFAC7_0001)
}

fn rat(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

/// A random automorphism of a fiber: an invertible matrix with small
/// rational entries, or a random permutation of a set.
pub fn random_automorphism(fiber: &Fiber, rng: &mut ChaCha8Rng) -> Iso {
    match fiber {
        Fiber::Vect(d) => {
            let n = *d;
            if n == 0 {
                return Iso::identity(fiber);
            }
            // L * D * U with unit triangles and nonzero diagonal
            let lower = Matrix::from_fn(n, n, |r, c| {
                if r == c {
                    rat(1)
                } else if r > c {
                    rat(rng.gen_range(-1..=1))
                } else {
                    rat(0)
                }
            });
            let upper = Matrix::from_fn(n, n, |r, c| {
                if r == c {
                    rat(1)
                } else if r < c {
                    rat(rng.gen_range(-1..=1))
                } else {
                    rat(0)
                }
            });
            let diag_entries: Vec<i64> =
                (0..n).map(|_| *[1, 2, 3, -1, -2].get(rng.gen_range(0..5)).unwrap()).collect();
            let diag = Matrix::from_fn(n, n, |r, c| if r == c { rat(diag_entries[r]) } else { rat(0) });
            let m = lower.mul(&diag).unwrap().mul(&upper).unwrap();
            Iso::new(FiberMap::Linear(m)).expect("product of invertibles")
        }
        Fiber::Set(elems) => {
            let n = elems.len();
            let mut perm: Vec<usize> = (0..n).collect();
            for i in (1..n).rev() {
                perm.swap(i, rng.gen_range(0..=i));
            }
            Iso::new(FiberMap::Func { src: elems.clone(), dst: elems.clone(), map: perm })
                .expect("permutation")
        }
    }
}

/// A fixed non-identity automorphism when one exists: doubling for vector
/// fibers, a transposition for sets of size at least two.
pub fn nontrivial_automorphism(fiber: &Fiber) -> Option<Iso> {
    match fiber {
        Fiber::Vect(d) if *d >= 1 => Some(Iso::identity(fiber).scale(&rat(2))),
        Fiber::Set(elems) if elems.len() >= 2 => {
            let mut map: Vec<usize> = (0..elems.len()).collect();
            map.swap(0, 1);
            Some(
                Iso::new(FiberMap::Func { src: elems.clone(), dst: elems.clone(), map })
                    .expect("transposition"),
            )
        }
        _ => None,
    }
}

/// Conjugates all transport and decomposition data of a weak structure by
/// seeded per-point automorphisms. The result is a different but equally
/// valid structure with the same fibers and loci.
pub fn twist_weak(z: &WeakStructure, seed: u64) -> WeakStructure {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let twist: BTreeMap<Config, Iso> = z
        .fibers
        .iter()
        .map(|(x, f)| (x.clone(), random_automorphism(f, &mut rng)))
        .collect();

    let mut out = z.clone();
    for ((alpha, p), iso) in out.nu.iter_mut() {
        let embedded = diagonal_embed(alpha, p).expect("arity");
        *iso = twist[&embedded]
            .compose(iso)
            .and_then(|i| i.compose(&twist[p].invert()))
            .expect("conjugation shapes match");
    }
    for ((alpha, x), iso) in out.d.iter_mut() {
        let parts: Vec<Iso> = alpha
            .blocks()
            .iter()
            .map(|bl| twist[&restrict_config(x, bl)].clone())
            .collect();
        let blocks_twist = Iso::tensor(z.theory, &parts).expect("one theory");
        *iso = twist[x]
            .compose(iso)
            .and_then(|i| i.compose(&blocks_twist.invert()))
            .expect("conjugation shapes match");
    }
    out
}

/// Where a corruption was applied.
#[derive(Clone, Debug)]
pub struct CorruptionSite {
    pub description: String,
    pub surjection: Option<Surjection>,
    pub point: Config,
}

/// Damages one transport or decomposition entry of a weak structure,
/// chosen by seed among the entries admitting a non-identity automorphism.
/// Returns the damaged structure and the site.
pub fn corrupt_weak(z: &WeakStructure, seed: u64) -> Option<(WeakStructure, CorruptionSite)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut candidates: Vec<(bool, Surjection, Config)> = Vec::new();
    for (alpha, p) in z.nu.keys() {
        candidates.push((true, alpha.clone(), p.clone()));
    }
    for (alpha, x) in z.d.keys() {
        candidates.push((false, alpha.clone(), x.clone()));
    }
    if candidates.is_empty() {
        return None;
    }
    // rotate through candidates until one admits a nontrivial twist
    let start = rng.gen_range(0..candidates.len());
    for k in 0..candidates.len() {
        let (is_nu, alpha, point) = candidates[(start + k) % candidates.len()].clone();
        let iso = if is_nu { z.nu_at(&alpha, &point) } else { z.d_at(&alpha, &point) }.unwrap();
        let Some(s) = nontrivial_automorphism(&iso.codomain()) else { continue };
        let damaged = s.compose(iso).expect("automorphism of the codomain");
        let mut out = z.clone();
        let key = (alpha.clone(), point.clone());
        if is_nu {
            out.nu.insert(key, damaged);
        } else {
            out.d.insert(key, damaged);
        }
        let description = if is_nu { "nu entry" } else { "d entry" }.to_string();
        return Some((out, CorruptionSite { description, surjection: Some(alpha), point }));
    }
    None
}

/// Damages one comparison component of a universal family.
pub fn corrupt_family(f: &UniversalFamily, seed: u64) -> Option<(UniversalFamily, usize, CorruptionSite)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let with_entries: Vec<usize> =
        (0..f.comparisons.len()).filter(|&i| !f.comparisons[i].is_empty()).collect();
    if with_entries.is_empty() {
        return None;
    }
    let start = rng.gen_range(0..with_entries.len());
    for k in 0..with_entries.len() {
        let mi = with_entries[(start + k) % with_entries.len()];
        let keys: Vec<Config> = f.comparisons[mi].keys().cloned().collect();
        let x = keys[rng.gen_range(0..keys.len())].clone();
        let iso = &f.comparisons[mi][&x];
        let Some(s) = nontrivial_automorphism(&iso.codomain()) else { continue };
        let damaged = s.compose(iso).expect("automorphism of the codomain");
        let mut out = f.clone();
        out.comparisons[mi].insert(x.clone(), damaged);
        let site = CorruptionSite {
            description: format!("comparison of catalog map {mi}"),
            surjection: None,
            point: x,
        };
        return Some((out, mi, site));
    }
    None
}

/// Whether a violation names the corrupted point or a law instance passing
/// through it: the exact point, a block restriction in either direction, or
/// a diagonal image along one of the violation's surjections.
pub fn violation_mentions(v: &Violation, site: &Config) -> bool {
    let Some(vp) = &v.point else { return false };
    if vp == site || is_subsequence(site, vp) || is_subsequence(vp, site) {
        return true;
    }
    for s in &v.surjections {
        if s.target_arity() == site.len() {
            if let Ok(e) = diagonal_embed(s, site) {
                if &e == vp || is_subsequence(&e, vp) || is_subsequence(vp, &e) {
                    return true;
                }
            }
        }
        if s.target_arity() == vp.len() {
            if let Ok(e) = diagonal_embed(s, vp) {
                if &e == site || is_subsequence(&e, site) || is_subsequence(site, &e) {
                    return true;
                }
            }
        }
    }
    false
}

/// Restrictions take ascending coordinate positions, so "obtainable by
/// restriction" is exactly the subsequence relation.
fn is_subsequence(needle: &Config, hay: &Config) -> bool {
    let mut it = hay.iter();
    needle.iter().all(|n| it.any(|h| h == n))
}
