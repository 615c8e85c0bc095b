//! Law-checker suite: the commutative example satisfies every strict law,
//! forgetting preserves validity, and single-datum damage is detected.

use fact_engine::fiber::{Fiber, FiberTheory, Iso};
use fact_engine::mutate::{nontrivial_automorphism, twist_weak};
use fact_engine::report::Law;
use fact_engine::structure::{
    agree_on_common_locus, check_strict, check_strict_morphism, check_weak, check_weak_morphism,
    transport_strict, weak_forget, LociChoice, StrictMorphism, WeakMorphism,
};
use fact_engine::universal::{commutative_strict, support_size_oracle};
use fact_engine::variety::{EtaleMap, Variety};

fn vect(dim: usize) -> Fiber {
    Fiber::vect(dim)
}

fn set_obj(k: usize) -> Fiber {
    let labels: Vec<String> = (1..=k).map(|i| format!("v{i}")).collect();
    let refs: Vec<&str> = labels.iter().map(String::as_str).collect();
    Fiber::set_of(&refs).unwrap()
}

#[test]
fn commutative_passes_check_strict_small() {
    for size in 1..=3 {
        let v = Variety::with_size(size);
        for dim in 1..=2 {
            let s = commutative_strict(&v, &vect(dim), 3);
            let rep = check_strict(&s);
            assert!(rep.is_empty(), "size {size} dim {dim}:\n{}", rep.render(Some(&v)));
        }
    }
}

#[test]
fn commutative_passes_check_strict_set_theory() {
    let v = Variety::with_size(2);
    let s = commutative_strict(&v, &set_obj(2), 3);
    let rep = check_strict(&s);
    assert!(rep.is_empty(), "{}", rep.render(Some(&v)));
}

#[test]
fn commutative_fiber_sizes_match_support_oracle() {
    let v = Variety::with_size(3);
    let s = commutative_strict(&v, &vect(2), 3);
    for (x, f) in &s.fibers {
        assert_eq!(f.size(), support_size_oracle(2, x));
    }
}

#[test]
fn single_point_variety_passes_trivially() {
    let v = Variety::with_size(1);
    let s = commutative_strict(&v, &vect(3), 4);
    // every disjointness locus of a partition with two or more blocks is
    // empty, so only transport laws are exercised
    assert!(check_strict(&s).is_empty());
}

#[test]
fn weak_forget_full_and_diagonal_are_valid() {
    let v = Variety::with_size(2);
    let s = commutative_strict(&v, &vect(2), 3);
    for choice in [LociChoice::Full, LociChoice::Diagonal] {
        let z = weak_forget(&s, &choice).unwrap();
        let rep = check_weak(&z);
        assert!(rep.is_empty(), "{:?}:\n{}", choice, rep.render(Some(&v)));
    }
}

#[test]
fn weak_forget_diagonal_restricts_to_arity_one_everywhere() {
    let v = Variety::with_size(3);
    let s = commutative_strict(&v, &vect(2), 2);
    let z = weak_forget(&s, &LociChoice::Diagonal).unwrap();
    for x in v.tuples(1) {
        assert_eq!(z.fiber(&x), s.fiber(&x));
    }
}

#[test]
fn corrupted_d_entry_is_reported_with_its_point() {
    let v = Variety::with_size(2);
    let mut s = commutative_strict(&v, &vect(2), 3);
    // damage one decomposition at an off-diagonal pair
    let key = s
        .d
        .keys()
        .find(|(a, x)| a.target_arity() == 2 && x.len() == 2 && x[0] != x[1])
        .cloned()
        .unwrap();
    let iso = s.d[&key].clone();
    let twist = nontrivial_automorphism(&iso.codomain()).unwrap();
    s.d.insert(key.clone(), twist.compose(&iso).unwrap());
    let rep = check_strict(&s);
    assert!(!rep.is_empty());
    assert!(
        rep.violations().iter().any(|viol| viol.point.as_ref() == Some(&key.1)),
        "no violation names the damaged point:\n{}",
        rep.render(Some(&v))
    );
}

#[test]
fn corrupted_nu_entry_is_reported() {
    let v = Variety::with_size(2);
    let mut s = commutative_strict(&v, &vect(2), 2);
    let key = s.nu.keys().find(|(a, _)| !a.is_bijection()).cloned().unwrap();
    let iso = s.nu[&key].clone();
    let twist = nontrivial_automorphism(&iso.codomain()).unwrap();
    s.nu.insert(key, twist.compose(&iso).unwrap());
    let rep = check_strict(&s);
    assert!(rep
        .violations()
        .iter()
        .any(|v| matches!(v.law, Law::RanAssociativity | Law::MixedCompatibility)));
}

#[test]
fn missing_fiber_and_shape_mismatch_are_reported() {
    let v = Variety::with_size(2);
    let mut s = commutative_strict(&v, &vect(2), 2);
    s.fibers.remove(&vec![0, 1]);
    let rep = check_strict(&s);
    assert!(rep.violations().iter().any(|viol| viol.law == Law::MissingDatum));

    let mut s2 = commutative_strict(&v, &vect(2), 2);
    let key = s2.nu.keys().next().cloned().unwrap();
    // replace with an identity of the wrong shape
    s2.nu.insert(key, Iso::identity(&vect(5)));
    let rep2 = check_strict(&s2);
    assert!(rep2.violations().iter().any(|viol| viol.law == Law::Shape));
}

#[test]
fn check_strict_invariant_under_relabeling() {
    let v = Variety::with_size(3);
    let w = Variety::new(vec!["a".into(), "b".into(), "c".into()]).unwrap();
    // swap two labels through a bijection
    let relabel = EtaleMap::new(v.clone(), w.clone(), vec![2, 0, 1]).unwrap();
    let s = commutative_strict(&v, &vect(2), 3);
    let t = transport_strict(&s, &relabel).unwrap();
    assert!(check_strict(&t).is_empty());

    // and a damaged structure stays damaged, at the transported point
    let mut broken = s.clone();
    let key = broken
        .d
        .keys()
        .find(|(a, x)| a.target_arity() == 2 && x.len() == 2 && x[0] != x[1])
        .cloned()
        .unwrap();
    let iso = broken.d[&key].clone();
    broken.d.insert(key.clone(), nontrivial_automorphism(&iso.codomain()).unwrap().compose(&iso).unwrap());
    let broken_t = transport_strict(&broken, &relabel).unwrap();
    let rep = check_strict(&broken_t);
    let moved = relabel.apply_tuple(&key.1);
    assert!(rep.violations().iter().any(|viol| viol.point.as_ref() == Some(&moved)));
}

#[test]
fn weak_twist_preserves_validity() {
    let v = Variety::with_size(2);
    let s = commutative_strict(&v, &vect(2), 3);
    let z = weak_forget(&s, &LociChoice::Full).unwrap();
    for seed in 0..5 {
        let t = twist_weak(&z, seed);
        let rep = check_weak(&t);
        assert!(rep.is_empty(), "seed {seed}:\n{}", rep.render(Some(&v)));
        if seed > 0 {
            assert_ne!(t, z, "twist should change the data");
        }
    }
}

#[test]
fn identity_morphism_passes_and_scaled_component_fails() {
    let v = Variety::with_size(2);
    let s = commutative_strict(&v, &vect(2), 2);
    let id = StrictMorphism::identity(&s);
    assert!(check_strict_morphism(&id).is_empty());
    assert!(id.is_pointwise_iso());

    let mut bad = id.clone();
    let x = vec![0usize, 1];
    let f = bad.maps[&x].clone();
    let two = fact_engine::Rat::from_integer(2.into());
    let fiber_map = match f {
        fact_engine::fiber::FiberMap::Linear(m) => fact_engine::fiber::FiberMap::Linear(m.scale(&two)),
        other => other,
    };
    bad.maps.insert(x.clone(), fiber_map);
    let rep = check_strict_morphism(&bad);
    assert!(rep.violations().iter().any(|viol| viol.point.as_ref() == Some(&x)));
}

#[test]
fn weak_morphism_identity_and_agreement() {
    let v = Variety::with_size(2);
    let s = commutative_strict(&v, &vect(2), 2);
    let z = weak_forget(&s, &LociChoice::Full).unwrap();
    let id = WeakMorphism::identity(&z);
    assert!(check_weak_morphism(&id).is_empty());
    assert!(agree_on_common_locus(&id, &id));

    // a scalar endomorphism: doubles every component, still compatible
    let two = fact_engine::Rat::from_integer(2.into());
    let mut scaled = id.clone();
    for (_, f) in scaled.maps.iter_mut() {
        if let fact_engine::fiber::FiberMap::Linear(m) = f {
            *f = fact_engine::fiber::FiberMap::Linear(m.scale(&two));
        }
    }
    assert!(check_weak_morphism(&scaled).is_empty());
    assert!(!agree_on_common_locus(&id, &scaled));
}
