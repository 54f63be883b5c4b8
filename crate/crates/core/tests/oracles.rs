mod common;

use liestab::fingroup::{are_isomorphic, FiniteGroup, DEFAULT_CAP};
use liestab::liespace::AmbientSpace;
use liestab::matcore::{rand_skew_hermitian, Mat};
use liestab::morphism::{defect, perturb, standard_representation};
use liestab::proximity::hausdorff;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn catalog() -> Vec<&'static str> {
    vec![
        "trivial",
        "cyclic:2",
        "cyclic:6",
        "cyclic:12",
        "dihedral:3",
        "dihedral:4",
        "dihedral:6",
        "quaternion8",
        "symmetric:3",
        "symmetric:4",
        "product:cyclic:2,cyclic:2",
        "product:cyclic:2,quaternion8",
    ]
}

#[test]
fn subgroup_lists_agree_with_join_closure() {
    for spec in catalog() {
        let g = FiniteGroup::from_spec(spec, DEFAULT_CAP).unwrap();
        let mut ours: Vec<Vec<usize>> = g.all_subgroups(DEFAULT_CAP).unwrap().into_iter().map(|s| s.members).collect();
        let mut theirs: Vec<Vec<usize>> =
            common::subgroups_by_joins(&g).into_iter().map(|s| s.into_iter().collect()).collect();
        ours.sort();
        theirs.sort();
        assert_eq!(ours, theirs, "{spec}");
    }
}

#[test]
fn jordan_constants_agree_with_double_loop() {
    for spec in catalog() {
        let g = FiniteGroup::from_spec(spec, DEFAULT_CAP).unwrap();
        assert_eq!(g.jordan_constant(DEFAULT_CAP).unwrap(), common::jordan_oracle(&g), "{spec}");
    }
}

#[test]
fn isomorphism_agrees_with_search() {
    let groups: Vec<FiniteGroup> = ["cyclic:8", "dihedral:4", "quaternion8", "product:cyclic:2,cyclic:4", "symmetric:3", "cyclic:6"]
        .iter()
        .map(|s| FiniteGroup::from_spec(s, DEFAULT_CAP).unwrap())
        .collect();
    for a in &groups {
        for b in &groups {
            assert_eq!(are_isomorphic(a, b), common::isomorphic_by_search(a, b), "{:?} {:?}", a.label(), b.label());
        }
    }
}

#[test]
fn defect_agrees_with_direct_double_loop() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for spec in ["cyclic:5", "dihedral:4", "quaternion8", "symmetric:3"] {
        let rho = standard_representation(spec).unwrap();
        let f = perturb(&rho, 1e-3, &mut rng).unwrap();
        let g = f.domain();
        let mut oracle = 0.0f64;
        for s in 0..g.order() {
            for t in 0..g.order() {
                let gap = f.value(g.mul(s, t)) - &(f.value(s) * f.value(t));
                oracle = oracle.max(common::opnorm_oracle(&gap));
            }
        }
        let ours = defect(&f);
        assert!((ours - oracle).abs() <= 1e-12, "{spec}: {ours} vs {oracle}");
        assert!(ours > 0.0 && ours <= 4e-3);
    }
}

#[test]
fn hausdorff_agrees_with_brute_force() {
    let space = AmbientSpace::unitary(2);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for k in 1..20 {
        let a: Vec<Mat> = (0..k % 5 + 1).map(|_| rand_skew_hermitian(2, 1.0, &mut rng).exp().unwrap()).collect();
        let b: Vec<Mat> = (0..k % 7 + 1).map(|_| rand_skew_hermitian(2, 1.0, &mut rng).exp().unwrap()).collect();
        assert_eq!(hausdorff(&space, &a, &b).unwrap(), common::hausdorff_oracle(&space, &a, &b));
    }
}

#[test]
fn opnorm_agrees_with_gram_eigenvalues() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for _ in 0..50 {
        let m = &rand_skew_hermitian(3, 1.3, &mut rng) + &Mat::identity(3).scale(0.4);
        assert!((m.opnorm() - common::opnorm_oracle(&m)).abs() <= 1e-12);
    }
}
