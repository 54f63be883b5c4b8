//! Independent reimplementations used as oracles by the integration tests.
//! None of these call into the library's subgroup, Jordan, isomorphism or
//! Hausdorff code.

#![allow(dead_code)]

use std::collections::BTreeSet;

use liestab::fingroup::FiniteGroup;
use liestab::liespace::AmbientSpace;
use liestab::matcore::Mat;

fn closure(g: &FiniteGroup, seed: &BTreeSet<usize>) -> BTreeSet<usize> {
    let mut set = seed.clone();
    set.insert(0);
    loop {
        let mut grown = set.clone();
        for &a in &set {
            for &b in &set {
                grown.insert(g.mul(a, b));
            }
        }
        if grown.len() == set.len() {
            return set;
        }
        set = grown;
    }
}

/// Every subgroup, built by closing the cyclic subgroups under pairwise
/// joins until nothing new appears.
pub fn subgroups_by_joins(g: &FiniteGroup) -> Vec<BTreeSet<usize>> {
    let mut found: BTreeSet<BTreeSet<usize>> = (0..g.order()).map(|x| closure(g, &BTreeSet::from([x]))).collect();
    loop {
        let current: Vec<_> = found.iter().cloned().collect();
        let mut added = false;
        for a in &current {
            for b in &current {
                let joined = closure(g, &a.union(b).copied().collect());
                added |= found.insert(joined);
            }
        }
        if !added {
            return found.into_iter().collect();
        }
    }
}

fn commutes_pairwise(g: &FiniteGroup, a: &BTreeSet<usize>) -> bool {
    a.iter().all(|&x| a.iter().all(|&y| g.mul(x, y) == g.mul(y, x)))
}

fn normal_in(g: &FiniteGroup, a: &BTreeSet<usize>, h: &BTreeSet<usize>) -> bool {
    let inverse = |x: usize| (0..g.order()).find(|&y| g.mul(x, y) == 0).unwrap();
    h.iter().all(|&x| a.iter().all(|&y| a.contains(&g.mul(g.mul(x, y), inverse(x)))))
}

/// `max_H min_{A ⊴ H abelian} |H|/|A|` by a double loop over the subgroup list.
pub fn jordan_oracle(g: &FiniteGroup) -> usize {
    let subs = subgroups_by_joins(g);
    let mut best = 1;
    for h in &subs {
        let mut min_index = h.len();
        for a in &subs {
            if a.is_subset(h) && commutes_pairwise(g, a) && normal_in(g, a, h) {
                min_index = min_index.min(h.len() / a.len());
            }
        }
        best = best.max(min_index);
    }
    best
}

fn orders(g: &FiniteGroup) -> Vec<usize> {
    (0..g.order())
        .map(|x| {
            let mut y = x;
            let mut k = 1;
            while y != 0 {
                y = g.mul(y, x);
                k += 1;
            }
            k
        })
        .collect()
}

/// Backtracking search over all bijections fixing the identity.
pub fn isomorphic_by_search(a: &FiniteGroup, b: &FiniteGroup) -> bool {
    if a.order() != b.order() {
        return false;
    }
    let n = a.order();
    let (oa, ob) = (orders(a), orders(b));
    let mut image = vec![usize::MAX; n];
    let mut used = vec![false; n];
    image[0] = 0;
    used[0] = true;

    fn consistent(a: &FiniteGroup, b: &FiniteGroup, image: &[usize], x: usize) -> bool {
        (0..image.len()).filter(|&y| image[y] != usize::MAX).all(|y| {
            [(x, y), (y, x)].iter().all(|&(p, q)| {
                let pq = a.mul(p, q);
                image[pq] == usize::MAX || image[pq] == b.mul(image[p], image[q])
            })
        })
    }

    fn extend(
        a: &FiniteGroup,
        b: &FiniteGroup,
        oa: &[usize],
        ob: &[usize],
        image: &mut Vec<usize>,
        used: &mut Vec<bool>,
        x: usize,
    ) -> bool {
        if x == image.len() {
            return true;
        }
        for y in 0..image.len() {
            if used[y] || oa[x] != ob[y] {
                continue;
            }
            image[x] = y;
            used[y] = true;
            if consistent(a, b, image, x) && extend(a, b, oa, ob, image, used, x + 1) {
                return true;
            }
            image[x] = usize::MAX;
            used[y] = false;
        }
        false
    }

    extend(a, b, &oa, &ob, &mut image, &mut used, 1)
}

pub fn hausdorff_oracle(space: &AmbientSpace, a: &[Mat], b: &[Mat]) -> f64 {
    let one_sided = |x: &[Mat], y: &[Mat]| {
        let mut worst = 0.0f64;
        for p in x {
            let mut nearest = f64::INFINITY;
            for q in y {
                nearest = nearest.min(space.dist(p, q).unwrap());
            }
            worst = worst.max(nearest);
        }
        worst
    };
    one_sided(a, b).max(one_sided(b, a))
}

/// Largest singular value from the eigenvalues of `AᴴA`, independent of
/// the SVD used by the library.
pub fn opnorm_oracle(m: &Mat) -> f64 {
    let a = m.as_nalgebra();
    let gram = a.adjoint() * a;
    gram.symmetric_eigenvalues().iter().copied().fold(0.0f64, f64::max).max(0.0).sqrt()
}
