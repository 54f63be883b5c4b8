//! Finite groups presented by Cayley tables.
//!
//! Elements are dense indices `0..order` with `0` the identity. Each
//! constructor fixes a numbering convention, recorded in
//! [`FiniteGroup::label`]:
//!
//! * `cyclic:n` — index `k` is `r^k`.
//! * `dihedral:n` — order `2n`; index `f·n + k` is `s^f r^k` with
//!   `s r s = r⁻¹`.
//! * `quaternion8` — indices `0..8` are `1, −1, i, −i, j, −j, k, −k`.
//! * `symmetric:n` — permutations of `0..n` in lexicographic order of their
//!   images, composed as `(στ)(x) = σ(τ(x))`.
//! * `product:A,B` — index `a·|B| + b` is `(a, b)`.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Default exhaustion cap on group orders.
pub const DEFAULT_CAP: usize = 5040;
/// Orders up to this are checked for associativity exhaustively.
const FULL_ASSOCIATIVITY_LIMIT: usize = 256;
const SAMPLED_ASSOCIATIVITY_TRIPLES: usize = 200_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GroupError {
    #[error("group order {order} exceeds cap {cap}")]
    CapExceeded { order: usize, cap: usize },
    #[error("invalid group spec: {0}")]
    InvalidSpec(String),
    #[error("invalid Cayley table: {0}")]
    InvalidTable(String),
    #[error("subgroup is not normal")]
    NotNormal,
    #[error("member set is not a subgroup")]
    NotASubgroup,
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub(crate) struct BitSet(Vec<u64>);

impl BitSet {
    fn new(n: usize) -> Self {
        BitSet(vec![0; n.div_ceil(64)])
    }

    fn insert(&mut self, i: usize) -> bool {
        let (w, b) = (i / 64, 1u64 << (i % 64));
        let fresh = self.0[w] & b == 0;
        self.0[w] |= b;
        fresh
    }

    fn contains(&self, i: usize) -> bool {
        self.0[i / 64] & (1u64 << (i % 64)) != 0
    }

    fn is_subset(&self, other: &BitSet) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a & !b == 0)
    }

    fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().enumerate().flat_map(|(w, &word)| {
            (0..64).filter(move |b| word & (1u64 << b) != 0).map(move |b| w * 64 + b)
        })
    }
}

/// A finite group as a Cayley table. Index 0 is the identity.
#[derive(Clone, PartialEq, Eq)]
pub struct FiniteGroup {
    order: usize,
    table: Vec<usize>,
    inv: Vec<usize>,
    label: Option<String>,
}

impl fmt::Debug for FiniteGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FiniteGroup")
            .field("order", &self.order)
            .field("label", &self.label)
            .finish()
    }
}

/// A subgroup of a [`FiniteGroup`], as a sorted member list.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Subgroup {
    pub members: Vec<usize>,
    generators: Vec<usize>,
}

impl Subgroup {
    pub fn order(&self) -> usize {
        self.members.len()
    }

    pub fn contains(&self, g: usize) -> bool {
        self.members.binary_search(&g).is_ok()
    }

    pub fn generators(&self) -> &[usize] {
        &self.generators
    }

    pub fn is_trivial(&self) -> bool {
        self.members.len() == 1
    }
}

impl FiniteGroup {
    /// Validates a Cayley table: identity at index 0, Latin square rows and
    /// columns, associativity (exhaustive up to order 256, sampled above).
    pub fn from_table(table: Vec<Vec<usize>>) -> Result<Self, GroupError> {
        let order = table.len();
        if order == 0 {
            return Err(GroupError::InvalidTable("empty table".into()));
        }
        let mut flat = Vec::with_capacity(order * order);
        for (i, row) in table.iter().enumerate() {
            if row.len() != order {
                return Err(GroupError::InvalidTable(format!("row {i} has length {}", row.len())));
            }
            flat.extend_from_slice(row);
        }
        Self::from_flat(order, flat, None)
    }

    fn from_flat(order: usize, table: Vec<usize>, label: Option<String>) -> Result<Self, GroupError> {
        let bad = |msg: String| Err(GroupError::InvalidTable(msg));
        if table.iter().any(|&x| x >= order) {
            return bad("entry out of range".into());
        }
        for i in 0..order {
            if table[i] != i || table[i * order] != i {
                return bad("index 0 is not the identity".into());
            }
        }
        let mut seen = vec![usize::MAX; order];
        for i in 0..order {
            for j in 0..order {
                let x = table[i * order + j];
                if seen[x] == i {
                    return bad(format!("row {i} is not a permutation"));
                }
                seen[x] = i;
            }
        }
        seen.fill(usize::MAX);
        for j in 0..order {
            for i in 0..order {
                let x = table[i * order + j];
                if seen[x] == j {
                    return bad(format!("column {j} is not a permutation"));
                }
                seen[x] = j;
            }
        }
        let mut inv = vec![0; order];
        for g in 0..order {
            inv[g] = (0..order).find(|&h| table[g * order + h] == 0).unwrap();
        }
        let group = FiniteGroup { order, table, inv, label };
        if let Some((a, b, c)) = group.associativity_violation() {
            return bad(format!("associativity fails for ({a}, {b}, {c})"));
        }
        Ok(group)
    }

    fn associativity_violation(&self) -> Option<(usize, usize, usize)> {
        let n = self.order;
        let check = |a, b, c| self.mul(self.mul(a, b), c) != self.mul(a, self.mul(b, c));
        if n <= FULL_ASSOCIATIVITY_LIMIT {
            for a in 0..n {
                for b in 0..n {
                    for c in 0..n {
                        if check(a, b, c) {
                            return Some((a, b, c));
                        }
                    }
                }
            }
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(n as u64);
            for _ in 0..SAMPLED_ASSOCIATIVITY_TRIPLES {
                let (a, b, c) = (rng.random_range(0..n), rng.random_range(0..n), rng.random_range(0..n));
                if check(a, b, c) {
                    return Some((a, b, c));
                }
            }
        }
        None
    }

    fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    pub fn mul(&self, a: usize, b: usize) -> usize {
        self.table[a * self.order + b]
    }

    pub fn inv(&self, a: usize) -> usize {
        self.inv[a]
    }

    pub fn table_rows(&self) -> Vec<Vec<usize>> {
        self.table.chunks(self.order).map(|r| r.to_vec()).collect()
    }

    pub fn element_order(&self, g: usize) -> usize {
        let mut x = g;
        let mut k = 1;
        while x != 0 {
            x = self.mul(x, g);
            k += 1;
        }
        k
    }

    /// `g^k` for `k ≥ 0`.
    pub fn pow(&self, g: usize, k: usize) -> usize {
        (0..k).fold(0, |acc, _| self.mul(acc, g))
    }

    pub fn is_commutative(&self) -> bool {
        (0..self.order).all(|a| (0..a).all(|b| self.mul(a, b) == self.mul(b, a)))
    }

    // ---- constructors ----

    pub fn trivial() -> Self {
        Self::cyclic(1).expect("order 1")
    }

    pub fn cyclic(n: usize) -> Result<Self, GroupError> {
        if n == 0 {
            return Err(GroupError::InvalidSpec("cyclic order must be positive".into()));
        }
        let table = (0..n).flat_map(|a| (0..n).map(move |b| (a + b) % n)).collect();
        Ok(Self::from_flat(n, table, None)?.with_label(format!("cyclic:{n}")))
    }

    pub fn dihedral(n: usize) -> Result<Self, GroupError> {
        if n == 0 {
            return Err(GroupError::InvalidSpec("dihedral parameter must be positive".into()));
        }
        let order = 2 * n;
        let mut table = vec![0; order * order];
        for x in 0..order {
            for y in 0..order {
                let (f1, k1) = (x / n, x % n);
                let (f2, k2) = (y / n, y % n);
                // s^{f1} r^{k1} s^{f2} r^{k2} = s^{f1+f2} r^{±k1 + k2}
                let k1 = if f2 == 1 { (n - k1) % n } else { k1 };
                table[x * order + y] = ((f1 + f2) % 2) * n + (k1 + k2) % n;
            }
        }
        Ok(Self::from_flat(order, table, None)?.with_label(format!("dihedral:{n}")))
    }

    pub fn quaternion8() -> Self {
        // Unit quaternions (sign, unit) with unit ∈ {1, i, j, k}; index = 2·unit + sign.
        fn unit_mul(a: usize, b: usize) -> (usize, usize) {
            const T: [[(usize, usize); 4]; 4] = [
                [(0, 0), (0, 1), (0, 2), (0, 3)],
                [(0, 1), (1, 0), (0, 3), (1, 2)],
                [(0, 2), (1, 3), (1, 0), (0, 1)],
                [(0, 3), (0, 2), (1, 1), (1, 0)],
            ];
            T[a][b]
        }
        let mut table = vec![0; 64];
        for x in 0..8 {
            for y in 0..8 {
                let (s, u) = unit_mul(x / 2, y / 2);
                let sign = (x % 2 + y % 2 + s) % 2;
                table[x * 8 + y] = 2 * u + sign;
            }
        }
        Self::from_flat(8, table, None).expect("quaternion table").with_label("quaternion8")
    }

    /// Permutations of `0..n` in lexicographic order.
    pub fn symmetric_permutations(n: usize) -> Vec<Vec<usize>> {
        fn rec(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
            if prefix.len() == used.len() {
                out.push(prefix.clone());
                return;
            }
            for x in 0..used.len() {
                if !used[x] {
                    used[x] = true;
                    prefix.push(x);
                    rec(prefix, used, out);
                    prefix.pop();
                    used[x] = false;
                }
            }
        }
        let mut out = Vec::new();
        rec(&mut Vec::new(), &mut vec![false; n], &mut out);
        out
    }

    pub fn symmetric(n: usize) -> Result<Self, GroupError> {
        if !(1..=6).contains(&n) {
            return Err(GroupError::InvalidSpec(format!("symmetric degree {n} outside 1..=6")));
        }
        let perms = Self::symmetric_permutations(n);
        let index: HashMap<&[usize], usize> = perms.iter().enumerate().map(|(i, p)| (p.as_slice(), i)).collect();
        let order = perms.len();
        let mut table = vec![0; order * order];
        for (a, p) in perms.iter().enumerate() {
            for (b, q) in perms.iter().enumerate() {
                let comp: Vec<usize> = (0..n).map(|x| p[q[x]]).collect();
                table[a * order + b] = index[comp.as_slice()];
            }
        }
        Ok(Self::from_flat(order, table, None)?.with_label(format!("symmetric:{n}")))
    }

    pub fn direct_product(a: &FiniteGroup, b: &FiniteGroup, cap: usize) -> Result<Self, GroupError> {
        let order = a.order * b.order;
        if order > cap {
            return Err(GroupError::CapExceeded { order, cap });
        }
        let mut table = vec![0; order * order];
        for x in 0..order {
            for y in 0..order {
                let (xa, xb) = (x / b.order, x % b.order);
                let (ya, yb) = (y / b.order, y % b.order);
                table[x * order + y] = a.mul(xa, ya) * b.order + b.mul(xb, yb);
            }
        }
        let label = format!(
            "product:{},{}",
            a.label().unwrap_or("?"),
            b.label().unwrap_or("?")
        );
        Ok(Self::from_flat(order, table, None)?.with_label(label))
    }

    /// Closes a set of permutations of `0..degree` under composition.
    /// Index 0 is the identity; the rest follow breadth-first discovery.
    pub fn from_permutation_generators(gens: &[Vec<usize>], cap: usize) -> Result<Self, GroupError> {
        let degree = gens.first().map_or(0, |g| g.len());
        for g in gens {
            let mut seen = vec![false; degree];
            if g.len() != degree || g.iter().any(|&x| x >= degree || std::mem::replace(&mut seen[x], true)) {
                return Err(GroupError::InvalidSpec("generators must be permutations of a common degree".into()));
            }
        }
        let identity: Vec<usize> = (0..degree).collect();
        let mut elems = vec![identity.clone()];
        let mut index: HashMap<Vec<usize>, usize> = HashMap::from([(identity, 0)]);
        let mut queue = VecDeque::from([0usize]);
        while let Some(i) = queue.pop_front() {
            for g in gens {
                let p: Vec<usize> = (0..degree).map(|x| elems[i][g[x]]).collect();
                if !index.contains_key(&p) {
                    if elems.len() >= cap {
                        return Err(GroupError::CapExceeded { order: elems.len() + 1, cap });
                    }
                    index.insert(p.clone(), elems.len());
                    queue.push_back(elems.len());
                    elems.push(p);
                }
            }
        }
        let order = elems.len();
        let mut table = vec![0; order * order];
        for (a, p) in elems.iter().enumerate() {
            for (b, q) in elems.iter().enumerate() {
                let comp: Vec<usize> = (0..degree).map(|x| p[q[x]]).collect();
                table[a * order + b] = index[&comp];
            }
        }
        Ok(Self::from_flat(order, table, None)?.with_label("permutation-generated"))
    }

    /// Parses constructor spec strings such as `cyclic:12`, `dihedral:6`,
    /// `quaternion8`, `symmetric:4`, `product:cyclic:2,quaternion8`.
    pub fn from_spec(spec: &str, cap: usize) -> Result<Self, GroupError> {
        let spec = spec.trim();
        if let Some(rest) = spec.strip_prefix("product:") {
            let mut factors = rest.split(',').map(|f| Self::from_spec(f, cap));
            let first = factors
                .next()
                .ok_or_else(|| GroupError::InvalidSpec("empty product".into()))??;
            let group = factors.try_fold(first, |acc, f| Self::direct_product(&acc, &f?, cap))?;
            return Ok(group.with_label(spec));
        }
        let (name, arg) = match spec.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (spec, None),
        };
        let num = || -> Result<usize, GroupError> {
            arg.ok_or_else(|| GroupError::InvalidSpec(format!("{name} needs a parameter")))?
                .parse()
                .map_err(|_| GroupError::InvalidSpec(format!("bad parameter in {spec:?}")))
        };
        let group = match name {
            "trivial" => Self::trivial(),
            "cyclic" => Self::cyclic(num()?)?,
            "dihedral" => Self::dihedral(num()?)?,
            "quaternion8" => Self::quaternion8(),
            "symmetric" => Self::symmetric(num()?)?,
            _ => return Err(GroupError::InvalidSpec(format!("unknown group {spec:?}"))),
        };
        if group.order > cap {
            return Err(GroupError::CapExceeded { order: group.order, cap });
        }
        Ok(group)
    }

    // ---- subgroups ----

    fn closure_bits(&self, gens: &[usize]) -> BitSet {
        let mut bits = BitSet::new(self.order);
        bits.insert(0);
        let mut stack = vec![0usize];
        while let Some(x) = stack.pop() {
            for &g in gens {
                let y = self.mul(x, g);
                if bits.insert(y) {
                    stack.push(y);
                }
            }
        }
        bits
    }

    fn subgroup_from_bits(&self, bits: &BitSet, generators: Vec<usize>) -> Subgroup {
        Subgroup { members: bits.iter().collect(), generators }
    }

    /// Subgroup generated by the given elements.
    pub fn generated_subgroup(&self, gens: &[usize]) -> Subgroup {
        let gens: Vec<usize> = gens.iter().copied().filter(|&g| g != 0).collect();
        self.subgroup_from_bits(&self.closure_bits(&gens), gens)
    }

    pub fn whole(&self) -> Subgroup {
        self.generated_subgroup(&(1..self.order).collect::<Vec<_>>())
    }

    /// Checks that `members` is a subgroup and returns it.
    pub fn subgroup(&self, members: &[usize]) -> Result<Subgroup, GroupError> {
        let set: HashSet<usize> = members.iter().copied().collect();
        if !set.contains(&0) || set.iter().any(|&x| x >= self.order) {
            return Err(GroupError::NotASubgroup);
        }
        for &a in &set {
            if !set.contains(&self.inv(a)) || set.iter().any(|&b| !set.contains(&self.mul(a, b))) {
                return Err(GroupError::NotASubgroup);
            }
        }
        let mut sorted: Vec<usize> = set.into_iter().collect();
        sorted.sort_unstable();
        let generators = sorted.iter().copied().filter(|&g| g != 0).collect();
        Ok(Subgroup { members: sorted, generators })
    }

    /// Every subgroup, by the cyclic extension method: starting from the
    /// trivial subgroup, repeatedly join known subgroups with cyclic
    /// subgroups, deduplicating by member set. Sorted by order, then by
    /// member list.
    pub fn all_subgroups(&self, cap: usize) -> Result<Vec<Subgroup>, GroupError> {
        if self.order > cap {
            return Err(GroupError::CapExceeded { order: self.order, cap });
        }
        let mut cyclics: Vec<(usize, BitSet)> = Vec::new();
        let mut seen_cyclic = HashSet::new();
        for g in 1..self.order {
            let bits = self.closure_bits(&[g]);
            if seen_cyclic.insert(bits.clone()) {
                cyclics.push((g, bits));
            }
        }

        let mut trivial = BitSet::new(self.order);
        trivial.insert(0);
        let mut found: HashMap<BitSet, Vec<usize>> = HashMap::from([(trivial.clone(), vec![])]);
        let mut queue = VecDeque::from([trivial]);
        while let Some(h) = queue.pop_front() {
            let gens = found[&h].clone();
            for (c, cbits) in &cyclics {
                if cbits.is_subset(&h) {
                    continue;
                }
                let mut joined_gens = gens.clone();
                joined_gens.push(*c);
                let joined = self.closure_bits(&joined_gens);
                if !found.contains_key(&joined) {
                    found.insert(joined.clone(), joined_gens);
                    queue.push_back(joined);
                }
            }
        }
        let mut subs: Vec<Subgroup> = found
            .iter()
            .map(|(bits, gens)| self.subgroup_from_bits(bits, gens.clone()))
            .collect();
        subs.sort_by(|a, b| (a.order(), &a.members).cmp(&(b.order(), &b.members)));
        Ok(subs)
    }

    pub fn is_abelian(&self, s: &Subgroup) -> bool {
        let g = &s.generators;
        g.iter().all(|&a| g.iter().all(|&b| self.mul(a, b) == self.mul(b, a)))
    }

    /// Whether `s` is normal in the whole group.
    pub fn is_normal(&self, s: &Subgroup) -> bool {
        self.normalizes(&self.whole(), s)
    }

    /// Whether every element of `h` conjugates `a` into itself.
    pub fn normalizes(&self, h: &Subgroup, a: &Subgroup) -> bool {
        h.generators.iter().all(|&x| {
            let xi = self.inv(x);
            a.generators.iter().all(|&y| a.contains(self.mul(self.mul(x, y), xi)))
        })
    }

    /// `G/N`. Cosets are numbered by first appearance, so the identity
    /// coset is 0.
    pub fn quotient(&self, n: &Subgroup) -> Result<FiniteGroup, GroupError> {
        if !self.is_normal(n) {
            return Err(GroupError::NotNormal);
        }
        let (labels, reps) = self.coset_labels(n);
        let q = reps.len();
        let mut table = vec![0; q * q];
        for (i, &a) in reps.iter().enumerate() {
            for (j, &b) in reps.iter().enumerate() {
                table[i * q + j] = labels[self.mul(a, b)];
            }
        }
        let label = format!("{}/{}", self.label().unwrap_or("G"), n.order());
        Ok(Self::from_flat(q, table, None)?.with_label(label))
    }

    /// Left coset label of every element, and one representative per coset.
    pub fn coset_labels(&self, n: &Subgroup) -> (Vec<usize>, Vec<usize>) {
        let mut labels = vec![usize::MAX; self.order];
        let mut reps = Vec::new();
        for g in 0..self.order {
            if labels[g] == usize::MAX {
                let id = reps.len();
                reps.push(g);
                for &m in &n.members {
                    labels[self.mul(g, m)] = id;
                }
            }
        }
        (labels, reps)
    }

    /// Restriction of the table to a subgroup; element `i` of the result
    /// is `s.members[i]`.
    pub fn subgroup_as_group(&self, s: &Subgroup) -> Result<FiniteGroup, GroupError> {
        let pos: HashMap<usize, usize> = s.members.iter().enumerate().map(|(i, &m)| (m, i)).collect();
        let k = s.order();
        let mut table = vec![0; k * k];
        for (i, &a) in s.members.iter().enumerate() {
            for (j, &b) in s.members.iter().enumerate() {
                table[i * k + j] = *pos.get(&self.mul(a, b)).ok_or(GroupError::NotASubgroup)?;
            }
        }
        Ok(Self::from_flat(k, table, None)?.with_label(format!("{}[{}]", self.label().unwrap_or("G"), k)))
    }

    /// `min |H/A|` over abelian normal subgroups `A` of `H`, given the full
    /// subgroup list of the ambient group.
    fn min_abelian_normal_index_in(&self, h: &Subgroup, subs: &[Subgroup], abelian: &[bool]) -> usize {
        subs.iter()
            .zip(abelian)
            .filter(|(a, &ab)| ab && h.order().is_multiple_of(a.order()) && a.members.iter().all(|&x| h.contains(x)))
            .filter(|(a, _)| self.normalizes(h, a))
            .map(|(a, _)| h.order() / a.order())
            .min()
            .unwrap_or(h.order())
    }

    /// `min |G/A|` over abelian normal subgroups `A ⊴ G`.
    pub fn min_abelian_normal_index(&self, cap: usize) -> Result<usize, GroupError> {
        let subs = self.all_subgroups(cap)?;
        let abelian: Vec<bool> = subs.iter().map(|s| self.is_abelian(s)).collect();
        Ok(self.min_abelian_normal_index_in(&self.whole(), &subs, &abelian))
    }

    /// Jordan constant: the maximum over subgroups `H` of the minimal index
    /// of an abelian normal subgroup of `H`.
    pub fn jordan_constant(&self, cap: usize) -> Result<usize, GroupError> {
        Ok(self.jordan_witness(cap)?.1)
    }

    /// Jordan constant together with a subgroup attaining it.
    pub fn jordan_witness(&self, cap: usize) -> Result<(Subgroup, usize), GroupError> {
        let subs = self.all_subgroups(cap)?;
        let abelian: Vec<bool> = subs.iter().map(|s| self.is_abelian(s)).collect();
        let mut best: Option<(Subgroup, usize)> = None;
        for h in &subs {
            let idx = self.min_abelian_normal_index_in(h, &subs, &abelian);
            if best.as_ref().is_none_or(|(_, b)| idx > *b) {
                best = Some((h.clone(), idx));
            }
        }
        Ok(best.expect("trivial subgroup always present"))
    }
}

/// Isomorphism search: maps a small generating set of `a` to all
/// order-compatible tuples in `b`, extending each candidate along words in
/// the generators. Returns `iso[x]` = image of `x`.
pub fn find_isomorphism(a: &FiniteGroup, b: &FiniteGroup) -> Option<Vec<usize>> {
    if a.order() != b.order() {
        return None;
    }
    let a_orders: Vec<usize> = (0..a.order()).map(|x| a.element_order(x)).collect();
    let b_orders: Vec<usize> = (0..b.order()).map(|x| b.element_order(x)).collect();
    {
        let (mut sa, mut sb) = (a_orders.clone(), b_orders.clone());
        sa.sort_unstable();
        sb.sort_unstable();
        if sa != sb {
            return None;
        }
    }
    // Greedy generating set of `a`, largest element orders first.
    let mut candidates: Vec<usize> = (1..a.order()).collect();
    candidates.sort_by_key(|&x| std::cmp::Reverse(a_orders[x]));
    let mut gens = Vec::new();
    let mut span = a.closure_bits(&[]);
    for x in candidates {
        if !span.contains(x) {
            gens.push(x);
            span = a.closure_bits(&gens);
        }
    }

    fn extend(a: &FiniteGroup, b: &FiniteGroup, gens: &[usize], images: &[usize]) -> Option<Vec<usize>> {
        let mut map = vec![usize::MAX; a.order()];
        map[0] = 0;
        let mut queue = VecDeque::from([0usize]);
        while let Some(x) = queue.pop_front() {
            for (&g, &img) in gens.iter().zip(images) {
                let y = a.mul(x, g);
                let fy = b.mul(map[x], img);
                if map[y] == usize::MAX {
                    map[y] = fy;
                    queue.push_back(y);
                } else if map[y] != fy {
                    return None;
                }
            }
        }
        let mut hit = vec![false; b.order()];
        for &v in &map {
            if std::mem::replace(&mut hit[v], true) {
                return None;
            }
        }
        for x in 0..a.order() {
            for y in 0..a.order() {
                if map[a.mul(x, y)] != b.mul(map[x], map[y]) {
                    return None;
                }
            }
        }
        Some(map)
    }

    fn search(
        a: &FiniteGroup,
        b: &FiniteGroup,
        gens: &[usize],
        a_orders: &[usize],
        b_orders: &[usize],
        images: &mut Vec<usize>,
    ) -> Option<Vec<usize>> {
        if images.len() == gens.len() {
            return extend(a, b, gens, images);
        }
        let want = a_orders[gens[images.len()]];
        for y in 1..b.order() {
            if b_orders[y] == want {
                images.push(y);
                if let Some(m) = search(a, b, gens, a_orders, b_orders, images) {
                    return Some(m);
                }
                images.pop();
            }
        }
        None
    }

    search(a, b, &gens, &a_orders, &b_orders, &mut Vec::new())
}

pub fn are_isomorphic(a: &FiniteGroup, b: &FiniteGroup) -> bool {
    find_isomorphism(a, b).is_some()
}

#[derive(Serialize, Deserialize)]
struct GroupJson {
    order: usize,
    table: Vec<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    label: Option<String>,
}

impl Serialize for FiniteGroup {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        GroupJson { order: self.order, table: self.table_rows(), label: self.label.clone() }.serialize(serializer)
    }
}

/// Accepts either `{"order", "table"}` or a constructor spec string.
impl<'de> Deserialize<'de> for FiniteGroup {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Spec(String),
            Table(GroupJson),
        }
        match Repr::deserialize(deserializer)? {
            Repr::Spec(s) => FiniteGroup::from_spec(&s, DEFAULT_CAP).map_err(D::Error::custom),
            Repr::Table(j) => {
                if j.order != j.table.len() {
                    return Err(D::Error::custom(format!(
                        "group.order is {} but group.table has {} rows",
                        j.order,
                        j.table.len()
                    )));
                }
                let mut g = FiniteGroup::from_table(j.table).map_err(D::Error::custom)?;
                g.label = j.label;
                Ok(g)
            }
        }
    }
}
