//! Maps from finite groups into ambient matrix groups: defect, Haar-average
//! repair, perturbation, kernels and reconstruction of abstract structure
//! from a finite set of matrices.

use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::fingroup::{FiniteGroup, GroupError, Subgroup};
use crate::liespace::{AmbientKind, AmbientSpace, SpaceError};
use crate::matcore::{rand_skew_hermitian, Mat, MatError, C64};

/// Injectivity radius for unitary-type spaces under the bi-invariant
/// chordal metric. Every nontrivial finite-order unitary has a power with
/// an eigenvalue angle in `[2π/3, 4π/3]`, hence at distance `≥ √3` from `I`.
pub const UNITARY_INJECTIVITY_RADIUS: f64 = 1.732_050_807_568_877_2 - 0.01;
/// Largest defect accepted by [`repair`] without an explicit override.
pub const DEFAULT_REPAIR_THRESHOLD: f64 = 0.1;
/// Defect a map must have to count as an exact homomorphism in [`kernel`].
pub const HOMOMORPHISM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MorphismError {
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(transparent)]
    Mat(#[from] MatError),
    #[error("values has {got} entries, domain has order {expected}")]
    WrongCount { expected: usize, got: usize },
    #[error("values[{index}]: expected {expected}x{expected} matrix, got {got}x{got}")]
    WrongDimension { index: usize, expected: usize, got: usize },
    #[error("values[{index}] is not in the ambient space")]
    NotInSpace { index: usize },
    #[error("defect {defect:e} exceeds the repairability threshold {threshold:e}")]
    AboveRepairThreshold { defect: f64, threshold: f64 },
    #[error("repair stalled at iteration {iteration} (defects {defect_history:?})")]
    Stalled { iteration: usize, defect_history: Vec<f64> },
    #[error("cocycle left the principal-log domain: {0}")]
    BranchCut(MatError),
    #[error("maps have different domains or spaces")]
    DomainMismatch,
    #[error("map is not a homomorphism (defect {defect:e})")]
    NotAHomomorphism { defect: f64 },
    #[error("elements near the identity do not form a normal subgroup")]
    NotASubgroup,
    #[error("no default injectivity radius for this space")]
    NoDefaultRadius,
    #[error("elements {i} and {j} are within 2·match_tol ({distance:e})")]
    TooClose { i: usize, j: usize, distance: f64 },
    #[error("no element within match_tol of the identity")]
    NoIdentity,
    #[error("product of elements {i} and {j} matches no element")]
    ProductUnmatched { i: usize, j: usize },
    #[error("product of elements {i} and {j} matches several elements")]
    AmbiguousMatch { i: usize, j: usize },
    #[error("empty element list")]
    Empty,
}

/// A map `K → 𝕌` from a finite group, stored as its values in index order.
#[derive(Debug, Clone)]
pub struct AlmostMorphism {
    domain: Arc<FiniteGroup>,
    space: AmbientSpace,
    values: Vec<Mat>,
}

impl AlmostMorphism {
    pub fn new(domain: Arc<FiniteGroup>, space: AmbientSpace, values: Vec<Mat>) -> Result<Self, MorphismError> {
        if values.len() != domain.order() {
            return Err(MorphismError::WrongCount { expected: domain.order(), got: values.len() });
        }
        for (index, v) in values.iter().enumerate() {
            if v.dim() != space.dim() {
                return Err(MorphismError::WrongDimension { index, expected: space.dim(), got: v.dim() });
            }
            if !space.contains(v) {
                return Err(MorphismError::NotInSpace { index });
            }
        }
        Ok(AlmostMorphism { domain, space, values })
    }

    pub(crate) fn from_parts(domain: Arc<FiniteGroup>, space: AmbientSpace, values: Vec<Mat>) -> Self {
        AlmostMorphism { domain, space, values }
    }

    pub fn domain(&self) -> &Arc<FiniteGroup> {
        &self.domain
    }

    pub fn space(&self) -> &AmbientSpace {
        &self.space
    }

    pub fn values(&self) -> &[Mat] {
        &self.values
    }

    pub fn value(&self, s: usize) -> &Mat {
        &self.values[s]
    }

    /// Same values viewed in another space (membership rechecked).
    pub fn with_space(&self, space: AmbientSpace) -> Result<Self, MorphismError> {
        Self::new(self.domain.clone(), space, self.values.clone())
    }

    /// `u·φ(·)·u⁻¹`.
    pub fn conjugated(&self, u: &Mat) -> Result<Self, MorphismError> {
        let ui = u.inv()?;
        let values = self.values.iter().map(|v| &(u * v) * &ui).collect();
        Self::new(self.domain.clone(), self.space.clone(), values)
    }

    /// Right translation by `φ(e)⁻¹`, so that the identity maps to `I`.
    pub fn normalized(&self) -> Result<Self, MorphismError> {
        let e_inv = self.values[0].inv()?;
        let mut values: Vec<Mat> = self.values.iter().map(|v| v * &e_inv).collect();
        values[0] = Mat::identity(self.space.dim());
        Ok(Self::from_parts(self.domain.clone(), self.space.clone(), values))
    }

    /// Restriction to a subgroup of the domain, reindexed by its members.
    pub fn restrict(&self, sub: &Subgroup) -> Result<Self, MorphismError> {
        let group = self.domain.subgroup_as_group(sub)?;
        let values = sub.members.iter().map(|&m| self.values[m].clone()).collect();
        Ok(Self::from_parts(Arc::new(group), self.space.clone(), values))
    }
}

/// `max_{s,t} d(φ(st), φ(s)φ(t))`.
pub fn defect(f: &AlmostMorphism) -> f64 {
    let g = &f.domain;
    let n = g.order();
    (0..n)
        .into_par_iter()
        .map(|s| {
            (0..n)
                .map(|t| {
                    let prod = &f.values[s] * &f.values[t];
                    f.space.dist(&f.values[g.mul(s, t)], &prod).unwrap_or(f64::INFINITY)
                })
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max)
}

/// `max_s d(f(s), g(s))`.
pub fn dist_sup(f: &AlmostMorphism, g: &AlmostMorphism) -> Result<f64, MorphismError> {
    if f.domain != g.domain || f.space.dim() != g.space.dim() {
        return Err(MorphismError::DomainMismatch);
    }
    let mut d = 0.0f64;
    for (a, b) in f.values.iter().zip(&g.values) {
        d = d.max(f.space.dist(a, b)?);
    }
    Ok(d)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RepairOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Repairability threshold: inputs with larger defect are rejected.
    pub threshold: f64,
    /// Each iteration must multiply the defect by at most this factor.
    pub contraction_min: f64,
}

impl Default for RepairOptions {
    fn default() -> Self {
        RepairOptions { tol: 1e-12, max_iter: 50, threshold: DEFAULT_REPAIR_THRESHOLD, contraction_min: 0.5 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RepairReport {
    pub iterations: usize,
    /// Defect of the input followed by the defect after each iteration.
    pub defect_history: Vec<f64>,
    #[serde(rename = "final")]
    pub final_map: AlmostMorphism,
    /// Sup-distance between the input and `final_map`.
    pub moved: f64,
    /// `moved / defect_in`, absent when the input defect is zero.
    pub stability_ratio: Option<f64>,
}

impl RepairReport {
    pub fn defect_in(&self) -> f64 {
        self.defect_history[0]
    }

    pub fn defect_out(&self) -> f64 {
        *self.defect_history.last().unwrap()
    }
}

/// One averaging step: `φ'(s) = exp(P β(s))·φ(s)` with
/// `β(s) = (1/|K|) Σ_t log(φ(st)·φ(t)⁻¹·φ(s)⁻¹)`.
fn average_step(f: &AlmostMorphism) -> Result<AlmostMorphism, MorphismError> {
    let g = &f.domain;
    let n = g.order();
    let inverses = f.values.iter().map(Mat::inv).collect::<Result<Vec<_>, _>>()?;
    let weight = 1.0 / n as f64;
    let values = (0..n)
        .into_par_iter()
        .map(|s| {
            let mut beta = Mat::zeros(f.space.dim());
            for t in 0..n {
                let cocycle = &(&f.values[g.mul(s, t)] * &inverses[t]) * &inverses[s];
                let log = cocycle.log().map_err(MorphismError::BranchCut)?;
                beta = &beta + &log;
            }
            let beta = f.space.algebra_project(&beta.scale(weight));
            Ok(&beta.exp()? * &f.values[s])
        })
        .collect::<Result<Vec<_>, MorphismError>>()?;
    Ok(AlmostMorphism::from_parts(f.domain.clone(), f.space.clone(), values))
}

/// Haar-average repair of an almost-homomorphism into an exact one.
pub fn repair(f: &AlmostMorphism, opts: &RepairOptions) -> Result<RepairReport, MorphismError> {
    let defect_in = defect(f);
    if defect_in <= opts.tol {
        return Ok(RepairReport {
            iterations: 0,
            defect_history: vec![defect_in],
            final_map: f.clone(),
            moved: 0.0,
            stability_ratio: (defect_in > 0.0).then_some(0.0),
        });
    }
    if defect_in > opts.threshold {
        return Err(MorphismError::AboveRepairThreshold { defect: defect_in, threshold: opts.threshold });
    }

    let mut history = vec![defect_in];
    let mut current = f.normalized()?;
    for iteration in 1..=opts.max_iter {
        current = average_step(&current)?;
        let d = defect(&current);
        let previous = *history.last().unwrap();
        history.push(d);
        if d <= opts.tol {
            for (index, v) in current.values.iter().enumerate() {
                if !current.space.contains(v) {
                    return Err(MorphismError::NotInSpace { index });
                }
            }
            let moved = dist_sup(f, &current)?;
            return Ok(RepairReport {
                iterations: iteration,
                defect_history: history,
                final_map: current,
                moved,
                stability_ratio: Some(moved / defect_in),
            });
        }
        if !(d <= opts.contraction_min * previous) {
            return Err(MorphismError::Stalled { iteration, defect_history: history });
        }
    }
    Err(MorphismError::Stalled { iteration: opts.max_iter, defect_history: history })
}

/// `ψ(s) = exp(X_s)·ρ(s)` with independent `X_s` of operator norm `eps`,
/// projected into the space's Lie algebra; `ψ(e) = I`.
pub fn perturb<R: Rng + ?Sized>(rho: &AlmostMorphism, eps: f64, rng: &mut R) -> Result<AlmostMorphism, MorphismError> {
    let n = rho.space.dim();
    let mut values = Vec::with_capacity(rho.values.len());
    values.push(Mat::identity(n));
    for v in &rho.values[1..] {
        let x = rand_skew_hermitian(n, eps, rng);
        let x = match rho.space.kind {
            AmbientKind::GeneralLinear { .. } | AmbientKind::Unitary { .. } => x,
            _ => {
                let p = rho.space.algebra_project(&x);
                let norm = p.opnorm();
                if norm > 0.0 { p.scale(eps / norm) } else { p }
            }
        };
        values.push(if eps == 0.0 { v.clone() } else { &x.exp()? * v });
    }
    if eps == 0.0 {
        values[0] = rho.values[0].clone();
    }
    AlmostMorphism::new(rho.domain.clone(), rho.space.clone(), values)
}

pub fn default_injectivity_radius(space: &AmbientSpace) -> Option<f64> {
    space.kind.is_unitary_type().then_some(UNITARY_INJECTIVITY_RADIUS)
}

/// Kernel of an exact homomorphism: the elements whose whole cyclic
/// subgroup is mapped within `radius` of the identity. The result is
/// checked to be a normal subgroup.
pub fn kernel(f: &AlmostMorphism, radius: Option<f64>) -> Result<Subgroup, MorphismError> {
    let radius = radius.or_else(|| default_injectivity_radius(&f.space)).ok_or(MorphismError::NoDefaultRadius)?;
    let d = defect(f);
    if d > HOMOMORPHISM_TOL {
        return Err(MorphismError::NotAHomomorphism { defect: d });
    }
    let g = &f.domain;
    let mut members = Vec::new();
    for s in 0..g.order() {
        let mut inside = true;
        let mut x = s;
        loop {
            if f.space.dist_to_identity(&f.values[x])? >= radius {
                inside = false;
                break;
            }
            x = g.mul(x, s);
            if x == s {
                break;
            }
        }
        if inside {
            members.push(s);
        }
    }
    let sub = g.subgroup(&members).map_err(|_| MorphismError::NotASubgroup)?;
    if !g.is_normal(&sub) {
        return Err(MorphismError::NotASubgroup);
    }
    Ok(sub)
}

/// Rebuilds the abstract group structure of a finite set of matrices that is
/// close to a group, by matching each product to the unique element within
/// `match_tol`. The identity element is moved to index 0; the remaining
/// elements keep their relative order.
pub fn recover_abstract_group(
    elements: &[Mat],
    space: &AmbientSpace,
    match_tol: f64,
) -> Result<(FiniteGroup, AlmostMorphism), MorphismError> {
    if elements.is_empty() {
        return Err(MorphismError::Empty);
    }
    for (i, a) in elements.iter().enumerate() {
        if a.dim() != space.dim() {
            return Err(MorphismError::WrongDimension { index: i, expected: space.dim(), got: a.dim() });
        }
        for (j, b) in elements.iter().enumerate().skip(i + 1) {
            let distance = space.dist(a, b)?;
            if distance <= 2.0 * match_tol {
                return Err(MorphismError::TooClose { i, j, distance });
            }
        }
    }
    let identity = Mat::identity(space.dim());
    let mut id_index = None;
    for (i, a) in elements.iter().enumerate() {
        if space.dist(&identity, a)? <= match_tol {
            id_index = Some(i);
            break;
        }
    }
    let id_index = id_index.ok_or(MorphismError::NoIdentity)?;
    let ordered: Vec<Mat> = std::iter::once(elements[id_index].clone())
        .chain(elements.iter().enumerate().filter(|&(i, _)| i != id_index).map(|(_, m)| m.clone()))
        .collect();

    let n = ordered.len();
    let mut table = vec![vec![0usize; n]; n];
    for i in 0..n {
        for j in 0..n {
            let prod = &ordered[i] * &ordered[j];
            let mut hit = None;
            for (k, c) in ordered.iter().enumerate() {
                if space.dist(c, &prod)? <= match_tol {
                    if hit.is_some() {
                        return Err(MorphismError::AmbiguousMatch { i, j });
                    }
                    hit = Some(k);
                }
            }
            table[i][j] = hit.ok_or(MorphismError::ProductUnmatched { i, j })?;
        }
    }
    let group = FiniteGroup::from_table(table)?;
    let inclusion = AlmostMorphism::from_parts(Arc::new(group.clone()), space.clone(), ordered);
    Ok((group, inclusion))
}

/// Distinct values of a map, keeping the first of every cluster within
/// `tol`.
pub fn distinct_values(values: &[Mat], space: &AmbientSpace, tol: f64) -> Result<Vec<Mat>, MorphismError> {
    let mut out: Vec<Mat> = Vec::new();
    for v in values {
        let mut fresh = true;
        for u in &out {
            if space.dist(u, v)? <= tol {
                fresh = false;
                break;
            }
        }
        if fresh {
            out.push(v.clone());
        }
    }
    Ok(out)
}

// ---- standard representations ----

fn root_of_unity(k: i64, n: usize) -> C64 {
    let r = k.rem_euclid(n as i64) as f64 / n as f64;
    C64::from_polar(1.0, 2.0 * std::f64::consts::PI * r)
}

/// `k ↦ diag(e^{2πi a_j k / n})` on `cyclic(n)`, valued in `space`.
pub fn cyclic_diagonal(n: usize, exponents: &[i64], space: AmbientSpace) -> Result<AlmostMorphism, MorphismError> {
    let group = Arc::new(FiniteGroup::cyclic(n)?);
    let values = (0..n)
        .map(|k| Mat::from_diagonal(&exponents.iter().map(|&a| root_of_unity(a * k as i64, n)).collect::<Vec<_>>()))
        .collect();
    AlmostMorphism::new(group, space, values)
}

fn standard_values(spec: &str) -> Result<(FiniteGroup, Vec<Mat>), MorphismError> {
    let spec = spec.trim();
    let c = |re: f64, im: f64| C64::new(re, im);
    if let Some(rest) = spec.strip_prefix("product:") {
        let mut parts = rest.split(',').map(standard_values);
        let (_, mut values) = parts.next().ok_or(GroupError::InvalidSpec("empty product".into()))??;
        for part in parts {
            let (_, factor) = part?;
            values = values.iter().flat_map(|a| factor.iter().map(move |b| block_diag(a, b))).collect();
        }
        let group = FiniteGroup::from_spec(spec, crate::fingroup::DEFAULT_CAP)?;
        return Ok((group, values));
    }
    let group = FiniteGroup::from_spec(spec, crate::fingroup::DEFAULT_CAP)?;
    let (name, arg) = spec.split_once(':').unwrap_or((spec, ""));
    let values: Vec<Mat> = match name {
        "trivial" => vec![Mat::identity(1)],
        "cyclic" => {
            let n = group.order();
            (0..n)
                .map(|k| Mat::from_diagonal(&[root_of_unity(k as i64, n), root_of_unity(2 * k as i64, n)]))
                .collect()
        }
        "dihedral" => {
            let n: usize = arg.parse().map_err(|_| GroupError::InvalidSpec(spec.into()))?;
            let flip = Mat::from_real_diagonal(&[1.0, -1.0]);
            (0..2 * n)
                .map(|x| {
                    let theta = 2.0 * std::f64::consts::PI * (x % n) as f64 / n as f64;
                    let (s, co) = theta.sin_cos();
                    let rot = Mat::from_row_slice(2, &[c(co, 0.0), c(-s, 0.0), c(s, 0.0), c(co, 0.0)]).unwrap();
                    if x / n == 1 { &flip * &rot } else { rot }
                })
                .collect()
        }
        "quaternion8" => {
            let units = [
                Mat::identity(2),
                Mat::from_diagonal(&[c(0.0, 1.0), c(0.0, -1.0)]),
                Mat::from_row_slice(2, &[c(0.0, 0.0), c(1.0, 0.0), c(-1.0, 0.0), c(0.0, 0.0)]).unwrap(),
                Mat::from_row_slice(2, &[c(0.0, 0.0), c(0.0, 1.0), c(0.0, 1.0), c(0.0, 0.0)]).unwrap(),
            ];
            (0..8).map(|x| if x % 2 == 1 { units[x / 2].scale(-1.0) } else { units[x / 2].clone() }).collect()
        }
        "symmetric" => {
            let n: usize = arg.parse().map_err(|_| GroupError::InvalidSpec(spec.into()))?;
            FiniteGroup::symmetric_permutations(n)
                .iter()
                .map(|p| Mat::from_fn(n, |i, j| if p[j] == i { c(1.0, 0.0) } else { c(0.0, 0.0) }))
                .collect()
        }
        _ => return Err(GroupError::InvalidSpec(format!("no standard representation for {spec:?}")).into()),
    };
    Ok((group, values))
}

fn block_diag(a: &Mat, b: &Mat) -> Mat {
    let (n, m) = (a.dim(), b.dim());
    Mat::from_fn(n + m, |i, j| match (i < n, j < n) {
        (true, true) => a.get(i, j),
        (false, false) => b.get(i - n, j - n),
        _ => C64::new(0.0, 0.0),
    })
}

/// Faithful unitary representation of a catalog group:
/// cyclic groups as `k ↦ diag(ω^k, ω^{2k})`, dihedral groups as plane
/// rotations and reflections, `quaternion8` in `SU(2)`, symmetric groups
/// as permutation matrices, products as block sums.
pub fn standard_representation(spec: &str) -> Result<AlmostMorphism, MorphismError> {
    let (group, values) = standard_values(spec)?;
    let space = AmbientSpace::unitary(values[0].dim());
    AlmostMorphism::new(Arc::new(group), space, values)
}

// ---- JSON ----

#[derive(Serialize)]
struct MorphismJsonOut<'a> {
    group: &'a FiniteGroup,
    space: &'a AmbientSpace,
    values: &'a [Mat],
}

impl Serialize for AlmostMorphism {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        MorphismJsonOut { group: &self.domain, space: &self.space, values: &self.values }.serialize(serializer)
    }
}

#[derive(Deserialize)]
struct MorphismJsonIn {
    group: FiniteGroup,
    space: AmbientSpace,
    values: Vec<serde_json::Value>,
}

impl<'de> Deserialize<'de> for AlmostMorphism {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = MorphismJsonIn::deserialize(deserializer)?;
        let mut values = Vec::with_capacity(raw.values.len());
        for (i, v) in raw.values.into_iter().enumerate() {
            let m: Mat = serde_json::from_value(v).map_err(|e| D::Error::custom(format!("values[{i}]: {e}")))?;
            values.push(m);
        }
        AlmostMorphism::new(Arc::new(raw.group), raw.space, values).map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn catalog_representations_are_exact_and_faithful() {
        for spec in ["cyclic:4", "dihedral:5", "quaternion8", "symmetric:3", "symmetric:4", "product:cyclic:2,quaternion8"] {
            let rho = standard_representation(spec).unwrap();
            assert!(defect(&rho) <= 1e-14, "{spec}");
            assert!(kernel(&rho, None).unwrap().is_trivial(), "{spec}");
        }
    }

    #[test]
    fn defect_of_trivial_domain_is_zero() {
        let rho = standard_representation("trivial").unwrap();
        assert_eq!(defect(&rho), 0.0);
    }

    #[test]
    fn defect_of_small_perturbation_is_bounded() {
        let rho = standard_representation("quaternion8").unwrap();
        let mut r = rng(1);
        let values: Vec<Mat> = rho
            .values()
            .iter()
            .map(|v| &rand_skew_hermitian(2, 1e-3, &mut r).exp().unwrap() * v)
            .collect();
        let f = AlmostMorphism::new(rho.domain().clone(), rho.space().clone(), values).unwrap();
        let d = defect(&f);
        assert!(d > 0.0 && d <= 4e-3, "{d}");
    }

    #[test]
    fn defect_invariant_under_relabeling() {
        // Transport the table along a bijection that fixes the identity.
        let rho = perturb(&standard_representation("dihedral:4").unwrap(), 1e-3, &mut rng(2)).unwrap();
        let g = rho.domain();
        let perm = [0usize, 5, 3, 7, 1, 6, 2, 4];
        let mut inv_perm = [0usize; 8];
        for (i, &p) in perm.iter().enumerate() {
            inv_perm[p] = i;
        }
        let table: Vec<Vec<usize>> =
            (0..8).map(|a| (0..8).map(|b| perm[g.mul(inv_perm[a], inv_perm[b])]).collect()).collect();
        let relabeled_group = Arc::new(FiniteGroup::from_table(table).unwrap());
        let values = (0..8).map(|a| rho.value(inv_perm[a]).clone()).collect();
        let relabeled = AlmostMorphism::new(relabeled_group, rho.space().clone(), values).unwrap();
        assert!((defect(&rho) - defect(&relabeled)).abs() < 1e-15);
    }

    #[test]
    fn repair_of_exact_map_is_identity() {
        let rho = standard_representation("symmetric:3").unwrap();
        let report = repair(&rho, &RepairOptions::default()).unwrap();
        assert_eq!(report.iterations, 0);
        assert_eq!(report.moved, 0.0);
        assert_eq!(report.final_map.values(), rho.values());
    }

    #[test]
    fn repair_quaternion_perturbation() {
        let rho = standard_representation("quaternion8").unwrap();
        let f = perturb(&rho, 1e-3, &mut rng(3)).unwrap();
        let report = repair(&f, &RepairOptions::default()).unwrap();
        assert!(report.iterations <= 10);
        assert!(defect(&report.final_map) <= 1e-12);
        assert!(report.moved <= 10.0 * report.defect_in());
        assert!(report.final_map.values().iter().all(|v| rho.space().contains(v)));
        for w in report.defect_history.windows(2) {
            assert!(w[1] <= 0.5 * w[0]);
        }
    }

    #[test]
    fn repair_rejects_large_defect() {
        let rho = standard_representation("cyclic:5").unwrap();
        let f = perturb(&rho, 0.3, &mut rng(4)).unwrap();
        assert!(defect(&f) > DEFAULT_REPAIR_THRESHOLD);
        assert!(matches!(repair(&f, &RepairOptions::default()), Err(MorphismError::AboveRepairThreshold { .. })));
    }

    #[test]
    fn repair_in_special_unitary_stays_there() {
        let rho = standard_representation("quaternion8").unwrap().with_space(AmbientSpace::special_unitary(2)).unwrap();
        let f = perturb(&rho, 1e-3, &mut rng(5)).unwrap();
        let report = repair(&f, &RepairOptions::default()).unwrap();
        let su = AmbientSpace::special_unitary(2).with_tol(1e-10);
        assert!(report.final_map.values().iter().all(|v| su.contains(v)));
    }

    #[test]
    fn repair_in_general_linear() {
        let rho = standard_representation("dihedral:3").unwrap().with_space(AmbientSpace::general_linear(2)).unwrap();
        let f = perturb(&rho, 1e-3, &mut rng(6)).unwrap();
        let report = repair(&f, &RepairOptions::default()).unwrap();
        assert!(defect(&report.final_map) <= 1e-12);
    }

    #[test]
    fn perturb_contract() {
        let rho = standard_representation("dihedral:4").unwrap();
        let same = perturb(&rho, 0.0, &mut rng(7)).unwrap();
        assert_eq!(same.values(), rho.values());
        for eps in [1e-4, 1e-3, 1e-2] {
            let f = perturb(&rho, eps, &mut rng(8)).unwrap();
            assert!(dist_sup(&rho, &f).unwrap() <= eps + 1e-10);
            assert!(defect(&f) <= 3.0 * eps + 1e-9);
        }
        let a = perturb(&rho, 1e-3, &mut rng(9)).unwrap();
        let b = perturb(&rho, 1e-3, &mut rng(9)).unwrap();
        assert_eq!(a.values(), b.values());
    }

    #[test]
    fn dist_sup_contract() {
        let rho = standard_representation("cyclic:6").unwrap();
        let f = perturb(&rho, 1e-3, &mut rng(10)).unwrap();
        assert_eq!(dist_sup(&rho, &rho).unwrap(), 0.0);
        assert_eq!(dist_sup(&rho, &f).unwrap(), dist_sup(&f, &rho).unwrap());
        let other = standard_representation("cyclic:5").unwrap();
        assert_eq!(dist_sup(&rho, &other).unwrap_err(), MorphismError::DomainMismatch);
    }

    #[test]
    fn kernel_of_non_faithful_map() {
        let f = cyclic_diagonal(4, &[2], AmbientSpace::unitary(1)).unwrap();
        assert_eq!(kernel(&f, None).unwrap().members, vec![0, 2]);
        let g = perturb(&standard_representation("cyclic:4").unwrap(), 1e-3, &mut rng(11)).unwrap();
        assert!(matches!(kernel(&g, None), Err(MorphismError::NotAHomomorphism { .. })));
        let gl = f.with_space(AmbientSpace::general_linear(1)).unwrap();
        assert_eq!(kernel(&gl, None).unwrap_err(), MorphismError::NoDefaultRadius);
    }

    #[test]
    fn injectivity_radius_over_cyclic_subgroups_of_u2() {
        // Conjugation-invariance reduces to diagonal generators.
        for m in 2..=12usize {
            for a in 0..m as i64 {
                for b in 0..m as i64 {
                    if a == 0 && b == 0 {
                        continue;
                    }
                    let farthest = (1..m as i64)
                        .map(|j| {
                            let g = Mat::from_diagonal(&[root_of_unity(a * j, m), root_of_unity(b * j, m)]);
                            (&g - &Mat::identity(2)).opnorm()
                        })
                        .fold(0.0, f64::max);
                    assert!(farthest >= 3f64.sqrt() - 1e-9, "m={m} a={a} b={b}");
                }
            }
        }
    }

    #[test]
    fn recover_cyclic3_from_rotations() {
        let space = AmbientSpace::unitary(2);
        let rho = standard_representation("dihedral:3").unwrap();
        let rotations = rho.values()[..3].to_vec();
        let (group, inclusion) = recover_abstract_group(&rotations, &space, 1e-6).unwrap();
        assert!(crate::fingroup::are_isomorphic(&group, &FiniteGroup::cyclic(3).unwrap()));
        assert!(defect(&inclusion) <= 1e-12);
    }

    #[test]
    fn recover_round_trip_and_errors() {
        let space = AmbientSpace::unitary(2);
        let rho = standard_representation("quaternion8").unwrap();
        let mut shuffled = rho.values().to_vec();
        shuffled.rotate_left(3);
        let (group, inclusion) = recover_abstract_group(&shuffled, &space, 1e-6).unwrap();
        assert!(crate::fingroup::are_isomorphic(&group, rho.domain()));
        assert!(defect(&inclusion) <= 1e-12);

        let near = vec![Mat::identity(2), Mat::from_diagonal(&[C64::from_polar(1.0, 1e-7), C64::new(1.0, 0.0)])];
        assert!(matches!(recover_abstract_group(&near, &space, 1e-6), Err(MorphismError::TooClose { .. })));
        let no_id = rho.values()[1..2].to_vec();
        assert_eq!(recover_abstract_group(&no_id, &space, 1e-6).unwrap_err(), MorphismError::NoIdentity);
        let not_closed = rho.values()[..3].to_vec();
        assert!(matches!(recover_abstract_group(&not_closed, &space, 1e-6), Err(MorphismError::ProductUnmatched { .. })));
    }

    #[test]
    fn json_round_trip_and_field_errors() {
        let rho = standard_representation("cyclic:3").unwrap();
        let text = serde_json::to_string(&rho).unwrap();
        let back: AlmostMorphism = serde_json::from_str(&text).unwrap();
        assert_eq!(back.values(), rho.values());
        let bad = r#"{"group":"cyclic:2","space":{"kind":"unitary","n":2},
            "values":[[[[1,0],[0,0]],[[0,0],[1,0]]], [[[1,0],[0,0],[0,0]],[[0,0],[1,0],[0,0]],[[0,0],[0,0],[1,0]]]]}"#;
        let err = serde_json::from_str::<AlmostMorphism>(bad).unwrap_err().to_string();
        assert!(err.contains("values[1]"), "{err}");
    }
}
