//! Subgroups sitting inside larger matrix groups: tubular projection onto
//! a subgroup, pulling almost-morphisms into it, Hausdorff distance between
//! finite sets, recovering the exact subgroup near the image of an
//! almost-morphism, and sampling estimates of relative Jordan constants.
//!
//! A [`Tube`] is a subgroup `G ≤ U` together with a neighbourhood
//! `G·exp(W)` in which every `u` factors uniquely as `u = g·exp(w)` with
//! `g ∈ G` and `w` in a complement `m` of `Lie(G)`. [`Splitting`] covers the
//! positive-dimensional cases, [`FiniteSubgroupTube`] covers a finite `G`
//! (where `Lie(G) = 0` and `g` is simply the nearest element).

use rand::seq::IndexedRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fingroup::{FiniteGroup, GroupError, DEFAULT_CAP};
use crate::liespace::{AmbientSpace, SpaceError};
use crate::matcore::{rand_skew_hermitian, Mat, MatError, C64};
use crate::morphism::{
    cyclic_diagonal, defect, dist_sup, distinct_values, kernel, perturb, recover_abstract_group, repair,
    standard_representation, AlmostMorphism, MorphismError, RepairOptions, RepairReport,
};
use crate::streams::stream_rng;

pub const MAX_PROJ_ITER: usize = 50;
pub const PROJ_TOL: f64 = 1e-12;
/// Two values closer than this are treated as the same group element.
pub const IMAGE_MATCH_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProximityError {
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Mat(#[from] MatError),
    #[error(transparent)]
    Morphism(#[from] MorphismError),
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error("point is outside the tube: {0}")]
    OutsideTube(String),
    #[error("empty set")]
    EmptySet,
    #[error("{0}")]
    Invalid(String),
}

/// `u = g·exp(w)` with `g` in the subgroup and `w` in the complement.
#[derive(Debug, Clone)]
pub struct Projection {
    pub g: Mat,
    pub w: Mat,
    pub iterations: usize,
}

pub trait Tube: Send + Sync {
    fn ambient(&self) -> &AmbientSpace;
    fn tube_radius(&self) -> f64;
    fn project(&self, u: &Mat) -> Result<Projection, ProximityError>;
    /// Jordan constant of the subgroup when it is known.
    fn reference_jordan(&self) -> Option<usize>;
    /// An exact homomorphism from some group of the given order into the
    /// subgroup, valued in the ambient space, or `None` if the sampler
    /// has no subgroup of that order.
    fn sample_subgroup(&self, order: usize, rng: &mut ChaCha8Rng) -> Result<Option<AlmostMorphism>, ProximityError>;
    fn describe(&self) -> String;

    /// Operator norm of the complement component.
    fn dist_to_subgroup(&self, u: &Mat) -> Result<f64, ProximityError> {
        Ok(self.project(u)?.w.opnorm())
    }
}

fn outside(e: impl std::fmt::Display) -> ProximityError {
    ProximityError::OutsideTube(e.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplittingKind {
    /// `U(n) ≤ GL(n, ℂ)`, complement = Hermitian matrices.
    UnitaryInGeneralLinear,
    /// Diagonal torus `≤ U(n)`, complement = off-diagonal skew-Hermitian.
    TorusInUnitary,
    /// Block-diagonal unitaries `≤ U(n)`, complement = off-block skew-Hermitian.
    BlockInUnitary,
}

#[derive(Debug, Clone)]
pub struct Splitting {
    pub kind: SplittingKind,
    pub ambient: AmbientSpace,
    pub sub: AmbientSpace,
    pub tube_radius: f64,
}

impl Splitting {
    pub fn unitary_in_general_linear(n: usize) -> Self {
        Splitting {
            kind: SplittingKind::UnitaryInGeneralLinear,
            ambient: AmbientSpace::general_linear(n),
            sub: AmbientSpace::unitary(n),
            tube_radius: 0.3,
        }
    }

    pub fn torus_in_unitary(n: usize) -> Self {
        Splitting {
            kind: SplittingKind::TorusInUnitary,
            ambient: AmbientSpace::unitary(n),
            sub: AmbientSpace::diagonal_torus(n),
            tube_radius: 0.2,
        }
    }

    pub fn block_in_unitary(partition: Vec<usize>) -> Self {
        let n = partition.iter().sum();
        Splitting {
            kind: SplittingKind::BlockInUnitary,
            ambient: AmbientSpace::unitary(n),
            sub: AmbientSpace::block_unitary(partition),
            tube_radius: 0.2,
        }
    }

    pub fn with_radius(mut self, radius: f64) -> Self {
        self.tube_radius = radius;
        self
    }

    pub fn proj_g(&self, x: &Mat) -> Mat {
        self.sub.algebra_project(&self.ambient.algebra_project(x))
    }

    pub fn proj_m(&self, x: &Mat) -> Mat {
        let a = self.ambient.algebra_project(x);
        &a - &self.sub.algebra_project(&a)
    }

    fn initial_guess(&self, u: &Mat) -> Result<Mat, ProximityError> {
        match self.kind {
            SplittingKind::UnitaryInGeneralLinear => u.polar_unitary().map_err(outside),
            SplittingKind::TorusInUnitary => {
                let phases: Vec<C64> = (0..u.dim())
                    .map(|i| {
                        let z = u.get(i, i);
                        if z.norm() > 0.0 { z / z.norm() } else { C64::new(1.0, 0.0) }
                    })
                    .collect();
                Ok(Mat::from_diagonal(&phases))
            }
            SplittingKind::BlockInUnitary => {
                let mut g = Mat::zeros(u.dim());
                for (s, e) in self.sub.blocks() {
                    let block = Mat::from_fn(e - s, |i, j| u.get(s + i, s + j));
                    let q = block.polar_unitary().map_err(outside)?;
                    for i in 0..e - s {
                        for j in 0..e - s {
                            g.set(s + i, s + j, q.get(i, j));
                        }
                    }
                }
                Ok(g)
            }
        }
    }

    /// The `G`-component of `u` with any complement part discarded.
    pub fn subgroup_component(&self, u: &Mat) -> Result<Mat, ProximityError> {
        Ok(self.project(u)?.g)
    }
}

impl Tube for Splitting {
    fn ambient(&self) -> &AmbientSpace {
        &self.ambient
    }

    fn tube_radius(&self) -> f64 {
        self.tube_radius
    }

    /// Alternating refinement `g ← g·exp(proj_g(log(g⁻¹u)))` from a
    /// polar-type initial guess.
    fn project(&self, u: &Mat) -> Result<Projection, ProximityError> {
        if u.dim() != self.ambient.dim() {
            return Err(SpaceError::WrongDimension { expected: self.ambient.dim(), got: u.dim() }.into());
        }
        let mut g = self.initial_guess(u)?;
        for iterations in 0..=MAX_PROJ_ITER {
            let w = g.solve(u).and_then(|x| x.log()).map_err(outside)?;
            let along = self.proj_g(&w);
            if along.opnorm() <= PROJ_TOL {
                let w_norm = w.opnorm();
                if w_norm > self.tube_radius {
                    return Err(outside(format!("complement norm {w_norm:e} > radius {:e}", self.tube_radius)));
                }
                return Ok(Projection { g, w, iterations });
            }
            g = &g * &along.exp()?;
        }
        Err(outside(format!("no convergence in {MAX_PROJ_ITER} refinement steps")))
    }

    fn reference_jordan(&self) -> Option<usize> {
        match self.kind {
            SplittingKind::TorusInUnitary => Some(1),
            _ => None,
        }
    }

    fn sample_subgroup(&self, order: usize, rng: &mut ChaCha8Rng) -> Result<Option<AlmostMorphism>, ProximityError> {
        if order == 0 {
            return Ok(None);
        }
        let n = self.ambient.dim();
        let rho = match self.kind {
            SplittingKind::TorusInUnitary => {
                let exponents: Vec<i64> =
                    (0..n).map(|i| if i == 0 { 1 } else { rng.random_range(0..order as i64) }).collect();
                cyclic_diagonal(order, &exponents, self.ambient.clone())?
            }
            SplittingKind::UnitaryInGeneralLinear | SplittingKind::BlockInUnitary => {
                let block = self.sub.blocks().into_iter().find(|(s, e)| e - s >= 2);
                let Some((start, _)) = block else {
                    let exponents: Vec<i64> =
                        (0..n).map(|i| if i == 0 { 1 } else { rng.random_range(0..order as i64) }).collect();
                    return Ok(Some(cyclic_diagonal(order, &exponents, self.ambient.clone())?));
                };
                let spec = two_dimensional_specs(order).choose(rng).cloned().expect("cyclic always available");
                let base = standard_representation(&spec)?;
                let embedded = base
                    .values()
                    .iter()
                    .map(|v| {
                        let mut m = Mat::identity(n);
                        for i in 0..2 {
                            for j in 0..2 {
                                m.set(start + i, start + j, v.get(i, j));
                            }
                        }
                        m
                    })
                    .collect();
                let rho = AlmostMorphism::new(base.domain().clone(), self.ambient.clone(), embedded)?;
                let twist = self.sub.algebra_project(&rand_skew_hermitian(n, 1.0, rng)).exp()?;
                rho.conjugated(&twist)?
            }
        };
        Ok(Some(rho))
    }

    fn describe(&self) -> String {
        format!("{:?} ({} in {})", self.kind, self.sub.kind.name(), self.ambient.kind.name())
    }
}

/// Catalog groups of the given order with a faithful 2-dimensional
/// unitary representation.
fn two_dimensional_specs(order: usize) -> Vec<String> {
    let mut specs = vec![format!("cyclic:{order}")];
    if order.is_multiple_of(2) && order >= 4 {
        specs.push(format!("dihedral:{}", order / 2));
    }
    if order == 8 {
        specs.push("quaternion8".into());
    }
    specs
}

/// A finite subgroup `G` of the ambient group, given as the image of an
/// exact faithful representation. Its tube is the union of balls
/// `g·exp(W)` around the elements.
#[derive(Debug, Clone)]
pub struct FiniteSubgroupTube {
    rep: AlmostMorphism,
    tube_radius: f64,
}

impl FiniteSubgroupTube {
    pub fn new(rep: AlmostMorphism, tube_radius: f64) -> Result<Self, ProximityError> {
        let d = defect(&rep);
        if d > crate::morphism::HOMOMORPHISM_TOL {
            return Err(MorphismError::NotAHomomorphism { defect: d }.into());
        }
        if !kernel(&rep, None)?.is_trivial() {
            return Err(ProximityError::Invalid("finite subgroup tube needs a faithful representation".into()));
        }
        Ok(FiniteSubgroupTube { rep, tube_radius })
    }

    pub fn from_spec(spec: &str, tube_radius: f64) -> Result<Self, ProximityError> {
        Self::new(standard_representation(spec)?, tube_radius)
    }

    pub fn representation(&self) -> &AlmostMorphism {
        &self.rep
    }
}

impl Tube for FiniteSubgroupTube {
    fn ambient(&self) -> &AmbientSpace {
        self.rep.space()
    }

    fn tube_radius(&self) -> f64 {
        self.tube_radius
    }

    fn project(&self, u: &Mat) -> Result<Projection, ProximityError> {
        let space = self.rep.space();
        let mut best: Option<(f64, &Mat)> = None;
        for g in self.rep.values() {
            let d = space.dist(g, u)?;
            if best.is_none_or(|(bd, _)| d < bd) {
                best = Some((d, g));
            }
        }
        let g = best.expect("nonempty group").1.clone();
        let w = g.solve(u).and_then(|x| x.log()).map_err(outside)?;
        let w_norm = w.opnorm();
        if w_norm > self.tube_radius {
            return Err(outside(format!("complement norm {w_norm:e} > radius {:e}", self.tube_radius)));
        }
        Ok(Projection { g, w, iterations: 0 })
    }

    fn reference_jordan(&self) -> Option<usize> {
        self.rep.domain().jordan_constant(DEFAULT_CAP).ok()
    }

    fn sample_subgroup(&self, order: usize, rng: &mut ChaCha8Rng) -> Result<Option<AlmostMorphism>, ProximityError> {
        let subgroups = self.rep.domain().all_subgroups(DEFAULT_CAP)?;
        let candidates: Vec<_> = subgroups.iter().filter(|h| h.order() == order).collect();
        match candidates.choose(rng) {
            Some(h) => Ok(Some(self.rep.restrict(h)?)),
            None => Ok(None),
        }
    }

    fn describe(&self) -> String {
        format!("finite subgroup {} in {}", self.rep.domain().label().unwrap_or("G"), self.rep.space().kind.name())
    }
}

/// Tube description used by configuration files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TubeSpec {
    UnitaryInGl { n: usize, radius: Option<f64> },
    Torus { n: usize, radius: Option<f64> },
    Block { partition: Vec<usize>, radius: Option<f64> },
    Finite { group: String, radius: Option<f64> },
}

impl TubeSpec {
    pub fn build(&self) -> Result<Box<dyn Tube>, ProximityError> {
        let check = |n: usize| {
            if n == 0 { Err(ProximityError::Invalid("n must be positive".into())) } else { Ok(()) }
        };
        Ok(match self {
            TubeSpec::UnitaryInGl { n, radius } => {
                check(*n)?;
                let s = Splitting::unitary_in_general_linear(*n);
                let r = radius.unwrap_or(s.tube_radius);
                Box::new(s.with_radius(r))
            }
            TubeSpec::Torus { n, radius } => {
                check(*n)?;
                let s = Splitting::torus_in_unitary(*n);
                let r = radius.unwrap_or(s.tube_radius);
                Box::new(s.with_radius(r))
            }
            TubeSpec::Block { partition, radius } => {
                if partition.is_empty() || partition.contains(&0) {
                    return Err(ProximityError::Invalid("partition must be nonempty with positive parts".into()));
                }
                let s = Splitting::block_in_unitary(partition.clone());
                let r = radius.unwrap_or(s.tube_radius);
                Box::new(s.with_radius(r))
            }
            TubeSpec::Finite { group, radius } => Box::new(FiniteSubgroupTube::from_spec(group, radius.unwrap_or(0.2))?),
        })
    }
}

pub fn project_to_subgroup(tube: &dyn Tube, u: &Mat) -> Result<(Mat, Mat), ProximityError> {
    let p = tube.project(u)?;
    Ok((p.g, p.w))
}

/// Projects every value of `f` into the subgroup, then repairs inside it.
/// `moved` in the report is measured from `f` itself.
pub fn morphism_into_subgroup(
    s: &Splitting,
    f: &AlmostMorphism,
    opts: &RepairOptions,
) -> Result<RepairReport, ProximityError> {
    let projected = f.values().iter().map(|u| s.subgroup_component(u)).collect::<Result<Vec<_>, _>>()?;
    let inside = AlmostMorphism::new(f.domain().clone(), s.sub.clone().with_tol(1e-10), projected)?;
    let mut report = repair(&inside, opts)?;
    report.moved = dist_sup(f, &report.final_map)?;
    let d = defect(f);
    report.stability_ratio = (d > 0.0).then(|| report.moved / d);
    Ok(report)
}

/// `max(sup_a inf_b d(a,b), sup_b inf_a d(a,b))`.
pub fn hausdorff(space: &AmbientSpace, a: &[Mat], b: &[Mat]) -> Result<f64, ProximityError> {
    if a.is_empty() || b.is_empty() {
        return Err(ProximityError::EmptySet);
    }
    let mut d = vec![vec![0.0; b.len()]; a.len()];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            d[i][j] = space.dist(x, y)?;
        }
    }
    let forward = d.iter().map(|row| row.iter().copied().fold(f64::INFINITY, f64::min)).fold(0.0, f64::max);
    let backward =
        (0..b.len()).map(|j| d.iter().map(|row| row[j]).fold(f64::INFINITY, f64::min)).fold(0.0, f64::max);
    Ok(forward.max(backward))
}

#[derive(Debug, Clone, Serialize)]
pub struct ApproximateSubgroup {
    /// Domain modulo the kernel of the repaired map.
    pub quotient: FiniteGroup,
    /// One repaired value per coset.
    pub image: Vec<Mat>,
    /// Hausdorff distance between the images of the input and the repaired map.
    pub distance: f64,
    pub repair: RepairReport,
}

pub fn approximate_subgroup(f: &AlmostMorphism, opts: &RepairOptions) -> Result<ApproximateSubgroup, ProximityError> {
    let report = repair(f, opts)?;
    let repaired = &report.final_map;
    let ker = kernel(repaired, None)?;
    let quotient = f.domain().quotient(&ker)?;
    let (_, reps) = f.domain().coset_labels(&ker);
    let image: Vec<Mat> = reps.iter().map(|&r| repaired.value(r).clone()).collect();
    let distance = hausdorff(f.space(), f.values(), &image)?;
    Ok(ApproximateSubgroup { quotient, image, distance, repair: report })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerConfig {
    pub orders: Vec<usize>,
    pub eps: f64,
    pub trials_per_order: usize,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleStatus {
    Sampled,
    /// The sampler has no subgroup of the requested order.
    Unavailable,
    /// The repaired subgroup left the radius-`r` tube.
    Filtered,
    /// A pipeline stage failed; the message names it.
    Skipped(String),
}

#[derive(Debug, Clone, Serialize)]
pub struct SampleRecord {
    pub order: usize,
    pub trial: usize,
    pub defect_in: Option<f64>,
    pub repair_iterations: Option<usize>,
    pub max_dist_to_subgroup: Option<f64>,
    pub recovered_order: Option<usize>,
    pub abelian: Option<bool>,
    pub min_index: Option<usize>,
    pub status: SampleStatus,
}

#[derive(Debug, Clone, Serialize)]
pub struct Witness {
    pub order: usize,
    pub trial: usize,
    pub min_index: usize,
    pub group: FiniteGroup,
    pub elements: Vec<Mat>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RelJordanReport {
    pub tube: String,
    pub samples: usize,
    pub unavailable: usize,
    pub filtered: usize,
    pub skipped: usize,
    pub max_min_index: usize,
    pub witness: Option<Witness>,
    pub radius: f64,
    pub reference_jordan: Option<usize>,
    /// No subgroup made it through the pipeline; `max_min_index` is 1 by
    /// convention.
    pub degenerate: bool,
    pub records: Vec<SampleRecord>,
}

struct TrialOutcome {
    record: SampleRecord,
    witness: Option<(FiniteGroup, Vec<Mat>)>,
}

fn blank_record(order: usize, trial: usize, status: SampleStatus) -> SampleRecord {
    SampleRecord {
        order,
        trial,
        defect_in: None,
        repair_iterations: None,
        max_dist_to_subgroup: None,
        recovered_order: None,
        abelian: None,
        min_index: None,
        status,
    }
}

fn run_trial(tube: &dyn Tube, cfg: &SamplerConfig, seed: u64, order: usize, trial: usize) -> TrialOutcome {
    let skipped = |stage: &str, e: &dyn std::fmt::Display| TrialOutcome {
        record: blank_record(order, trial, SampleStatus::Skipped(format!("{stage}: {e}"))),
        witness: None,
    };
    let mut rng = stream_rng(seed, "rel-jordan", &[order as u64, trial as u64]);
    let rho = match tube.sample_subgroup(order, &mut rng) {
        Ok(Some(rho)) => rho,
        Ok(None) => return TrialOutcome { record: blank_record(order, trial, SampleStatus::Unavailable), witness: None },
        Err(e) => return skipped("sample", &e),
    };
    let psi = match perturb(&rho, cfg.eps, &mut rng) {
        Ok(psi) => psi,
        Err(e) => return skipped("perturb", &e),
    };
    let report = match repair(&psi, &RepairOptions::default()) {
        Ok(r) => r,
        Err(e) => return skipped("repair", &e),
    };
    let space = tube.ambient();
    let image = match distinct_values(report.final_map.values(), space, IMAGE_MATCH_TOL) {
        Ok(v) => v,
        Err(e) => return skipped("image", &e),
    };
    let mut record = blank_record(order, trial, SampleStatus::Sampled);
    record.defect_in = Some(report.defect_in());
    record.repair_iterations = Some(report.iterations);

    let mut far = 0.0f64;
    for u in &image {
        match tube.dist_to_subgroup(u) {
            Ok(d) => far = far.max(d),
            Err(_) => far = f64::INFINITY,
        }
    }
    record.max_dist_to_subgroup = Some(far);
    if far > cfg.radius {
        record.status = SampleStatus::Filtered;
        return TrialOutcome { record, witness: None };
    }
    let (group, _) = match recover_abstract_group(&image, space, IMAGE_MATCH_TOL) {
        Ok(x) => x,
        Err(e) => return skipped("recover", &e),
    };
    let min_index = match group.min_abelian_normal_index(DEFAULT_CAP) {
        Ok(m) => m,
        Err(e) => return skipped("jordan", &e),
    };
    record.recovered_order = Some(group.order());
    record.abelian = Some(group.is_commutative());
    record.min_index = Some(min_index);
    TrialOutcome { record, witness: Some((group, image)) }
}

/// Lower-bound estimate of the relative Jordan constant of the tube's
/// subgroup: the largest minimal abelian-normal index among genuine finite
/// subgroups of the ambient group found within `cfg.radius` of it.
pub fn relative_jordan(tube: &dyn Tube, cfg: &SamplerConfig, seed: u64) -> Result<RelJordanReport, ProximityError> {
    if !(cfg.eps >= 0.0) || !(cfg.radius > 0.0) {
        return Err(ProximityError::Invalid("sampler needs eps >= 0 and radius > 0".into()));
    }
    let jobs: Vec<(usize, usize)> =
        cfg.orders.iter().flat_map(|&m| (0..cfg.trials_per_order).map(move |t| (m, t))).collect();
    let outcomes: Vec<TrialOutcome> = jobs.par_iter().map(|&(m, t)| run_trial(tube, cfg, seed, m, t)).collect();

    let mut report = RelJordanReport {
        tube: tube.describe(),
        samples: 0,
        unavailable: 0,
        filtered: 0,
        skipped: 0,
        max_min_index: 1,
        witness: None,
        radius: cfg.radius,
        reference_jordan: tube.reference_jordan(),
        degenerate: false,
        records: Vec::with_capacity(outcomes.len()),
    };
    for outcome in outcomes {
        let rec = &outcome.record;
        match &rec.status {
            SampleStatus::Sampled => {
                report.samples += 1;
                let idx = rec.min_index.expect("sampled records carry an index");
                if report.witness.is_none() || idx > report.max_min_index {
                    report.max_min_index = report.max_min_index.max(idx);
                    let (group, elements) = outcome.witness.clone().expect("sampled records carry a witness");
                    report.witness = Some(Witness { order: rec.order, trial: rec.trial, min_index: idx, group, elements });
                }
            }
            SampleStatus::Unavailable => report.unavailable += 1,
            SampleStatus::Filtered => report.filtered += 1,
            SampleStatus::Skipped(_) => report.skipped += 1,
        }
        report.records.push(outcome.record);
    }
    report.degenerate = report.samples == 0;
    Ok(report)
}
