//! Ambient matrix Lie groups: membership, Lie-algebra projectors, metrics,
//! adjoint action and ad-bound estimates.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matcore::{Mat, MatError, C64};

pub const DEFAULT_MEMBERSHIP_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpaceError {
    #[error(transparent)]
    Mat(#[from] MatError),
    #[error("sample is empty")]
    EmptySample,
    #[error("matrix has dimension {got}, space expects {expected}")]
    WrongDimension { expected: usize, got: usize },
    #[error("invalid space description: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum AmbientKind {
    GeneralLinear { n: usize },
    Unitary { n: usize },
    SpecialUnitary { n: usize },
    DiagonalTorus { n: usize },
    BlockUnitary { partition: Vec<usize> },
}

impl AmbientKind {
    pub fn dim(&self) -> usize {
        match self {
            AmbientKind::GeneralLinear { n }
            | AmbientKind::Unitary { n }
            | AmbientKind::SpecialUnitary { n }
            | AmbientKind::DiagonalTorus { n } => *n,
            AmbientKind::BlockUnitary { partition } => partition.iter().sum(),
        }
    }

    pub fn is_unitary_type(&self) -> bool {
        !matches!(self, AmbientKind::GeneralLinear { .. })
    }

    pub fn name(&self) -> &'static str {
        match self {
            AmbientKind::GeneralLinear { .. } => "general_linear",
            AmbientKind::Unitary { .. } => "unitary",
            AmbientKind::SpecialUnitary { .. } => "special_unitary",
            AmbientKind::DiagonalTorus { .. } => "diagonal_torus",
            AmbientKind::BlockUnitary { .. } => "block_unitary",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    /// `d(a, b) = ‖a⁻¹b − I‖_op`.
    LeftInvariantChordal,
    /// `d(a, b) = ‖a − b‖_op`; bi-invariant on unitary groups.
    BiInvariantChordal,
}

/// A concrete matrix Lie group together with its metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpaceJson", into = "SpaceJson")]
pub struct AmbientSpace {
    pub kind: AmbientKind,
    pub metric: MetricKind,
    pub membership_tol: f64,
}

impl AmbientSpace {
    /// Space with the default metric for its kind.
    pub fn new(kind: AmbientKind) -> Self {
        let metric = if kind.is_unitary_type() {
            MetricKind::BiInvariantChordal
        } else {
            MetricKind::LeftInvariantChordal
        };
        AmbientSpace { kind, metric, membership_tol: DEFAULT_MEMBERSHIP_TOL }
    }

    pub fn general_linear(n: usize) -> Self {
        Self::new(AmbientKind::GeneralLinear { n })
    }

    pub fn unitary(n: usize) -> Self {
        Self::new(AmbientKind::Unitary { n })
    }

    pub fn special_unitary(n: usize) -> Self {
        Self::new(AmbientKind::SpecialUnitary { n })
    }

    pub fn diagonal_torus(n: usize) -> Self {
        Self::new(AmbientKind::DiagonalTorus { n })
    }

    pub fn block_unitary(partition: Vec<usize>) -> Self {
        Self::new(AmbientKind::BlockUnitary { partition })
    }

    pub fn with_metric(mut self, metric: MetricKind) -> Self {
        self.metric = metric;
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.membership_tol = tol;
        self
    }

    pub fn dim(&self) -> usize {
        self.kind.dim()
    }

    fn check_dim(&self, x: &Mat) -> Result<(), SpaceError> {
        if x.dim() != self.dim() {
            return Err(SpaceError::WrongDimension { expected: self.dim(), got: x.dim() });
        }
        Ok(())
    }

    /// Block ranges `[start, end)` for block-structured kinds; one block
    /// per coordinate for the torus, a single block otherwise.
    pub fn blocks(&self) -> Vec<(usize, usize)> {
        match &self.kind {
            AmbientKind::BlockUnitary { partition } => {
                let mut start = 0;
                partition
                    .iter()
                    .map(|&len| {
                        let r = (start, start + len);
                        start += len;
                        r
                    })
                    .collect()
            }
            AmbientKind::DiagonalTorus { n } => (0..*n).map(|i| (i, i + 1)).collect(),
            _ => vec![(0, self.dim())],
        }
    }

    fn block_of(&self) -> Vec<usize> {
        let mut owner = vec![0; self.dim()];
        for (b, (s, e)) in self.blocks().into_iter().enumerate() {
            owner[s..e].iter_mut().for_each(|o| *o = b);
        }
        owner
    }

    /// Idempotent linear projector of `gl(n, ℂ)` onto the Lie algebra.
    pub fn algebra_project(&self, x: &Mat) -> Mat {
        match &self.kind {
            AmbientKind::GeneralLinear { .. } => x.clone(),
            AmbientKind::Unitary { .. } => x.skew_hermitian_part(),
            AmbientKind::SpecialUnitary { n } => {
                let s = x.skew_hermitian_part();
                let shift = s.trace() / C64::new(*n as f64, 0.0);
                &s - &Mat::identity(*n).scale_complex(shift)
            }
            AmbientKind::DiagonalTorus { .. } | AmbientKind::BlockUnitary { .. } => {
                let s = x.skew_hermitian_part();
                let owner = self.block_of();
                Mat::from_fn(self.dim(), |i, j| {
                    if owner[i] == owner[j] {
                        s.get(i, j)
                    } else {
                        C64::new(0.0, 0.0)
                    }
                })
            }
        }
    }

    /// Whether `u` satisfies the defining relations to `membership_tol`.
    pub fn contains(&self, u: &Mat) -> bool {
        if u.dim() != self.dim() || !u.is_finite() {
            return false;
        }
        let tol = self.membership_tol;
        let unitary = || (&(u * &u.adjoint()) - &Mat::identity(u.dim())).opnorm() <= tol;
        match &self.kind {
            AmbientKind::GeneralLinear { .. } => u.sigma_min() > tol,
            AmbientKind::Unitary { .. } => unitary(),
            AmbientKind::SpecialUnitary { .. } => {
                unitary() && (u.determinant() - C64::new(1.0, 0.0)).norm() <= tol
            }
            AmbientKind::DiagonalTorus { .. } | AmbientKind::BlockUnitary { .. } => {
                let owner = self.block_of();
                let n = self.dim();
                let off_block = (0..n)
                    .flat_map(|i| (0..n).map(move |j| (i, j)))
                    .filter(|&(i, j)| owner[i] != owner[j])
                    .map(|(i, j)| u.get(i, j).norm())
                    .fold(0.0, f64::max);
                off_block <= tol && unitary()
            }
        }
    }

    pub fn dist(&self, a: &Mat, b: &Mat) -> Result<f64, SpaceError> {
        self.check_dim(a)?;
        self.check_dim(b)?;
        match self.metric {
            MetricKind::BiInvariantChordal => Ok((a - b).opnorm()),
            MetricKind::LeftInvariantChordal => {
                let ainv_b = a.solve(b)?;
                Ok((&ainv_b - &Mat::identity(a.dim())).opnorm())
            }
        }
    }

    /// Distance to the identity.
    pub fn dist_to_identity(&self, a: &Mat) -> Result<f64, SpaceError> {
        self.dist(&Mat::identity(self.dim()), a)
    }
}

/// `Ad_g(x) = g·x·g⁻¹`.
pub fn adjoint_action(g: &Mat, x: &Mat) -> Result<Mat, SpaceError> {
    if g.dim() != x.dim() {
        return Err(SpaceError::WrongDimension { expected: g.dim(), got: x.dim() });
    }
    Ok(&(g * x) * &g.inv()?)
}

/// Upper bound `max_g ‖g‖·‖g⁻¹‖` on the operator norms of `Ad_g` over the
/// sample.
pub fn ad_bound(sample: &[Mat]) -> Result<f64, SpaceError> {
    if sample.is_empty() {
        return Err(SpaceError::EmptySample);
    }
    let mut bound = 0.0f64;
    for g in sample {
        let s = g.singular_values();
        let (max, min) = (s[0], *s.last().unwrap());
        if !(min > 0.0) || g.inv().is_err() {
            return Err(MatError::Singular { sigma_min: min }.into());
        }
        bound = bound.max(max / min);
    }
    Ok(bound)
}

/// A finite subset of an ambient group together with its ad-bound.
#[derive(Debug, Clone)]
pub struct AdBoundedSample {
    pub elements: Vec<Mat>,
    pub bound: f64,
}

impl AdBoundedSample {
    pub fn new(elements: Vec<Mat>) -> Result<Self, SpaceError> {
        if let Some(first) = elements.first() {
            let n = first.dim();
            if let Some(bad) = elements.iter().find(|m| m.dim() != n) {
                return Err(SpaceError::WrongDimension { expected: n, got: bad.dim() });
            }
        }
        let bound = ad_bound(&elements)?;
        Ok(AdBoundedSample { elements, bound })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SpaceJson {
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    partition: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    metric: Option<MetricKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    tol: Option<f64>,
}

impl TryFrom<SpaceJson> for AmbientSpace {
    type Error = SpaceError;

    fn try_from(j: SpaceJson) -> Result<Self, Self::Error> {
        let need_n = || {
            j.n.filter(|&n| n > 0)
                .ok_or_else(|| SpaceError::Invalid(format!("kind {:?} requires positive \"n\"", j.kind)))
        };
        let kind = match j.kind.as_str() {
            "general_linear" => AmbientKind::GeneralLinear { n: need_n()? },
            "unitary" => AmbientKind::Unitary { n: need_n()? },
            "special_unitary" => AmbientKind::SpecialUnitary { n: need_n()? },
            "diagonal_torus" => AmbientKind::DiagonalTorus { n: need_n()? },
            "block_unitary" => {
                let partition = j
                    .partition
                    .clone()
                    .filter(|p| !p.is_empty() && p.iter().all(|&b| b > 0))
                    .ok_or_else(|| SpaceError::Invalid("block_unitary requires a positive \"partition\"".into()))?;
                if let Some(n) = j.n {
                    if n != partition.iter().sum::<usize>() {
                        return Err(SpaceError::Invalid("\"n\" disagrees with \"partition\"".into()));
                    }
                }
                AmbientKind::BlockUnitary { partition }
            }
            other => return Err(SpaceError::Invalid(format!("unknown kind {other:?}"))),
        };
        let mut space = AmbientSpace::new(kind);
        if let Some(metric) = j.metric {
            space.metric = metric;
        }
        if let Some(tol) = j.tol {
            if !(tol >= 0.0) {
                return Err(SpaceError::Invalid("\"tol\" must be nonnegative".into()));
            }
            space.membership_tol = tol;
        }
        Ok(space)
    }
}

impl From<AmbientSpace> for SpaceJson {
    fn from(s: AmbientSpace) -> Self {
        let partition = match &s.kind {
            AmbientKind::BlockUnitary { partition } => Some(partition.clone()),
            _ => None,
        };
        SpaceJson {
            kind: s.kind.name().to_string(),
            n: Some(s.dim()),
            partition,
            metric: Some(s.metric),
            tol: Some(s.membership_tol),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::{rand_hermitian, rand_skew_hermitian};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn all_kinds() -> Vec<AmbientSpace> {
        vec![
            AmbientSpace::general_linear(3),
            AmbientSpace::unitary(3),
            AmbientSpace::special_unitary(3),
            AmbientSpace::diagonal_torus(3),
            AmbientSpace::block_unitary(vec![2, 1]),
        ]
    }

    fn random_matrix(rng: &mut ChaCha8Rng, n: usize) -> Mat {
        &rand_hermitian(n, 1.0, rng) + &rand_skew_hermitian(n, 0.7, rng)
    }

    #[test]
    fn projector_is_idempotent() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for space in all_kinds() {
            for _ in 0..20 {
                let x = random_matrix(&mut rng, 3);
                let p = space.algebra_project(&x);
                assert!((&space.algebra_project(&p) - &p).max_abs() <= 1e-14, "{:?}", space.kind);
            }
        }
    }

    #[test]
    fn exp_of_projection_is_member() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for space in all_kinds().into_iter().filter(|s| s.kind.is_unitary_type()) {
            let strict = space.clone().with_tol(1e-10);
            for _ in 0..20 {
                let x = random_matrix(&mut rng, 3);
                assert!(strict.contains(&space.algebra_project(&x).exp().unwrap()), "{:?}", space.kind);
            }
        }
    }

    #[test]
    fn membership_rejects_non_members() {
        let d = Mat::from_real_diagonal(&[2.0, 1.0]);
        assert!(!AmbientSpace::unitary(2).contains(&d));
        assert!(AmbientSpace::general_linear(2).contains(&d));
        let swap = Mat::from_fn(2, |i, j| if i != j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) });
        assert!(AmbientSpace::unitary(2).contains(&swap));
        assert!(!AmbientSpace::diagonal_torus(2).contains(&swap));
        assert!(!AmbientSpace::special_unitary(2).contains(&swap));
        assert!(!AmbientSpace::unitary(3).contains(&swap));
    }

    #[test]
    fn adjoint_action_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = random_matrix(&mut rng, 2);
        assert!((&adjoint_action(&Mat::identity(2), &x).unwrap() - &x).max_abs() < 1e-15);
        let g = rand_skew_hermitian(2, 1.3, &mut rng).exp().unwrap();
        let y = adjoint_action(&g, &x).unwrap();
        assert!((y.fronorm() - x.fronorm()).abs() <= 1e-12);
        let s = rand_skew_hermitian(2, 0.4, &mut rng);
        let ys = adjoint_action(&g, &s).unwrap();
        assert!((&ys + &ys.adjoint()).max_abs() <= 1e-12);
        let e12 = Mat::unit(2, 0, 1);
        let got = adjoint_action(&Mat::from_real_diagonal(&[2.0, 1.0]), &e12).unwrap();
        assert!((&got - &e12.scale(2.0)).max_abs() < 1e-15);
    }

    #[test]
    fn ad_bound_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let unitaries: Vec<Mat> = (0..10).map(|_| rand_skew_hermitian(3, 2.0, &mut rng).exp().unwrap()).collect();
        assert!((ad_bound(&unitaries).unwrap() - 1.0).abs() <= 1e-12);
        assert!((ad_bound(&[Mat::from_real_diagonal(&[2.0, 1.0])]).unwrap() - 2.0).abs() < 1e-14);
        assert_eq!(ad_bound(&[]).unwrap_err(), SpaceError::EmptySample);
        assert!(ad_bound(&[Mat::zeros(2)]).is_err());
    }

    #[test]
    fn ad_bound_dominates_random_probes() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let g = &Mat::identity(3).scale(1.5) + &random_matrix(&mut rng, 3);
            let bound = ad_bound(std::slice::from_ref(&g)).unwrap();
            for _ in 0..100 {
                let x = random_matrix(&mut rng, 3);
                let ratio = adjoint_action(&g, &x).unwrap().fronorm() / x.fronorm();
                assert!(ratio <= bound * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn ad_bound_monotone_under_inclusion() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let sample: Vec<Mat> = (0..6).map(|_| &Mat::identity(2).scale(2.0) + &random_matrix(&mut rng, 2)).collect();
        for k in 1..sample.len() {
            assert!(ad_bound(&sample[..k]).unwrap() <= ad_bound(&sample[..k + 1]).unwrap());
        }
    }

    #[test]
    fn dist_examples() {
        let space = AmbientSpace::unitary(2);
        assert_eq!(space.dist(&Mat::identity(2), &Mat::identity(2)).unwrap(), 0.0);
        let theta = 0.7f64;
        let u = Mat::from_diagonal(&[C64::from_polar(1.0, theta), C64::new(1.0, 0.0)]);
        let want = (C64::from_polar(1.0, theta) - 1.0).norm();
        assert!((space.dist(&Mat::identity(2), &u).unwrap() - want).abs() < 1e-14);
        assert!(space.dist(&Mat::identity(3), &u).is_err());
    }

    #[test]
    fn metric_axioms_on_unitary_triples() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for space in [AmbientSpace::unitary(3), AmbientSpace::unitary(3).with_metric(MetricKind::LeftInvariantChordal)] {
            for _ in 0..1000 {
                let [a, b, c] = [0; 3].map(|_| rand_skew_hermitian(3, 2.5, &mut rng).exp().unwrap());
                let ab = space.dist(&a, &b).unwrap();
                assert!((ab - space.dist(&b, &a).unwrap()).abs() < 1e-12);
                assert!(ab <= space.dist(&a, &c).unwrap() + space.dist(&c, &b).unwrap() + 1e-12);
                assert!(space.dist(&a, &a).unwrap() < 1e-14);
            }
        }
    }

    #[test]
    fn invariance_of_metrics() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let left = AmbientSpace::general_linear(3);
        let bi = AmbientSpace::unitary(3);
        for _ in 0..50 {
            let g = &Mat::identity(3).scale(1.5) + &random_matrix(&mut rng, 3);
            let a = &Mat::identity(3).scale(2.0) + &random_matrix(&mut rng, 3);
            let b = &Mat::identity(3).scale(2.0) + &random_matrix(&mut rng, 3);
            let d = left.dist(&a, &b).unwrap();
            assert!((left.dist(&(&g * &a), &(&g * &b)).unwrap() - d).abs() <= 1e-12 * d.max(1.0));

            let u = rand_skew_hermitian(3, 2.0, &mut rng).exp().unwrap();
            let d = bi.dist(&a, &b).unwrap();
            assert!((bi.dist(&(&u * &a), &(&u * &b)).unwrap() - d).abs() <= 1e-12);
            assert!((bi.dist(&(&a * &u), &(&b * &u)).unwrap() - d).abs() <= 1e-12);
        }
    }

    #[test]
    fn json_round_trip_and_defaults() {
        let s: AmbientSpace = serde_json::from_str(r#"{"kind":"block_unitary","partition":[2,1]}"#).unwrap();
        assert_eq!(s, AmbientSpace::block_unitary(vec![2, 1]));
        let gl: AmbientSpace = serde_json::from_str(r#"{"kind":"general_linear","n":2}"#).unwrap();
        assert_eq!(gl.metric, MetricKind::LeftInvariantChordal);
        let text = serde_json::to_string(&AmbientSpace::unitary(2)).unwrap();
        assert_eq!(text, r#"{"kind":"unitary","n":2,"metric":"bi_invariant_chordal","tol":1e-8}"#);
        assert_eq!(serde_json::from_str::<AmbientSpace>(&text).unwrap(), AmbientSpace::unitary(2));
        assert!(serde_json::from_str::<AmbientSpace>(r#"{"kind":"orthogonal","n":2}"#).is_err());
        assert!(serde_json::from_str::<AmbientSpace>(r#"{"kind":"unitary"}"#).is_err());
    }
}
