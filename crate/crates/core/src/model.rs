//! Lattice model shared by every other module: parameters, lattice points,
//! walk paths with a fresh-site index, and the excited transition kernel.

use std::collections::HashMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("dimension must be at least 1, got {0}")]
    Dimension(usize),
    #[error("excitement parameter must lie in [0, 1], got {0}")]
    Beta(f64),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("{from} -> {to} is not a nearest-neighbour step")]
    NotNeighbour { from: LatticeVector, to: LatticeVector },
    #[error("step {0} is not a unit vector")]
    NotUnitStep(LatticeVector),
    #[error("excitement parameter {0} has no small exact rational form; pass it as p/q")]
    Inexact(f64),
}

/// Largest denominator accepted when recovering an exact β from a float.
const MAX_BETA_DENOM: i64 = 1 << 20;

/// Dimension `d` and excitement `β` of the walk.
///
/// β is kept both as a float and, when it has a small exact rational form,
/// as a ratio of integers. Exact enumeration requires the latter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    dim: usize,
    beta: f64,
    #[serde(skip)]
    beta_exact: Option<Ratio<i64>>,
}

impl ModelParams {
    pub fn new(dim: usize, beta: f64) -> Result<Self, ModelError> {
        if dim == 0 {
            return Err(ModelError::Dimension(dim));
        }
        if !(0.0..=1.0).contains(&beta) {
            return Err(ModelError::Beta(beta));
        }
        let beta_exact = Ratio::<i64>::approximate_float(beta)
            .filter(|r| *r.denom() <= MAX_BETA_DENOM && ratio_to_f64(r) == beta);
        Ok(Self {
            dim,
            beta,
            beta_exact,
        })
    }

    /// Parameters with β = `numer / denom` held exactly.
    pub fn with_rational(dim: usize, numer: i64, denom: i64) -> Result<Self, ModelError> {
        if dim == 0 {
            return Err(ModelError::Dimension(dim));
        }
        if denom <= 0 || numer < 0 || numer > denom {
            return Err(ModelError::Beta(numer as f64 / denom as f64));
        }
        let r = Ratio::new(numer, denom);
        Ok(Self {
            dim,
            beta: ratio_to_f64(&r),
            beta_exact: Some(r),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn beta_exact(&self) -> Option<Ratio<i64>> {
        self.beta_exact
    }

    pub fn require_exact(&self) -> Result<Ratio<i64>, ModelError> {
        self.beta_exact.ok_or(ModelError::Inexact(self.beta))
    }

    /// Integer form of the kernel: every probability is `numerator / denom`
    /// with a common `denom = 2d·q` for β = p/q.
    pub fn integer_kernel(&self) -> Result<IntegerKernel, ModelError> {
        let b = self.require_exact()?;
        let q = *b.denom();
        Ok(IntegerKernel {
            base: q,
            tilt: *b.numer(),
            denom: 2 * self.dim as i64 * q,
        })
    }

    /// Zero vector of this dimension.
    pub fn origin(&self) -> LatticeVector {
        LatticeVector::origin(self.dim)
    }

    /// All 2d unit steps, ordered `+e_1, -e_1, +e_2, -e_2, ...`.
    pub fn unit_steps(&self) -> Vec<LatticeVector> {
        (0..self.dim)
            .flat_map(|axis| {
                [1, -1]
                    .into_iter()
                    .map(move |s| LatticeVector::unit(self.dim, axis, s))
            })
            .collect()
    }
}

fn ratio_to_f64(r: &Ratio<i64>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// Kernel values as integer numerators over a common denominator.
///
/// An excited step with first-coordinate displacement `s ∈ {-1, 0, 1}` has
/// probability `(base + tilt·s) / denom`; a non-excited step `base / denom`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IntegerKernel {
    pub base: i64,
    pub tilt: i64,
    pub denom: i64,
}

impl IntegerKernel {
    #[inline]
    pub fn numerator(&self, first_coord_step: i32, excited: bool) -> i64 {
        if excited {
            self.base + self.tilt * first_coord_step as i64
        } else {
            self.base
        }
    }
}

/// A point of Z^d.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LatticeVector(Vec<i32>);

impl LatticeVector {
    pub fn new(coords: Vec<i32>) -> Self {
        Self(coords)
    }

    pub fn origin(dim: usize) -> Self {
        Self(vec![0; dim])
    }

    /// `sign · e_{axis+1}`.
    pub fn unit(dim: usize, axis: usize, sign: i32) -> Self {
        let mut v = vec![0; dim];
        v[axis] = sign;
        Self(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[i32] {
        &self.0
    }

    pub fn l1_norm(&self) -> u64 {
        self.0.iter().map(|c| c.unsigned_abs() as u64).sum()
    }

    pub fn is_unit(&self) -> bool {
        self.l1_norm() == 1
    }

    pub fn add(&self, other: &LatticeVector) -> LatticeVector {
        Self(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &LatticeVector) -> LatticeVector {
        Self(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    fn check_dim(&self, dim: usize) -> Result<(), ModelError> {
        if self.dim() == dim {
            Ok(())
        } else {
            Err(ModelError::DimensionMismatch {
                expected: dim,
                got: self.dim(),
            })
        }
    }
}

impl fmt::Debug for LatticeVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for LatticeVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// First-coordinate displacement of a nearest-neighbour step.
pub fn step_tilt(from: &LatticeVector, to: &LatticeVector) -> Result<i32, ModelError> {
    from.check_dim(to.dim())?;
    let step = to.sub(from);
    if !step.is_unit() {
        return Err(ModelError::NotNeighbour {
            from: from.clone(),
            to: to.clone(),
        });
    }
    Ok(step.0[0])
}

/// Numeric representation for kernel values: `f64` for sampling and bound
/// evaluation, [`BigRational`] for exact enumeration.
pub trait KernelScalar: Sized {
    fn kernel(params: &ModelParams, first_coord_step: i32, excited: bool) -> Result<Self, ModelError>;
}

impl KernelScalar for f64 {
    fn kernel(params: &ModelParams, s: i32, excited: bool) -> Result<Self, ModelError> {
        let two_d = 2.0 * params.dim as f64;
        Ok(if excited {
            (1.0 + params.beta * s as f64) / two_d
        } else {
            1.0 / two_d
        })
    }
}

impl KernelScalar for BigRational {
    fn kernel(params: &ModelParams, s: i32, excited: bool) -> Result<Self, ModelError> {
        let k = params.integer_kernel()?;
        Ok(BigRational::new(
            BigInt::from(k.numerator(s, excited)),
            BigInt::from(k.denom),
        ))
    }
}

/// Probability of stepping `from → to`: `(1 + β e_1·(to−from)) / 2d` when
/// the walker is excited, `1/2d` otherwise.
pub fn transition_probability<T: KernelScalar>(
    params: &ModelParams,
    from: &LatticeVector,
    to: &LatticeVector,
    excited: bool,
) -> Result<T, ModelError> {
    from.check_dim(params.dim)?;
    let s = step_tilt(from, to)?;
    T::kernel(params, s, excited)
}

/// Nearest-neighbour path with a value-keyed index of first visits.
///
/// Values are immutable; [`WalkPath::extend`] returns a new path.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WalkPath {
    sites: Vec<LatticeVector>,
    first_visit: HashMap<LatticeVector, usize>,
}

impl WalkPath {
    /// Zero-step path sitting at `start`.
    pub fn start_at(start: LatticeVector) -> Self {
        let mut first_visit = HashMap::new();
        first_visit.insert(start.clone(), 0);
        Self {
            sites: vec![start],
            first_visit,
        }
    }

    /// Path through `sites`, checked for the nearest-neighbour property.
    pub fn from_sites(sites: Vec<LatticeVector>) -> Result<Self, ModelError> {
        let mut iter = sites.into_iter();
        let first = iter.next().ok_or(ModelError::Dimension(0))?;
        let dim = first.dim();
        let mut path = Self::start_at(first);
        for site in iter {
            site.check_dim(dim)?;
            let step = site.sub(path.endpoint());
            path = path.extend(&step)?;
        }
        Ok(path)
    }

    pub fn sites(&self) -> &[LatticeVector] {
        &self.sites
    }

    /// Number of steps.
    pub fn len(&self) -> usize {
        self.sites.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn endpoint(&self) -> &LatticeVector {
        self.sites.last().expect("a path has at least one site")
    }

    pub fn contains(&self, site: &LatticeVector) -> bool {
        self.first_visit.contains_key(site)
    }

    pub fn visited(&self) -> impl Iterator<Item = &LatticeVector> {
        self.first_visit.keys()
    }

    pub fn visited_count(&self) -> usize {
        self.first_visit.len()
    }

    /// Whether the endpoint is visited for the first time.
    pub fn endpoint_is_fresh(&self) -> bool {
        self.first_visit[self.endpoint()] == self.len()
    }

    /// New path one step longer.
    pub fn extend(&self, step: &LatticeVector) -> Result<WalkPath, ModelError> {
        step.check_dim(self.endpoint().dim())?;
        if !step.is_unit() {
            return Err(ModelError::NotUnitStep(step.clone()));
        }
        let next = self.endpoint().add(step);
        let mut out = self.clone();
        out.first_visit.entry(next.clone()).or_insert(out.sites.len());
        out.sites.push(next);
        Ok(out)
    }

    /// Concatenation `self ∘ other`; `other` must start at this path's
    /// endpoint, which is counted once.
    pub fn concat(&self, other: &WalkPath) -> Result<WalkPath, ModelError> {
        if other.sites[0] != *self.endpoint() {
            return Err(ModelError::NotNeighbour {
                from: self.endpoint().clone(),
                to: other.sites[0].clone(),
            });
        }
        let mut out = self.clone();
        for site in &other.sites[1..] {
            out.first_visit.entry(site.clone()).or_insert(out.sites.len());
            out.sites.push(site.clone());
        }
        Ok(out)
    }
}

/// True iff `position` does not occur among the sites of `path` strictly
/// before its final index.
pub fn is_fresh(path: &WalkPath, position: &LatticeVector) -> bool {
    match path.first_visit.get(position) {
        None => true,
        Some(&i) => i == path.len(),
    }
}

/// Sum of a collection of kernel values, convenient for normalisation checks.
pub fn kernel_row_sum<T>(params: &ModelParams, from: &LatticeVector, excited: bool) -> Result<T, ModelError>
where
    T: KernelScalar + Zero,
{
    let mut total = T::zero();
    for step in params.unit_steps() {
        let to = from.add(&step);
        total = total + transition_probability::<T>(params, from, &to, excited)?;
    }
    Ok(total)
}

/// Float value of an exact rational, for reporting.
pub fn rational_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}
