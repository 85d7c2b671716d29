//! Dense states and local operators over small tensor-product spaces.

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, CVec, C64, ONE, ZERO};

/// Largest total Hilbert-space dimension accepted anywhere in the crate.
pub const MAX_TOTAL_DIM: usize = 1 << 14;

/// Default eigenvalue cutoff for ranks of trace-normalized reductions.
pub const RANK_TOL: f64 = 1e-9;

fn check_dims(dims: &[usize]) -> Result<usize> {
    if dims.is_empty() || dims.contains(&0) {
        return Err(Error::InvalidArgument(format!(
            "local dimensions must be positive and nonempty, got {dims:?}"
        )));
    }
    let mut total: usize = 1;
    for &d in dims {
        total = total.saturating_mul(d);
        if total > MAX_TOTAL_DIM {
            return Err(Error::TooLarge(total));
        }
    }
    Ok(total)
}

/// Pure state `|ψ⟩ ∈ ⊗ᵢ ℂ^{dᵢ}`, not necessarily normalized.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    dims: Vec<usize>,
    amps: CVec,
}

impl PureState {
    pub fn new(dims: Vec<usize>, amps: Vec<C64>) -> Result<Self> {
        let total = check_dims(&dims)?;
        if amps.len() != total {
            return Err(Error::DimensionMismatch {
                expected: format!("{total} amplitudes for dims {dims:?}"),
                found: format!("{}", amps.len()),
            });
        }
        if amps.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidArgument("non-finite amplitude".into()));
        }
        Ok(Self {
            dims,
            amps: CVec::from_vec(amps),
        })
    }

    pub(crate) fn from_parts(dims: Vec<usize>, amps: CVec) -> Self {
        debug_assert_eq!(dims.iter().product::<usize>(), amps.len());
        Self { dims, amps }
    }

    /// Computational basis state `|digits⟩`.
    pub fn basis(dims: &[usize], digits: &[usize]) -> Result<Self> {
        let total = check_dims(dims)?;
        if digits.len() != dims.len() || digits.iter().zip(dims).any(|(&k, &d)| k >= d) {
            return Err(Error::InvalidArgument(format!(
                "basis digits {digits:?} do not fit dims {dims:?}"
            )));
        }
        let index = digits.iter().zip(dims).fold(0, |acc, (&k, &d)| acc * d + k);
        let mut amps = vec![ZERO; total];
        amps[index] = ONE;
        Self::new(dims.to_vec(), amps)
    }

    /// `(|0…0⟩ + |1…1⟩)/√2` on n qubits.
    pub fn ghz(n: usize) -> Result<Self> {
        let dims = vec![2; n];
        let total = check_dims(&dims)?;
        let mut amps = vec![ZERO; total];
        let s = std::f64::consts::FRAC_1_SQRT_2;
        amps[0] = linalg::re(s);
        amps[total - 1] = linalg::re(s);
        Self::new(dims, amps)
    }

    /// Tensor product `self ⊗ other`.
    pub fn tensor(&self, other: &PureState) -> Result<Self> {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        check_dims(&dims)?;
        let amps = self.amps.kronecker(&other.amps);
        Ok(Self { dims, amps })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn num_sites(&self) -> usize {
        self.dims.len()
    }

    pub fn total_dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amps(&self) -> &CVec {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.norm()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.norm_squared()
    }

    pub fn is_normalized(&self, tol: f64) -> bool {
        (self.norm() - 1.0).abs() <= tol
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if n == 0.0 {
            return Err(Error::ZeroState);
        }
        Ok(Self {
            dims: self.dims.clone(),
            amps: self.amps.unscale(n),
        })
    }

    pub fn scaled(&self, s: C64) -> Self {
        Self {
            dims: self.dims.clone(),
            amps: self.amps.map(|z| z * s),
        }
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &PureState) -> C64 {
        linalg::inner(&self.amps, &other.amps)
    }

    pub fn distance(&self, other: &PureState) -> f64 {
        (&self.amps - &other.amps).norm()
    }

    /// `|ψ⟩⟨ψ|` as a global matrix.
    pub fn projector(&self) -> CMat {
        &self.amps * self.amps.adjoint()
    }

    fn require_nonzero(&self) -> Result<()> {
        if self.norm_sqr() == 0.0 {
            Err(Error::ZeroState)
        } else {
            Ok(())
        }
    }
}

/// Local operator `⊗ᵢ Aᵢ`, one square factor per site.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalOperator {
    factors: Vec<CMat>,
}

impl LocalOperator {
    pub fn new(factors: Vec<CMat>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::InvalidArgument(
                "operator needs at least one factor".into(),
            ));
        }
        for (i, f) in factors.iter().enumerate() {
            if f.nrows() != f.ncols() || f.nrows() == 0 {
                return Err(Error::InvalidArgument(format!(
                    "factor {i} is {}x{}, expected square",
                    f.nrows(),
                    f.ncols()
                )));
            }
        }
        let dims: Vec<usize> = factors.iter().map(|f| f.nrows()).collect();
        check_dims(&dims)?;
        Ok(Self { factors })
    }

    pub fn identity(dims: &[usize]) -> Result<Self> {
        check_dims(dims)?;
        Ok(Self {
            factors: dims.iter().map(|&d| linalg::identity(d)).collect(),
        })
    }

    /// Identity everywhere except `op` at `site`.
    pub fn single_site(dims: &[usize], site: usize, op: CMat) -> Result<Self> {
        if site >= dims.len() {
            return Err(Error::InvalidSites(format!("site {site} out of range")));
        }
        let mut id = Self::identity(dims)?;
        if op.nrows() != dims[site] || op.ncols() != dims[site] {
            return Err(Error::DimensionMismatch {
                expected: format!("{0}x{0} at site {site}", dims[site]),
                found: format!("{}x{}", op.nrows(), op.ncols()),
            });
        }
        id.factors[site] = op;
        Ok(id)
    }

    pub fn factors(&self) -> &[CMat] {
        &self.factors
    }

    pub fn factor(&self, site: usize) -> &CMat {
        &self.factors[site]
    }

    pub fn num_sites(&self) -> usize {
        self.factors.len()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.factors.iter().map(|f| f.nrows()).collect()
    }

    /// Full Kronecker product of the factors.
    pub fn to_matrix(&self) -> CMat {
        linalg::kron_all(&self.factors)
    }

    /// Factor-wise product `self · rhs`.
    pub fn compose(&self, rhs: &LocalOperator) -> Result<Self> {
        self.check_same_dims(rhs)?;
        Ok(Self {
            factors: self
                .factors
                .iter()
                .zip(&rhs.factors)
                .map(|(a, b)| a * b)
                .collect(),
        })
    }

    pub fn adjoint(&self) -> Self {
        Self {
            factors: self.factors.iter().map(|f| f.adjoint()).collect(),
        }
    }

    /// `A†A`, itself a local operator.
    pub fn gram(&self) -> Self {
        Self {
            factors: self.factors.iter().map(|f| f.adjoint() * f).collect(),
        }
    }

    /// Multiply by a scalar (absorbed into the first factor).
    pub fn scaled(&self, s: C64) -> Self {
        let mut factors = self.factors.clone();
        factors[0] *= s;
        Self { factors }
    }

    /// Sites whose factor has relative smallest singular value below `threshold`.
    pub fn singular_sites(&self, threshold: f64) -> Vec<usize> {
        self.factors
            .iter()
            .enumerate()
            .filter(|(_, f)| linalg::relative_sigma_min(f) < threshold)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn is_invertible(&self, threshold: f64) -> bool {
        self.singular_sites(threshold).is_empty()
    }

    /// Factor-wise inverse, if every factor is invertible.
    pub fn try_inverse(&self) -> Option<Self> {
        self.factors
            .iter()
            .map(|f| f.clone().try_inverse())
            .collect::<Option<Vec<_>>>()
            .map(|factors| Self { factors })
    }

    /// Worst unitarity defect over all factors of the global operator.
    pub fn unitary_defect(&self) -> f64 {
        linalg::unitary_defect(&self.to_matrix())
    }

    fn check_same_dims(&self, rhs: &LocalOperator) -> Result<()> {
        if self.dims() != rhs.dims() {
            return Err(Error::DimensionMismatch {
                expected: format!("{:?}", self.dims()),
                found: format!("{:?}", rhs.dims()),
            });
        }
        Ok(())
    }
}

/// Reduced density operator on a subset of sites.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    pub sites: Vec<usize>,
    pub dims: Vec<usize>,
    pub entries: CMat,
}

impl DensityMatrix {
    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn trace(&self) -> C64 {
        self.entries.trace()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        linalg::hermitian_eigenvalues(&self.entries)
    }

    /// Number of eigenvalues of `ρ / tr ρ` above `tol`.
    pub fn rank(&self, tol: f64) -> usize {
        let tr = self.trace().re;
        if tr <= 0.0 {
            return 0;
        }
        self.eigenvalues().iter().filter(|&&x| x / tr > tol).count()
    }

    /// `tr(ρ P)` for an operator on the kept sites.
    pub fn expectation(&self, op: &CMat) -> C64 {
        (&self.entries * op).trace()
    }
}

/// Kronecker product of two matrices (row-major, left operand most significant).
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    linalg::kron(a, b)
}

/// Apply `⊗ᵢ opᵢ` factor by factor, never forming the global matrix.
pub fn apply_local(op: &LocalOperator, state: &PureState) -> Result<PureState> {
    let dims = op.dims();
    if dims != state.dims {
        return Err(Error::DimensionMismatch {
            expected: format!("operator dims {dims:?}"),
            found: format!("state dims {:?}", state.dims),
        });
    }
    let mut cur: Vec<C64> = state.amps.iter().copied().collect();
    let mut next = vec![ZERO; cur.len()];
    let total = cur.len();
    for (site, m) in op.factors.iter().enumerate() {
        let d = dims[site];
        let inner: usize = dims[site + 1..].iter().product();
        let outer = total / (d * inner);
        for o in 0..outer {
            let base = o * d * inner;
            for r in 0..d {
                for t in 0..inner {
                    let mut acc = ZERO;
                    for k in 0..d {
                        acc += m[(r, k)] * cur[base + k * inner + t];
                    }
                    next[base + r * inner + t] = acc;
                }
            }
        }
        std::mem::swap(&mut cur, &mut next);
    }
    Ok(PureState::from_parts(
        state.dims.clone(),
        CVec::from_vec(cur),
    ))
}

/// Reduced density operator of `|ψ⟩⟨ψ|` on `keep_sites` (kept in ascending order).
pub fn partial_trace(state: &PureState, keep_sites: &[usize]) -> Result<DensityMatrix> {
    let n = state.num_sites();
    if keep_sites.is_empty() {
        return Err(Error::InvalidSites("no sites kept".into()));
    }
    let mut keep = keep_sites.to_vec();
    keep.sort_unstable();
    keep.dedup();
    if keep.len() != keep_sites.len() {
        return Err(Error::InvalidSites(format!(
            "duplicate sites in {keep_sites:?}"
        )));
    }
    if let Some(&bad) = keep.iter().find(|&&s| s >= n) {
        return Err(Error::InvalidSites(format!(
            "site {bad} out of range for {n} sites"
        )));
    }
    let dims = &state.dims;
    let keep_dims: Vec<usize> = keep.iter().map(|&s| dims[s]).collect();
    let dk: usize = keep_dims.iter().product();
    let de = state.total_dim() / dk;

    // Ψ[k, e] with k the kept multi-index and e the environment multi-index.
    let mut psi = CMat::zeros(dk, de);
    let mut digits = vec![0usize; n];
    for (idx, amp) in state.amps.iter().enumerate() {
        let mut rest = idx;
        for s in (0..n).rev() {
            digits[s] = rest % dims[s];
            rest /= dims[s];
        }
        let (mut k, mut e) = (0, 0);
        for s in 0..n {
            if keep.binary_search(&s).is_ok() {
                k = k * dims[s] + digits[s];
            } else {
                e = e * dims[s] + digits[s];
            }
        }
        psi[(k, e)] = *amp;
    }
    let entries = &psi * psi.adjoint();
    Ok(DensityMatrix {
        sites: keep,
        dims: keep_dims,
        entries,
    })
}

/// Rank of every single-site reduction.
pub fn reduced_ranks(state: &PureState, tol: f64) -> Result<Vec<usize>> {
    state.require_nonzero()?;
    (0..state.num_sites())
        .map(|s| partial_trace(state, &[s]).map(|rho| rho.rank(tol)))
        .collect()
}

pub fn is_fully_entangled(state: &PureState, tol: f64) -> Result<bool> {
    Ok(reduced_ranks(state, tol)? == state.dims)
}

/// Whether every single-site reduction is proportional to the identity.
pub fn is_critical(state: &PureState, tol: f64) -> Result<bool> {
    state.require_nonzero()?;
    let norm = state.norm_sqr();
    for s in 0..state.num_sites() {
        let rho = partial_trace(state, &[s])?;
        let d = rho.dim();
        let target = linalg::identity(d).scale(norm / d as f64);
        if linalg::max_abs_diff(&rho.entries, &target) > tol {
            return Ok(false);
        }
    }
    Ok(true)
}
