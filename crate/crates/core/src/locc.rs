//! Finite-round LOCC protocols as explicit outcome trees, and the one-site
//! singular branch analysis.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::{self, Strategy};
use crate::kraus::SepMap;
use crate::linalg::{self, CMat};
use crate::tensor::{self, LocalOperator, PureState};

/// Relative smallest singular value below which a factor counts as singular.
pub const SINGULAR_TOL: f64 = 1e-10;
pub const COMPLETENESS_TOL: f64 = 1e-10;
pub const UNITARY_TOL: f64 = 1e-10;

/// One measurement round: site `measuring_site` measures with
/// `measurement_ops`, and for outcome `i` every other site applies
/// `corrections[i][site]` (`None` means identity).
#[derive(Clone, Debug)]
pub struct LoccRound {
    pub measuring_site: usize,
    pub measurement_ops: Vec<CMat>,
    /// Empty, or one entry per outcome with one slot per site.
    pub corrections: Vec<Vec<Option<CMat>>>,
    /// Empty (all leaves), or one entry per outcome.
    pub children: Vec<Option<LoccRound>>,
}

impl LoccRound {
    pub fn new(measuring_site: usize, measurement_ops: Vec<CMat>) -> Self {
        Self {
            measuring_site,
            measurement_ops,
            corrections: Vec::new(),
            children: Vec::new(),
        }
    }

    pub fn with_children(mut self, children: Vec<Option<LoccRound>>) -> Self {
        self.children = children;
        self
    }

    pub fn with_corrections(mut self, corrections: Vec<Vec<Option<CMat>>>) -> Self {
        self.corrections = corrections;
        self
    }

    pub fn num_outcomes(&self) -> usize {
        self.measurement_ops.len()
    }

    pub fn child(&self, outcome: usize) -> Option<&LoccRound> {
        self.children.get(outcome).and_then(|c| c.as_ref())
    }

    /// `L_i = U⁽¹⁾ ⊗ … ⊗ P_i⁽ˢ⁾ ⊗ … ⊗ U⁽ⁿ⁾`.
    pub fn operator(&self, outcome: usize, dims: &[usize]) -> Result<LocalOperator> {
        let factors = dims
            .iter()
            .enumerate()
            .map(|(site, &d)| {
                if site == self.measuring_site {
                    return self.measurement_ops[outcome].clone();
                }
                self.corrections
                    .get(outcome)
                    .and_then(|row| row.get(site))
                    .and_then(|u| u.clone())
                    .unwrap_or_else(|| linalg::identity(d))
            })
            .collect();
        LocalOperator::new(factors)
    }

    fn validate(&self, dims: &[usize], path: &mut Vec<usize>) -> Result<()> {
        let n = dims.len();
        if self.measuring_site >= n {
            return Err(Error::InvalidSites(format!(
                "round at {path:?} measures site {} of {n}",
                self.measuring_site
            )));
        }
        let d = dims[self.measuring_site];
        if self.measurement_ops.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "round at {path:?} has no outcomes"
            )));
        }
        for p in &self.measurement_ops {
            if p.shape() != (d, d) {
                return Err(Error::DimensionMismatch {
                    expected: format!("{d}x{d} measurement operator"),
                    found: format!("{}x{}", p.nrows(), p.ncols()),
                });
            }
        }
        let sum = self
            .measurement_ops
            .iter()
            .fold(CMat::zeros(d, d), |acc, p| acc + p.adjoint() * p);
        let residual = linalg::max_abs_diff(&sum, &linalg::identity(d));
        if residual > COMPLETENESS_TOL {
            return Err(Error::Completeness {
                residual,
                context: format!("at round {path:?}"),
            });
        }
        let outcomes = self.num_outcomes();
        for (name, len) in [
            ("corrections", self.corrections.len()),
            ("children", self.children.len()),
        ] {
            if len != 0 && len != outcomes {
                return Err(Error::InvalidArgument(format!(
                    "round at {path:?} has {len} {name} for {outcomes} outcomes"
                )));
            }
        }
        for (outcome, row) in self.corrections.iter().enumerate() {
            if row.len() > n {
                return Err(Error::InvalidArgument(format!(
                    "round at {path:?} outcome {outcome} has {} correction slots",
                    row.len()
                )));
            }
            for (site, u) in row.iter().enumerate() {
                let Some(u) = u else { continue };
                if site == self.measuring_site {
                    continue;
                }
                if u.shape() != (dims[site], dims[site]) || linalg::unitary_defect(u) > UNITARY_TOL
                {
                    return Err(Error::NonUnitaryCorrection {
                        path: path.clone(),
                        outcome,
                        site,
                    });
                }
            }
        }
        for (outcome, child) in self.children.iter().enumerate() {
            if let Some(child) = child {
                path.push(outcome);
                child.validate(dims, path)?;
                path.pop();
            }
        }
        Ok(())
    }
}

/// A protocol on parties with local dimensions `dims`; `root = None` does nothing.
#[derive(Clone, Debug)]
pub struct LoccProtocol {
    pub dims: Vec<usize>,
    pub root: Option<LoccRound>,
}

/// One leaf of a protocol tree.
#[derive(Clone, Debug, Serialize)]
pub struct Branch {
    pub path: Vec<usize>,
    pub probability: f64,
    /// Renormalized output; `None` when the branch has zero norm.
    pub state: Option<PureState>,
}

impl LoccProtocol {
    pub fn new(dims: Vec<usize>, root: Option<LoccRound>) -> Result<Self> {
        let p = Self { dims, root };
        p.validate()?;
        Ok(p)
    }

    pub fn empty(dims: Vec<usize>) -> Self {
        Self { dims, root: None }
    }

    pub fn validate(&self) -> Result<()> {
        match &self.root {
            Some(r) => r.validate(&self.dims, &mut Vec::new()),
            None => Ok(()),
        }
    }

    /// Every leaf with its accumulated operator `K = L_{i_m} ⋯ L_{i_1}`.
    pub fn leaves(&self) -> Result<Vec<(Vec<usize>, LocalOperator)>> {
        let mut out = Vec::new();
        let id = LocalOperator::identity(&self.dims)?;
        match &self.root {
            None => out.push((Vec::new(), id)),
            Some(r) => collect_leaves(r, &self.dims, Vec::new(), id, &mut out)?,
        }
        Ok(out)
    }

    /// Check every measurement operator for invertibility.
    pub fn first_singular_measurement(&self) -> Option<Error> {
        fn walk(r: &LoccRound, path: &mut Vec<usize>) -> Option<Error> {
            for (outcome, p) in r.measurement_ops.iter().enumerate() {
                let sigma_min = linalg::relative_sigma_min(p);
                if sigma_min < SINGULAR_TOL {
                    return Some(Error::SingularMeasurement {
                        path: path.clone(),
                        outcome,
                        sigma_min,
                    });
                }
            }
            for (outcome, child) in r.children.iter().enumerate() {
                if let Some(c) = child {
                    path.push(outcome);
                    if let Some(e) = walk(c, path) {
                        return Some(e);
                    }
                    path.pop();
                }
            }
            None
        }
        self.root.as_ref().and_then(|r| walk(r, &mut Vec::new()))
    }
}

fn collect_leaves(
    round: &LoccRound,
    dims: &[usize],
    path: Vec<usize>,
    acc: LocalOperator,
    out: &mut Vec<(Vec<usize>, LocalOperator)>,
) -> Result<()> {
    for outcome in 0..round.num_outcomes() {
        let k = round.operator(outcome, dims)?.compose(&acc)?;
        let mut p = path.clone();
        p.push(outcome);
        match round.child(outcome) {
            Some(c) => collect_leaves(c, dims, p, k, out)?,
            None => out.push((p, k)),
        }
    }
    Ok(())
}

pub fn run_protocol(proto: &LoccProtocol, initial: &PureState) -> Result<Vec<Branch>> {
    run_protocol_with(proto, initial, Strategy::default())
}

/// Enumerate all leaves in depth-first outcome order.
pub fn run_protocol_with(
    proto: &LoccProtocol,
    initial: &PureState,
    strategy: Strategy,
) -> Result<Vec<Branch>> {
    proto.validate()?;
    if initial.dims() != proto.dims.as_slice() {
        return Err(Error::DimensionMismatch {
            expected: format!("{:?}", proto.dims),
            found: format!("{:?}", initial.dims()),
        });
    }
    let psi = initial.normalized()?;
    let leaves = proto.leaves()?;
    let branches = exec::map(strategy, &leaves, |(path, k)| -> Result<Branch> {
        let v = tensor::apply_local(k, &psi)?;
        let probability = v.norm_sqr();
        let state = if probability > 0.0 {
            Some(v.normalized()?)
        } else {
            None
        };
        Ok(Branch {
            path: path.clone(),
            probability,
            state,
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let total: f64 = branches.iter().map(|b| b.probability).sum();
    if (total - 1.0).abs() > COMPLETENESS_TOL {
        return Err(Error::Completeness {
            residual: (total - 1.0).abs(),
            context: "in leaf probabilities".into(),
        });
    }
    Ok(branches)
}

/// Flatten a protocol with only invertible measurements into local invertible
/// Kraus operators. Refuses singular measurements.
pub fn regular_protocol_to_sep1(proto: &LoccProtocol) -> Result<SepMap> {
    proto.validate()?;
    if let Some(e) = proto.first_singular_measurement() {
        return Err(e);
    }
    let (labels, kraus): (Vec<String>, Vec<LocalOperator>) = proto
        .leaves()?
        .into_iter()
        .map(|(path, k)| (path_label(&path), k))
        .unzip();
    let map = SepMap::new(kraus, labels)?;
    let residual = map.completeness_residual();
    if residual > COMPLETENESS_TOL {
        return Err(Error::Completeness {
            residual,
            context: "after flattening".into(),
        });
    }
    Ok(map)
}

fn path_label(path: &[usize]) -> String {
    if path.is_empty() {
        return "()".into();
    }
    let parts: Vec<String> = path.iter().map(|i| i.to_string()).collect();
    format!("({})", parts.join(","))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SingularCase {
    NoSingularSite,
    OneSingularSite,
    MultipleSingularSites,
}

#[derive(Clone, Debug, Serialize)]
pub struct BranchReport {
    pub case: SingularCase,
    /// Smallest singular value of each factor relative to its largest.
    pub relative_sigma_min: Vec<f64>,
    pub singular_sites: Vec<usize>,
    pub norm: f64,
    /// Reduced ranks of the renormalized branch (empty when the norm is zero).
    pub reduced_ranks: Vec<usize>,
    pub local_dims: Vec<usize>,
    pub rank_deficient_sites: Vec<usize>,
    /// Only meaningful for one singular site: positive norm and a rank drop.
    pub lemma_holds: Option<bool>,
}

const POSITIVE_NORM: f64 = 1e-12;

/// Apply a local operator to a fully entangled state and describe the branch.
pub fn singular_branch_analysis(op: &LocalOperator, state: &PureState) -> Result<BranchReport> {
    if op.dims() != state.dims() {
        return Err(Error::DimensionMismatch {
            expected: format!("{:?}", state.dims()),
            found: format!("{:?}", op.dims()),
        });
    }
    if !tensor::is_fully_entangled(state, tensor::RANK_TOL)? {
        return Err(Error::InvalidArgument(
            "state is not fully entangled".into(),
        ));
    }
    let relative_sigma_min: Vec<f64> = op
        .factors()
        .iter()
        .map(linalg::relative_sigma_min)
        .collect();
    let singular_sites: Vec<usize> = relative_sigma_min
        .iter()
        .enumerate()
        .filter(|(_, &s)| s < SINGULAR_TOL)
        .map(|(i, _)| i)
        .collect();
    let case = match singular_sites.len() {
        0 => SingularCase::NoSingularSite,
        1 => SingularCase::OneSingularSite,
        _ => SingularCase::MultipleSingularSites,
    };
    let v = tensor::apply_local(op, &state.normalized()?)?;
    let norm = v.norm();
    let local_dims = state.dims().to_vec();
    let reduced_ranks = if norm > POSITIVE_NORM {
        tensor::reduced_ranks(&v.normalized()?, tensor::RANK_TOL)?
    } else {
        Vec::new()
    };
    let rank_deficient_sites: Vec<usize> = reduced_ranks
        .iter()
        .zip(&local_dims)
        .enumerate()
        .filter(|(_, (r, d))| r < d)
        .map(|(i, _)| i)
        .collect();
    let lemma_holds = (case == SingularCase::OneSingularSite)
        .then_some(norm > POSITIVE_NORM && !rank_deficient_sites.is_empty());
    Ok(BranchReport {
        case,
        relative_sigma_min,
        singular_sites,
        norm,
        reduced_ranks,
        local_dims,
        rank_deficient_sites,
        lemma_holds,
    })
}
