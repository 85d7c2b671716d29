//! Convertibility `g|ψ⟩ → h|ψ⟩` under separable maps.
//!
//! * [`sep1_feasible`] decides the invertible-Kraus case: is `rG` a convex
//!   combination of `{S† H S : S ∈ symmetries}`?
//! * [`sep_witness_check`] verifies an explicit certificate for the general
//!   case, where Kraus operators annihilating `g|ψ⟩` contribute
//!   `g† Σ N† N g`.
//! * [`pauli_trace_obstruction`] and [`trace_monotone_check`] are cheap
//!   necessary conditions.
//!
//! Throughout, `G = g†g`, `H = h†h` and `r = ‖h|ψ⟩‖² / ‖g|ψ⟩‖²`.

pub mod simplex;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, CMat, C64};
use crate::stabilizer::{PauliGroup, PauliString};
use crate::tensor::{self, LocalOperator, PureState};

use simplex::{FarkasCheck, Phase1Outcome};

pub const DEFAULT_TOL: f64 = 1e-9;
/// `‖S|ψ⟩ − |ψ⟩‖` bound for a listed symmetry.
pub const SYMMETRY_TOL: f64 = 1e-10;
/// `‖N g|ψ⟩‖` bound for an annihilator.
pub const ANNIHILATION_TOL: f64 = 1e-10;
const DET_FLOOR: f64 = 1e-12;
const SINGULAR_THRESHOLD: f64 = 1e-10;

/// A candidate transformation `g|ψ⟩ → h|ψ⟩` together with (a finite subset of)
/// the local symmetry group of `|ψ⟩`.
#[derive(Clone, Debug)]
pub struct ConversionInstance {
    pub psi: PureState,
    pub g: LocalOperator,
    pub h: LocalOperator,
    pub symmetries: Vec<LocalOperator>,
    pub labels: Vec<String>,
    /// Set when the symmetries are exactly the elements of this Pauli group.
    pub pauli_group: Option<PauliGroup>,
    /// Whether `symmetries` is the full stabilizer of `|ψ⟩`.
    pub symmetries_complete: bool,
}

impl ConversionInstance {
    pub fn new(
        psi: PureState,
        g: LocalOperator,
        h: LocalOperator,
        symmetries: Vec<LocalOperator>,
        symmetries_complete: bool,
    ) -> Result<Self> {
        let labels = (0..symmetries.len()).map(|i| format!("S{i}")).collect();
        let inst = Self {
            psi,
            g,
            h,
            symmetries,
            labels,
            pauli_group: None,
            symmetries_complete,
        };
        inst.validate()?;
        Ok(inst)
    }

    pub fn from_pauli_group(
        psi: PureState,
        g: LocalOperator,
        h: LocalOperator,
        group: PauliGroup,
        symmetries_complete: bool,
    ) -> Result<Self> {
        let inst = Self {
            psi,
            g,
            h,
            symmetries: group.to_local_operators(),
            labels: group.elements().iter().map(|p| p.to_string()).collect(),
            pauli_group: Some(group),
            symmetries_complete,
        };
        inst.validate()?;
        Ok(inst)
    }

    fn validate(&self) -> Result<()> {
        let dims = self.psi.dims().to_vec();
        for (name, op) in [("g", &self.g), ("h", &self.h)] {
            if op.dims() != dims {
                return Err(Error::DimensionMismatch {
                    expected: format!("{name} with dims {dims:?}"),
                    found: format!("{:?}", op.dims()),
                });
            }
            for (i, f) in op.factors().iter().enumerate() {
                let det = f.determinant().norm();
                if det <= DET_FLOOR || !det.is_finite() {
                    return Err(Error::InvalidArgument(format!(
                        "{name} factor {i} is not invertible (|det| = {det:e})"
                    )));
                }
            }
        }
        for (index, s) in self.symmetries.iter().enumerate() {
            if s.dims() != dims {
                return Err(Error::DimensionMismatch {
                    expected: format!("symmetry with dims {dims:?}"),
                    found: format!("{:?}", s.dims()),
                });
            }
            let residual = tensor::apply_local(s, &self.psi)?.distance(&self.psi);
            if residual >= SYMMETRY_TOL {
                return Err(Error::NotASymmetry { index, residual });
            }
        }
        Ok(())
    }

    pub fn g_matrix(&self) -> CMat {
        self.g.gram().to_matrix()
    }

    pub fn h_matrix(&self) -> CMat {
        self.h.gram().to_matrix()
    }

    pub fn initial_state(&self) -> PureState {
        tensor::apply_local(&self.g, &self.psi).expect("dims validated")
    }

    pub fn final_state(&self) -> PureState {
        tensor::apply_local(&self.h, &self.psi).expect("dims validated")
    }

    /// `r = ‖h|ψ⟩‖² / ‖g|ψ⟩‖²`, always computed from the states.
    pub fn r(&self) -> f64 {
        self.final_state().norm_sqr() / self.initial_state().norm_sqr()
    }
}

/// Probabilities over listed symmetries plus annihilating local operators.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SepWitness {
    pub probs: Vec<f64>,
    pub syms: Vec<usize>,
    pub annihilators: Vec<LocalOperator>,
}

impl SepWitness {
    pub fn new(probs: Vec<f64>, syms: Vec<usize>, annihilators: Vec<LocalOperator>) -> Self {
        Self {
            probs,
            syms,
            annihilators,
        }
    }

    /// Structural checks; returns the probabilities with tiny negatives clamped.
    pub fn validated_probs(&self) -> Result<Vec<f64>> {
        if self.probs.len() != self.syms.len() {
            return Err(Error::InvalidWitness(format!(
                "{} probabilities for {} symmetries",
                self.probs.len(),
                self.syms.len()
            )));
        }
        if let Some(p) = self.probs.iter().find(|&&p| p < -1e-14 || !p.is_finite()) {
            return Err(Error::InvalidWitness(format!("negative probability {p}")));
        }
        let probs: Vec<f64> = self.probs.iter().map(|p| p.max(0.0)).collect();
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidWitness(format!(
                "probabilities sum to {total}"
            )));
        }
        for (q, n) in self.annihilators.iter().enumerate() {
            if n.singular_sites(SINGULAR_THRESHOLD).is_empty() {
                return Err(Error::InvalidWitness(format!(
                    "annihilator {q} has no singular factor"
                )));
            }
        }
        Ok(probs)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Feasible,
    Infeasible,
    Inconclusive,
}

#[derive(Clone, Debug, Serialize)]
pub struct FeasibilityReport {
    pub verdict: Verdict,
    /// Max-norm defect of the defining matrix equation; relative to
    /// `max |rG|` for the linear program, absolute for witness checks.
    pub residual: f64,
    pub witness: Option<SepWitness>,
    pub obstruction: Option<Vec<(PauliString, C64)>>,
    pub farkas: Option<Vec<f64>>,
    pub farkas_check: Option<FarkasCheck>,
    /// `Σ_q tr(g† N_q† N_q g)`, witness checks only.
    pub annihilator_weight: Option<f64>,
    /// `max_q ‖N_q g|ψ⟩‖`, witness checks only.
    pub max_annihilator_image: Option<f64>,
    pub notes: Vec<String>,
}

impl FeasibilityReport {
    fn empty(verdict: Verdict, residual: f64) -> Self {
        Self {
            verdict,
            residual,
            witness: None,
            obstruction: None,
            farkas: None,
            farkas_check: None,
            annihilator_weight: None,
            max_annihilator_image: None,
            notes: Vec::new(),
        }
    }
}

fn require_hermitian(name: &'static str, m: &CMat) -> Result<()> {
    let defect = linalg::hermitian_defect(m);
    let scale = linalg::max_norm(m).max(1.0);
    if defect > 1e-10 * scale {
        return Err(Error::NotHermitian(name, defect));
    }
    Ok(())
}

/// The real linear system behind `Σ_k p_k M_k = target, Σ p_k = 1, p ≥ 0`:
/// one row per real and imaginary part of every upper-triangle entry.
pub fn vectorize_convex_system(terms: &[CMat], target: &CMat) -> (DMatrix<f64>, DVector<f64>) {
    let d = target.nrows();
    let k = terms.len();
    let rows = d * d + 1;
    let mut a = DMatrix::zeros(rows, k);
    let mut b = DVector::zeros(rows);
    let mut r = 0;
    for i in 0..d {
        for j in i..d {
            for (col, m) in terms.iter().enumerate() {
                a[(r, col)] = m[(i, j)].re;
            }
            b[r] = target[(i, j)].re;
            r += 1;
            if i != j {
                for (col, m) in terms.iter().enumerate() {
                    a[(r, col)] = m[(i, j)].im;
                }
                b[r] = target[(i, j)].im;
                r += 1;
            }
        }
    }
    for col in 0..k {
        a[(r, col)] = 1.0;
    }
    b[r] = 1.0;
    (a, b)
}

/// Decide `Σ_k p_k S_k† H S_k = r G` over global matrices.
pub fn sep1_feasible_matrices(
    h: &CMat,
    g: &CMat,
    r: f64,
    symmetries: &[CMat],
    symmetries_complete: bool,
    tol: f64,
) -> Result<FeasibilityReport> {
    if symmetries.is_empty() {
        return Err(Error::EmptySymmetries);
    }
    require_hermitian("H", h)?;
    require_hermitian("G", g)?;
    let terms: Vec<CMat> = symmetries.iter().map(|s| s.adjoint() * h * s).collect();
    let target = g.scale(r);
    let (a, b) = vectorize_convex_system(&terms, &target);
    let lp = simplex::phase_one(&a, &b, tol)?;

    match lp.outcome {
        Phase1Outcome::Feasible { x } => {
            let total: f64 = x.iter().sum();
            let probs: Vec<f64> = x.iter().map(|v| v / total).collect();
            let residual = convex_residual(&terms, &probs, &target)
                / linalg::max_norm(&target).max(f64::MIN_POSITIVE);
            let (probs, syms): (Vec<f64>, Vec<usize>) = probs
                .iter()
                .enumerate()
                .filter(|(_, &p)| p > 0.0)
                .map(|(i, &p)| (p, i))
                .unzip();
            let verdict = if residual < tol {
                Verdict::Feasible
            } else {
                Verdict::Inconclusive
            };
            let mut report = FeasibilityReport::empty(verdict, residual);
            report.witness = Some(SepWitness::new(probs, syms, Vec::new()));
            if verdict == Verdict::Inconclusive {
                report.notes.push(
                    "simplex reported feasible but the re-checked residual exceeds tol".into(),
                );
            }
            Ok(report)
        }
        Phase1Outcome::Infeasible { farkas } => {
            let check = simplex::verify_farkas(&a, &b, &farkas, tol);
            let verdict = if symmetries_complete && check.valid {
                Verdict::Infeasible
            } else {
                Verdict::Inconclusive
            };
            let mut report = FeasibilityReport::empty(verdict, lp.objective);
            if !symmetries_complete {
                report.notes.push(
                    "symmetry list is a finite subset of the stabilizer; infeasibility over the \
                     subset does not exclude other symmetries"
                        .into(),
                );
            }
            if !check.valid {
                report
                    .notes
                    .push("Farkas certificate failed its independent check".into());
            }
            report.farkas = Some(farkas);
            report.farkas_check = Some(check);
            Ok(report)
        }
    }
}

fn convex_residual(terms: &[CMat], probs: &[f64], target: &CMat) -> f64 {
    let mut acc = -target.clone();
    for (m, &p) in terms.iter().zip(probs) {
        acc += m.scale(p);
    }
    linalg::max_norm(&acc)
}

/// Invertible-Kraus convertibility of `g|ψ⟩` into `h|ψ⟩`.
pub fn sep1_feasible(inst: &ConversionInstance, tol: f64) -> Result<FeasibilityReport> {
    if inst.symmetries.is_empty() {
        return Err(Error::EmptySymmetries);
    }
    let h = inst.h_matrix();
    let g = inst.g_matrix();
    let r = inst.r();
    let mats: Vec<CMat> = inst.symmetries.iter().map(|s| s.to_matrix()).collect();
    let mut report = sep1_feasible_matrices(&h, &g, r, &mats, inst.symmetries_complete, tol)?;
    if let Some(group) = &inst.pauli_group {
        report.obstruction = Some(pauli_trace_obstruction(&h, group, r, &g, tol)?);
    }
    Ok(report)
}

/// Non-identity `P` in an abelian Hermitian Pauli group with
/// `tr(HP) ≠ r·tr(GP)`. Conjugation by group elements leaves each group
/// element's coefficient unchanged, so any hit rules out the convex
/// combination over that group.
pub fn pauli_trace_obstruction(
    h: &CMat,
    group: &PauliGroup,
    r: f64,
    g: &CMat,
    tol: f64,
) -> Result<Vec<(PauliString, C64)>> {
    require_hermitian("H", h)?;
    require_hermitian("G", g)?;
    let dim = 1usize << group.num_qubits();
    if h.nrows() != dim || g.nrows() != dim {
        return Err(Error::DimensionMismatch {
            expected: format!("{dim}x{dim} operators"),
            found: format!("{}x{}", h.nrows(), h.ncols()),
        });
    }
    let elems = group.elements();
    for (i, a) in elems.iter().enumerate() {
        if !a.is_hermitian() {
            return Err(Error::InvalidArgument(format!("{a} is not Hermitian")));
        }
        if let Some(b) = elems[i + 1..].iter().find(|b| !a.commutes_with(b)) {
            return Err(Error::NonCommuting(a.to_string(), b.to_string()));
        }
    }
    Ok(group
        .non_identity()
        .filter_map(|p| {
            let pm = p.to_matrix();
            let value = (h * &pm).trace() - (g * &pm).trace() * r;
            (value.norm() > tol).then(|| (p.clone(), value))
        })
        .collect())
}

/// Check a general separable-map certificate:
/// `(1/r) Σ p_k S_k† H S_k + g† Σ_q N_q† N_q g = G`.
pub fn sep_witness_check(
    inst: &ConversionInstance,
    w: &SepWitness,
    tol: f64,
) -> Result<FeasibilityReport> {
    let probs = w.validated_probs()?;
    let len = inst.symmetries.len();
    if let Some(&index) = w.syms.iter().find(|&&i| i >= len) {
        return Err(Error::SymmetryIndexOutOfRange { index, len });
    }
    let dims = inst.psi.dims().to_vec();
    if let Some(n) = w.annihilators.iter().find(|n| n.dims() != dims) {
        return Err(Error::DimensionMismatch {
            expected: format!("annihilators with dims {dims:?}"),
            found: format!("{:?}", n.dims()),
        });
    }

    let h = inst.h_matrix();
    let g_op = inst.g.to_matrix();
    let g = inst.g_matrix();
    let r = inst.r();

    let mut lhs = CMat::zeros(g.nrows(), g.ncols());
    for (&p, &k) in probs.iter().zip(&w.syms) {
        let s = inst.symmetries[k].to_matrix();
        lhs += (s.adjoint() * &h * &s).scale(p / r);
    }
    let gpsi = inst.initial_state();
    let mut weight = 0.0;
    let mut max_image: f64 = 0.0;
    for n in &w.annihilators {
        let nn = n.gram().to_matrix();
        let term = g_op.adjoint() * nn * &g_op;
        weight += term.trace().re;
        lhs += term;
        max_image = max_image.max(tensor::apply_local(n, &gpsi)?.norm());
    }
    let residual = linalg::max_abs_diff(&lhs, &g);

    let ok = residual < tol && max_image < ANNIHILATION_TOL;
    let mut report = FeasibilityReport::empty(
        if ok {
            Verdict::Feasible
        } else {
            Verdict::Inconclusive
        },
        residual,
    );
    report.witness = Some(w.clone());
    report.annihilator_weight = Some(weight);
    report.max_annihilator_image = Some(max_image);
    if residual >= tol {
        report
            .notes
            .push("witness rejected: matrix equation not satisfied".into());
    }
    if max_image >= ANNIHILATION_TOL {
        report
            .notes
            .push("witness rejected: an annihilator does not annihilate g|psi>".into());
    }
    Ok(report)
}

#[derive(Clone, Debug, Serialize)]
pub struct MonotoneReport {
    /// `tr G` after rescaling g so that `‖g|ψ⟩‖ = 1`.
    pub trace_g: f64,
    /// `tr H` after rescaling h so that `‖h|ψ⟩‖ = 1`.
    pub trace_h: f64,
    pub g_norm: f64,
    pub h_norm: f64,
    /// `tr G ≥ tr H`, necessary for any separable transformation.
    pub necessary_condition_holds: bool,
    /// `tr G = tr H`: separable and invertible-Kraus convertibility coincide.
    pub equality_case: bool,
}

/// Trace monotone for states whose listed symmetries are all unitary.
pub fn trace_monotone_check(inst: &ConversionInstance, tol: f64) -> Result<MonotoneReport> {
    for (index, s) in inst.symmetries.iter().enumerate() {
        let deviation = s.unitary_defect();
        if deviation > 1e-10 {
            return Err(Error::NonUnitarySymmetry { index, deviation });
        }
    }
    let g_norm = inst.initial_state().norm();
    let h_norm = inst.final_state().norm();
    let local_trace = |op: &LocalOperator| -> f64 {
        op.gram()
            .factors()
            .iter()
            .map(|f| f.trace().re)
            .product::<f64>()
    };
    let trace_g = local_trace(&inst.g) / (g_norm * g_norm);
    let trace_h = local_trace(&inst.h) / (h_norm * h_norm);
    Ok(MonotoneReport {
        trace_g,
        trace_h,
        g_norm,
        h_norm,
        necessary_condition_holds: trace_g >= trace_h - tol,
        equality_case: (trace_g - trace_h).abs() < tol,
    })
}
