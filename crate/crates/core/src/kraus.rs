//! The ring-graph-state transformations that need Kraus operators which
//! annihilate the input, and a generic verifier for separable Kraus maps.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::{self, Strategy};
use crate::linalg::{self, CMat};
use crate::sep::{self, ConversionInstance, SepWitness};
use crate::stabilizer::{
    generate_group, graph_state, ring_stabilizer_generators, Graph, PauliGroup,
};
use crate::tensor::{self, LocalOperator, PureState};

/// Relative collinearity slack for "reaches the final state".
pub const COLLINEARITY_TOL: f64 = 1e-8;

/// A separable map given by local Kraus operators (singular factors allowed).
#[derive(Clone, Debug)]
pub struct SepMap {
    pub kraus: Vec<LocalOperator>,
    pub labels: Vec<String>,
}

impl SepMap {
    pub fn new(kraus: Vec<LocalOperator>, labels: Vec<String>) -> Result<Self> {
        if kraus.is_empty() || kraus.len() != labels.len() {
            return Err(Error::InvalidArgument(format!(
                "{} Kraus operators with {} labels",
                kraus.len(),
                labels.len()
            )));
        }
        let dims = kraus[0].dims();
        if let Some(k) = kraus.iter().find(|k| k.dims() != dims) {
            return Err(Error::DimensionMismatch {
                expected: format!("{dims:?}"),
                found: format!("{:?}", k.dims()),
            });
        }
        Ok(Self { kraus, labels })
    }

    pub fn dims(&self) -> Vec<usize> {
        self.kraus[0].dims()
    }

    /// `Σ_k M_k† M_k` as a global matrix.
    pub fn completeness_sum(&self) -> CMat {
        self.kraus
            .iter()
            .map(|k| k.gram().to_matrix())
            .reduce(|a, b| a + b)
            .expect("nonempty")
    }

    /// `max |Σ_k M_k† M_k − 1|`.
    pub fn completeness_residual(&self) -> f64 {
        let sum = self.completeness_sum();
        linalg::max_abs_diff(&sum, &linalg::identity(sum.nrows()))
    }

    /// `Λ(|ψ⟩⟨ψ|) = Σ_k M_k|ψ⟩⟨ψ|M_k†`.
    pub fn apply_to_pure(&self, state: &PureState) -> Result<CMat> {
        let mut acc = CMat::zeros(state.total_dim(), state.total_dim());
        for k in &self.kraus {
            acc += tensor::apply_local(k, state)?.projector();
        }
        Ok(acc)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BranchClass {
    ReachesFinal,
    Annihilates,
    Other,
}

#[derive(Clone, Debug, Serialize)]
pub struct BranchRecord {
    pub label: String,
    pub prob: f64,
    pub norm: f64,
    pub class: BranchClass,
}

#[derive(Clone, Debug, Serialize)]
pub struct MapVerdict {
    pub deterministic: bool,
    pub branches: Vec<BranchRecord>,
    pub total_prob: f64,
    pub completeness_residual: f64,
    /// `max |Λ(|init⟩⟨init|) − |final⟩⟨final||`.
    pub output_residual: f64,
}

/// Classify every Kraus branch on `initial` against `final_state`.
pub fn verify_sep_map(
    map: &SepMap,
    initial: &PureState,
    final_state: &PureState,
    tol: f64,
) -> Result<MapVerdict> {
    for (name, s) in [("initial", initial), ("final", final_state)] {
        if !s.is_normalized(1e-10) {
            return Err(Error::InvalidArgument(format!(
                "{name} state is not normalized"
            )));
        }
        if !tensor::is_fully_entangled(s, tensor::RANK_TOL)? {
            return Err(Error::InvalidArgument(format!(
                "{name} state is not fully entangled"
            )));
        }
    }
    if map.dims() != initial.dims() || initial.dims() != final_state.dims() {
        return Err(Error::DimensionMismatch {
            expected: format!("{:?}", initial.dims()),
            found: format!("map {:?}, final {:?}", map.dims(), final_state.dims()),
        });
    }
    let completeness_residual = map.completeness_residual();
    if completeness_residual > tol {
        return Err(Error::Completeness {
            residual: completeness_residual,
            context: "in Kraus family".into(),
        });
    }

    let mut branches = Vec::with_capacity(map.kraus.len());
    let mut output = CMat::zeros(initial.total_dim(), initial.total_dim());
    for (k, label) in map.kraus.iter().zip(&map.labels) {
        let v = tensor::apply_local(k, initial)?;
        let norm = v.norm();
        output += v.projector();
        let class = if norm <= tol {
            BranchClass::Annihilates
        } else if final_state.inner(&v).norm() >= (1.0 - COLLINEARITY_TOL) * norm {
            BranchClass::ReachesFinal
        } else {
            BranchClass::Other
        };
        branches.push(BranchRecord {
            label: label.clone(),
            prob: norm * norm,
            norm,
            class,
        });
    }
    let total_prob = branches
        .iter()
        .filter(|b| b.class == BranchClass::ReachesFinal)
        .map(|b| b.prob)
        .sum::<f64>();
    let output_residual = linalg::max_abs_diff(&output, &final_state.projector());
    let deterministic =
        branches.iter().all(|b| b.class != BranchClass::Other) && (total_prob - 1.0).abs() < tol;
    Ok(MapVerdict {
        deterministic,
        branches,
        total_prob,
        completeness_residual,
        output_residual,
    })
}

/// Turn a Kraus map implementing `g|ψ⟩ → h|ψ⟩` into a certificate: each
/// surviving branch `M` gives `S = (n₂ / (√p n₁)) h⁻¹ M g`, matched against
/// the instance's symmetries, and each annihilating branch becomes an `N_q`.
pub fn map_to_witness(map: &SepMap, inst: &ConversionInstance) -> Result<SepWitness> {
    let gpsi = inst.initial_state();
    let n1 = gpsi.norm();
    let n2 = inst.final_state().norm();
    let h_inv = inst
        .h
        .try_inverse()
        .ok_or_else(|| Error::InvalidArgument("h is not invertible".into()))?;
    let sym_mats: Vec<CMat> = inst.symmetries.iter().map(|s| s.to_matrix()).collect();

    let mut probs = Vec::new();
    let mut syms = Vec::new();
    let mut annihilators = Vec::new();
    for (k, label) in map.kraus.iter().zip(&map.labels) {
        let v = tensor::apply_local(k, &gpsi)?;
        let norm = v.norm();
        if norm < sep::ANNIHILATION_TOL {
            annihilators.push(k.clone());
            continue;
        }
        let p = (norm / n1).powi(2);
        let s = h_inv
            .compose(k)?
            .compose(&inst.g)?
            .scaled(linalg::re(n2 / (p.sqrt() * n1)))
            .to_matrix();
        let index = sym_mats
            .iter()
            .position(|m| linalg::max_abs_diff(m, &s) < 1e-8)
            .ok_or_else(|| {
                Error::InvalidWitness(format!("branch {label} does not match a listed symmetry"))
            })?;
        probs.push(p);
        syms.push(index);
    }
    Ok(SepWitness::new(probs, syms, annihilators))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Which {
    #[serde(rename = "5q")]
    FiveQubit,
    #[serde(rename = "3q")]
    ThreeQubit,
}

impl Which {
    pub fn num_qubits(self) -> usize {
        match self {
            Which::FiveQubit => 5,
            Which::ThreeQubit => 3,
        }
    }
}

impl std::str::FromStr for Which {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "5q" => Ok(Which::FiveQubit),
            "3q" => Ok(Which::ThreeQubit),
            other => Err(Error::Parse(format!(
                "unknown example {other:?}, expected 5q or 3q"
            ))),
        }
    }
}

/// One of the two explicit transformations `|ψ⟩ → h|ψ⟩` (g = 1).
#[derive(Clone, Debug)]
pub struct ExampleInstance {
    pub which: Which,
    pub a: f64,
    pub psi: PureState,
    pub h: LocalOperator,
    pub map: SepMap,
    pub group: PauliGroup,
}

fn spin_projector(axis: &CMat, sign: f64) -> CMat {
    (linalg::identity(2) + axis.scale(sign)).scale(0.5)
}

// Z, X, Z eigenvalue signs on sites 1..3 for Q1..Q4; each has Z·X·Z = −1.
const PROJECTOR_SIGNS: [[f64; 3]; 4] = [
    [1.0, 1.0, -1.0],
    [1.0, -1.0, 1.0],
    [-1.0, 1.0, 1.0],
    [-1.0, -1.0, -1.0],
];

fn projectors(n: usize) -> Vec<LocalOperator> {
    let (z, x) = (linalg::pauli_z(), linalg::pauli_x());
    PROJECTOR_SIGNS
        .iter()
        .map(|[s1, s2, s3]| {
            let mut factors = vec![
                spin_projector(&z, *s1),
                spin_projector(&x, *s2),
                spin_projector(&z, *s3),
            ];
            factors.extend((3..n).map(|_| linalg::identity(2)));
            LocalOperator::new(factors).expect("2x2 factors")
        })
        .collect()
}

/// `Q₁ … Q₄` on five qubits.
pub fn build_projectors_5q() -> Vec<LocalOperator> {
    projectors(5)
}

/// `Q₁′ … Q₄′` with `Q_j′ ⊗ 1⊗1 = Q_j`.
pub fn build_projectors_3q() -> Vec<LocalOperator> {
    projectors(3)
}

/// `H = (½+aZ) ⊗ (½+aX) ⊗ (½+aZ) ⊗ (½·1)^{⊗(n−3)}` as a local operator.
pub fn target_gram(n: usize, a: f64) -> LocalOperator {
    let half = linalg::identity(2).scale(0.5);
    let mut factors = vec![
        &half + linalg::pauli_z().scale(a),
        &half + linalg::pauli_x().scale(a),
        &half + linalg::pauli_z().scale(a),
    ];
    factors.extend((3..n).map(|_| half.clone()));
    LocalOperator::new(factors).expect("2x2 factors")
}

fn check_parameter(a: f64) -> Result<()> {
    if a.is_finite() && a > 0.0 && a < 0.5 {
        Ok(())
    } else {
        Err(Error::ParameterOutOfRange(a))
    }
}

fn build_example(which: Which, a: f64) -> Result<ExampleInstance> {
    check_parameter(a)?;
    let n = which.num_qubits();
    let psi = graph_state(&Graph::ring(n)?)?;
    let gens = ring_stabilizer_generators(n)?;
    let group = generate_group(n, &gens)?;

    let big_h = target_gram(n, a);
    let h = LocalOperator::new(
        big_h
            .factors()
            .iter()
            .map(|f| {
                linalg::psd_sqrt(f)
                    .map_err(|ev| Error::InvalidArgument(format!("H factor eigenvalue {ev}")))
            })
            .collect::<Result<Vec<_>>>()?,
    )?;
    let h_defect = linalg::max_abs_diff(&h.gram().to_matrix(), &big_h.to_matrix());
    if h_defect > 1e-12 {
        return Err(Error::InvalidArgument(format!(
            "h†h deviates from H by {h_defect:e}"
        )));
    }

    let a3 = a.powi(3);
    let norm = 0.125 + a3;
    let (pre, c5) = match which {
        Which::FiveQubit => (2.0, (1.0 / norm).sqrt()),
        Which::ThreeQubit => (1.0, 0.5 * (1.0 / norm).sqrt()),
    };
    let a1 = pre * (2.0 * a3 / ((0.5 + a).powi(2) * (0.5 - a) * norm)).sqrt();
    let c4 = pre * (2.0 * a3 / ((0.5 - a).powi(3) * norm)).sqrt();

    let mut kraus = Vec::with_capacity(8);
    let mut labels = Vec::with_capacity(8);
    for (j, q) in projectors(n).iter().enumerate() {
        let coeff = if j < 3 { a1 } else { c4 };
        kraus.push(h.compose(q)?.scaled(linalg::re(coeff)));
        labels.push(format!("M{}", j + 1));
    }
    let m5 = h.scaled(linalg::re(c5));
    let a1_op = gens[0].to_local_operator();
    let a3_op = gens[2].to_local_operator();
    kraus.push(m5.clone());
    labels.push("M5".into());
    kraus.push(m5.compose(&a1_op)?);
    labels.push("M5*A1".into());
    kraus.push(m5.compose(&a3_op)?);
    labels.push("M5*A3".into());
    kraus.push(m5.compose(&a1_op)?.compose(&a3_op)?);
    labels.push("M5*A1*A3".into());

    Ok(ExampleInstance {
        which,
        a,
        psi,
        h,
        map: SepMap::new(kraus, labels)?,
        group,
    })
}

/// 5-qubit ring graph state to `h|ψ⟩`.
pub fn build_five_qubit_example(a: f64) -> Result<ExampleInstance> {
    build_example(Which::FiveQubit, a)
}

/// 3-qubit ring (triangle) graph state to `h|ψ⟩`.
pub fn build_three_qubit_example(a: f64) -> Result<ExampleInstance> {
    build_example(Which::ThreeQubit, a)
}

pub fn build_example_for(which: Which, a: f64) -> Result<ExampleInstance> {
    build_example(which, a)
}

impl ExampleInstance {
    pub fn final_state(&self) -> PureState {
        tensor::apply_local(&self.h, &self.psi).expect("dims match")
    }

    /// Conversion instance over the Pauli stabilizer. Only the 5-qubit ring
    /// has no symmetries beyond it; the triangle state has a continuous family.
    pub fn conversion_instance(&self) -> Result<ConversionInstance> {
        let g = LocalOperator::identity(self.psi.dims())?;
        ConversionInstance::from_pauli_group(
            self.psi.clone(),
            g,
            self.h.clone(),
            self.group.clone(),
            self.which == Which::FiveQubit,
        )
    }

    pub fn witness(&self) -> Result<(ConversionInstance, SepWitness)> {
        let inst = self.conversion_instance()?;
        let w = map_to_witness(&self.map, &inst)?;
        Ok((inst, w))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ExampleReport {
    pub which: Which,
    pub a: f64,
    pub completeness_residual: f64,
    /// `‖M_j|ψ⟩‖` for the four projector branches.
    pub annihilator_norms: Vec<f64>,
    pub output_residual: f64,
    pub deterministic: bool,
    pub witness_residual: f64,
    pub witness_feasible: bool,
    pub branches: Vec<BranchRecord>,
    pub verified: bool,
}

/// Thresholds for a verified example run.
pub const COMPLETENESS_TOL: f64 = 1e-10;
pub const ANNIHILATOR_NORM_TOL: f64 = 1e-11;
pub const OUTPUT_TOL: f64 = 1e-10;

/// Build an example and check every claim about it.
pub fn verify_example(which: Which, a: f64, tol: f64) -> Result<ExampleReport> {
    let ex = build_example(which, a)?;
    let final_state = ex.final_state().normalized()?;
    let verdict = verify_sep_map(&ex.map, &ex.psi, &final_state, tol)?;
    let annihilator_norms: Vec<f64> = ex.map.kraus[..4]
        .iter()
        .map(|k| tensor::apply_local(k, &ex.psi).map(|v| v.norm()))
        .collect::<Result<_>>()?;
    let (inst, w) = ex.witness()?;
    let wrep = sep::sep_witness_check(&inst, &w, tol)?;
    let witness_feasible = wrep.verdict == sep::Verdict::Feasible;
    let verified = verdict.deterministic
        && verdict.completeness_residual < COMPLETENESS_TOL
        && annihilator_norms.iter().all(|&x| x < ANNIHILATOR_NORM_TOL)
        && verdict.output_residual < OUTPUT_TOL
        && witness_feasible;
    Ok(ExampleReport {
        which,
        a,
        completeness_residual: verdict.completeness_residual,
        annihilator_norms,
        output_residual: verdict.output_residual,
        deterministic: verdict.deterministic,
        witness_residual: wrep.residual,
        witness_feasible,
        branches: verdict.branches,
        verified,
    })
}

/// [`verify_example`] over many parameter values, results in input order.
pub fn sweep_examples(
    which: Which,
    a_values: &[f64],
    tol: f64,
    strategy: Strategy,
) -> Vec<Result<ExampleReport>> {
    exec::map(strategy, a_values, |&a| verify_example(which, a, tol))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn projectors_are_projectors_that_annihilate() {
        let psi = graph_state(&Graph::ring(5).unwrap()).unwrap();
        let qs = build_projectors_5q();
        let mut sum = CMat::zeros(32, 32);
        for q in &qs {
            let m = q.to_matrix();
            assert!(linalg::max_abs_diff(&(&m * &m), &m) < 1e-15);
            assert!(linalg::hermitian_defect(&m) < 1e-15);
            assert!(tensor::apply_local(q, &psi).unwrap().norm() < 1e-12);
            sum += m;
        }
        // four rank-4 projectors on orthogonal Z⊗X⊗Z eigenspaces: trace 16
        assert!((sum.trace().re - 16.0).abs() < 1e-12);
        assert!(linalg::max_abs_diff(&(&sum * &sum), &sum) < 1e-14);

        let psi3 = graph_state(&Graph::ring(3).unwrap()).unwrap();
        for q in build_projectors_3q() {
            assert!(tensor::apply_local(&q, &psi3).unwrap().norm() < 1e-12);
        }
    }

    #[test]
    fn completeness_at_quarter() {
        for ex in [
            build_five_qubit_example(0.25),
            build_three_qubit_example(0.25),
        ] {
            let ex = ex.unwrap();
            assert!(ex.map.completeness_residual() < 1e-10, "{:?}", ex.which);
        }
    }

    #[test]
    fn parameter_range() {
        for a in [0.0, 0.5, -0.1, 0.7, f64::NAN] {
            assert!(matches!(
                build_five_qubit_example(a),
                Err(Error::ParameterOutOfRange(_))
            ));
        }
    }

    #[test]
    fn branches_annihilate_or_reach_final() {
        for a in [0.1, 0.4] {
            let ex = build_five_qubit_example(a).unwrap();
            let target = ex.final_state();
            for (k, m) in ex.map.kraus.iter().enumerate() {
                let v = tensor::apply_local(m, &ex.psi).unwrap();
                if k < 4 {
                    assert!(v.norm() < 1e-11);
                } else {
                    // collinearity oracle |⟨u,v⟩| = ‖u‖‖v‖
                    let lhs = target.inner(&v).norm();
                    assert!((lhs - target.norm() * v.norm()).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn induced_map_is_deterministic() {
        let ex = build_five_qubit_example(0.25).unwrap();
        let rho = ex.map.apply_to_pure(&ex.psi).unwrap();
        let target = ex.final_state().normalized().unwrap().projector();
        assert!(linalg::max_abs_diff(&rho, &target) < 1e-10);
    }

    #[test]
    fn three_qubit_branch_probabilities_are_equal() {
        let ex = build_three_qubit_example(0.25).unwrap();
        let probs: Vec<f64> = ex.map.kraus[4..]
            .iter()
            .map(|m| tensor::apply_local(m, &ex.psi).unwrap().norm_sqr())
            .collect();
        for p in &probs {
            assert!((p - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn verifier_on_identity_map() {
        let psi = PureState::ghz(3).unwrap();
        let id = SepMap::new(
            vec![LocalOperator::identity(&[2; 3]).unwrap()],
            vec!["1".into()],
        )
        .unwrap();
        let v = verify_sep_map(&id, &psi, &psi, 1e-10).unwrap();
        assert!(v.deterministic);
        let other = graph_state(&Graph::ring(3).unwrap()).unwrap();
        let v = verify_sep_map(&id, &psi, &other, 1e-10).unwrap();
        assert!(!v.deterministic);
    }

    #[test]
    fn verifier_flags_incomplete_family() {
        let ex = build_five_qubit_example(0.25).unwrap();
        let partial = SepMap::new(ex.map.kraus[4..].to_vec(), ex.map.labels[4..].to_vec()).unwrap();
        let target = ex.final_state().normalized().unwrap();
        assert!(matches!(
            verify_sep_map(&partial, &ex.psi, &target, 1e-10),
            Err(Error::Completeness { .. })
        ));
    }

    #[test]
    fn witness_from_five_qubit_map() {
        let ex = build_five_qubit_example(0.25).unwrap();
        let (inst, w) = ex.witness().unwrap();
        assert_eq!(w.annihilators.len(), 4);
        assert_eq!(w.probs.len(), 4);
        for p in &w.probs {
            assert!((p - 0.25).abs() < 1e-12);
        }
        let labels: Vec<&str> = w.syms.iter().map(|&i| inst.labels[i].as_str()).collect();
        assert!(labels.contains(&"+IIIII"));
        assert!(labels.contains(&"+XZIIZ"));
        assert!(labels.contains(&"+IZXZI"));
    }
}
