//! JSON file formats. Matrices are row lists of `[re, im]` pairs; site
//! indices in files (graph edges, protocol sites) are 1-based.

use std::path::Path;

use serde::{Deserialize, Serialize, Serializer};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::kraus::{self, Which};
use crate::linalg::{CMat, C64};
use crate::locc::{LoccProtocol, LoccRound};
use crate::sep::{ConversionInstance, SepWitness};
use crate::stabilizer::{generate_group, graph_state, Graph, PauliString};
use crate::tensor::{LocalOperator, PureState};

pub type MatrixJson = Vec<Vec<[f64; 2]>>;

pub fn matrix_to_json(m: &CMat) -> MatrixJson {
    (0..m.nrows())
        .map(|i| {
            (0..m.ncols())
                .map(|j| [m[(i, j)].re, m[(i, j)].im])
                .collect()
        })
        .collect()
}

pub fn matrix_from_json(rows: &MatrixJson) -> Result<CMat> {
    let n = rows.len();
    let m = rows.first().map_or(0, |r| r.len());
    if n == 0 || rows.iter().any(|r| r.len() != m) {
        return Err(Error::Parse("matrix rows are empty or ragged".into()));
    }
    Ok(CMat::from_fn(n, m, |i, j| {
        C64::new(rows[i][j][0], rows[i][j][1])
    }))
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateJson {
    pub dims: Vec<usize>,
    pub amps: Vec<[f64; 2]>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorJson {
    pub factors: Vec<MatrixJson>,
}

impl Serialize for PureState {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        StateJson {
            dims: self.dims().to_vec(),
            amps: self.amps().iter().map(|a| [a.re, a.im]).collect(),
        }
        .serialize(s)
    }
}

impl Serialize for LocalOperator {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        OperatorJson {
            factors: self.factors().iter().map(matrix_to_json).collect(),
        }
        .serialize(s)
    }
}

impl TryFrom<StateJson> for PureState {
    type Error = Error;

    fn try_from(j: StateJson) -> Result<Self> {
        PureState::new(
            j.dims,
            j.amps.iter().map(|a| C64::new(a[0], a[1])).collect(),
        )
    }
}

impl TryFrom<OperatorJson> for LocalOperator {
    type Error = Error;

    fn try_from(j: OperatorJson) -> Result<Self> {
        LocalOperator::new(
            j.factors
                .iter()
                .map(matrix_from_json)
                .collect::<Result<_>>()?,
        )
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphJson {
    pub n: usize,
    pub edges: Vec<[usize; 2]>,
}

impl TryFrom<GraphJson> for Graph {
    type Error = Error;

    fn try_from(j: GraphJson) -> Result<Self> {
        let mut edges = Vec::with_capacity(j.edges.len());
        for [u, v] in j.edges {
            if u == 0 || v == 0 {
                return Err(Error::Parse("graph vertices are numbered from 1".into()));
            }
            edges.push((u - 1, v - 1));
        }
        Graph::new(j.n, edges)
    }
}

pub fn graph_to_json(g: &Graph) -> GraphJson {
    GraphJson {
        n: g.num_vertices(),
        edges: g.edges().map(|(u, v)| [u + 1, v + 1]).collect(),
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WitnessJson {
    pub probs: Vec<f64>,
    pub syms: Vec<usize>,
    #[serde(default)]
    pub annihilators: Vec<OperatorJson>,
}

impl TryFrom<WitnessJson> for SepWitness {
    type Error = Error;

    fn try_from(j: WitnessJson) -> Result<Self> {
        let annihilators = j
            .annihilators
            .into_iter()
            .map(LocalOperator::try_from)
            .collect::<Result<_>>()?;
        Ok(SepWitness::new(j.probs, j.syms, annihilators))
    }
}

/// Protocol node: `site` is 1-based; `corrections[i][s]` is a matrix or null.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoundJson {
    pub site: usize,
    pub ops: Vec<MatrixJson>,
    #[serde(default)]
    pub corrections: Vec<Vec<Option<MatrixJson>>>,
    #[serde(default)]
    pub children: Vec<Option<RoundJson>>,
}

fn round_from_json(j: &RoundJson) -> Result<LoccRound> {
    if j.site == 0 {
        return Err(Error::Parse("protocol sites are numbered from 1".into()));
    }
    let ops = j.ops.iter().map(matrix_from_json).collect::<Result<_>>()?;
    let corrections = j
        .corrections
        .iter()
        .map(|row| {
            row.iter()
                .map(|u| u.as_ref().map(matrix_from_json).transpose())
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let children = j
        .children
        .iter()
        .map(|c| c.as_ref().map(round_from_json).transpose())
        .collect::<Result<_>>()?;
    Ok(LoccRound::new(j.site - 1, ops)
        .with_corrections(corrections)
        .with_children(children))
}

/// Parse a protocol tree (or `null` for the empty protocol) on parties `dims`.
pub fn protocol_from_value(v: Value, dims: Vec<usize>) -> Result<LoccProtocol> {
    let root: Option<RoundJson> = serde_json::from_value(v)?;
    let root = root.as_ref().map(round_from_json).transpose()?;
    LoccProtocol::new(dims, root)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceJson {
    #[serde(default)]
    example: Option<String>,
    #[serde(default)]
    state: Option<StateJson>,
    #[serde(default)]
    graph: Option<GraphJson>,
    #[serde(default)]
    g: Option<OperatorJson>,
    #[serde(default)]
    h: Option<OperatorJson>,
    #[serde(default)]
    pauli_generators: Option<Vec<String>>,
    #[serde(default)]
    symmetries: Option<Vec<OperatorJson>>,
    #[serde(default)]
    symmetries_complete: bool,
}

/// Build a conversion instance. `{"example": "5q"}` uses parameter `a`;
/// otherwise a state (or graph) plus `h`, optional `g`, and symmetries given
/// as Pauli generators or explicit operators. A graph with no symmetries
/// listed uses its stabilizer generators.
pub fn instance_from_value(v: Value, a: f64) -> Result<ConversionInstance> {
    let j: InstanceJson = serde_json::from_value(v)?;
    if let Some(name) = j.example {
        if j.state.is_some() || j.graph.is_some() || j.h.is_some() {
            return Err(Error::Parse(
                "\"example\" excludes other instance fields".into(),
            ));
        }
        let which: Which = name.parse()?;
        return kraus::build_example_for(which, a)?.conversion_instance();
    }
    let (psi, graph) = match (j.state, j.graph) {
        (Some(s), None) => (PureState::try_from(s)?, None),
        (None, Some(g)) => {
            let g = Graph::try_from(g)?;
            (graph_state(&g)?, Some(g))
        }
        _ => {
            return Err(Error::Parse(
                "instance needs exactly one of \"state\", \"graph\"".into(),
            ))
        }
    };
    let h =
        LocalOperator::try_from(j.h.ok_or_else(|| Error::Parse("instance needs \"h\"".into()))?)?;
    let g = match j.g {
        Some(g) => LocalOperator::try_from(g)?,
        None => LocalOperator::identity(psi.dims())?,
    };
    let n = psi.num_sites();
    match (j.pauli_generators, j.symmetries) {
        (Some(_), Some(_)) => Err(Error::Parse(
            "give either \"pauli_generators\" or \"symmetries\"".into(),
        )),
        (None, Some(syms)) => {
            let syms = syms
                .into_iter()
                .map(LocalOperator::try_from)
                .collect::<Result<_>>()?;
            ConversionInstance::new(psi, g, h, syms, j.symmetries_complete)
        }
        (gens, None) => {
            let gens: Vec<PauliString> = match (gens, &graph) {
                (Some(gs), _) => gs.iter().map(|s| s.parse()).collect::<Result<_>>()?,
                (None, Some(graph)) => graph.stabilizer_generators(),
                (None, None) => Vec::new(),
            };
            let group = generate_group(n, &gens)?;
            ConversionInstance::from_pauli_group(psi, g, h, group, j.symmetries_complete)
        }
    }
}

pub fn read_json(path: &Path) -> Result<Value> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

pub fn state_from_value(v: Value) -> Result<PureState> {
    PureState::try_from(serde_json::from_value::<StateJson>(v)?)
}

pub fn operator_from_value(v: Value) -> Result<LocalOperator> {
    LocalOperator::try_from(serde_json::from_value::<OperatorJson>(v)?)
}

pub fn graph_from_value(v: Value) -> Result<Graph> {
    Graph::try_from(serde_json::from_value::<GraphJson>(v)?)
}

pub fn witness_from_value(v: Value) -> Result<SepWitness> {
    SepWitness::try_from(serde_json::from_value::<WitnessJson>(v)?)
}
