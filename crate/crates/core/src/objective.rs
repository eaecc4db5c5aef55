//! Diagonal cost Hamiltonians and benchmark graphs.

use std::collections::HashSet;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Largest register for which diagonals are enumerated.
pub const MAX_QUBITS: usize = 14;

/// Seed of the packaged random benchmark graph.
pub const RANDOM_GRAPH_SEED: u64 = 20_240_508;

#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    pub n_nodes: usize,
    pub edges: Vec<(usize, usize, f64)>,
}

impl Graph {
    pub fn new(n_nodes: usize) -> Self {
        Self {
            n_nodes,
            edges: Vec::new(),
        }
    }

    /// Unweighted graph from an edge list.
    pub fn from_edges(n_nodes: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut g = Self::new(n_nodes);
        for &(u, v) in edges {
            g.add_edge(u, v, 1.0)?;
        }
        Ok(g)
    }

    pub fn add_edge(&mut self, u: usize, v: usize, w: f64) -> Result<()> {
        if u == v {
            return Err(Error::InvalidGraph(format!("self-loop on node {u}")));
        }
        if u >= self.n_nodes || v >= self.n_nodes {
            return Err(Error::InvalidGraph(format!(
                "edge ({u}, {v}) outside {} nodes",
                self.n_nodes
            )));
        }
        let key = (u.min(v), u.max(v));
        if self.edges.iter().any(|&(a, b, _)| (a.min(b), a.max(b)) == key) {
            return Err(Error::InvalidGraph(format!("duplicate edge ({u}, {v})")));
        }
        self.edges.push((u, v, w));
        Ok(())
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    /// Weighted size of the cut given by bitstring `z` (node `u` ↔ qubit `u`).
    pub fn cut_value(&self, z: usize) -> f64 {
        let bit = |u: usize| (z >> (self.n_nodes - 1 - u)) & 1;
        self.edges
            .iter()
            .filter(|&&(u, v, _)| bit(u) != bit(v))
            .map(|&(_, _, w)| w)
            .sum()
    }
}

impl FromStr for Graph {
    type Err = Error;

    /// `nodes N` followed by `edge u v [w]` lines; `#` starts a comment.
    fn from_str(text: &str) -> Result<Self> {
        let mut graph: Option<Graph> = None;
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let err = |msg: String| Error::Parse { line: line_no, msg };
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let t: Vec<&str> = line.split_whitespace().collect();
            match (t[0], graph.as_mut()) {
                ("nodes", None) if t.len() == 2 => {
                    let n = t[1].parse().map_err(|e| err(format!("node count: {e}")))?;
                    graph = Some(Graph::new(n));
                }
                ("nodes", Some(_)) => return Err(err("repeated `nodes` line".into())),
                ("edge", Some(g)) if t.len() == 3 || t.len() == 4 => {
                    let u = t[1].parse().map_err(|e| err(format!("node: {e}")))?;
                    let v = t[2].parse().map_err(|e| err(format!("node: {e}")))?;
                    let w = match t.get(3) {
                        Some(w) => w.parse().map_err(|e| err(format!("weight: {e}")))?,
                        None => 1.0,
                    };
                    g.add_edge(u, v, w).map_err(|e| err(e.to_string()))?;
                }
                ("edge", None) => return Err(err("`edge` before `nodes`".into())),
                _ => return Err(err(format!("cannot parse `{line}`"))),
            }
        }
        graph.ok_or(Error::Parse {
            line: 1,
            msg: "missing `nodes` line".into(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BenchmarkGraph {
    Random,
    Ladder,
    Barbell,
}

impl FromStr for BenchmarkGraph {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "random" => Ok(BenchmarkGraph::Random),
            "ladder" => Ok(BenchmarkGraph::Ladder),
            "barbell" => Ok(BenchmarkGraph::Barbell),
            _ => Err(Error::UnknownGraph(s.to_string())),
        }
    }
}

/// The 8-node benchmark graphs.
///
/// * Ladder: rails `0-1-2-3` and `4-5-6-7`, rungs `{i, i+4}`.
/// * Barbell: `K4` on `0..4` and on `4..8`, bridged by `{3, 4}`.
/// * Random: Erdős–Rényi `G(8, 1/2)` from [`RANDOM_GRAPH_SEED`].
pub fn benchmark_graph(which: BenchmarkGraph) -> Graph {
    let mut g = Graph::new(8);
    match which {
        BenchmarkGraph::Ladder => {
            for i in 0..4 {
                g.add_edge(i, i + 4, 1.0).unwrap();
            }
            for side in [0, 4] {
                for i in 0..3 {
                    g.add_edge(side + i, side + i + 1, 1.0).unwrap();
                }
            }
        }
        BenchmarkGraph::Barbell => {
            for side in [0, 4] {
                for i in 0..4 {
                    for j in i + 1..4 {
                        g.add_edge(side + i, side + j, 1.0).unwrap();
                    }
                }
            }
            g.add_edge(3, 4, 1.0).unwrap();
        }
        BenchmarkGraph::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(RANDOM_GRAPH_SEED);
            for i in 0..8 {
                for j in i + 1..8 {
                    if rng.random_bool(0.5) {
                        g.add_edge(i, j, 1.0).unwrap();
                    }
                }
            }
        }
    }
    g
}

/// Diagonal of a cost Hamiltonian in the computational basis.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalHamiltonian {
    n_qubits: usize,
    diag: Vec<f64>,
    e_min: f64,
    e_max: f64,
}

impl DiagonalHamiltonian {
    pub fn new(diag: Vec<f64>) -> Result<Self> {
        let len = diag.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::DimensionMismatch {
                expected: len.next_power_of_two().max(2),
                got: len,
            });
        }
        let e_min = diag.iter().copied().fold(f64::INFINITY, f64::min);
        let e_max = diag.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Ok(Self {
            n_qubits: len.trailing_zeros() as usize,
            diag,
            e_min,
            e_max,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn e_min(&self) -> f64 {
        self.e_min
    }

    pub fn e_max(&self) -> f64 {
        self.e_max
    }

    /// Basis states attaining `e_min`.
    pub fn ground_states(&self) -> Vec<usize> {
        (0..self.diag.len()).filter(|&z| self.diag[z] == self.e_min).collect()
    }

    /// `(E − E_min)/(E_max − E_min)`, unclamped.
    pub fn scale_energy(&self, e: f64) -> Result<f64> {
        let span = self.span()?;
        Ok((e - self.e_min) / span)
    }

    /// [`Self::scale_energy`] clamped to `[0, 1]` for reporting.
    pub fn scale_energy_clamped(&self, e: f64) -> Result<f64> {
        Ok(self.scale_energy(e)?.clamp(0.0, 1.0))
    }

    /// `E_max − E_min`, failing for a constant diagonal.
    pub fn span(&self) -> Result<f64> {
        let span = self.e_max - self.e_min;
        if span > 0.0 {
            Ok(span)
        } else {
            Err(Error::ConstantHamiltonian)
        }
    }
}

/// Free function form of [`DiagonalHamiltonian::scale_energy`].
pub fn scale_energy(e: f64, h: &DiagonalHamiltonian) -> Result<f64> {
    h.scale_energy(e)
}

/// `diag[z] = −cut(z)`, so the ground states are the maximum cuts.
pub fn maxcut_hamiltonian(g: &Graph) -> Result<DiagonalHamiltonian> {
    if g.n_nodes > MAX_QUBITS {
        return Err(Error::TooManyNodes {
            got: g.n_nodes,
            max: MAX_QUBITS,
        });
    }
    if g.n_nodes == 0 {
        return Err(Error::InvalidGraph("graph has no nodes".into()));
    }
    DiagonalHamiltonian::new((0..1usize << g.n_nodes).map(|z| -g.cut_value(z)).collect())
}

/// Ising polynomial in `s_i = (−1)^{z_i}`: a constant plus `Z_i` and
/// `Z_i Z_j` coefficients.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct IsingTerms {
    pub n_qubits: usize,
    pub constant: f64,
    pub linear: Vec<(usize, f64)>,
    pub quadratic: Vec<(usize, usize, f64)>,
}

impl IsingTerms {
    pub fn to_hamiltonian(&self) -> Result<DiagonalHamiltonian> {
        if self.n_qubits > MAX_QUBITS {
            return Err(Error::TooManyNodes {
                got: self.n_qubits,
                max: MAX_QUBITS,
            });
        }
        let n = self.n_qubits;
        let mut diag = vec![self.constant; 1 << n];
        for (z, d) in diag.iter_mut().enumerate() {
            let s = |i: usize| if (z >> (n - 1 - i)) & 1 == 1 { -1.0 } else { 1.0 };
            for &(i, c) in &self.linear {
                *d += c * s(i);
            }
            for &(i, j, c) in &self.quadratic {
                *d += c * s(i) * s(j);
            }
        }
        DiagonalHamiltonian::new(diag)
    }
}

impl FromStr for IsingTerms {
    type Err = Error;

    /// Lines `qubits N`, `const c`, `z i c`, `zz i j c`; `#` comments.
    fn from_str(text: &str) -> Result<Self> {
        let mut terms = IsingTerms::default();
        let mut have_qubits = false;
        let mut seen: HashSet<String> = HashSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let err = |msg: String| Error::Parse { line: line_no, msg };
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let t: Vec<&str> = line.split_whitespace().collect();
            let idx = |s: &str| -> Result<usize> {
                let q: usize = s.parse().map_err(|e| err(format!("qubit index: {e}")))?;
                if !have_qubits || q >= terms.n_qubits {
                    return Err(err(format!("qubit {q} outside the declared register")));
                }
                Ok(q)
            };
            let coef = |s: &str| -> Result<f64> { s.parse().map_err(|e| err(format!("coefficient: {e}"))) };
            let key = match (t[0], t.len()) {
                ("qubits", 2) => {
                    if have_qubits {
                        return Err(Error::DuplicateTerm("qubits".into()));
                    }
                    terms.n_qubits = t[1].parse().map_err(|e| err(format!("qubit count: {e}")))?;
                    if terms.n_qubits == 0 || terms.n_qubits > MAX_QUBITS {
                        return Err(err(format!("qubit count must be in 1..={MAX_QUBITS}")));
                    }
                    have_qubits = true;
                    continue;
                }
                ("const", 2) => {
                    terms.constant += coef(t[1])?;
                    "const".to_string()
                }
                ("z", 3) => {
                    let q = idx(t[1])?;
                    terms.linear.push((q, coef(t[2])?));
                    format!("z {q}")
                }
                ("zz", 4) => {
                    let (a, b) = (idx(t[1])?, idx(t[2])?);
                    if a == b {
                        return Err(err("zz term needs two distinct qubits".into()));
                    }
                    terms.quadratic.push((a, b, coef(t[3])?));
                    format!("zz {} {}", a.min(b), a.max(b))
                }
                _ => return Err(err(format!("cannot parse `{line}`"))),
            };
            if !seen.insert(key.clone()) {
                return Err(Error::DuplicateTerm(key));
            }
        }
        if !have_qubits {
            return Err(Error::Parse {
                line: 1,
                msg: "missing `qubits N` line".into(),
            });
        }
        Ok(terms)
    }
}

/// Parses a Hamiltonian file's contents and enumerates its diagonal.
pub fn load_diag_hamiltonian(text: &str) -> Result<DiagonalHamiltonian> {
    text.parse::<IsingTerms>()?.to_hamiltonian()
}
