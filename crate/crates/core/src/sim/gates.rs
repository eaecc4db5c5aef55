use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

pub type Matrix2 = [[C64; 2]; 2];
pub type Matrix4 = [[C64; 4]; 4];

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Gate vocabulary of the operation pools.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GateKind {
    RX,
    RY,
    RZ,
    H,
    X,
    T,
    U3,
    CU3,
    CZ,
    CNOT,
    /// Placeholder for an idle slot; carries no matrix.
    Idle,
}

impl GateKind {
    pub const ALL: [GateKind; 11] = [
        GateKind::RX,
        GateKind::RY,
        GateKind::RZ,
        GateKind::H,
        GateKind::X,
        GateKind::T,
        GateKind::U3,
        GateKind::CU3,
        GateKind::CZ,
        GateKind::CNOT,
        GateKind::Idle,
    ];

    pub fn param_arity(self) -> usize {
        match self {
            GateKind::RX | GateKind::RY | GateKind::RZ => 1,
            GateKind::U3 | GateKind::CU3 => 3,
            _ => 0,
        }
    }

    pub fn n_qubits(self) -> usize {
        match self {
            GateKind::CU3 | GateKind::CZ | GateKind::CNOT => 2,
            _ => 1,
        }
    }

    pub fn is_controlled(self) -> bool {
        self.n_qubits() == 2
    }

    pub fn is_parameterized(self) -> bool {
        self.param_arity() > 0
    }

    pub fn name(self) -> &'static str {
        match self {
            GateKind::RX => "RX",
            GateKind::RY => "RY",
            GateKind::RZ => "RZ",
            GateKind::H => "H",
            GateKind::X => "X",
            GateKind::T => "T",
            GateKind::U3 => "U3",
            GateKind::CU3 => "CU3",
            GateKind::CZ => "CZ",
            GateKind::CNOT => "CNOT",
            GateKind::Idle => "IDLE",
        }
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GateKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let upper = s.trim().to_ascii_uppercase();
        GateKind::ALL
            .iter()
            .copied()
            .find(|k| k.name() == upper)
            .or(match upper.as_str() {
                "CX" => Some(GateKind::CNOT),
                "I" | "ID" => Some(GateKind::Idle),
                _ => None,
            })
            .ok_or_else(|| format!("unknown gate `{s}`"))
    }
}

/// Matrix of a gate, 2×2 for single-qubit kinds and 4×4 (basis order
/// `|q0 q1⟩`, `q0` most significant) for two-qubit kinds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GateMatrix {
    Identity,
    One(Matrix2),
    Two(Matrix4),
}

impl GateMatrix {
    pub fn dim(&self) -> usize {
        match self {
            GateMatrix::Identity => 1,
            GateMatrix::One(_) => 2,
            GateMatrix::Two(_) => 4,
        }
    }

    /// Row-major dense copy; `Identity` becomes the 2×2 identity.
    pub fn to_dense(&self) -> Vec<Vec<C64>> {
        match self {
            GateMatrix::Identity => vec![vec![ONE, ZERO], vec![ZERO, ONE]],
            GateMatrix::One(m) => m.iter().map(|r| r.to_vec()).collect(),
            GateMatrix::Two(m) => m.iter().map(|r| r.to_vec()).collect(),
        }
    }

    /// Element-wise complex conjugate (not the adjoint).
    pub fn conj(&self) -> GateMatrix {
        match self {
            GateMatrix::Identity => GateMatrix::Identity,
            GateMatrix::One(m) => GateMatrix::One(m.map(|r| r.map(|z| z.conj()))),
            GateMatrix::Two(m) => GateMatrix::Two(m.map(|r| r.map(|z| z.conj()))),
        }
    }

    pub fn adjoint(&self) -> GateMatrix {
        match self {
            GateMatrix::Identity => GateMatrix::Identity,
            GateMatrix::One(m) => {
                let mut out = [[ZERO; 2]; 2];
                for (i, row) in m.iter().enumerate() {
                    for (j, z) in row.iter().enumerate() {
                        out[j][i] = z.conj();
                    }
                }
                GateMatrix::One(out)
            }
            GateMatrix::Two(m) => {
                let mut out = [[ZERO; 4]; 4];
                for (i, row) in m.iter().enumerate() {
                    for (j, z) in row.iter().enumerate() {
                        out[j][i] = z.conj();
                    }
                }
                GateMatrix::Two(out)
            }
        }
    }
}

fn check_arity(kind: GateKind, params: &[f64]) -> Result<()> {
    if params.len() != kind.param_arity() {
        return Err(Error::Arity {
            kind,
            expected: kind.param_arity(),
            got: params.len(),
        });
    }
    Ok(())
}

fn u3(theta: f64, phi: f64, lambda: f64) -> Matrix2 {
    let (s, c) = (theta / 2.0).sin_cos();
    [
        [C64::new(c, 0.0), -C64::from_polar(s, lambda)],
        [C64::from_polar(s, phi), C64::from_polar(c, phi + lambda)],
    ]
}

fn controlled(u: Matrix2) -> Matrix4 {
    let mut m = [[ZERO; 4]; 4];
    m[0][0] = ONE;
    m[1][1] = ONE;
    m[2][2] = u[0][0];
    m[2][3] = u[0][1];
    m[3][2] = u[1][0];
    m[3][3] = u[1][1];
    m
}

/// Unitary of `kind` at the given rotation angles.
///
/// `U3(θ, φ, λ) = [[cos θ/2, −e^{iλ} sin θ/2], [e^{iφ} sin θ/2, e^{i(φ+λ)} cos θ/2]]`;
/// `CU3` applies it to the second qubit when the first is `|1⟩`.
pub fn gate_matrix(kind: GateKind, params: &[f64]) -> Result<GateMatrix> {
    check_arity(kind, params)?;
    let m = match kind {
        GateKind::Idle => GateMatrix::Identity,
        GateKind::RX => {
            let (s, c) = (params[0] / 2.0).sin_cos();
            GateMatrix::One([
                [C64::new(c, 0.0), C64::new(0.0, -s)],
                [C64::new(0.0, -s), C64::new(c, 0.0)],
            ])
        }
        GateKind::RY => {
            let (s, c) = (params[0] / 2.0).sin_cos();
            GateMatrix::One([
                [C64::new(c, 0.0), C64::new(-s, 0.0)],
                [C64::new(s, 0.0), C64::new(c, 0.0)],
            ])
        }
        GateKind::RZ => {
            let half = params[0] / 2.0;
            GateMatrix::One([[C64::from_polar(1.0, -half), ZERO], [ZERO, C64::from_polar(1.0, half)]])
        }
        GateKind::H => {
            let h = C64::new(FRAC_1_SQRT_2, 0.0);
            GateMatrix::One([[h, h], [h, -h]])
        }
        GateKind::X => GateMatrix::One([[ZERO, ONE], [ONE, ZERO]]),
        GateKind::T => GateMatrix::One([[ONE, ZERO], [ZERO, C64::from_polar(1.0, std::f64::consts::FRAC_PI_4)]]),
        GateKind::U3 => GateMatrix::One(u3(params[0], params[1], params[2])),
        GateKind::CU3 => GateMatrix::Two(controlled(u3(params[0], params[1], params[2]))),
        GateKind::CZ => {
            let mut m = controlled([[ONE, ZERO], [ZERO, ONE]]);
            m[3][3] = -ONE;
            GateMatrix::Two(m)
        }
        GateKind::CNOT => GateMatrix::Two(controlled([[ZERO, ONE], [ONE, ZERO]])),
    };
    Ok(m)
}

/// Partial derivative of the gate matrix with respect to parameter `which`.
pub fn gate_matrix_derivative(kind: GateKind, params: &[f64], which: usize) -> Result<GateMatrix> {
    check_arity(kind, params)?;
    if which >= kind.param_arity() {
        return Err(Error::Arity {
            kind,
            expected: kind.param_arity(),
            got: which + 1,
        });
    }
    let d = match kind {
        GateKind::RX => {
            let (s, c) = (params[0] / 2.0).sin_cos();
            GateMatrix::One([
                [C64::new(-s / 2.0, 0.0), C64::new(0.0, -c / 2.0)],
                [C64::new(0.0, -c / 2.0), C64::new(-s / 2.0, 0.0)],
            ])
        }
        GateKind::RY => {
            let (s, c) = (params[0] / 2.0).sin_cos();
            GateMatrix::One([
                [C64::new(-s / 2.0, 0.0), C64::new(-c / 2.0, 0.0)],
                [C64::new(c / 2.0, 0.0), C64::new(-s / 2.0, 0.0)],
            ])
        }
        GateKind::RZ => {
            let half = params[0] / 2.0;
            GateMatrix::One([
                [C64::new(0.0, -0.5) * C64::from_polar(1.0, -half), ZERO],
                [ZERO, C64::new(0.0, 0.5) * C64::from_polar(1.0, half)],
            ])
        }
        GateKind::U3 => GateMatrix::One(u3_derivative(params, which)),
        GateKind::CU3 => {
            let mut m = [[ZERO; 4]; 4];
            let du = u3_derivative(params, which);
            m[2][2] = du[0][0];
            m[2][3] = du[0][1];
            m[3][2] = du[1][0];
            m[3][3] = du[1][1];
            GateMatrix::Two(m)
        }
        _ => unreachable!("arity checked above"),
    };
    Ok(d)
}

fn u3_derivative(params: &[f64], which: usize) -> Matrix2 {
    let (theta, phi, lambda) = (params[0], params[1], params[2]);
    let (s, c) = (theta / 2.0).sin_cos();
    let i = C64::new(0.0, 1.0);
    match which {
        0 => [
            [C64::new(-s / 2.0, 0.0), -C64::from_polar(c / 2.0, lambda)],
            [C64::from_polar(c / 2.0, phi), C64::from_polar(-s / 2.0, phi + lambda)],
        ],
        1 => [
            [ZERO, ZERO],
            [i * C64::from_polar(s, phi), i * C64::from_polar(c, phi + lambda)],
        ],
        _ => [
            [ZERO, -i * C64::from_polar(s, lambda)],
            [ZERO, i * C64::from_polar(c, phi + lambda)],
        ],
    }
}
