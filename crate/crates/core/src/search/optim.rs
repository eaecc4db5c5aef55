use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Optimizer {
    #[default]
    GradientDescent,
    Adam,
}

impl FromStr for Optimizer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gd" | "sgd" | "gradient-descent" => Ok(Optimizer::GradientDescent),
            "adam" => Ok(Optimizer::Adam),
            _ => Err(Error::SearchConfig(format!("unknown optimizer {s:?}"))),
        }
    }
}

/// Adam on a flat parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    lr: f64,
    t: i32,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl Adam {
    const B1: f64 = 0.9;
    const B2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    pub fn new(lr: f64, n: usize) -> Self {
        Self {
            lr,
            t: 0,
            m: vec![0.0; n],
            v: vec![0.0; n],
        }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        self.t += 1;
        let c1 = 1.0 - Self::B1.powi(self.t);
        let c2 = 1.0 - Self::B2.powi(self.t);
        for (((p, g), m), v) in params.iter_mut().zip(grad).zip(&mut self.m).zip(&mut self.v) {
            *m = Self::B1 * *m + (1.0 - Self::B1) * g;
            *v = Self::B2 * *v + (1.0 - Self::B2) * g * g;
            *p -= self.lr * (*m / c1) / ((*v / c2).sqrt() + Self::EPS);
        }
    }
}

/// A configured optimizer with its state.
#[derive(Debug, Clone, PartialEq)]
pub enum Stepper {
    GradientDescent(f64),
    Adam(Adam),
}

impl Stepper {
    pub fn new(optimizer: Optimizer, lr: f64, n: usize) -> Self {
        match optimizer {
            Optimizer::GradientDescent => Stepper::GradientDescent(lr),
            Optimizer::Adam => Stepper::Adam(Adam::new(lr, n)),
        }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        match self {
            Stepper::GradientDescent(lr) => {
                for (p, g) in params.iter_mut().zip(grad) {
                    *p -= *lr * g;
                }
            }
            Stepper::Adam(adam) => adam.step(params, grad),
        }
    }
}
