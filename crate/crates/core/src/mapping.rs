//! Adaptation layer between numbers and device quantities.
//!
//! Weights are mapped linearly onto differential conductance pairs, inputs in
//! `[0, 1]` become read voltages, column currents are decoded back into
//! pre-activations, and the usual activation functions are applied.

use alloc::vec::Vec;

use crate::cell::{DEFAULT_READ_VOLTAGE, READ_VOLTAGE_LIMIT};
use crate::error::{bail, Result};
use crate::math;
use crate::matrix::Matrix;
use crate::MICRO;

/// Linear weight ↔ conductance mapping.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeightMapping {
    /// Conductance given to the largest |w|, µS.
    pub g_max: f64,
    /// Read voltage for an input of 1, V.
    pub v_read: f64,
    /// Conductance of the unused device of a pair, µS.
    pub g_off: f64,
}

impl WeightMapping {
    pub fn new(g_max: f64, v_read: f64, g_off: f64) -> Result<Self> {
        let m = WeightMapping { g_max, v_read, g_off };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.g_max > 0.0 && self.g_max.is_finite()) {
            bail!(Config, "g_max must be > 0, got {}", self.g_max);
        }
        if !(self.v_read > 0.0 && self.v_read <= READ_VOLTAGE_LIMIT) {
            bail!(
                Config,
                "v_read must lie in (0, {READ_VOLTAGE_LIMIT}] V, got {}",
                self.v_read
            );
        }
        if !(self.g_off >= 0.0 && self.g_off < self.g_max) {
            bail!(Config, "g_off must lie in [0, g_max), got {}", self.g_off);
        }
        Ok(())
    }
}

impl Default for WeightMapping {
    fn default() -> Self {
        WeightMapping {
            g_max: 5.0,
            v_read: DEFAULT_READ_VOLTAGE,
            g_off: 0.0,
        }
    }
}

/// Differential conductances for one weight matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct EncodedWeights {
    /// `n × 2m` µS: input `i` drives row `i`; output `j` reads columns
    /// `2j` (positive part) and `2j + 1` (negative part).
    pub g: Matrix,
    /// µS per weight unit.
    pub scale: f64,
}

/// Maps the `m × n` weight matrix `w` onto differential pairs.
pub fn encode_weights(w: &Matrix, mapping: &WeightMapping) -> Result<EncodedWeights> {
    mapping.validate()?;
    if w.as_slice().iter().any(|x| !x.is_finite()) {
        bail!(Argument, "weights must be finite");
    }
    let max = w.max_abs();
    if max == 0.0 {
        bail!(Argument, "all-zero weight matrix has no conductance scale");
    }
    let scale = mapping.g_max / max;
    let (m, n) = w.shape();
    let mut g = Matrix::zeros(n, 2 * m);
    for j in 0..m {
        for i in 0..n {
            let x = w.get(j, i);
            let (pos, neg) = if x >= 0.0 {
                (x * scale, mapping.g_off)
            } else {
                (mapping.g_off, -x * scale)
            };
            g.set(i, 2 * j, pos);
            g.set(i, 2 * j + 1, neg);
        }
    }
    Ok(EncodedWeights { g, scale })
}

/// `y_j = (I_2j − I_2j+1) / (v_read · scale)`, currents in amperes.
pub fn decode_currents(currents: &[f64], scale: f64, v_read: f64) -> Result<Vec<f64>> {
    if currents.len() % 2 != 0 {
        bail!(
            Argument,
            "differential decoding needs an even number of currents, got {}",
            currents.len()
        );
    }
    if !(scale > 0.0) || !(v_read > 0.0) {
        bail!(Argument, "scale and v_read must be positive");
    }
    let denom = v_read * scale * MICRO;
    Ok(currents
        .chunks_exact(2)
        .map(|p| (p[0] - p[1]) / denom)
        .collect())
}

/// `v_i = x_i · v_read` for inputs in `[0, 1]`.
pub fn input_to_voltage(x: &[f64], v_read: f64) -> Result<Vec<f64>> {
    if let Some(bad) = x.iter().find(|v| !(**v >= 0.0 && **v <= 1.0)) {
        bail!(Argument, "input {bad} lies outside [0, 1]");
    }
    Ok(x.iter().map(|v| v * v_read).collect())
}

/// Activation applied by the adaptation layer.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum Activation {
    #[default]
    Relu,
    Sigmoid,
    Tanh,
    /// Pass-through, used for output logits.
    Identity,
}

impl Activation {
    #[inline]
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Sigmoid => 1.0 / (1.0 + math::exp(-z)),
            Activation::Tanh => math::tanh(z),
            Activation::Identity => z,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Sigmoid => "sigmoid",
            Activation::Tanh => "tanh",
            Activation::Identity => "identity",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "relu" => Some(Activation::Relu),
            "sigmoid" => Some(Activation::Sigmoid),
            "tanh" => Some(Activation::Tanh),
            "identity" | "none" => Some(Activation::Identity),
            _ => None,
        }
    }
}

pub fn apply_nonlinearity(z: &[f64], kind: Activation) -> Vec<f64> {
    z.iter().map(|v| kind.apply(*v)).collect()
}
