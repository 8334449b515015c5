use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::record::NUM_PRIMES;

/// Three conv blocks (conv → ReLU → max-pool), dropout, then a dense stack.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CnnConfig {
    pub conv_channels: Vec<usize>,
    pub kernel: usize,
    pub padding: usize,
    pub pool_kernel: usize,
    pub pool_padding: usize,
    pub pool_stride: usize,
    pub dropout: f64,
    pub fc_widths: Vec<usize>,
    pub out_width: usize,
    pub input_length: usize,
    pub input_channels: usize,
}

impl CnnConfig {
    pub fn new(out_width: usize) -> Self {
        CnnConfig {
            conv_channels: vec![16, 32, 64],
            kernel: 3,
            padding: 1,
            pool_kernel: 2,
            pool_padding: 1,
            pool_stride: 2,
            dropout: 0.5,
            fc_widths: vec![128, 128],
            out_width,
            input_length: NUM_PRIMES,
            input_channels: 1,
        }
    }

    pub fn with_input_length(mut self, len: usize) -> Self {
        self.input_length = len;
        self
    }

    pub fn conv_out_len(&self, len: usize) -> Option<usize> {
        (len + 2 * self.padding + 1).checked_sub(self.kernel)
    }

    /// `floor((L + 2P - K) / S) + 1`
    pub fn pool_out_len(&self, len: usize) -> Option<usize> {
        (len + 2 * self.pool_padding)
            .checked_sub(self.pool_kernel)
            .map(|v| v / self.pool_stride + 1)
    }

    /// Sequence length after each conv block, starting with the input length.
    pub fn length_trace(&self) -> Vec<usize> {
        let mut out = vec![self.input_length];
        let mut len = self.input_length;
        for _ in &self.conv_channels {
            match self.conv_out_len(len).and_then(|l| self.pool_out_len(l)) {
                Some(l) => len = l,
                None => break,
            }
            out.push(len);
        }
        out
    }

    pub fn flatten_width(&self) -> usize {
        self.conv_channels
            .last()
            .copied()
            .unwrap_or(self.input_channels)
            * self.length_trace().last().copied().unwrap_or(0)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            self.kernel,
            self.pool_kernel,
            self.pool_stride,
            self.out_width,
            self.input_length,
            self.input_channels,
        ];
        if positive.contains(&0) || self.conv_channels.contains(&0) || self.fc_widths.contains(&0) {
            return Err(Error::Config("CNN sizes must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Config("dropout must lie in [0, 1)".into()));
        }
        if self.pool_padding * 2 > self.pool_kernel {
            // Wider padding could make a window see only padding.
            return Err(Error::Config(
                "pool padding must be at most half the pool kernel".into(),
            ));
        }
        if self.length_trace().len() != self.conv_channels.len() + 1 || self.flatten_width() == 0 {
            return Err(Error::Config(format!(
                "input length {} too short for the conv stack",
                self.input_length
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FnnConfig {
    pub hidden_widths: Vec<usize>,
    pub dropout: f64,
    pub out_width: usize,
    pub input_length: usize,
}

impl FnnConfig {
    pub fn new(out_width: usize) -> Self {
        FnnConfig {
            hidden_widths: vec![128, 128],
            dropout: 0.5,
            out_width,
            input_length: NUM_PRIMES,
        }
    }

    pub fn with_input_length(mut self, len: usize) -> Self {
        self.input_length = len;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.out_width == 0 || self.input_length == 0 || self.hidden_widths.contains(&0) {
            return Err(Error::Config("FNN sizes must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Config("dropout must lie in [0, 1)".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Arch {
    Cnn(CnnConfig),
    Fnn(FnnConfig),
}

impl Arch {
    pub fn input_length(&self) -> usize {
        match self {
            Arch::Cnn(c) => c.input_length * c.input_channels,
            Arch::Fnn(c) => c.input_length,
        }
    }

    pub fn out_width(&self) -> usize {
        match self {
            Arch::Cnn(c) => c.out_width,
            Arch::Fnn(c) => c.out_width,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Arch::Cnn(c) => c.validate(),
            Arch::Fnn(c) => c.validate(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Arch::Cnn(_) => "CNN",
            Arch::Fnn(_) => "FNN",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Loss {
    /// Softmax over one logit per class.
    #[default]
    CrossEntropy,
    /// A single output regressed onto the numeric order.
    MseScalar,
}

impl FromStr for Loss {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cross-entropy" | "cross_entropy" | "ce" => Ok(Loss::CrossEntropy),
            "mse" | "mse-scalar" | "mse_scalar" => Ok(Loss::MseScalar),
            _ => Err(Error::Config(format!("unknown loss {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub learning_rate: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 3000,
            learning_rate: 0.001,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            epochs: 100,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be positive".into()));
        }
        let rates = [self.learning_rate, self.adam_eps];
        if rates.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
            return Err(Error::Config(
                "learning rate and epsilon must be positive".into(),
            ));
        }
        if ![self.adam_beta1, self.adam_beta2]
            .iter()
            .all(|b| (0.0..1.0).contains(b))
        {
            return Err(Error::Config("Adam betas must lie in [0, 1)".into()));
        }
        Ok(())
    }
}
