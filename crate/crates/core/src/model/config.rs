use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest `lat × lon` the dense attention accepts by default.
pub const DEFAULT_ATTENTION_CAP: usize = 4096;

/// Trainable-parameter total quoted for the full-scale reference model.
pub const REFERENCE_PARAM_COUNT: usize = 10_648_834;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReSAConfig {
    /// Hidden channels of each stacked ConvLSTM layer, bottom first.
    pub hidden: Vec<usize>,
    /// Odd ConvLSTM kernel size.
    pub kernel: usize,
    /// Attention channel reduction: query/key width is `C_h / reduction`.
    pub reduction: usize,
    pub in_channels: usize,
    pub out_channels: usize,
    pub lat: usize,
    pub lon: usize,
    /// Periodic padding in longitude.
    pub lon_wrap: bool,
    /// Per-lead spatial self-attention on the top hidden state.
    pub attention: bool,
    /// Output head adds its correction to the input forecast.
    pub residual: bool,
    pub batchnorm: bool,
    /// Apply batchnorm before rather than after attention.
    pub bn_before_attention: bool,
    pub attention_cap: usize,
}

impl Default for ReSAConfig {
    fn default() -> Self {
        Self {
            hidden: vec![32, 32],
            kernel: 3,
            reduction: 4,
            in_channels: 1,
            out_channels: 1,
            lat: 24,
            lon: 48,
            lon_wrap: true,
            attention: true,
            residual: true,
            batchnorm: true,
            bn_before_attention: false,
            attention_cap: DEFAULT_ATTENTION_CAP,
        }
    }
}

/// The four ablation variants.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Architecture {
    ConvLstm,
    SaConvLstm,
    ResidualConvLstm,
    ResaConvLstm,
}

impl Architecture {
    pub const ALL: [Architecture; 4] = [
        Architecture::ConvLstm,
        Architecture::SaConvLstm,
        Architecture::ResidualConvLstm,
        Architecture::ResaConvLstm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Architecture::ConvLstm => "ConvLSTM",
            Architecture::SaConvLstm => "SA-ConvLSTM",
            Architecture::ResidualConvLstm => "Residual-ConvLSTM",
            Architecture::ResaConvLstm => "ReSA-ConvLSTM",
        }
    }

    /// `config` with the attention and residual-head flags of this variant.
    pub fn configure(self, mut config: ReSAConfig) -> ReSAConfig {
        let (attention, residual) = match self {
            Architecture::ConvLstm => (false, false),
            Architecture::SaConvLstm => (true, false),
            Architecture::ResidualConvLstm => (false, true),
            Architecture::ResaConvLstm => (true, true),
        };
        config.attention = attention;
        config.residual = residual;
        config
    }
}

impl ReSAConfig {
    /// Deep, wide stack used only to compare parameter totals with the
    /// reference model; never trained here.
    pub fn reference_scale() -> Self {
        Self {
            hidden: vec![192, 256, 256],
            lat: 181,
            lon: 360,
            attention_cap: usize::MAX,
            ..Self::default()
        }
    }

    pub fn layers(&self) -> usize {
        self.hidden.len()
    }

    /// Channels reaching attention, batchnorm and the head.
    pub fn feature_channels(&self) -> usize {
        self.hidden.last().copied().unwrap_or(self.in_channels)
    }

    pub fn attention_width(&self) -> usize {
        (self.feature_channels() / self.reduction.max(1)).max(1)
    }

    pub fn validate(&self) -> Result<()> {
        if self.kernel == 0 || self.kernel.is_multiple_of(2) {
            return Err(Error::config(format!("kernel must be odd, got {}", self.kernel)));
        }
        if self.hidden.contains(&0) || self.in_channels == 0 || self.out_channels == 0 {
            return Err(Error::config("channel counts must be positive"));
        }
        if self.reduction == 0 {
            return Err(Error::config("attention reduction must be positive"));
        }
        if self.lat == 0 || self.lon == 0 {
            return Err(Error::config("grid dims must be positive"));
        }
        if self.residual && self.in_channels != self.out_channels {
            return Err(Error::config("residual head needs equal input and output channels"));
        }
        if self.attention && self.lat * self.lon > self.attention_cap {
            return Err(Error::config(format!(
                "grid {}×{} exceeds the dense attention cap of {} points; use a coarser grid or a tiled attention mode",
                self.lat, self.lon, self.attention_cap
            )));
        }
        Ok(())
    }
}

/// Scalar parameters of one ConvLSTM layer.
pub fn convlstm_layer_params(cin: usize, ch: usize, k: usize) -> usize {
    4 * ((cin + ch) * ch * k * k + ch)
}

/// Exact scalar parameter count implied by `config`.
pub fn param_count(config: &ReSAConfig) -> usize {
    let mut total = 0;
    let mut cin = config.in_channels;
    for &ch in &config.hidden {
        total += convlstm_layer_params(cin, ch, config.kernel);
        cin = ch;
    }
    let c = config.feature_channels();
    if config.attention {
        let d = config.attention_width();
        total += 2 * (c * d + d) + c * c + c + 1;
    }
    if config.batchnorm {
        total += 2 * c;
    }
    total + c * config.out_channels + config.out_channels
}
