use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Which learnable block fills a branch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BranchModule {
    Kan,
    Mlp,
    Off,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PredictorModule {
    Kan,
    Mlp,
}

/// Which paths get the learnable `1 x d` embedding before their branch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Adjust {
    FreqOnly,
    All,
    None,
    TimeOnly,
}

impl Adjust {
    pub fn embeds_freq(self) -> bool {
        matches!(self, Adjust::FreqOnly | Adjust::All)
    }

    pub fn embeds_time(self) -> bool {
        matches!(self, Adjust::All | Adjust::TimeOnly)
    }
}

/// Whether the real and imaginary parts share one frequency network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sharing {
    Shared,
    Two,
}

/// Layer count of the time network and the predictor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Depth {
    One,
    Two,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct VariantFlags {
    pub freq: BranchModule,
    pub time: BranchModule,
    pub predictor: PredictorModule,
    pub adjust: Adjust,
    pub sharing: Sharing,
}

impl Default for VariantFlags {
    fn default() -> Self {
        Variant::Full.flags()
    }
}

impl VariantFlags {
    pub fn validate(&self) -> Result<()> {
        if self.freq == BranchModule::Off && self.time == BranchModule::Off {
            return Err(Error::Config("frequency and time branches cannot both be off".into()));
        }
        Ok(())
    }
}

/// The named ablation variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    Full,
    Mlp,
    MlpTime,
    MlpFreq,
    MlpPred,
    MlpTimeFreq,
    MlpPredTime,
    MlpPredFreq,
    OnlyTime,
    OnlyFreq,
    AllAdjust,
    NoAdjust,
    OnlyTimeAdjust,
    TwoFreqKan,
}

impl Variant {
    pub const ALL: [Variant; 14] = [
        Variant::Full,
        Variant::Mlp,
        Variant::MlpTime,
        Variant::MlpFreq,
        Variant::MlpPred,
        Variant::MlpTimeFreq,
        Variant::MlpPredTime,
        Variant::MlpPredFreq,
        Variant::OnlyTime,
        Variant::OnlyFreq,
        Variant::AllAdjust,
        Variant::NoAdjust,
        Variant::OnlyTimeAdjust,
        Variant::TwoFreqKan,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Full => "full",
            Variant::Mlp => "mlp",
            Variant::MlpTime => "mlp_time",
            Variant::MlpFreq => "mlp_freq",
            Variant::MlpPred => "mlp_pred",
            Variant::MlpTimeFreq => "mlp_time_freq",
            Variant::MlpPredTime => "mlp_pred_time",
            Variant::MlpPredFreq => "mlp_pred_freq",
            Variant::OnlyTime => "only_time",
            Variant::OnlyFreq => "only_freq",
            Variant::AllAdjust => "all_adjust",
            Variant::NoAdjust => "no_adjust",
            Variant::OnlyTimeAdjust => "only_time_adjust",
            Variant::TwoFreqKan => "two_freqkan",
        }
    }

    pub fn flags(self) -> VariantFlags {
        use BranchModule as B;
        use PredictorModule as P;
        let (freq, time, predictor) = match self {
            Variant::Mlp => (B::Mlp, B::Mlp, P::Mlp),
            Variant::MlpTime => (B::Kan, B::Mlp, P::Kan),
            Variant::MlpFreq => (B::Mlp, B::Kan, P::Kan),
            Variant::MlpPred => (B::Kan, B::Kan, P::Mlp),
            Variant::MlpTimeFreq => (B::Mlp, B::Mlp, P::Kan),
            Variant::MlpPredTime => (B::Kan, B::Mlp, P::Mlp),
            Variant::MlpPredFreq => (B::Mlp, B::Kan, P::Mlp),
            Variant::OnlyTime => (B::Off, B::Kan, P::Kan),
            Variant::OnlyFreq => (B::Kan, B::Off, P::Kan),
            _ => (B::Kan, B::Kan, P::Kan),
        };
        let adjust = match self {
            Variant::AllAdjust => Adjust::All,
            Variant::NoAdjust => Adjust::None,
            Variant::OnlyTimeAdjust => Adjust::TimeOnly,
            _ => Adjust::FreqOnly,
        };
        let sharing = if self == Variant::TwoFreqKan {
            Sharing::Two
        } else {
            Sharing::Shared
        };
        VariantFlags {
            freq,
            time,
            predictor,
            adjust,
            sharing,
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown variant `{s}`")))
    }
}

macro_rules! text_enum {
    ($ty:ty { $($variant:path => $text:literal),+ $(,)? }) => {
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(match self { $($variant => $text),+ })
            }
        }

        impl FromStr for $ty {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($text => Ok($variant),)+
                    other => Err(Error::Config(format!(
                        concat!("invalid ", stringify!($ty), " `{}`"), other
                    ))),
                }
            }
        }
    };
}

text_enum!(BranchModule { BranchModule::Kan => "kan", BranchModule::Mlp => "mlp", BranchModule::Off => "off" });
text_enum!(PredictorModule { PredictorModule::Kan => "kan", PredictorModule::Mlp => "mlp" });
text_enum!(Adjust {
    Adjust::FreqOnly => "freq-only",
    Adjust::All => "all",
    Adjust::None => "none",
    Adjust::TimeOnly => "time-only",
});
text_enum!(Sharing { Sharing::Shared => "shared", Sharing::Two => "two" });
text_enum!(Depth { Depth::One => "1", Depth::Two => "2" });

#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub n_channels: usize,
    pub lookback: usize,
    pub horizon: usize,
    pub embed_dim: usize,
    pub hidden: usize,
    pub grid_size: usize,
    pub spline_order: usize,
    pub depth: Depth,
    pub flags: VariantFlags,
}

impl Default for ModelConfig {
    /// Lookback 96, embedding 128, hidden 258, grid 2, order 1.
    fn default() -> Self {
        Self {
            n_channels: 1,
            lookback: 96,
            horizon: 24,
            embed_dim: 128,
            hidden: 258,
            grid_size: 2,
            spline_order: 1,
            depth: Depth::Two,
            flags: VariantFlags::default(),
        }
    }
}

impl ModelConfig {
    pub fn new(n_channels: usize, lookback: usize, horizon: usize) -> Self {
        Self {
            n_channels,
            lookback,
            horizon,
            ..Self::default()
        }
    }

    pub fn with_variant(mut self, v: Variant) -> Self {
        self.flags = v.flags();
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.lookback < 2 {
            return Err(Error::Config(format!("lookback must be >= 2, got {}", self.lookback)));
        }
        for (name, v) in [
            ("horizon", self.horizon),
            ("embed_dim", self.embed_dim),
            ("n_channels", self.n_channels),
            ("hidden", self.hidden),
            ("grid_size", self.grid_size),
        ] {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be >= 1")));
            }
        }
        self.flags.validate()
    }

    /// Trailing width of the frequency path (1 when it is not embedded).
    pub fn freq_width(&self) -> usize {
        if self.flags.adjust.embeds_freq() {
            self.embed_dim
        } else {
            1
        }
    }

    pub fn time_width(&self) -> usize {
        if self.flags.adjust.embeds_time() {
            self.embed_dim
        } else {
            1
        }
    }

    /// Trailing width of the fused hidden representation.
    pub fn fused_width(&self) -> usize {
        let mut w = 1;
        if self.flags.freq != BranchModule::Off {
            w = w.max(self.freq_width());
        }
        if self.flags.time != BranchModule::Off {
            w = w.max(self.time_width());
        }
        w
    }

    pub fn predictor_input(&self) -> usize {
        self.lookback * self.fused_width()
    }
}
