//! Per-command settings, read from flags and an optional JSON file (flags win).

use std::fs;
use std::path::PathBuf;

use clap::ValueEnum;
use qtb_core::channels::AccountingMode;
use qtb_core::optimize::OptimizerConfig;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Energy changes are paid from the battery.
    BatteryPowered,
    /// The device supplies its own energy changes.
    InternalPower,
}

impl From<Mode> for AccountingMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::BatteryPowered => AccountingMode::BatteryPowered,
            Mode::InternalPower => AccountingMode::InternalPower,
        }
    }
}

impl Mode {
    pub fn label(self) -> &'static str {
        match self {
            Mode::BatteryPowered => "battery-powered",
            Mode::InternalPower => "internal-power",
        }
    }
}

/// Declares a settings struct with the shared fields plus command-specific ones,
/// all optional so that flag and file values can be layered.
macro_rules! settings {
    ($(#[$meta:meta])* $name:ident { $($(#[$fmeta:meta])* $field:ident : $ty:ty),* $(,)? }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Default, clap::Args, Serialize, Deserialize)]
        #[serde(deny_unknown_fields)]
        pub struct $name {
            /// JSON file with settings; command-line flags take precedence.
            #[arg(long)]
            #[serde(skip)]
            pub config: Option<PathBuf>,
            /// Output CSV path; standard output when absent.
            #[arg(long, short)]
            #[serde(skip_serializing)]
            pub output: Option<PathBuf>,
            /// Bath temperature.
            #[arg(long, allow_negative_numbers = true)]
            pub temp: Option<f64>,
            /// Seed for optimizer restarts and random objects.
            #[arg(long)]
            pub seed: Option<u64>,
            /// Random optimizer restarts in addition to the maximally mixed start.
            #[arg(long)]
            pub restarts: Option<usize>,
            /// Optimizer gradient tolerance.
            #[arg(long, allow_negative_numbers = true)]
            pub tol: Option<f64>,
            /// Optimizer iteration cap per restart.
            #[arg(long)]
            pub max_iter: Option<usize>,
            $($(#[$fmeta])* pub $field: Option<$ty>,)*
        }

        impl $name {
            /// Fills every unset field from `file`.
            fn layer(mut self, file: Self) -> Self {
                self.output = self.output.or(file.output);
                self.temp = self.temp.or(file.temp);
                self.seed = self.seed.or(file.seed);
                self.restarts = self.restarts.or(file.restarts);
                self.tol = self.tol.or(file.tol);
                self.max_iter = self.max_iter.or(file.max_iter);
                $(self.$field = self.$field.or(file.$field);)*
                self
            }
        }

        impl Settings for $name {
            fn resolve_file(self) -> Result<Self, CliError> {
                match self.config.clone() {
                    None => Ok(self),
                    Some(path) => {
                        let text = fs::read_to_string(&path)
                            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
                        let file: Self = serde_json::from_str(&text)
                            .map_err(|e| CliError::Validation(vec![format!("{}: {e}", path.display())]))?;
                        Ok(self.layer(file))
                    }
                }
            }

            fn common(&mut self) -> Common<'_> {
                Common {
                    temp: &mut self.temp,
                    seed: &mut self.seed,
                    restarts: &mut self.restarts,
                    tol: &mut self.tol,
                    max_iter: &mut self.max_iter,
                }
            }

            fn output(&self) -> Option<&PathBuf> {
                self.output.as_ref()
            }
        }
    };
}

pub trait Settings: Serialize + Sized {
    fn resolve_file(self) -> Result<Self, CliError>;
    fn common(&mut self) -> Common<'_>;
    fn output(&self) -> Option<&PathBuf>;
}

/// Mutable view of the shared fields; reading a value also records its default.
pub struct Common<'a> {
    temp: &'a mut Option<f64>,
    seed: &'a mut Option<u64>,
    restarts: &'a mut Option<usize>,
    tol: &'a mut Option<f64>,
    max_iter: &'a mut Option<usize>,
}

impl Common<'_> {
    pub fn temp(&mut self) -> f64 {
        *self.temp.get_or_insert(1.0)
    }

    pub fn seed(&mut self) -> u64 {
        *self.seed.get_or_insert(0)
    }

    pub fn optimizer(&mut self) -> OptimizerConfig {
        let d = OptimizerConfig::default();
        OptimizerConfig {
            restarts: *self.restarts.get_or_insert(d.restarts),
            max_iter: *self.max_iter.get_or_insert(d.max_iter),
            grad_tol: *self.tol.get_or_insert(d.grad_tol),
            fd_step: d.fd_step,
            seed: self.seed(),
        }
    }

    /// Problems with the shared fields.
    pub fn problems(&mut self) -> Vec<String> {
        let mut out = Vec::new();
        let t = self.temp();
        if !(t > 0.0 && t.is_finite()) {
            out.push(format!("temp must be positive and finite, got {t}"));
        }
        let o = self.optimizer();
        if !(o.grad_tol > 0.0) {
            out.push(format!("tol must be positive, got {}", o.grad_tol));
        }
        if o.max_iter == 0 {
            out.push("max_iter must be at least 1".into());
        }
        out
    }
}

settings! {
    /// Single-use work benefit of a channel.
    ChannelBenefit {
        /// Channel name (e.g. werner-holevo, depolarizing(0.3,3)) or JSON file.
        #[arg(long)]
        channel: String,
        #[arg(long, value_enum)]
        mode: Mode,
        /// Diagonal Hamiltonian entries, comma separated (internal-power mode).
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        energies: Vec<f64>,
        /// Hamiltonian as a JSON matrix file (internal-power mode).
        #[arg(long)]
        hamiltonian: String,
    }
}

settings! {
    /// Single-use work benefit of a measurement.
    MeasureBenefit {
        /// Measurement name (basis2, coin(3), random(2,3)) or JSON file.
        #[arg(long)]
        measurement: String,
        #[arg(long, value_enum)]
        mode: Mode,
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        energies: Vec<f64>,
        #[arg(long)]
        hamiltonian: String,
    }
}

settings! {
    /// Per-outcome conditional work of a measurement on one state.
    ConditionalWork {
        #[arg(long)]
        measurement: String,
        /// Input state: mixed, plus, basis:K, diag:p0/p1/..., or JSON file.
        #[arg(long)]
        state: String,
        #[arg(long, value_enum)]
        mode: Mode,
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        energies: Vec<f64>,
        #[arg(long)]
        hamiltonian: String,
    }
}

settings! {
    /// Post-selected work against ancilla dimension.
    PostselectScan {
        #[arg(long)]
        measurement: String,
        /// Successful outcome indices, comma separated.
        #[arg(long, value_delimiter = ',')]
        success: Vec<usize>,
        /// Ancilla dimensions, comma separated.
        #[arg(long, value_delimiter = ',')]
        da: Vec<usize>,
        #[arg(long, value_enum)]
        mode: Mode,
        /// Target Hamiltonian diagonal (zero when absent).
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        energies: Vec<f64>,
    }
}

settings! {
    /// Distance between explicit-weight and implicit channels against weight width.
    WeightConverge {
        /// Channel to dilate; a seeded random qubit channel when absent.
        #[arg(long)]
        channel: String,
        /// Target Hamiltonian diagonal (unit-width ladder when absent).
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        energies: Vec<f64>,
        /// Top-hat half-widths, comma separated.
        #[arg(long, value_delimiter = ',')]
        lengths: Vec<f64>,
        /// Momentum window constant: eps = c / sqrt(L).
        #[arg(long)]
        c: f64,
    }
}

settings! {
    /// Conditional work with top-hat and triangular weights.
    WeightCompare {
        /// Measurement; a seeded random qubit measurement when absent.
        #[arg(long)]
        measurement: String,
        #[arg(long)]
        state: String,
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        energies: Vec<f64>,
        /// Weight width L.
        #[arg(long)]
        length: f64,
    }
}

settings! {
    /// Stepwise swap protocol between two diagonal states.
    ProtocolSteps {
        /// Initial state (diagonal).
        #[arg(long)]
        initial: String,
        /// Final state (diagonal).
        #[arg(long)]
        r#final: String,
        /// System dimension for named states.
        #[arg(long)]
        dim: usize,
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        energies: Vec<f64>,
        #[arg(long)]
        steps: usize,
        /// Weight of I/d mixed into both endpoints so they are full rank.
        #[arg(long)]
        eta: f64,
    }
}

settings! {
    /// Unital, Gibbs-preserving and catalytic report for a channel.
    Classify {
        #[arg(long)]
        channel: String,
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        energies: Vec<f64>,
        #[arg(long)]
        hamiltonian: String,
    }
}
