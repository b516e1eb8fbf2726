//! Experiment configuration: per-command defaults, JSON config files, and
//! command-line overrides.
//!
//! Resolution order is fixed: built-in defaults for the command, then the
//! config file (if any), then explicit flags. The resolved configuration
//! is echoed verbatim into every report so published numbers carry the
//! dimensions, seed, and tolerances that produced them.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

/// Master seed used when neither the config file nor a flag provides one.
pub const DEFAULT_SEED: u64 = 42;
/// Pass/fail comparison tolerance used when none is provided.
pub const DEFAULT_TOL: f64 = 1e-7;
/// Default weight parameter for the alpha family.
pub const DEFAULT_ALPHA: f64 = 4.0;

/// Configuration errors; all of them are usage errors for the binary.
#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config file {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    /// Malformed or unexpected JSON; the message carries serde's line and
    /// column and names unknown keys.
    #[error("config file {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

/// Report output format.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    Text,
    Json,
    Csv,
}

/// The experiment command a configuration drives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Row norm of the transpose vs column norm on Drury-Arveson spaces.
    VerifyColumnRow,
    /// Matrix reshape norm vs column norm.
    VerifyColumnMatrix,
    /// The same inequality for the Szego -> squared-Szego kernel pair.
    VerifyPairs,
    /// Constructive Leech factorization postconditions.
    LeechCheck,
    /// Ball-automorphism identity residuals.
    MoebiusIdentities,
    /// The (z1, z2)/sqrt(2) example on the documented 40-point set.
    ReproduceExampleRowColumn,
    /// Scaled 2x2 matrix units: row, column, and block norms.
    ReproduceMatrixUnits,
    /// Weighted-Hardy alpha family closed forms and the Pick test.
    ReproduceAlpha,
    /// Extreme-point witness search on a documented disc set.
    ReproduceExtreme,
    /// Interpolation operator, Carleson bound, and weak separation.
    ReproduceInterpolation,
    /// Row/column ratios on power kernels over a range of exponents.
    SweepPowerKernel,
}

impl Command {
    /// Canonical command name as echoed in reports.
    pub fn name(self) -> &'static str {
        match self {
            Command::VerifyColumnRow => "verify-column-row",
            Command::VerifyColumnMatrix => "verify-column-matrix",
            Command::VerifyPairs => "verify-pairs",
            Command::LeechCheck => "leech-check",
            Command::MoebiusIdentities => "moebius-identities",
            Command::ReproduceExampleRowColumn => "reproduce-example-row-column",
            Command::ReproduceMatrixUnits => "reproduce-matrix-units",
            Command::ReproduceAlpha => "reproduce-alpha",
            Command::ReproduceExtreme => "reproduce-extreme",
            Command::ReproduceInterpolation => "reproduce-interpolation",
            Command::SweepPowerKernel => "sweep-power-kernel",
        }
    }

    /// Per-command defaults `(d, n, N, trials)`. Dimension-like values act
    /// as upper bounds for the per-trial samplers; reproduction commands
    /// mostly ignore them.
    fn default_dims(self) -> (usize, usize, usize, usize) {
        match self {
            Command::VerifyColumnRow => (3, 6, 4, 200),
            // N bounds the reshaped column length M*N.
            Command::VerifyColumnMatrix => (3, 6, 6, 100),
            // Pairs live on the disc; d is pinned to 1 in resolve().
            Command::VerifyPairs => (1, 5, 3, 50),
            Command::LeechCheck => (3, 5, 3, 100),
            // n is unused; N bounds nothing (the defect identity uses
            // columns of size d); trials are per dimension.
            Command::MoebiusIdentities => (3, 4, 3, 100),
            Command::ReproduceExampleRowColumn => (2, 40, 2, 1),
            Command::ReproduceMatrixUnits => (2, 1, 4, 1),
            Command::ReproduceAlpha => (1, 1, 2, 1),
            Command::ReproduceExtreme => (1, 4, 1, 1),
            Command::ReproduceInterpolation => (2, 5, 1, 1),
            // trials are per sweep step.
            Command::SweepPowerKernel => (2, 5, 3, 20),
        }
    }

    fn kernel_description(self, cfg: &ExperimentConfig) -> String {
        match self {
            Command::VerifyColumnRow | Command::VerifyColumnMatrix | Command::LeechCheck => {
                format!("drury-arveson(d<={})", cfg.d)
            }
            Command::VerifyPairs => "szego -> szego^2".to_string(),
            Command::MoebiusIdentities => format!("ball automorphisms(d<={})", cfg.d),
            Command::ReproduceExampleRowColumn => "drury-arveson(d=2)".to_string(),
            Command::ReproduceMatrixUnits => "none (plain operator norms)".to_string(),
            Command::ReproduceAlpha => format!("weighted-hardy(alpha={})", cfg.alpha),
            Command::ReproduceExtreme => "drury-arveson(d=1)".to_string(),
            Command::ReproduceInterpolation => "drury-arveson(d=2)".to_string(),
            Command::SweepPowerKernel => format!(
                "power(a in [{}, {}], d={})",
                cfg.a_min, cfg.a_max, cfg.d
            ),
        }
    }
}

/// Partial configuration as read from a JSON file. Every field is
/// optional; unknown keys are rejected by name.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub d: Option<usize>,
    pub n: Option<usize>,
    #[serde(rename = "N")]
    pub big_n: Option<usize>,
    pub trials: Option<usize>,
    pub seed: Option<u64>,
    pub tol: Option<f64>,
    pub alpha: Option<f64>,
    pub a_min: Option<f64>,
    pub a_max: Option<f64>,
    pub steps: Option<usize>,
    pub out: Option<PathBuf>,
    pub format: Option<ReportFormat>,
}

/// Explicit command-line values; `None` means "not given on the command
/// line", so the config file or the defaults decide.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub d: Option<usize>,
    pub n: Option<usize>,
    pub big_n: Option<usize>,
    pub trials: Option<usize>,
    pub seed: Option<u64>,
    pub tol: Option<f64>,
    pub alpha: Option<f64>,
    pub a_min: Option<f64>,
    pub a_max: Option<f64>,
    pub steps: Option<usize>,
    pub out: Option<PathBuf>,
    pub format: Option<ReportFormat>,
}

/// Fully resolved configuration, echoed into every report.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentConfig {
    pub command: Command,
    /// Human-readable kernel description for the command.
    pub kernel: String,
    /// Upper bound for the sampled ambient dimension.
    pub d: usize,
    /// Upper bound for the sampled point count.
    pub n: usize,
    /// Upper bound for the sampled column length.
    #[serde(rename = "N")]
    pub big_n: usize,
    pub trials: usize,
    pub seed: u64,
    /// Pass/fail comparison tolerance for the property suites.
    pub tol: f64,
    /// Bisection tolerance used for every multiplier norm.
    pub bisection_tol: f64,
    /// Weight parameter of the alpha family (reproduce-alpha only).
    pub alpha: f64,
    /// Sweep range and resolution (sweep-power-kernel only).
    pub a_min: f64,
    pub a_max: f64,
    pub steps: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    pub format: ReportFormat,
}

fn parse_config_file(path: &Path) -> Result<ConfigFile, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|e| ConfigError::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// Resolves the configuration for `command` from defaults, an optional
/// JSON config file, and explicit flag values (flags win).
pub fn load_config(
    command: Command,
    file: Option<&Path>,
    over: &Overrides,
) -> Result<ExperimentConfig, ConfigError> {
    let file = match file {
        Some(path) => parse_config_file(path)?,
        None => ConfigFile::default(),
    };
    let (d0, n0, big_n0, trials0) = command.default_dims();
    let pick = |flag: Option<usize>, filed: Option<usize>, default: usize| {
        flag.or(filed).unwrap_or(default)
    };
    let mut cfg = ExperimentConfig {
        command,
        kernel: String::new(),
        d: pick(over.d, file.d, d0),
        n: pick(over.n, file.n, n0),
        big_n: pick(over.big_n, file.big_n, big_n0),
        trials: pick(over.trials, file.trials, trials0),
        seed: over.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
        tol: over.tol.or(file.tol).unwrap_or(DEFAULT_TOL),
        bisection_tol: crlab_core::multipliers::DEFAULT_BISECTION_TOL,
        alpha: over.alpha.or(file.alpha).unwrap_or(DEFAULT_ALPHA),
        a_min: over.a_min.or(file.a_min).unwrap_or(0.5),
        a_max: over.a_max.or(file.a_max).unwrap_or(3.0),
        steps: pick(over.steps, file.steps, 11),
        out: over.out.clone().or(file.out),
        format: over.format.or(file.format).unwrap_or(ReportFormat::Text),
    };
    // The pair suite is defined for the Szego kernels on the disc, and
    // the row-column example for its fixed 40-point configuration.
    if command == Command::VerifyPairs {
        cfg.d = 1;
    }
    if command == Command::ReproduceExampleRowColumn {
        cfg.d = 2;
        cfg.n = 40;
    }
    validate(&cfg)?;
    cfg.kernel = command.kernel_description(&cfg);
    Ok(cfg)
}

fn validate(cfg: &ExperimentConfig) -> Result<(), ConfigError> {
    let counts = [
        ("d", cfg.d),
        ("n", cfg.n),
        ("N", cfg.big_n),
        ("trials", cfg.trials),
        ("steps", cfg.steps),
    ];
    for (name, value) in counts {
        if value == 0 {
            return Err(ConfigError::Invalid(format!("{name} must be >= 1")));
        }
    }
    if !(cfg.tol.is_finite() && cfg.tol > 0.0) {
        return Err(ConfigError::Invalid(format!(
            "tol must be positive and finite, got {}",
            cfg.tol
        )));
    }
    if cfg.command == Command::ReproduceAlpha && !(cfg.alpha.is_finite() && cfg.alpha > 1.0) {
        return Err(ConfigError::Invalid(format!(
            "alpha must be > 1, got {}",
            cfg.alpha
        )));
    }
    if cfg.command == Command::SweepPowerKernel {
        if !(cfg.a_min.is_finite() && cfg.a_min > 0.0) {
            return Err(ConfigError::Invalid(format!(
                "a-min must be positive, got {}",
                cfg.a_min
            )));
        }
        if !(cfg.a_max.is_finite() && cfg.a_max >= cfg.a_min) {
            return Err(ConfigError::Invalid(format!(
                "a-max must be >= a-min, got {} < {}",
                cfg.a_max, cfg.a_min
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_config(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f.flush().unwrap();
        f
    }

    #[test]
    fn defaults_without_file_or_flags() {
        let cfg =
            load_config(Command::VerifyColumnRow, None, &Overrides::default()).unwrap();
        assert_eq!(cfg.seed, 42);
        assert_eq!(cfg.tol, 1e-7);
        assert_eq!((cfg.d, cfg.n, cfg.big_n, cfg.trials), (3, 6, 4, 200));
        assert!(matches!(cfg.format, ReportFormat::Text));
    }

    #[test]
    fn flag_beats_file_beats_default() {
        let file = write_config(r#"{"seed": 7, "trials": 17, "d": 2}"#);
        let over = Overrides {
            seed: Some(9),
            ..Overrides::default()
        };
        let cfg = load_config(Command::VerifyColumnRow, Some(file.path()), &over).unwrap();
        assert_eq!(cfg.seed, 9, "flag wins over file");
        assert_eq!(cfg.trials, 17, "file wins over default");
        assert_eq!(cfg.d, 2);
        assert_eq!(cfg.n, 6, "default fills the rest");
    }

    #[test]
    fn unknown_key_is_named() {
        let file = write_config(r#"{"sede": 7}"#);
        let err = load_config(
            Command::VerifyColumnRow,
            Some(file.path()),
            &Overrides::default(),
        )
        .unwrap_err();
        let message = err.to_string();
        assert!(message.contains("sede"), "error must name the key: {message}");
    }

    #[test]
    fn malformed_json_reports_line() {
        let file = write_config("{\n  \"seed\": 7,\n}");
        let err = load_config(
            Command::VerifyColumnRow,
            Some(file.path()),
            &Overrides::default(),
        )
        .unwrap_err();
        let message = err.to_string();
        assert!(message.contains("line"), "error must carry line info: {message}");
    }

    #[test]
    fn zero_counts_rejected() {
        let over = Overrides {
            trials: Some(0),
            ..Overrides::default()
        };
        assert!(load_config(Command::VerifyColumnRow, None, &over).is_err());
    }

    #[test]
    fn alpha_must_exceed_one() {
        let over = Overrides {
            alpha: Some(1.0),
            ..Overrides::default()
        };
        assert!(load_config(Command::ReproduceAlpha, None, &over).is_err());
        let over = Overrides {
            alpha: Some(1.5),
            ..Overrides::default()
        };
        assert!(load_config(Command::ReproduceAlpha, None, &over).is_ok());
    }

    #[test]
    fn pairs_pin_the_disc() {
        let over = Overrides {
            d: Some(3),
            ..Overrides::default()
        };
        let cfg = load_config(Command::VerifyPairs, None, &over).unwrap();
        assert_eq!(cfg.d, 1);
    }
}
