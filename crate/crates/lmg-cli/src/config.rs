//! Sweep configuration: flat key=value files, mirrored CLI flags, and
//! the merged [`SweepConfig`] every subcommand runs from.
//!
//! Precedence is flag over file over default. The file format is one
//! `key = value` pair per line, `#` comments, blank lines ignored; the
//! full key list sits in [`KNOWN_KEYS`] and in the binary's long help.

use crate::CliError;
use clap::Args;
use std::collections::BTreeMap;
use std::path::PathBuf;

/// Every key the config file (and the mirroring flags) may define.
pub const KNOWN_KEYS: &[&str] = &[
    "n",
    "h",
    "h-start",
    "h-stop",
    "h-count",
    "fractions",
    "bits",
    "exact",
    "dt",
    "shots",
    "trials",
    "seed",
    "beta",
    "source",
    "parity",
    "bins",
    "out",
    "format",
    "jobs",
    "upsilon",
    "window",
    "background",
    "contrast",
    "gamma",
    "mu",
    "nu",
    "pert",
    "strength",
    "pert-file",
    "pert-file-next",
];

/// Raw option surface shared by all subcommands; everything is a string
/// so flag and file values go through the same parsers.
#[derive(Args, Debug, Default, Clone)]
pub struct RawArgs {
    /// Flat key=value config file; explicit flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// System sizes N, comma separated.
    #[arg(long)]
    pub n: Option<String>,
    /// Single field value; shorthand for a one-point field grid.
    #[arg(long)]
    pub h: Option<String>,
    /// Field grid start.
    #[arg(long = "h-start")]
    pub h_start: Option<String>,
    /// Field grid stop (inclusive).
    #[arg(long = "h-stop")]
    pub h_stop: Option<String>,
    /// Field grid point count.
    #[arg(long = "h-count")]
    pub h_count: Option<String>,
    /// Eigenstate index fractions f (k = floor(f*N)), comma separated.
    #[arg(long)]
    pub fractions: Option<String>,
    /// Phase register size d.
    #[arg(long)]
    pub bits: Option<String>,
    /// Use the infinite-register limit instead of a finite register.
    #[arg(long)]
    pub exact: bool,
    /// Interrogation time step; a float or the literal "pi".
    #[arg(long)]
    pub dt: Option<String>,
    /// Phase estimation repetitions per system size.
    #[arg(long)]
    pub shots: Option<String>,
    /// Independently seeded repetitions of the whole run.
    #[arg(long)]
    pub trials: Option<String>,
    /// Base RNG seed; required for stochastic commands.
    #[arg(long)]
    pub seed: Option<String>,
    /// Inverse temperature of the Gibbs probe source.
    #[arg(long)]
    pub beta: Option<String>,
    /// Probe preparation source: alldown or gibbs.
    #[arg(long)]
    pub source: Option<String>,
    /// Sector selection: even, odd, or both.
    #[arg(long)]
    pub parity: Option<String>,
    /// Histogram bin count.
    #[arg(long)]
    pub bins: Option<String>,
    /// Output file path; defaults to <command>.<ext> under LMG_OUT_DIR
    /// when that variable is set, otherwise in the working directory.
    #[arg(long)]
    pub out: Option<String>,
    /// Output format: csv or json.
    #[arg(long)]
    pub format: Option<String>,
    /// Worker threads; results do not depend on this.
    #[arg(long)]
    pub jobs: Option<String>,
    /// Noise plateau exponent upsilon.
    #[arg(long)]
    pub upsilon: Option<String>,
    /// Noise window exponent upsilon'.
    #[arg(long)]
    pub window: Option<String>,
    /// Noise background exponent alpha.
    #[arg(long)]
    pub background: Option<String>,
    /// Noise contrast exponent iota.
    #[arg(long)]
    pub contrast: Option<String>,
    /// Reference peak-QFI exponent for scaling predictions.
    #[arg(long)]
    pub gamma: Option<String>,
    /// Reference peak-width exponent for scaling predictions.
    #[arg(long)]
    pub mu: Option<String>,
    /// Reference effective-gap exponent for scaling predictions.
    #[arg(long)]
    pub nu: Option<String>,
    /// Builtin perturbation: sz, sx, sx2, or plaw:<alpha>.
    #[arg(long)]
    pub pert: Option<String>,
    /// Perturbation strength g.
    #[arg(long)]
    pub strength: Option<String>,
    /// Dense symmetric operator for size N, whitespace separated floats,
    /// row major over the ascending-m basis (m = -N/2 .. N/2).
    #[arg(long = "pert-file")]
    pub pert_file: Option<String>,
    /// Companion operator for size N+1, same layout.
    #[arg(long = "pert-file-next")]
    pub pert_file_next: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl OutputFormat {
    pub fn extension(self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParityChoice {
    Even,
    Odd,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SourceChoice {
    AllDown,
    Gibbs,
}

/// Inclusive uniform field grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldGrid {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl FieldGrid {
    pub fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.start];
        }
        let step = (self.stop - self.start) / (self.count - 1) as f64;
        (0..self.count)
            .map(|i| self.start + i as f64 * step)
            .collect()
    }
}

/// Scaling-law reference exponents handed to the noise predictions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseKnobs {
    pub upsilon: f64,
    pub window: f64,
    pub background: f64,
    pub contrast: f64,
    pub gamma: f64,
    pub mu: f64,
    pub nu: f64,
}

/// One fully resolved sweep.
#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub command: String,
    pub sizes: Vec<u32>,
    pub field_grid: FieldGrid,
    pub k_fractions: Vec<f64>,
    pub register_bits: u32,
    pub exact_phase: bool,
    pub time_step: f64,
    pub shots: usize,
    pub trials: usize,
    pub seed: Option<u64>,
    pub beta: Option<f64>,
    pub source: SourceChoice,
    pub parity: ParityChoice,
    pub bins: usize,
    /// Output file; the format extension is appended when missing.
    pub output: PathBuf,
    pub format: OutputFormat,
    pub jobs: Option<usize>,
    pub noise: NoiseKnobs,
    pub pert: Option<String>,
    pub strength: f64,
    pub pert_file: Option<PathBuf>,
    pub pert_file_next: Option<PathBuf>,
}

/// Parse a flat key=value file into ordered pairs, rejecting unknown
/// keys, missing separators, and duplicate definitions.
pub fn parse_config_file(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut pairs = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            CliError::config(format!("line {}: expected key = value", lineno + 1))
        })?;
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        if !KNOWN_KEYS.contains(&key.as_str()) {
            return Err(CliError::config(format!(
                "line {}: unknown key '{key}'",
                lineno + 1
            )));
        }
        if pairs.insert(key.clone(), value).is_some() {
            return Err(CliError::config(format!(
                "line {}: key '{key}' defined twice",
                lineno + 1
            )));
        }
    }
    Ok(pairs)
}

fn parse_f64(key: &str, value: &str) -> Result<f64, CliError> {
    let x: f64 = value
        .parse()
        .map_err(|_| CliError::config(format!("{key}: '{value}' is not a number")))?;
    if !x.is_finite() {
        return Err(CliError::config(format!("{key}: must be finite")));
    }
    Ok(x)
}

fn parse_usize(key: &str, value: &str) -> Result<usize, CliError> {
    value
        .parse()
        .map_err(|_| CliError::config(format!("{key}: '{value}' is not a count")))
}

fn parse_u64(key: &str, value: &str) -> Result<u64, CliError> {
    value
        .parse()
        .map_err(|_| CliError::config(format!("{key}: '{value}' is not an integer")))
}

fn parse_u32_list(key: &str, value: &str) -> Result<Vec<u32>, CliError> {
    value
        .split(',')
        .map(|piece| {
            piece
                .trim()
                .parse::<u32>()
                .map_err(|_| CliError::config(format!("{key}: '{piece}' is not a size")))
        })
        .collect()
}

fn parse_f64_list(key: &str, value: &str) -> Result<Vec<f64>, CliError> {
    value
        .split(',')
        .map(|piece| parse_f64(key, piece.trim()))
        .collect()
}

/// Time steps accept the literal "pi" alongside plain floats.
pub fn parse_time_step(value: &str) -> Result<f64, CliError> {
    if value.trim().eq_ignore_ascii_case("pi") {
        return Ok(std::f64::consts::PI);
    }
    let dt = parse_f64("dt", value.trim())?;
    if dt <= 0.0 {
        return Err(CliError::config("dt: must be positive"));
    }
    Ok(dt)
}

fn parse_bool(key: &str, value: &str) -> Result<bool, CliError> {
    match value.trim() {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        other => Err(CliError::config(format!(
            "{key}: '{other}' is not a boolean"
        ))),
    }
}

/// Collect the flag values into the same key space as the file.
fn flag_pairs(raw: &RawArgs) -> BTreeMap<&'static str, String> {
    let mut map = BTreeMap::new();
    let mut put = |key: &'static str, value: &Option<String>| {
        if let Some(v) = value {
            map.insert(key, v.clone());
        }
    };
    put("n", &raw.n);
    put("h", &raw.h);
    put("h-start", &raw.h_start);
    put("h-stop", &raw.h_stop);
    put("h-count", &raw.h_count);
    put("fractions", &raw.fractions);
    put("bits", &raw.bits);
    put("dt", &raw.dt);
    put("shots", &raw.shots);
    put("trials", &raw.trials);
    put("seed", &raw.seed);
    put("beta", &raw.beta);
    put("source", &raw.source);
    put("parity", &raw.parity);
    put("bins", &raw.bins);
    put("out", &raw.out);
    put("format", &raw.format);
    put("jobs", &raw.jobs);
    put("upsilon", &raw.upsilon);
    put("window", &raw.window);
    put("background", &raw.background);
    put("contrast", &raw.contrast);
    put("gamma", &raw.gamma);
    put("mu", &raw.mu);
    put("nu", &raw.nu);
    put("pert", &raw.pert);
    put("strength", &raw.strength);
    put("pert-file", &raw.pert_file);
    put("pert-file-next", &raw.pert_file_next);
    if raw.exact {
        map.insert("exact", "true".to_string());
    }
    map
}

/// Merge flags over the config file over defaults into a validated
/// [`SweepConfig`] for the named subcommand.
pub fn resolve(command: &str, raw: &RawArgs) -> Result<SweepConfig, CliError> {
    let file = match &raw.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|err| {
                CliError::config(format!("cannot read {}: {err}", path.display()))
            })?;
            parse_config_file(&text)?
        }
        None => BTreeMap::new(),
    };
    let flags = flag_pairs(raw);
    let get = |key: &str| -> Option<String> {
        flags
            .get(key)
            .cloned()
            .or_else(|| file.get(key).cloned())
    };

    let sizes = match get("n") {
        Some(v) => parse_u32_list("n", &v)?,
        None => default_sizes(command),
    };
    if sizes.is_empty() {
        return Err(CliError::config("n: size list is empty"));
    }
    if sizes.iter().any(|&n| n < 2) {
        return Err(CliError::config("n: sizes must be at least 2"));
    }

    let field_grid = resolve_field_grid(command, &get)?;

    let k_fractions = match get("fractions") {
        Some(v) => parse_f64_list("fractions", &v)?,
        None => vec![0.1, 0.2, 0.3],
    };
    if k_fractions.is_empty() {
        return Err(CliError::config("fractions: list is empty"));
    }
    if k_fractions.iter().any(|&f| !(0.0..0.5).contains(&f)) {
        return Err(CliError::config(
            "fractions: each fraction must lie in [0, 0.5)",
        ));
    }

    let register_bits = match get("bits") {
        Some(v) => {
            let bits = parse_usize("bits", &v)?;
            if !(1..=52).contains(&bits) {
                return Err(CliError::config("bits: register size must be 1..=52"));
            }
            bits as u32
        }
        None => 8,
    };
    let exact_phase = match get("exact") {
        Some(v) => parse_bool("exact", &v)?,
        None => false,
    };
    let time_step = match get("dt") {
        Some(v) => parse_time_step(&v)?,
        None => std::f64::consts::PI,
    };
    let shots = match get("shots") {
        Some(v) => parse_usize("shots", &v)?.max(1),
        None => 200,
    };
    let trials = match get("trials") {
        Some(v) => parse_usize("trials", &v)?.max(1),
        None => 1,
    };
    let seed = match get("seed") {
        Some(v) => Some(parse_u64("seed", &v)?),
        None => None,
    };
    let beta = match get("beta") {
        Some(v) => Some(parse_f64("beta", &v)?),
        None => None,
    };
    let source = match get("source").as_deref() {
        None => SourceChoice::AllDown,
        Some("alldown") => SourceChoice::AllDown,
        Some("gibbs") => SourceChoice::Gibbs,
        Some(other) => {
            return Err(CliError::config(format!(
                "source: '{other}' is neither alldown nor gibbs"
            )))
        }
    };
    let parity = match get("parity").as_deref() {
        None => ParityChoice::Both,
        Some("even") => ParityChoice::Even,
        Some("odd") => ParityChoice::Odd,
        Some("both") => ParityChoice::Both,
        Some(other) => {
            return Err(CliError::config(format!(
                "parity: '{other}' is not even, odd, or both"
            )))
        }
    };
    let bins = match get("bins") {
        Some(v) => {
            let bins = parse_usize("bins", &v)?;
            if bins < 2 {
                return Err(CliError::config("bins: need at least 2 bins"));
            }
            bins
        }
        None => 100,
    };
    let output = match get("out") {
        Some(v) => PathBuf::from(v),
        None => match std::env::var_os("LMG_OUT_DIR") {
            Some(dir) => {
                let mut path = PathBuf::from(dir);
                path.push(command);
                path
            }
            None => PathBuf::from(command),
        },
    };
    let format = match get("format").as_deref() {
        None => OutputFormat::Csv,
        Some("csv") => OutputFormat::Csv,
        Some("json") => OutputFormat::Json,
        Some(other) => {
            return Err(CliError::config(format!(
                "format: '{other}' is neither csv nor json"
            )))
        }
    };
    let jobs = match get("jobs") {
        Some(v) => {
            let jobs = parse_usize("jobs", &v)?;
            if jobs == 0 {
                return Err(CliError::config("jobs: need at least one worker"));
            }
            Some(jobs)
        }
        None => None,
    };

    let knob = |key: &'static str, fallback: f64| -> Result<f64, CliError> {
        match get(key) {
            Some(v) => parse_f64(key, &v),
            None => Ok(fallback),
        }
    };
    let noise = NoiseKnobs {
        upsilon: knob("upsilon", 0.2)?,
        window: knob("window", 0.2)?,
        background: knob("background", 3.0)?,
        contrast: knob("contrast", 0.4)?,
        gamma: knob("gamma", 2.07)?,
        mu: knob("mu", -0.227)?,
        nu: knob("nu", 1.353)?,
    };
    let strength = knob("strength", 1e-3)?;

    let config = SweepConfig {
        command: command.to_string(),
        sizes,
        field_grid,
        k_fractions,
        register_bits,
        exact_phase,
        time_step,
        shots,
        trials,
        seed,
        beta,
        source,
        parity,
        bins,
        output,
        format,
        jobs,
        noise,
        pert: get("pert"),
        strength,
        pert_file: get("pert-file").map(PathBuf::from),
        pert_file_next: get("pert-file-next").map(PathBuf::from),
    };

    if config.command == "protocol2" && !config.exact_phase && config.seed.is_none() {
        return Err(CliError::config(
            "seed: required for the stochastic protocol2 command",
        ));
    }
    Ok(config)
}

fn default_sizes(command: &str) -> Vec<u32> {
    match command {
        "exponents" => vec![200, 400, 600, 800, 1200, 1600],
        "dos" => vec![2000],
        _ => vec![100],
    }
}

fn resolve_field_grid(
    command: &str,
    get: &dyn Fn(&str) -> Option<String>,
) -> Result<FieldGrid, CliError> {
    if let Some(h) = get("h") {
        let start = parse_f64("h", &h)?;
        return Ok(FieldGrid {
            start,
            stop: start,
            count: 1,
        });
    }
    let start = get("h-start");
    let stop = get("h-stop");
    let count = get("h-count");
    match (start, stop, count) {
        (None, None, None) => {
            let grid = match command {
                // The energy-scan commands default to the two reference
                // fields; everything else sits mid-phase.
                "qfi-energy" | "exponents" => FieldGrid {
                    start: 0.2,
                    stop: 0.4,
                    count: 2,
                },
                _ => FieldGrid {
                    start: 0.5,
                    stop: 0.5,
                    count: 1,
                },
            };
            Ok(grid)
        }
        (Some(start), Some(stop), Some(count)) => {
            let start = parse_f64("h-start", &start)?;
            let stop = parse_f64("h-stop", &stop)?;
            let count = parse_usize("h-count", &count)?;
            if count == 0 {
                return Err(CliError::config("h-count: the field grid is empty"));
            }
            if count > 1 && stop <= start {
                return Err(CliError::config("h-stop: must exceed h-start"));
            }
            Ok(FieldGrid { start, stop, count })
        }
        _ => Err(CliError::config(
            "field grid needs h-start, h-stop, and h-count together (or a single h)",
        )),
    }
}
