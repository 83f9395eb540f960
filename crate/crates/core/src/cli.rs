//! Command-line front end: `psd`, `ber` and `sweep`.
//!
//! Every command writes its results plus a `manifest.json` into the
//! `--out` directory. Output depends only on the scenario and the seed.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{ScenarioConfig, WaveformKind};
use crate::error::{Error, Result};
use crate::metrics::{self, BandLink, BerCurve, BerMethod, SemiAnalytic, StopRule, WelchConfig};
use crate::modem::ConstellationMap;
use crate::{link, modem, waveform};

#[derive(Debug, Parser)]
#[command(
    name = "mixnum",
    version,
    about = "Mixed-numerology OFDM link simulator"
)]
pub struct Cli {
    /// Worker threads (falls back to MIXNUM_THREADS, then all cores).
    #[arg(long, global = true, env = "MIXNUM_THREADS")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Welch PSD of one composite burst.
    Psd(PsdArgs),
    /// BER versus Eb/N0 for every band.
    Ber(BerArgs),
    /// Eb/N0 at a target BER versus band separation.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    /// Preset name (table1, single-band, bypass) or JSON scenario path.
    #[arg(long, default_value = "table1")]
    pub scenario: String,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PsdArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub waveform: Option<WaveformKind>,
    /// Also dump the composite signal as raw f64 I/Q.
    #[arg(long)]
    pub export_iq: bool,
}

#[derive(Debug, Args)]
pub struct BerArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub waveform: Option<WaveformKind>,
    #[arg(long = "mod")]
    pub mod_order: Option<u32>,
    /// Eb/N0 grid `start:step:stop` in dB.
    #[arg(long, default_value = "0:2:10")]
    pub ebn0: String,
    #[arg(long, default_value = "sa")]
    pub method: BerMethod,
    #[arg(long, default_value_t = 100)]
    pub min_errors: u64,
    #[arg(long, default_value_t = 10_000_000)]
    pub max_bits: u64,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: Common,
    /// Comma-separated waveforms.
    #[arg(long, value_delimiter = ',', default_value = "cp-ofdm,f-ofdm,w-ofdm")]
    pub waveforms: Vec<WaveformKind>,
    #[arg(long = "mod")]
    pub mod_order: Option<u32>,
    #[arg(long, default_value_t = 0.05)]
    pub target_ber: f64,
    /// Separation range in resource blocks, `a..b` inclusive.
    #[arg(long = "m", default_value = "0..4")]
    pub m_range: String,
    /// Band under test (1-based); defaults to the last band.
    #[arg(long)]
    pub band: Option<usize>,
}

impl clap::builder::ValueParserFactory for BerMethod {
    type Parser = clap::builder::ValueParser;
    fn value_parser() -> Self::Parser {
        clap::builder::ValueParser::new(|s: &str| s.parse::<BerMethod>().map_err(|e| e.to_string()))
    }
}

impl clap::builder::ValueParserFactory for WaveformKind {
    type Parser = clap::builder::ValueParser;
    fn value_parser() -> Self::Parser {
        clap::builder::ValueParser::new(|s: &str| {
            s.parse::<WaveformKind>().map_err(|e| e.to_string())
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub scenario_hash: String,
    pub seed: u64,
    pub tool_version: String,
    pub outputs: Vec<PathBuf>,
}

/// `start:step:stop`, inclusive of `stop` when it lies on the grid.
pub fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<f64> = s
        .split(':')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| Error::config(format!("bad Eb/N0 grid `{s}`")))
        })
        .collect::<Result<_>>()?;
    match parts.as_slice() {
        [v] => Ok(vec![*v]),
        [a, step, b] if *step > 0.0 && b >= a => {
            let n = ((b - a) / step + 1e-9).floor() as usize;
            Ok((0..=n).map(|k| a + k as f64 * step).collect())
        }
        _ => Err(Error::config(format!(
            "bad Eb/N0 grid `{s}`, expected start:step:stop"
        ))),
    }
}

/// `a..b` (inclusive), `a..=b`, or a comma list; values limited to 0..=8.
pub fn parse_m_range(s: &str) -> Result<Vec<usize>> {
    let bad = || Error::config(format!("bad separation range `{s}`"));
    let values: Vec<usize> = if let Some((a, b)) = s.split_once("..") {
        let b = b.trim_start_matches('=');
        let a: usize = a.trim().parse().map_err(|_| bad())?;
        let b: usize = b.trim().parse().map_err(|_| bad())?;
        if b < a {
            return Err(bad());
        }
        (a..=b).collect()
    } else {
        s.split(',')
            .map(|v| v.trim().parse().map_err(|_| bad()))
            .collect::<Result<_>>()?
    };
    if values.iter().any(|&m| m > 8) {
        return Err(Error::config(format!(
            "separation range `{s}` outside 0..8"
        )));
    }
    Ok(values)
}

fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let tmp = path.with_extension("tmp");
    let io = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    std::fs::write(&tmp, contents).map_err(io)?;
    std::fs::rename(&tmp, path).map_err(io)
}

struct Outputs {
    dir: PathBuf,
    files: Vec<PathBuf>,
}

impl Outputs {
    fn new(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir).map_err(|source| Error::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        Ok(Outputs {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.dir.join(name);
        write_atomic(&path, contents)?;
        self.files.push(path);
        Ok(())
    }

    fn finish(mut self, command: &str, sc: &ScenarioConfig, seed: u64) -> Result<RunManifest> {
        let manifest_path = self.dir.join("manifest.json");
        self.files.push(manifest_path.clone());
        let manifest = RunManifest {
            command: command.to_string(),
            scenario_hash: sc.hash(),
            seed,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            outputs: self.files,
        };
        write_atomic(
            &manifest_path,
            &serde_json::to_string_pretty(&manifest).expect("manifest serializes"),
        )?;
        Ok(manifest)
    }
}

fn load(
    common: &Common,
    waveform: Option<WaveformKind>,
    mod_order: Option<u32>,
) -> Result<ScenarioConfig> {
    let mut sc = ScenarioConfig::load(&common.scenario)?;
    if let Some(w) = waveform {
        sc.waveform = w;
    }
    if let Some(m) = mod_order {
        sc.mod_order = m;
    }
    if let Some(s) = common.seed {
        sc.seed = s;
    }
    sc.validate()?;
    Ok(sc)
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("result serializes")
}

pub fn cmd_psd(args: &PsdArgs) -> Result<RunManifest> {
    let mut sc = load(&args.common, args.waveform, None)?;
    sc.n_symbols = sc.n_symbols.max(64);
    let map = ConstellationMap::new(sc.mod_order)?;
    let frame = link::transmit(&sc, &map, &mut modem::substream(sc.seed, 0))?;
    let psd = metrics::welch_psd(&frame.composite, &WelchConfig::default())?;

    let mut out = Outputs::new(&args.common.out)?;
    out.write("psd.csv", &psd.to_csv())?;
    out.write(
        "psd.json",
        &to_json(
            &serde_json::json!({ "scenario_hash": sc.hash(), "waveform": sc.waveform, "psd": psd }),
        ),
    )?;
    if args.export_iq {
        let path = out.dir.join("composite.iq");
        waveform::write_iq(&path, &frame.composite, &sc.hash())?;
        out.files.push(path.clone());
        let mut side = path.into_os_string();
        side.push(".json");
        out.files.push(side.into());
    }
    out.finish("psd", &sc, sc.seed)
}

pub fn cmd_ber(args: &BerArgs) -> Result<RunManifest> {
    let sc = load(&args.common, args.waveform, args.mod_order)?;
    let grid = parse_grid(&args.ebn0)?;
    let order = sc.mod_order;
    let stop = StopRule {
        min_errors: args.min_errors,
        max_bits: args.max_bits,
    };
    let curves: Vec<BerCurve> = (0..sc.n_bands())
        .into_par_iter()
        .map(|band| {
            let link = BandLink::new(sc.clone(), band)?;
            let points = match args.method {
                BerMethod::SemiAnalytic => {
                    let sa = SemiAnalytic::prepare(&link, order, sc.seed)?;
                    grid.iter().map(|&db| sa.point(db)).collect()
                }
                BerMethod::MonteCarlo => grid
                    .iter()
                    .map(|&db| metrics::monte_carlo_ber(&link, order, db, stop, sc.seed))
                    .collect::<Result<Vec<_>>>()?,
            };
            Ok(BerCurve {
                label: format!("band{}-{}-{}qam", band + 1, sc.waveform, order),
                points,
            })
        })
        .collect::<Result<_>>()?;

    let mut out = Outputs::new(&args.common.out)?;
    for (band, curve) in curves.iter().enumerate() {
        out.write(&format!("ber_band{}.csv", band + 1), &curve.to_csv())?;
    }
    out.write(
        "ber.json",
        &to_json(&serde_json::json!({ "scenario_hash": sc.hash(), "curves": curves })),
    )?;
    out.finish("ber", &sc, sc.seed)
}

pub fn cmd_sweep(args: &SweepArgs) -> Result<RunManifest> {
    let base = load(&args.common, None, args.mod_order)?;
    let m_grid = parse_m_range(&args.m_range)?;
    let band = match args.band {
        Some(b) if b >= 1 && b <= base.n_bands() => b - 1,
        Some(b) => {
            return Err(Error::config(format!(
                "band {b} out of range 1..={}",
                base.n_bands()
            )))
        }
        None => base.n_bands() - 1,
    };
    let mut points = Vec::new();
    for &w in &args.waveforms {
        let mut sc = base.clone();
        sc.waveform = w;
        sc.validate()?;
        points.extend(metrics::ebn0_at_target_ber(
            &sc,
            band,
            sc.mod_order,
            args.target_ber,
            &m_grid,
            sc.seed,
        )?);
    }
    let mut out = Outputs::new(&args.common.out)?;
    out.write("sweep.csv", &metrics::sweep_to_csv(&points))?;
    out.write(
        "sweep.json",
        &to_json(&serde_json::json!({
            "scenario_hash": base.hash(),
            "target_ber": args.target_ber,
            "points": points,
        })),
    )?;
    out.finish("sweep", &base, base.seed)
}

fn dispatch(cli: &Cli) -> Result<RunManifest> {
    match &cli.command {
        Command::Psd(a) => cmd_psd(a),
        Command::Ber(a) => cmd_ber(a),
        Command::Sweep(a) => cmd_sweep(a),
    }
}

/// Runs a parsed command line, honouring `--threads`.
pub fn execute(cli: &Cli) -> Result<RunManifest> {
    match cli.threads {
        Some(n) if n > 0 => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::config(format!("thread pool: {e}")))?;
            pool.install(|| dispatch(cli))
        }
        _ => dispatch(cli),
    }
}

/// Parses `args` and runs; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(m) => {
            for f in &m.outputs {
                println!("{}", f.display());
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config_or_io() {
                2
            } else {
                1
            }
        }
    }
}
