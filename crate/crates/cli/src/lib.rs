//! Argument handling, experiment presets and CSV output for the `onebit-miso`
//! binary.
//!
//! The binary runs BER sweeps of the superposed LUT precoder and the
//! quantized Wiener filter baseline, or the SISO receive-gain accuracy check,
//! and writes one CSV row per measured operating point.

use std::fmt;
use std::fs::OpenOptions;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, ValueEnum};
use onebit_miso::sim::{BerRecord, Scheme, SimConfig};

/// CSV header, one column per [`BerRecord`] field.
pub const CSV_HEADER: &str = "scheme,N,M,etx_db,ber,bit_errors,bits_total,channels,seed";

/// Environment variable capping the worker count (0 or unset = auto).
pub const THREADS_ENV: &str = "ONEBIT_MISO_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SchemeArg {
    /// Superposed minimum-BER LUT precoder.
    MberSup,
    /// Quantized Wiener filter baseline.
    Qwf,
    /// Both downlink schemes on the same channels.
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FigureArg {
    /// N=150, M=3, both schemes over the E_tx grid.
    Fig3,
    /// N=150, M in {2,3,4}, both schemes.
    Fig4,
    /// M=3, N in {48,96,150}, both schemes.
    Fig5,
    /// SISO AWGN receive-gain accuracy check (estimated vs optimal).
    GCheck,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScaleArg {
    /// 100 channels x 100000 symbols per point.
    Paper,
    /// 10 channels x 10000 symbols per point.
    Desk,
}

/// BER experiments for a 1-bit massive MU-MISO downlink carrying 16QAM.
///
/// Runs Monte-Carlo sweeps of the superposed minimum-BER LUT precoder
/// (mber-sup) and the quantized Wiener filter baseline (qwf), or a SISO
/// check of the blind receive gain, and writes CSV for plotting.
#[derive(Debug, Parser)]
#[command(name = "onebit-miso", version, max_term_width = 100)]
pub struct CliOptions {
    /// Scheme(s) to simulate [default: both]
    #[arg(long, value_enum)]
    pub scheme: Option<SchemeArg>,

    /// Number of transmit antennas N [default: 150]
    #[arg(long)]
    pub antennas: Option<usize>,

    /// Number of single-antenna users M [default: 3]
    #[arg(long)]
    pub users: Option<usize>,

    /// Transmit power grid in dB, "start:step:stop" or a single value
    /// [default: -10:2.5:10]
    #[arg(long)]
    pub etx: Option<String>,

    /// Channel realizations per point [default: from --scale]
    #[arg(long)]
    pub channels: Option<usize>,

    /// Symbol vectors per channel realization [default: from --scale]
    #[arg(long)]
    pub symbols: Option<usize>,

    /// Base RNG seed [default: 1]
    #[arg(long, default_value_t = 1)]
    pub seed: u64,

    /// Output CSV path [default: ber.csv]
    #[arg(long, default_value = "ber.csv")]
    pub out: PathBuf,

    /// Experiment preset; conflicts with --antennas/--users/--etx
    #[arg(long, value_enum)]
    pub figure: Option<FigureArg>,

    /// Monte-Carlo scale: paper = 100 channels x 1e5 symbols, desk = 10 x 1e4
    /// [default: desk]
    #[arg(long, value_enum)]
    pub scale: Option<ScaleArg>,

    /// Fraction of antennas carrying the quadrant stream [default: 0.6667]
    #[arg(long)]
    pub split_ratio: Option<f64>,

    /// Append to an existing CSV instead of refusing to overwrite
    #[arg(long)]
    pub append: bool,
}

/// A rejected command line.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

/// One unit of work in a run.
#[derive(Debug, Clone)]
pub enum SimJob {
    Sweep(SimConfig),
    GainCheck {
        snr_grid_db: Vec<f64>,
        n_symbols: usize,
        seed: u64,
    },
}

/// Everything a run will do, resolved from the command line.
#[derive(Debug)]
pub struct RunManifest {
    pub jobs: Vec<SimJob>,
    pub out: PathBuf,
    pub append: bool,
    pub version: String,
    pub timestamp_unix: u64,
}

/// Inclusive "start:step:stop" grid, or a single value.
pub fn parse_grid(text: &str) -> Result<Vec<f64>, UsageError> {
    let bad = |msg: &str| UsageError(format!("bad grid '{text}': {msg}"));
    let parts: Vec<&str> = text.split(':').collect();
    match parts.as_slice() {
        [single] => {
            let v: f64 = single
                .trim()
                .parse()
                .map_err(|_| bad("not a number"))?;
            Ok(vec![v])
        }
        [start, step, stop] => {
            let start: f64 = start.trim().parse().map_err(|_| bad("bad start"))?;
            let step: f64 = step.trim().parse().map_err(|_| bad("bad step"))?;
            let stop: f64 = stop.trim().parse().map_err(|_| bad("bad stop"))?;
            if !(step > 0.0) {
                return Err(bad("step must be positive"));
            }
            if stop < start {
                return Err(bad("stop must not precede start"));
            }
            let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
            Ok((0..count).map(|i| start + step * i as f64).collect())
        }
        _ => Err(bad("expected VALUE or START:STEP:STOP")),
    }
}

fn schemes_of(arg: SchemeArg) -> Vec<Scheme> {
    match arg {
        SchemeArg::MberSup => vec![Scheme::MberSup],
        SchemeArg::Qwf => vec![Scheme::Qwf],
        SchemeArg::Both => vec![Scheme::MberSup, Scheme::Qwf],
    }
}

/// Default SNR grid of the gain-check preset, covering 0..15 dB.
pub fn gain_check_snr_grid() -> Vec<f64> {
    parse_grid("0:2.5:15").unwrap()
}

/// Resolves options into a manifest, applying figure presets and scale
/// defaults and rejecting inconsistent combinations.
pub fn resolve(opts: &CliOptions) -> Result<RunManifest, UsageError> {
    let scale = opts.scale.unwrap_or(ScaleArg::Desk);
    let (scale_channels, scale_symbols) = match scale {
        ScaleArg::Paper => (100, 100_000),
        ScaleArg::Desk => (10, 10_000),
    };
    let channels = opts.channels.unwrap_or(scale_channels);
    let symbols = opts.symbols.unwrap_or(scale_symbols);
    if channels == 0 || symbols == 0 {
        return Err(UsageError(
            "--channels and --symbols must be positive".into(),
        ));
    }
    let split_ratio = opts.split_ratio.unwrap_or(2.0 / 3.0);

    let mut jobs = Vec::new();
    if let Some(figure) = opts.figure {
        for flag in [
            ("--antennas", opts.antennas.is_some()),
            ("--users", opts.users.is_some()),
            ("--etx", opts.etx.is_some()),
        ] {
            if flag.1 {
                return Err(UsageError(format!(
                    "{} conflicts with --figure (the preset fixes it)",
                    flag.0
                )));
            }
        }
        let schemes = schemes_of(opts.scheme.unwrap_or(SchemeArg::Both));
        let grid = parse_grid("-10:2.5:10").unwrap();
        let shapes: Vec<(usize, usize)> = match figure {
            FigureArg::Fig3 => vec![(150, 3)],
            FigureArg::Fig4 => vec![(150, 2), (150, 3), (150, 4)],
            FigureArg::Fig5 => vec![(48, 3), (96, 3), (150, 3)],
            FigureArg::GCheck => {
                if opts.scheme.is_some() {
                    return Err(UsageError(
                        "--scheme conflicts with --figure g-check".into(),
                    ));
                }
                jobs.push(SimJob::GainCheck {
                    snr_grid_db: gain_check_snr_grid(),
                    n_symbols: channels * symbols,
                    seed: opts.seed,
                });
                vec![]
            }
        };
        for (n, m) in shapes {
            for &scheme in &schemes {
                let mut config = SimConfig::new(scheme, n, m);
                config.etx_grid_db = grid.clone();
                config.n_channels = channels;
                config.n_symbols = symbols;
                config.rng_seed = opts.seed;
                config.split_ratio = split_ratio;
                jobs.push(SimJob::Sweep(config));
            }
        }
    } else {
        let n = opts.antennas.unwrap_or(150);
        let m = opts.users.unwrap_or(3);
        if m > n {
            return Err(UsageError(format!(
                "more users than antennas ({m} > {n})"
            )));
        }
        let grid = parse_grid(opts.etx.as_deref().unwrap_or("-10:2.5:10"))?;
        for scheme in schemes_of(opts.scheme.unwrap_or(SchemeArg::Both)) {
            let mut config = SimConfig::new(scheme, n, m);
            config.etx_grid_db = grid.clone();
            config.n_channels = channels;
            config.n_symbols = symbols;
            config.rng_seed = opts.seed;
            config.split_ratio = split_ratio;
            jobs.push(SimJob::Sweep(config));
        }
    }

    // fail fast on configs the engine would reject anyway
    for job in &jobs {
        if let SimJob::Sweep(config) = job {
            config
                .validate()
                .map_err(|e| UsageError(e.to_string()))?;
        }
    }

    Ok(RunManifest {
        jobs,
        out: opts.out.clone(),
        append: opts.append,
        version: env!("CARGO_PKG_VERSION").to_string(),
        timestamp_unix: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
    })
}

/// One CSV row; floats carry 17 significant digits so parsing them back is
/// lossless.
pub fn format_row(record: &BerRecord) -> String {
    format!(
        "{},{},{},{:.16e},{:.16e},{},{},{},{}",
        record.scheme,
        record.n_antennas,
        record.n_users,
        record.etx_db,
        record.ber,
        record.bit_errors,
        record.bits_total,
        record.channels_used,
        record.seed
    )
}

/// Writes records to `path`. Without `append` an existing file is refused;
/// with it, rows are added and the header is only written when the file is
/// new or empty.
pub fn write_csv(records: &[BerRecord], path: &Path, append: bool) -> std::io::Result<()> {
    let mut file = if append {
        OpenOptions::new().create(true).append(true).open(path)?
    } else {
        OpenOptions::new()
            .create_new(true)
            .write(true)
            .open(path)
            .map_err(|e| {
                if e.kind() == std::io::ErrorKind::AlreadyExists {
                    std::io::Error::new(
                        e.kind(),
                        format!(
                            "{} exists; pass --append to add rows or choose another --out",
                            path.display()
                        ),
                    )
                } else {
                    e
                }
            })?
    };
    let needs_header = file.metadata()?.len() == 0;
    let mut text = String::new();
    if needs_header {
        text.push_str(CSV_HEADER);
        text.push('\n');
    }
    for record in records {
        text.push_str(&format_row(record));
        text.push('\n');
    }
    file.write_all(text.as_bytes())
}

/// Parses a CSV produced by [`write_csv`] back into records.
pub fn parse_csv(text: &str) -> Result<Vec<BerRecord>, String> {
    let mut lines = text.lines();
    match lines.next() {
        Some(header) if header == CSV_HEADER => {}
        other => return Err(format!("bad header: {other:?}")),
    }
    let mut records = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 9 {
            return Err(format!("row {i}: expected 9 fields, got {}", fields.len()));
        }
        let parse_err = |what: &str| format!("row {i}: bad {what}");
        records.push(BerRecord {
            scheme: fields[0].parse::<Scheme>().map_err(|_| parse_err("scheme"))?,
            n_antennas: fields[1].parse().map_err(|_| parse_err("N"))?,
            n_users: fields[2].parse().map_err(|_| parse_err("M"))?,
            etx_db: fields[3].parse().map_err(|_| parse_err("etx_db"))?,
            ber: fields[4].parse().map_err(|_| parse_err("ber"))?,
            bit_errors: fields[5].parse().map_err(|_| parse_err("bit_errors"))?,
            bits_total: fields[6].parse().map_err(|_| parse_err("bits_total"))?,
            channels_used: fields[7].parse().map_err(|_| parse_err("channels"))?,
            seed: fields[8].parse().map_err(|_| parse_err("seed"))?,
        });
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts(args: &[&str]) -> CliOptions {
        CliOptions::parse_from(std::iter::once("onebit-miso").chain(args.iter().copied()))
    }

    #[test]
    fn grid_parsing() {
        assert_eq!(parse_grid("5").unwrap(), vec![5.0]);
        let grid = parse_grid("-10:2.5:10").unwrap();
        assert_eq!(grid.len(), 9);
        assert_eq!(grid[0], -10.0);
        assert_eq!(grid[8], 10.0);
        assert!(parse_grid("1:0:5").is_err());
        assert!(parse_grid("5:1:1").is_err());
        assert!(parse_grid("a:b:c").is_err());
    }

    #[test]
    fn fig3_desk_preset() {
        let manifest = resolve(&opts(&["--figure", "fig3", "--scale", "desk"])).unwrap();
        assert_eq!(manifest.jobs.len(), 2);
        for (job, scheme) in manifest.jobs.iter().zip([Scheme::MberSup, Scheme::Qwf]) {
            let SimJob::Sweep(config) = job else {
                panic!("expected sweeps")
            };
            assert_eq!(config.scheme, scheme);
            assert_eq!(config.n_antennas, 150);
            assert_eq!(config.n_users, 3);
            assert_eq!(config.n_channels, 10);
            assert_eq!(config.n_symbols, 10_000);
            assert_eq!(config.etx_grid_db.len(), 9);
            assert_eq!(config.etx_grid_db[0], -10.0);
            assert_eq!(*config.etx_grid_db.last().unwrap(), 10.0);
        }
    }

    #[test]
    fn fig4_and_fig5_shapes() {
        let manifest = resolve(&opts(&["--figure", "fig4"])).unwrap();
        let shapes: Vec<(usize, usize)> = manifest
            .jobs
            .iter()
            .map(|j| match j {
                SimJob::Sweep(c) => (c.n_antennas, c.n_users),
                _ => panic!(),
            })
            .collect();
        assert_eq!(
            shapes,
            vec![(150, 2), (150, 2), (150, 3), (150, 3), (150, 4), (150, 4)]
        );

        let manifest = resolve(&opts(&["--figure", "fig5", "--scheme", "mber-sup"])).unwrap();
        let shapes: Vec<(usize, usize)> = manifest
            .jobs
            .iter()
            .map(|j| match j {
                SimJob::Sweep(c) => (c.n_antennas, c.n_users),
                _ => panic!(),
            })
            .collect();
        assert_eq!(shapes, vec![(48, 3), (96, 3), (150, 3)]);
    }

    #[test]
    fn g_check_preset_scales_symbol_budget() {
        let manifest = resolve(&opts(&["--figure", "g-check", "--scale", "desk"])).unwrap();
        assert_eq!(manifest.jobs.len(), 1);
        let SimJob::GainCheck {
            snr_grid_db,
            n_symbols,
            ..
        } = &manifest.jobs[0]
        else {
            panic!("expected gain check")
        };
        assert_eq!(*n_symbols, 100_000);
        assert!(snr_grid_db.contains(&0.0) && snr_grid_db.contains(&15.0));
    }

    #[test]
    fn figure_conflicts_with_shape_flags() {
        assert!(resolve(&opts(&["--figure", "fig3", "--antennas", "12"])).is_err());
        assert!(resolve(&opts(&["--figure", "fig3", "--etx", "5"])).is_err());
        assert!(resolve(&opts(&["--figure", "g-check", "--scheme", "qwf"])).is_err());
    }

    #[test]
    fn rejects_more_users_than_antennas() {
        assert!(resolve(&opts(&["--users", "5", "--antennas", "3"])).is_err());
    }

    #[test]
    fn explicit_counts_override_scale() {
        let manifest = resolve(&opts(&[
            "--scale", "paper", "--channels", "7", "--etx", "5",
        ]))
        .unwrap();
        let SimJob::Sweep(config) = &manifest.jobs[0] else {
            panic!()
        };
        assert_eq!(config.n_channels, 7);
        assert_eq!(config.n_symbols, 100_000);
    }

    #[test]
    fn csv_rows_round_trip_exactly() {
        let records = vec![
            BerRecord {
                scheme: Scheme::MberSup,
                n_antennas: 150,
                n_users: 3,
                etx_db: -7.5,
                ber: 1.234567890123456e-3,
                bit_errors: 1481,
                bits_total: 1_200_000,
                channels_used: 10,
                seed: 0xDEADBEEF,
            },
            BerRecord {
                scheme: Scheme::SisoGainOpt,
                n_antennas: 1,
                n_users: 1,
                etx_db: 10.0,
                ber: 0.25,
                bit_errors: 1,
                bits_total: 4,
                channels_used: 1,
                seed: 7,
            },
        ];
        let mut text = String::from(CSV_HEADER);
        text.push('\n');
        for r in &records {
            text.push_str(&format_row(r));
            text.push('\n');
        }
        let parsed = parse_csv(&text).unwrap();
        assert_eq!(parsed, records);
    }

    #[test]
    fn csv_rejects_malformed_input() {
        assert!(parse_csv("nonsense\n").is_err());
        let mut text = String::from(CSV_HEADER);
        text.push_str("\nmber-sup,1,2,3\n");
        assert!(parse_csv(&text).is_err());
    }
}
