use clap::error::ErrorKind;
use clap::Parser;
use onebit_miso::sim::{run_gain_check, run_sweep_with, BerRecord};
use onebit_miso_cli::{resolve, write_csv, CliOptions, SimJob, THREADS_ENV};

const EXIT_OK: i32 = 0;
const EXIT_USAGE: i32 = 1;
const EXIT_RUNTIME: i32 = 2;

fn main() {
    std::process::exit(run());
}

fn run() -> i32 {
    let opts = match CliOptions::try_parse() {
        Ok(opts) => opts,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            return EXIT_OK;
        }
        Err(e) => {
            eprint!("{e}");
            return EXIT_USAGE;
        }
    };
    let manifest = match resolve(&opts) {
        Ok(manifest) => manifest,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };

    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return EXIT_RUNTIME;
    }

    eprintln!(
        "onebit-miso {} | {} job(s) -> {} | t={}",
        manifest.version,
        manifest.jobs.len(),
        manifest.out.display(),
        manifest.timestamp_unix
    );

    let mut records: Vec<BerRecord> = Vec::new();
    for (i, job) in manifest.jobs.iter().enumerate() {
        let outcome = match job {
            SimJob::Sweep(config) => {
                let total = config.etx_grid_db.len();
                let mut done = 0usize;
                eprintln!(
                    "job {}/{}: {} N={} M={} ({} points)",
                    i + 1,
                    manifest.jobs.len(),
                    config.scheme,
                    config.n_antennas,
                    config.n_users,
                    total
                );
                run_sweep_with(config, |record| {
                    done += 1;
                    eprintln!(
                        "  point {done}/{total}: E_tx {} dB -> ber {:.3e} ({} / {} bits)",
                        record.etx_db, record.ber, record.bit_errors, record.bits_total
                    );
                })
            }
            SimJob::GainCheck {
                snr_grid_db,
                n_symbols,
                seed,
            } => {
                eprintln!(
                    "job {}/{}: gain check, {} SNR points x {} symbols",
                    i + 1,
                    manifest.jobs.len(),
                    snr_grid_db.len(),
                    n_symbols
                );
                run_gain_check(snr_grid_db, *n_symbols, *seed)
            }
        };
        match outcome {
            Ok(mut batch) => records.append(&mut batch),
            Err(e) => {
                eprintln!("error: {e}");
                return EXIT_RUNTIME;
            }
        }
    }

    if let Err(e) = write_csv(&records, &manifest.out, manifest.append) {
        eprintln!("error: {e}");
        return EXIT_RUNTIME;
    }
    eprintln!("wrote {} row(s) to {}", records.len(), manifest.out.display());
    EXIT_OK
}

/// Applies the worker cap from the environment before any rayon pool spins
/// up; 0 or unset keeps the default.
fn configure_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| format!("{THREADS_ENV} must be an integer, got '{raw}'"))?;
    if n == 0 {
        return Ok(());
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| format!("{THREADS_ENV}: {e}"))
}
