//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 on usage errors, 2 on runtime errors.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::bench::{run_bench, summary_table, BenchSpec};
use crate::coding::Coder;
use crate::dictionary::{write_dictionary, write_mosaic};
use crate::error::{Error, Result};
use crate::imagecore::{add_gaussian_noise, load_image, psnr, save_image, NoiseSpec};
use crate::pipeline::{denoise, DenoiseConfig, DenoiseReport, DictKind};
use crate::update::Updater;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "sparse-denoise", version, about = "Sparse-coding image denoiser")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Add clamped Gaussian noise to an image.
    AddNoise {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        sigma: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Denoise an image.
    Denoise {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Clean reference; when given, PSNR before and after is reported.
        #[arg(long = "ref")]
        reference: Option<PathBuf>,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Write an initial dictionary to disk.
    GenDict {
        #[arg(long, default_value_t = DictKind::LogGabor)]
        kind: DictKind,
        #[arg(long, default_value_t = 256)]
        k: usize,
        #[arg(long, default_value_t = 8)]
        patch_side: usize,
        #[arg(long)]
        out: PathBuf,
        /// Also write the atoms as a PGM mosaic.
        #[arg(long)]
        mosaic: Option<PathBuf>,
        /// Use the signed (unrectified) log-Gabor bank.
        #[arg(long)]
        signed: bool,
        /// Put a constant atom first in a log-Gabor dictionary (true|false).
        #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
        dc_atom: bool,
    },
    /// Run a benchmark spec and write its CSV.
    Bench {
        #[arg(long)]
        spec: PathBuf,
    },
}

/// Every [`DenoiseConfig`] knob; defaults match `DenoiseConfig::default()`.
#[derive(Debug, Clone, Args)]
pub struct ConfigArgs {
    #[arg(long, default_value_t = 8)]
    pub patch_side: usize,
    #[arg(long, default_value_t = 1)]
    pub stride: usize,
    #[arg(long, default_value_t = DictKind::LogGabor)]
    pub dict_kind: DictKind,
    #[arg(long, default_value_t = 256)]
    pub dict_k: usize,
    #[arg(long, default_value_t = Coder::Amp)]
    pub coder: Coder,
    #[arg(long, default_value_t = Updater::Nnmf)]
    pub updater: Updater,
    #[arg(long, default_value_t = 10)]
    pub outer_iters: usize,
    /// Noise standard deviation assumed by the coder.
    #[arg(long, default_value_t = 20.0)]
    pub sigma: f64,
    #[arg(long, default_value_t = 1.15)]
    pub epsilon_factor: f64,
    /// Explicit per-patch residual energy goal; overrides the sigma rule.
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long, default_value_t = 0.9)]
    pub nn_threshold: f64,
    #[arg(long, default_value_t = 16)]
    pub max_atoms: usize,
    #[arg(long, default_value_t = 5)]
    pub nmf_inner_iters: usize,
    #[arg(long, default_value_t = 1)]
    pub usage_min: usize,
    #[arg(long, default_value_t = 0.99)]
    pub coherence_max: f64,
    #[arg(long)]
    pub signed_dictionary: bool,
    /// Put a constant atom first in log-Gabor dictionaries (true|false).
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    pub dc_atom: bool,
    #[arg(long, default_value_t = 4)]
    pub lg_scales: usize,
    #[arg(long, default_value_t = 8)]
    pub lg_orientations: usize,
    /// Phases per orientation; 4 for the rectified bank, 8 for the signed one.
    #[arg(long)]
    pub lg_phases: Option<usize>,
    #[arg(long, default_value_t = 3.0)]
    pub lg_min_wavelength: f64,
    #[arg(long, default_value_t = 1.6)]
    pub lg_scale_factor: f64,
    #[arg(long, default_value_t = 0.65)]
    pub lg_sigma_on_f: f64,
}

impl From<ConfigArgs> for DenoiseConfig {
    fn from(a: ConfigArgs) -> Self {
        DenoiseConfig {
            patch_side: a.patch_side,
            stride: a.stride,
            dict_kind: a.dict_kind,
            dict_k: a.dict_k,
            coder: a.coder,
            updater: a.updater,
            outer_iters: a.outer_iters,
            sigma: a.sigma,
            epsilon_factor: a.epsilon_factor,
            epsilon: a.epsilon,
            nn_threshold: a.nn_threshold,
            max_atoms: a.max_atoms,
            nmf_inner_iters: a.nmf_inner_iters,
            usage_min: a.usage_min,
            coherence_max: a.coherence_max,
            signed_dictionary: a.signed_dictionary,
            dc_atom: a.dc_atom,
            lg_scales: a.lg_scales,
            lg_orientations: a.lg_orientations,
            lg_phases: a.lg_phases,
            lg_min_wavelength: a.lg_min_wavelength,
            lg_scale_factor: a.lg_scale_factor,
            lg_sigma_on_f: a.lg_sigma_on_f,
        }
    }
}

fn print_report(r: &DenoiseReport) {
    if let (Some(a), Some(b)) = (r.psnr_in, r.psnr_out) {
        println!("psnr in  {a:.4} dB");
        println!("psnr out {b:.4} dB ({:+.4} dB)", b - a);
    }
    println!("epsilon {:.4}, mean residual {:.4}", r.epsilon, r.final_mean_residual);
    println!(
        "outer iterations {}{}, atoms replaced {}",
        r.outer_iterations_run,
        if r.early_exit { " (goal met early)" } else { "" },
        r.atoms_replaced
    );
    let (goal, cap, stall) = r.terminations;
    println!("columns: converged {goal}, hit max atoms {cap}, stalled {stall}");
    println!("inner products {}", r.inner_product_count);
    println!("wall time {:.3} s", r.wall_time);
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::AddNoise { input, out, sigma, seed } => {
            let clean = load_image(&input)?;
            let noisy = add_gaussian_noise(&clean, NoiseSpec::new(sigma, seed)?)?;
            save_image(&noisy, &out)?;
            println!("psnr {:.4} dB", psnr(&clean, &noisy)?);
        }
        Command::Denoise { input, out, reference, config } => {
            let cfg = DenoiseConfig::from(config);
            let noisy = load_image(&input)?;
            let clean = reference.as_ref().map(load_image).transpose()?;
            if let Some(c) = &clean {
                if !c.same_size(&noisy) {
                    return Err(Error::DimensionMismatch(format!(
                        "reference is {}x{}, input is {}x{}",
                        c.width(),
                        c.height(),
                        noisy.width(),
                        noisy.height()
                    )));
                }
            }
            let (restored, mut report) = denoise(&noisy, &cfg)?;
            if let Some(c) = &clean {
                report.psnr_in = Some(psnr(c, &noisy)?);
                report.psnr_out = Some(psnr(c, &restored)?);
            }
            save_image(&restored, &out)?;
            print_report(&report);
        }
        Command::GenDict { kind, k, patch_side, out, mosaic, signed, dc_atom } => {
            let cfg = DenoiseConfig {
                dict_kind: kind,
                dict_k: k,
                patch_side,
                signed_dictionary: signed,
                dc_atom,
                ..Default::default()
            };
            let d = cfg.initial_dictionary()?;
            write_dictionary(&d, &out)?;
            if let Some(m) = mosaic {
                write_mosaic(&d, m)?;
            }
            println!(
                "{kind} dictionary {}x{}, mutual coherence {:.4}",
                d.m(),
                d.k(),
                d.mutual_coherence()
            );
        }
        Command::Bench { spec } => {
            let spec = BenchSpec::from_file(&spec)?;
            let outcome = run_bench(&spec)?;
            print!("{}", summary_table(&outcome.aggregates));
            let failed = outcome.cells.iter().filter(|c| c.outcome.is_err()).count();
            if failed > 0 {
                println!("{failed} cell(s) failed; see the status column");
            }
            println!("wrote {}", spec.output.display());
        }
    }
    Ok(())
}

/// Parse `args` (including the program name) and run the subcommand.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_RUNTIME
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flag_defaults_match_config_defaults() {
        let cli = Cli::try_parse_from(["x", "denoise", "--in", "a", "--out", "b"]).unwrap();
        let Command::Denoise { config, .. } = cli.command else { panic!() };
        assert_eq!(DenoiseConfig::from(config), DenoiseConfig::default());
    }

    #[test]
    fn usage_errors_exit_one() {
        assert_eq!(run(["x", "denoise", "--out", "b"]), EXIT_USAGE);
        assert_eq!(run(["x", "denoise", "--in", "a", "--out", "b", "--bogus"]), EXIT_USAGE);
        assert_eq!(run(["x"]), EXIT_USAGE);
        assert_eq!(run(["x", "--help"]), EXIT_OK);
    }

    #[test]
    fn runtime_errors_exit_two() {
        assert_eq!(
            run(["x", "denoise", "--in", "/nonexistent/a.pgm", "--out", "/tmp/b.pgm"]),
            EXIT_RUNTIME
        );
    }
}
