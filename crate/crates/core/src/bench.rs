//! PSNR-versus-noise benchmark harness.
//!
//! A bench spec is a text file of `key = value` lines (`#` starts a
//! comment, lists are comma-separated):
//!
//! ```text
//! images  = lena.pgm, barbara.pgm
//! sigmas  = 15, 20, 25
//! methods = dct+omp+none, log-gabor-signed+omp+ksvd, log-gabor+amp+nnmf
//! seeds   = 1, 2, 3
//! output  = table2.csv
//! outer_iters = 10        # any DenoiseConfig knob may be overridden
//! ```
//!
//! Every (image, sigma, method, seed) cell becomes one CSV row, followed by
//! one aggregate row per (image, sigma, method) whose `seed` column reads
//! `mean`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::coding::Coder;
use crate::error::{Error, Result};
use crate::imagecore::{load_image, Image, NoiseSpec};
use crate::pipeline::{denoise_with_reference, DenoiseConfig, DictKind};
use crate::update::Updater;

pub const CSV_HEADER: &str =
    "image,sigma,method,seed,psnr_in,psnr_out,wall_time_s,inner_products,atoms_replaced,status";

/// A (dictionary, coder, updater) combination, written `dict+coder+updater`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Method {
    pub dict: DictKind,
    pub signed: bool,
    pub coder: Coder,
    pub updater: Updater,
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().split('+').map(str::trim).collect();
        let [dict, coder, updater] = parts[..] else {
            return Err(Error::Config(format!(
                "method `{s}` must look like dict+coder+updater"
            )));
        };
        let (dict, signed) = match dict.to_ascii_lowercase().as_str() {
            "log-gabor-signed" | "lg-signed" => (DictKind::LogGabor, true),
            other => {
                let kind: DictKind = other.parse()?;
                (kind, kind == DictKind::Dct)
            }
        };
        Ok(Method {
            dict,
            signed,
            coder: coder.parse()?,
            updater: updater.parse()?,
        })
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let dict = match (self.dict, self.signed) {
            (DictKind::LogGabor, true) => "log-gabor-signed",
            (DictKind::LogGabor, false) => "log-gabor",
            (DictKind::Dct, _) => "dct",
        };
        write!(f, "{dict}+{}+{}", self.coder, self.updater)
    }
}

impl Method {
    pub fn apply(&self, base: &DenoiseConfig) -> DenoiseConfig {
        DenoiseConfig {
            dict_kind: self.dict,
            signed_dictionary: self.signed && self.dict == DictKind::LogGabor,
            coder: self.coder,
            updater: self.updater,
            ..base.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchSpec {
    /// Image paths as written in the spec (used verbatim in the CSV).
    pub images: Vec<String>,
    pub sigmas: Vec<f64>,
    pub methods: Vec<Method>,
    pub seeds: Vec<u64>,
    pub output: PathBuf,
    /// Directory relative image paths are resolved against.
    pub base_dir: PathBuf,
    /// Settings shared by every cell; sigma and method fields are overwritten.
    pub base_config: DenoiseConfig,
}

fn list<T: std::str::FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|v| !v.is_empty())
        .map(|v| {
            v.parse()
                .map_err(|_| Error::Config(format!("bad value `{v}` for `{key}`")))
        })
        .collect()
}

fn scalar<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("bad value `{value}` for `{key}`")))
}

impl BenchSpec {
    pub fn parse(text: &str, base_dir: impl Into<PathBuf>) -> Result<Self> {
        let mut images = Vec::new();
        let mut sigmas = Vec::new();
        let mut methods = Vec::new();
        let mut seeds = vec![1, 2, 3];
        let mut output = None;
        let mut cfg = DenoiseConfig::default();

        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Config(format!(
                    "line {}: expected key = value, got `{line}`",
                    no + 1
                )));
            };
            let key = key.trim().to_ascii_lowercase().replace('-', "_");
            let value = value.trim();
            match key.as_str() {
                "images" => images = list::<String>(&key, value)?,
                "sigmas" => sigmas = list(&key, value)?,
                "methods" => methods = list(&key, value)?,
                "seeds" => seeds = list(&key, value)?,
                "output" => output = Some(PathBuf::from(value)),
                "patch_side" => cfg.patch_side = scalar(&key, value)?,
                "stride" => cfg.stride = scalar(&key, value)?,
                "dict_k" => cfg.dict_k = scalar(&key, value)?,
                "outer_iters" => cfg.outer_iters = scalar(&key, value)?,
                "epsilon_factor" => cfg.epsilon_factor = scalar(&key, value)?,
                "nn_threshold" => cfg.nn_threshold = scalar(&key, value)?,
                "max_atoms" => cfg.max_atoms = scalar(&key, value)?,
                "nmf_inner_iters" => cfg.nmf_inner_iters = scalar(&key, value)?,
                "usage_min" => cfg.usage_min = scalar(&key, value)?,
                "coherence_max" => cfg.coherence_max = scalar(&key, value)?,
                "dc_atom" => cfg.dc_atom = scalar(&key, value)?,
                other => {
                    return Err(Error::Config(format!(
                        "line {}: unknown key `{other}`",
                        no + 1
                    )))
                }
            }
        }

        let spec = BenchSpec {
            images,
            sigmas,
            methods,
            seeds,
            output: output.ok_or_else(|| Error::Config("missing `output`".into()))?,
            base_dir: base_dir.into(),
            base_config: cfg,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let mut spec = Self::parse(&text, base.clone())?;
        if spec.output.is_relative() {
            spec.output = base.join(&spec.output);
        }
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, empty) in [
            ("images", self.images.is_empty()),
            ("sigmas", self.sigmas.is_empty()),
            ("methods", self.methods.is_empty()),
            ("seeds", self.seeds.is_empty()),
        ] {
            if empty {
                return Err(Error::Config(format!("`{name}` must not be empty")));
            }
        }
        if let Some(s) = self.sigmas.iter().find(|s| !(**s >= 0.0)) {
            return Err(Error::Config(format!("sigma {s} is negative")));
        }
        Ok(())
    }

    fn resolve(&self, image: &str) -> PathBuf {
        let p = Path::new(image);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }
}

/// One benchmark cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub image: String,
    pub sigma: f64,
    pub method: Method,
    pub seed: u64,
    pub outcome: std::result::Result<CellMetrics, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellMetrics {
    pub psnr_in: f64,
    pub psnr_out: f64,
    pub wall_time_s: f64,
    pub inner_products: u64,
    pub atoms_replaced: usize,
    /// Final codes' (error goal, max atoms, stalled) termination counts.
    pub terminations: (usize, usize, usize),
}

/// Mean and sample standard deviation over one (image, sigma, method) group.
#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub image: String,
    pub sigma: f64,
    pub method: Method,
    pub n_ok: usize,
    pub psnr_in: (f64, f64),
    pub psnr_out: (f64, f64),
    pub wall_time_s: f64,
    pub inner_products: f64,
    pub atoms_replaced: f64,
}

#[derive(Debug, Clone)]
pub struct BenchOutcome {
    pub cells: Vec<CellResult>,
    pub aggregates: Vec<Aggregate>,
    pub csv: String,
}

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn fmt4(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:.4}")
    }
}

fn csv_field(s: &str) -> String {
    s.replace([',', '\n', '\r'], ";")
}

fn run_cell(clean: &std::result::Result<Image, String>, cell: (&str, f64, Method, u64), base: &DenoiseConfig) -> CellResult {
    let (image, sigma, method, seed) = cell;
    let outcome = clean.clone().and_then(|clean| {
        let cfg = DenoiseConfig { sigma, ..method.apply(base) };
        denoise_with_reference(&clean, &cfg, NoiseSpec { sigma, seed })
            .map(|(_, r)| CellMetrics {
                psnr_in: r.psnr_in.unwrap_or(f64::NAN),
                psnr_out: r.psnr_out.unwrap_or(f64::NAN),
                wall_time_s: r.wall_time,
                inner_products: r.inner_product_count,
                atoms_replaced: r.atoms_replaced,
                terminations: r.terminations,
            })
            .map_err(|e| e.to_string())
    });
    CellResult {
        image: image.to_string(),
        sigma,
        method,
        seed,
        outcome,
    }
}

/// Run every cell, write the CSV to `spec.output` and return everything.
pub fn run_bench(spec: &BenchSpec) -> Result<BenchOutcome> {
    let outcome = evaluate(spec);
    std::fs::write(&spec.output, &outcome.csv).map_err(|e| Error::io(&spec.output, e))?;
    Ok(outcome)
}

/// Run every cell without writing anything.
pub fn evaluate(spec: &BenchSpec) -> BenchOutcome {
    let mut images: Vec<&String> = spec.images.iter().collect();
    images.sort();
    images.dedup();
    let loaded: BTreeMap<&str, std::result::Result<Image, String>> = images
        .iter()
        .map(|&i| (i.as_str(), load_image(spec.resolve(i)).map_err(|e| e.to_string())))
        .collect();

    let mut sigmas = spec.sigmas.clone();
    sigmas.sort_by(f64::total_cmp);
    sigmas.dedup();
    let mut methods = spec.methods.clone();
    methods.sort_by_key(|m| m.to_string());
    methods.dedup();
    let mut seeds = spec.seeds.clone();
    seeds.sort_unstable();
    seeds.dedup();

    let mut plan = Vec::new();
    for &image in &images {
        for &sigma in &sigmas {
            for &method in &methods {
                for &seed in &seeds {
                    plan.push((image.as_str(), sigma, method, seed));
                }
            }
        }
    }
    // plan is already in (image, sigma, method, seed) order; collect keeps it
    let cells: Vec<CellResult> = plan
        .par_iter()
        .map(|&cell| run_cell(&loaded[cell.0], cell, &spec.base_config))
        .collect();

    let mut csv = String::new();
    csv.push_str(CSV_HEADER);
    csv.push('\n');
    let mut aggregates = Vec::new();
    for group in cells.chunk_by(|a, b| a.image == b.image && a.sigma == b.sigma && a.method == b.method) {
        let first = &group[0];
        for c in group {
            match &c.outcome {
                Ok(m) => {
                    let (goal, cap, stall) = m.terminations;
                    let _ = writeln!(
                        csv,
                        "{},{},{},{},{},{},{},{},{},ok converged={goal} max_atoms={cap} stalled={stall}",
                        csv_field(&c.image),
                        fmt4(c.sigma),
                        c.method,
                        c.seed,
                        fmt4(m.psnr_in),
                        fmt4(m.psnr_out),
                        fmt4(m.wall_time_s),
                        m.inner_products,
                        m.atoms_replaced,
                    );
                }
                Err(e) => {
                    let _ = writeln!(
                        csv,
                        "{},{},{},{},nan,nan,nan,,,{}",
                        csv_field(&c.image),
                        fmt4(c.sigma),
                        c.method,
                        c.seed,
                        csv_field(e)
                    );
                }
            }
        }
        let ok: Vec<&CellMetrics> = group.iter().filter_map(|c| c.outcome.as_ref().ok()).collect();
        let pick = |f: fn(&CellMetrics) -> f64| ok.iter().map(|m| f(m)).collect::<Vec<f64>>();
        let agg = Aggregate {
            image: first.image.clone(),
            sigma: first.sigma,
            method: first.method,
            n_ok: ok.len(),
            psnr_in: mean_sd(&pick(|m| m.psnr_in)),
            psnr_out: mean_sd(&pick(|m| m.psnr_out)),
            wall_time_s: mean_sd(&pick(|m| m.wall_time_s)).0,
            inner_products: mean_sd(&pick(|m| m.inner_products as f64)).0,
            atoms_replaced: mean_sd(&pick(|m| m.atoms_replaced as f64)).0,
        };
        let _ = writeln!(
            csv,
            "{},{},{},mean,{},{},{},{},{},aggregate n={} sd_psnr_in={} sd_psnr_out={}",
            csv_field(&agg.image),
            fmt4(agg.sigma),
            agg.method,
            fmt4(agg.psnr_in.0),
            fmt4(agg.psnr_out.0),
            fmt4(agg.wall_time_s),
            fmt4(agg.inner_products),
            fmt4(agg.atoms_replaced),
            agg.n_ok,
            fmt4(agg.psnr_in.1),
            fmt4(agg.psnr_out.1),
        );
        aggregates.push(agg);
    }

    BenchOutcome {
        cells,
        aggregates,
        csv,
    }
}

/// Fixed-width summary of the aggregate rows for terminal output.
pub fn summary_table(aggregates: &[Aggregate]) -> String {
    let w = aggregates.iter().map(|a| a.image.len()).max().unwrap_or(0).max(5);
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<w$} {:>7} {:<28} {:>9} {:>9} {:>8} {:>3}",
        "image", "sigma", "method", "psnr_in", "psnr_out", "sd_out", "n"
    );
    for a in aggregates {
        let _ = writeln!(
            out,
            "{:<w$} {:>7.2} {:<28} {:>9} {:>9} {:>8} {:>3}",
            a.image,
            a.sigma,
            a.method.to_string(),
            fmt4(a.psnr_in.0),
            fmt4(a.psnr_out.0),
            fmt4(a.psnr_out.1),
            a.n_ok
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_round_trip() {
        for s in ["dct+omp+none", "log-gabor+amp+nnmf", "log-gabor-signed+omp+ksvd"] {
            let m: Method = s.parse().unwrap();
            assert_eq!(m.to_string(), s);
        }
        assert!("dct+omp".parse::<Method>().is_err());
        assert!("dct+foo+none".parse::<Method>().is_err());
    }

    #[test]
    fn spec_parsing() {
        let text = "# table\nimages = a.pgm, b.pgm\nsigmas=15,20\nmethods = dct+omp+none\noutput = out.csv\nouter_iters = 3\n";
        let spec = BenchSpec::parse(text, "/tmp").unwrap();
        assert_eq!(spec.images, vec!["a.pgm", "b.pgm"]);
        assert_eq!(spec.sigmas, vec![15.0, 20.0]);
        assert_eq!(spec.seeds, vec![1, 2, 3]);
        assert_eq!(spec.base_config.outer_iters, 3);
        assert!(BenchSpec::parse("images = a.pgm\nsigmas = 1\nmethods = dct+omp+none\n", "/").is_err());
        assert!(BenchSpec::parse("images = \nsigmas = 1\nmethods = dct+omp+none\noutput=x\n", "/").is_err());
        assert!(BenchSpec::parse("bogus = 1\n", "/").is_err());
    }

    #[test]
    fn sample_sd() {
        let (m, s) = mean_sd(&[1.0, 2.0, 3.0]);
        assert_eq!(m, 2.0);
        assert_eq!(s, 1.0);
        assert!(mean_sd(&[4.0]).1.is_nan());
    }

    #[test]
    fn missing_image_becomes_error_row() {
        let spec = BenchSpec::parse(
            "images = nope.pgm\nsigmas = 10\nmethods = dct+omp+none\nseeds = 1\noutput = x.csv\n",
            "/nonexistent",
        )
        .unwrap();
        let out = evaluate(&spec);
        let lines: Vec<&str> = out.csv.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines.len(), 3);
        assert!(lines[1].contains("i/o error"));
        assert!(lines[2].contains(",mean,") && lines[2].contains("n=0"));
    }
}
