use std::path::Path;
use std::process::{Command, Output};

use sparse_denoise::dictionary::read_dictionary;
use sparse_denoise::imagecore::{load_image, save_image};

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sparse-denoise")).args(args).output().unwrap()
}

fn small_image(dir: &Path) -> String {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/cameraman256.pgm");
    let img = load_image(path).unwrap().crop(60, 60, 40, 40).unwrap();
    let out = dir.join("clean.pgm");
    save_image(&img, &out).unwrap();
    out.to_str().unwrap().to_string()
}

#[test]
fn add_noise_then_denoise() {
    let dir = tempfile::tempdir().unwrap();
    let clean = small_image(dir.path());
    let noisy = dir.path().join("noisy.pgm");
    let noisy = noisy.to_str().unwrap();
    let out = cli(&["add-noise", "--in", &clean, "--out", noisy, "--sigma", "20", "--seed", "3"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("psnr"));

    let restored = dir.path().join("restored.pgm");
    let restored = restored.to_str().unwrap();
    let out = cli(&[
        "denoise", "--in", noisy, "--out", restored, "--ref", &clean, "--sigma", "20",
        "--outer-iters", "2",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("psnr out"), "{text}");
    assert_eq!(load_image(restored).unwrap().width(), 40);
}

#[test]
fn plain_denoise_happy_path() {
    let dir = tempfile::tempdir().unwrap();
    let clean = small_image(dir.path());
    let out_path = dir.path().join("d.pgm");
    let out = cli(&[
        "denoise", "--in", &clean, "--out", out_path.to_str().unwrap(), "--sigma", "20",
        "--dict-kind", "dct", "--coder", "omp", "--updater", "none",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out_path.exists());
}

#[test]
fn usage_errors_exit_one() {
    let out = cli(&["denoise", "--out", "x.pgm"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--in"));
    assert_eq!(cli(&["denoise", "--in", "a", "--out", "b", "--frobnicate"]).status.code(), Some(1));
    assert_eq!(cli(&["transmogrify"]).status.code(), Some(1));
    assert_eq!(cli(&["denoise", "--in", "a", "--out", "b", "--coder", "lasso"]).status.code(), Some(1));
}

#[test]
fn help_lists_every_denoise_flag() {
    let out = cli(&["denoise", "--help"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    for flag in [
        "--patch-side", "--stride", "--dict-kind", "--dict-k", "--coder", "--updater",
        "--outer-iters", "--sigma", "--epsilon-factor", "--nn-threshold", "--max-atoms",
        "--nmf-inner-iters", "--usage-min", "--coherence-max", "--dc-atom",
    ] {
        assert!(text.contains(flag), "{flag} missing from help");
    }
    assert!(text.contains("[default: 1.15]"));
}

#[test]
fn runtime_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = cli(&["denoise", "--in", "/nonexistent.pgm", "--out", dir.path().join("o.pgm").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let clean = small_image(dir.path());
    let out = cli(&["denoise", "--in", &clean, "--out", "/tmp/never.pgm", "--dict-kind", "dct"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nnmf"));
}

#[test]
fn gen_dict_writes_dictionary_and_mosaic() {
    let dir = tempfile::tempdir().unwrap();
    let dict = dir.path().join("lg.sdic");
    let mosaic = dir.path().join("lg.pgm");
    let out = cli(&[
        "gen-dict", "--kind", "log-gabor", "--k", "256", "--patch-side", "8",
        "--out", dict.to_str().unwrap(), "--mosaic", mosaic.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let d = read_dictionary(&dict).unwrap();
    assert_eq!((d.m(), d.k()), (64, 256));
    assert!(d.is_nonnegative());
    assert!(load_image(&mosaic).unwrap().width() > 8 * 16);

    let dct = dir.path().join("dct.sdic");
    let out = cli(&["gen-dict", "--kind", "dct", "--k", "100", "--out", dct.to_str().unwrap()]);
    assert!(out.status.success());
    assert_eq!(read_dictionary(&dct).unwrap().k(), 100);
    let bad = cli(&["gen-dict", "--kind", "dct", "--k", "50", "--out", dct.to_str().unwrap()]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn bench_writes_sorted_csv_with_aggregates() {
    let dir = tempfile::tempdir().unwrap();
    small_image(dir.path());
    std::fs::write(
        dir.path().join("spec.cfg"),
        "# small table\nimages = clean.pgm, missing.pgm\nsigmas = 25, 5\n\
         methods = dct+omp+none\nseeds = 2, 1\noutput = table.csv\n",
    )
    .unwrap();
    let out = cli(&["bench", "--spec", dir.path().join("spec.cfg").to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("table.csv")).unwrap();
    let rows: Vec<Vec<&str>> = csv.lines().map(|l| l.split(',').collect()).collect();
    assert_eq!(
        csv.lines().next().unwrap(),
        "image,sigma,method,seed,psnr_in,psnr_out,wall_time_s,inner_products,atoms_replaced,status"
    );
    // 2 images x 2 sigmas x (2 seeds + 1 aggregate)
    assert_eq!(rows.len(), 1 + 12);
    assert!(rows.iter().all(|r| r.len() == 10));
    let keys: Vec<(&str, &str, &str)> = rows[1..].iter().map(|r| (r[0], r[1], r[3])).collect();
    assert_eq!(keys[0], ("clean.pgm", "5.0000", "1"));
    assert_eq!(keys[1], ("clean.pgm", "5.0000", "2"));
    assert_eq!(keys[2], ("clean.pgm", "5.0000", "mean"));
    assert_eq!(keys[3].1, "25.0000");
    assert!(rows[1][9].starts_with("ok"));
    assert!(rows[3][9].contains("n=2"));
    assert!(rows[7][0] == "missing.pgm" && rows[7][9].contains("missing.pgm"));
    let psnr_out: f64 = rows[1][5].parse().unwrap();
    assert!(psnr_out > rows[1][4].parse::<f64>().unwrap());
    assert!(rows[1][4].split('.').nth(1).unwrap().len() == 4);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("dct+omp+none") && !stdout.contains("psnr_in,"));
}
