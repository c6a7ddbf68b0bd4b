use std::path::Path;
use std::process::{Command, Output};

use twogrid::mmio::load_sparse;
use twogrid::report::read_rates_csv;

fn twogrid(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_twogrid")).args(args).output().expect("failed to launch twogrid")
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    let mut all: Vec<&str> = args.to_vec();
    all.push("--out-dir");
    all.push(dir.to_str().unwrap());
    twogrid(&all)
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn gen_writes_operator_and_block() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["gen", "--grid-n", "16"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let a = load_sparse(&dir.path().join("a.mtx")).unwrap();
    let block = load_sparse(&dir.path().join("block.mtx")).unwrap();
    assert_eq!((a.n_rows(), a.n_cols()), (256, 256));
    assert_eq!((block.n_rows(), block.n_cols()), (512, 512));
    assert_eq!(block.nnz(), 2 * a.nnz());
    assert!(block.is_symmetric());
}

#[test]
fn gen_poisson_spd() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["gen", "--problem", "poisson2d", "--grid-n", "2", "--spd"]);
    assert!(out.status.success());
    let a = load_sparse(&dir.path().join("a.mtx")).unwrap().to_dense();
    assert_eq!(a.shape(), (4, 4));
    assert_eq!(a[(0, 0)], 36.0);
    assert_eq!(a[(0, 1)], -9.0);
    assert_eq!(a[(0, 3)], 0.0);
    assert!(!dir.path().join("block.mtx").exists());
}

#[test]
fn gen_random_is_reproducible() {
    let d1 = tempfile::tempdir().unwrap();
    let d2 = tempfile::tempdir().unwrap();
    let args = ["gen", "--problem", "random", "--n", "8", "--seed", "7"];
    assert!(run_in(d1.path(), &args).status.success());
    assert!(run_in(d2.path(), &args).status.success());
    let f1 = std::fs::read(d1.path().join("a.mtx")).unwrap();
    let f2 = std::fs::read(d2.path().join("a.mtx")).unwrap();
    assert_eq!(f1, f2);

    let d3 = tempfile::tempdir().unwrap();
    assert!(run_in(d3.path(), &["gen", "--problem", "random", "--n", "8", "--seed", "8"]).status.success());
    assert_ne!(f1, std::fs::read(d3.path().join("a.mtx")).unwrap());
}

#[test]
fn verify_spd_poisson_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["verify", "--problem", "poisson2d", "--grid-n", "4", "--spd"]);
    let text = stdout(&out);
    assert_eq!(out.status.code(), Some(0), "{text}");
    assert!(text.contains("energy-norm identity n_c=15"));
    assert!(!text.contains("FAIL"));
}

#[test]
fn verify_block_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["verify", "--grid-n", "4", "--nc-list", "4,8,16,24"]);
    let text = stdout(&out);
    assert_eq!(out.status.code(), Some(0), "{text}");
    assert!(text.contains("PASS block spectrum pairing"));
}

#[test]
fn verify_detects_corrupted_smoother() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["verify", "--grid-n", "4", "--nc-list", "8", "--corrupt-msym"]);
    let text = stdout(&out);
    assert_eq!(out.status.code(), Some(1), "{text}");
    assert!(text.contains("FAIL symmetrize factorization identity"), "{text}");
}

#[test]
fn sweep_spd_full_range() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["sweep", "--problem", "poisson2d", "--grid-n", "4", "--spd", "--iters", "100"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let recs = read_rates_csv(std::fs::File::open(dir.path().join("rates.csv")).unwrap()).unwrap();
    assert_eq!(recs.iter().map(|r| r.n_c).collect::<Vec<_>>(), (1..16).collect::<Vec<_>>());
    for r in &recs {
        assert!((r.rho_exact - r.theory_rate).abs() < 1e-8, "{r:?}");
        assert_eq!(r.iters, 100);
    }
    for f in ["rates.svg", "spy.svg"] {
        let svg = std::fs::read_to_string(dir.path().join(f)).unwrap();
        roxmltree::Document::parse(&svg).unwrap();
    }
}

#[test]
fn sweep_full_coarse_space_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["sweep", "--grid-n", "2", "--nc-list", "8", "--iters", "10"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let recs = read_rates_csv(std::fs::File::open(dir.path().join("rates.csv")).unwrap()).unwrap();
    assert_eq!(recs.len(), 1);
    assert_eq!(recs[0].n_c, 8);
    assert_eq!(recs[0].rho_exact, 0.0);
    assert_eq!(recs[0].err_rate, 0.0);
}

#[test]
fn config_file_and_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# small run\nproblem = poisson2d\ngrid_n = 3\nspd = true\nnc_list = 2,4\niters = 20\n").unwrap();
    let out = run_in(dir.path(), &["sweep", "--config", cfg.to_str().unwrap(), "--nc-list", "1,2,3"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let recs = read_rates_csv(std::fs::File::open(dir.path().join("rates.csv")).unwrap()).unwrap();
    assert_eq!(recs.iter().map(|r| r.n_c).collect::<Vec<_>>(), vec![1, 2, 3]);
    assert!(stdout(&out).contains("kind=poisson2d grid_n=3"));
}

#[test]
fn spectrum_and_spy_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["spectrum", "--grid-n", "3", "--vectors"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("spectrum.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("index,lambda,norm_sign,imag"));
    assert_eq!(lines.count(), 18);
    let v = twogrid::mmio::read_dense_array(&std::fs::read_to_string(dir.path().join("vectors.mtx")).unwrap()).unwrap();
    assert_eq!(v.shape(), (18, 18));

    let out = run_in(dir.path(), &["spy", "--grid-n", "3"]);
    assert!(out.status.success());
    let svg = std::fs::read_to_string(dir.path().join("spy.svg")).unwrap();
    let doc = roxmltree::Document::parse(&svg).unwrap();
    let marks = doc.descendants().filter(|n| n.attribute("class") == Some("nz")).count();
    // 9 points, 5-point stencil: 9 + 2 * (6 + 6) entries, twice in the block
    assert_eq!(marks, 2 * 33);
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(twogrid(&["sweep", "--no-such-flag"]).status.code(), Some(2));
    assert_eq!(run_in(dir.path(), &["sweep", "--grid-n", "2", "--nc-list", "9"]).status.code(), Some(2));
    assert_eq!(run_in(dir.path(), &["gen", "--problem", "laplace3d"]).status.code(), Some(2));
    assert_eq!(run_in(dir.path(), &["gen", "--grid-n", "0"]).status.code(), Some(2));
    assert_eq!(run_in(dir.path(), &["sweep", "--grid-n", "40"]).status.code(), Some(2));
}

#[test]
fn io_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "x").unwrap();
    let out = run_in(&blocker.join("sub"), &["gen", "--grid-n", "2"]);
    assert_eq!(out.status.code(), Some(3));
    let missing = dir.path().join("missing.cfg");
    assert_eq!(twogrid(&["gen", "--config", missing.to_str().unwrap()]).status.code(), Some(3));
}
