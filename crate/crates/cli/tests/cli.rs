use std::collections::BTreeMap;
use std::path::Path;
use std::process::{Command, Output};

fn memrk(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_memrk"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("spawn memrk")
}

fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                std::fs::read(e.path()).unwrap(),
            )
        })
        .collect()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// Value of `column` in the first data line of a results CSV.
fn field(csv: &str, column: &str) -> String {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let idx = header.iter().position(|h| *h == column).unwrap();
    lines
        .next()
        .unwrap()
        .split(',')
        .nth(idx)
        .unwrap()
        .to_string()
}

fn gen_small(dir: &Path, name: &str) {
    let o = memrk(
        &[
            "gen", "--kind", "dense", "--m", "60", "--n", "5", "--seed", "1", "--out", name,
        ],
        dir,
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn gen_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    gen_small(dir.path(), "a");
    gen_small(dir.path(), "b");
    let a = snapshot(&dir.path().join("a"));
    assert_eq!(a.len(), 5);
    assert_eq!(a, snapshot(&dir.path().join("b")));
}

#[test]
fn sparse_and_tomo_gen() {
    let dir = tempfile::tempdir().unwrap();
    let o = memrk(
        &[
            "gen",
            "--kind",
            "sparse",
            "--m",
            "40",
            "--n",
            "10",
            "--density",
            "0.3",
            "--seed",
            "2",
            "--out",
            "s",
        ],
        dir.path(),
    );
    assert!(o.status.success());
    let mtx = std::fs::read_to_string(dir.path().join("s/A.mtx")).unwrap();
    assert!(mtx.starts_with("%%MatrixMarket matrix coordinate real general"));
    let o = memrk(
        &[
            "gen", "--kind", "tomo", "--seed", "2", "--noise", "0", "--out", "t",
        ],
        dir.path(),
    );
    assert!(o.status.success());
    let meta = std::fs::read_to_string(dir.path().join("t/meta.json")).unwrap();
    assert!(meta.contains("\"rows\": 2250"));
}

#[test]
fn seeds_are_mandatory() {
    let dir = tempfile::tempdir().unwrap();
    let o = memrk(&["gen", "--m", "10", "--n", "3", "--out", "p"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(!dir.path().join("p").exists());

    std::fs::write(
        dir.path().join("spec.json"),
        r#"{"problem": {"m": 30, "n": 5}, "methods": [{"method": "emrk"}]}"#,
    )
    .unwrap();
    let o = memrk(&["bench", "--config", "spec.json"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    let o = memrk(
        &["bench", "--config", "spec.json", "--seed", "3"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let o = memrk(&["solve", "--method", "emrk", "--omega", "3"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(o.stdout.is_empty());
    assert!(String::from_utf8_lossy(&o.stderr).contains("omega"));

    assert_eq!(memrk(&["frobnicate"], dir.path()).status.code(), Some(1));
    assert_eq!(
        memrk(&["solve", "--no-such-flag"], dir.path())
            .status
            .code(),
        Some(1)
    );
    assert_eq!(memrk(&["--help"], dir.path()).status.code(), Some(0));

    // Missing problem directory: domain error.
    let o = memrk(&["solve", "--problem", "missing"], dir.path());
    assert_eq!(o.status.code(), Some(2));

    // Unknown key in a config file is a usage error.
    std::fs::write(dir.path().join("bad.json"), r#"{"tolerance": 1e-3}"#).unwrap();
    let o = memrk(&["solve", "--config", "bad.json"], dir.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn flag_beats_config_beats_default() {
    let dir = tempfile::tempdir().unwrap();
    gen_small(dir.path(), "p");
    std::fs::write(
        dir.path().join("cfg.json"),
        r#"{"max_it": 7, "method": "rek"}"#,
    )
    .unwrap();
    let base = ["solve", "--problem", "p", "--tol", "1e-300"];

    let default = memrk(&base, dir.path());
    assert!(default.status.success());
    assert_eq!(field(&stdout(&default), "iters"), "50000");
    assert_eq!(field(&stdout(&default), "method"), "memrk");

    let mut with_file = base.to_vec();
    with_file.extend(["--config", "cfg.json"]);
    let file = memrk(&with_file, dir.path());
    assert_eq!(field(&stdout(&file), "iters"), "7");
    assert_eq!(field(&stdout(&file), "method"), "rek");

    let mut with_flag = with_file.clone();
    with_flag.extend(["--max-it", "4"]);
    let flag = memrk(&with_flag, dir.path());
    assert_eq!(field(&stdout(&flag), "iters"), "4");
    assert_eq!(field(&stdout(&flag), "method"), "rek");
}

#[test]
fn solve_and_theory_leave_problem_untouched() {
    let dir = tempfile::tempdir().unwrap();
    gen_small(dir.path(), "p");
    let before = snapshot(&dir.path().join("p"));
    let o = memrk(
        &[
            "solve",
            "--problem",
            "p",
            "--method",
            "memrk",
            "--omega",
            "4",
            "--tol",
            "1e-6",
            "--max-it",
            "50000",
            "--out",
            "r.csv",
            "--trace",
            "t.csv",
            "--solution",
            "x.txt",
            "--with-error",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let o = memrk(
        &[
            "theory",
            "--problem",
            "p",
            "--k-max",
            "10",
            "--rate-out",
            "rate.csv",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).starts_with("k,nu,mu,memrk_bound,rek_bound\n"));
    assert_eq!(before, snapshot(&dir.path().join("p")));

    let report = std::fs::read_to_string(dir.path().join("r.csv")).unwrap();
    assert!(report.starts_with("method,m,n,omega,seed,iters,wall_seconds,final_res,err_sq,psnr\n"));
    assert!(field(&report, "final_res").parse::<f64>().unwrap() < 1e-6);
    assert!(std::fs::read_to_string(dir.path().join("t.csv"))
        .unwrap()
        .starts_with("k,res,err_sq\n"));
    assert_eq!(
        std::fs::read_to_string(dir.path().join("x.txt"))
            .unwrap()
            .lines()
            .count(),
        5
    );
}

#[test]
fn bench_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("spec.json"),
        r#"{"problem": {"kind": "sparse", "m": 200, "n": 40, "density": 0.25},
            "methods": [{"method": "rek"}, {"method": "memrk", "omega": 4}],
            "trials": 3, "seed": 5, "compute_err": true}"#,
    )
    .unwrap();
    let strip = |path: &str| -> Vec<String> {
        std::fs::read_to_string(dir.path().join(path))
            .unwrap()
            .lines()
            .map(|l| {
                let mut f: Vec<&str> = l.split(',').collect();
                f.remove(6);
                f.join(",")
            })
            .collect()
    };
    for out in ["a.csv", "b.csv"] {
        let o = memrk(
            &[
                "bench",
                "--config",
                "spec.json",
                "--out",
                out,
                "--meta",
                "meta.json",
            ],
            dir.path(),
        );
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let a = strip("a.csv");
    assert_eq!(a.len(), 1 + 6 + 2);
    assert_eq!(a, strip("b.csv"));
    let meta = std::fs::read_to_string(dir.path().join("meta.json")).unwrap();
    assert!(meta.contains("\"version\""));
}

#[test]
fn tomo_writes_images() {
    let dir = tempfile::tempdir().unwrap();
    let o = memrk(
        &[
            "tomo",
            "--methods",
            "rek,memrk4",
            "--budget-factor",
            "0",
            "--out",
            "t",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in [
        "results.csv",
        "phantom.pgm",
        "phantom.txt",
        "recon_rek.pgm",
        "recon_memrk4.txt",
    ] {
        assert!(dir.path().join("t").join(f).exists(), "{f}");
    }
    let o = memrk(&["tomo", "--methods", "memrkx", "--out", "t2"], dir.path());
    assert_eq!(o.status.code(), Some(1));
}
