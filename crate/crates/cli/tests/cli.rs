use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_ada-arena"));
    c.env_remove("ADA_ARENA_OUT");
    c
}

fn run(dir: &Path, args: &[&str]) -> (i32, String) {
    let out = bin().current_dir(dir).args(args).output().unwrap();
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

#[test]
fn same_seed_gives_identical_csv() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "attack", "natural", "--n", "20", "--ell", "200", "--trials", "6", "--seed", "11",
    ];
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for p in [&a, &b] {
        let mut v = args.to_vec();
        v.extend(["--out", p.to_str().unwrap()]);
        assert_eq!(run(dir.path(), &v).0, 0);
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let mut v = args.to_vec();
    v.extend(["--out", a.to_str().unwrap(), "--workers", "1"]);
    run(dir.path(), &v);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        run(
            dir.path(),
            &["attack", "natural", "--mech", "oracle", "--trials", "1"]
        )
        .0,
        2
    );
    assert_eq!(run(dir.path(), &["gl", "--mb", "9", "--n", "4"]).0, 2);
    assert_eq!(run(dir.path(), &["run"]).0, 2);
    assert_eq!(run(dir.path(), &["ka", "--alpha", "4", "--beta", "1"]).0, 2);
    assert_eq!(run(dir.path(), &["attack", "natural", "--c", "2"]).0, 2);
}

#[test]
fn missed_threshold_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let (code, err) = run(
        dir.path(),
        &["dp-baseline", "--n", "40", "--trials", "5", "--assert"],
    );
    assert_eq!(code, 3, "{err}");
    let (code, _) = run(
        dir.path(),
        &[
            "attack",
            "natural",
            "--n",
            "20",
            "--ell",
            "100",
            "--trials",
            "5",
            "--mech",
            "oracle",
            "--allow-oracle",
            "--assert",
        ],
    );
    assert_eq!(code, 0);
}

#[test]
fn config_file_with_overrides_and_env_dir() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.conf");
    std::fs::write(
        &cfg,
        "kind = gl_decode\nmb = 6\nn = 100 # votes\ntrials = 7\n",
    )
    .unwrap();
    let out = bin()
        .current_dir(dir.path())
        .env("ADA_ARENA_OUT", dir.path().join("env"))
        .args(["run", "--config", cfg.to_str().unwrap(), "--trials", "3"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let csv = std::fs::read_to_string(dir.path().join("env/gl_decode.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
    assert!(csv.starts_with("trial,seed,x,decoded,recovered,error"));
}

#[test]
fn ka_csv_columns() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ka.csv");
    let (code, err) = run(
        dir.path(),
        &[
            "ka",
            "--n",
            "30",
            "--ell",
            "150",
            "--trials",
            "3",
            "--out",
            out.to_str().unwrap(),
        ],
    );
    assert_eq!(code, 0, "{err}");
    let csv = std::fs::read_to_string(out).unwrap();
    assert!(csv.starts_with("trial,o1,o2,agree_bit,best_G_error"));
}

#[test]
fn sweep_and_calibrate_write_files() {
    let dir = tempfile::tempdir().unwrap();
    let s = dir.path().join("s.csv");
    let (code, err) = run(
        dir.path(),
        &[
            "sweep",
            "--ns",
            "20,30",
            "--ells",
            "150",
            "--trials",
            "3",
            "--out",
            s.to_str().unwrap(),
        ],
    );
    assert_eq!(code, 0, "{err}");
    assert_eq!(std::fs::read_to_string(&s).unwrap().lines().count(), 3);
    let c = dir.path().join("c.csv");
    let (code, err) = run(
        dir.path(),
        &[
            "calibrate",
            "--n",
            "20",
            "--ell",
            "150",
            "--trials",
            "4",
            "--kappas",
            "0.9,1.1",
            "--out",
            c.to_str().unwrap(),
        ],
    );
    assert_eq!(code, 0, "{err}");
    assert_eq!(std::fs::read_to_string(&c).unwrap().lines().count(), 3);
}

#[test]
fn ibe_selftest_passes() {
    let dir = tempfile::tempdir().unwrap();
    let (code, err) = run(dir.path(), &["ibe-selftest", "--m", "16", "--assert"]);
    assert_eq!(code, 0, "{err}");
}
