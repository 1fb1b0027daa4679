use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use vilenkin::io::read_csv;
use vilenkin_cli::config::{parse_config_text, RunConfig};

fn vilenkin(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vilenkin"))
        .current_dir(dir)
        .env_remove("VILENKIN_OUT")
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn dirichlet_kernel_at_a_scaled_base_is_an_indicator() {
    let dir = tempfile::tempdir().unwrap();
    let out = vilenkin(
        dir.path(),
        &["dirichlet", "--m", "2^", "--n", "8", "--N", "4"],
    );
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    let text = fs::read(dir.path().join("vilenkin-out/dirichlet_n8.csv")).unwrap();
    let (header, values) = read_csv(text.as_slice()).unwrap();
    assert!(header.contains(&("run.n".to_string(), "8".to_string())));
    assert_eq!(values.len(), 16);
    for (i, v) in values.iter().enumerate() {
        assert_eq!(v.re, if i % 8 == 0 { 8.0 } else { 0.0 }, "index {i}");
        assert_eq!(v.im, 0.0);
    }
}

#[test]
fn lebesgue_table_has_one_row_per_index() {
    let dir = tempfile::tempdir().unwrap();
    let out = vilenkin(dir.path(), &["lebesgue", "--m", "2^", "--N", "9"]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    let text = fs::read_to_string(dir.path().join("vilenkin-out/lebesgue.csv")).unwrap();
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "n,N,p,kind,value,lower_bound,upper_bound");
    assert_eq!(rows.len(), 1 + 511);
    for (n, row) in rows[1..].iter().enumerate() {
        let cells: Vec<&str> = row.split(',').collect();
        assert_eq!(cells[0], (n + 1).to_string());
        let [value, lower, upper] = [4, 5, 6].map(|j| cells[j].parse::<f64>().unwrap());
        assert!(lower <= value + 1e-9 && value <= upper + 1e-9, "{row}");
    }
}

#[test]
fn selftest_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = vilenkin(dir.path(), &["selftest"]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    assert!(!stdout(&out).contains("FAIL"));
}

#[test]
fn input_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("broken.csv"), "index,re,im\n0,1\n").unwrap();
    for args in [
        vec!["lebesgue", "--m", "1^"],
        vec!["lebesgue", "--m", "2,x"],
        vec!["dirichlet", "--n", "3", "--N", "30"],
        vec!["scan", "divergence", "--N", "20"],
        vec!["transform", "--input", "broken.csv"],
        vec!["transform", "--input", "missing.csv"],
        vec!["scan", "unknown"],
        vec!["scan", "simon", "--variant", "mn"],
        vec!["--definitely-not-a-flag"],
        vec![],
    ] {
        let out = vilenkin(dir.path(), &args);
        assert_eq!(code(&out), 2, "{args:?}: {}", stdout(&out));
    }
}

#[test]
fn failed_checks_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let gen = vilenkin(
        dir.path(),
        &["atom", "--N", "5", "--rank", "2", "--p", "0.5"],
    );
    assert_eq!(code(&gen), 0, "{}", stdout(&gen));
    let ok = vilenkin(
        dir.path(),
        &[
            "atom",
            "--N",
            "5",
            "--rank",
            "2",
            "--input",
            "vilenkin-out/atom.csv",
        ],
    );
    assert_eq!(code(&ok), 0, "{}", stdout(&ok));
    let wrong = vilenkin(
        dir.path(),
        &[
            "atom",
            "--N",
            "5",
            "--rank",
            "3",
            "--input",
            "vilenkin-out/atom.csv",
        ],
    );
    assert_eq!(code(&wrong), 1, "{}", stdout(&wrong));
    assert!(stdout(&wrong).contains("not a 0.5-atom"));
}

fn assert_same_files(a: &Path, b: &Path, names: &[&str]) {
    for name in names {
        let (x, y) = (
            fs::read(a.join(name)).unwrap(),
            fs::read(b.join(name)).unwrap(),
        );
        assert!(x == y, "{name} differs after regeneration");
    }
}

#[test]
fn scan_artifacts_regenerate_bit_identically() {
    let dir = tempfile::tempdir().unwrap();
    let first = vilenkin(
        dir.path(),
        &[
            "scan",
            "atom-ratio",
            "--N",
            "4,5",
            "--trials",
            "3",
            "--p",
            "0.6",
            "--seed",
            "7",
            "--out",
            "a",
        ],
    );
    assert_eq!(code(&first), 0, "{}", stdout(&first));
    let names = ["atom-ratio.csv", "atom-ratio.json"];
    for (i, source) in ["a/atom-ratio.csv", "a/atom-ratio.json"].iter().enumerate() {
        let target = format!("b{i}");
        let again = vilenkin(dir.path(), &["--config", source, "--out", &target]);
        assert_eq!(code(&again), 0, "{}", stdout(&again));
        assert_same_files(&dir.path().join("a"), &dir.path().join(&target), &names);
    }
}

#[test]
fn trace_plots_carry_the_configuration() {
    let dir = tempfile::tempdir().unwrap();
    let first = vilenkin(
        dir.path(),
        &[
            "scan",
            "divergence",
            "--variant",
            "mn_plus_1",
            "--N",
            "9",
            "--out",
            "a",
        ],
    );
    assert_eq!(code(&first), 0, "{}", stdout(&first));
    let svg = fs::read_to_string(dir.path().join("a/divergence.svg")).unwrap();
    assert!(svg.starts_with("<!--\n# run.command=scan\n"));
    let again = vilenkin(dir.path(), &["--config", "a/divergence.svg", "--out", "b"]);
    assert_eq!(code(&again), 0);
    assert_same_files(
        &dir.path().join("a"),
        &dir.path().join("b"),
        &["divergence.csv", "divergence.json", "divergence.svg"],
    );
}

#[test]
fn binary_round_trip_through_transform() {
    let dir = tempfile::tempdir().unwrap();
    let kernel = vilenkin(
        dir.path(),
        &[
            "dirichlet",
            "--m",
            "(2,3)^",
            "--n",
            "7",
            "--N",
            "3",
            "--out",
            ".",
        ],
    );
    assert_eq!(code(&kernel), 0, "{}", stdout(&kernel));
    let fwd = vilenkin(
        dir.path(),
        &[
            "transform",
            "--m",
            "(2,3)^",
            "--input",
            "dirichlet_n7.csv",
            "--format",
            "bin",
            "--out",
            ".",
        ],
    );
    assert_eq!(code(&fwd), 0, "{}", stdout(&fwd));
    let back = vilenkin(
        dir.path(),
        &[
            "transform",
            "--inverse",
            "--input",
            "dirichlet_n7.spectrum.bin",
            "--out",
            ".",
        ],
    );
    assert_eq!(code(&back), 0, "{}", stdout(&back));
    let (_, original) = read_csv(
        fs::read(dir.path().join("dirichlet_n7.csv"))
            .unwrap()
            .as_slice(),
    )
    .unwrap();
    let (_, restored) = read_csv(
        fs::read(dir.path().join("dirichlet_n7.spectrum.function.csv"))
            .unwrap()
            .as_slice(),
    )
    .unwrap();
    for (a, b) in original.iter().zip(&restored) {
        assert!((a - b).norm() < 1e-9);
    }
    let regen = vilenkin(
        dir.path(),
        &[
            "--config",
            "dirichlet_n7.spectrum.bin.run",
            "--out",
            "again",
        ],
    );
    assert_eq!(code(&regen), 0, "{}", stdout(&regen));
    assert_eq!(
        fs::read(dir.path().join("dirichlet_n7.spectrum.bin")).unwrap(),
        fs::read(dir.path().join("again/dirichlet_n7.spectrum.bin")).unwrap()
    );
}

#[test]
fn output_directory_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let run = |args: &[&str], env: Option<&str>| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_vilenkin"));
        cmd.current_dir(dir.path())
            .env_remove("VILENKIN_OUT")
            .args(args);
        if let Some(v) = env {
            cmd.env("VILENKIN_OUT", v);
        }
        assert_eq!(code(&cmd.output().unwrap()), 0);
    };
    fs::write(
        dir.path().join("run.cfg"),
        "command=dirichlet\nn=2\nN=2\nout=from_file\n",
    )
    .unwrap();
    run(&["--config", "run.cfg"], None);
    assert!(dir.path().join("from_file/dirichlet_n2.csv").exists());
    run(&["--config", "run.cfg"], Some("from_env"));
    assert!(dir.path().join("from_env/dirichlet_n2.csv").exists());
    run(
        &["--config", "run.cfg", "--out", "from_flag"],
        Some("from_env"),
    );
    assert!(dir.path().join("from_flag/dirichlet_n2.csv").exists());
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("run.cfg"),
        "# kernel\ncommand=dirichlet\nn=2\nN=2\n",
    )
    .unwrap();
    let out = vilenkin(dir.path(), &["--config", "run.cfg", "--n", "3", "--N", "3"]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    assert!(dir.path().join("vilenkin-out/dirichlet_n3.csv").exists());
    let clash = vilenkin(dir.path(), &["--config", "run.cfg", "selftest"]);
    assert_eq!(code(&clash), 2);
}

#[test]
fn run_config_round_trips_through_its_file_form() {
    let cases: [&[(&str, &str)]; 4] = [
        &[
            ("command", "scan"),
            ("scan", "boundedness"),
            ("N", "8,10"),
            ("variant", "mn_plus_mn-1"),
            ("p", "0.3"),
        ],
        &[
            ("command", "counterexample"),
            ("m", "2,3,4"),
            ("alphas", "3,7"),
            ("rule", "explicit"),
            ("lambdas", "1,0.5"),
        ],
        &[
            ("command", "transform"),
            ("input", "f.csv"),
            ("inverse", "true"),
            ("format", "bin,csv"),
            ("out", "x"),
        ],
        &[
            ("command", "selftest"),
            ("seed", "18446744073709551615"),
            ("p", "0.1"),
        ],
    ];
    for case in cases {
        let pairs: BTreeMap<String, String> = case
            .iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect();
        let cfg = RunConfig::from_pairs(&pairs).unwrap();
        let text = cfg.to_config_file();
        let back = RunConfig::from_pairs(&parse_config_text(&text).unwrap()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.to_config_file(), text);
        let from_header =
            RunConfig::from_pairs(&parse_config_text(&cfg.header_text()).unwrap()).unwrap();
        assert_eq!(from_header.pairs(), cfg.pairs());
    }
}
