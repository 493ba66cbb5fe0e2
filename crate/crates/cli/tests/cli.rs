use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn vbpso(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vbpso"))
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn gen_sci_profits_are_weight_plus_tenth_of_r() {
    let dir = tempfile::tempdir().unwrap();
    let out = vbpso(
        dir.path(),
        &[
            "gen", "--type", "sci", "--n", "100", "--r", "1000", "--s", "0.5", "--seed", "7", "--out", "sci.txt",
        ],
    );
    assert!(out.status.success(), "{out:?}");
    let text = fs::read_to_string(dir.path().join("sci.txt")).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(' ').collect();
    assert_eq!(header[0], "100");
    assert_eq!(header[2], "SCI");
    let mut total = 0u64;
    let mut count = 0;
    for line in lines {
        let (w, p) = line.split_once(' ').unwrap();
        let (w, p): (u64, u64) = (w.parse().unwrap(), p.parse().unwrap());
        assert!((1..=1000).contains(&w));
        assert_eq!(p, w + 100);
        total += w;
        count += 1;
    }
    assert_eq!(count, 100);
    assert_eq!(header[1].parse::<u64>().unwrap(), total / 2);
}

#[test]
fn gen_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = vbpso(dir.path(), &["gen", "--type", "wci", "--n", "50", "--seed", "3"]);
    let b = vbpso(dir.path(), &["gen", "--type", "wci", "--n", "50", "--seed", "3"]);
    let c = vbpso(dir.path(), &["gen", "--type", "wci", "--n", "50", "--seed", "4"]);
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn solve_three_items() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("three.txt"), "3 5 EXTERNAL\n2 3\n3 4\n4 5\n").unwrap();
    let out = vbpso(dir.path(), &["solve", "--instance", "three.txt"]);
    assert!(out.status.success(), "{out:?}");
    assert_eq!(stdout(&out).trim(), "7");
    let solution = fs::read_to_string(dir.path().join("three.txt.solution")).unwrap();
    assert_eq!(solution, "7\n110\n");
}

#[test]
fn run_with_empty_variants_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("exp.conf"),
        "instance.type = uci\ninstance.n = 20\nvariants =\n",
    )
    .unwrap();
    let out = vbpso(dir.path(), &["run", "--config", "exp.conf"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());
    assert!(String::from_utf8_lossy(&out.stderr).contains("variants"));
}

#[test]
fn invalid_flags_fail() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["gen", "--type", "xci", "--n", "3"][..],
        &["gen", "--type", "sci", "--n", "3", "--r", "1005"],
        &["solve"],
        &["frobnicate"],
    ] {
        let out = vbpso(dir.path(), args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(!out.stderr.is_empty());
    }
    let out = vbpso(dir.path(), &["solve", "--instance", "missing.txt"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing.txt"));
}

#[test]
fn run_metrics_report_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("exp.conf"),
        "instance.type = uci\ninstance.n = 40\ninstance.seed = 9\nswarm.size = 5\nrun.iterations = 40\n\
         run.repetitions = 3\nvariants = vt2,on,1.0,none; vt2,off,1.0-0.4,5\noutput.dir = out\n",
    )
    .unwrap();
    let out = vbpso(dir.path(), &["run", "--config", "exp.conf"]);
    assert!(out.status.success(), "{out:?}");

    let out = vbpso(dir.path(), &["report", "--results-dir", "out"]);
    assert!(out.status.success(), "{out:?}");
    let table = stdout(&out);
    assert_eq!(table, fs::read_to_string(dir.path().join("out/report.csv")).unwrap());
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(
        lines[0],
        "variant,ratio,mean_convergence_round,mean_first_discovery_round,mean_pujv"
    );
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("vc2_w1,"));

    let out = vbpso(
        dir.path(),
        &[
            "metrics",
            "--trace",
            "out/traces/vt2_w1-0.4_vmax5_rep1.trace",
            "--from",
            "3",
            "--to",
            "12",
            "--out-dir",
            "m",
        ],
    );
    assert!(out.status.success(), "{out:?}");
    let printed: u64 = stdout(&out)
        .lines()
        .find_map(|l| l.strip_prefix("pujv "))
        .unwrap()
        .parse()
        .unwrap();
    let per_particle = fs::read_to_string(dir.path().join("m/vt2_w1-0.4_vmax5_rep1_dist.csv")).unwrap();
    let rows: Vec<Vec<u64>> = per_particle
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 10 * 5);
    assert_eq!(rows.iter().map(|r| r[2] - r[3]).sum::<u64>(), printed);
    let summary = fs::read_to_string(dir.path().join("m/vt2_w1-0.4_vmax5_rep1_metrics.csv")).unwrap();
    let last = summary.lines().last().unwrap();
    assert!(
        last.starts_with("12,") && last.ends_with(&format!(",{printed}")),
        "{last}"
    );

    let out = vbpso(
        dir.path(),
        &[
            "metrics",
            "--trace",
            "out/traces/vt2_w1-0.4_vmax5_rep1.trace",
            "--to",
            "41",
        ],
    );
    assert_eq!(out.status.code(), Some(2));
}
