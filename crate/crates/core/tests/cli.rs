//! End-to-end tests of the `dqdsim` binary.

use std::path::Path;
use std::process::Command;

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

fn dqdsim(dir: &Path, args: &[&str]) -> Run {
    let out = Command::new(env!("CARGO_BIN_EXE_dqdsim"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs");
    Run {
        code: out.status.code().unwrap_or(-1),
        stdout: String::from_utf8_lossy(&out.stdout).into_owned(),
        stderr: String::from_utf8_lossy(&out.stderr).into_owned(),
    }
}

/// Value following `key=` in a summary line.
fn summary_value(summary: &str, key: &str) -> f64 {
    let start = summary
        .find(key)
        .unwrap_or_else(|| panic!("`{key}` not in `{summary}`"))
        + key.len();
    summary[start..]
        .split(|c: char| c.is_whitespace())
        .next()
        .unwrap()
        .parse()
        .unwrap()
}

#[test]
fn usage_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let r = dqdsim(dir.path(), &["teleport"]);
    assert_eq!(r.code, 1);
    assert!(r.stderr.contains("usage: dqdsim"));
    assert_eq!(dqdsim(dir.path(), &[]).code, 1);
    assert_eq!(dqdsim(dir.path(), &["--help"]).code, 0);
    assert_eq!(dqdsim(dir.path(), &["rabi", "--format", "svg"]).code, 1);
    assert_eq!(dqdsim(dir.path(), &["fit"]).code, 1);
}

#[test]
fn invalid_config_names_the_key() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.ini"), "[qubits]\nj_uev = -1\n").unwrap();
    let r = dqdsim(dir.path(), &["rabi", "--config", "bad.ini"]);
    assert_eq!(r.code, 1);
    assert!(r.stderr.contains("j_uev"), "{}", r.stderr);

    std::fs::write(dir.path().join("typo.ini"), "[qubits]\nj_ueV = 5\n").unwrap();
    let r = dqdsim(dir.path(), &["rabi", "--config", "typo.ini"]);
    assert_eq!(r.code, 1);
    assert!(r.stderr.contains("line 2"), "{}", r.stderr);

    assert_eq!(
        dqdsim(dir.path(), &["rabi", "--config", "missing.ini"]).code,
        2
    );
}

#[test]
fn ideal_tomography_is_a_permutation() {
    let dir = tempfile::tempdir().unwrap();
    let r = dqdsim(
        dir.path(),
        &["tomography", "--set", "t2_star_ps=inf", "--out", "tomo.csv"],
    );
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert!(summary_value(&r.stdout, "cnot_min=") > 0.97, "{}", r.stdout);

    let matrix = std::fs::read_to_string(dir.path().join("tomo_matrix.csv")).unwrap();
    let mut lines = matrix.lines();
    assert_eq!(lines.next(), Some("input,00,10,01,11"));
    let expected = [
        [0.0, 1.0, 0.0, 0.0],
        [1.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 1.0, 0.0],
        [0.0, 0.0, 0.0, 1.0],
    ];
    for (row, line) in lines.enumerate() {
        let v: Vec<f64> = line
            .split(',')
            .skip(1)
            .map(|x| x.parse().unwrap())
            .collect();
        for c in 0..4 {
            assert!((v[c] - expected[row][c]).abs() < 0.03, "row {row}: {line}");
        }
    }
    let long = std::fs::read_to_string(dir.path().join("tomo.csv")).unwrap();
    assert!(long.starts_with("input,output,probability\n"));
    assert_eq!(long.lines().count(), 17);
    assert!(dir.path().join("tomo_traces.csv").exists());
}

#[test]
fn weak_coupling_fidelity_summary() {
    let dir = tempfile::tempdir().unwrap();
    let r = dqdsim(dir.path(), &["fidelity-vs-j", "--j", "25"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let f = summary_value(&r.stdout, "F(J=25)=");
    assert!((f - 0.45).abs() <= 0.05, "{}", r.stdout);
    let csv = std::fs::read_to_string(dir.path().join("fidelity-vs-j.csv")).unwrap();
    assert!(csv.starts_with("j_uev,f,f_prime\n25,"));
}

#[test]
fn rabi_output_fits_to_the_upper_frequency() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(dqdsim(dir.path(), &["rabi"]).code, 0);
    let r = dqdsim(
        dir.path(),
        &["fit", "--input", "rabi.csv", "--out", "fit.csv"],
    );
    assert_eq!(r.code, 0, "{}", r.stderr);
    let freq = summary_value(&r.stdout, "freq=");
    assert!((freq / 6.2 - 1.0).abs() < 0.01, "{}", r.stdout);
    let fit = std::fs::read_to_string(dir.path().join("fit.csv")).unwrap();
    assert!(fit.starts_with("a0,t2_star_ps,freq_ghz,"));
}

fn gray_level(fill: &str) -> f64 {
    u8::from_str_radix(&fill[1..3], 16).unwrap() as f64 / 255.0
}

#[test]
fn two_pulse_heatmap_shows_six_lower_fringes() {
    let dir = tempfile::tempdir().unwrap();
    let r = dqdsim(
        dir.path(),
        &["two-pulse", "--format", "svg", "--out", "tp.svg"],
    );
    assert_eq!(r.code, 0, "{}", r.stderr);
    assert!(dir.path().join("tp_p_u0.svg").exists());
    let svg = std::fs::read_to_string(dir.path().join("tp_p_l0.svg")).unwrap();

    // Cells of one pixel column, bottom (W2 = 0) to top.
    let mut cells: Vec<(u32, u32, f64)> = svg
        .lines()
        .filter(|l| l.contains(r#"class="cell""#))
        .map(|l| {
            let attr = |name: &str| -> String {
                let key = format!(" {name}=\"");
                let s = l.find(&key).unwrap() + key.len();
                l[s..].split('"').next().unwrap().to_string()
            };
            (
                attr("x").parse().unwrap(),
                attr("y").parse().unwrap(),
                gray_level(&attr("fill")),
            )
        })
        .collect();
    let column_x = cells[cells.len() / 2].0;
    cells.retain(|c| c.0 == column_x);
    cells.sort_by_key(|c| std::cmp::Reverse(c.1));
    assert_eq!(cells.len(), 251);

    // Dark fringes, counted with hysteresis so pixel noise cannot split one.
    let mut fringes = 0;
    let mut in_dark = false;
    for &(_, _, v) in &cells {
        if !in_dark && v < 0.3 {
            in_dark = true;
            fringes += 1;
        } else if in_dark && v > 0.7 {
            in_dark = false;
        }
    }
    let expected = (1000.0_f64 * 6.0 / 1000.0).round() as i32;
    assert!((fringes - expected).abs() <= 1, "{fringes} fringes");
}

const SMALL_GRIDS: &str = "\
[rabi]
w1_stop_ps = 300
w1_step_ps = 10
[conditional_rabi]
w1_stop_ps = 200
w1_step_ps = 10
eps_l_start_uev = -300
eps_l_stop_uev = 300
eps_l_step_uev = 100
[two_pulse]
w1_stop_ps = 200
w1_step_ps = 20
w2_stop_ps = 200
w2_step_ps = 20
[tomography]
w_stop_ps = 300
w_step_ps = 10
[fidelity]
j_uev = 25, 119
w_max_ps = 400
w_step_ps = 8
[lzs]
a2_start_uev = 150
a2_stop_uev = 650
a2_step_uev = 100
w1_stop_ps = 200
w1_step_ps = 20
[controlled_universal]
eps_u_step_uev = 100
eps_l_step_uev = 100
[sync]
delays_ps = -200, 0
eps_u_step_uev = 100
eps_l_step_uev = 100
[fit]
input = rabi_ref.csv
";

#[test]
fn outputs_do_not_depend_on_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("small.ini"), SMALL_GRIDS).unwrap();
    assert_eq!(
        dqdsim(dir.path(), &["rabi", "--out", "rabi_ref.csv"]).code,
        0
    );
    let subcommands = [
        "rabi",
        "conditional-rabi",
        "two-pulse",
        "tomography",
        "fidelity-vs-j",
        "lzs",
        "controlled-universal",
        "sync-scan",
        "fit",
        "waveform",
        "trajectory",
    ];
    for sub in subcommands {
        let mut outputs = Vec::new();
        for threads in ["1", "8"] {
            let out = format!("{sub}_{threads}.csv");
            let r = dqdsim(
                dir.path(),
                &[
                    sub,
                    "--config",
                    "small.ini",
                    "--parallel",
                    threads,
                    "--out",
                    &out,
                ],
            );
            assert_eq!(r.code, 0, "{sub}: {}", r.stderr);
            outputs.push((r.stdout, std::fs::read(dir.path().join(&out)).unwrap()));
        }
        assert_eq!(
            outputs[0], outputs[1],
            "{sub} differs between 1 and 8 threads"
        );
    }
    for sub in ["two-pulse", "lzs"] {
        let mut svgs = Vec::new();
        for threads in ["1", "8"] {
            let out = format!("{sub}_{threads}.svg");
            let r = dqdsim(
                dir.path(),
                &[
                    sub,
                    "--config",
                    "small.ini",
                    "--parallel",
                    threads,
                    "--format",
                    "svg",
                    "--out",
                    &out,
                ],
            );
            assert_eq!(r.code, 0, "{sub}: {}", r.stderr);
            svgs.push(std::fs::read(dir.path().join(format!("{sub}_{threads}_p_l0.svg"))).unwrap());
        }
        assert_eq!(svgs[0], svgs[1]);
    }
}
