use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use henon_lab::dynamics::orbit;
use henon_lab::rng::{self, index_below};
use henon_lab::{Generator, GroupPreset, Point2};
use henon_lab_cli::render::parse_pgm;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_henon-lab")).args(args).current_dir(dir).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

/// Data rows of a CSV written by the binary, comment line skipped.
fn records(path: &Path) -> (csv::StringRecord, Vec<csv::StringRecord>) {
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_path(path).unwrap();
    let header = r.headers().unwrap().clone();
    (header, r.records().map(Result::unwrap).collect())
}

#[test]
fn orbit_with_zero_steps_has_one_row() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["orbit", "--steps", "0", "--out", "o"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let (header, rows) = records(&dir.path().join("o.csv"));
    assert_eq!(&header, vec!["step", "letter", "x_re", "x_im", "y_re", "y_im", "norm"]);
    assert_eq!(rows.len(), 1);
    assert_eq!(&rows[0], vec!["0", "", "0", "0", "5", "0", "5"]);
}

#[test]
fn orbit_csv_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["orbit", "--start", "0.3,-0.1,0.2,0.05", "--letters", "abABaab", "--out", "o"]);
    assert_eq!(code(&out), 0);
    let (_, rows) = records(&dir.path().join("o.csv"));
    let g = GroupPreset::fixture();
    let letters: Vec<Generator> = "abABaab".chars().map(|c| Generator::from_token(c).unwrap()).collect();
    let t = orbit(&g, letters.iter().copied(), Point2::from_reals([0.3, -0.1, 0.2, 0.05]), 1e12);
    assert_eq!(rows.len(), t.points.len());
    for (row, p) in rows.iter().zip(&t.points) {
        let c: Vec<f64> = (2..6).map(|i| row[i].parse().unwrap()).collect();
        assert_eq!(Point2::from_reals([c[0], c[1], c[2], c[3]]), *p);
    }
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(code(&run(d, &["chain"])), 2);
    assert_eq!(code(&run(d, &["no-such-command"])), 2);
    assert_eq!(code(&run(d, &["orbit", "--config", "missing.json"])), 2);
    fs::write(d.join("bad.json"), r#"{"seed": 1, "colour": "red"}"#).unwrap();
    assert_eq!(code(&run(d, &["orbit", "--config", "bad.json"])), 2);
    fs::write(d.join("badparam.json"), r#"{"params": {"stepz": 3}}"#).unwrap();
    assert_eq!(code(&run(d, &["orbit", "--config", "badparam.json"])), 2);
    fs::write(d.join("other.json"), r#"{"command": "chain"}"#).unwrap();
    assert_eq!(code(&run(d, &["orbit", "--config", "other.json"])), 2);
    assert_eq!(code(&run(d, &["eq5-check", "--seed", "1", "--weights", "0.4,0.2,0.2,0.2"])), 2);
    assert_eq!(code(&run(d, &["render", "--extent", "0,1"])), 2);
    assert_eq!(code(&run(d, &["render", "--cap", "70000"])), 2);
    assert_eq!(code(&run(d, &["render", "--mode", "group"])), 2);
    assert_eq!(code(&run(d, &["chain", "--seed", "1", "--observable", "sin"])), 2);
    assert_eq!(code(&run(d, &["--help"])), 0);
}

#[test]
fn flags_override_config() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(
        d.join("cfg.json"),
        r#"{"command": "orbit", "out": "from-config", "params": {"steps": 5, "letter": "b"}}"#,
    )
    .unwrap();
    assert_eq!(code(&run(d, &["orbit", "--config", "cfg.json"])), 0);
    let (_, rows) = records(&d.join("from-config.csv"));
    assert_eq!(rows.len(), 6);
    assert_eq!(&rows[1][1], "b");
    assert_eq!(code(&run(d, &["orbit", "--config", "cfg.json", "--steps", "2", "--out", "flag"])), 0);
    let (_, rows) = records(&d.join("flag.csv"));
    assert_eq!(rows.len(), 3);
    assert_eq!(&rows[1][1], "b");
}

#[test]
fn header_comment_carries_parameters() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&run(dir.path(), &["walk-drift", "--seed", "3", "-n", "100", "--trials", "10", "--out", "w"])), 0);
    let text = fs::read_to_string(dir.path().join("w.csv")).unwrap();
    let first = text.lines().next().unwrap();
    let json: serde_json::Value = serde_json::from_str(first.strip_prefix("# ").unwrap()).unwrap();
    assert_eq!(json["command"], "walk-drift");
    assert_eq!(json["seed"], 3);
    assert_eq!(json["params"]["n"], 100);
    assert_eq!(json["params"]["trials"], 10);
}

#[test]
fn walk_drift_example() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["walk-drift", "--uniform", "-n", "10000", "--trials", "400", "--seed", "1", "--out", "d"]);
    assert_eq!(code(&out), 0);
    let (header, rows) = records(&dir.path().join("d.csv"));
    let col = header.iter().position(|h| h == "mean").unwrap();
    let mean: f64 = rows[0][col].parse().unwrap();
    assert!((0.48..=0.52).contains(&mean), "{mean}");
}

#[test]
fn raster_agrees_with_orbits() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["render", "--width", "40", "--height", "30", "--extent", "2.5,2", "--cap", "60", "--out", "r"];
    assert_eq!(code(&run(dir.path(), &args)), 0);
    let (w, h, maxval, hash, values) = parse_pgm(&fs::read(dir.path().join("r.pgm")).unwrap()).unwrap();
    assert_eq!((w, h, maxval, hash.len()), (40, 30, 255, 16));
    let g = GroupPreset::fixture();
    let mut rng = rng::stream(5);
    for _ in 0..100 {
        let (col, row) = (index_below(&mut rng, w), index_below(&mut rng, h));
        // real (Re x, Re y) plane, row 0 on top
        let x = -2.5 + 5.0 * col as f64 / 39.0;
        let y = 2.0 - 4.0 * row as f64 / 29.0;
        let t = orbit(&g, std::iter::repeat_n(Generator::H1, 60), Point2::real(x, y), 1e6);
        assert_eq!(u32::from(values[row * w + col]), t.escaped_at.unwrap_or(60) as u32, "pixel ({col}, {row})");
    }
}

#[test]
fn single_pixel_and_wide_rasters_are_valid() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&run(dir.path(), &["render", "--width", "1", "--height", "1", "--slice", "y-line", "--out", "one"])), 0);
    let (w, h, maxval, _, values) = parse_pgm(&fs::read(dir.path().join("one.pgm")).unwrap()).unwrap();
    assert_eq!((w, h, maxval), (1, 1, 255));
    // the anchor (0, 0) is fixed by h₁
    assert_eq!(values, vec![255]);

    assert_eq!(code(&run(dir.path(), &["render", "--width", "5", "--height", "3", "--cap", "1000", "--mode", "biorbit", "--out", "wide"])), 0);
    let bytes = fs::read(dir.path().join("wide.pgm")).unwrap();
    let (_, _, maxval, _, values) = parse_pgm(&bytes).unwrap();
    assert_eq!(maxval, 65535);
    assert_eq!(values.len(), 15);
    assert!(values.iter().all(|&v| v <= 1000));
}

#[test]
fn verification_failures_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = run(d, &["cones-verify", "--seed", "1", "--aperture", "0.3", "--inner-radius", "1.5", "--samples", "2000", "--out", "c"]);
    assert_eq!(code(&out), 1);
    let (header, rows) = records(&d.join("c.csv"));
    let pass = header.iter().position(|h| h == "pass").unwrap();
    assert!(rows.iter().any(|r| &r[pass] == "false"));
    let out = run(d, &["collar-verify", "--seed", "1", "--r-u", "0.5", "--out", "u"]);
    assert_eq!(code(&out), 1);
    assert_eq!(code(&run(d, &["cones-verify", "--seed", "1", "--samples", "2000", "--out", "ok"])), 0);
}

#[test]
fn every_csv_parses_with_consistent_width() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let commands: [&[&str]; 9] = [
        &["walk-drift", "-n", "100", "--trials", "5"],
        &["cones-verify", "--samples", "1000"],
        &["collar-verify", "--samples", "200"],
        &["chain", "--steps", "50", "--observable", "norm-clamp:5", "--defect-bins", "4"],
        &["mass-escape", "--count", "100", "--steps", "20", "--radii", "10,100"],
        &["filled-julia", "--per-axis", "3"],
        &["disjointness", "--per-axis", "3", "--partner", "identical"],
        &["eq5-check", "--chains", "5"],
        &["orbit", "--letters", "aBAb"],
    ];
    for (i, args) in commands.iter().enumerate() {
        let prefix = format!("run{i}");
        let mut full: Vec<&str> = args.to_vec();
        full.extend(["--seed", "9", "--out", &prefix]);
        let out = run(d, &full);
        assert_eq!(code(&out), 0, "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        for entry in fs::read_dir(d).unwrap() {
            let path = entry.unwrap().path();
            let name = path.file_name().unwrap().to_string_lossy().to_string();
            if name.starts_with(&prefix) && name.ends_with(".csv") {
                let (header, rows) = records(&path);
                assert!(!rows.is_empty(), "{name}");
                assert!(rows.iter().all(|r| r.len() == header.len()), "{name}");
            }
        }
    }
}
