use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

const SCENARIO: &str = r#"
points_per_traj = 60

[scenario]
n_objects = 30
pattern_set = ["Straight", "LeftTurn", "RightTurn", "SCurve"]
step_length = 10.0
noise_kind = "StudentT"
noise_scale = 2.0
seed = 5
"#;

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_trajvgmm"))
        .args(args)
        .output()
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

struct Fixture {
    dir: tempfile::TempDir,
}

impl Fixture {
    fn new() -> Self {
        Self {
            dir: tempfile::tempdir().unwrap(),
        }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn write(&self, name: &str, content: &str) -> PathBuf {
        let p = self.path(name);
        std::fs::write(&p, content).unwrap();
        p
    }

    fn generated(&self) -> PathBuf {
        let spec = self.write("spec.toml", SCENARIO);
        let out = self.path("data.csv");
        let o = bin(&["gen", s(&spec), "--out", s(&out)]);
        assert!(o.status.success(), "{}", stderr(&o));
        out
    }
}

#[test]
fn gen_writes_header_and_is_deterministic() {
    let f = Fixture::new();
    let a = f.generated();
    let text = std::fs::read_to_string(&a).unwrap();
    assert!(text.starts_with("object_id,timestamp,x,y\n"));
    assert_eq!(text.lines().count(), 1 + 30 * 60);

    let spec = f.path("spec.toml");
    let b = f.path("again.csv");
    assert!(bin(&["gen", s(&spec), "--out", s(&b)]).status.success());
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn gen_names_the_bad_field() {
    let f = Fixture::new();
    let missing = f.write("m.toml", &SCENARIO.replace("seed = 5\n", ""));
    let o = bin(&["gen", s(&missing)]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("seed"), "{}", stderr(&o));

    let bad_value = f.write("b.toml", &SCENARIO.replace("step_length = 10.0", "step_length = -1.0"));
    let o = bin(&["gen", s(&bad_value)]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("step_length"), "{}", stderr(&o));

    let bad_pattern = f.write("p.toml", &SCENARIO.replace("\"SCurve\"", "\"Zigzag\""));
    let o = bin(&["gen", s(&bad_pattern)]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("pattern_set"), "{}", stderr(&o));
}

#[test]
fn preprocess_labels_segments_by_parent() {
    let f = Fixture::new();
    let data = f.generated();
    let o = bin(&["preprocess", s(&data), "--eps", "30", "--min-pts", "3"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("object_id,timestamp,x,y"));
    assert!(lines.all(|l| l.split(',').next().unwrap().contains(':')));
}

#[test]
fn train_requires_eps() {
    let f = Fixture::new();
    let data = f.generated();
    let o = bin(&["train", s(&data), "--min-pts", "3", "--out", s(&f.path("m.json"))]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("eps is required"));
    assert!(!f.path("m.json").exists());
}

#[test]
fn train_reads_config_and_flags_override_it() {
    let f = Fixture::new();
    let data = f.generated();
    let cfg = f.write(
        "run.toml",
        "eps = 30.0\nmin_pts = 3\nk_values = [2]\nh_values = [2]\nhorizon = 2\n",
    );
    let model = f.path("m.json");
    let o = bin(&[
        "train",
        s(&data),
        "--config",
        s(&cfg),
        "--h-values",
        "3",
        "--out",
        s(&model),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let summary = stdout(&o);
    assert!(summary.starts_with("K=2 H=3 elbo="), "{summary}");
    assert!(summary.contains(" score="));
    let json = std::fs::read_to_string(&model).unwrap();
    assert!(json.contains("\"F\": 2"));
}

#[test]
fn predict_outputs_steps_and_handles_edge_cases() {
    let f = Fixture::new();
    let data = f.generated();
    let model = f.path("m.json");
    let o = bin(&[
        "train",
        s(&data),
        "--eps",
        "30",
        "--min-pts",
        "3",
        "--k-values",
        "1,2",
        "--h-values",
        "2",
        "--horizon",
        "3",
        "--out",
        s(&model),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));

    let text = std::fs::read_to_string(&data).unwrap();
    let recent: String = text.lines().take(11).map(|l| format!("{l}\n")).collect();
    let recent = f.write("recent.csv", &recent);

    let o = bin(&["predict", s(&model), s(&recent), "--steps", "7"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "step,x,y");
    assert_eq!(lines.len(), 8);
    assert!(lines[7].starts_with("7,"));
    assert_eq!(out, stdout(&bin(&["predict", s(&model), s(&recent), "--steps", "7"])));

    let o = bin(&["predict", s(&model), s(&recent), "--steps", "0"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "step,x,y\n");

    let short: String = text.lines().take(3).map(|l| format!("{l}\n")).collect();
    let short = f.write("short.csv", &short);
    let o = bin(&["predict", s(&model), s(&short)]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("insufficient history"));

    let corrupt = f.write("bad.json", "{\"version\": 1, \"K\": ");
    let o = bin(&["predict", s(&corrupt), s(&recent)]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("model parse error"));
}

#[test]
fn eval_compares_against_baseline() {
    let f = Fixture::new();
    let data = f.generated();
    let model = f.path("m.json");
    let train = [
        "train",
        s(&data),
        "--eps",
        "30",
        "--min-pts",
        "3",
        "--k-values",
        "4",
        "--h-values",
        "3",
    ];
    assert!(bin(&[&train[..], &["--out", s(&model)]].concat()).status.success());
    let o = bin(&["eval", s(&model), s(&data), "--cell-size", "10"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "method,observable_length,rmse,accuracy,n_cases");
    assert!(lines[1].starts_with("vgmm,3,"));
    assert!(lines[2].starts_with("constant_velocity,3,"));
}

#[test]
fn sweep_rows_determinism_and_empty_input() {
    let f = Fixture::new();
    let data = f.generated();
    let args = |out: &Path| {
        bin(&[
            "sweep",
            "--test",
            s(&data),
            "--train",
            s(&data),
            "--eps",
            "30",
            "--min-pts",
            "3",
            "--k-values",
            "2",
            "--h-values",
            "2..6:2",
            "--horizon",
            "3",
            "--cell-size",
            "10",
            "--seed",
            "9",
            "--out",
            s(out),
        ])
    };
    let (a, b) = (f.path("a.csv"), f.path("b.csv"));
    let o = args(&a);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(args(&b).status.success());
    let bytes = std::fs::read(&a).unwrap();
    assert_eq!(bytes, std::fs::read(&b).unwrap());
    let text = String::from_utf8(bytes).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows[0], "observable_length,rmse,accuracy,n_cases");
    assert_eq!(rows.len(), 4);
    assert!(rows[1].starts_with("2,") && rows[2].starts_with("4,") && rows[3].starts_with("6,"));

    let o = bin(&[
        "sweep",
        "--test",
        s(&data),
        "--baseline",
        "oracle",
        "--h-values",
        "2,4,6",
    ]);
    assert!(o.status.success());
    for row in stdout(&o).lines().skip(1) {
        let cols: Vec<&str> = row.split(',').collect();
        assert_eq!((cols[1], cols[2]), ("0.000000", "1.000000"));
    }

    for content in ["", "object_id,timestamp,x,y\n"] {
        let empty = f.write("empty.csv", content);
        let o = bin(&[
            "sweep",
            "--test",
            s(&empty),
            "--baseline",
            "constant-velocity",
            "--h-values",
            "2..6:2",
        ]);
        assert!(!o.status.success());
        assert!(stderr(&o).contains("no test cases"), "{}", stderr(&o));
    }
}

/// Three straight-line families whose displacement windows form three
/// well-separated blobs.
fn three_blob_csv() -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let jitter = Normal::new(0.0, 0.05).unwrap();
    let mut s = String::from("object_id,timestamp,x,y\n");
    for obj in 0..30 {
        let heading = (obj % 3) as f64 * 120f64.to_radians();
        let (dx, dy) = (10.0 * heading.cos(), 10.0 * heading.sin());
        let (x0, y0) = (obj as f64 * 1000.0, 0.0);
        for t in 0..40 {
            let x = x0 + t as f64 * dx + jitter.sample(&mut rng);
            let y = y0 + t as f64 * dy + jitter.sample(&mut rng);
            writeln!(s, "{obj},{t},{x},{y}").unwrap();
        }
    }
    s
}

#[test]
fn train_on_three_blobs_reports_three_components() {
    let f = Fixture::new();
    let data = f.write("blobs.csv", &three_blob_csv());
    let model = f.path("m.json");
    let o = bin(&[
        "train",
        s(&data),
        "--eps",
        "30",
        "--min-pts",
        "3",
        "--k-values",
        "8",
        "--h-values",
        "1",
        "--horizon",
        "1",
        "--alpha0",
        "0.001",
        "--out",
        s(&model),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let summary = stdout(&o);
    assert!(summary.trim_end().ends_with("effective=3"), "{summary}");
}
