use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_rcquad");

fn run_in(dir: &Path, sub: &str, config: &str, out: &str, extra: &[&str]) -> Output {
    let cfg = dir.join(format!("{out}.toml"));
    fs::write(&cfg, config).unwrap();
    Command::new(BIN)
        .arg(sub)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join(out))
        .args(extra)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn csv_rows(path: PathBuf) -> Vec<Vec<String>> {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("#rcquad-v1"));
    let rest: String = lines.map(|l| format!("{l}\n")).collect();
    let mut r = csv::ReaderBuilder::new().from_reader(rest.as_bytes());
    r.records().map(|rec| rec.unwrap().iter().map(str::to_string).collect()).collect()
}

fn json(path: PathBuf) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

const SINGLE_EDGE: &str = r#"
seed = 11
[params]
p = 0.5
q = 2.0
[schedule]
sweeps = 40000
[estimate]
region = { a = 0, b = 1, c = 0, d = 0, rule = "induced" }
bc = "free"
events = [ { kind = "h", rect = { a = 0, b = 1, c = 0, d = 0 } } ]
"#;

#[test]
fn single_edge_estimate_matches_exact_value() {
    let dir = TempDir::new().unwrap();
    let o = run_in(dir.path(), "estimate", SINGLE_EDGE, "edge", &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let rows = csv_rows(dir.path().join("edge/estimate.csv"));
    let (mean, se): (f64, f64) = (rows[0][2].parse().unwrap(), rows[0][3].parse().unwrap());
    assert!((mean - 1.0 / 3.0).abs() < 4.0 * se, "{mean} +- {se}");

    let zero = SINGLE_EDGE.replace("p = 0.5", "p = 0.0");
    assert_eq!(code(&run_in(dir.path(), "estimate", &zero, "zero", &[])), 0);
    let rows = csv_rows(dir.path().join("zero/estimate.csv"));
    assert_eq!((rows[0][2].as_str(), rows[0][3].as_str()), ("0", "0"));
}

#[test]
fn config_errors_exit_with_two() {
    let dir = TempDir::new().unwrap();
    let unknown = format!("{SINGLE_EDGE}\nbogus = 1\n");
    assert_eq!(code(&run_in(dir.path(), "estimate", &unknown, "a", &[])), 2);
    let top = format!("colour = 1\n{SINGLE_EDGE}");
    assert_eq!(code(&run_in(dir.path(), "estimate", &top, "b", &[])), 2);
    assert_eq!(code(&run_in(dir.path(), "classify", SINGLE_EDGE, "c", &[])), 2);
    let bad_p = SINGLE_EDGE.replace("p = 0.5", "p = 1.5");
    assert_eq!(code(&run_in(dir.path(), "estimate", &bad_p, "d", &[])), 2);
    assert_eq!(code(&run_in(dir.path(), "estimate", "not toml [", "e", &[])), 2);
}

#[test]
fn unreliable_statistics_exit_with_four() {
    let cfg = r#"
seed = 5
[params]
p = 0.8333333333333334
q = 25.0
[schedule]
sweeps = 64
burn_in = 1
chains = 2
[estimate]
region = { a = -8, b = 8, c = -8, d = 8 }
bc = "wired"
dynamics = "glauber"
events = [ { kind = "h", rect = { a = -4, b = 4, c = -4, d = 4 } } ]
"#;
    let dir = TempDir::new().unwrap();
    let o = run_in(dir.path(), "estimate", cfg, "u", &[]);
    assert_eq!(code(&o), 4);
    assert_eq!(csv_rows(dir.path().join("u/estimate.csv"))[0][7], "true");
}

#[test]
fn exact_check_outcomes() {
    let dir = TempDir::new().unwrap();
    let small = "[exact_check]\nmax_edges = 7\np = [0.5]\nq = [2.0]\n";
    let o = run_in(dir.path(), "exact-check", small, "ok", &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report = json(dir.path().join("ok/exact_check.json"));
    assert!(report["total"].as_u64().unwrap() > 0);
    assert_eq!(report["failed"], 0);

    let faulty = format!("{small}fkg_sign_flip = true\n");
    let o = run_in(dir.path(), "exact-check", &faulty, "bad", &[]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("FKG"));
    assert_eq!(json(dir.path().join("bad/exact_check.json"))["first_failure"]["identity"], "FKG");

    let o = run_in(dir.path(), "exact-check", "[exact_check]\nempty = true\n", "empty", &[]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stderr).contains("0 checks"));
}

fn svg_lines(svg: &str, class: &str) -> usize {
    svg.matches(&format!("class=\"{class}\"")).count()
}

fn parse_points(svg: &str) -> Vec<(f64, f64)> {
    let start = svg.find("points=\"").expect("witness polyline") + 8;
    let end = start + svg[start..].find('"').unwrap();
    svg[start..end]
        .split(' ')
        .map(|p| {
            let (x, y) = p.split_once(',').unwrap();
            (x.parse().unwrap(), y.parse().unwrap())
        })
        .collect()
}

#[test]
fn snapshot_conventions() {
    let dir = TempDir::new().unwrap();
    let base = r#"
[snapshot]
region = { a = -4, b = 4, c = -4, d = 4, rule = "induced" }
scale = 10.0
"#;
    // The induced box has 2 * 9 * 8 edges.
    let o = run_in(dir.path(), "snapshot", &format!("{base}state = \"open\"\n"), "open", &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let svg = fs::read_to_string(dir.path().join("open/snapshot.svg")).unwrap();
    assert_eq!((svg_lines(&svg, "open"), svg_lines(&svg, "dual")), (144, 0));

    run_in(dir.path(), "snapshot", &format!("{base}state = \"closed\"\n"), "closed", &[]);
    let svg = fs::read_to_string(dir.path().join("closed/snapshot.svg")).unwrap();
    assert_eq!((svg_lines(&svg, "open"), svg_lines(&svg, "dual")), (0, 144));
    assert!(svg.contains("stroke-dasharray"));

    let with_event =
        format!("{base}state = \"open\"\nevent = {{ kind = \"h\", rect = {{ a = -2, b = 2, c = -1, d = 1 }} }}\n");
    run_in(dir.path(), "snapshot", &with_event, "witness", &[]);
    let svg = fs::read_to_string(dir.path().join("witness/snapshot.svg")).unwrap();
    let pts = parse_points(&svg);
    // Unit steps from the left side of the rectangle to its right side.
    assert!(pts.windows(2).all(|w| ((w[0].0 - w[1].0).abs() + (w[0].1 - w[1].1).abs() - 10.0).abs() < 1e-9));
    let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
    assert_eq!(xs[0], 40.0);
    assert_eq!(*xs.last().unwrap(), 80.0);

    let sampled = r#"
seed = 3
[params]
p = 0.6
q = 2.0
[schedule]
sweeps = 20
[snapshot]
region = { a = 0, b = 6, c = 0, d = 6 }
event = { kind = "h", rect = { a = 0, b = 6, c = 0, d = 6 } }
"#;
    assert_eq!(code(&run_in(dir.path(), "snapshot", sampled, "sampled", &[])), 0);
    let huge = "[snapshot]\nregion = { a = 0, b = 400, c = 0, d = 400 }\nstate = \"open\"\n";
    assert_eq!(code(&run_in(dir.path(), "snapshot", huge, "huge", &[])), 2);
}

const QUICK: &str = r#"
[schedule]
sweeps = 400
chains = 2
[split]
replicas = 2
"#;

#[test]
fn classify_subcritical_bernoulli() {
    let dir = TempDir::new().unwrap();
    let cfg = format!("seed = 2\n[params]\np = 0.25\nq = 1.0\n[classify]\ngrid = [2, 4, 8, 16]\n{QUICK}");
    let o = run_in(dir.path(), "classify", &cfg, "c", &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(json(dir.path().join("c/classify.json"))["verdict"], "SubCrit");
    assert_eq!(csv_rows(dir.path().join("c/classify.csv")).len(), 4);
}

#[test]
fn pc_scan_brackets_bernoulli_point() {
    let dir = TempDir::new().unwrap();
    let cfg = format!("seed = 4\n[pc_scan]\nq = [1.0]\ntolerance = 0.1\n{QUICK}");
    let o = run_in(dir.path(), "pc-scan", &cfg, "s", &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let rows = csv_rows(dir.path().join("s/phase_diagram.csv"));
    let (lo, hi): (f64, f64) = (rows[0][1].parse().unwrap(), rows[0][2].parse().unwrap());
    assert!(lo < 0.5 && 0.5 < hi && hi - lo <= 0.1, "[{lo}, {hi}]");
    assert_eq!(rows[0][3], "0.5");
}

#[test]
fn densities_at_p_one() {
    let dir = TempDir::new().unwrap();
    let cfg = format!(
        "[params]\np = 1.0\nq = 2.0\n[densities]\nn = [1, 2]\nalphas = [1, 2, 3, 4]\npower_lambda = 2\n{QUICK}"
    );
    let o = run_in(dir.path(), "densities", &cfg, "d", &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let rows = csv_rows(dir.path().join("d/densities.csv"));
    let p_rows: Vec<_> = rows.iter().filter(|r| r[0] == "p").collect();
    assert_eq!(p_rows.len(), 2);
    assert!(p_rows.iter().all(|r| r[2] == "1"));
}

#[test]
fn box_crossing_fails_when_supercritical() {
    let dir = TempDir::new().unwrap();
    let cfg = format!("[params]\np = 1.0\nq = 2.0\n[box_crossing]\nrho = [1]\ngrid = [2, 4]\n{QUICK}");
    assert_eq!(code(&run_in(dir.path(), "box-crossing", &cfg, "b", &[])), 3);
    assert_eq!(json(dir.path().join("b/box_crossing.json"))[0]["pass"], false);
}

fn tree_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

#[test]
fn every_subcommand_is_reproducible() {
    let common = format!("seed = 9\n[params]\np = 0.55\nq = 2.0\n{QUICK}");
    let cases: Vec<(&str, String)> = vec![
        ("exact-check", "[exact_check]\nmax_edges = 4\np = [0.5]\nq = [2.0]\n".to_string()),
        ("estimate", SINGLE_EDGE.replace("sweeps = 40000", "sweeps = 500")),
        (
            "snapshot",
            format!("{common}[snapshot]\nregion = {{ a = 0, b = 5, c = 0, d = 5 }}\nevent = {{ kind = \"h\", rect = {{ a = 0, b = 5, c = 0, d = 5 }} }}\n"),
        ),
        ("classify", format!("{common}[classify]\ngrid = [1, 2, 3, 4]\n")),
        ("pc-scan", format!("{common}[pc_scan]\nq = [1.0]\ngrid = [1, 2, 3, 4]\ntolerance = 0.3\n")),
        ("densities", format!("{common}[densities]\nn = [1]\nalphas = [1, 2, 3, 4]\n")),
        ("box-crossing", format!("{common}[box_crossing]\nrho = [1, 2]\ngrid = [1, 2]\n")),
        ("one-arm", format!("{common}[one_arm]\ngrid = [1, 2, 3]\n")),
        ("pushing-probe", format!("{common}[pushing_probe]\nn = 1\nalphas = [1, 2, 3, 4]\n")),
    ];
    let dir = TempDir::new().unwrap();
    for (sub, cfg) in &cases {
        let a = run_in(dir.path(), sub, cfg, &format!("{sub}-a"), &["--threads", "2"]);
        let b = run_in(dir.path(), sub, cfg, &format!("{sub}-b"), &["--threads", "1"]);
        assert!(code(&a) != 2 && code(&a) != 1, "{sub}: {}", String::from_utf8_lossy(&a.stderr));
        assert_eq!(code(&a), code(&b), "{sub}");
        let (fa, fb) =
            (tree_bytes(&dir.path().join(format!("{sub}-a"))), tree_bytes(&dir.path().join(format!("{sub}-b"))));
        assert!(!fa.is_empty(), "{sub} wrote nothing");
        assert!(fa == fb, "{sub} output differs between runs");
    }
}

#[test]
fn seed_flag_and_thread_env() {
    let dir = TempDir::new().unwrap();
    let cfg = SINGLE_EDGE.replace("sweeps = 40000", "sweeps = 500");
    run_in(dir.path(), "estimate", &cfg, "s1", &["--seed", "1"]);
    run_in(dir.path(), "estimate", &cfg, "s2", &["--seed", "2"]);
    assert_ne!(tree_bytes(&dir.path().join("s1")), tree_bytes(&dir.path().join("s2")));
    let path = dir.path().join("env.toml");
    fs::write(&path, &cfg).unwrap();
    let o = Command::new(BIN)
        .args(["estimate", "--config"])
        .arg(&path)
        .arg("--out")
        .arg(dir.path().join("env"))
        .env("RCQUAD_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    run_in(dir.path(), "estimate", &cfg, "pool", &["--threads", "3"]);
    assert_eq!(tree_bytes(&dir.path().join("env")), tree_bytes(&dir.path().join("pool")));
}
