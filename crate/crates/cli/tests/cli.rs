use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn geoveil(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_geoveil"))
        .args(args)
        .env_remove("GEOVEIL_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn metrics_on_collinear_points() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(
        dir.path(),
        "c.jsonl",
        "{\"ap_id\":\"a\",\"x\":0,\"y\":0}\n{\"ap_id\":\"a\",\"x\":100,\"y\":0}\n{\"ap_id\":\"a\",\"x\":200,\"y\":0}\n",
    );
    let o = geoveil(&["metrics", "--input", s(&input), "--dmax", "500"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("n 3"));
    assert!(out.contains("coverage 0.400000"));
    assert!(out.contains("uniformity 0.888889"));
    assert!(out.contains("exposure 0.644444"));
}

#[test]
fn metrics_single_and_empty() {
    let dir = tempfile::tempdir().unwrap();
    let one = write(dir.path(), "one.jsonl", "{\"ap_id\":\"a\",\"lat\":1.3,\"lon\":103.8}\n");
    let o = geoveil(&["--profile", "deploy", "metrics", "--input", s(&one)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("exposure 1.000000"));

    let empty = write(dir.path(), "empty.jsonl", "");
    let o = geoveil(&["metrics", "--input", s(&empty)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("metrics undefined for empty report set"));
}

#[test]
fn metrics_missing_file() {
    let o = geoveil(&["metrics", "--input", "/no/such/reports.jsonl"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("/no/such/reports.jsonl"));
}

#[test]
fn sim_anonymity_defaults_row_count() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fig.csv");
    let o = geoveil(&["sim-anonymity", "--output", s(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    let meta = lines.next().unwrap();
    assert!(meta.starts_with('#') && meta.contains("k=10") && meta.contains("runs=100"), "{meta}");
    assert_eq!(lines.next().unwrap(), "pattern,algorithm,step,n,coverage,uniformity,exposure");
    assert_eq!(lines.count(), 3 * 100);
}

#[test]
fn sim_anonymity_is_deterministic_and_seed_env_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, env_seed: Option<&str>| {
        let out = dir.path().join(name);
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_geoveil"));
        cmd.args(["sim-anonymity", "--runs", "1", "--seed", "7", "--output", s(&out)]);
        match env_seed {
            Some(v) => cmd.env("GEOVEIL_SEED", v),
            None => cmd.env_remove("GEOVEIL_SEED"),
        };
        assert!(cmd.status().unwrap().success());
        fs::read(out).unwrap()
    };
    let a = run("a.csv", None);
    let b = run("b.csv", None);
    assert_eq!(a, b);
    let c = run("c.csv", Some("8"));
    assert_ne!(a, c);
    assert!(String::from_utf8(c).unwrap().starts_with("# seed=8 "));
}

#[test]
fn sim_rejects_bad_flags() {
    assert_eq!(geoveil(&["sim-anonymity", "--k", "0"]).status.code(), Some(2));
    assert_eq!(geoveil(&["sim-anonymity", "--runs", "0"]).status.code(), Some(2));
    assert_eq!(geoveil(&["sim-anonymity", "--pattern", "beta:0:1"]).status.code(), Some(2));
    assert_eq!(
        geoveil(&["sim-anonymity", "--omega", "3", "--k", "10", "--runs", "1"]).status.code(),
        Some(2)
    );
}

#[test]
fn sim_metric_study_writes_rows() {
    let o = geoveil(&[
        "sim-metric-study",
        "--pattern",
        "uniform",
        "--pattern",
        "beta:2:30",
        "--n",
        "400",
        "--step",
        "200",
        "--runs",
        "3",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    let rows: Vec<&str> = out.lines().skip(2).collect();
    assert_eq!(out.lines().nth(1), Some("pattern,n,coverage,uniformity,exposure"));
    assert_eq!(rows.len(), 4);
    assert!(rows[2].starts_with("beta:2:30,200,"));
}

fn stay(prefix: &str, aps: usize, from: i64, until: i64) -> String {
    (from..=until)
        .step_by(600)
        .map(|t| {
            let ids: Vec<String> = (0..aps).map(|i| format!("\"{prefix}{i}\"")).collect();
            format!("{{\"timestamp\":{t},\"bssids\":[{}]}}\n", ids.join(","))
        })
        .collect()
}

fn two_stay_trace() -> String {
    let mut trace = stay("home-", 5, 0, 7200);
    for (i, t) in (7800..=9000).step_by(600).enumerate() {
        trace.push_str(&format!("{{\"timestamp\":{t},\"bssids\":[\"street-{i}\"]}}\n"));
    }
    trace.push_str(&stay("office-", 6, 9600, 16800));
    trace
}

#[test]
fn place_replay_learns_two_places() {
    let dir = tempfile::tempdir().unwrap();
    let trace = write(dir.path(), "scans.jsonl", &two_stay_trace());
    let profile = dir.path().join("places.json");
    let o = geoveil(&[
        "place-replay",
        "--input",
        s(&trace),
        "--delta",
        "0.2",
        "--delta-l",
        "3600",
        "--output",
        s(&profile),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("places_learned 2"), "{}", stdout(&o));
    // 13 scans per stay; the first 8 learn, the remaining 5 are detected.
    assert!(stdout(&o).contains("suppressed_scans 10"), "{}", stdout(&o));
    let json: serde_like::Profile = serde_like::parse(&fs::read_to_string(&profile).unwrap());
    assert_eq!(json.places, 2);
}

#[test]
fn place_replay_short_and_empty_and_unordered() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("p.json");
    let short = write(dir.path(), "short.jsonl", &stay("cafe-", 3, 0, 1800));
    let o = geoveil(&["place-replay", "--input", s(&short), "--output", s(&out)]);
    assert!(stdout(&o).contains("places_learned 0"));
    let empty = write(dir.path(), "empty.jsonl", "");
    let o = geoveil(&["place-replay", "--input", s(&empty), "--output", s(&out)]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("places_learned 0"));
    let unordered = write(
        dir.path(),
        "bad.jsonl",
        "{\"timestamp\":100,\"bssids\":[\"a\"]}\n{\"timestamp\":50,\"bssids\":[\"a\"]}\n",
    );
    let o = geoveil(&["place-replay", "--input", s(&unordered), "--output", s(&out)]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn gen_then_anonymize_with_private_place() {
    let dir = tempfile::tempdir().unwrap();
    let pool = dir.path().join("pool.jsonl");
    let o = geoveil(&["gen", "--pattern", "uniform", "--n", "200", "--owner", "other", "--output", s(&pool)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(fs::read_to_string(&pool).unwrap().lines().count(), 200);

    let trace = write(dir.path(), "scans.jsonl", &two_stay_trace());
    let places = dir.path().join("places.json");
    assert!(geoveil(&["place-replay", "--input", s(&trace), "--output", s(&places)]).status.success());

    let reals = write(
        dir.path(),
        "reals.jsonl",
        concat!(
            "{\"ap_id\":\"ap\",\"x\":10,\"y\":20,\"ambient_aps\":[\"home-0\",\"home-1\"],\"timestamp\":20000}\n",
            "{\"ap_id\":\"ap\",\"x\":-40,\"y\":5,\"ambient_aps\":[\"mall-1\"],\"timestamp\":22400}\n",
        ),
    );
    let poi = write(dir.path(), "poi.csv", "name,x,y\nkiosk,-50,0\nfountain,100,100\n");
    let transcript = dir.path().join("t.jsonl");
    let o = geoveil(&[
        "anonymize",
        "--input",
        s(&reals),
        "--pool",
        s(&pool),
        "--poi",
        s(&poi),
        "--places",
        s(&places),
        "--k",
        "5",
        "--output",
        s(&transcript),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(&transcript).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].contains("\"decision\":\"suppressed\""));
    assert!(lines[0].contains("\"members\":[]"));
    assert!(lines[1].contains("\"decision\":\"submit\""));
    assert!(lines[1].contains("\"real_index\":0"));
    assert_eq!(lines[1].matches("\"ap_id\"").count(), 5);
    // Genuine location snapped to the kiosk.
    assert!(lines[1].contains("{\"ap_id\":\"ap\",\"x\":-50.0,\"y\":0.0"), "{}", lines[1]);

    let o = geoveil(&[
        "anonymize",
        "--input",
        s(&reals),
        "--pool",
        s(&pool),
        "--kind",
        "query",
        "--output",
        s(&transcript),
    ]);
    assert_eq!(o.status.code(), Some(2), "raw locations must not leave without the override");
    assert!(stderr(&o).contains("POI"));

    let o = geoveil(&[
        "anonymize",
        "--input",
        s(&reals),
        "--pool",
        s(&pool),
        "--places",
        s(&places),
        "--kind",
        "query",
        "--allow-raw-location",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o).matches("\"decision\":\"submit\"").count(), 2);
}

/// Tiny reader for the profile file without pulling serde into the test.
mod serde_like {
    pub struct Profile {
        pub places: usize,
    }

    pub fn parse(text: &str) -> Profile {
        let start = text.find("\"places\"").expect("places key");
        let body = &text[start..];
        let open = body.find('[').unwrap();
        let mut depth = 0;
        let mut places = 0;
        for c in body[open..].chars() {
            match c {
                '[' => {
                    depth += 1;
                    if depth == 2 {
                        places += 1;
                    }
                }
                ']' => {
                    depth -= 1;
                    if depth == 0 {
                        break;
                    }
                }
                _ => {}
            }
        }
        Profile { places }
    }
}
