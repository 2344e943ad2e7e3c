mod common;

use std::fs;
use std::net::TcpListener;
use std::path::Path;
use std::process::{Command, Stdio};
use std::thread;
use std::time::{Duration, Instant};

use serde_json::Value;
use tetrad::cli::run;
use tetrad::service::{BackgroundServer, ServiceConfig};
use tetrad::store::Store;

fn tetrad(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("tetrad").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    (
        code,
        String::from_utf8(out).unwrap(),
        String::from_utf8(err).unwrap(),
    )
}

fn json(args: &[&str]) -> Value {
    let (code, out, err) = tetrad(args);
    assert_eq!(code, 0, "{err}");
    serde_json::from_str(&out).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn attack_sim_json_is_reproducible() {
    let args = [
        "--seed",
        "9",
        "--output",
        "json",
        "attack-sim",
        "--trials",
        "40",
        "--sessions",
        "3",
    ];
    let (_, a, _) = tetrad(&args);
    let (_, b, _) = tetrad(&args);
    assert_eq!(a, b);
    let v: Value = serde_json::from_str(&a).unwrap();
    assert_eq!(v["prior_candidates"], 3_575_880);
    assert_eq!(v["mean_candidate_counts"][0], 72.0);
    assert_eq!(v["keyboard_baseline"]["per_session_candidate_counts"][0], 1);
    assert_eq!(v["reports"].as_array().unwrap().len(), 40);
    let (_, other, _) = tetrad(&[
        "--seed",
        "10",
        "--output",
        "json",
        "attack-sim",
        "--trials",
        "40",
        "--sessions",
        "3",
    ]);
    assert_ne!(a, other);
}

#[test]
fn attack_sim_table_shows_leakage() {
    let (code, out, _) = tetrad(&["attack-sim", "--trials", "5", "--sessions", "1"]);
    assert_eq!(code, 0);
    assert!(out.contains("3575880 ordered secrets, 21.77 bits"), "{out}");
    let row = out.lines().find(|l| l.starts_with("1 ")).unwrap();
    assert_eq!(
        row.split_whitespace().collect::<Vec<_>>(),
        ["1", "72", "72", "6.17"]
    );
    let kb = out.lines().find(|l| l.starts_with("keyboard")).unwrap();
    assert_eq!(
        kb.split_whitespace().collect::<Vec<_>>(),
        ["keyboard", "1", "1", "0.00"]
    );
}

#[test]
fn auth_sim_local() {
    let v = json(&["--output", "json", "auth-sim", "--trials", "5"]);
    assert_eq!(v["accepted"], 5);
    assert!(v["results"]
        .as_array()
        .unwrap()
        .iter()
        .all(|r| r["resource_granted"] == true));
    let (_, a, _) = tetrad(&["--output", "json", "auth-sim", "--trials", "3"]);
    let (_, b, _) = tetrad(&["--output", "json", "auth-sim", "--trials", "3"]);
    assert_eq!(a, b);
}

#[test]
fn auth_sim_remote() {
    let tmp = tempfile::tempdir().unwrap();
    let server = BackgroundServer::start(ServiceConfig::new(tmp.path())).unwrap();
    let url = server.url();
    let remote = json(&[
        "--output", "json", "auth-sim", "--trials", "4", "--remote", &url,
    ]);
    let local = json(&["--output", "json", "auth-sim", "--trials", "4"]);
    assert_eq!(remote, local);
    assert_eq!(remote["accepted"], 4);
}

#[test]
fn auth_sim_unreachable_remote_is_io_error() {
    let port = TcpListener::bind("127.0.0.1:0")
        .unwrap()
        .local_addr()
        .unwrap()
        .port();
    let (code, _, err) = tetrad(&[
        "auth-sim",
        "--trials",
        "1",
        "--remote",
        &format!("http://127.0.0.1:{port}"),
    ]);
    assert_eq!(code, 2, "{err}");
}

#[test]
fn effort_report_flows() {
    let jill = json(&[
        "--output",
        "json",
        "effort-report",
        "--flow",
        "jill",
        "--trials",
        "20",
    ]);
    let jack = json(&[
        "--output",
        "json",
        "effort-report",
        "--flow",
        "jack",
        "--trials",
        "20",
    ]);
    assert_eq!(jill["registration_actions"], 50);
    assert_eq!(jack["registration_actions"], 56);
    assert_eq!(jill["password_baseline_actions"], 9);
    assert_eq!(jill["auth_actions_mean"], jack["auth_actions_mean"]);
    let mean = jill["auth_actions_mean"].as_f64().unwrap();
    assert!(mean > 1.0 && mean <= 101.0, "{mean}");
    let custom = json(&[
        "--output",
        "json",
        "effort-report",
        "--password-baseline",
        "13",
    ]);
    assert_eq!(custom["password_baseline_actions"], 13);
}

#[test]
fn bootstrap_worker_count_does_not_change_output() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = common::synthetic_corpus(&tmp.path().join("corpus"), 50);
    let one = tmp.path().join("one");
    let eight = tmp.path().join("eight");
    for (dir, workers) in [(&one, "1"), (&eight, "8")] {
        let (code, _, err) = tetrad(&[
            "bootstrap",
            "--mode",
            "jack",
            "--corpus",
            s(&corpus.dir),
            "--workers",
            workers,
            "--out",
            s(dir),
        ]);
        assert_eq!(code, 0, "{err}");
    }
    assert_eq!(
        fs::read(one.join("faces/index.json")).unwrap(),
        fs::read(eight.join("faces/index.json")).unwrap()
    );
    let v = json(&[
        "--output",
        "json",
        "bootstrap",
        "--mode",
        "jill",
        "--manifest",
        s(&corpus.manifest),
        "--out",
        s(&tmp.path().join("jill")),
    ]);
    assert_eq!(v["extracted"], 50);
    assert_eq!(
        fs::read(one.join("faces/index.json")).unwrap(),
        fs::read(tmp.path().join("jill/faces/index.json")).unwrap()
    );
}

#[test]
fn bootstrap_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = tmp.path().join("nope.json");
    let (code, _, _) = tetrad(&[
        "bootstrap",
        "--mode",
        "jill",
        "--manifest",
        s(&missing),
        "--out",
        s(tmp.path()),
    ]);
    assert_eq!(code, 2);
    // jill without a manifest is a usage error
    let (code, _, _) = tetrad(&["bootstrap", "--mode", "jill"]);
    assert_eq!(code, 1);
    let (code, _, _) = tetrad(&[
        "bootstrap",
        "--mode",
        "jack",
        "--corpus",
        s(tmp.path()),
        "--workers",
        "0",
    ]);
    assert_eq!(code, 1);
}

#[test]
fn register_then_unlock() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    let v = json(&[
        "--data-dir",
        s(&data),
        "--output",
        "json",
        "--seed",
        "3",
        "register",
        "--account",
        "mia",
    ]);
    assert_eq!(v["images"].as_array().unwrap().len(), 45);
    assert_eq!(v["secret"].as_array().unwrap().len(), 4);
    let (code, _, _) = tetrad(&["--data-dir", s(&data), "register", "--account", "mia"]);
    assert_eq!(code, 1);

    let store = Store::open(&data).unwrap();
    let mut rec = store.load("mia").unwrap().unwrap();
    rec.lockout.consecutive_failures = 3;
    rec.lockout.locked = true;
    store.persist(&rec).unwrap();
    let v = json(&[
        "--data-dir",
        s(&data),
        "--output",
        "json",
        "unlock",
        "--account",
        "mia",
    ]);
    assert_eq!(v["locked"], false);
    assert_eq!(v["consecutive_failures"], 0);
    assert!(!store.load("mia").unwrap().unwrap().lockout.locked);
    let (code, _, _) = tetrad(&["--data-dir", s(&data), "unlock", "--account", "nobody"]);
    assert_eq!(code, 1);
}

#[test]
fn register_from_bootstrap_index() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = common::synthetic_corpus(&tmp.path().join("corpus"), 48);
    let data = tmp.path().join("data");
    tetrad(&[
        "--data-dir",
        s(&data),
        "bootstrap",
        "--mode",
        "jill",
        "--manifest",
        s(&corpus.manifest),
    ]);
    let index = data.join("faces/index.json");
    let v = json(&[
        "--data-dir",
        s(&data),
        "--output",
        "json",
        "register",
        "--account",
        "ned",
        "--index",
        s(&index),
    ]);
    assert_eq!(v["images"].as_array().unwrap().len(), 45);
    let (code, _, err) = tetrad(&[
        "--data-dir",
        s(&data),
        "register",
        "--account",
        "oz",
        "--index",
        s(&index),
        "--images",
        "img-00,img-01",
        "--secret",
        "img-00,img-01,img-02,img-03",
    ]);
    assert_eq!(code, 1, "{err}");
}

#[test]
fn register_with_explicit_secret() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    let v = json(&[
        "--data-dir",
        s(&data),
        "--output",
        "json",
        "register",
        "--account",
        "pat",
        "--secret",
        "img-10,img-03,img-44,img-00",
    ]);
    assert_eq!(
        v["secret"],
        serde_json::json!(["img-10", "img-03", "img-44", "img-00"])
    );
    let (code, _, _) = tetrad(&[
        "--data-dir",
        s(&data),
        "register",
        "--account",
        "quinn",
        "--secret",
        "img-10,img-03,img-44",
    ]);
    assert_eq!(code, 1);
    let (code, _, _) = tetrad(&["--data-dir", s(&data), "register", "--account", "bad/id"]);
    assert_eq!(code, 1);
}

#[test]
fn usage_exit_codes() {
    assert_eq!(tetrad(&["frobnicate"]).0, 1);
    assert_eq!(tetrad(&["attack-sim", "--nope"]).0, 1);
    assert_eq!(tetrad(&["attack-sim", "--trials", "0"]).0, 1);
    assert_eq!(tetrad(&["--output", "xml", "attack-sim"]).0, 1);
    let (code, out, _) = tetrad(&["--help"]);
    assert_eq!(code, 0);
    for sub in [
        "bootstrap",
        "register",
        "auth-sim",
        "attack-sim",
        "effort-report",
        "unlock",
        "serve",
    ] {
        assert!(out.contains(sub), "{sub}");
    }
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_tetrad");
    let status = |args: &[&str]| {
        Command::new(bin)
            .args(args)
            .stdout(Stdio::null())
            .stderr(Stdio::null())
            .status()
            .unwrap()
            .code()
    };
    assert_eq!(status(&["effort-report", "--trials", "2"]), Some(0));
    assert_eq!(status(&["attack-sim", "--nope"]), Some(1));
    assert_eq!(
        status(&[
            "bootstrap",
            "--mode",
            "jill",
            "--manifest",
            "/no/such/file.json"
        ]),
        Some(2)
    );
}

#[test]
fn serve_binary_answers_requests() {
    let tmp = tempfile::tempdir().unwrap();
    let port = TcpListener::bind("127.0.0.1:0")
        .unwrap()
        .local_addr()
        .unwrap()
        .port();
    let addr = format!("127.0.0.1:{port}");
    let mut child = Command::new(env!("CARGO_BIN_EXE_tetrad"))
        .args(["serve"])
        .env("LISTEN_ADDR", &addr)
        .env("DATA_DIR", tmp.path())
        .stderr(Stdio::null())
        .spawn()
        .unwrap();
    let deadline = Instant::now() + Duration::from_secs(20);
    while std::net::TcpStream::connect(&addr).is_err() {
        assert!(Instant::now() < deadline, "server did not come up");
        thread::sleep(Duration::from_millis(50));
    }
    let v = json(&[
        "--output",
        "json",
        "auth-sim",
        "--trials",
        "2",
        "--remote",
        &format!("http://{addr}"),
    ]);
    child.kill().unwrap();
    child.wait().unwrap();
    assert_eq!(v["accepted"], 2);
    assert!(tmp.path().join("accounts").read_dir().unwrap().count() >= 2);
}
