use std::path::Path;
use std::process::{Command, Output};

const SMALL: &str = r#"{
  "seed": 11,
  "active": { "pool_size": 300, "init_labeled": 30, "per_epoch": 5, "epochs": 2,
              "hidden_width": 8, "hidden_layers": 2, "eval_count": 100 },
  "train": { "steps_per_epoch": 20 },
  "eval": { "test_count": 100, "grid_resolution": 6, "per_level_count": 100,
            "levels": [0.0, 0.1], "windows": [8, 9] }
}"#;

fn dsfs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dsfs")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn ok(args: &[&str]) -> Output {
    let out = dsfs(args);
    assert_eq!(code(&out), 0, "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn small_config(dir: &Path) -> String {
    let p = dir.join("run.json");
    std::fs::write(&p, SMALL).unwrap();
    p.to_str().unwrap().to_owned()
}

#[test]
fn help_documents_every_flag() {
    let cases: &[(&str, &[&str])] = &[
        ("gen-network", &["--buses", "--ders", "--horizon", "--start-hour", "--seed", "--config", "--out-dir"]),
        ("innerbox", &["--network"]),
        ("test-set", &["--network", "--count"]),
        (
            "train",
            &[
                "--strategy",
                "--no-inner-box",
                "--no-hull-labeling",
                "--warm-start",
                "--epochs",
                "--pool-size",
                "--checkpoints",
            ],
        ),
        ("classify", &["--model", "--samples", "--out"]),
        ("evaluate", &["--model", "--test"]),
        ("heatmap", &["--model", "--resolution"]),
        ("rolling", &["--windows", "--epochs"]),
        ("robustness", &["--model", "--feeder", "--levels", "--count"]),
    ];
    ok(&["--help"]);
    for (cmd, flags) in cases {
        let text = String::from_utf8(ok(&[cmd, "--help"]).stdout).unwrap();
        for f in flags.iter().chain(&["--threads"]) {
            assert!(text.contains(f), "{cmd} help lacks {f}");
        }
    }
}

#[test]
fn bad_input_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = s(dir.path());
    assert_eq!(code(&dsfs(&["gen-network", "--ders", "0", "--out-dir", out])), 2);
    assert_eq!(code(&dsfs(&["frobnicate"])), 2);
    assert_eq!(code(&dsfs(&["train", "--strategy", "greedy"])), 2);
    let missing = dir.path().join("nope.json");
    assert_eq!(code(&dsfs(&["evaluate", "--model", s(&missing), "--test", s(&missing), "--out-dir", out])), 5);
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{ "sed": 1 }"#).unwrap();
    assert_eq!(code(&dsfs(&["innerbox", "--config", s(&bad), "--out-dir", out])), 2);
}

#[test]
fn gen_network_is_repeatable() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for d in [&a, &b] {
        let text = String::from_utf8(
            ok(&["gen-network", "--seed", "7", "--buses", "12", "--ders", "18", "--horizon", "2", "--out-dir", s(d)])
                .stdout,
        )
        .unwrap();
        assert!(text.contains("12 buses, 18 DERs, T = 2"));
    }
    for f in ["feeder.json", "network.json"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn full_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out = dir.path().join("out");
    let o = s(&out);
    let file = |n: &str| out.join(n);
    let common = |cmd: &str| vec![cmd.to_owned(), "--config".into(), cfg.clone(), "--out-dir".into(), o.to_owned()];
    let run = |args: Vec<String>| ok(&args.iter().map(String::as_str).collect::<Vec<_>>());

    run(common("gen-network"));
    let net = file("network.json");
    run([common("innerbox"), vec!["--network".into(), s(&net).into()]].concat());
    let ib: serde_json::Value = serde_json::from_slice(&std::fs::read(file("innerbox.json")).unwrap()).unwrap();
    assert!(ib.to_string().contains("objective"));

    run([common("test-set"), vec!["--network".into(), s(&net).into()]].concat());
    run([common("train"), vec!["--network".into(), s(&net).into(), "--checkpoints".into()]].concat());
    for f in ["model.json", "history.csv", "innerset.json", "samples.csv", "model_epoch1.json", "model_epoch2.json"] {
        assert!(file(f).exists(), "{f}");
    }
    let history = std::fs::read_to_string(file("history.csv")).unwrap();
    assert_eq!(history.lines().count(), 3);

    let model = file("model.json");
    let test = file("test.csv");
    run([common("evaluate"), vec!["--model".into(), s(&model).into(), "--test".into(), s(&test).into()]].concat());
    assert!(file("report.json").exists());

    // Unlabeled input: strip the label columns.
    let unlabeled = dir.path().join("unlabeled.csv");
    let text = std::fs::read_to_string(&test).unwrap();
    let stripped: Vec<String> = text.lines().map(|l| l.split(',').take(2).collect::<Vec<_>>().join(",")).collect();
    std::fs::write(&unlabeled, stripped.join("\n") + "\n").unwrap();
    run([common("classify"), vec!["--model".into(), s(&model).into(), "--samples".into(), s(&unlabeled).into()]]
        .concat());
    let classified = std::fs::read_to_string(file("classified.csv")).unwrap();
    assert!(classified.starts_with("p0_1,p0_2,predicted,posterior"));
    assert_eq!(classified.lines().count(), 101);

    run([common("heatmap"), vec!["--model".into(), s(&model).into(), "--network".into(), s(&net).into()]].concat());
    assert_eq!(std::fs::read_to_string(file("grid.csv")).unwrap().lines().count(), 37);

    let feeder = file("feeder.json");
    run([common("robustness"), vec!["--model".into(), s(&model).into(), "--feeder".into(), s(&feeder).into()]].concat());
    assert_eq!(std::fs::read_to_string(file("robustness.csv")).unwrap().lines().count(), 3);

    run([common("rolling"), vec!["--epochs".into(), "1".into()]].concat());
    // Two windows × (epoch 0 + 1 epoch).
    assert_eq!(std::fs::read_to_string(file("rolling.csv")).unwrap().lines().count(), 5);

    let warm_out = dir.path().join("warm");
    ok(&["train", "--config", &cfg, "--out-dir", s(&warm_out), "--network", s(&net), "--warm-start", s(&model)]);
    let ckpt: serde_json::Value = serde_json::from_slice(&std::fs::read(warm_out.join("model.json")).unwrap()).unwrap();
    assert_eq!(ckpt["frozen"], serde_json::json!([true, false, false]));
    assert!(ckpt["meta"]["source_window"].as_str().unwrap().ends_with("model.json"));
}

#[test]
fn strategy_flag_changes_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let (a, b) = (dir.path().join("u"), dir.path().join("r"));
    ok(&["train", "--config", &cfg, "--out-dir", s(&a)]);
    ok(&["train", "--config", &cfg, "--out-dir", s(&b), "--strategy", "random"]);
    assert_ne!(std::fs::read(a.join("samples.csv")).unwrap(), std::fs::read(b.join("samples.csv")).unwrap());
}
