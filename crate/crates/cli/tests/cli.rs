use std::fs;
use std::path::Path;

use cane_cli::run_cli_with;
use cane_cli::synth::{render, SynthSpec};
use cane_sentinel::classifier::Disease;
use cane_sentinel::pipeline::{analyze, PipelineConfig};

fn run(args: &[&str]) -> (i32, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run_cli_with(
        std::iter::once("cane-sentinel").chain(args.iter().copied()),
        &mut out,
        &mut err,
    );
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(run(&["frobnicate"]).0, 2);
    assert_eq!(run(&["advise", "--temp", "30"]).0, 2);
    let (code, out, _) = run(&["--help"]);
    assert_eq!(code, 0);
    assert!(out.contains("gen-corpus"));
}

#[test]
fn missing_image_is_an_io_error() {
    let (code, _, err) = run(&["segment", "--image", "/nonexistent/leaf.ppm"]);
    assert_eq!(code, 2);
    assert!(err.contains("leaf.ppm"));
}

#[test]
fn malformed_image_is_a_domain_error() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.ppm");
    fs::write(&p, b"P5\n1 1\n255\n\0").unwrap();
    assert_eq!(run(&["segment", "--image", s(&p)]).0, 1);
}

#[test]
fn config_is_validated() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("cfg.json");
    fs::write(&p, r#"{"pipeline": {"k": 3}, "typo": 1}"#).unwrap();
    assert_eq!(
        run(&[
            "advise",
            "--config",
            s(&p),
            "--temp",
            "30",
            "--rh",
            "82",
            "--soil",
            "40"
        ])
        .0,
        2
    );
    fs::write(&p, r#"{"pipeline": {"k": 5}}"#).unwrap();
    assert_eq!(
        run(&[
            "advise",
            "--config",
            s(&p),
            "--temp",
            "30",
            "--rh",
            "82",
            "--soil",
            "40"
        ])
        .0,
        2
    );
    fs::write(
        &p,
        r#"{"agronomy": {"stage": "ripening", "soil_band": {"low": 30, "high": 60}}}"#,
    )
    .unwrap();
    let (code, out, _) = run(&[
        "advise",
        "--config",
        s(&p),
        "--temp",
        "13",
        "--rh",
        "60",
        "--soil",
        "40",
    ]);
    assert_eq!(code, 0);
    assert!(out.lines().last().unwrap().contains(r#""overall":"ok""#), "{out}");
}

#[test]
fn advise_reports_stagnant_growth_as_critical() {
    let (code, out, _) = run(&[
        "advise", "--stage", "growth", "--temp", "39", "--rh", "82", "--soil", "40",
    ]);
    assert_eq!(code, 0);
    let lines: Vec<serde_json::Value> = out.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 4);
    assert_eq!(lines[0]["severity"], "critical");
    assert_eq!(lines[0]["band"], "stagnant");
    assert_eq!(lines[3]["overall"], "critical");
    let (code, out, _) = run(&[
        "advise", "--stage", "ripening", "--temp", "-3", "--rh", "55", "--soil", "40",
    ]);
    assert_eq!(code, 0);
    assert!(out.contains("warn"));
    assert_eq!(run(&["advise", "--temp", "30", "--rh", "101", "--soil", "40"]).0, 1);
    assert_eq!(
        run(&["advise", "--stage", "harvest", "--temp", "30", "--rh", "80", "--soil", "40"]).0,
        2
    );
}

#[test]
fn clean_leaves_stay_under_the_noise_floor() {
    let cfg = PipelineConfig::default();
    let mut worst: f64 = 0.0;
    for seed in 0..60 {
        let img = render(&SynthSpec {
            seed,
            ..SynthSpec::default()
        });
        let a = analyze::<f64>(&img, &cfg).unwrap();
        worst = worst.max(a.features.lesion_area_fraction);
    }
    assert!(worst < 0.02, "clean leaf lesion fraction {worst}");
}

#[test]
fn rendering_is_seeded() {
    for disease in [
        None,
        Some(Disease::LeafScald),
        Some(Disease::RedStripe),
        Some(Disease::Mosaic),
    ] {
        let spec = SynthSpec {
            disease,
            seed: 9,
            ..SynthSpec::default()
        };
        assert_eq!(render(&spec), render(&spec));
        assert_ne!(
            render(&spec),
            render(&SynthSpec {
                seed: 10,
                ..spec.clone()
            })
        );
    }
}

#[test]
fn train_then_classify_single_images() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    let (svm, knn, alerts) = (
        dir.path().join("svm.json"),
        dir.path().join("knn.json"),
        dir.path().join("alerts.jsonl"),
    );
    assert_eq!(
        run(&["gen-corpus", "--out", s(&corpus), "--count", "48", "--seed", "5"]).0,
        0
    );
    let (code, _, err) = run(&[
        "train",
        "--all",
        "--corpus",
        s(&corpus),
        "--svm-out",
        s(&svm),
        "--knn-out",
        s(&knn),
    ]);
    assert_eq!(code, 0, "{err}");

    let fresh = |disease, seed| {
        let p = dir.path().join(format!("probe_{seed}.ppm"));
        let img = render(&SynthSpec {
            disease,
            seed,
            ..SynthSpec::default()
        });
        fs::write(&p, cane_sentinel::imaging::encode_ppm(&img)).unwrap();
        p
    };
    let classify = |p: &Path| {
        let (code, out, err) = run(&[
            "classify",
            "--image",
            s(p),
            "--svm",
            s(&svm),
            "--knn",
            s(&knn),
            "--alerts",
            s(&alerts),
        ]);
        assert_eq!(code, 0, "{err}");
        serde_json::from_str::<serde_json::Value>(&out).unwrap()
    };

    let healthy = classify(&fresh(None, 1001));
    assert_eq!(healthy["schema"], "cane-sentinel-report/1");
    assert_eq!(healthy["verdict"]["class"], "healthy");
    assert!(!alerts.exists());

    let stripe = classify(&fresh(Some(Disease::RedStripe), 1002));
    assert_eq!(stripe["verdict"]["class"], "infected");
    assert_eq!(stripe["verdict"]["disease"], "red_stripe");
    let log = fs::read_to_string(&alerts).unwrap();
    assert_eq!(log.lines().count(), 1);
    let alert: serde_json::Value = serde_json::from_str(log.trim()).unwrap();
    assert_eq!(alert["source"], "classifier");
    assert_eq!(alert["severity"], "critical");

    let (code, _, _) = run(&[
        "classify",
        "--image",
        s(&dir.path().join("nope.ppm")),
        "--svm",
        s(&svm),
        "--knn",
        s(&knn),
    ]);
    assert_eq!(code, 2);
    fs::write(&svm, "{\"schema\": \"cane-sentinel-model/9\"}").unwrap();
    let (code, _, _) = run(&[
        "classify",
        "--image",
        s(&fresh(None, 1003)),
        "--svm",
        s(&svm),
        "--knn",
        s(&knn),
    ]);
    assert_eq!(code, 1);
}

#[test]
fn simulate_then_serve_stores_every_tick() {
    let dir = tempfile::tempdir().unwrap();
    let (ticks, nodes) = (25, 3);
    let (code, wire, _) = run(&["simulate", "--ticks", &ticks.to_string(), "--nodes", &nodes.to_string()]);
    assert_eq!(code, 0);
    assert_eq!(wire.lines().count(), ticks * nodes);
    let input = dir.path().join("wire.txt");
    fs::write(&input, &wire).unwrap();
    let data = dir.path().join("data");
    let alerts = dir.path().join("alerts.jsonl");
    let serve = || {
        let (code, out, err) = run(&[
            "serve",
            "--input",
            s(&input),
            "--data-dir",
            s(&data),
            "--alerts",
            s(&alerts),
        ]);
        assert_eq!(code, 0, "{err}");
        serde_json::from_str::<serde_json::Value>(&out).unwrap()
    };
    let first = serve();
    assert_eq!(first["appended"], ticks * nodes);
    let per_node = fs::read_to_string(data.join("node_00.jsonl")).unwrap();
    assert_eq!(per_node.lines().count(), ticks);
    let second = serve();
    assert_eq!(second["appended"], 0);
    assert_eq!(second["duplicates"], ticks * nodes);
    assert_eq!(fs::read_to_string(data.join("node_00.jsonl")).unwrap(), per_node);

    let again = run(&["simulate", "--ticks", &ticks.to_string(), "--nodes", &nodes.to_string()]).1;
    assert_eq!(again, wire);
}
