use std::path::Path;
use std::process::{Command, Output};

use diffront::constants::Constants;
use diffront::harness::experiments::save_field;
use diffront::sampler::simulate_particles;

fn diffront(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_diffront"))
        .args(args)
        .env_remove("DIFFRONT_THREADS")
        .output()
        .expect("binary runs")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn front_csv_has_documented_columns() {
    let dir = tempfile::tempdir().unwrap();
    let out = diffront(&[
        "front",
        "--t",
        "400",
        "--replicas",
        "3",
        "--seed",
        "5",
        "--out",
        path_str(dir.path()),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let mut reader = csv::Reader::from_path(dir.path().join("dense-front.csv")).unwrap();
    let header: Vec<String> = reader.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(
        &header[..6],
        ["seed", "L", "max_in", "max_out", "r_star", "unique_flag"]
    );
    assert!(header.contains(&"config_hash".to_string()));
    let rows: Vec<csv::StringRecord> = reader.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 3);
    let hashes: std::collections::BTreeSet<&str> = rows.iter().map(|r| &r[header.len() - 1]).collect();
    assert_eq!(hashes.len(), 1);
}

#[test]
fn json_output_embeds_seed_and_hash() {
    let dir = tempfile::tempdir().unwrap();
    let out = diffront(&[
        "strip",
        "--height",
        "32",
        "--ell",
        "20",
        "--replicas",
        "2",
        "--seed",
        "9",
        "--format",
        "json",
        "--out",
        path_str(dir.path()),
    ]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(dir.path().join("strip.json")).unwrap();
    let doc: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(doc["experiment"], "strip");
    assert_eq!(doc["seed"], 9);
    let hash = doc["config_hash"].as_str().unwrap();
    assert_eq!(hash.len(), 16);
    let rows = doc["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r["config_hash"] == hash && r["N"] == 32));
}

#[test]
fn constants_print_in_both_formats() {
    let toml_out = diffront(&["constants"]);
    assert!(toml_out.status.success());
    let parsed: Constants = toml::from_str(&String::from_utf8(toml_out.stdout).unwrap()).unwrap();
    assert_eq!(parsed, Constants::current());
    assert_eq!(parsed.floor_lambda_c_1e4, 3976);
    assert_eq!(parsed.floor_lambda_max_1e4, 1463);
    let json_out = diffront(&["constants", "--format", "json"]);
    let parsed: Constants = serde_json::from_slice(&json_out.stdout).unwrap();
    assert_eq!(parsed, Constants::current());
}

#[test]
fn render_converts_a_grid_file() {
    let dir = tempfile::tempdir().unwrap();
    let field = simulate_particles(2000, &[100], 3).unwrap().remove(0);
    let grid = dir.path().join("field.grid");
    save_field(&field, &grid).unwrap();
    let ppm = dir.path().join("field.ppm");
    let out = diffront(&[
        "render",
        path_str(&grid),
        path_str(&ppm),
        "--front",
        "--pixels",
        "2",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let bytes = std::fs::read(&ppm).unwrap();
    assert!(bytes.starts_with(b"P6\n"));
    let header = String::from_utf8_lossy(&bytes[..20]).to_string();
    let dims: Vec<usize> = header
        .lines()
        .nth(1)
        .unwrap()
        .split(' ')
        .map(|x| x.parse().unwrap())
        .collect();
    assert_eq!(
        bytes.len(),
        header.lines().take(3).map(|l| l.len() + 1).sum::<usize>() + 3 * dims[0] * dims[1]
    );
}

#[test]
fn exit_codes() {
    assert_eq!(diffront(&["no-such-command"]).status.code(), Some(2));
    assert_eq!(diffront(&["front", "--t", "20000000"]).status.code(), Some(3));
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("absent.grid");
    let code = diffront(&["render", path_str(&missing), path_str(&dir.path().join("x.ppm"))])
        .status
        .code();
    assert_eq!(code, Some(1));
    let bad = Command::new(env!("CARGO_BIN_EXE_diffront"))
        .args(["constants"])
        .env("DIFFRONT_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn thread_env_does_not_change_output() {
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for (dir, threads) in dirs.iter().zip(["1", "2"]) {
        let status = Command::new(env!("CARGO_BIN_EXE_diffront"))
            .args([
                "source",
                "--t",
                "50,200",
                "--replicas",
                "2",
                "--render",
                "--out",
                path_str(dir.path()),
            ])
            .env("DIFFRONT_THREADS", threads)
            .status()
            .unwrap();
        assert!(status.success());
    }
    for name in ["source-growth.csv", "source_t50.ppm", "source_t200.ppm"] {
        let a = std::fs::read(dirs[0].path().join(name)).unwrap();
        let b = std::fs::read(dirs[1].path().join(name)).unwrap();
        assert!(a == b, "{name} differs");
    }
}
