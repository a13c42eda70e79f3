use std::process::{Command, Output};

use spherecone::lds::SobolStream;
use spherecone::spheremap::Lift;
use spherecone::wce::{wce_nakagami, KernelParams};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spherecone"))
        .args(args)
        .env("RUST_LOG", "warn")
        .env_remove("SPHERECONE_DIRFILE")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn lambda_example() {
    let out = stdout(&run(&["lambda", "--mu", "1", "--c", "2", "--K", "2"]));
    let row: Vec<&str> = out.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[0], "2");
    assert!((row[1].parse::<f64>().unwrap() - 0.625).abs() < 1e-14);
}

#[test]
fn points_shape() {
    let out = stdout(&run(&["points", "--dim", "3", "--n", "8", "--gen", "sphere", "--seed", "1"]));
    let rows: Vec<&str> = out.lines().collect();
    assert_eq!(rows.len(), 8);
    assert!(rows.iter().all(|r| r.split(',').count() == 3));
}

#[test]
fn unscrambled_cube_points() {
    let out = stdout(&run(&["points", "--dim", "2", "--n", "3", "--gen", "cube"]));
    let v: Vec<Vec<f64>> = out.lines().map(|l| l.split(',').map(|f| f.parse().unwrap()).collect()).collect();
    assert_eq!(v, vec![vec![0.5, 0.5], vec![0.75, 0.25], vec![0.25, 0.75]]);
}

#[test]
fn points_round_trip_through_wce() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("pts.csv");
    let path = path.to_str().unwrap();
    stdout(&run(&["points", "--dim", "3", "--n", "64", "--gen", "sphere", "--seed", "4", "--output", path]));
    let json = stdout(&run(&["wce", "--input", path, "--mu", "1.5", "--A", "1.5", "--B", "3"]));
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    for key in ["wce", "double_sum_term", "single_sum_term", "W_K", "n_points"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }

    let mut s = SobolStream::scrambled(3, 4, 0).unwrap();
    let lift = Lift::new(3).unwrap();
    let x: Vec<_> = (0..64).map(|_| lift.lift(&s.next_point().unwrap()).unwrap()).collect();
    let direct = wce_nakagami(&KernelParams::new(1.5, 1.5, 3.0, 2).unwrap(), &x).unwrap();
    assert!((v["wce"].as_f64().unwrap() - direct.wce).abs() < 1e-12);
    assert_eq!(v["n_points"].as_u64().unwrap(), 64);
}

#[test]
fn dirfile_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("dirs.txt");
    std::fs::write(&path, "d s a m_i\n2 1 0 1\n").unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_spherecone"))
        .args(["points", "--dim", "2", "--n", "2", "--gen", "cube"])
        .env("RUST_LOG", "warn")
        .env("SPHERECONE_DIRFILE", &path)
        .output()
        .unwrap();
    assert_eq!(stdout(&o).lines().count(), 2);
    // the file only covers two dimensions
    let o = Command::new(env!("CARGO_BIN_EXE_spherecone"))
        .args(["points", "--dim", "3", "--n", "2", "--gen", "cube"])
        .env("RUST_LOG", "warn")
        .env("SPHERECONE_DIRFILE", &path)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["lambda", "--mu", "1", "--c", "0.5", "--K", "2"]).status.code(), Some(2));
    assert_eq!(run(&["points", "--dim", "0", "--n", "2"]).status.code(), Some(2));
    assert_eq!(run(&["price", "--N", "1000", "--reps", "8"]).status.code(), Some(2));
    assert_eq!(run(&["no-such-command"]).status.code(), Some(2));
    assert_eq!(run(&["sphere-map", "--dim", "1", "--n", "0"]).status.code(), Some(2));
}

#[test]
fn deterministic_price() {
    let args = ["price", "--N", "2048", "--reps", "8", "--gen", "mc", "--seed", "3", "--format", "json"];
    let a = stdout(&run(&args));
    let b = stdout(&run(&args));
    assert_eq!(a, b);
    let v: serde_json::Value = serde_json::from_str(&a).unwrap();
    assert!((v["mean"].as_f64().unwrap() - 5.9).abs() < 0.5);
}

#[test]
fn sphere_map_rows_are_unit() {
    let out = stdout(&run(&["sphere-map", "--dim", "3", "--n", "16", "--seed", "2"]));
    for line in out.lines() {
        let v: Vec<f64> = line.split(',').map(|f| f.parse().unwrap()).collect();
        assert_eq!(v.len(), 4);
        assert!((v.iter().map(|x| x * x).sum::<f64>() - 1.0).abs() < 1e-14);
    }
}

#[test]
fn rms_wce_scales() {
    let out = stdout(&run(&["rms-wce", "--N", "1,4"]));
    let vals: Vec<f64> = out.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert!((vals[0] / vals[1] - 4.0).abs() < 1e-12);
}
