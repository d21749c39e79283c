use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn kpz(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kpz")).args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_owned()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit status")
}

fn data_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.file_name().unwrap() != "manifest.json")
        .map(|p| (p.file_name().unwrap().to_str().unwrap().to_owned(), fs::read(&p).unwrap()))
        .collect();
    v.sort();
    v
}

const TINY_GROWTH: &str = "model = \"bd\"\nsizes = [4]\nruns = 3\nseed = 7\nt_min = 0.25\nhorizon_factor = 1.0\nhorizon_exponent = 0.0\nfit = false\n";

#[test]
fn growth_run_is_deterministic_and_replays_bitwise() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "g.toml", TINY_GROWTH);
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    let c = tmp.path().join("c");
    for (dir, workers) in [(&a, "1"), (&b, "3")] {
        let o = kpz(&["growth", "--config", &cfg, "--out", dir.to_str().unwrap(), "--workers", workers]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    assert_eq!(data_files(&a), data_files(&b));

    let csv = String::from_utf8(fs::read(a.join("roughness_L4.csv")).unwrap()).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t,mean_height,roughness,roughness_stderr"));
    let rows: Vec<&str> = lines.collect();
    // samples every deposition time 1/L up to one monolayer
    assert_eq!(rows.len(), 4);
    assert!(rows[0].starts_with("0.25,0.25,"));
    assert!(rows[3].starts_with("1.0,1.0,"));

    let manifest = a.join("manifest.json");
    let o = kpz(&["replay", manifest.to_str().unwrap(), "--out", c.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(data_files(&a), data_files(&c));

    let o = kpz(&["verify", a.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    fs::write(a.join("roughness_L4.csv"), "tampered").unwrap();
    let o = kpz(&["verify", a.to_str().unwrap()]);
    assert_ne!(code(&o), 0);

    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(c.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["experiment"], "growth");
    assert_eq!(m["seeds"][0]["streams"], serde_json::json!([0, 1, 2]));
    assert_eq!(m["config"]["seed"], 7);
}

#[test]
fn seed_flag_changes_the_data() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "g.toml", TINY_GROWTH);
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    assert_eq!(code(&kpz(&["growth", "--config", &cfg, "--out", a.to_str().unwrap()])), 0);
    assert_eq!(code(&kpz(&["growth", "--config", &cfg, "--seed", "8", "--out", b.to_str().unwrap()])), 0);
    assert_ne!(data_files(&a), data_files(&b));
}

#[test]
fn config_errors_exit_with_status_two() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let out = out.to_str().unwrap();
    assert_eq!(code(&kpz(&["eden", "--out", out])), 2);

    let bad = write(tmp.path(), "bad.toml", "nu = 0.0\n");
    let o = kpz(&["heat-spectral", "--config", &bad, "--out", out]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("`nu`"));
    assert!(!Path::new(out).exists(), "validation runs before any output");

    let unknown = write(tmp.path(), "unknown.toml", "sizes = [4]\nsize = 4\n");
    assert_eq!(code(&kpz(&["growth", "--config", &unknown, "--out", out])), 2);
    let kappa = write(tmp.path(), "kappa.toml", "kappas = [0.5, 0.0]\n");
    assert_eq!(code(&kpz(&["renorm-compare", "--config", &kappa, "--out", out])), 2);
    let cells = write(tmp.path(), "cells.toml", "cells = [1, 16]\n");
    assert_eq!(code(&kpz(&["convergence-study", "--config", &cells, "--out", out])), 2);
    let runs = write(tmp.path(), "runs.toml", "runs = 0\n");
    assert_eq!(code(&kpz(&["growth", "--config", &runs, "--out", out])), 2);
    assert_eq!(code(&kpz(&["growth", "--replay-noise", "x.bin", "--out", out])), 2);
}

#[test]
fn non_convergence_exits_with_status_three() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "k.toml", "cells = 16\ntimes = [0.1]\n[benchmark]\nmax_iters = 1\n");
    let o = kpz(&["kpz-mhfe", "--config", &cfg, "--out", tmp.path().join("o").to_str().unwrap()]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn unwritable_output_exits_with_status_four() {
    let tmp = tempfile::tempdir().unwrap();
    let file = write(tmp.path(), "occupied", "");
    assert_eq!(code(&kpz(&["renorm-compare", "--out", &file])), 4);
}

#[test]
fn print_config_round_trips() {
    let tmp = tempfile::tempdir().unwrap();
    for cmd in ["heat-spectral", "kpz-mhfe", "growth", "renorm-compare", "renorm-ladder", "convergence-study"] {
        let o = kpz(&[cmd, "--print-config"]);
        assert_eq!(code(&o), 0);
        let text = String::from_utf8(o.stdout).unwrap();
        assert!(text.starts_with(&format!("# kpz {cmd}\n")));
        let path = write(tmp.path(), &format!("{cmd}.toml"), &text);
        let again = kpz(&[cmd, "--config", &path, "--print-config"]);
        assert_eq!(String::from_utf8(again.stdout).unwrap(), text);
    }
}

#[test]
fn benchmark_commands_write_tables_and_plot_data() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("conv");
    let cfg = write(tmp.path(), "c.toml", "cells = [8, 16, 32]\nt_final = 0.1\n");
    let o = kpz(&["convergence-study", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let table = fs::read_to_string(out.join("table.csv")).unwrap();
    assert_eq!(table.lines().count(), 4);
    let plot = fs::read_to_string(out.join("convergence.dat")).unwrap();
    assert!(plot.contains("# scale: logscale xy"));

    let out = tmp.path().join("mhfe");
    let cfg = write(tmp.path(), "k.toml", "cells = 16\ntimes = [0.1, 0.2]\n");
    assert_eq!(code(&kpz(&["kpz-mhfe", "--config", &cfg, "--out", out.to_str().unwrap()])), 0);
    assert_eq!(fs::read_to_string(out.join("profiles.csv")).unwrap().lines().count(), 1 + 2 * 16);

    let out = tmp.path().join("consts");
    assert_eq!(code(&kpz(&["renorm-compare", "--out", out.to_str().unwrap()])), 0);
    let consts = fs::read_to_string(out.join("constants.csv")).unwrap();
    assert!(consts.starts_with("mollifier,kappa,C1,C2_leading,C2,C3,C_total,C_ito,C_grid\nbump,1.0,"));
    assert!(fs::read_to_string(out.join("constants.dat")).unwrap().contains("# scale: logscale x"));
}

#[test]
fn noise_dump_drives_a_replayed_trajectory() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("heat");
    let cfg = write(
        tmp.path(),
        "h.toml",
        "modes = [2, 4]\nrealizations = 2\ndump_noise = true\ncrossover_enabled = false\nschemes = [\"milstein\"]\n",
    );
    let o = kpz(&["heat-spectral", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let refinement = fs::read_to_string(out.join("refinement.csv")).unwrap();
    assert!(refinement.starts_with("scheme,j_coarse,j_fine,error,std_error\nmilstein,2,4,"));

    let noise = out.join("noise_r0.bin");
    let r1 = tmp.path().join("r1");
    let r2 = tmp.path().join("r2");
    for dir in [&r1, &r2] {
        let o = kpz(&[
            "heat-spectral",
            "--config",
            &cfg,
            "--replay-noise",
            noise.to_str().unwrap(),
            "--out",
            dir.to_str().unwrap(),
        ]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    let a = data_files(&r1);
    assert_eq!(a, data_files(&r2));
    assert_eq!(a.len(), 1);
    assert_eq!(a[0].0, "replay_milstein.csv");
    // one row per step plus the initial state and the header
    let text = String::from_utf8(a[0].1.clone()).unwrap();
    assert!(text.lines().count() > 16);

    let o = kpz(&["replay", r1.join("manifest.json").to_str().unwrap(), "--out", tmp.path().join("r3").to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert_eq!(a, data_files(&tmp.path().join("r3")));
}
