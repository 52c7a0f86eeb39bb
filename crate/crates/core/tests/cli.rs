use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const SMALL: &str = r#"
seed = 7
[game]
players = 3
a = 0.2
[channel]
kind = "two_state"
eta_min = 1.0
eta_max = 4.0
p_high = 0.5
[strategies]
kinds = [{ kind = "bus" }, { kind = "bus" }, { kind = "bus" }]
[engine]
horizon = 500
replicates = 3
[sweep]
players = [2, 3]
"#;

fn powergame(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_powergame"))
        .args(args)
        .current_dir(cwd)
        .env_remove("POWERGAME_OUT_DIR")
        .output()
        .unwrap()
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("run.toml");
    fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn simulate_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let a = powergame(&["simulate", "--config", &cfg, "--out", "a"], dir.path());
    let b = powergame(&["simulate", "--config", &cfg, "--out", "b"], dir.path());
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    assert!(b.status.success());
    for file in ["summary.csv", "manifest.toml"] {
        assert_eq!(fs::read(dir.path().join("a").join(file)).unwrap(), fs::read(dir.path().join("b").join(file)).unwrap());
    }
    // printed checksums name the artifacts
    let stdout = String::from_utf8(a.stdout).unwrap();
    assert!(stdout.lines().any(|l| l.ends_with("summary.csv") && l.split_whitespace().next().unwrap().len() == 64));
}

#[test]
fn out_dir_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = Command::new(env!("CARGO_BIN_EXE_powergame"))
        .args(["partition", "--config", &cfg])
        .current_dir(dir.path())
        .env("POWERGAME_OUT_DIR", "from_env")
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let table = fs::read_to_string(dir.path().join("from_env/partition.csv")).unwrap();
    assert!(table.starts_with("k,H1_freq,H2_freq"));
}

#[test]
fn analysis_verbs_write_their_tables() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    for (verb, file) in [("dominance", "dominance.csv"), ("lambdamax", "lambda_max.csv")] {
        let out = powergame(&[verb, "--config", &cfg, "--out", verb], dir.path());
        assert!(out.status.success(), "{verb}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(dir.path().join(verb).join(file).exists(), "{verb} wrote no {file}");
    }
    let two = SMALL.replace("players = 3\n", "players = 2\n").replace("kinds = [{ kind = \"bus\" }, ", "kinds = [");
    let cfg2 = write_config(dir.path(), &two);
    let out = powergame(&["region", "--config", &cfg2, "--out", "region"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let markers = fs::read_to_string(dir.path().join("region/markers.csv")).unwrap();
    assert!(markers.contains("BUS"));
}

#[test]
fn malformed_config_exits_2_without_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &SMALL.replace("horizon = 500", "horizon = \"long\""));
    let out = powergame(&["simulate", "--config", &cfg, "--out", "o"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(!dir.path().join("o").exists());

    let cfg = write_config(dir.path(), &SMALL.replace("[engine]", "[engine]\nturbo = true"));
    let out = powergame(&["simulate", "--config", &cfg, "--out", "o"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(!dir.path().join("o").exists());
}

#[test]
fn saturated_game_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let text = SMALL
        .replace("players = 3\n", "players = 12\n")
        .replace("kinds = [{ kind = \"bus\" }, { kind = \"bus\" }, { kind = \"bus\" }]", "kinds = [{ kind = \"one_shot_nash\" }]");
    let cfg = write_config(dir.path(), &text);
    let out = powergame(&["simulate", "--config", &cfg, "--out", "o"], dir.path());
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(!dir.path().join("o").exists());
}

#[test]
fn unknown_preset_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = powergame(&["preset", "--name", "fig9"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("fig3"));
}

#[test]
fn region_preset_reruns_from_its_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = powergame(&["preset", "--name", "fig3", "--out", "p"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let manifest = dir.path().join("p/manifest.toml");
    let again = powergame(&["simulate", "--config", manifest.to_str().unwrap(), "--out", "q"], dir.path());
    assert!(again.status.success(), "{}", String::from_utf8_lossy(&again.stderr));
    for file in ["region.csv", "markers.csv", "manifest.toml"] {
        assert_eq!(fs::read(dir.path().join("p").join(file)).unwrap(), fs::read(dir.path().join("q").join(file)).unwrap(), "{file}");
    }
}
