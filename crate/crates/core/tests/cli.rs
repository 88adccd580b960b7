use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_tsscreen"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn tsscreen")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["--version"]).status.code(), Some(0));
}

#[test]
fn bad_arguments_exit_one() {
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(run(&["screen", "--reps", "many"]).status.code(), Some(1));
    let o = run(&["screen", "--preset", "table9"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("unknown preset"));
    let o = run(&["screen", "--preset", "table1", "--cell", "alpha=.75"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("no cell matches"));
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "run.toml", "seed = 3\n[screen]\nthreshhold = 0.5\n");
    let o = run(&["screen", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("threshhold"), "{}", stderr(&o));
}

#[test]
fn explain_prints_resolved_config() {
    let o = run(&["twostage", "--preset", "table4", "--cell", "gaussian,alpha=.4,p=1000", "--seed", "9", "--explain"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("seed = 9"));
    assert!(text.contains("grid_size = 100"));
    assert_eq!(text.matches("[[cells]]").count(), 1);
    // The printed config is itself a valid config for the same run.
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "explained.toml", &text);
    let again = run(&["twostage", "--config", cfg.to_str().unwrap(), "--explain"]);
    assert_eq!(stdout(&again), text);
}

#[test]
fn simulate_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "sim.toml", "[[cells]]\ncase = \"c1\"\ndist = \"t5\"\np = 12\ngamma = 0.5\nalpha = 0.8\n");
    let mut outs = Vec::new();
    for (k, jobs) in ["1", "2"].iter().enumerate() {
        let out = dir.path().join(format!("sim{k}.csv"));
        let o = run(&["simulate", "--config", cfg.to_str().unwrap(), "--seed", "5", "--jobs", jobs, "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        outs.push(std::fs::read(&out).unwrap());
    }
    assert_eq!(outs[0], outs[1]);
    let text = String::from_utf8(outs[0].clone()).unwrap();
    let header = text.lines().next().unwrap();
    assert_eq!(header, "t,y,x0,x1,x2,x3,x4,x5,x6,x7,x8,x9,x10,x11");
    assert_eq!(text.lines().count(), 201);

    let o = run(&["simulate", "--config", cfg.to_str().unwrap(), "--seed", "6"]);
    assert_ne!(o.stdout, outs[0]);
}

#[test]
fn dataset_screen_warns_on_constant_column() {
    let dir = tempfile::tempdir().unwrap();
    let mut csv = String::from("date,y,a,flat,b\n");
    for t in 0..40 {
        let a = (t as f64 * 0.7).sin();
        let b = (t as f64 * 1.3).cos();
        csv.push_str(&format!("2000-{t:02},{},{a},1.0,{b}\n", 2.0 * a + 0.1 * b));
    }
    let data = write(dir.path(), "d.csv", &csv);
    let cfg = format!(
        "[dataset]\npath = {:?}\ntime_column = 0\nresponse = \"y\"\n[screen]\nd_n = 2\nmethods = [{{ kind = \"sis\" }}]\n",
        data.to_str().unwrap()
    );
    let cfg = write(dir.path(), "s.toml", &cfg);
    let out = dir.path().join("scores.csv");
    let o = run(&["screen", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stderr(&o).contains("zero variance"), "{}", stderr(&o));
    let text = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "method,column,name,score,rank,selected");
    assert!(lines[1].starts_with("sis,0,a,") && lines[1].ends_with(",1,true"), "{text}");
    assert!(lines[2].starts_with("sis,1,flat,0.") && lines[2].ends_with(",false"), "{text}");
    assert!(Path::new(&format!("{}.config.toml", out.display())).exists());
}

#[test]
fn malformed_csv_exits_one_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let data = write(dir.path(), "bad.csv", "y,x\n1,2\n3,oops\n");
    let cfg = write(dir.path(), "c.toml", &format!("[dataset]\npath = {:?}\nresponse = \"y\"\n", data.to_str().unwrap()));
    let o = run(&["screen", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("row 2, column 2"), "{}", stderr(&o));
}

#[test]
fn small_screen_experiment_json() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "e.toml",
        "reps = 4\nformat = \"json\"\n[[cells]]\ncase = \"c1\"\ndist = \"gaussian\"\np = 30\ngamma = 0.4\nalpha = 0.6\n[screen]\nd_n = 10\n",
    );
    let o = run(&["screen", "--config", cfg.to_str().unwrap(), "--jobs", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["reports"].as_array().unwrap().len(), 2);
    assert_eq!(v["config"]["reps"], 4);
    assert_eq!(v["reports"][0]["replications"], 4);
}
