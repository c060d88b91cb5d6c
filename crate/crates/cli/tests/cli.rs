use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const SMALL: &str = "# tiny swarm\nuavs = 10\narea_width = 200\narea_height = 200\nrounds = 2\nsamples_per_class = 30\n";
const HEADER: &str = "layout,round,scheme,k,Q,acc_mean,loss_mean,acc_min,acc_max,msg_intra,msg_inter,msg_total";

fn bcsfl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bcsfl")).args(args).output().unwrap()
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("run.cfg");
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn version_flag() {
    let o = bcsfl(&["--version"]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stdout).contains(env!("CARGO_PKG_VERSION")));
}

#[test]
fn simulate_writes_csv_to_stdout_and_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let o = bcsfl(&["simulate", "--config", &cfg]);
    assert!(o.status.success(), "{}", stderr(&o));
    let stdout = String::from_utf8(o.stdout).unwrap();
    let lines: Vec<&str> = stdout.lines().collect();
    assert_eq!(lines[0], HEADER);
    assert_eq!(lines.len(), 3);
    assert!(lines[2].starts_with("0,2,fca,,"));

    let out = dir.path().join("fca.csv");
    let o = bcsfl(&["simulate", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(fs::read_to_string(&out).unwrap(), stdout);
}

#[test]
fn flags_override_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &format!("{SMALL}scheme = conventional\n"));
    let o = bcsfl(&["simulate", "--config", &cfg, "--scheme", "kha", "--k", "2", "--rounds", "1", "--seed", "9"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert_eq!(stdout.lines().count(), 2);
    assert!(stdout.lines().nth(1).unwrap().starts_with("0,1,kha,2,"));
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "uavs = 10\ncolour = blue\n");
    let o = bcsfl(&["simulate", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));

    let cfg = write_config(dir.path(), SMALL);
    let o = bcsfl(&["simulate", "--config", &cfg, "--scheme", "kha"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("`k`"), "{}", stderr(&o));

    let o = bcsfl(&["simulate", "--config", dir.path().join("absent.cfg").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn missing_mnist_is_a_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &format!("{SMALL}dataset = mnist\ndata_dir = {}\n", dir.path().display()));
    let o = bcsfl(&["simulate", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn repeated_simulations_match_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &format!("{SMALL}partition = noniid\nlayouts = 2\n"));
    let a = bcsfl(&["simulate", "--config", &cfg]);
    let b = bcsfl(&["simulate", "--config", &cfg]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn summarize_text_and_tsv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let mut files = Vec::new();
    for (name, scheme) in [("kha.csv", &["--scheme", "kha", "--k", "1"][..]), ("fca.csv", &["--scheme", "fca"][..])] {
        let out = dir.path().join(name);
        let mut args = vec!["simulate", "--config", &cfg, "--out", out.to_str().unwrap()];
        args.extend_from_slice(scheme);
        assert!(bcsfl(&args).status.success());
        files.push(out.to_str().unwrap().to_owned());
    }
    let o = bcsfl(&["summarize", &files[0], &files[1], "--threshold", "1.5"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert!(rows[0].starts_with("scheme"));
    assert!(rows[1].starts_with("fca "));
    assert!(rows[2].starts_with("kha(k=1)"));
    assert!(rows[1].contains('—'));

    let o = bcsfl(&["summarize", &files[0], "--tsv", "--threshold", "1.5"]);
    let tsv = String::from_utf8(o.stdout).unwrap();
    let fields: Vec<&str> = tsv.lines().nth(1).unwrap().split('\t').collect();
    assert_eq!(fields[0], "kha");
    assert_eq!(fields[1], "1");
    assert_eq!(fields[4], "");
}

#[test]
fn malformed_csv_reports_file_and_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    fs::write(&path, format!("{HEADER}\n0,1,fca,,3,0.5,1.0,0.4,0.6,10,4,14\n0,2,fca,,3,oops,1.0,0.4,0.6,10,4,14\n")).unwrap();
    let o = bcsfl(&["summarize", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("bad.csv:3"), "{}", stderr(&o));
}
