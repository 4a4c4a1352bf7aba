use std::path::Path;
use std::process::{Command, Output};

fn pairmix(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pairmix"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) {
    std::fs::write(dir.join(name), text).unwrap();
}

fn read(path: impl AsRef<Path>) -> String {
    std::fs::read_to_string(path.as_ref()).unwrap_or_else(|e| panic!("{}: {e}", path.as_ref().display()))
}

const SHORT: &str = "[chain]\niterations = 150\nburn_in = 50\n[grid]\npoints = 128\n";

#[test]
fn generate_writes_data_and_config_echo() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "c.toml", "seed = 5\n[data]\nsource = \"nested\"\nm = 2\n");
    let o = pairmix(dir.path(), &["generate", "--config", "c.toml", "--out", "g"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let data = read(dir.path().join("g/data.csv"));
    assert!(data.starts_with("group,value\n"));
    assert_eq!(data.lines().count(), 1 + 2 * 60);
    let echo = read(dir.path().join("g/config.toml"));
    assert!(echo.starts_with("# pairmix "));
    assert!(echo.contains("seed = 5"));
    assert!(read(dir.path().join("g/report.txt")).contains("[resolved config]"));
}

#[test]
fn config_errors_exit_nonzero_with_field_names() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("[chain]\niterations = 0\n", "chain.iterations"),
        ("[chain]\niterations = 10\nburn_in = 20\n", "chain.iterations"),
        ("[chain]\nsweeps = 10\n", "sweeps"),
        ("[prior]\nconc_shape = 0.9\n", "prior.conc_shape"),
        ("[data]\nsource = \"file\"\n", "data.path"),
        ("[bench]\nblocks = 3\n", "bench.blocks"),
    ];
    for (text, field) in cases {
        write(dir.path(), "bad.toml", text);
        let o = pairmix(dir.path(), &["fit", "--seed", "1", "--config", "bad.toml"]);
        assert!(!o.status.success(), "{text}");
        let err = String::from_utf8_lossy(&o.stderr);
        assert!(err.contains(field), "{text}: {err}");
    }
    let o = pairmix(dir.path(), &["fit"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("seed"));
}

#[test]
fn missing_dataset_file_fails() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "c.toml", "seed = 1\n[data]\nsource = \"file\"\npath = \"nope.csv\"\n");
    let o = pairmix(dir.path(), &["fit", "--config", "c.toml"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("nope.csv"));
}

#[test]
fn fit_reads_generated_file() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "g.toml", "seed = 2\n[data]\nsource = \"seven-mix\"\n");
    assert!(pairmix(dir.path(), &["generate", "--config", "g.toml", "--out", "g"]).status.success());
    write(
        dir.path(),
        "f.toml",
        &format!("seed = 2\n[data]\nsource = \"file\"\npath = \"g/data.csv\"\n{SHORT}"),
    );
    let o = pairmix(dir.path(), &["fit", "--config", "f.toml", "--sampler", "rpddp", "--out", "f"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let trace = read(dir.path().join("f/fit_trace_rpddp.csv"));
    assert_eq!(trace.lines().count(), 151);
    assert!(dir.path().join("f/fit_group2.svg").exists());
}

#[test]
fn compare_shows_selection_matrices_with_truth() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "c.toml", &format!("seed = 3\n[data]\nsource = \"gamma-mix\"\n{SHORT}"));
    let o = pairmix(dir.path(), &["compare", "--config", "c.toml", "--out", "c"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report = read(dir.path().join("c/report.txt"));
    let line = report.lines().find(|l| l.contains("E_pdgsbp(p | x)")).expect("matrix header");
    assert!(line.contains("E_rpddp(p | x)") && line.contains("p_true"));
    assert!(report.contains("0.400 0.600") && report.contains("0.700 0.300"));
    let h = read(dir.path().join("c/compare_hellinger.csv"));
    assert!(h.starts_with("group,h_pdgsbp,h_rpddp\n"));
    assert_eq!(h.lines().count(), 3);
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    v.sort();
    v
}

#[test]
fn deterministic_outputs_are_byte_identical_across_job_counts() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "c.toml", &format!("seed = 8\n[data]\nsource = \"nested\"\nm = 2\nn = 30\n{SHORT}"));
    for (out, jobs) in [("a", "1"), ("b", "1"), ("c", "2")] {
        let o = pairmix(
            dir.path(),
            &["compare", "--config", "c.toml", "--deterministic", "--kde", "--jobs", jobs, "--out", out],
        );
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let a = files(&dir.path().join("a"));
    let b = files(&dir.path().join("b"));
    let c = files(&dir.path().join("c"));
    assert!(a.iter().any(|(n, _)| n.ends_with(".svg")));
    assert!(a.iter().any(|(n, _)| n.starts_with("compare_kde_")));
    // The echoed config names the output directory and job count.
    for other in [&b, &c] {
        assert_eq!(a.len(), other.len());
        for ((na, da), (no, d_o)) in a.iter().zip(other) {
            assert_eq!(na, no);
            if na != "config.toml" && na != "report.txt" {
                assert!(da == d_o, "{na} differs");
            }
        }
    }
}

#[test]
fn reproduce_table2_emits_met_and_ratio_columns() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "c.toml", "[bench]\nblock_iterations = 3\nblocks = 10\n");
    let o = pairmix(dir.path(), &["reproduce", "table2", "--config", "c.toml", "--out", "t2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = read(dir.path().join("t2/table2_met.csv"));
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    for col in ["m", "met_pdgsbp", "met_rpddp", "met_ratio", "comparison_ratio"] {
        assert!(header.contains(&col), "{col}");
    }
    let ms: Vec<&str> = lines.map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(ms, ["2", "3", "4"]);
    assert!(dir.path().join("t2/table2_met.svg").exists());
    assert!(read(dir.path().join("t2/config.toml")).contains("seed = 1"));
}

#[test]
fn version_flag_reports_build() {
    let dir = tempfile::tempdir().unwrap();
    let o = pairmix(dir.path(), &["--version"]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("pairmix 0.1.0 ("));
}
