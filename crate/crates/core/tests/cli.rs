use std::path::Path;
use std::process::{Command, Output};

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_streamcover"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn field<'a>(out: &'a str, key: &str) -> &'a str {
    out.lines()
        .find_map(|l| l.strip_prefix(&format!("{key}=")))
        .unwrap_or_else(|| panic!("no {key} in {out}"))
}

fn gen_sc(dir: &Path) {
    let o = run(
        dir,
        &[
            "gen-sc", "--n", "256", "--m", "16", "--t", "4", "--alpha", "2", "--theta", "0",
            "--seed", "7", "--out", "x.sc",
        ],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn gen_sc_writes_instance_and_meta() {
    let dir = tempfile::tempdir().unwrap();
    gen_sc(dir.path());
    let system = streamcover::io::read_instance(dir.path().join("x.sc")).unwrap();
    assert_eq!((system.universe_size(), system.num_sets()), (256, 32));
    let meta = streamcover::io::read_meta(dir.path().join("x.sc")).unwrap();
    assert_eq!(meta["theta"], 0);
    assert_eq!(meta["seed"], 7);
    assert_eq!(meta["params"]["t"], 4);
    assert!(meta.get("witness").is_none());
}

#[test]
fn full_meta_and_partition() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        dir.path(),
        &[
            "gen-sc",
            "--n",
            "64",
            "--m",
            "4",
            "--t",
            "4",
            "--alpha",
            "1",
            "--theta",
            "1",
            "--full-meta",
            "--partition",
            "--seed",
            "1",
            "--out",
            "y.sc",
        ],
    );
    assert!(o.status.success());
    let meta = streamcover::io::read_meta(dir.path().join("y.sc")).unwrap();
    assert_eq!(meta["theta"], 1);
    assert_eq!(meta["labels"].as_array().unwrap().len(), 8);
    assert_eq!(meta["witness"]["disj"].as_array().unwrap().len(), 4);
    let i: usize = field(&stdout(&o), "i_star").parse().unwrap();
    assert_eq!(meta["i_star"], i);
}

#[test]
fn solve_stream_reports_contract_fields() {
    let dir = tempfile::tempdir().unwrap();
    gen_sc(dir.path());
    let o = run(
        dir.path(),
        &[
            "solve-stream",
            "--input",
            "x.sc",
            "--alpha",
            "2",
            "--eps",
            "0.5",
            "--seed",
            "9",
        ],
    );
    assert!(o.status.success());
    let out = stdout(&o);
    assert_eq!(field(&out, "passes"), "5");
    assert_eq!(field(&out, "feasible"), "true");
    assert!(field(&out, "peak_entries").parse::<usize>().unwrap() > 0);
    let size: usize = field(&out, "sol_size").parse().unwrap();
    assert_eq!(field(&out, "chosen").split(',').count(), size);

    let o = run(
        dir.path(),
        &[
            "solve-stream",
            "--input",
            "x.sc",
            "--alpha",
            "1",
            "--eps",
            "0.5",
            "--seed",
            "9",
            "--guess",
            "3",
            "--order",
            "random",
            "--json",
        ],
    );
    let doc: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(doc["result"]["passes_used"], 3);
    assert_eq!(
        doc["result"]["per_guess_outcomes"]
            .as_array()
            .unwrap()
            .len(),
        1
    );
}

#[test]
fn exact_and_greedy_agree_on_feasibility() {
    let dir = tempfile::tempdir().unwrap();
    gen_sc(dir.path());
    let exact = stdout(&run(dir.path(), &["solve-exact", "--input", "x.sc"]));
    let greedy = stdout(&run(dir.path(), &["solve-greedy", "--input", "x.sc"]));
    let opt: usize = field(&exact, "opt_size").parse().unwrap();
    let g: usize = field(&greedy, "sol_size").parse().unwrap();
    assert!(opt <= g);
    let capped = stdout(&run(
        dir.path(),
        &["solve-exact", "--input", "x.sc", "--cap", "1"],
    ));
    assert_eq!(field(&capped, "exceeds_cap"), "1");
}

#[test]
fn indivisible_t_is_a_parameter_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        dir.path(),
        &[
            "gen-sc", "--n", "255", "--m", "16", "--t", "4", "--alpha", "2", "--seed", "1",
            "--out", "z.sc",
        ],
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("t must divide n"));
    assert!(!dir.path().join("z.sc").exists());
}

#[test]
fn missing_input_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["solve-greedy", "--input", "nope.sc"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(String::from_utf8_lossy(&o.stderr).lines().count(), 1);
}

#[test]
fn unknown_flag_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        dir.path(),
        &["solve-greedy", "--input", "x.sc", "--frobnicate"],
    );
    assert_eq!(o.status.code(), Some(1));
    let o = run(
        dir.path(),
        &[
            "gen-disj", "--t", "8", "--side", "maybe", "--seed", "1", "--out", "d.sc",
        ],
    );
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn malformed_instance_is_a_contract_error() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.sc"), "SC v1\n3 1\n2 2 1\n").unwrap();
    let o = run(dir.path(), &["solve-exact", "--input", "bad.sc"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn generated_seed_is_printed_and_reproduces() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        dir.path(),
        &[
            "gen-disj", "--t", "40", "--side", "natural", "--out", "a.sc",
        ],
    );
    assert!(o.status.success());
    let seed = field(&stdout(&o), "seed").to_string();
    let first = std::fs::read(dir.path().join("a.sc")).unwrap();
    let o = run(
        dir.path(),
        &[
            "gen-disj", "--t", "40", "--side", "natural", "--seed", &seed, "--out", "b.sc",
        ],
    );
    assert!(o.status.success());
    assert_eq!(first, std::fs::read(dir.path().join("b.sc")).unwrap());
}

#[test]
fn gen_mc_reports_tau() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        dir.path(),
        &[
            "gen-mc", "--m", "8", "--t1", "64", "--theta", "1", "--seed", "3", "--out", "mc.sc",
        ],
    );
    assert!(o.status.success());
    assert_eq!(field(&stdout(&o), "tau"), "688");
    let meta = streamcover::io::read_meta(dir.path().join("mc.sc")).unwrap();
    assert_eq!(meta["tau"], 688);
    assert_eq!(meta["params"]["n"], 704);
}

#[test]
fn verify_emits_key_value_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        dir.path(),
        &[
            "verify", "--lemma", "coverage", "--n", "512", "--trials", "10", "--seed", "2",
        ],
    );
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(
        out.starts_with("lemma=coverage trials=10 successes=10"),
        "{out}"
    );
    let o = run(
        dir.path(),
        &[
            "verify", "--lemma", "sc-opt", "--n", "64", "--m", "4", "--t", "4", "--alpha", "1",
            "--trials", "3", "--seed", "2", "--json",
        ],
    );
    let doc: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(doc[0]["lemma_id"], "sc-opt");
    assert_eq!(doc[0]["trials"], 3);
}

#[test]
fn bench_writes_sorted_csv() {
    let dir = tempfile::tempdir().unwrap();
    gen_sc(dir.path());
    std::fs::write(
        dir.path().join("suite.txt"),
        "# sizes out of order on purpose\n\
         planted --n 512 --m 20 --k 3 --exact\n\
         file --input x.sc --alpha 1 --id stored\n\
         planted --n 128 --m 10 --k 2 --alpha 3 --exact\n\
         planted --n 128 --m 10 --k 2 --alpha 1\n",
    )
    .unwrap();
    let o = run(
        dir.path(),
        &[
            "bench",
            "--suite",
            "suite.txt",
            "--seed",
            "1",
            "--out",
            "b.csv",
        ],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let mut rdr = csv::Reader::from_path(dir.path().join("b.csv")).unwrap();
    let header: Vec<String> = rdr.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(header, streamcover::cli::BENCH_HEADER);
    let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 4);
    let keys: Vec<(usize, usize, usize)> = rows
        .iter()
        .map(|r| {
            (
                r[1].parse().unwrap(),
                r[2].parse().unwrap(),
                r[3].parse().unwrap(),
            )
        })
        .collect();
    assert_eq!(
        keys,
        vec![(128, 10, 1), (128, 10, 3), (256, 32, 1), (512, 20, 2)]
    );
    for r in &rows {
        let alpha: usize = r[3].parse().unwrap();
        assert_eq!(r[5].parse::<usize>().unwrap(), 2 * alpha + 1);
        if !r[8].is_empty() {
            let ratio: f64 = r[9].parse().unwrap();
            let want = r[7].parse::<f64>().unwrap() / r[8].parse::<f64>().unwrap();
            assert!((ratio - want).abs() < 1e-4);
        }
    }
    assert_eq!(&rows[2][0], "stored");
}

#[test]
fn bad_suite_line_fails_with_line_number() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("s.txt"),
        "planted --n 64 --m 8 --k 2\nplanted --n 64\n",
    )
    .unwrap();
    let o = run(
        dir.path(),
        &["bench", "--suite", "s.txt", "--seed", "1", "--out", "b.csv"],
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("suite line 2"));
}
