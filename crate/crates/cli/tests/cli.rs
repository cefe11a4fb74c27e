//! End-to-end tests of the `ensembles` binary: every subcommand is
//! exercised through its real process boundary, checking output bytes,
//! JSON reports, and exit codes (0 pass, 1 failed check, 2 error).

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

// ==================================================================
// Helpers
// ==================================================================

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ensembles"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary ran")
}

fn write_file(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).expect("fixture written");
    path
}

fn geom_spec(dir: &Path) -> PathBuf {
    write_file(dir, "geom.json", r#"{"family":"geometric","p":"1/2"}"#)
}

/// Data lines of a stream file: comments and blanks dropped.
fn symbol_lines(text: &str) -> Vec<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect()
}

fn stdout_json(out: &Output) -> serde_json::Value {
    assert!(
        !out.stdout.is_empty(),
        "expected JSON on stdout, stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

// ==================================================================
// gen
// ==================================================================

#[test]
fn gen_is_deterministic_per_seed() {
    let dir = TempDir::new().unwrap();
    let spec = geom_spec(dir.path());
    let a = dir.path().join("a.txt");
    let b = dir.path().join("b.txt");

    let spec_s = spec.to_str().unwrap();
    let out = run(&[
        "gen",
        spec_s,
        "--seed",
        "7",
        "--n",
        "200",
        "--out",
        a.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let out = run(&[
        "gen",
        spec_s,
        "--seed",
        "7",
        "--n",
        "200",
        "--out",
        b.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);

    let bytes_a = std::fs::read(&a).unwrap();
    let bytes_b = std::fs::read(&b).unwrap();
    assert_eq!(
        bytes_a, bytes_b,
        "same (spec, seed, n) must rewrite the same bytes"
    );

    let text = String::from_utf8(bytes_a).unwrap();
    let lines = symbol_lines(&text);
    assert_eq!(lines.len(), 200);
    assert!(lines.iter().all(|l| l.parse::<u64>().is_ok()));

    // A different seed moves the stream.
    let c = dir.path().join("c.txt");
    run(&[
        "gen",
        spec_s,
        "--seed",
        "8",
        "--n",
        "200",
        "--out",
        c.to_str().unwrap(),
    ]);
    assert_ne!(std::fs::read(&c).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn gen_requires_an_explicit_seed() {
    let dir = TempDir::new().unwrap();
    let spec = geom_spec(dir.path());
    let out = run(&["gen", spec.to_str().unwrap(), "--n", "10"]);
    assert_eq!(code(&out), 2, "omitting --seed is an error, not a default");
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(
        err.contains("--seed"),
        "stderr names the missing flag: {err}"
    );
}

#[test]
fn gen_point_mass_emits_only_its_symbol() {
    let dir = TempDir::new().unwrap();
    let spec = write_file(
        dir.path(),
        "point.json",
        r#"{"family":"table","masses":[["3","1"]],"tail":"0"}"#,
    );
    let out = run(&["gen", spec.to_str().unwrap(), "--seed", "1", "--n", "50"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    let lines = symbol_lines(&text);
    assert_eq!(lines.len(), 50);
    assert!(lines.iter().all(|l| l == "3"));
}

// ==================================================================
// transform
// ==================================================================

#[test]
fn transform_with_no_ops_reproduces_gen_plus_provenance() {
    let dir = TempDir::new().unwrap();
    let spec = geom_spec(dir.path());
    let pipeline = write_file(
        dir.path(),
        "pipe.json",
        r#"{"distribution":{"family":"geometric","p":"1/2"},"seed":7,"n":200}"#,
    );

    let gen_out = run(&["gen", spec.to_str().unwrap(), "--seed", "7", "--n", "200"]);
    let tf_out = run(&["transform", pipeline.to_str().unwrap()]);
    assert_eq!(code(&tf_out), 0);

    let tf_text = String::from_utf8(tf_out.stdout).unwrap();
    assert!(
        tf_text.starts_with("# provenance: "),
        "transform output opens with a provenance header"
    );
    let gen_text = String::from_utf8(gen_out.stdout).unwrap();
    assert_eq!(symbol_lines(&tf_text), symbol_lines(&gen_text));
}

#[test]
fn transform_replays_a_stream_file_identically() {
    let dir = TempDir::new().unwrap();
    let spec = geom_spec(dir.path());
    let src = dir.path().join("src.txt");
    run(&[
        "gen",
        spec.to_str().unwrap(),
        "--seed",
        "7",
        "--n",
        "300",
        "--out",
        src.to_str().unwrap(),
    ]);

    let pipeline = write_file(
        dir.path(),
        "pipe.json",
        r#"{"distribution":{"family":"geometric","p":"1/2"},"seed":7,"n":150,
            "ops":[{"op":"map","var":"mod:3"}]}"#,
    );
    let sampled = run(&["transform", pipeline.to_str().unwrap()]);
    let replayed = run(&[
        "transform",
        pipeline.to_str().unwrap(),
        "--in",
        src.to_str().unwrap(),
    ]);
    assert_eq!(code(&sampled), 0);
    assert_eq!(code(&replayed), 0);

    // The file holds the same sampled prefix, so pushing it through the
    // ops must give the same symbols; only the provenance line differs.
    let a = String::from_utf8(sampled.stdout).unwrap();
    let b = String::from_utf8(replayed.stdout).unwrap();
    assert_eq!(symbol_lines(&a), symbol_lines(&b));
    assert!(a.starts_with("# provenance: "));
    assert!(b.starts_with("# provenance: "));
    assert_ne!(
        a.lines().next(),
        b.lines().next(),
        "replayed source is named in the provenance"
    );
}

#[test]
fn transform_ops_shape_the_stream() {
    let dir = TempDir::new().unwrap();
    // Conditioning on even symbols then reducing mod 2 pins every line.
    let pipeline = write_file(
        dir.path(),
        "pipe.json",
        r#"{"distribution":{"family":"geometric","p":"1/2"},"seed":3,"n":80,
            "ops":[{"op":"condition","event":"even"},{"op":"map","var":"mod:2"}]}"#,
    );
    let out = run(&["transform", pipeline.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    let lines = symbol_lines(&text);
    assert_eq!(lines.len(), 80);
    assert!(
        lines.iter().all(|l| l == "0"),
        "even symbols mod 2 are all zero"
    );
}

#[test]
fn transform_honours_out_precedence() {
    let dir = TempDir::new().unwrap();
    let cfg_target = dir.path().join("from-config.txt");
    let flag_target = dir.path().join("from-flag.txt");
    let pipeline = write_file(
        dir.path(),
        "pipe.json",
        &format!(
            r#"{{"distribution":{{"family":"geometric","p":"1/2"}},"seed":9,"n":40,
                "out":{:?}}}"#,
            cfg_target.to_str().unwrap()
        ),
    );

    let out = run(&["transform", pipeline.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    assert!(out.stdout.is_empty(), "config out routes away from stdout");
    assert!(cfg_target.exists());

    let out = run(&[
        "transform",
        pipeline.to_str().unwrap(),
        "--out",
        flag_target.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    assert!(flag_target.exists(), "--out overrides the config's out");
    assert_eq!(
        std::fs::read(&cfg_target).unwrap(),
        std::fs::read(&flag_target).unwrap()
    );
}

#[test]
fn transform_rejects_unknown_ops() {
    let dir = TempDir::new().unwrap();
    let pipeline = write_file(
        dir.path(),
        "pipe.json",
        r#"{"distribution":{"family":"geometric","p":"1/2"},"seed":1,"n":10,
            "ops":[{"op":"frobnicate"}]}"#,
    );
    let out = run(&["transform", pipeline.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("frobnicate"), "stderr names the bad op: {err}");
}

// ==================================================================
// measure
// ==================================================================

#[test]
fn measure_reports_exact_string_masses() {
    let dir = TempDir::new().unwrap();
    let spec = geom_spec(dir.path());
    let strings = write_file(dir.path(), "strings.txt", "# fixture\n0 1 0\n");
    let out = run(&[
        "measure",
        spec.to_str().unwrap(),
        "--strings",
        strings.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let v = stdout_json(&out);
    assert_eq!(v["strings"][0]["string"], "0 1 0");
    assert_eq!(v["strings"][0]["mass"], "1/16");
    assert_eq!(v["open_set_mass"], "1/16");
}

#[test]
fn measure_reports_exact_set_mass() {
    let dir = TempDir::new().unwrap();
    let spec = geom_spec(dir.path());
    let set = write_file(dir.path(), "set.txt", "0\n1\n");
    let out = run(&[
        "measure",
        spec.to_str().unwrap(),
        "--prefix-free-set",
        set.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let v = stdout_json(&out);
    assert_eq!(v["set_mass"], "3/4");
    assert_eq!(v["members"].as_array().unwrap().len(), 2);
}

#[test]
fn measure_rejects_prefix_pairs_in_set_mode() {
    let dir = TempDir::new().unwrap();
    let spec = geom_spec(dir.path());
    let set = write_file(dir.path(), "bad-set.txt", "0\n0 1\n");
    let out = run(&[
        "measure",
        spec.to_str().unwrap(),
        "--prefix-free-set",
        set.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 2);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("not prefix-free"), "stderr explains: {err}");
}

#[test]
fn measure_needs_exactly_one_mode() {
    let dir = TempDir::new().unwrap();
    let spec = geom_spec(dir.path());
    let f = write_file(dir.path(), "s.txt", "0\n");
    let spec_s = spec.to_str().unwrap();
    let f_s = f.to_str().unwrap();

    let neither = run(&["measure", spec_s]);
    assert_eq!(code(&neither), 2);
    let both = run(&[
        "measure",
        spec_s,
        "--strings",
        f_s,
        "--prefix-free-set",
        f_s,
    ]);
    assert_eq!(code(&both), 2);
}

// ==================================================================
// verify-test
// ==================================================================

#[test]
fn verify_test_fails_a_fat_level() {
    let dir = TempDir::new().unwrap();
    let spec = geom_spec(dir.path());
    // Level 1 holds the single string "0": mass 1/2, bound 2^-1, and the
    // bound is strict, so the level is too fat.
    let test = write_file(dir.path(), "fat.json", r#"{"levels":[["0"]]}"#);
    let out = run(&[
        "verify-test",
        "--dist",
        spec.to_str().unwrap(),
        "--test",
        test.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 1);
    let v = stdout_json(&out);
    assert_eq!(v["all_hold"], false);
    assert_eq!(v["levels"][0]["mass"], "1/2");
    assert_eq!(v["levels"][0]["bound"], "1/2");
    assert_eq!(v["levels"][0]["holds"], false);
}

#[test]
fn verify_test_passes_a_generated_family() {
    let dir = TempDir::new().unwrap();
    let spec = geom_spec(dir.path());
    // Level n: strings of length n+1 over the first two symbols that
    // avoid 0, i.e. just 1^(n+1), of mass 4^-(n+1) < 2^-n.
    let test = write_file(
        dir.path(),
        "avoid.json",
        r#"{"generator":{"kind":"avoid_symbol","symbol":0,"width":2,"levels":3}}"#,
    );
    let out = run(&[
        "verify-test",
        "--dist",
        spec.to_str().unwrap(),
        "--test",
        test.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let v = stdout_json(&out);
    assert_eq!(v["all_hold"], true);
    assert_eq!(v["certified"], true);
    assert_eq!(v["levels"].as_array().unwrap().len(), 3);
    assert_eq!(v["levels"][0]["mass"], "1/16");
}

// ==================================================================
// lln
// ==================================================================

#[test]
fn lln_judges_streams_against_targets() {
    let dir = TempDir::new().unwrap();
    let spec = geom_spec(dir.path());
    let spec_s = spec.to_str().unwrap();
    let stream = dir.path().join("stream.txt");
    run(&[
        "gen",
        spec_s,
        "--seed",
        "11",
        "--n",
        "30000",
        "--out",
        stream.to_str().unwrap(),
    ]);

    // The stream matches its own law.
    let ok = run(&["lln", "--dist", spec_s, "--in", stream.to_str().unwrap()]);
    assert_eq!(
        code(&ok),
        0,
        "stderr: {}",
        String::from_utf8_lossy(&ok.stderr)
    );
    let v = stdout_json(&ok);
    assert_eq!(v["pass"], true);

    // Against a wrong target the same stream fails.
    let wrong = write_file(
        dir.path(),
        "wrong.json",
        r#"{"family":"table","masses":[["0","3/4"],["1","1/4"]],"tail":"0"}"#,
    );
    let bad = run(&[
        "lln",
        "--dist",
        wrong.to_str().unwrap(),
        "--in",
        stream.to_str().unwrap(),
    ]);
    assert_eq!(code(&bad), 1);
    let v = stdout_json(&bad);
    assert_eq!(v["pass"], false);
}

#[test]
fn lln_needs_exactly_one_source() {
    let dir = TempDir::new().unwrap();
    let spec = geom_spec(dir.path());
    let spec_s = spec.to_str().unwrap();

    let neither = run(&["lln", "--dist", spec_s]);
    assert_eq!(code(&neither), 2);

    let f = dir.path().join("stream.txt");
    run(&[
        "gen",
        spec_s,
        "--seed",
        "11",
        "--n",
        "100",
        "--out",
        f.to_str().unwrap(),
    ]);
    let both = run(&[
        "lln",
        "--dist",
        spec_s,
        "--in",
        f.to_str().unwrap(),
        "--seed",
        "11",
    ]);
    assert_eq!(code(&both), 2);
}

#[test]
fn lln_samples_with_a_seed() {
    let dir = TempDir::new().unwrap();
    let spec = geom_spec(dir.path());
    let out = run(&[
        "lln",
        "--dist",
        spec.to_str().unwrap(),
        "--seed",
        "5",
        "--n",
        "30000",
    ]);
    assert_eq!(code(&out), 0);
    let v = stdout_json(&out);
    assert_eq!(v["pass"], true);
    assert_eq!(v["n"], 30000);
}

// ==================================================================
// independence
// ==================================================================

#[test]
fn independence_separates_fresh_from_duplicated_seeds() {
    let dir = TempDir::new().unwrap();
    let spec = geom_spec(dir.path());
    let spec_s = spec.to_str().unwrap();

    let fresh = run(&[
        "independence",
        "--dist",
        spec_s,
        "--seeds",
        "1,2",
        "--n",
        "100000",
        "--top",
        "2",
    ]);
    assert_eq!(
        code(&fresh),
        0,
        "stderr: {}",
        String::from_utf8_lossy(&fresh.stderr)
    );
    let v = stdout_json(&fresh);
    assert_eq!(v["pass"], true);

    let dup = run(&[
        "independence",
        "--dist",
        spec_s,
        "--seeds",
        "5,5",
        "--n",
        "100000",
        "--top",
        "2",
    ]);
    assert_eq!(code(&dup), 1, "a duplicated stream is maximally dependent");
    let v = stdout_json(&dup);
    assert_eq!(v["pass"], false);
}

#[test]
fn independence_needs_two_seeds() {
    let dir = TempDir::new().unwrap();
    let spec = geom_spec(dir.path());
    let out = run(&[
        "independence",
        "--dist",
        spec.to_str().unwrap(),
        "--seeds",
        "7",
    ]);
    assert_eq!(code(&out), 2);
}
